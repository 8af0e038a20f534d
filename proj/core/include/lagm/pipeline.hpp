// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "lagm/corpus.hpp"
#include "lagm/diffusion.hpp"
#include "lagm/embedding.hpp"
#include "lagm/graph_attention.hpp"
#include "lagm/motion_vae.hpp"

#include <array>
#include <filesystem>
#include <optional>

namespace lagm {

struct DiffusionConfig {
    Index node_width = 64;  // D, must match the embedder width
    Index width = 64;
    Index latent = 32;      // D'
    std::array<int, 3> tokens{2, 4, 8};
    int layers = 2;
    int heads = 4;
    Index ff_width = 128;
    int T = kDefaultDiffusionSteps;
    double beta_start = kDefaultBetaStart;
    double beta_end = kDefaultBetaEnd;
    std::uint64_t seed = 1;

    int tokens_for(Level level) const { return tokens[static_cast<std::size_t>(level)]; }
    nlohmann::json to_json() const;
    static DiffusionConfig from_json(const nlohmann::json& j);
};

/// Conditioning for one denoiser call. `nodes` holds GAT-updated node rows
/// for `graph`; `latent` is the previous level's latent (absent for the
/// motion level). A null condition ignores both.
struct LevelCondition {
    bool null = false;
    const SemanticGraph* graph = nullptr;
    std::optional<Var> nodes;
    std::optional<Var> latent;
};

class Denoiser {
public:
    static Denoiser create(ParameterSet& params, const std::string& name, Level level, const DiffusionConfig& config,
                           std::mt19937_64& rng);

    Level level() const { return level_; }
    /// Epsilon prediction with the shape of `z_t`.
    Var operator()(const nn::Scope& s, Var z_t, int t, const LevelCondition& condition, Var null_token) const;

private:
    enum TokenType { time_token, motion_node, action_node, specific_node, latent_token, noisy_token, null_type };

    Level level_ = Level::motion;
    int tokens_ = 0;
    int condition_tokens_ = 0;
    Index width_ = 0;
    ParamId types_ = -1;
    ParamId noisy_pos_ = -1;
    ParamId latent_pos_ = -1;
    nn::Linear time_in_, time_out_, node_in_, latent_in_, noisy_in_, out_;
    nn::TransformerStack stack_;
};

/// Shared GAT, null-condition token and the three level denoisers.
class DiffusionModel {
public:
    static DiffusionModel create(const DiffusionConfig& config);

    const DiffusionConfig& config() const { return config_; }
    const NoiseSchedule& schedule() const { return schedule_; }
    ParameterSet& params() { return params_; }
    const ParameterSet& params() const { return params_; }
    const GraphAttention& gat() const { return gat_; }
    const Denoiser& denoiser(Level level) const { return denoisers_[static_cast<std::size_t>(level)]; }

    /// Multiplier from VAE latents to unit-RMS diffusion space, per level.
    double latent_scale(Level level) const { return scales_[static_cast<std::size_t>(level)]; }
    void set_latent_scale(Level level, double scale);

    Var eps(const nn::Scope& s, Level level, Var z_t, int t, const LevelCondition& condition) const;

    Checkpoint to_checkpoint() const;
    static DiffusionModel from_checkpoint(const Checkpoint& ckpt);

private:
    DiffusionConfig config_;
    NoiseSchedule schedule_;
    ParameterSet params_;
    GraphAttention gat_;
    ParamId null_ = -1;
    std::array<Denoiser, 3> denoisers_;
    std::array<double, 3> scales_{1.0, 1.0, 1.0};
};

/// Matrix-level epsilon prediction on an initial node matrix; throws
/// InvalidArgument on a conditioning arity mismatch.
Matrix predict_eps(const DiffusionModel& model, Level level, const Matrix& z_t, int t, const SemanticGraph* graph,
                   const std::optional<Matrix>& initial_nodes, const std::optional<Matrix>& latent,
                   Precision precision = Precision::f64);

struct ModelBundle {
    Embedder embedder;
    MotionVae vae_motion;
    MotionVae vae_action;
    MotionVae vae_specific;
    DiffusionModel diffusion;

    const MotionVae& vae(Level level) const;
    /// embedder.ckpt, vae_{motion,action,specific}.ckpt, diffusion.ckpt.
    void save(const std::filesystem::path& dir) const;
    static ModelBundle load(const std::filesystem::path& dir);
};

/// Diffusion-space training targets for one corpus entry.
struct TrainingExample {
    SemanticGraph graph;
    Matrix nodes;                // initial node rows from the frozen embedder
    std::array<Matrix, 3> z0;    // scaled posterior means per level
};

/// Encodes every entry; sets each level's latent scale on `model` first.
std::vector<TrainingExample> prepare_examples(const std::vector<CorpusEntry>& corpus, const Embedder& embedder,
                                              const MotionVae& vae_motion, const MotionVae& vae_action,
                                              const MotionVae& vae_specific, DiffusionModel& model,
                                              Precision precision = Precision::f64);

struct LevelDraw {
    int t = 1;
    Matrix noise;
    bool drop = false;  // replace the full condition with the null token
};

struct DiffusionLoss {
    Var motion, action, specific, total;
};

/// Sum of the three epsilon-prediction losses with clean latents as conditioning.
DiffusionLoss diffusion_loss(const nn::Scope& s, const DiffusionModel& model, const TrainingExample& example,
                             const std::array<LevelDraw, 3>& draws);

struct DiffusionTrainConfig {
    int epochs = 400;
    int batch_size = 16;
    AdamWConfig optimizer{};
    double condition_dropout = 0.1;
    Precision precision = Precision::f64;
    std::uint64_t seed = 1;
};

struct DiffusionTrainReport {
    std::vector<double> epoch_losses;  // total per epoch
    std::array<std::vector<double>, 3> level_losses;
};

struct TrainedDiffusion {
    DiffusionModel model;
    DiffusionTrainReport report;
};

TrainedDiffusion train_diffusion(const std::vector<CorpusEntry>& corpus, const Embedder& embedder,
                                 const MotionVae& vae_motion, const MotionVae& vae_action,
                                 const MotionVae& vae_specific, const DiffusionConfig& config,
                                 const DiffusionTrainConfig& train);

struct SamplingPlan {
    std::array<int, 3> steps{50, 50, 50};
    double cfg_alpha = kDefaultCfgAlpha;
    double rho = 0.01;
    bool rho_decay = false;  // rho_t = rho * t / T
    std::optional<std::vector<double>> multipliers;
    GuidanceMode guidance_mode = GuidanceMode::scaled_reference;
    EnergyNorm energy_norm = EnergyNorm::squared;
    StepMode step_mode = StepMode::deterministic;
    std::uint64_t seed = 1;
    Index length = 0;         // 0 selects 50 frames per action within [40, 240]
    Index local_length = 50;  // frames decoded for local-action previews
    Precision precision = Precision::f64;

    void validate(int T) const;
    nlohmann::json to_json() const;
    static SamplingPlan from_json(const nlohmann::json& j);
};

struct SampleDiagnostics {
    std::vector<std::string> local_actions;
    std::vector<double> edge_coefficients;    // aligned with graph edges
    std::vector<double> motion_coefficients;  // per action
    std::vector<double> lambdas;              // empty when guidance is off
    std::vector<double> action_energy_trace;  // mean E(sqrt(abar_t) c, z_t) per action step
    std::vector<double> final_action_energy;  // E(c_k, z^a) per reference
    double mean_final_action_energy = 0.0;
    std::array<double, 3> latent_norms{};
    Index length = 0;

    nlohmann::json to_json() const;
};

struct SampleResult {
    MotionSequence motion;
    SemanticGraph graph;
    std::array<LatentEmbedding, 3> latents;  // raw VAE space
    std::vector<LatentEmbedding> references;
    SampleDiagnostics diagnostics;
};

/// Deduplicated local-action segments with their text features.
struct ExemplarBank {
    std::vector<std::string> descriptions;
    std::vector<MotionSequence> motions;
    Matrix text_features;
};

ExemplarBank build_exemplar_bank(const std::vector<CorpusEntry>& corpus, const Embedder& embedder,
                                 Precision precision = Precision::f64);

struct Exemplar {
    std::size_t index = 0;
    std::string description;
    double similarity = 0.0;
    MotionSequence motion;
    LatentEmbedding latent;
};

/// Nearest bank entry by text-feature cosine; throws InvalidArgument with
/// code "oov_query" when no token is in the vocabulary.
Exemplar retrieve_exemplar(std::string_view description, const ExemplarBank& bank, const ModelBundle& models,
                           Precision precision = Precision::f64);

struct LocalActionSample {
    MotionSequence motion;
    LatentEmbedding latent;  // action level
};

/// Stages one and two without guidance, decoded by the action-level VAE.
LocalActionSample sample_local_action(std::string_view description, const SamplingPlan& plan,
                                      const ModelBundle& models);

/// Three-stage sampling. References come from `references` when given, else
/// from `bank` by retrieval, else from sample_local_action. Guidance is off
/// when rho = 0, and then no references are required.
SampleResult sample(std::string_view description, const SamplingPlan& plan, const ModelBundle& models,
                    const std::optional<std::vector<LatentEmbedding>>& references = std::nullopt,
                    const ExemplarBank* bank = nullptr);

}  // namespace lagm
