// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "lagm/checkpoint.hpp"
#include "lagm/corpus.hpp"
#include "lagm/nn.hpp"

#include <string_view>
#include <vector>

namespace lagm {

enum class Level { motion, action, specific };

std::string_view to_string(Level level);
Level level_from_string(std::string_view name);
/// Desk token counts: motion 2, action 4, specific 8.
int default_tokens(Level level);

struct LatentEmbedding {
    Level level = Level::motion;
    Matrix tokens;  // Q x D'
    bool operator==(const LatentEmbedding& o) const {
        return level == o.level && tokens.rows() == o.tokens.rows() && tokens.cols() == o.tokens.cols() &&
               tokens == o.tokens;
    }
};

struct Posterior {
    Level level = Level::motion;
    Matrix mean;    // Q x D'
    Matrix logvar;  // Q x D', clamped to [kLogvarMin, kLogvarMax]
};

inline constexpr double kLogvarMin = -30.0;
inline constexpr double kLogvarMax = 20.0;

struct VaeConfig {
    Level level = Level::motion;
    int tokens = 2;        // Q
    Index latent = 32;     // D'
    Index width = 64;
    int layers = 2;
    int heads = 4;
    Index ff_width = 128;
    int patch = 4;
    int max_frames = 240;
    double kl_weight = 1e-4;
    double smooth_l1_beta = 1.0;
    std::uint64_t seed = 1;

    static VaeConfig for_level(Level level);
    nlohmann::json to_json() const;
    static VaeConfig from_json(const nlohmann::json& j);
};

/// Transformer VAE: learnable query tokens plus frame patches in, Q latent
/// tokens out; the decoder's patch queries cross-attend to the latents.
class MotionVae {
public:
    static MotionVae create(const VaeConfig& config, FeatureStats stats);

    const VaeConfig& config() const { return config_; }
    Level level() const { return config_.level; }
    const FeatureStats& stats() const { return stats_; }
    ParameterSet& params() { return params_; }
    const ParameterSet& params() const { return params_; }

    struct EncodedVars {
        Var mean;
        Var logvar;
    };
    /// Encodes raw (unnormalized) frames.
    EncodedVars encode(const nn::Scope& s, const Matrix& frames) const;
    /// Normalized-feature reconstruction with `length` rows.
    Var decode(const nn::Scope& s, Var z, Index length) const;

    Posterior encode(const MotionSequence& motion, Precision precision = Precision::f64) const;
    /// Raw features with contact columns snapped to {0, 1}.
    MotionSequence decode(const LatentEmbedding& z, Index length, Precision precision = Precision::f64) const;
    /// Mean smooth-L1 between normalized input and the reconstruction from the posterior mean.
    double reconstruction_error(const MotionSequence& motion, Precision precision = Precision::f64) const;

    Checkpoint to_checkpoint() const;
    static MotionVae from_checkpoint(const Checkpoint& ckpt);

private:
    void build(std::mt19937_64& rng);

    VaeConfig config_;
    FeatureStats stats_;
    ParameterSet params_;
    ParamId queries_ = -1;
    ParamId latent_pos_ = -1;
    ParamId decoder_query_ = -1;
    nn::Linear patch_in_;
    nn::TransformerStack encoder_;
    nn::Linear mean_head_, logvar_head_;
    nn::Linear latent_in_;
    nn::TransformerStack decoder_;
    nn::Linear patch_out_;
};

/// mean + exp(logvar / 2) * N(0, I) drawn from `seed`.
LatentEmbedding sample_latent(const Posterior& posterior, std::uint64_t seed);

/// Smooth-L1 reconstruction plus weighted KL for one motion and fixed unit noise.
Var vae_loss(const nn::Scope& s, const MotionVae& vae, const Matrix& frames, const Matrix& noise);

struct VaeTrainConfig {
    int epochs = 40;
    int batch_size = 16;
    AdamWConfig optimizer{};
    Precision precision = Precision::f64;
    std::uint64_t seed = 1;
};

struct VaeTrainReport {
    std::vector<double> epoch_losses;
    std::vector<double> epoch_reconstruction;
    std::vector<double> epoch_kl;
    double final_reconstruction = 0.0;  // posterior-mean reconstruction over the corpus
};

struct TrainedVae {
    MotionVae vae;
    VaeTrainReport report;
};

TrainedVae train_vae(const std::vector<CorpusEntry>& corpus, const VaeConfig& config, const VaeTrainConfig& train);

}  // namespace lagm
