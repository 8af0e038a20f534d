// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lagm/pipeline.hpp"

#include "lagm/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lagm {

namespace {

constexpr std::array<Level, 3> kLevels{Level::motion, Level::action, Level::specific};

std::size_t idx(Level level) { return static_cast<std::size_t>(level); }

std::vector<Index> as_index(const std::vector<int>& v) { return {v.begin(), v.end()}; }

Matrix standard_normal(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    return m;
}

std::string_view to_string(EnergyNorm norm) { return norm == EnergyNorm::squared ? "squared" : "plain"; }

EnergyNorm energy_norm_from_string(std::string_view name) {
    if (name == "squared") return EnergyNorm::squared;
    if (name == "plain") return EnergyNorm::plain;
    throw InvalidArgument("unknown energy norm: " + std::string(name));
}

}  // namespace

// ---------------------------------------------------------------- config

nlohmann::json DiffusionConfig::to_json() const {
    return {{"node_width", node_width}, {"width", width},     {"latent", latent},         {"tokens", tokens},
            {"layers", layers},         {"heads", heads},     {"ff_width", ff_width},     {"T", T},
            {"beta_start", beta_start}, {"beta_end", beta_end}, {"seed", seed}};
}

DiffusionConfig DiffusionConfig::from_json(const nlohmann::json& j) {
    DiffusionConfig c;
    c.node_width = j.value("node_width", c.node_width);
    c.width = j.value("width", c.width);
    c.latent = j.value("latent", c.latent);
    c.tokens = j.value("tokens", c.tokens);
    c.layers = j.value("layers", c.layers);
    c.heads = j.value("heads", c.heads);
    c.ff_width = j.value("ff_width", c.ff_width);
    c.T = j.value("T", c.T);
    c.beta_start = j.value("beta_start", c.beta_start);
    c.beta_end = j.value("beta_end", c.beta_end);
    c.seed = j.value("seed", c.seed);
    return c;
}

// ---------------------------------------------------------------- denoiser

Denoiser Denoiser::create(ParameterSet& params, const std::string& name, Level level, const DiffusionConfig& config,
                          std::mt19937_64& rng) {
    Denoiser d;
    d.level_ = level;
    d.tokens_ = config.tokens_for(level);
    d.condition_tokens_ = level == Level::motion ? 0 : config.tokens[idx(level) - 1];
    d.width_ = config.width;
    const Index w = config.width;
    d.types_ = params.add(name + ".types", gaussian(7, w, 0.1, rng));
    d.noisy_pos_ = params.add(name + ".noisy_pos", gaussian(d.tokens_, w, 0.1, rng));
    d.time_in_ = nn::Linear::create(params, name + ".time_in", w, w, rng);
    d.time_out_ = nn::Linear::create(params, name + ".time_out", w, w, rng);
    d.node_in_ = nn::Linear::create(params, name + ".node_in", config.node_width, w, rng);
    if (d.condition_tokens_ > 0) {
        d.latent_pos_ = params.add(name + ".latent_pos", gaussian(d.condition_tokens_, w, 0.1, rng));
        d.latent_in_ = nn::Linear::create(params, name + ".latent_in", config.latent, w, rng);
    }
    d.noisy_in_ = nn::Linear::create(params, name + ".noisy_in", config.latent, w, rng);
    d.stack_ = nn::TransformerStack::create(params, name, config.layers, w, config.heads, config.ff_width, false, rng);
    d.out_ = nn::Linear::create(params, name + ".out", w, config.latent, rng);
    return d;
}

Var Denoiser::operator()(const nn::Scope& s, Var z_t, int t, const LevelCondition& condition, Var null_token) const {
    LAGM_CHECK(z_t.rows() == tokens_ && z_t.cols() == noisy_in_.in, "noisy latent shape does not match the level");
    const Var types = s.p(types_);
    auto typed = [&](Var x, int type) { return ag::add_row(x, ag::slice_rows(types, type, 1)); };

    std::vector<Var> parts;
    Var time = time_out_(s, ag::gelu(time_in_(s, s.constant(nn::sinusoidal_row(t, width_)))));
    parts.push_back(typed(time, time_token));
    if (condition.null) {
        parts.push_back(typed(node_in_(s, null_token), null_type));
    } else {
        if (condition.graph == nullptr || !condition.nodes) throw InvalidArgument("condition needs graph nodes");
        const SemanticGraph& g = *condition.graph;
        const Var nodes = *condition.nodes;
        LAGM_CHECK(nodes.rows() == static_cast<Index>(g.nodes.size()), "node rows do not match the graph");
        parts.push_back(typed(node_in_(s, ag::slice_rows(nodes, g.motion_node(), 1)), motion_node));
        if (level_ != Level::motion) {
            const auto actions = as_index(g.action_nodes());
            parts.push_back(typed(node_in_(s, ag::gather_rows(nodes, actions)), action_node));
        }
        if (level_ == Level::specific) {
            const auto specifics = as_index(g.specific_nodes());
            if (!specifics.empty())
                parts.push_back(typed(node_in_(s, ag::gather_rows(nodes, specifics)), specific_node));
        }
        if (condition_tokens_ == 0) {
            if (condition.latent) throw InvalidArgument("the motion level takes no latent conditioning");
        } else {
            if (!condition.latent) throw InvalidArgument("latent conditioning is required at this level");
            const Var lat = *condition.latent;
            if (lat.rows() != condition_tokens_ || lat.cols() != latent_in_.in)
                throw InvalidArgument("latent conditioning has the wrong shape");
            parts.push_back(typed(ag::add(latent_in_(s, lat), s.p(latent_pos_)), latent_token));
        }
    }
    parts.push_back(typed(ag::add(noisy_in_(s, z_t), s.p(noisy_pos_)), noisy_token));
    Var x = stack_(s, ag::concat_rows(parts));
    return out_(s, ag::slice_rows(x, x.rows() - tokens_, tokens_));
}

// ---------------------------------------------------------------- model

DiffusionModel DiffusionModel::create(const DiffusionConfig& config) {
    LAGM_CHECK(config.node_width >= 1 && config.width >= 1 && config.latent >= 1, "invalid diffusion widths");
    LAGM_CHECK(config.heads >= 1 && config.width % config.heads == 0, "width must be divisible by heads");
    LAGM_CHECK(config.layers >= 1, "denoisers need at least one layer");
    LAGM_CHECK(config.tokens[0] >= 1 && config.tokens[0] <= config.tokens[1] && config.tokens[1] <= config.tokens[2],
               "token counts must be positive and non-decreasing");
    DiffusionModel m;
    m.config_ = config;
    m.schedule_ = make_schedule(config.T, config.beta_start, config.beta_end);
    std::mt19937_64 rng(config.seed);
    m.gat_ = GraphAttention::create(m.params_, "gat", config.node_width, rng);
    m.null_ = m.params_.add("null", gaussian(1, config.node_width, 0.1, rng));
    for (Level l : kLevels)
        m.denoisers_[idx(l)] = Denoiser::create(m.params_, "den." + std::string(to_string(l)), l, config, rng);
    return m;
}

void DiffusionModel::set_latent_scale(Level level, double scale) {
    LAGM_CHECK(std::isfinite(scale) && scale > 0.0, "latent scale must be positive");
    scales_[idx(level)] = scale;
}

Var DiffusionModel::eps(const nn::Scope& s, Level level, Var z_t, int t, const LevelCondition& condition) const {
    LAGM_CHECK(t >= 1 && t <= config_.T, "timestep outside [1, T]");
    return denoisers_[idx(level)](s, z_t, t, condition, s.p(null_));
}

Checkpoint DiffusionModel::to_checkpoint() const {
    Checkpoint c;
    c.kind = "diffusion";
    c.config = {{"diffusion", config_.to_json()}};
    Matrix scales(1, 3);
    scales << scales_[0], scales_[1], scales_[2];
    c.add("latent_scale", scales);
    c.add_parameters(params_);
    return c;
}

DiffusionModel DiffusionModel::from_checkpoint(const Checkpoint& ckpt) {
    LAGM_CHECK(ckpt.kind == "diffusion", "checkpoint does not hold diffusion models");
    DiffusionModel m = create(DiffusionConfig::from_json(ckpt.config.at("diffusion")));
    ckpt.load_parameters(m.params_);
    const Matrix& scales = ckpt.tensor("latent_scale");
    LAGM_CHECK(scales.rows() == 1 && scales.cols() == 3, "latent scale tensor has the wrong shape");
    for (Level l : kLevels) m.set_latent_scale(l, scales(0, static_cast<Index>(idx(l))));
    return m;
}

Matrix predict_eps(const DiffusionModel& model, Level level, const Matrix& z_t, int t, const SemanticGraph* graph,
                   const std::optional<Matrix>& initial_nodes, const std::optional<Matrix>& latent,
                   Precision precision) {
    Tape tape(precision);
    nn::Scope s{tape, model.params()};
    LevelCondition c;
    c.null = graph == nullptr;
    c.graph = graph;
    if (graph != nullptr) {
        if (!initial_nodes) throw InvalidArgument("graph conditioning needs node features");
        c.nodes = model.gat()(s, s.constant(*initial_nodes), *graph).updated;
    }
    if (latent) c.latent = s.constant(*latent);
    return model.eps(s, level, s.constant(z_t), t, c).value();
}

// ---------------------------------------------------------------- bundle

const MotionVae& ModelBundle::vae(Level level) const {
    switch (level) {
        case Level::motion: return vae_motion;
        case Level::action: return vae_action;
        case Level::specific: return vae_specific;
    }
    return vae_motion;
}

void ModelBundle::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    save_checkpoint(embedder.to_checkpoint(), dir / "embedder.ckpt");
    save_checkpoint(vae_motion.to_checkpoint(), dir / "vae_motion.ckpt");
    save_checkpoint(vae_action.to_checkpoint(), dir / "vae_action.ckpt");
    save_checkpoint(vae_specific.to_checkpoint(), dir / "vae_specific.ckpt");
    save_checkpoint(diffusion.to_checkpoint(), dir / "diffusion.ckpt");
}

ModelBundle ModelBundle::load(const std::filesystem::path& dir) {
    ModelBundle b{Embedder::from_checkpoint(load_checkpoint(dir / "embedder.ckpt")),
                  MotionVae::from_checkpoint(load_checkpoint(dir / "vae_motion.ckpt")),
                  MotionVae::from_checkpoint(load_checkpoint(dir / "vae_action.ckpt")),
                  MotionVae::from_checkpoint(load_checkpoint(dir / "vae_specific.ckpt")),
                  DiffusionModel::from_checkpoint(load_checkpoint(dir / "diffusion.ckpt"))};
    for (Level l : kLevels) {
        const auto& vc = b.vae(l).config();
        if (vc.level != l || vc.tokens != b.diffusion.config().tokens_for(l) || vc.latent != b.diffusion.config().latent)
            throw InvalidArgument("VAE checkpoint does not match the diffusion configuration");
    }
    if (b.embedder.config().width != b.diffusion.config().node_width)
        throw InvalidArgument("embedder width does not match the diffusion node width");
    return b;
}

// ---------------------------------------------------------------- training

std::vector<TrainingExample> prepare_examples(const std::vector<CorpusEntry>& corpus, const Embedder& embedder,
                                              const MotionVae& vae_motion, const MotionVae& vae_action,
                                              const MotionVae& vae_specific, DiffusionModel& model,
                                              Precision precision) {
    LAGM_CHECK(!corpus.empty(), "training corpus is empty");
    const std::array<const MotionVae*, 3> vaes{&vae_motion, &vae_action, &vae_specific};
    for (Level l : kLevels) {
        const auto& vc = vaes[idx(l)]->config();
        LAGM_CHECK(vc.level == l && vc.tokens == model.config().tokens_for(l) && vc.latent == model.config().latent,
                   "VAE does not match the diffusion configuration");
    }
    LAGM_CHECK(embedder.config().width == model.config().node_width, "embedder width does not match node width");

    std::vector<TrainingExample> out(corpus.size());
    std::array<double, 3> sq{};
    std::array<double, 3> count{};
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& e = corpus[i];
        out[i].graph = parse(e.description);
        out[i].nodes = embedder.init_graph_nodes(out[i].graph, e.description, precision);
        for (Level l : kLevels) {
            Matrix mean = vaes[idx(l)]->encode(e.motion, precision).mean;
            sq[idx(l)] += mean.squaredNorm();
            count[idx(l)] += static_cast<double>(mean.size());
            out[i].z0[idx(l)] = std::move(mean);
        }
    }
    for (Level l : kLevels) {
        const double rms = std::sqrt(sq[idx(l)] / count[idx(l)]);
        model.set_latent_scale(l, rms > 0.0 ? 1.0 / rms : 1.0);
        for (auto& ex : out) {
            ex.z0[idx(l)] *= model.latent_scale(l);
            round_to(precision, ex.z0[idx(l)]);
        }
    }
    return out;
}

DiffusionLoss diffusion_loss(const nn::Scope& s, const DiffusionModel& model, const TrainingExample& example,
                             const std::array<LevelDraw, 3>& draws) {
    const Var nodes = model.gat()(s, s.constant(example.nodes), example.graph).updated;
    std::array<Var, 3> losses;
    for (Level l : kLevels) {
        const auto& d = draws[idx(l)];
        const Matrix z_t = q_sample(example.z0[idx(l)], d.t, d.noise, model.schedule());
        LevelCondition c;
        c.null = d.drop;
        c.graph = &example.graph;
        c.nodes = nodes;
        if (l != Level::motion) c.latent = s.constant(example.z0[idx(l) - 1]);
        const Var pred = model.eps(s, l, s.constant(z_t), d.t, c);
        losses[idx(l)] = ag::mse(pred, s.constant(d.noise));
    }
    return {losses[0], losses[1], losses[2], ag::add(ag::add(losses[0], losses[1]), losses[2])};
}

TrainedDiffusion train_diffusion(const std::vector<CorpusEntry>& corpus, const Embedder& embedder,
                                 const MotionVae& vae_motion, const MotionVae& vae_action,
                                 const MotionVae& vae_specific, const DiffusionConfig& config,
                                 const DiffusionTrainConfig& train) {
    LAGM_CHECK(train.epochs >= 0 && train.batch_size >= 1, "invalid diffusion training configuration");
    LAGM_CHECK(train.condition_dropout >= 0.0 && train.condition_dropout <= 1.0, "dropout must lie in [0, 1]");
    TrainedDiffusion out{DiffusionModel::create(config), {}};
    DiffusionModel& model = out.model;
    const auto examples =
        prepare_examples(corpus, embedder, vae_motion, vae_action, vae_specific, model, train.precision);
    AdamW opt(model.params(), train.optimizer);
    std::mt19937_64 rng(stream_seed(train.seed, 0xD1FFull));
    std::uniform_int_distribution<int> timestep(1, config.T);
    std::bernoulli_distribution drop(train.condition_dropout);
    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (int epoch = 0; epoch < train.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double total_sum = 0.0;
        std::array<double, 3> level_sum{};
        for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(train.batch_size)) {
            const std::size_t end = std::min(order.size(), b + static_cast<std::size_t>(train.batch_size));
            Tape tape(train.precision);
            nn::Scope s{tape, model.params()};
            std::vector<Var> totals;
            for (std::size_t k = b; k < end; ++k) {
                std::array<LevelDraw, 3> draws;
                for (Level l : kLevels) {
                    draws[idx(l)].t = timestep(rng);
                    draws[idx(l)].noise = standard_normal(config.tokens_for(l), config.latent, rng);
                    draws[idx(l)].drop = drop(rng);
                }
                const auto loss = diffusion_loss(s, model, examples[order[k]], draws);
                level_sum[0] += loss.motion.scalar();
                level_sum[1] += loss.action.scalar();
                level_sum[2] += loss.specific.scalar();
                totals.push_back(loss.total);
            }
            const Var total = ag::scale(ag::sum(ag::concat_rows(totals)), 1.0 / static_cast<double>(totals.size()));
            if (!std::isfinite(total.scalar())) throw NumericError("diffusion loss diverged");
            total_sum += total.scalar() * static_cast<double>(totals.size());
            GradientSet grads(model.params());
            tape.backward(total, &grads);
            opt.step(model.params(), std::move(grads));
        }
        const double n = static_cast<double>(examples.size());
        out.report.epoch_losses.push_back(total_sum / n);
        for (Level l : kLevels) out.report.level_losses[idx(l)].push_back(level_sum[idx(l)] / n);
    }
    return out;
}

// ---------------------------------------------------------------- plan

void SamplingPlan::validate(int T) const {
    for (int s : steps)
        if (s < 1 || s > T) throw InvalidArgument("step counts must lie in [1, T]");
    if (!std::isfinite(cfg_alpha)) throw InvalidArgument("cfg alpha must be finite");
    if (!(rho >= 0.0) || !std::isfinite(rho)) throw InvalidArgument("rho must be finite and non-negative");
    if (multipliers)
        for (double m : *multipliers)
            if (!(m >= 0.0) || !std::isfinite(m)) throw InvalidArgument("weight multipliers must be non-negative");
    if (length < 0) throw InvalidArgument("length must be non-negative");
    if (local_length < 1) throw InvalidArgument("local length must be positive");
}

nlohmann::json SamplingPlan::to_json() const {
    nlohmann::json j = {{"steps", steps},
                        {"cfg_alpha", cfg_alpha},
                        {"rho", rho},
                        {"rho_decay", rho_decay},
                        {"multipliers", nullptr},
                        {"guidance_mode", to_string(guidance_mode)},
                        {"energy_norm", to_string(energy_norm)},
                        {"step_mode", to_string(step_mode)},
                        {"seed", seed},
                        {"length", length},
                        {"local_length", local_length},
                        {"precision", precision_bits(precision)}};
    if (multipliers) j["multipliers"] = *multipliers;
    return j;
}

SamplingPlan SamplingPlan::from_json(const nlohmann::json& j) {
    LAGM_CHECK(j.is_object(), "sampling plan must be a JSON object");
    SamplingPlan p;
    p.steps = j.value("steps", p.steps);
    p.cfg_alpha = j.value("cfg_alpha", p.cfg_alpha);
    p.rho = j.value("rho", p.rho);
    p.rho_decay = j.value("rho_decay", p.rho_decay);
    if (j.contains("multipliers") && !j.at("multipliers").is_null())
        p.multipliers = j.at("multipliers").get<std::vector<double>>();
    if (j.contains("guidance_mode"))
        p.guidance_mode = guidance_mode_from_string(j.at("guidance_mode").get<std::string>());
    if (j.contains("energy_norm")) p.energy_norm = energy_norm_from_string(j.at("energy_norm").get<std::string>());
    if (j.contains("step_mode")) p.step_mode = step_mode_from_string(j.at("step_mode").get<std::string>());
    p.seed = j.value("seed", p.seed);
    p.length = j.value("length", p.length);
    p.local_length = j.value("local_length", p.local_length);
    p.precision = precision_from_bits(j.value("precision", 64));
    return p;
}

nlohmann::json SampleDiagnostics::to_json() const {
    return {{"local_actions", local_actions},
            {"edge_coefficients", edge_coefficients},
            {"motion_coefficients", motion_coefficients},
            {"lambdas", lambdas},
            {"action_energy_trace", action_energy_trace},
            {"final_action_energy", final_action_energy},
            {"mean_final_action_energy", mean_final_action_energy},
            {"latent_norms", latent_norms},
            {"length", length}};
}

// ---------------------------------------------------------------- sampling

namespace {

struct StageGuidance {
    std::vector<Matrix> references;  // diffusion space
    std::vector<double> coefficients;
    double latent_scale = 1.0;
};

/// Runs one level's reverse process from fresh Gaussian noise.
Matrix run_stage(const DiffusionModel& model, Level level, const SemanticGraph& graph, const Matrix& nodes,
                 const std::optional<Matrix>& latent, const SamplingPlan& plan, const StageGuidance* guidance,
                 SampleDiagnostics* diag) {
    const auto& sched = model.schedule();
    std::mt19937_64 rng(stream_seed(plan.seed, static_cast<std::uint64_t>(idx(level))));
    const Index q = model.config().tokens_for(level);
    Matrix z = standard_normal(q, model.config().latent, rng);
    round_to(plan.precision, z);
    const auto grid = timestep_grid(sched, plan.steps[idx(level)]);
    const bool guided = guidance != nullptr && plan.rho > 0.0 && !guidance->references.empty();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const int t = grid[i];
        const int prev = i + 1 < grid.size() ? grid[i + 1] : 0;
        Tape tape(plan.precision);
        nn::Scope s{tape, model.params()};
        LevelCondition cond;
        cond.graph = &graph;
        cond.nodes = s.constant(nodes);
        if (latent) cond.latent = s.constant(*latent);
        const Var zt = s.constant(z);
        Matrix eps = model.eps(s, level, zt, t, cond).value();
        if (plan.cfg_alpha != 1.0) {
            LevelCondition null_cond;
            null_cond.null = true;
            eps = cfg_combine(eps, model.eps(s, level, zt, t, null_cond).value(), plan.cfg_alpha);
        }
        const Matrix noise = plan.step_mode == StepMode::ancestral
                                 ? standard_normal(q, model.config().latent, rng)
                                 : Matrix::Zero(q, model.config().latent);
        if (guidance != nullptr && !guidance->references.empty() && diag != nullptr) {
            const double sab = std::sqrt(sched.alpha_bar(t));
            double e = 0.0;
            for (const auto& c : guidance->references) e += energy(sab * c, z, plan.energy_norm);
            const double unit = plan.energy_norm == EnergyNorm::squared
                                    ? guidance->latent_scale * guidance->latent_scale
                                    : guidance->latent_scale;
            diag->action_energy_trace.push_back(e / static_cast<double>(guidance->references.size()) / unit);
        }
        if (guided) {
            const double rho_t = plan.rho_decay ? plan.rho * t / static_cast<double>(sched.T) : plan.rho;
            GuidanceSpec spec;
            spec.references = guidance->references;
            spec.weights = guiding_weights(guidance->coefficients, rho_t, plan.multipliers);
            spec.mode = plan.guidance_mode;
            spec.norm = plan.energy_norm;
            if (diag != nullptr && diag->lambdas.empty()) diag->lambdas = spec.weights;
            z = guided_step(z, eps, t, prev, sched, spec, plan.step_mode, noise);
        } else {
            z = reverse_step(z, eps, t, prev, sched, plan.step_mode, noise);
        }
        round_to(plan.precision, z);
        if (!z.allFinite()) throw NumericError("sampling produced non-finite latents");
    }
    return z;
}

struct ParsedPrompt {
    SemanticGraph graph;
    AttentionResult attention;
};

ParsedPrompt prepare_prompt(std::string_view description, const ModelBundle& models, Precision precision) {
    ParsedPrompt p;
    p.graph = parse(description);
    const Matrix init = models.embedder.init_graph_nodes(p.graph, description, precision);
    p.attention = run_attention(models.diffusion.params(), models.diffusion.gat(), init, p.graph, precision);
    return p;
}

}  // namespace

ExemplarBank build_exemplar_bank(const std::vector<CorpusEntry>& corpus, const Embedder& embedder,
                                 Precision precision) {
    ExemplarBank bank;
    for (const auto& e : corpus)
        for (const auto& seg : e.local_actions) {
            if (std::find(bank.descriptions.begin(), bank.descriptions.end(), seg.description) !=
                bank.descriptions.end())
                continue;
            bank.descriptions.push_back(seg.description);
            bank.motions.push_back(seg.motion);
        }
    if (bank.descriptions.empty()) throw InvalidArgument("exemplar corpus is empty");
    bank.text_features = embedder.text_features(bank.descriptions, precision);
    return bank;
}

Exemplar retrieve_exemplar(std::string_view description, const ExemplarBank& bank, const ModelBundle& models,
                           Precision precision) {
    if (bank.descriptions.empty()) throw InvalidArgument("exemplar bank is empty");
    const auto ids = models.embedder.token_ids(description);
    if (std::all_of(ids.begin(), ids.end(), [](Index id) { return id == Vocabulary::kOov; }))
        throw InvalidArgument("oov_query", "query has no in-vocabulary tokens");
    const RowVector q = models.embedder.text_features(description, precision);
    const Eigen::VectorXd sims = bank.text_features * q.transpose();
    Index best = 0;
    for (Index i = 1; i < sims.size(); ++i)
        if (sims(i) > sims(best)) best = i;
    Exemplar ex;
    ex.index = static_cast<std::size_t>(best);
    ex.description = bank.descriptions[ex.index];
    ex.similarity = sims(best);
    ex.motion = bank.motions[ex.index];
    ex.latent = {Level::action, models.vae_action.encode(ex.motion, precision).mean};
    return ex;
}

LocalActionSample sample_local_action(std::string_view description, const SamplingPlan& plan,
                                      const ModelBundle& models) {
    const auto& dm = models.diffusion;
    plan.validate(dm.config().T);
    LAGM_CHECK(plan.local_length <= models.vae_action.config().max_frames, "local length exceeds VAE bounds");
    const auto prompt = prepare_prompt(description, models, plan.precision);
    const Matrix& nodes = prompt.attention.updated;
    const Matrix zm = run_stage(dm, Level::motion, prompt.graph, nodes, std::nullopt, plan, nullptr, nullptr);
    const Matrix za = run_stage(dm, Level::action, prompt.graph, nodes, zm, plan, nullptr, nullptr);
    LocalActionSample out;
    out.latent = {Level::action, za / dm.latent_scale(Level::action)};
    out.motion = models.vae_action.decode(out.latent, plan.local_length, plan.precision);
    return out;
}

SampleResult sample(std::string_view description, const SamplingPlan& plan, const ModelBundle& models,
                    const std::optional<std::vector<LatentEmbedding>>& references, const ExemplarBank* bank) {
    const auto& dm = models.diffusion;
    plan.validate(dm.config().T);
    SampleResult out;
    const auto prompt = prepare_prompt(description, models, plan.precision);
    out.graph = prompt.graph;
    auto& diag = out.diagnostics;
    diag.local_actions = local_action_descriptions(out.graph);
    diag.edge_coefficients = prompt.attention.coefficients;
    diag.motion_coefficients = motion_coefficients(prompt.attention.coefficients, out.graph);
    const std::size_t k = diag.local_actions.size();
    if (plan.multipliers && plan.multipliers->size() != k)
        throw InvalidArgument("expected one weight multiplier per action");

    const Index max_frames = models.vae_specific.config().max_frames;
    diag.length = plan.length > 0 ? plan.length : std::clamp<Index>(50 * static_cast<Index>(k), 40, max_frames);
    LAGM_CHECK(diag.length <= max_frames, "requested length exceeds the VAE bounds");

    if (references) {
        if (references->size() != k) throw InvalidArgument("expected one reference per action");
        for (const auto& r : *references)
            if (r.level != Level::action || r.tokens.rows() != dm.config().tokens_for(Level::action) ||
                r.tokens.cols() != dm.config().latent)
                throw InvalidArgument("references must be action-level latents");
        out.references = *references;
    } else if (plan.rho > 0.0) {
        for (std::size_t a = 0; a < k; ++a) {
            if (bank != nullptr) {
                out.references.push_back(retrieve_exemplar(diag.local_actions[a], *bank, models, plan.precision).latent);
            } else {
                SamplingPlan local = plan;
                local.seed = stream_seed(plan.seed, 1000 + a);
                local.multipliers.reset();
                out.references.push_back(sample_local_action(diag.local_actions[a], local, models).latent);
            }
        }
    }

    StageGuidance guidance;
    guidance.coefficients = diag.motion_coefficients;
    guidance.latent_scale = dm.latent_scale(Level::action);
    for (const auto& r : out.references) guidance.references.push_back(r.tokens * guidance.latent_scale);

    const Matrix& nodes = prompt.attention.updated;
    const Matrix zm = run_stage(dm, Level::motion, out.graph, nodes, std::nullopt, plan, nullptr, &diag);
    const Matrix za = run_stage(dm, Level::action, out.graph, nodes, zm, plan, &guidance, &diag);
    const Matrix zs = run_stage(dm, Level::specific, out.graph, nodes, za, plan, nullptr, &diag);

    const std::array<const Matrix*, 3> scaled{&zm, &za, &zs};
    for (Level l : kLevels) {
        out.latents[idx(l)] = {l, *scaled[idx(l)] / dm.latent_scale(l)};
        diag.latent_norms[idx(l)] = out.latents[idx(l)].tokens.norm();
    }
    for (const auto& r : out.references)
        diag.final_action_energy.push_back(energy(r.tokens, out.latents[idx(Level::action)].tokens, plan.energy_norm));
    if (!diag.final_action_energy.empty())
        diag.mean_final_action_energy =
            std::accumulate(diag.final_action_energy.begin(), diag.final_action_energy.end(), 0.0) /
            static_cast<double>(diag.final_action_energy.size());
    out.motion = models.vae_specific.decode(out.latents[idx(Level::specific)], diag.length, plan.precision);
    return out;
}

}  // namespace lagm
