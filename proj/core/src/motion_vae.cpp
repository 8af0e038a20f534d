// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lagm/motion_vae.hpp"

#include "lagm/error.hpp"

#include <algorithm>
#include <numeric>

namespace lagm {

std::string_view to_string(Level level) {
    switch (level) {
        case Level::motion: return "motion";
        case Level::action: return "action";
        case Level::specific: return "specific";
    }
    return "motion";
}

Level level_from_string(std::string_view name) {
    if (name == "motion" || name == "m") return Level::motion;
    if (name == "action" || name == "a") return Level::action;
    if (name == "specific" || name == "s") return Level::specific;
    throw InvalidArgument("unknown level: " + std::string(name));
}

int default_tokens(Level level) {
    switch (level) {
        case Level::motion: return 2;
        case Level::action: return 4;
        case Level::specific: return 8;
    }
    return 2;
}

VaeConfig VaeConfig::for_level(Level level) {
    VaeConfig c;
    c.level = level;
    c.tokens = default_tokens(level);
    return c;
}

nlohmann::json VaeConfig::to_json() const {
    return {{"level", to_string(level)}, {"tokens", tokens},     {"latent", latent},
            {"width", width},            {"layers", layers},     {"heads", heads},
            {"ff_width", ff_width},      {"patch", patch},       {"max_frames", max_frames},
            {"kl_weight", kl_weight},    {"smooth_l1_beta", smooth_l1_beta}, {"seed", seed}};
}

VaeConfig VaeConfig::from_json(const nlohmann::json& j) {
    VaeConfig c = for_level(level_from_string(j.at("level").get<std::string>()));
    c.tokens = j.value("tokens", c.tokens);
    c.latent = j.value("latent", c.latent);
    c.width = j.value("width", c.width);
    c.layers = j.value("layers", c.layers);
    c.heads = j.value("heads", c.heads);
    c.ff_width = j.value("ff_width", c.ff_width);
    c.patch = j.value("patch", c.patch);
    c.max_frames = j.value("max_frames", c.max_frames);
    c.kl_weight = j.value("kl_weight", c.kl_weight);
    c.smooth_l1_beta = j.value("smooth_l1_beta", c.smooth_l1_beta);
    c.seed = j.value("seed", c.seed);
    return c;
}

MotionVae MotionVae::create(const VaeConfig& config, FeatureStats stats) {
    LAGM_CHECK(config.tokens >= 1 && config.latent >= 1 && config.width >= 1, "invalid VAE sizes");
    LAGM_CHECK(config.heads >= 1 && config.width % config.heads == 0, "width must be divisible by heads");
    LAGM_CHECK(config.patch >= 1 && config.max_frames >= 1 && config.layers >= 1, "invalid VAE limits");
    LAGM_CHECK(config.kl_weight >= 0.0, "KL weight must be non-negative");
    LAGM_CHECK(stats.mean.size() > 0, "VAE needs fitted feature statistics");
    MotionVae v;
    v.config_ = config;
    v.stats_ = std::move(stats);
    std::mt19937_64 rng(config.seed);
    v.build(rng);
    return v;
}

void MotionVae::build(std::mt19937_64& rng) {
    const Index w = config_.width;
    const Index feat = stats_.mean.size();
    queries_ = params_.add("enc.queries", gaussian(config_.tokens, w, 0.5, rng));
    patch_in_ = nn::Linear::create(params_, "enc.patch", feat * config_.patch, w, rng);
    encoder_ = nn::TransformerStack::create(params_, "enc", config_.layers, w, config_.heads, config_.ff_width, false,
                                            rng);
    mean_head_ = nn::Linear::create(params_, "enc.mean", w, config_.latent, rng);
    logvar_head_ = nn::Linear::create(params_, "enc.logvar", w, config_.latent, rng);
    latent_in_ = nn::Linear::create(params_, "dec.latent", config_.latent, w, rng);
    latent_pos_ = params_.add("dec.latent_pos", gaussian(config_.tokens, w, 0.5, rng));
    decoder_query_ = params_.add("dec.query", gaussian(1, w, 0.5, rng));
    decoder_ = nn::TransformerStack::create(params_, "dec", config_.layers, w, config_.heads, config_.ff_width, true,
                                            rng);
    patch_out_ = nn::Linear::create(params_, "dec.patch", w, feat * config_.patch, rng);
}

MotionVae::EncodedVars MotionVae::encode(const nn::Scope& s, const Matrix& frames) const {
    LAGM_CHECK(frames.rows() >= 1, "motion has no frames");
    LAGM_CHECK(frames.rows() <= config_.max_frames, "motion exceeds the configured maximum length");
    const Matrix patches = nn::patchify(stats_.normalize(frames), config_.patch);
    Var x = patch_in_(s, s.constant(patches));
    x = ag::add(x, s.constant(nn::sinusoidal_table(x.rows(), config_.width)));
    const std::array<Var, 2> parts{s.p(queries_), x};
    Var h = ag::slice_rows(encoder_(s, ag::concat_rows(parts)), 0, config_.tokens);
    return {mean_head_(s, h), ag::clamp(logvar_head_(s, h), kLogvarMin, kLogvarMax)};
}

Var MotionVae::decode(const nn::Scope& s, Var z, Index length) const {
    LAGM_CHECK(z.rows() == config_.tokens && z.cols() == config_.latent, "latent shape does not match the VAE");
    LAGM_CHECK(length >= 1 && length <= config_.max_frames, "decode length outside the configured bounds");
    const Index patches = (length + config_.patch - 1) / config_.patch;
    Var memory = ag::add(latent_in_(s, z), s.p(latent_pos_));
    Var queries = ag::add_row(s.constant(nn::sinusoidal_table(patches, config_.width)), s.p(decoder_query_));
    Var out = patch_out_(s, decoder_(s, queries, memory));
    const Index feat = stats_.mean.size();
    return ag::slice_rows(ag::reshape(out, patches * config_.patch, feat), 0, length);
}

Posterior MotionVae::encode(const MotionSequence& motion, Precision precision) const {
    Tape tape(precision);
    nn::Scope s{tape, params_};
    const auto enc = encode(s, motion.frames);
    return {config_.level, enc.mean.value(), enc.logvar.value()};
}

MotionSequence MotionVae::decode(const LatentEmbedding& z, Index length, Precision precision) const {
    LAGM_CHECK(z.level == config_.level, "latent level does not match the VAE level");
    Tape tape(precision);
    nn::Scope s{tape, params_};
    MotionSequence m;
    m.joints = (static_cast<int>(stats_.mean.size()) - 8) / 12;
    m.frames = stats_.denormalize(decode(s, tape.constant(z.tokens), length).value());
    const Index contacts = m.layout().contacts();
    for (Index t = 0; t < m.frames.rows(); ++t)
        for (Index k = 0; k < 4; ++k) m.frames(t, contacts + k) = m.frames(t, contacts + k) >= 0.5 ? 1.0 : 0.0;
    return m;
}

double MotionVae::reconstruction_error(const MotionSequence& motion, Precision precision) const {
    Tape tape(precision);
    nn::Scope s{tape, params_};
    const auto enc = encode(s, motion.frames);
    Var recon = decode(s, enc.mean, motion.length());
    return ag::smooth_l1(recon, s.constant(stats_.normalize(motion.frames)), config_.smooth_l1_beta).scalar();
}

Checkpoint MotionVae::to_checkpoint() const {
    Checkpoint c;
    c.kind = "vae";
    c.config = {{"vae", config_.to_json()}};
    c.add("stats.mean", stats_.mean);
    c.add("stats.stddev", stats_.stddev);
    c.add_parameters(params_);
    return c;
}

MotionVae MotionVae::from_checkpoint(const Checkpoint& ckpt) {
    LAGM_CHECK(ckpt.kind == "vae", "checkpoint does not hold a VAE");
    FeatureStats stats{ckpt.tensor("stats.mean"), ckpt.tensor("stats.stddev")};
    MotionVae v = create(VaeConfig::from_json(ckpt.config.at("vae")), std::move(stats));
    ckpt.load_parameters(v.params_);
    return v;
}

LatentEmbedding sample_latent(const Posterior& posterior, std::uint64_t seed) {
    LAGM_CHECK(posterior.mean.rows() == posterior.logvar.rows() && posterior.mean.cols() == posterior.logvar.cols(),
               "posterior mean and log-variance shapes differ");
    if (!posterior.mean.allFinite() || !posterior.logvar.allFinite()) throw NumericError("posterior is not finite");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    LatentEmbedding z{posterior.level, posterior.mean};
    for (Index i = 0; i < z.tokens.size(); ++i) {
        const double lv = std::clamp(posterior.logvar.data()[i], kLogvarMin, kLogvarMax);
        z.tokens.data()[i] += std::exp(0.5 * lv) * normal(rng);
    }
    return z;
}

Var vae_loss(const nn::Scope& s, const MotionVae& vae, const Matrix& frames, const Matrix& noise) {
    const auto enc = vae.encode(s, frames);
    LAGM_CHECK(noise.rows() == enc.mean.rows() && noise.cols() == enc.mean.cols(), "noise shape mismatch");
    Var z = ag::add(enc.mean, ag::mul(ag::exp(ag::scale(enc.logvar, 0.5)), s.constant(noise)));
    Var recon = vae.decode(s, z, frames.rows());
    Var rec = ag::smooth_l1(recon, s.constant(vae.stats().normalize(frames)), vae.config().smooth_l1_beta);
    return ag::add(rec, ag::scale(ag::gaussian_kl(enc.mean, enc.logvar), vae.config().kl_weight));
}

TrainedVae train_vae(const std::vector<CorpusEntry>& corpus, const VaeConfig& config, const VaeTrainConfig& train) {
    LAGM_CHECK(!corpus.empty(), "training corpus is empty");
    LAGM_CHECK(train.epochs >= 0 && train.batch_size >= 1, "invalid VAE training configuration");
    std::vector<const MotionSequence*> motions;
    for (const auto& e : corpus) motions.push_back(&e.motion);
    TrainedVae out{MotionVae::create(config, FeatureStats::fit(motions)), {}};
    MotionVae& vae = out.vae;
    AdamW opt(vae.params(), train.optimizer);
    std::mt19937_64 rng(stream_seed(train.seed, 0x7AEull));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<std::size_t> order(motions.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (int epoch = 0; epoch < train.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0, rec_sum = 0.0, kl_sum = 0.0;
        for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(train.batch_size)) {
            const std::size_t end = std::min(order.size(), b + static_cast<std::size_t>(train.batch_size));
            GradientSet grads(vae.params());
            Tape tape(train.precision);
            nn::Scope s{tape, vae.params()};
            std::vector<Var> losses;
            for (std::size_t k = b; k < end; ++k) {
                const Matrix& frames = motions[order[k]]->frames;
                Matrix noise(config.tokens, config.latent);
                for (Index i = 0; i < noise.size(); ++i) noise.data()[i] = normal(rng);
                const auto enc = vae.encode(s, frames);
                Var z = ag::add(enc.mean, ag::mul(ag::exp(ag::scale(enc.logvar, 0.5)), s.constant(noise)));
                Var rec = ag::smooth_l1(vae.decode(s, z, frames.rows()), s.constant(vae.stats().normalize(frames)),
                                        config.smooth_l1_beta);
                Var kl = ag::gaussian_kl(enc.mean, enc.logvar);
                rec_sum += rec.scalar();
                kl_sum += kl.scalar();
                losses.push_back(ag::add(rec, ag::scale(kl, config.kl_weight)));
            }
            Var total = ag::scale(ag::sum(ag::concat_rows(losses)), 1.0 / static_cast<double>(losses.size()));
            if (!std::isfinite(total.scalar())) throw NumericError("VAE loss diverged");
            loss_sum += total.scalar() * static_cast<double>(losses.size());
            tape.backward(total, &grads);
            opt.step(vae.params(), std::move(grads));
        }
        const double n = static_cast<double>(motions.size());
        out.report.epoch_losses.push_back(loss_sum / n);
        out.report.epoch_reconstruction.push_back(rec_sum / n);
        out.report.epoch_kl.push_back(kl_sum / n);
    }
    double rec = 0.0;
    for (const auto* m : motions) rec += vae.reconstruction_error(*m, train.precision);
    out.report.final_reconstruction = rec / static_cast<double>(motions.size());
    return out;
}

}  // namespace lagm
