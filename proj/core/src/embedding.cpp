// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lagm/embedding.hpp"

#include "lagm/error.hpp"
#include "lagm/metrics.hpp"
#include "lagm/tokenizer.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace lagm {

Vocabulary::Vocabulary(std::vector<std::string> words) : words_{"<oov>"} {
    std::set<std::string> unique(words.begin(), words.end());
    unique.erase("<oov>");
    words_.insert(words_.end(), unique.begin(), unique.end());
    for (std::size_t i = 0; i < words_.size(); ++i) index_[words_[i]] = static_cast<Index>(i);
}

Vocabulary Vocabulary::from_corpus(const std::vector<CorpusEntry>& corpus) {
    std::vector<std::string> words{"a", "person"};
    for (const auto& e : corpus) {
        for (auto& t : tokenize(e.description)) words.push_back(std::move(t));
        for (const auto& s : e.local_actions)
            for (auto& t : tokenize(s.description)) words.push_back(std::move(t));
    }
    return Vocabulary(std::move(words));
}

Index Vocabulary::lookup(const std::string& token) const {
    const auto it = index_.find(token);
    return it == index_.end() ? kOov : it->second;
}

std::vector<Index> Vocabulary::ids(const std::vector<std::string>& tokens) const {
    std::vector<Index> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(lookup(t));
    return out;
}

nlohmann::json EmbedderConfig::to_json() const {
    return {{"width", width},       {"eval_width", eval_width}, {"layers", layers},
            {"heads", heads},       {"ff_width", ff_width},     {"patch", patch},
            {"max_tokens", max_tokens}, {"max_frames", max_frames}, {"temperature", temperature},
            {"seed", seed}};
}

EmbedderConfig EmbedderConfig::from_json(const nlohmann::json& j) {
    EmbedderConfig c;
    c.width = j.value("width", c.width);
    c.eval_width = j.value("eval_width", c.eval_width);
    c.layers = j.value("layers", c.layers);
    c.heads = j.value("heads", c.heads);
    c.ff_width = j.value("ff_width", c.ff_width);
    c.patch = j.value("patch", c.patch);
    c.max_tokens = j.value("max_tokens", c.max_tokens);
    c.max_frames = j.value("max_frames", c.max_frames);
    c.temperature = j.value("temperature", c.temperature);
    c.seed = j.value("seed", c.seed);
    return c;
}

Embedder Embedder::create(const EmbedderConfig& config, Vocabulary vocabulary, FeatureStats stats) {
    LAGM_CHECK(config.width > 0 && config.eval_width > 0 && config.layers >= 1, "invalid embedder widths");
    LAGM_CHECK(config.heads >= 1 && config.width % config.heads == 0, "width must be divisible by heads");
    LAGM_CHECK(config.patch >= 1 && config.max_frames >= 1 && config.max_tokens >= 1, "invalid embedder limits");
    LAGM_CHECK(config.temperature > 0.0, "temperature must be positive");
    Embedder e;
    e.config_ = config;
    e.vocab_ = std::move(vocabulary);
    e.stats_ = std::move(stats);
    std::mt19937_64 rng(config.seed);
    e.build(rng);
    return e;
}

void Embedder::build(std::mt19937_64& rng) {
    const Index d = config_.width;
    const Index feat = stats_.mean.size();
    LAGM_CHECK(feat > 0, "embedder needs fitted feature statistics");
    token_table_ = params_.add("text.tokens", gaussian(static_cast<Index>(vocab_.size()), d, 0.5, rng));
    text_summary_ = params_.add("text.summary", gaussian(1, d, 0.5, rng));
    text_stack_ = nn::TransformerStack::create(params_, "text.enc", config_.layers, d, config_.heads, config_.ff_width,
                                               false, rng);
    text_head_ = nn::Linear::create(params_, "text.head", d, config_.eval_width, rng);
    patch_in_ = nn::Linear::create(params_, "motion.patch", feat * config_.patch, d, rng);
    motion_summary_ = params_.add("motion.summary", gaussian(1, d, 0.5, rng));
    motion_stack_ = nn::TransformerStack::create(params_, "motion.enc", config_.layers, d, config_.heads,
                                                 config_.ff_width, false, rng);
    motion_head_ = nn::Linear::create(params_, "motion.head", d, config_.eval_width, rng);
}

std::vector<Index> Embedder::token_ids(std::string_view text) const {
    const auto toks = tokenize(text);
    if (toks.empty()) throw InvalidArgument("empty_text", "text has no tokens");
    LAGM_CHECK(static_cast<int>(toks.size()) <= config_.max_tokens, "text exceeds the maximum token count");
    return vocab_.ids(toks);
}

Var Embedder::encode(const nn::Scope& s, const std::vector<Index>& ids) const {
    LAGM_CHECK(!ids.empty(), "encode needs at least one token");
    Var tokens = ag::gather_rows(s.p(token_table_), ids);
    const std::array<Var, 2> parts{s.p(text_summary_), tokens};
    Var x = ag::concat_rows(parts);
    x = ag::add(x, s.constant(nn::sinusoidal_table(x.rows(), config_.width)));
    return text_stack_(s, x);
}

Var Embedder::text_feature(const nn::Scope& s, const std::vector<Index>& ids) const {
    Var summary = ag::slice_rows(encode(s, ids), 0, 1);
    return ag::l2_normalize_rows(text_head_(s, summary));
}

Var Embedder::motion_feature(const nn::Scope& s, const Matrix& frames) const {
    LAGM_CHECK(frames.rows() >= 1, "motion has no frames");
    LAGM_CHECK(frames.rows() <= config_.max_frames, "motion exceeds the configured maximum length");
    const Matrix patches = nn::patchify(stats_.normalize(frames), config_.patch);
    Var x = patch_in_(s, s.constant(patches));
    const std::array<Var, 2> parts{s.p(motion_summary_), x};
    x = ag::concat_rows(parts);
    x = ag::add(x, s.constant(nn::sinusoidal_table(x.rows(), config_.width)));
    Var summary = ag::slice_rows(motion_stack_(s, x), 0, 1);
    return ag::l2_normalize_rows(motion_head_(s, summary));
}

TokenEncoding Embedder::encode_tokens(std::string_view text, Precision precision) const {
    Tape tape(precision);
    nn::Scope s{tape, params_};
    const Matrix out = encode(s, token_ids(text)).value();
    return {out.bottomRows(out.rows() - 1), out.row(0)};
}

Matrix Embedder::init_graph_nodes(const SemanticGraph& graph, std::string_view text, Precision precision) const {
    const auto toks = tokenize(text);
    LAGM_CHECK(toks == graph.tokens, "graph tokens do not match the text tokenization");
    const TokenEncoding enc = encode_tokens(text, precision);
    Matrix nodes(static_cast<Index>(graph.nodes.size()), config_.width);
    for (const auto& n : graph.nodes) {
        LAGM_CHECK(n.span.begin >= 0 && n.span.end <= static_cast<int>(toks.size()) && n.span.begin < n.span.end,
                   "node span is outside the token range");
        switch (n.kind) {
            case NodeKind::motion: nodes.row(n.id) = enc.summary; break;
            case NodeKind::action: nodes.row(n.id) = enc.tokens.row(n.span.begin); break;
            case NodeKind::specific:
                nodes.row(n.id) = enc.tokens.middleRows(n.span.begin, n.span.end - n.span.begin).colwise().mean();
                break;
        }
    }
    return nodes;
}

RowVector Embedder::text_features(std::string_view text, Precision precision) const {
    Tape tape(precision);
    nn::Scope s{tape, params_};
    return text_feature(s, token_ids(text)).value();
}

RowVector Embedder::motion_features(const MotionSequence& motion, Precision precision) const {
    Tape tape(precision);
    nn::Scope s{tape, params_};
    return motion_feature(s, motion.frames).value();
}

Matrix Embedder::text_features(const std::vector<std::string>& texts, Precision precision) const {
    Matrix out(static_cast<Index>(texts.size()), config_.eval_width);
    for (std::size_t i = 0; i < texts.size(); ++i) out.row(static_cast<Index>(i)) = text_features(texts[i], precision);
    return out;
}

Matrix Embedder::motion_features(const std::vector<const MotionSequence*>& motions, Precision precision) const {
    Matrix out(static_cast<Index>(motions.size()), config_.eval_width);
    for (std::size_t i = 0; i < motions.size(); ++i)
        out.row(static_cast<Index>(i)) = motion_features(*motions[i], precision);
    return out;
}

Checkpoint Embedder::to_checkpoint() const {
    Checkpoint c;
    c.kind = "embedder";
    c.config = {{"embedder", config_.to_json()}, {"vocabulary", vocab_.words()}};
    c.add("stats.mean", stats_.mean);
    c.add("stats.stddev", stats_.stddev);
    c.add_parameters(params_);
    return c;
}

Embedder Embedder::from_checkpoint(const Checkpoint& ckpt) {
    LAGM_CHECK(ckpt.kind == "embedder", "checkpoint does not hold an embedder");
    auto words = ckpt.config.at("vocabulary").get<std::vector<std::string>>();
    FeatureStats stats{ckpt.tensor("stats.mean"), ckpt.tensor("stats.stddev")};
    Embedder e = create(EmbedderConfig::from_json(ckpt.config.at("embedder")), Vocabulary(std::move(words)),
                        std::move(stats));
    ckpt.load_parameters(e.params_);
    return e;
}

Var contrastive_loss(const nn::Scope& s, const Embedder& embedder, const std::vector<std::vector<Index>>& texts,
                     const std::vector<const Matrix*>& motions) {
    LAGM_CHECK(!texts.empty() && texts.size() == motions.size(), "contrastive batch is empty or misaligned");
    std::vector<Var> t, m;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        t.push_back(embedder.text_feature(s, texts[i]));
        m.push_back(embedder.motion_feature(s, *motions[i]));
    }
    Var logits = ag::scale(ag::matmul_nt(ag::concat_rows(t), ag::concat_rows(m)), 1.0 / embedder.config().temperature);
    std::vector<Index> diag(texts.size());
    std::iota(diag.begin(), diag.end(), Index{0});
    Var a = ag::cross_entropy_rows(logits, diag);
    Var b = ag::cross_entropy_rows(ag::transpose(logits), diag);
    return ag::scale(ag::add(a, b), 0.5);
}

double retrieval_top1(const Embedder& embedder, const std::vector<const CorpusEntry*>& entries, int pool_size,
                      int repeats, std::uint64_t seed) {
    std::vector<std::string> texts;
    std::vector<const MotionSequence*> motions;
    for (const auto* e : entries) {
        texts.push_back(e->description);
        motions.push_back(&e->motion);
    }
    const auto runs = r_precision(embedder.text_features(texts), embedder.motion_features(motions), pool_size,
                                  repeats, seed);
    double top1 = 0.0;
    for (const auto& r : runs) top1 += r.top1;
    return top1 / static_cast<double>(runs.size());
}

TrainedEmbedder train_contrastive(const std::vector<CorpusEntry>& corpus, const EmbedderConfig& config,
                                  const ContrastiveConfig& train) {
    LAGM_CHECK(!corpus.empty(), "training corpus is empty");
    LAGM_CHECK(train.epochs >= 0 && train.batch_size >= 2, "invalid contrastive training configuration");
    std::vector<const CorpusEntry*> train_set, val_set;
    for (const auto& e : corpus)
        (is_validation_entry(e.id, train.validation_percent) ? val_set : train_set).push_back(&e);
    LAGM_CHECK(!train_set.empty(), "no training entries after the validation split");

    std::vector<const MotionSequence*> train_motions;
    for (const auto* e : train_set) train_motions.push_back(&e->motion);
    Embedder embedder = Embedder::create(config, Vocabulary::from_corpus(corpus), FeatureStats::fit(train_motions));

    std::vector<std::vector<Index>> ids;
    for (const auto* e : train_set) ids.push_back(embedder.token_ids(e->description));

    TrainedEmbedder out{std::move(embedder), {}};
    out.report.train_pairs = train_set.size();
    out.report.validation_pairs = val_set.size();
    AdamW opt(out.embedder.params(), train.optimizer);
    std::mt19937_64 rng(stream_seed(train.seed, 0xE3BEDull));
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (int epoch = 0; epoch < train.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double total = 0.0;
        int batches = 0;
        for (std::size_t b = 0; b + 1 < order.size(); b += static_cast<std::size_t>(train.batch_size)) {
            const std::size_t end = std::min(order.size(), b + static_cast<std::size_t>(train.batch_size));
            if (end - b < 2) break;
            std::vector<std::vector<Index>> texts;
            std::vector<const Matrix*> motions;
            for (std::size_t k = b; k < end; ++k) {
                texts.push_back(ids[order[k]]);
                motions.push_back(&train_set[order[k]]->motion.frames);
            }
            GradientSet grads(out.embedder.params());
            Tape tape(train.precision);
            nn::Scope s{tape, out.embedder.params()};
            Var loss = contrastive_loss(s, out.embedder, texts, motions);
            if (!std::isfinite(loss.scalar())) throw NumericError("contrastive loss diverged");
            tape.backward(loss, &grads);
            opt.step(out.embedder.params(), std::move(grads));
            total += loss.scalar();
            ++batches;
        }
        out.report.epoch_losses.push_back(batches ? total / batches : 0.0);
    }
    if (static_cast<int>(val_set.size()) >= train.pool_size) {
        out.report.validation_top1 = retrieval_top1(out.embedder, val_set, train.pool_size, 5, train.seed);
        out.report.target_met = out.report.validation_top1 >= train.target_top1;
    }
    return out;
}

}  // namespace lagm
