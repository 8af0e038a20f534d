// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "lagm/checkpoint.hpp"
#include "lagm/corpus.hpp"
#include "lagm/nn.hpp"
#include "lagm/semantic_graph.hpp"

#include <map>
#include <string>
#include <vector>

namespace lagm {

/// Closed word list; index 0 is the out-of-vocabulary token.
class Vocabulary {
public:
    static constexpr Index kOov = 0;

    Vocabulary() : words_{"<oov>"} {}
    explicit Vocabulary(std::vector<std::string> words);
    /// Every token of every description and local-action description.
    static Vocabulary from_corpus(const std::vector<CorpusEntry>& corpus);

    Index lookup(const std::string& token) const;
    std::vector<Index> ids(const std::vector<std::string>& tokens) const;
    std::size_t size() const { return words_.size(); }
    const std::vector<std::string>& words() const { return words_; }

private:
    std::vector<std::string> words_;
    std::map<std::string, Index> index_;
};

struct EmbedderConfig {
    Index width = 64;        // D, node-representation width
    Index eval_width = 32;   // D_e, evaluation feature width
    int layers = 2;
    int heads = 4;
    Index ff_width = 128;
    int patch = 4;           // frames per motion-encoder token
    int max_tokens = 64;
    int max_frames = 240;
    double temperature = 0.1;
    std::uint64_t seed = 1;

    nlohmann::json to_json() const;
    static EmbedderConfig from_json(const nlohmann::json& j);
};

struct TokenEncoding {
    Matrix tokens;    // N x D, one row per input token
    RowVector summary;  // 1 x D, output at the prepended summary position
};

/// Text encoder (graph-node initialization) plus the paired text/motion
/// evaluation feature extractor.
class Embedder {
public:
    static Embedder create(const EmbedderConfig& config, Vocabulary vocabulary, FeatureStats stats);

    const EmbedderConfig& config() const { return config_; }
    const Vocabulary& vocabulary() const { return vocab_; }
    const FeatureStats& stats() const { return stats_; }
    ParameterSet& params() { return params_; }
    const ParameterSet& params() const { return params_; }

    /// Token ids for a description; throws InvalidArgument("empty_text") when it has no tokens.
    std::vector<Index> token_ids(std::string_view text) const;

    /// (N+1) x D: summary row followed by one row per token.
    Var encode(const nn::Scope& s, const std::vector<Index>& ids) const;
    /// 1 x D_e unit-norm text feature.
    Var text_feature(const nn::Scope& s, const std::vector<Index>& ids) const;
    /// 1 x D_e unit-norm motion feature from raw (unnormalized) frames.
    Var motion_feature(const nn::Scope& s, const Matrix& frames) const;

    TokenEncoding encode_tokens(std::string_view text, Precision precision = Precision::f64) const;
    /// One row per graph node: summary for the motion node, verb token for
    /// actions, mean of phrase tokens for specifics.
    Matrix init_graph_nodes(const SemanticGraph& graph, std::string_view text,
                            Precision precision = Precision::f64) const;

    RowVector text_features(std::string_view text, Precision precision = Precision::f64) const;
    RowVector motion_features(const MotionSequence& motion, Precision precision = Precision::f64) const;
    Matrix text_features(const std::vector<std::string>& texts, Precision precision = Precision::f64) const;
    Matrix motion_features(const std::vector<const MotionSequence*>& motions,
                           Precision precision = Precision::f64) const;

    Checkpoint to_checkpoint() const;
    static Embedder from_checkpoint(const Checkpoint& ckpt);

private:
    void build(std::mt19937_64& rng);

    EmbedderConfig config_;
    Vocabulary vocab_;
    FeatureStats stats_;
    ParameterSet params_;
    ParamId token_table_ = -1;
    ParamId text_summary_ = -1;
    ParamId motion_summary_ = -1;
    nn::TransformerStack text_stack_;
    nn::Linear text_head_;
    nn::Linear patch_in_;
    nn::TransformerStack motion_stack_;
    nn::Linear motion_head_;
};

struct ContrastiveConfig {
    int epochs = 300;
    int batch_size = 32;
    AdamWConfig optimizer{};
    int validation_percent = 20;
    int pool_size = 32;
    double target_top1 = 0.6;
    Precision precision = Precision::f64;
    std::uint64_t seed = 1;
};

struct ContrastiveReport {
    std::vector<double> epoch_losses;
    double validation_top1 = 0.0;
    bool target_met = false;
    std::size_t train_pairs = 0;
    std::size_t validation_pairs = 0;
};

/// Symmetric InfoNCE over a batch of (token ids, motion) pairs.
Var contrastive_loss(const nn::Scope& s, const Embedder& embedder, const std::vector<std::vector<Index>>& texts,
                     const std::vector<const Matrix*>& motions);

struct TrainedEmbedder {
    Embedder embedder;
    ContrastiveReport report;
};

TrainedEmbedder train_contrastive(const std::vector<CorpusEntry>& corpus, const EmbedderConfig& config,
                                  const ContrastiveConfig& train);

/// Mean top-1 of text-given-motion retrieval among `pool_size` candidates.
double retrieval_top1(const Embedder& embedder, const std::vector<const CorpusEntry*>& entries, int pool_size,
                      int repeats, std::uint64_t seed);

}  // namespace lagm
