// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "lagm/metrics.hpp"
#include "lagm/pipeline.hpp"

#include <functional>

namespace lagm {

struct EvaluationConfig {
    int repeats = 20;
    int pool_size = 32;
    int diversity_subset = 300;  // clipped to half the generated set
    int mm_prompts = 8;          // J_m
    int mm_pairs = 10;           // X_m
    int validation_percent = 20;
    std::size_t max_prompts = 0;  // 0 keeps every held-out entry
    bool use_exemplars = true;    // references by retrieval from the training split
    SamplingPlan plan;
    std::uint64_t seed = 1;

    nlohmann::json to_json() const;
};

struct EvaluationResult {
    MetricReport real;       // held-out motions against their own texts
    MetricReport generated;
    std::size_t prompts = 0;
    int repeats = 0;

    nlohmann::json to_json() const;
    std::string table() const;
};

/// Generates one motion per held-out prompt per repeat and scores it in the
/// embedder's evaluation space. `progress` receives the finished repeat index.
EvaluationResult evaluate(const std::vector<CorpusEntry>& corpus, const ModelBundle& models,
                          const EvaluationConfig& config,
                          const std::function<void(int)>& progress = nullptr);

}  // namespace lagm
