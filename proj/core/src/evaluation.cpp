// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lagm/evaluation.hpp"

#include "lagm/error.hpp"

#include <algorithm>

namespace lagm {

namespace {

Statistic summarize_or_empty(std::vector<double> values) {
    return values.empty() ? Statistic{} : summarize(std::move(values));
}

}  // namespace

nlohmann::json EvaluationConfig::to_json() const {
    return {{"repeats", repeats},
            {"pool_size", pool_size},
            {"diversity_subset", diversity_subset},
            {"mm_prompts", mm_prompts},
            {"mm_pairs", mm_pairs},
            {"validation_percent", validation_percent},
            {"max_prompts", max_prompts},
            {"use_exemplars", use_exemplars},
            {"plan", plan.to_json()},
            {"seed", seed}};
}

nlohmann::json EvaluationResult::to_json() const {
    return {{"real", real.to_json()}, {"generated", generated.to_json()}, {"prompts", prompts}, {"repeats", repeats}};
}

std::string EvaluationResult::table() const {
    return MetricReport::header() + real.row("Real") + generated.row("Generated");
}

EvaluationResult evaluate(const std::vector<CorpusEntry>& corpus, const ModelBundle& models,
                          const EvaluationConfig& config, const std::function<void(int)>& progress) {
    LAGM_CHECK(config.repeats >= 1, "at least one repeat is required");
    LAGM_CHECK(config.pool_size >= 2 && config.diversity_subset >= 1, "invalid metric sizes");
    LAGM_CHECK(config.mm_prompts >= 0 && config.mm_pairs >= 1, "invalid multimodality sizes");

    std::vector<const CorpusEntry*> held_out;
    std::vector<CorpusEntry> train;
    for (const auto& e : corpus) {
        if (is_validation_entry(e.id, config.validation_percent))
            held_out.push_back(&e);
        else
            train.push_back(e);
    }
    if (config.max_prompts > 0 && held_out.size() > config.max_prompts) held_out.resize(config.max_prompts);
    const auto n = static_cast<int>(held_out.size());
    if (n < config.pool_size)
        throw InvalidArgument("need at least " + std::to_string(config.pool_size) + " held-out prompts, have " +
                              std::to_string(n));
    const int subset = std::min(config.diversity_subset, n / 2);
    const int mm_prompts = std::min(config.mm_prompts, n);

    std::optional<ExemplarBank> bank;
    if (config.use_exemplars && config.plan.rho > 0.0 && !train.empty())
        bank = build_exemplar_bank(train, models.embedder, config.plan.precision);
    const ExemplarBank* bank_ptr = bank ? &*bank : nullptr;

    std::vector<std::string> texts;
    std::vector<const MotionSequence*> real_motions;
    for (const auto* e : held_out) {
        texts.push_back(e->description);
        real_motions.push_back(&e->motion);
    }
    const Matrix text = models.embedder.text_features(texts, config.plan.precision);
    const Matrix real = models.embedder.motion_features(real_motions, config.plan.precision);
    const GaussianMoments real_moments = moments(real);

    std::vector<double> r1, r2, r3, fids, mm, div, mmod;
    std::vector<double> q1, q2, q3, qfid, qmm, qdiv;
    for (int r = 0; r < config.repeats; ++r) {
        const std::uint64_t repeat_seed = stream_seed(config.seed, static_cast<std::uint64_t>(r));
        Matrix gen(n, real.cols());
        for (int i = 0; i < n; ++i) {
            SamplingPlan plan = config.plan;
            plan.seed = stream_seed(repeat_seed, static_cast<std::uint64_t>(i));
            plan.length = held_out[static_cast<std::size_t>(i)]->motion.length();
            const auto out = sample(texts[static_cast<std::size_t>(i)], plan, models, std::nullopt, bank_ptr);
            gen.row(i) = models.embedder.motion_features(out.motion, config.plan.precision);
        }
        const TopK g = r_precision(text, gen, config.pool_size, 1, repeat_seed).front();
        r1.push_back(g.top1);
        r2.push_back(g.top2);
        r3.push_back(g.top3);
        fids.push_back(fid(moments(gen), real_moments));
        mm.push_back(mm_dist(text, gen));
        div.push_back(diversity(gen, subset, repeat_seed));

        std::vector<Matrix> groups;
        for (int j = 0; j < mm_prompts; ++j) {
            Matrix group(2 * config.mm_pairs, real.cols());
            for (int k = 0; k < 2 * config.mm_pairs; ++k) {
                SamplingPlan plan = config.plan;
                plan.seed = stream_seed(repeat_seed, 1'000'000ull + static_cast<std::uint64_t>(j * 1000 + k));
                plan.length = held_out[static_cast<std::size_t>(j)]->motion.length();
                const auto out = sample(texts[static_cast<std::size_t>(j)], plan, models, std::nullopt, bank_ptr);
                group.row(k) = models.embedder.motion_features(out.motion, config.plan.precision);
            }
            groups.push_back(std::move(group));
        }
        if (!groups.empty()) mmod.push_back(multimodality(groups, config.mm_pairs));

        const TopK q = r_precision(text, real, config.pool_size, 1, repeat_seed).front();
        q1.push_back(q.top1);
        q2.push_back(q.top2);
        q3.push_back(q.top3);
        qfid.push_back(fid(moments(real), real_moments));
        qmm.push_back(mm_dist(text, real));
        qdiv.push_back(diversity(real, subset, repeat_seed));
        if (progress) progress(r);
    }

    EvaluationResult out;
    out.prompts = held_out.size();
    out.repeats = config.repeats;
    out.generated = {summarize(r1), summarize(r2), summarize(r3), summarize(fids),
                     summarize(mm), summarize(div), summarize_or_empty(std::move(mmod))};
    out.real = {summarize(q1), summarize(q2), summarize(q3), summarize(std::move(qfid)),
                summarize(qmm), summarize(qdiv), Statistic{}};
    return out;
}

}  // namespace lagm
