// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#include "lagm/evaluation.hpp"
#include "lagm/metrics.hpp"
#include "lagm/pipeline.hpp"

#include <benchmark/benchmark.h>

using namespace lagm;

namespace {

const char* kPrompt = "a person walks forward slowly then turns left and waves the right hand";

Matrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return gaussian(rows, cols, 1.0, rng);
}

// Desk-size components at initialization; timings do not depend on training.
struct DeskModels {
    ModelBundle bundle;
    std::vector<CorpusEntry> corpus;
};

const DeskModels& desk() {
    static const DeskModels models = [] {
        auto corpus = generate_corpus(1, 40);
        ContrastiveConfig cc;
        cc.epochs = 0;
        Embedder emb = train_contrastive(corpus, EmbedderConfig{}, cc).embedder;
        VaeTrainConfig vt;
        vt.epochs = 0;
        MotionVae vm = train_vae(corpus, VaeConfig::for_level(Level::motion), vt).vae;
        MotionVae va = train_vae(corpus, VaeConfig::for_level(Level::action), vt).vae;
        MotionVae vs = train_vae(corpus, VaeConfig::for_level(Level::specific), vt).vae;
        DiffusionTrainConfig dt;
        dt.epochs = 0;
        DiffusionModel dm = train_diffusion(corpus, emb, vm, va, vs, DiffusionConfig{}, dt).model;
        return DeskModels{ModelBundle{std::move(emb), std::move(vm), std::move(va), std::move(vs), std::move(dm)},
                          std::move(corpus)};
    }();
    return models;
}

void BM_Parse(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(parse(kPrompt));
}
BENCHMARK(BM_Parse);

void BM_GraphAttention(benchmark::State& state) {
    const auto& b = desk().bundle;
    const auto g = parse(kPrompt);
    const Matrix nodes = b.embedder.init_graph_nodes(g, kPrompt);
    for (auto _ : state) benchmark::DoNotOptimize(run_attention(b.diffusion.params(), b.diffusion.gat(), nodes, g));
}
BENCHMARK(BM_GraphAttention);

void BM_PredictEps(benchmark::State& state) {
    const auto& b = desk().bundle;
    const auto level = static_cast<Level>(state.range(0));
    const auto precision = state.range(1) == 32 ? Precision::f32 : Precision::f64;
    const auto& cfg = b.diffusion.config();
    const auto g = parse(kPrompt);
    const Matrix nodes = b.embedder.init_graph_nodes(g, kPrompt);
    const Matrix z = random_matrix(cfg.tokens_for(level), cfg.latent, 1);
    std::optional<Matrix> prev;
    if (level != Level::motion) prev = random_matrix(cfg.tokens_for(static_cast<Level>(state.range(0) - 1)), cfg.latent, 2);
    for (auto _ : state) benchmark::DoNotOptimize(predict_eps(b.diffusion, level, z, 500, &g, nodes, prev, precision));
}
BENCHMARK(BM_PredictEps)->ArgsProduct({{0, 1, 2}, {32, 64}});

void BM_GuidedStep(benchmark::State& state) {
    const NoiseSchedule sched = make_schedule();
    const Matrix z = random_matrix(4, 32, 1);
    const Matrix eps = random_matrix(4, 32, 2);
    GuidanceSpec spec;
    for (int k = 0; k < state.range(0); ++k) {
        spec.references.push_back(random_matrix(4, 32, 10 + static_cast<std::uint64_t>(k)));
        spec.weights.push_back(0.01 / static_cast<double>(state.range(0)));
    }
    const Matrix noise = Matrix::Zero(4, 32);
    for (auto _ : state)
        benchmark::DoNotOptimize(guided_step(z, eps, 500, 480, sched, spec, StepMode::deterministic, noise));
}
BENCHMARK(BM_GuidedStep)->Arg(0)->Arg(1)->Arg(3);

void BM_VaeRoundTrip(benchmark::State& state) {
    const auto& b = desk().bundle;
    const auto level = static_cast<Level>(state.range(0));
    const auto& motion = desk().corpus.front().motion;
    for (auto _ : state) {
        const auto post = b.vae(level).encode(motion);
        benchmark::DoNotOptimize(b.vae(level).decode({level, post.mean}, motion.length()));
    }
}
BENCHMARK(BM_VaeRoundTrip)->DenseRange(0, 2);

void BM_Sample(benchmark::State& state) {
    const auto& b = desk().bundle;
    SamplingPlan plan;
    const int steps = static_cast<int>(state.range(0));
    plan.steps = {steps, steps, steps};
    plan.rho = 0.0;
    for (auto _ : state) benchmark::DoNotOptimize(sample(kPrompt, plan, b));
}
BENCHMARK(BM_Sample)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_Fid(benchmark::State& state) {
    const Matrix a = random_matrix(state.range(0), 32, 1);
    const Matrix c = random_matrix(state.range(0), 32, 2);
    for (auto _ : state) benchmark::DoNotOptimize(fid(a, c));
}
BENCHMARK(BM_Fid)->Arg(256)->Arg(1024);

void BM_RPrecision(benchmark::State& state) {
    const Matrix t = random_matrix(256, 32, 1);
    const Matrix m = random_matrix(256, 32, 2);
    for (auto _ : state) benchmark::DoNotOptimize(r_precision(t, m, 32, 1, 3));
}
BENCHMARK(BM_RPrecision);

void BM_CheckpointSerialize(benchmark::State& state) {
    const auto ckpt = desk().bundle.diffusion.to_checkpoint();
    for (auto _ : state) benchmark::DoNotOptimize(serialize_checkpoint(ckpt));
}
BENCHMARK(BM_CheckpointSerialize);

}  // namespace

BENCHMARK_MAIN();
