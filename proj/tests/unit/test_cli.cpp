// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli_helpers.hpp"
#include "documents.hpp"

#include "lagm/error.hpp"

#include <doctest.h>

using namespace lagm;
using namespace lagm::testing;
using nlohmann::json;
namespace fs = std::filesystem;

TEST_CASE("parse prints the graph for a single-action description") {
    const auto r = run_cli({"parse", "--text", "a person walks forward"});
    REQUIRE(r.code == 0);
    const json doc = json::parse(r.out);
    const SemanticGraph expected = parse("a person walks forward");
    CHECK(doc.at("graph") == to_json(expected));
    CHECK(graph_from_json(doc.at("graph")).action_nodes().size() == 1);
    CHECK(doc.at("local_actions") == json::array({"a person walks forward"}));
    CHECK(doc.at("lambdas").is_null());
}

TEST_CASE("parse with models previews per-action weights") {
    const auto dir = tiny_models_dir().string();
    const auto r = run_cli({"parse", "--text", "a person walks forward and then jumps", "--models", dir, "--rho", "0.2"});
    REQUIRE(r.code == 0);
    const json doc = json::parse(r.out);
    const auto lambdas = doc.at("lambdas").get<std::vector<double>>();
    REQUIRE(lambdas.size() == 2);
    CHECK(lambdas[0] + lambdas[1] == doctest::Approx(0.2));
}

TEST_CASE("usage errors exit with code 2") {
    CHECK(run_cli({}).code == 2);
    CHECK(run_cli({"frobnicate"}).code == 2);
    CHECK(run_cli({"parse"}).code == 2);
    CHECK(run_cli({"--precision", "16", "parse", "--text", "a person walks"}).code == 2);
    const auto dir = tiny_models_dir().string();
    CHECK(run_cli({"generate", "--text", "a person walks", "--models", dir, "--weights", "0:2"}).code == 2);
    CHECK(run_cli({"generate", "--text", "a person walks", "--models", dir, "--steps", "5,5"}).code == 2);
    CHECK(run_cli({"generate", "--text", "a person walks", "--models", "/nonexistent/lagm"}).code == 2);
    CHECK(run_cli({"--help"}).code == 0);
}

TEST_CASE("runtime failures exit with code 1 and a structured message") {
    auto r = run_cli({"parse", "--text", ""});
    CHECK(r.code == 1);
    CHECK(json::parse(r.err).at("error").at("code") == "empty_text");

    r = run_cli({"parse", "--text", "the weather is nice"});
    CHECK(r.code == 1);
    CHECK(json::parse(r.err).at("error").at("code") == "no_action_found");

    const auto empty = scratch_dir("empty");
    r = run_cli({"generate", "--text", "a person walks", "--models", empty.string()});
    CHECK(r.code == 1);
    CHECK(json::parse(r.err).at("error").contains("code"));

    r = run_cli({"generate", "--text", "a person walks", "--models", tiny_models_dir().string(), "--weights", "3=2"});
    CHECK(r.code == 1);
    CHECK(json::parse(r.err).at("error").at("code") == "bad_weights");
}

TEST_CASE("gen-corpus writes a loadable corpus") {
    const auto dir = scratch_dir("corpus");
    const auto path = (dir / "c.jsonl").string();
    const auto r = run_cli({"--json", "gen-corpus", "--seed", "4", "--size", "6", "--out", path});
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out).at("entries") == 6);
    CHECK(load_corpus(path) == generate_corpus(4, 6));
}

TEST_CASE("train subcommands produce a loadable model directory") {
    const auto dir = scratch_dir("train");
    const auto corpus = (dir / "c.jsonl").string();
    save_corpus(small_corpus(), corpus);
    const auto models = (dir / "models").string();

    auto write = [&](const std::string& name, const json& j) {
        const auto p = (dir / name).string();
        std::ofstream(p) << j.dump();
        return p;
    };
    const auto emb_cfg = write("emb.json", {{"model", tiny_embedder().to_json()}, {"epochs", 1}});
    json vae_model = tiny_vae(Level::motion).to_json();
    vae_model.erase("level");
    vae_model.erase("tokens");
    const auto vae_cfg = write("vae.json", {{"model", vae_model}, {"epochs", 1}});
    json diff_model = tiny_diffusion().to_json();
    const auto diff_cfg = write("diff.json", {{"model", diff_model}, {"epochs", 1}});

    REQUIRE(run_cli({"train", "embedder", "--corpus", corpus, "--config", emb_cfg, "--out", models}).code == 0);
    const auto vr = run_cli({"--json", "train", "vae", "--corpus", corpus, "--config", vae_cfg, "--out", models});
    REQUIRE(vr.code == 0);
    CHECK(json::parse(vr.out).size() == 3);
    REQUIRE(run_cli({"train", "diffusion", "--corpus", corpus, "--config", diff_cfg, "--out", models}).code == 0);

    const ModelBundle bundle = ModelBundle::load(models);
    CHECK(bundle.vae_action.config().tokens == VaeConfig::for_level(Level::action).tokens);
    CHECK(bundle.vae_specific.config().latent == 4);
    CHECK(bundle.diffusion.config().node_width == tiny_embedder().width);
}

TEST_CASE("generate with a fixed seed writes identical files") {
    const auto dir = scratch_dir("gen");
    const auto models = tiny_models_dir().string();
    const std::vector<std::string> common = {"generate", "--text", "a person walks forward and then jumps",
                                             "--models", models, "--seed", "9", "--steps", "4,4,4",
                                             "--rho", "0.2", "--weights", "1=2.5"};
    auto a = common;
    a.insert(a.end(), {"--out", (dir / "a.json").string()});
    auto b = common;
    b.insert(b.end(), {"--out", (dir / "b.json").string()});
    REQUIRE(run_cli(a).code == 0);
    REQUIRE(run_cli(b).code == 0);
    const std::string fa = read_file(dir / "a.json");
    CHECK(!fa.empty());
    CHECK(fa == read_file(dir / "b.json"));
    const json doc = json::parse(fa);
    CHECK(doc.at("plan").at("multipliers") == json::array({1.0, 2.5}));
    CHECK(doc.at("diagnostics").at("lambdas").size() == 2);
}

TEST_CASE("generate matches the library sampler for the same plan") {
    const auto models = tiny_models_dir().string();
    const auto r = run_cli({"generate", "--text", "a person runs slowly", "--models", models, "--seed", "3",
                            "--steps", "3,3,3", "--rho", "0"});
    REQUIRE(r.code == 0);
    SamplingPlan plan;
    plan.steps = {3, 3, 3};
    plan.seed = 3;
    plan.rho = 0.0;
    const auto direct = sample("a person runs slowly", plan, ModelBundle::load(models));
    CHECK(json::parse(r.out).at("motion") == interface::motion_document(direct.motion));
}

TEST_CASE("generate accepts a reference file") {
    const auto dir = scratch_dir("refs");
    const auto models = tiny_models_dir().string();
    const auto& bundle = tiny_bundle();
    SamplingPlan plan = tiny_plan(2);
    const auto local = sample_local_action("a person jumps", plan, bundle);
    const auto refs = (dir / "refs.json").string();
    std::ofstream(refs) << json{{"references", json::array({interface::latent_to_json(local.latent)})}}.dump();

    const auto r = run_cli({"generate", "--text", "a person jumps", "--models", models, "--seed", "2", "--steps",
                            "3,3,3", "--rho", "0.5", "--refs", refs});
    REQUIRE(r.code == 0);
    const json doc = json::parse(r.out);
    REQUIRE(doc.at("references").size() == 1);
    CHECK(interface::latent_from_json(doc.at("references")[0]).tokens == local.latent.tokens);
}

TEST_CASE("sample-action lists one candidate per seed") {
    const auto r = run_cli({"--json", "sample-action", "--text", "a person waves", "--models",
                            tiny_models_dir().string(), "--seeds", "3", "--seed", "10"});
    REQUIRE(r.code == 0);
    const json doc = json::parse(r.out);
    REQUIRE(doc.at("candidates").size() == 3);
    CHECK(doc.at("candidates")[2].at("seed") == 12);
    CHECK(doc.at("candidates")[0].at("latent").at("level") == "action");
    CHECK(doc.at("candidates")[0].at("motion").contains("positions"));
}

TEST_CASE("evaluate reports confidence intervals") {
    const auto dir = scratch_dir("eval");
    const auto corpus = (dir / "c.jsonl").string();
    save_corpus(generate_corpus(21, 180), corpus);
    const auto out = (dir / "report.json").string();
    const auto r = run_cli({"--json", "evaluate", "--corpus", corpus, "--models", tiny_models_dir().string(),
                            "--repeats", "2", "--max-prompts", "32", "--steps", "2,2,2", "--out", out});
    REQUIRE(r.code == 0);
    const json doc = json::parse(r.out);
    CHECK(doc == json::parse(read_file(out)));
    for (const char* metric : {"r_precision_top1", "fid", "mm_dist", "diversity", "multimodality"}) {
        CHECK(doc.at("generated").at(metric).contains("mean"));
        CHECK(doc.at("generated").at(metric).contains("ci95"));
    }
    CHECK(doc.at("generated").at("fid").at("values").size() == 2);
}
