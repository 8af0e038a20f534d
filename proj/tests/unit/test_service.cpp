// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli_helpers.hpp"
#include "documents.hpp"
#include "service.hpp"

#include <doctest.h>
#include <httplib.h>

using namespace lagm;
using namespace lagm::testing;
using interface::Response;
using interface::Service;
using interface::ServiceConfig;
using nlohmann::json;

namespace {

ServiceConfig f64_config() {
    ServiceConfig c;
    c.precision = Precision::f64;
    return c;
}

Response post(Service& s, const std::string& path, const json& body) { return s.handle("POST", path, body.dump()); }
Response get(Service& s, const std::string& path) { return s.handle("GET", path, ""); }

std::string error_code(const Response& r) { return r.body.at("error").at("code").get<std::string>(); }

json wait_for_job(Service& s, const std::string& id) {
    REQUIRE(s.wait_idle(std::chrono::seconds(120)));
    const auto r = get(s, "/jobs/" + id);
    REQUIRE(r.status == 200);
    return r.body;
}

}  // namespace

TEST_CASE("healthz reports model state") {
    Service without(f64_config(), std::nullopt);
    auto r = get(without, "/healthz");
    CHECK(r.status == 200);
    CHECK(r.body.at("models_loaded") == false);

    Service with(f64_config(), tiny_bundle());
    r = get(with, "/healthz");
    CHECK(r.body.at("models_loaded") == true);
    CHECK(r.body.at("precision") == 64);
}

TEST_CASE("serving defaults to 32-bit precision") {
    CHECK(ServiceConfig{}.precision == Precision::f32);
}

TEST_CASE("parse endpoint returns the graph and a weight preview") {
    Service s(f64_config(), tiny_bundle());
    const auto r = post(s, "/parse", {{"text", "a person walks forward and then jumps"}, {"rho", 0.3}});
    REQUIRE(r.status == 200);
    CHECK(r.body.at("graph") == to_json(parse("a person walks forward and then jumps")));
    const auto lambdas = r.body.at("lambdas").get<std::vector<double>>();
    REQUIRE(lambdas.size() == 2);
    CHECK(lambdas[0] + lambdas[1] == doctest::Approx(0.3));
    CHECK(r.body.at("edge_coefficients").size() == r.body.at("graph").at("edges").size());

    const auto scaled = post(s, "/parse", {{"text", "a person walks forward and then jumps"},
                                           {"rho", 0.3},
                                           {"weight_multipliers", {1.0, 3.0}}});
    REQUIRE(scaled.status == 200);
    CHECK(scaled.body.at("lambdas")[1].get<double>() > lambdas[1]);
    CHECK(scaled.body.at("lambdas")[1].get<double>() == doctest::Approx(3.0 * lambdas[1]));
}

TEST_CASE("parse endpoint errors") {
    Service s(f64_config(), std::nullopt);
    auto r = post(s, "/parse", {{"text", ""}});
    CHECK(r.status == 400);
    CHECK(error_code(r) == "empty_text");
    r = s.handle("POST", "/parse", "{not json");
    CHECK(r.status == 400);
    CHECK(error_code(r) == "malformed_request");
    r = post(s, "/parse", {{"txt", "a person walks"}});
    CHECK(r.status == 400);
    r = post(s, "/parse", {{"text", "the weather is nice"}});
    CHECK(r.status == 400);
    CHECK(error_code(r) == "no_action_found");
    r = post(s, "/parse", {{"text", "a person walks"}});
    CHECK(r.status == 200);
    CHECK(r.body.at("lambdas").is_null());
}

TEST_CASE("model endpoints return 409 without checkpoints") {
    Service s(f64_config(), std::nullopt);
    CHECK(post(s, "/generate", {{"text", "a person walks"}}).status == 409);
    CHECK(post(s, "/actions/sample", {{"text", "a person walks"}, {"seeds", 2}}).status == 409);
    CHECK(post(s, "/evaluate", json::object()).status == 409);
}

TEST_CASE("unknown ids and routes return 404") {
    Service s(f64_config(), tiny_bundle());
    CHECK(get(s, "/jobs/job-999").status == 404);
    CHECK(get(s, "/motions/motion-999").status == 404);
    CHECK(get(s, "/nowhere").status == 404);
    const auto r = post(s, "/generate", {{"text", "a person walks"}, {"selected_action_ids", {"action-42"}}});
    CHECK(r.status == 404);
    CHECK(error_code(r) == "unknown_candidate");
}

TEST_CASE("generate validates requests before queueing") {
    Service s(f64_config(), tiny_bundle());
    CHECK(post(s, "/generate", {{"text", "  "}}).status == 400);
    CHECK(post(s, "/generate", {{"text", "a person walks"}, {"steps", {0, 5, 5}}}).status == 400);
    CHECK(post(s, "/generate", {{"text", "a person walks"}, {"rho", -1.0}}).status == 400);
    CHECK(post(s, "/generate", {{"text", "a person walks"}, {"weight_multipliers", {1.0, 2.0}}}).status == 400);
    CHECK(post(s, "/generate", {{"text", "a person walks"}, {"precision", 16}}).status == 400);
    CHECK(post(s, "/generate", {{"text", "a person walks"}, {"steps", "many"}}).status == 400);
    CHECK(post(s, "/generate", {{"text", "a person walks"}, {"steps", 30}, {"sync", true}}).status == 400);
}

TEST_CASE("generate job lifecycle ends with a retrievable motion") {
    Service s(f64_config(), tiny_bundle());
    const auto r = post(s, "/generate", {{"text", "a person walks forward and then jumps"},
                                         {"steps", {3, 3, 3}},
                                         {"seed", 4},
                                         {"rho", 0.2}});
    REQUIRE(r.status == 202);
    const std::string id = r.body.at("job_id");
    const json job = wait_for_job(s, id);
    CHECK(job.at("status") == "done");
    CHECK(job.at("kind") == "generate");
    CHECK(job.at("timestamps").at("finished_ms").get<std::int64_t>() >=
          job.at("timestamps").at("started_ms").get<std::int64_t>());
    CHECK(job.at("result").at("diagnostics").at("lambdas").size() == 2);
    const auto motion = get(s, "/motions/" + job.at("result").at("motion_id").get<std::string>());
    REQUIRE(motion.status == 200);
    CHECK(motion.body.at("positions").size() == job.at("result").at("length").get<std::size_t>());
    CHECK(motion.body.contains("skeleton"));
}

TEST_CASE("failed jobs record the error") {
    Service s(f64_config(), tiny_bundle());
    // A wrong-width reference passes the arity check and fails inside sampling.
    LatentEmbedding bad{Level::action, Matrix::Zero(2, 3)};
    const auto r = post(s, "/generate", {{"text", "a person jumps"},
                                         {"steps", {2, 2, 2}},
                                         {"rho", 0.2},
                                         {"refs", json::array({interface::latent_to_json(bad)})}});
    REQUIRE(r.status == 202);
    const json job = wait_for_job(s, r.body.at("job_id"));
    CHECK(job.at("status") == "failed");
    CHECK(job.at("result").is_null());
    CHECK(job.at("error").contains("code"));
}

TEST_CASE("generate with rho 0 matches the CLI for the same seed") {
    Service s(f64_config(), tiny_bundle());
    const auto r = post(s, "/generate", {{"text", "a person walks forward and then jumps"},
                                         {"steps", {3, 3, 3}},
                                         {"seed", 11},
                                         {"rho", 0.0},
                                         {"precision", 64}});
    REQUIRE(r.status == 202);
    const json job = wait_for_job(s, r.body.at("job_id"));
    REQUIRE(job.at("status") == "done");
    json motion = get(s, "/motions/" + job.at("result").at("motion_id").get<std::string>()).body;
    motion.erase("id");

    const auto cli = run_cli({"generate", "--text", "a person walks forward and then jumps", "--models",
                              tiny_models_dir().string(), "--steps", "3,3,3", "--seed", "11", "--rho", "0"});
    REQUIRE(cli.code == 0);
    CHECK(json::parse(cli.out).at("motion") == motion);
}

TEST_CASE("selected candidates become references") {
    Service s(f64_config(), tiny_bundle());
    const auto cands = post(s, "/actions/sample", {{"text", "a person jumps"}, {"seeds", {5, 6}}, {"steps", {3, 3, 3}}});
    REQUIRE(cands.status == 200);
    REQUIRE(cands.body.at("candidates").size() == 2);
    const json chosen = cands.body.at("candidates")[1];
    CHECK(chosen.at("seed") == 6);
    CHECK(chosen.at("preview").contains("positions"));
    CHECK(get(s, "/motions/" + chosen.at("motion_id").get<std::string>()).status == 200);
    CHECK(get(s, "/jobs/" + cands.body.at("job_id").get<std::string>()).body.at("kind") == "sample_action");

    const auto r = post(s, "/generate", {{"text", "a person jumps"},
                                         {"steps", {3, 3, 3}},
                                         {"rho", 0.2},
                                         {"selected_action_ids", {chosen.at("id")}},
                                         {"sync", true}});
    REQUIRE(r.status == 200);
    CHECK(r.body.at("status") == "done");
    CHECK(r.body.at("result").at("references")[0] == chosen.at("latent"));
}

TEST_CASE("a full queue returns 503") {
    ServiceConfig config = f64_config();
    config.max_queue = 2;
    Service s(config, tiny_bundle());
    s.pause_worker(true);
    const json req = {{"text", "a person walks"}, {"steps", {2, 2, 2}}, {"rho", 0.0}};
    CHECK(post(s, "/generate", req).status == 202);
    CHECK(post(s, "/generate", req).status == 202);
    const auto full = post(s, "/generate", req);
    CHECK(full.status == 503);
    CHECK(error_code(full) == "queue_full");
    const auto queued = get(s, "/jobs/job-1");
    CHECK(queued.body.at("status") == "queued");
    CHECK(queued.body.at("result").is_null());
    s.pause_worker(false);
    CHECK(s.wait_idle(std::chrono::seconds(60)));
    CHECK(get(s, "/jobs/job-1").body.at("status") == "done");
    CHECK(post(s, "/generate", req).status == 202);
}

TEST_CASE("evaluate runs as a job") {
    std::vector<CorpusEntry> corpus = generate_corpus(21, 180);
    Service s(f64_config(), tiny_bundle(), corpus);
    const auto r = post(s, "/evaluate", {{"repeats", 2}, {"max_prompts", 32}, {"steps", {2, 2, 2}}});
    REQUIRE(r.status == 202);
    const json job = wait_for_job(s, r.body.at("job_id"));
    CHECK(job.at("kind") == "evaluate");
    REQUIRE(job.at("status") == "done");
    CHECK(job.at("result").at("generated").at("fid").contains("ci95"));
}

TEST_CASE("the HTTP server routes requests over a socket") {
    Service s(f64_config(), tiny_bundle());
    const int port = s.start_background();
    httplib::Client client("127.0.0.1", port);
    auto health = client.Get("/healthz");
    REQUIRE(health);
    CHECK(health->status == 200);
    CHECK(health->get_header_value("Content-Type") == "application/json");

    auto bad = client.Post("/parse", R"({"text": ""})", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 400);
    CHECK(json::parse(bad->body).at("error").at("code") == "empty_text");

    auto gen = client.Post("/generate", json{{"text", "a person walks"}, {"steps", {2, 2, 2}}, {"rho", 0.0}}.dump(),
                           "application/json");
    REQUIRE(gen);
    CHECK(gen->status == 202);
    const std::string id = json::parse(gen->body).at("job_id");
    REQUIRE(s.wait_idle(std::chrono::seconds(60)));
    auto job = client.Get("/jobs/" + id);
    REQUIRE(job);
    const json body = json::parse(job->body);
    CHECK(body.at("status") == "done");
    auto motion = client.Get("/motions/" + body.at("result").at("motion_id").get<std::string>());
    REQUIRE(motion);
    CHECK(motion->status == 200);
    s.stop();
}
