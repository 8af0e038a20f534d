// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#include "service.hpp"

#include "documents.hpp"

#include "lagm/error.hpp"
#include "lagm/evaluation.hpp"

#include <httplib.h>

#include <algorithm>

namespace lagm::interface {

using nlohmann::json;

namespace {

std::int64_t now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

json error_body(const std::string& code, const std::string& message) {
    return {{"error", {{"code", code}, {"message", message}}}};
}

Response error_response(int status, const std::string& code, const std::string& message) {
    return {status, error_body(code, message)};
}

// Status for failures raised while validating a request.
int status_for(const Error& e) {
    if (dynamic_cast<const InvalidArgument*>(&e) || dynamic_cast<const NoActionFound*>(&e) ||
        dynamic_cast<const ParseError*>(&e))
        return 400;
    return 500;
}

std::string required_text(const json& req) {
    if (!req.contains("text") || !req.at("text").is_string())
        throw InvalidArgument("malformed_request", "field \"text\" must be a string");
    std::string text = req.at("text").get<std::string>();
    if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c) != 0; }))
        throw InvalidArgument("empty_text", "text must not be empty");
    return text;
}

// Splits "/prefix/<id>" into id when the prefix matches.
std::optional<std::string> tail_id(const std::string& path, const std::string& prefix) {
    if (path.size() <= prefix.size() || path.compare(0, prefix.size(), prefix) != 0) return std::nullopt;
    std::string id = path.substr(prefix.size());
    if (id.find('/') != std::string::npos) return std::nullopt;
    return id;
}

}  // namespace

std::string to_string(JobKind kind) {
    switch (kind) {
        case JobKind::generate: return "generate";
        case JobKind::sample_action: return "sample_action";
        case JobKind::evaluate: return "evaluate";
    }
    return "generate";
}

std::string to_string(JobStatus status) {
    switch (status) {
        case JobStatus::queued: return "queued";
        case JobStatus::running: return "running";
        case JobStatus::done: return "done";
        case JobStatus::failed: return "failed";
    }
    return "queued";
}

json JobRecord::to_json() const {
    return {{"id", id},
            {"kind", interface::to_string(kind)},
            {"status", interface::to_string(status)},
            {"request", request},
            {"result", result},
            {"error", error},
            {"timestamps", {{"created_ms", created_ms}, {"started_ms", started_ms}, {"finished_ms", finished_ms}}}};
}

struct Service::Http {
    httplib::Server server;
    std::thread thread;
};

Service::Service(ServiceConfig config) : config_(std::move(config)) {
    if (config_.models_dir) {
        try {
            models_ = ModelBundle::load(*config_.models_dir);
        } catch (const std::exception& e) {
            load_error_ = e.what();
        }
    }
    if (config_.corpus) corpus_ = load_corpus(*config_.corpus);
    if (models_ && corpus_) bank_ = build_exemplar_bank(*corpus_, models_->embedder, config_.precision);
    worker_ = std::thread([this] { worker_loop(); });
}

Service::Service(ServiceConfig config, std::optional<ModelBundle> models, std::optional<std::vector<CorpusEntry>> corpus)
    : config_(std::move(config)), models_(std::move(models)), corpus_(std::move(corpus)) {
    if (models_ && corpus_) bank_ = build_exemplar_bank(*corpus_, models_->embedder, config_.precision);
    worker_ = std::thread([this] { worker_loop(); });
}

Service::~Service() {
    stop();
    {
        std::lock_guard lock(mutex_);
        shutdown_ = true;
    }
    cv_.notify_all();
    if (worker_.joinable()) worker_.join();
}

Response Service::handle(const std::string& method, const std::string& path, const std::string& body) {
    try {
        json req = json::object();
        if (method == "POST") {
            try {
                req = body.empty() ? json::object() : json::parse(body);
            } catch (const json::exception& e) {
                return error_response(400, "malformed_request", std::string("invalid JSON: ") + e.what());
            }
            if (!req.is_object()) return error_response(400, "malformed_request", "request body must be an object");
        }
        if (method == "GET" && path == "/healthz") return healthz();
        if (method == "POST" && path == "/parse") return parse_request(req);
        if (method == "POST" && path == "/actions/sample") return sample_actions(req);
        if (method == "POST" && path == "/generate") return submit_generate(req);
        if (method == "POST" && path == "/evaluate") return submit_evaluate(req);
        if (method == "GET") {
            if (auto id = tail_id(path, "/jobs/")) return get_job(*id);
            if (auto id = tail_id(path, "/motions/")) return get_motion(*id);
        }
        return error_response(404, "not_found", method + " " + path + " is not an endpoint");
    } catch (const Error& e) {
        return error_response(status_for(e), e.code(), e.what());
    } catch (const json::exception& e) {
        return error_response(400, "malformed_request", e.what());
    } catch (const std::exception& e) {
        return error_response(500, "internal", e.what());
    }
}

Response Service::healthz() {
    std::lock_guard lock(mutex_);
    json body = {{"status", "ok"},
                 {"models_loaded", models_.has_value()},
                 {"corpus_loaded", corpus_.has_value()},
                 {"precision", precision_bits(config_.precision)},
                 {"queued", queue_.size()},
                 {"running", running_job_}};
    if (!load_error_.empty()) body["load_error"] = load_error_;
    return {200, body};
}

Response Service::parse_request(const json& req) {
    const std::string text = required_text(req);
    const double rho = req.value("rho", 0.01);
    std::optional<std::vector<double>> multipliers;
    if (req.contains("weight_multipliers") && !req.at("weight_multipliers").is_null())
        multipliers = req.at("weight_multipliers").get<std::vector<double>>();
    if (!(rho >= 0.0)) throw InvalidArgument("malformed_request", "rho must be non-negative");
    return {200, parse_document(text, models_ ? &*models_ : nullptr, rho, multipliers, config_.precision)};
}

Response Service::sample_actions(const json& req) {
    const std::string text = required_text(req);
    if (!models_) return error_response(409, "models_not_loaded", "no checkpoints loaded");
    std::vector<std::uint64_t> seeds;
    const json seeds_field = req.value("seeds", json(3));
    if (seeds_field.is_array()) {
        seeds = seeds_field.get<std::vector<std::uint64_t>>();
    } else {
        const int k = seeds_field.get<int>();
        if (k < 1 || k > 32) throw InvalidArgument("malformed_request", "seeds must be in [1, 32]");
        const auto base = req.value("seed", std::uint64_t{1});
        for (int i = 0; i < k; ++i) seeds.push_back(base + static_cast<std::uint64_t>(i));
    }
    if (seeds.empty()) throw InvalidArgument("malformed_request", "seeds must not be empty");
    SamplingPlan base;
    base.precision = config_.precision;
    base = plan_from_request(req, base);
    base.validate(models_->diffusion.config().T);

    const std::int64_t created = now_ms();
    json candidates = json::array();
    for (std::uint64_t seed : seeds) {
        SamplingPlan plan = base;
        plan.seed = seed;
        auto s = sample_local_action(text, plan, *models_);
        json preview = motion_document(s.motion);
        const std::string motion_id = store_motion(std::move(s.motion));
        std::string cand_id;
        {
            std::lock_guard lock(mutex_);
            cand_id = "action-" + std::to_string(next_candidate_++);
            candidates_.emplace(cand_id, s.latent);
        }
        candidates.push_back({{"id", cand_id},
                              {"seed", seed},
                              {"latent", latent_to_json(s.latent)},
                              {"motion_id", motion_id},
                              {"preview", preview}});
    }
    JobRecord job;
    job.kind = JobKind::sample_action;
    job.status = JobStatus::done;
    job.request = req;
    job.created_ms = job.started_ms = created;
    job.finished_ms = now_ms();
    json ids = json::array();
    for (const auto& c : candidates) ids.push_back(c.at("id"));
    job.result = {{"candidate_ids", ids}};
    {
        std::lock_guard lock(mutex_);
        job.id = "job-" + std::to_string(next_job_++);
        jobs_.emplace(job.id, job);
    }
    return {200, {{"job_id", job.id}, {"text", text}, {"candidates", candidates}}};
}

std::optional<std::vector<LatentEmbedding>> Service::resolve_references(const json& req) const {
    if (req.contains("refs") && !req.at("refs").is_null()) return references_from_json(req.at("refs"));
    if (req.contains("selected_action_ids") && !req.at("selected_action_ids").is_null()) {
        std::vector<LatentEmbedding> refs;
        std::lock_guard lock(mutex_);
        for (const auto& id : req.at("selected_action_ids")) {
            const auto key = id.get<std::string>();
            const auto it = candidates_.find(key);
            if (it == candidates_.end()) throw Error("unknown_candidate", "unknown candidate id " + key);
            refs.push_back(it->second);
        }
        return refs;
    }
    return std::nullopt;
}

json Service::run_generate(const json& req) {
    const std::string text = required_text(req);
    SamplingPlan plan;
    plan.precision = config_.precision;
    plan = plan_from_request(req, plan);
    const auto refs = resolve_references(req);
    SampleResult result = sample(text, plan, *models_, refs, bank_ ? &*bank_ : nullptr);
    json doc = generation_document(result, plan);
    doc.erase("motion");
    doc["length"] = result.motion.length();
    doc["motion_id"] = store_motion(std::move(result.motion));
    return doc;
}

Response Service::submit_generate(const json& req) {
    const std::string text = required_text(req);
    if (!models_) return error_response(409, "models_not_loaded", "no checkpoints loaded");

    // Validate everything that does not need sampling before accepting the job.
    const SemanticGraph graph = parse(text);
    const std::size_t actions = graph.action_nodes().size();
    SamplingPlan plan;
    plan.precision = config_.precision;
    plan = plan_from_request(req, plan);
    plan.validate(models_->diffusion.config().T);
    if (plan.multipliers && plan.multipliers->size() != actions)
        throw InvalidArgument("malformed_request", "expected " + std::to_string(actions) + " weight multipliers");
    try {
        const auto refs = resolve_references(req);
        if (refs && refs->size() != actions)
            throw InvalidArgument("malformed_request", "expected " + std::to_string(actions) + " references");
    } catch (const Error& e) {
        if (e.code() == "unknown_candidate") return error_response(404, e.code(), e.what());
        throw;
    }

    if (req.value("sync", false)) {
        const int most = *std::max_element(plan.steps.begin(), plan.steps.end());
        if (most > config_.sync_step_limit)
            return error_response(400, "sync_too_large",
                                  "synchronous generation allows at most " + std::to_string(config_.sync_step_limit) +
                                      " steps per stage");
        JobRecord job;
        job.kind = JobKind::generate;
        job.request = req;
        job.created_ms = job.started_ms = now_ms();
        job.result = run_generate(req);
        job.status = JobStatus::done;
        job.finished_ms = now_ms();
        {
            std::lock_guard lock(mutex_);
            job.id = "job-" + std::to_string(next_job_++);
            jobs_.emplace(job.id, job);
        }
        return {200, job.to_json()};
    }

    {
        std::lock_guard lock(mutex_);
        if (queue_.size() >= config_.max_queue)
            return error_response(503, "queue_full", "job queue is full");
    }
    const std::string id = enqueue(JobKind::generate, req);
    return {202, {{"job_id", id}, {"status", "queued"}}};
}

json Service::run_evaluate(const json& req) {
    EvaluationConfig config;
    config.plan.precision = config_.precision;
    config.plan = plan_from_request(req, config.plan);
    config.repeats = req.value("repeats", 20);
    config.max_prompts = req.value("max_prompts", std::size_t{0});
    config.seed = req.value("seed", std::uint64_t{1});
    config.validation_percent = req.value("validation_percent", 20);
    config.use_exemplars = req.value("use_exemplars", true);
    const auto result = evaluate(*corpus_, *models_, config);
    json doc = result.to_json();
    doc["config"] = config.to_json();
    return doc;
}

Response Service::submit_evaluate(const json& req) {
    if (!models_) return error_response(409, "models_not_loaded", "no checkpoints loaded");
    if (!corpus_) return error_response(409, "corpus_not_loaded", "service started without a corpus");
    if (req.contains("repeats") && req.at("repeats").get<int>() < 1)
        throw InvalidArgument("malformed_request", "repeats must be positive");
    plan_from_request(req, SamplingPlan{}).validate(models_->diffusion.config().T);
    {
        std::lock_guard lock(mutex_);
        if (queue_.size() >= config_.max_queue)
            return error_response(503, "queue_full", "job queue is full");
    }
    const std::string id = enqueue(JobKind::evaluate, req);
    return {202, {{"job_id", id}, {"status", "queued"}}};
}

Response Service::get_job(const std::string& id) {
    std::lock_guard lock(mutex_);
    const auto it = jobs_.find(id);
    if (it == jobs_.end()) return error_response(404, "unknown_job", "unknown job id " + id);
    return {200, it->second.to_json()};
}

Response Service::get_motion(const std::string& id) {
    std::lock_guard lock(mutex_);
    const auto it = motions_.find(id);
    if (it == motions_.end()) return error_response(404, "unknown_motion", "unknown motion id " + id);
    json doc = motion_document(it->second);
    doc["id"] = id;
    return {200, doc};
}

std::string Service::enqueue(JobKind kind, json request) {
    std::lock_guard lock(mutex_);
    JobRecord job;
    job.id = "job-" + std::to_string(next_job_++);
    job.kind = kind;
    job.request = std::move(request);
    job.created_ms = now_ms();
    queue_.push_back(job.id);
    const std::string id = job.id;
    jobs_.emplace(id, std::move(job));
    cv_.notify_all();
    return id;
}

std::string Service::store_motion(MotionSequence motion) {
    std::lock_guard lock(mutex_);
    std::string id = "motion-" + std::to_string(next_motion_++);
    motions_.emplace(id, std::move(motion));
    return id;
}

void Service::worker_loop() {
    std::unique_lock lock(mutex_);
    for (;;) {
        cv_.wait(lock, [&] { return shutdown_ || (!paused_ && !queue_.empty()); });
        if (shutdown_) return;
        const std::string id = queue_.front();
        queue_.pop_front();
        JobRecord& job = jobs_.at(id);
        job.status = JobStatus::running;
        job.started_ms = now_ms();
        running_job_ = true;
        const JobKind kind = job.kind;
        const json request = job.request;
        lock.unlock();

        json result, error;
        try {
            result = kind == JobKind::evaluate ? run_evaluate(request) : run_generate(request);
        } catch (const Error& e) {
            error = {{"code", e.code()}, {"message", e.what()}};
        } catch (const std::exception& e) {
            error = {{"code", "internal"}, {"message", e.what()}};
        }

        lock.lock();
        JobRecord& finished = jobs_.at(id);
        finished.finished_ms = now_ms();
        if (error.is_null()) {
            finished.result = std::move(result);
            finished.status = JobStatus::done;
        } else {
            finished.error = std::move(error);
            finished.status = JobStatus::failed;
        }
        running_job_ = false;
        cv_.notify_all();
    }
}

bool Service::wait_idle(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mutex_);
    return cv_.wait_for(lock, timeout, [&] { return queue_.empty() && !running_job_; });
}

void Service::pause_worker(bool paused) {
    {
        std::lock_guard lock(mutex_);
        paused_ = paused;
    }
    cv_.notify_all();
}

namespace {

void route(Service& service, httplib::Server& server) {
    auto forward = [&service](const httplib::Request& req, httplib::Response& res) {
        const Response r = service.handle(req.method, req.path, req.body);
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    };
    server.Get(R"(/.*)", forward);
    server.Post(R"(/.*)", forward);
    server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
}

}  // namespace

bool Service::listen(const std::string& host, int port) {
    if (!http_) http_ = std::make_unique<Http>();
    route(*this, http_->server);
    return http_->server.listen(host, port);
}

int Service::start_background(const std::string& host) {
    if (!http_) http_ = std::make_unique<Http>();
    route(*this, http_->server);
    const int port = http_->server.bind_to_any_port(host);
    if (port < 0) throw Error("io_error", "cannot bind " + host);
    http_->thread = std::thread([this] { http_->server.listen_after_bind(); });
    http_->server.wait_until_ready();
    return port;
}

void Service::stop() {
    if (!http_) return;
    http_->server.stop();
    if (http_->thread.joinable()) http_->thread.join();
}

}  // namespace lagm::interface
