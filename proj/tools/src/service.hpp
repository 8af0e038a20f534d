// Copyright (C) 2026 The lagm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "lagm/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

namespace lagm::interface {

struct ServiceConfig {
    std::optional<std::filesystem::path> models_dir;
    std::optional<std::filesystem::path> corpus;  // retrieval bank and /evaluate
    Precision precision = Precision::f32;
    std::size_t max_queue = 64;
    int sync_step_limit = 20;  // "sync": true allowed when every stage uses at most this many steps
};

struct Response {
    int status = 200;
    nlohmann::json body;
};

enum class JobKind { generate, sample_action, evaluate };
enum class JobStatus { queued, running, done, failed };

std::string to_string(JobKind kind);
std::string to_string(JobStatus status);

struct JobRecord {
    std::string id;
    JobKind kind = JobKind::generate;
    JobStatus status = JobStatus::queued;
    nlohmann::json request;
    nlohmann::json result;  // null until done
    nlohmann::json error;   // null unless failed
    std::int64_t created_ms = 0;
    std::int64_t started_ms = 0;
    std::int64_t finished_ms = 0;

    nlohmann::json to_json() const;
};

/// Model registry, job store and request dispatch. The registry is read-only
/// after construction; the store is guarded by one mutex and drained by a
/// single worker thread.
class Service {
public:
    explicit Service(ServiceConfig config);
    Service(ServiceConfig config, std::optional<ModelBundle> models,
            std::optional<std::vector<CorpusEntry>> corpus = std::nullopt);
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    bool models_loaded() const { return models_.has_value(); }

    /// Socket-free dispatch; `path` excludes any query string.
    Response handle(const std::string& method, const std::string& path, const std::string& body);

    /// Blocks serving HTTP until stop(); false when the address cannot be bound.
    bool listen(const std::string& host, int port);
    /// Binds an ephemeral port, serves on a background thread, returns the port.
    int start_background(const std::string& host = "127.0.0.1");
    void stop();

    /// Waits until no job is queued or running.
    bool wait_idle(std::chrono::milliseconds timeout);
    /// Holds the worker before it takes the next job; used to fill the queue deterministically.
    void pause_worker(bool paused);

private:
    struct Http;

    Response parse_request(const nlohmann::json& req);
    Response sample_actions(const nlohmann::json& req);
    Response submit_generate(const nlohmann::json& req);
    Response submit_evaluate(const nlohmann::json& req);
    Response get_job(const std::string& id);
    Response get_motion(const std::string& id);
    Response healthz();

    nlohmann::json run_generate(const nlohmann::json& req);
    nlohmann::json run_evaluate(const nlohmann::json& req);
    std::optional<std::vector<LatentEmbedding>> resolve_references(const nlohmann::json& req) const;
    std::string enqueue(JobKind kind, nlohmann::json request);
    std::string store_motion(MotionSequence motion);
    void worker_loop();

    ServiceConfig config_;
    std::optional<ModelBundle> models_;
    std::optional<std::vector<CorpusEntry>> corpus_;
    std::optional<ExemplarBank> bank_;
    std::string load_error_;

    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::map<std::string, JobRecord> jobs_;
    std::deque<std::string> queue_;
    std::map<std::string, MotionSequence> motions_;
    std::map<std::string, LatentEmbedding> candidates_;
    std::uint64_t next_job_ = 1;
    std::uint64_t next_motion_ = 1;
    std::uint64_t next_candidate_ = 1;
    bool running_job_ = false;
    bool paused_ = false;
    bool shutdown_ = false;
    std::thread worker_;

    std::unique_ptr<Http> http_;
};

}  // namespace lagm::interface
