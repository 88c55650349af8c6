#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "chartinsight/agents.hpp"
#include "chartinsight/backend.hpp"
#include "chartinsight/error.hpp"
#include "chartinsight/sumdoc.hpp"

namespace chartinsight {

enum class JobState { Queued, Running, Done, Failed };

std::string_view to_string(JobState s) noexcept;

struct ChatTurn {
    std::string message;
    int version = 0;
    std::size_t edited = 0;        // sentences changed or added by the turn
    std::size_t unverifiable = 0;  // of those, flagged by the oracles
    std::int64_t timestamp_ms = 0;
};

struct Job {
    std::string id;
    JobState state = JobState::Queued;
    std::string stage;  // set while running
    std::string inputs_digest;
    std::optional<SummaryDoc> result;
    std::optional<ErrorCode> error_code;
    std::string error_message;
    std::string error_stage;
    std::vector<ChatTurn> chat;
    std::int64_t created_ms = 0;
    std::int64_t updated_ms = 0;
};

nlohmann::json to_json(const Job& j);
nlohmann::json to_json(const ChatTurn& t);

/// Run-time options of one submission.
struct JobOptions {
    std::string backend = "mock";
    std::uint64_t seed = 7;
    int max_refine_iters = 5;
    int vote_candidates = 3;

    PipelineConfig pipeline() const;
};

JobOptions job_options_from_json(const nlohmann::json& overrides);
nlohmann::json to_json(const JobOptions& o);

using BackendFactory = std::function<std::unique_ptr<Backend>(const JobOptions&)>;

struct ServiceConfig {
    std::filesystem::path data_dir = "ci-data";
    int workers = 2;
    BackendFactory backend_factory;  // defaults to make_backend(kind, seed)

    /// CI_DATA_DIR and CI_WORKERS.
    static ServiceConfig from_env();
};

/// Jobs persisted as append-only files under data_dir/jobs/<id>/. Each job
/// runs at most once; jobs interrupted by a restart are marked failed.
class JobService {
public:
    explicit JobService(ServiceConfig cfg);
    ~JobService();
    JobService(const JobService&) = delete;
    JobService& operator=(const JobService&) = delete;

    /// Payload: {"spec": object or text, "data": CSV text (optional when the
    /// spec carries inline values), "config": overrides}. Throws
    /// ValidationError naming the ingest failure.
    std::string submit(const nlohmann::json& payload);

    Job status(const std::string& id) const;
    SummaryDoc summary(const std::string& id) const;
    nlohmann::json transcript(const std::string& id) const;
    /// The job's chart: spec and parsed data.
    nlohmann::json chart(const std::string& id) const;
    SummaryDoc chat(const std::string& id, const std::string& message);
    std::vector<Job> list() const;

    /// Block until the job leaves queued/running or the timeout expires.
    bool wait(const std::string& id, std::chrono::milliseconds timeout) const;
    void stop();

private:
    struct Record;
    std::shared_ptr<Record> find(const std::string& id) const;
    void recover();
    void worker();
    void execute(const std::shared_ptr<Record>& r);
    void persist_state(Record& r);

    ServiceConfig cfg_;
    mutable std::mutex mu_;
    mutable std::condition_variable cv_;
    std::map<std::string, std::shared_ptr<Record>> jobs_;
    std::deque<std::string> queue_;
    bool stopping_ = false;
    std::vector<std::thread> threads_;
};

struct HttpOptions {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::optional<std::string> token;  // static bearer token, CI_TOKEN
};

/// HTTP front of a JobService:
///   POST /jobs, GET /jobs, GET /jobs/{id}, GET /jobs/{id}/summary,
///   GET /jobs/{id}/transcript, GET /jobs/{id}/chart, GET /jobs/{id}/chat,
///   POST /jobs/{id}/chat, POST /evaluate, GET /health.
class HttpServer {
public:
    HttpServer(JobService& service, HttpOptions opts);
    ~HttpServer();

    /// Bind and serve on a background thread; returns the bound port.
    int start();
    /// Bind and serve on the calling thread.
    void run();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// HTTP status for a library error.
int http_status(ErrorCode code) noexcept;
nlohmann::json error_json(const Error& e);

}  // namespace chartinsight
