#include "chartinsight/server.hpp"

#include <httplib.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "chartinsight/bench.hpp"
#include "chartinsight/ingest.hpp"

namespace chartinsight {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::int64_t now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

std::string new_id() {
    static std::mutex mu;
    static std::mt19937_64 rng{std::random_device{}() ^ static_cast<std::uint64_t>(now_ms())};
    std::lock_guard lock(mu);
    char buf[33];
    std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng()),
                  static_cast<unsigned long long>(rng()));
    return buf;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Whole-file writes go through a rename so readers never see half a file.
void write_atomic(const fs::path& p, const std::string& bytes) {
    const fs::path tmp = p.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::BackendError, "cannot write " + tmp.string());
        out << bytes;
        out.flush();
    }
    fs::rename(tmp, p);
}

void append_line(const fs::path& p, const json& j) {
    std::ofstream out(p, std::ios::binary | std::ios::app);
    out << j.dump() << "\n";
    out.flush();
}

std::vector<json> read_lines(const fs::path& p) {
    std::vector<json> out;
    std::ifstream in(p);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::exception&) {
            break;  // torn tail
        }
    }
    return out;
}

std::optional<JobState> state_from_string(std::string_view s) {
    if (s == "queued") return JobState::Queued;
    if (s == "running") return JobState::Running;
    if (s == "done") return JobState::Done;
    if (s == "failed") return JobState::Failed;
    return std::nullopt;
}

std::optional<ErrorCode> error_code_from_string(std::string_view s) {
    for (int i = 0; i <= static_cast<int>(ErrorCode::UsageError); ++i)
        if (to_string(static_cast<ErrorCode>(i)) == s) return static_cast<ErrorCode>(i);
    return std::nullopt;
}

}  // namespace

std::string_view to_string(JobState s) noexcept {
    switch (s) {
        case JobState::Queued: return "queued";
        case JobState::Running: return "running";
        case JobState::Done: return "done";
        case JobState::Failed: return "failed";
    }
    return "queued";
}

json to_json(const ChatTurn& t) {
    return {{"message", t.message},
            {"version", t.version},
            {"edited", t.edited},
            {"unverifiable", t.unverifiable},
            {"timestamp_ms", t.timestamp_ms}};
}

json to_json(const Job& j) {
    json out{{"id", j.id},
             {"state", std::string(to_string(j.state))},
             {"inputs_digest", j.inputs_digest},
             {"created_ms", j.created_ms},
             {"updated_ms", j.updated_ms},
             {"chat_turns", j.chat.size()}};
    if (j.state == JobState::Running) {
        out["stage"] = j.stage;
        out["status"] = "running:" + j.stage;
    } else {
        out["status"] = std::string(to_string(j.state));
    }
    if (j.result) {
        out["version"] = j.result->version;
        out["summary_url"] = "/jobs/" + j.id + "/summary";
    }
    out["transcript_url"] = "/jobs/" + j.id + "/transcript";
    if (j.error_code)
        out["error"] = {{"code", std::string(to_string(*j.error_code))},
                        {"detail", j.error_message},
                        {"stage", j.error_stage}};
    return out;
}

PipelineConfig JobOptions::pipeline() const {
    PipelineConfig c;
    c.seed = seed;
    c.max_refine_iters = max_refine_iters;
    c.vote_candidates = vote_candidates;
    return c;
}

JobOptions job_options_from_json(const json& j) {
    JobOptions o;
    if (j.is_null()) return o;
    if (!j.is_object()) throw Error(ErrorCode::ValidationError, "config must be an object");
    try {
        o.backend = j.value("backend", o.backend);
        o.seed = j.value("seed", o.seed);
        o.max_refine_iters = j.value("max_iters", j.value("max_refine_iters", o.max_refine_iters));
        o.vote_candidates = j.value("vote_candidates", o.vote_candidates);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ValidationError, std::string("bad config: ") + e.what());
    }
    if (o.backend != "mock" && o.backend != "remote")
        throw Error(ErrorCode::ValidationError, "unknown backend '" + o.backend + "'");
    o.pipeline().validate();
    return o;
}

json to_json(const JobOptions& o) {
    return {{"backend", o.backend},
            {"seed", o.seed},
            {"max_iters", o.max_refine_iters},
            {"vote_candidates", o.vote_candidates}};
}

ServiceConfig ServiceConfig::from_env() {
    ServiceConfig c;
    if (const char* d = std::getenv("CI_DATA_DIR"); d && *d) c.data_dir = d;
    if (const char* w = std::getenv("CI_WORKERS"); w && *w) c.workers = std::max(1, std::atoi(w));
    return c;
}

struct JobService::Record {
    mutable std::mutex mu;
    Job job;
    std::string spec_text;
    std::string data_text;
    JobOptions opts;
    json transcript = json{{"events", json::array()}};
    fs::path dir;
};

JobService::JobService(ServiceConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.workers < 1) throw Error(ErrorCode::ValidationError, "need at least one worker");
    if (!cfg_.backend_factory)
        cfg_.backend_factory = [](const JobOptions& o) { return make_backend(o.backend, o.seed); };
    fs::create_directories(cfg_.data_dir / "jobs");
    recover();
    for (int i = 0; i < cfg_.workers; ++i) threads_.emplace_back([this] { worker(); });
}

JobService::~JobService() { stop(); }

void JobService::stop() {
    {
        std::lock_guard lock(mu_);
        if (stopping_) return;
        stopping_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_)
        if (t.joinable()) t.join();
}

void JobService::recover() {
    std::vector<std::shared_ptr<Record>> found;
    for (const auto& d : fs::directory_iterator(cfg_.data_dir / "jobs")) {
        if (!d.is_directory() || !fs::exists(d.path() / "request.json")) continue;
        auto r = std::make_shared<Record>();
        r->dir = d.path();
        json req;
        try {
            req = json::parse(read_file(d.path() / "request.json"));
            r->spec_text = req.at("spec").get<std::string>();
            r->data_text = req.at("data").get<std::string>();
            r->opts = job_options_from_json(req.at("config"));
            r->job.id = req.at("id").get<std::string>();
            r->job.inputs_digest = req.at("inputs_digest").get<std::string>();
            r->job.created_ms = req.at("created_ms").get<std::int64_t>();
        } catch (const std::exception&) {
            continue;  // the job never finished being created
        }
        r->job.updated_ms = r->job.created_ms;
        for (const auto& line : read_lines(d.path() / "state.jsonl")) {
            auto s = state_from_string(line.value("state", ""));
            if (!s) continue;
            r->job.state = *s;
            r->job.stage = line.value("stage", "");
            r->job.updated_ms = line.value("ts", r->job.updated_ms);
            if (line.contains("error")) {
                r->job.error_code = error_code_from_string(line["error"].value("code", ""));
                r->job.error_message = line["error"].value("detail", "");
                r->job.error_stage = line["error"].value("stage", "");
            }
        }
        for (const auto& line : read_lines(d.path() / "chat.jsonl")) {
            ChatTurn t;
            t.message = line.value("message", "");
            t.version = line.value("version", 0);
            t.edited = line.value("edited", std::size_t{0});
            t.unverifiable = line.value("unverifiable", std::size_t{0});
            t.timestamp_ms = line.value("timestamp_ms", std::int64_t{0});
            r->job.chat.push_back(t);
        }
        if (fs::exists(d.path() / "transcript.json")) {
            try {
                r->transcript = json::parse(read_file(d.path() / "transcript.json"));
            } catch (const json::exception&) {
            }
        }
        if (r->job.state == JobState::Running) {
            r->job.state = JobState::Failed;
            r->job.error_code = ErrorCode::BackendError;
            r->job.error_message = "interrupted by a restart";
            r->job.error_stage = r->job.stage;
            persist_state(*r);
        } else if (r->job.state == JobState::Done) {
            // the newest summary version is the current result
            int best = 0;
            for (const auto& f : fs::directory_iterator(d.path())) {
                const auto name = f.path().filename().string();
                if (name.rfind("summary.v", 0) == 0 && name.size() > 14 && name.substr(name.size() - 5) == ".json")
                    best = std::max(best, std::atoi(name.c_str() + 9));
            }
            try {
                if (best == 0) throw Error(ErrorCode::MalformedDocument, "no summary file");
                r->job.result = deserialize(read_file(d.path() / ("summary.v" + std::to_string(best) + ".json")));
            } catch (const Error& e) {
                r->job.state = JobState::Failed;
                r->job.error_code = e.code();
                r->job.error_message = "stored summary is unreadable: " + e.detail();
                persist_state(*r);
            }
        }
        found.push_back(r);
    }
    std::sort(found.begin(), found.end(),
              [](const auto& a, const auto& b) { return a->job.created_ms < b->job.created_ms; });
    std::lock_guard lock(mu_);
    for (auto& r : found) {
        if (r->job.state == JobState::Queued) queue_.push_back(r->job.id);
        jobs_[r->job.id] = r;
    }
}

void JobService::persist_state(Record& r) {
    json line{{"state", std::string(to_string(r.job.state))}, {"stage", r.job.stage}, {"ts", r.job.updated_ms}};
    if (r.job.error_code)
        line["error"] = {{"code", std::string(to_string(*r.job.error_code))},
                         {"detail", r.job.error_message},
                         {"stage", r.job.error_stage}};
    append_line(r.dir / "state.jsonl", line);
}

std::string JobService::submit(const json& payload) {
    if (!payload.is_object()) throw Error(ErrorCode::ValidationError, "payload must be a JSON object");
    if (!payload.contains("spec")) throw Error(ErrorCode::ValidationError, "payload needs a spec");
    const json& spec = payload["spec"];
    std::string spec_text;
    if (spec.is_string()) spec_text = spec.get<std::string>();
    else if (spec.is_object()) spec_text = spec.dump(2);
    else throw Error(ErrorCode::ValidationError, "spec must be an object or text");
    std::string data_text;
    if (payload.contains("data") && !payload["data"].is_null()) {
        if (!payload["data"].is_string()) throw Error(ErrorCode::ValidationError, "data must be CSV text");
        data_text = payload["data"].get<std::string>();
    }
    const JobOptions opts = job_options_from_json(payload.value("config", json()));
    try {
        load_chart(spec_text, data_text);
    } catch (const Error& e) {
        throw Error(ErrorCode::ValidationError, std::string(to_string(e.code())) + ": " + e.detail());
    }

    auto r = std::make_shared<Record>();
    r->spec_text = std::move(spec_text);
    r->data_text = std::move(data_text);
    r->opts = opts;
    r->job.id = new_id();
    r->job.inputs_digest = sha256_hex(r->spec_text + "\n" + r->data_text + "\n" + to_json(opts).dump());
    r->job.created_ms = r->job.updated_ms = now_ms();
    r->dir = cfg_.data_dir / "jobs" / r->job.id;
    fs::create_directories(r->dir);
    write_atomic(r->dir / "request.json", json{{"id", r->job.id},
                                              {"spec", r->spec_text},
                                              {"data", r->data_text},
                                              {"config", to_json(opts)},
                                              {"inputs_digest", r->job.inputs_digest},
                                              {"created_ms", r->job.created_ms}}
                                             .dump(2));
    persist_state(*r);
    {
        std::lock_guard lock(mu_);
        jobs_[r->job.id] = r;
        queue_.push_back(r->job.id);
    }
    cv_.notify_all();
    return r->job.id;
}

std::shared_ptr<JobService::Record> JobService::find(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) throw Error(ErrorCode::NotFound, "no job '" + id + "'");
    return it->second;
}

Job JobService::status(const std::string& id) const {
    auto r = find(id);
    std::lock_guard lock(r->mu);
    return r->job;
}

std::vector<Job> JobService::list() const {
    std::vector<std::shared_ptr<Record>> all;
    {
        std::lock_guard lock(mu_);
        for (const auto& [id, r] : jobs_) all.push_back(r);
    }
    std::vector<Job> out;
    for (const auto& r : all) {
        std::lock_guard lock(r->mu);
        out.push_back(r->job);
    }
    std::sort(out.begin(), out.end(), [](const Job& a, const Job& b) { return a.created_ms < b.created_ms; });
    return out;
}

SummaryDoc JobService::summary(const std::string& id) const {
    auto r = find(id);
    std::lock_guard lock(r->mu);
    if (r->job.state != JobState::Done || !r->job.result)
        throw Error(ErrorCode::JobNotDone, "job is " + std::string(to_string(r->job.state)));
    return *r->job.result;
}

json JobService::transcript(const std::string& id) const {
    auto r = find(id);
    std::lock_guard lock(r->mu);
    return r->transcript;
}

json JobService::chart(const std::string& id) const {
    auto r = find(id);
    std::string spec, data;
    {
        std::lock_guard lock(r->mu);
        spec = r->spec_text;
        data = r->data_text;
    }
    auto c = load_chart(spec, data);
    return {{"spec", json::parse(spec)}, {"data", to_json(c.data)}, {"csv", data}};
}

bool JobService::wait(const std::string& id, std::chrono::milliseconds timeout) const {
    auto r = find(id);
    std::unique_lock lock(mu_);
    return cv_.wait_for(lock, timeout, [&] {
        std::lock_guard inner(r->mu);
        return r->job.state == JobState::Done || r->job.state == JobState::Failed;
    });
}

void JobService::worker() {
    for (;;) {
        std::shared_ptr<Record> r;
        {
            std::unique_lock lock(mu_);
            cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
            if (stopping_) return;
            r = jobs_.at(queue_.front());
            queue_.pop_front();
        }
        execute(r);
        cv_.notify_all();
    }
}

void JobService::execute(const std::shared_ptr<Record>& r) {
    std::string spec, data;
    JobOptions opts;
    {
        std::lock_guard lock(r->mu);
        if (r->job.state != JobState::Queued) return;
        spec = r->spec_text;
        data = r->data_text;
        opts = r->opts;
    }
    auto set_stage = [&](std::string_view stage) {
        {
            std::lock_guard lock(r->mu);
            r->job.state = JobState::Running;
            r->job.stage = std::string(stage);
            r->job.updated_ms = now_ms();
            persist_state(*r);
        }
        cv_.notify_all();
    };
    set_stage("ingest");
    try {
        auto backend = cfg_.backend_factory(opts);
        PipelineConfig pc = opts.pipeline();
        pc.on_stage = set_stage;
        auto res = run_pipeline(spec, data, pc, *backend);
        const json tj = res.transcript.to_json();
        write_atomic(r->dir / ("summary.v" + std::to_string(res.summary.version) + ".json"), serialize(res.summary));
        write_atomic(r->dir / "transcript.json", tj.dump());
        std::lock_guard lock(r->mu);
        r->transcript = tj;
        r->job.result = std::move(res.summary);
        r->job.state = JobState::Done;
        r->job.stage.clear();
        r->job.updated_ms = now_ms();
        persist_state(*r);
    } catch (const Error& e) {
        std::lock_guard lock(r->mu);
        r->job.state = JobState::Failed;
        r->job.error_code = e.code();
        r->job.error_message = e.detail();
        r->job.error_stage = e.stage().empty() ? r->job.stage : e.stage();
        r->job.stage.clear();
        r->job.updated_ms = now_ms();
        persist_state(*r);
    } catch (const std::exception& e) {
        std::lock_guard lock(r->mu);
        r->job.state = JobState::Failed;
        r->job.error_code = ErrorCode::BackendError;
        r->job.error_message = e.what();
        r->job.error_stage = r->job.stage;
        r->job.stage.clear();
        r->job.updated_ms = now_ms();
        persist_state(*r);
    }
}

SummaryDoc JobService::chat(const std::string& id, const std::string& message) {
    auto r = find(id);
    // one chat at a time per job; status readers only take the lock briefly
    static std::mutex chat_mu;
    std::lock_guard chat_lock(chat_mu);
    SummaryDoc current;
    std::string spec, data;
    JobOptions opts;
    Transcript t;
    {
        std::lock_guard lock(r->mu);
        if (r->job.state != JobState::Done || !r->job.result)
            throw Error(ErrorCode::JobNotDone, "job is " + std::string(to_string(r->job.state)));
        current = *r->job.result;
        spec = r->spec_text;
        data = r->data_text;
        opts = r->opts;
    }
    const auto chart = load_chart(spec, data);
    const auto facts = analyze(chart.data);
    auto backend = cfg_.backend_factory(opts);
    PipelineConfig pc = opts.pipeline();
    SummaryDoc next = chat_refine(current, message, facts, chart.l1, pc, *backend, &t);
    if (next.version == current.version) return current;

    ChatTurn turn;
    turn.message = message;
    turn.version = next.version;
    turn.timestamp_ms = now_ms();
    for (const auto& s : next.sentences)
        if (s.flags.edited && std::none_of(current.sentences.begin(), current.sentences.end(),
                                           [&](const Sentence& o) { return o.text == s.text && o.flags.edited; })) {
            ++turn.edited;
            if (s.flags.unverifiable) ++turn.unverifiable;
        }

    write_atomic(r->dir / ("summary.v" + std::to_string(next.version) + ".json"), serialize(next));
    std::lock_guard lock(r->mu);
    const json added = t.to_json();
    for (const auto& e : added["events"]) r->transcript["events"].push_back(e);
    write_atomic(r->dir / "transcript.json", r->transcript.dump());
    append_line(r->dir / "chat.jsonl", to_json(turn));
    r->job.chat.push_back(turn);
    r->job.result = next;
    r->job.updated_ms = now_ms();
    return next;
}

// ---- http ------------------------------------------------------------------------

int http_status(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::NotFound: return 404;
        case ErrorCode::JobNotDone: return 409;
        case ErrorCode::AuthError: return 401;
        case ErrorCode::BackendError:
        case ErrorCode::Timeout:
        case ErrorCode::RateLimited: return 502;
        case ErrorCode::ValidationError:
        case ErrorCode::UsageError:
        case ErrorCode::LayoutError:
        case ErrorCode::SchemaError:
        case ErrorCode::EmptyCorpus: return 400;
        default: return 500;
    }
}

json error_json(const Error& e) {
    json err{{"code", std::string(to_string(e.code()))}, {"detail", e.detail()}};
    if (!e.stage().empty()) err["stage"] = e.stage();
    return {{"error", err}};
}

struct HttpServer::Impl {
    JobService& svc;
    HttpOptions opts;
    httplib::Server srv;
    std::thread thread;
    int port = 0;

    Impl(JobService& s, HttpOptions o) : svc(s), opts(std::move(o)) {}

    static void send(httplib::Response& res, int status, const json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    template <class F>
    httplib::Server::Handler guard(F f) {
        return [this, f](const httplib::Request& req, httplib::Response& res) {
            if (opts.token && req.get_header_value("Authorization") != "Bearer " + *opts.token) {
                send(res, 401, {{"error", {{"code", "AuthError"}, {"detail", "missing or wrong token"}}}});
                return;
            }
            try {
                f(req, res);
            } catch (const Error& e) {
                send(res, http_status(e.code()), error_json(e));
            } catch (const json::exception& e) {
                send(res, 400, {{"error", {{"code", "ValidationError"}, {"detail", e.what()}}}});
            } catch (const std::exception& e) {
                send(res, 500, {{"error", {{"code", "InternalError"}, {"detail", e.what()}}}});
            }
        };
    }

    static json body_of(const httplib::Request& req) {
        if (req.body.empty()) return json::object();
        try {
            return json::parse(req.body);
        } catch (const json::exception& e) {
            throw Error(ErrorCode::ValidationError, std::string("body is not JSON: ") + e.what());
        }
    }

    void routes() {
        srv.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                 {"Access-Control-Allow-Headers", "Content-Type, Authorization"},
                                 {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
        srv.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
        srv.Get("/health", [](const httplib::Request&, httplib::Response& res) {
            send(res, 200, {{"status", "ok"}, {"schema_version", kSummarySchemaVersion}});
        });
        srv.Post("/jobs", guard([this](const httplib::Request& req, httplib::Response& res) {
                     const auto id = svc.submit(body_of(req));
                     send(res, 202, to_json(svc.status(id)));
                 }));
        srv.Get("/jobs", guard([this](const httplib::Request&, httplib::Response& res) {
                    json all = json::array();
                    for (const auto& j : svc.list()) all.push_back(to_json(j));
                    send(res, 200, {{"jobs", all}});
                }));
        srv.Get(R"(/jobs/([0-9a-f]+))", guard([this](const httplib::Request& req, httplib::Response& res) {
                    send(res, 200, to_json(svc.status(req.matches[1])));
                }));
        srv.Get(R"(/jobs/([0-9a-f]+)/summary)", guard([this](const httplib::Request& req, httplib::Response& res) {
                    send(res, 200, to_json(svc.summary(req.matches[1])));
                }));
        srv.Get(R"(/jobs/([0-9a-f]+)/transcript)", guard([this](const httplib::Request& req, httplib::Response& res) {
                    send(res, 200, svc.transcript(req.matches[1]));
                }));
        srv.Get(R"(/jobs/([0-9a-f]+)/chart)", guard([this](const httplib::Request& req, httplib::Response& res) {
                    send(res, 200, svc.chart(req.matches[1]));
                }));
        srv.Get(R"(/jobs/([0-9a-f]+)/chat)", guard([this](const httplib::Request& req, httplib::Response& res) {
                    json turns = json::array();
                    for (const auto& t : svc.status(req.matches[1]).chat) turns.push_back(to_json(t));
                    send(res, 200, {{"turns", turns}});
                }));
        srv.Post(R"(/jobs/([0-9a-f]+)/chat)", guard([this](const httplib::Request& req, httplib::Response& res) {
                     const json body = body_of(req);
                     if (!body.contains("message") || !body["message"].is_string())
                         throw Error(ErrorCode::ValidationError, "chat needs a message string");
                     const std::string id = req.matches[1];
                     auto doc = svc.chat(id, body["message"].get<std::string>());
                     const auto job = svc.status(id);
                     json turn = job.chat.empty() || job.chat.back().version != doc.version ? json(nullptr)
                                                                                             : to_json(job.chat.back());
                     send(res, 200, {{"summary", to_json(doc)}, {"turn", turn}});
                 }));
        srv.Post("/evaluate", guard([](const httplib::Request& req, httplib::Response& res) {
                     const json body = body_of(req);
                     if (!body.contains("corpus") || !body["corpus"].is_string())
                         throw Error(ErrorCode::ValidationError, "evaluate needs a corpus path");
                     auto corpus = load_corpus(body["corpus"].get<std::string>());
                     EvalOptions o;
                     const std::string only = body.value("metrics_only", "");
                     if (only == "diversity") o.quality = false;
                     else if (only == "quality") o.diversity = false;
                     else if (!only.empty()) throw Error(ErrorCode::ValidationError, "metrics_only is diversity or quality");
                     std::unique_ptr<Backend> mock;
                     if (body.value("pipeline", false)) {
                         mock = make_backend("mock", body.value("seed", std::uint64_t{7}));
                         o.pipeline_backend = mock.get();
                     }
                     auto report = run_eval(corpus, o);
                     json errors = json::array();
                     for (const auto& e : corpus.errors)
                         errors.push_back({{"chart_id", e.chart_id}, {"code", std::string(to_string(e.code))}, {"detail", e.message}});
                     send(res, 200, {{"report", to_json(report)}, {"table", format_table(report)}, {"errors", errors}});
                 }));
    }
};

HttpServer::HttpServer(JobService& service, HttpOptions opts) : impl_(std::make_unique<Impl>(service, std::move(opts))) {
    impl_->routes();
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start() {
    if (impl_->opts.port == 0) impl_->port = impl_->srv.bind_to_any_port(impl_->opts.host);
    else if (impl_->srv.bind_to_port(impl_->opts.host, impl_->opts.port)) impl_->port = impl_->opts.port;
    else impl_->port = -1;
    if (impl_->port <= 0) throw Error(ErrorCode::ValidationError, "cannot bind " + impl_->opts.host);
    impl_->thread = std::thread([this] { impl_->srv.listen_after_bind(); });
    impl_->srv.wait_until_ready();
    return impl_->port;
}

void HttpServer::run() {
    if (!impl_->srv.listen(impl_->opts.host, impl_->opts.port))
        throw Error(ErrorCode::ValidationError, "cannot listen on " + impl_->opts.host + ":" + std::to_string(impl_->opts.port));
}

void HttpServer::stop() {
    if (!impl_) return;
    impl_->srv.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace chartinsight
