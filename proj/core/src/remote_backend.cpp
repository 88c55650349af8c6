#include <httplib.h>

#include <condition_variable>
#include <mutex>
#include <regex>
#include <thread>

#include "chartinsight/backend.hpp"
#include "chartinsight/error.hpp"

namespace chartinsight {

using nlohmann::json;

namespace {

std::atomic<std::size_t> g_network_calls{0};

class Gate {
public:
    explicit Gate(int n) : free_(n > 0 ? n : 1) {}
    void acquire() {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return free_ > 0; });
        --free_;
    }
    void release() {
        {
            std::lock_guard lock(mu_);
            ++free_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    int free_;
};

struct Slot {
    Gate& g;
    explicit Slot(Gate& gate) : g(gate) { g.acquire(); }
    ~Slot() { g.release(); }
};

int estimate_tokens(std::string_view s) { return static_cast<int>(s.size() / 4 + 1); }

}  // namespace

struct RemoteBackend::Impl {
    std::string base;  // scheme://host[:port]
    std::string path;
    Gate gate;
    explicit Impl(int parallel) : gate(parallel) {}
};

RemoteBackend::RemoteBackend(RemoteOptions opts) : opts_(std::move(opts)), impl_(std::make_unique<Impl>(opts_.max_parallel)) {
    static const std::regex url("^(https?://[^/]+)(/.*)?$", std::regex::icase);
    std::smatch m;
    if (!std::regex_match(opts_.endpoint, m, url))
        throw Error(ErrorCode::BackendError, "endpoint must be an http(s) URL: '" + opts_.endpoint + "'");
    impl_->base = m[1].str();
    impl_->path = m[2].matched ? m[2].str() : "/v1/chat/completions";
}

RemoteBackend::~RemoteBackend() = default;

std::size_t RemoteBackend::network_calls() noexcept { return g_network_calls.load(); }

GenResponse RemoteBackend::complete(const GenRequest& req) {
    json body = {{"model", opts_.model},
                 {"messages",
                  {{{"role", "system"}, {"content", req.role_prompt}}, {{"role", "user"}, {"content", req.user_prompt}}}},
                 {"temperature", req.temperature},
                 {"max_tokens", req.max_tokens}};
    if (req.seed) body["seed"] = *req.seed;
    const std::string payload = body.dump();

    httplib::Headers headers;
    if (!opts_.api_key.empty()) headers.emplace("Authorization", "Bearer " + opts_.api_key);

    auto backoff = opts_.initial_backoff;
    ErrorCode last_code = ErrorCode::BackendError;
    std::string last_msg;
    for (int attempt = 0; attempt <= opts_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        const auto t0 = std::chrono::steady_clock::now();
        httplib::Result res;
        {
            Slot slot(impl_->gate);
            httplib::Client cli(impl_->base);
            cli.set_connection_timeout(opts_.timeout);
            cli.set_read_timeout(opts_.timeout);
            cli.set_write_timeout(opts_.timeout);
            ++g_network_calls;
            res = cli.Post(impl_->path, headers, payload, "application/json");
        }
        if (!res) {
            const auto err = res.error();
            last_code = (err == httplib::Error::Read || err == httplib::Error::Write ||
                         err == httplib::Error::ConnectionTimeout)
                            ? ErrorCode::Timeout
                            : ErrorCode::BackendError;
            last_msg = "request failed: " + httplib::to_string(err);
            continue;
        }
        const int status = res->status;
        if (status == 401 || status == 403)
            throw Error(ErrorCode::AuthError, "authentication failed (HTTP " + std::to_string(status) + ")");
        if (status == 429) {
            last_code = ErrorCode::RateLimited;
            last_msg = "rate limited (HTTP 429)";
            continue;
        }
        if (status == 408 || status >= 500) {
            last_code = status == 408 || status == 504 ? ErrorCode::Timeout : ErrorCode::BackendError;
            last_msg = "server error (HTTP " + std::to_string(status) + ")";
            continue;
        }
        if (status != 200) throw Error(ErrorCode::BackendError, "HTTP " + std::to_string(status) + ": " + res->body);

        json j = json::parse(res->body, nullptr, false);
        if (j.is_discarded() || !j.contains("choices") || j["choices"].empty())
            throw Error(ErrorCode::BackendError, "unexpected response body");
        GenResponse out;
        out.text = j["choices"][0]["message"].value("content", "");
        if (out.text.empty()) throw Error(ErrorCode::BackendError, "empty completion");
        if (j.contains("usage")) {
            out.usage.prompt_tokens = j["usage"].value("prompt_tokens", 0);
            out.usage.completion_tokens = j["usage"].value("completion_tokens", 0);
        } else {
            out.usage = {estimate_tokens(req.role_prompt) + estimate_tokens(req.user_prompt),
                         estimate_tokens(out.text)};
        }
        out.backend_id = id();
        out.latency = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0);
        return out;
    }
    throw Error(last_code, last_msg + " after " + std::to_string(opts_.max_retries + 1) + " attempts");
}

}  // namespace chartinsight
