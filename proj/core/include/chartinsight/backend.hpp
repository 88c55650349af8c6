#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace chartinsight {

enum class AgentTag { Uni, Multi, Writer, SelfCheck, Chat };

std::string_view to_string(AgentTag t) noexcept;
std::optional<AgentTag> agent_tag_from_string(std::string_view s) noexcept;

struct GenRequest {
    std::string role_prompt;
    std::string user_prompt;
    double temperature = 0.7;
    std::optional<std::uint64_t> seed;
    int max_tokens = 1024;
    AgentTag tag = AgentTag::Uni;
};

struct Usage {
    int prompt_tokens = 0;
    int completion_tokens = 0;
};

struct GenResponse {
    std::string text;
    Usage usage;
    std::string backend_id;
    std::chrono::milliseconds latency{0};
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual GenResponse complete(const GenRequest& req) = 0;
    /// True when identical requests always produce identical text.
    virtual bool deterministic() const = 0;
    virtual std::string id() const = 0;
};

/// Structured requests carry their data as a JSON block after this marker.
inline constexpr std::string_view kPayloadMarker = "### PAYLOAD";

std::string build_user_prompt(std::string_view instructions, const nlohmann::json& payload);
std::optional<nlohmann::json> payload_of(std::string_view user_prompt);

/// Parse the first JSON object in a response, tolerating code fences and
/// surrounding prose.
std::optional<nlohmann::json> json_in_response(std::string_view text);

/// One editable instruction file per agent tag; compiled-in defaults are used
/// for files that are absent.
class PromptPack {
public:
    PromptPack();
    static PromptPack load(const std::string& directory);

    const std::string& role(AgentTag tag) const;
    const std::string& instructions(AgentTag tag) const;

private:
    std::map<AgentTag, std::string> role_;
    std::map<AgentTag, std::string> instructions_;
};

struct MockOptions {
    std::uint64_t seed = 7;
    /// The first uni verbalization misstates the maximum.
    bool corrupt_first_uni = false;
    /// Multi candidates always propose an insight nobody has seen.
    bool always_novel = false;
    /// Selfcheck rewrites keep the original sentence, forcing the fallback.
    bool refuse_rewrites = false;
};

/// Deterministic template backend. Output depends only on the request and
/// the seed; every number it writes comes from the payload.
class MockBackend final : public Backend {
public:
    explicit MockBackend(MockOptions opts = {});
    GenResponse complete(const GenRequest& req) override;
    bool deterministic() const override { return true; }
    std::string id() const override { return "mock"; }
    std::size_t calls() const noexcept { return calls_.load(); }

private:
    MockOptions opts_;
    std::atomic<std::size_t> calls_{0};
    std::atomic<std::size_t> uni_calls_{0};
    std::atomic<std::uint64_t> novel_counter_{0};
};

struct RemoteOptions {
    std::string endpoint;  // e.g. https://api.example.com/v1/chat/completions
    std::string api_key;
    std::string model = "gpt-4o";
    int max_retries = 3;
    std::chrono::milliseconds initial_backoff{500};
    std::chrono::seconds timeout{60};
    int max_parallel = 4;
};

/// Chat-completions client. Retries transient failures with exponential
/// backoff; authentication failures are never retried.
class RemoteBackend final : public Backend {
public:
    explicit RemoteBackend(RemoteOptions opts);
    ~RemoteBackend() override;
    GenResponse complete(const GenRequest& req) override;
    bool deterministic() const override { return false; }
    std::string id() const override { return "remote:" + opts_.model; }

    /// Total HTTP requests issued by every remote backend in the process.
    static std::size_t network_calls() noexcept;

private:
    struct Impl;
    RemoteOptions opts_;
    std::unique_ptr<Impl> impl_;
};

/// Backend from CI_BACKEND / CI_ENDPOINT / CI_API_KEY / CI_MODEL / CI_SEED,
/// with explicit overrides taking precedence. Defaults to the mock.
std::unique_ptr<Backend> make_backend(std::optional<std::string> kind = std::nullopt,
                                      std::optional<std::uint64_t> seed = std::nullopt);

}  // namespace chartinsight
