#include "chartinsight/backend.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "chartinsight/error.hpp"

namespace chartinsight {

using nlohmann::json;

std::string_view to_string(AgentTag t) noexcept {
    switch (t) {
        case AgentTag::Uni: return "uni";
        case AgentTag::Multi: return "multi";
        case AgentTag::Writer: return "writer";
        case AgentTag::SelfCheck: return "selfcheck";
        case AgentTag::Chat: return "chat";
    }
    return "uni";
}

std::optional<AgentTag> agent_tag_from_string(std::string_view s) noexcept {
    for (auto t : {AgentTag::Uni, AgentTag::Multi, AgentTag::Writer, AgentTag::SelfCheck, AgentTag::Chat})
        if (to_string(t) == s) return t;
    return std::nullopt;
}

std::string build_user_prompt(std::string_view instructions, const json& payload) {
    std::string out(instructions);
    while (!out.empty() && (out.back() == '\n' || out.back() == ' ')) out.pop_back();
    out += "\n\n";
    out += kPayloadMarker;
    out += '\n';
    out += payload.dump(2);
    out += '\n';
    return out;
}

std::optional<json> payload_of(std::string_view user_prompt) {
    auto pos = user_prompt.rfind(kPayloadMarker);
    if (pos == std::string_view::npos) return std::nullopt;
    auto body = user_prompt.substr(pos + kPayloadMarker.size());
    json j = json::parse(body, nullptr, false);
    if (j.is_discarded()) return std::nullopt;
    return j;
}

std::optional<json> json_in_response(std::string_view text) {
    // Try each '{' in turn, scanning to its balanced close.
    for (std::size_t start = text.find('{'); start != std::string_view::npos; start = text.find('{', start + 1)) {
        int depth = 0;
        bool in_string = false, escaped = false;
        for (std::size_t i = start; i < text.size(); ++i) {
            const char c = text[i];
            if (in_string) {
                if (escaped) escaped = false;
                else if (c == '\\') escaped = true;
                else if (c == '"') in_string = false;
                continue;
            }
            if (c == '"') in_string = true;
            else if (c == '{') ++depth;
            else if (c == '}' && --depth == 0) {
                json j = json::parse(text.substr(start, i - start + 1), nullptr, false);
                if (!j.is_discarded() && j.is_object()) return j;
                break;
            }
        }
    }
    return std::nullopt;
}

// ---- prompt pack ----------------------------------------------------------------

namespace {

struct DefaultPrompt {
    AgentTag tag;
    const char* role;
    const char* instructions;
};

const DefaultPrompt kDefaults[] = {
    {AgentTag::Uni,
     "You are the Uni-Insighter, a data analyst who describes one line of a time-series chart. "
     "You never invent numbers: every value you write must come from the insight record you are given.",
     "Task \"verbalize\": describe the dimension in the record as short plain sentences. Cover each run of "
     "patches that move in the same direction with its start and end value and time (\"X rose from 0.3 in Oct "
     "2002 to 2.4 in Jan 2006.\"), name stable, fluctuating, oscillating or cyclic patches with their time span, "
     "and state the global maximum and minimum with their times. Use \"sharply\" only for changes whose range "
     "is at least significance_ratio of reference_range. Reply with the sentences only."},
    {AgentTag::Multi,
     "You are the Multi-Insighter, an analyst who compares the lines of a multi-dimensional time-series chart "
     "and reports relations and shared or contrasting trends.",
     "Task \"candidates\": review the computed record and return your reading of it as JSON {\"record\": ...} "
     "in the same schema, keeping only insights you agree with and adding any you find missing. "
     "Task \"synthesize\": turn the listed insights into plain sentences, one insight per sentence, using the "
     "given time labels. Reply with JSON for candidates and with sentences only for synthesize."},
    {AgentTag::Writer,
     "You are the Writer. You compose clear chart summaries from insight prose and the chart specification "
     "without adding facts of your own.",
     "Task \"draft\": start with one sentence naming the chart type, title, axes and series, then integrate the "
     "uni-dimensional prose and the multi-dimensional prose. Task \"integrate\": add the new sentences in "
     "\"additions\" to \"text\" without dropping or changing any existing fact. Reply with the summary only."},
    {AgentTag::SelfCheck,
     "You are the Self-consistency Checker. You read summary sentences and list their factual claims in a "
     "fixed JSON schema, or repair a sentence exactly as instructed.",
     "Task \"extract\": reply with JSON {\"claims\": [...]} where each claim has \"kind\" (extremum, numeric, "
     "trend, range, multi, significance) and the kind's fields: extremum {which: max|min, dimension, value, "
     "value_text, time}; numeric {statistic: mean|growth_rate|value_at, dimension, value, time}; trend "
     "{trend: rising|falling|stable|change|oscillating|cyclic, dimension, word, time}; range {trend, dimension, "
     "start, end}; multi {assert: same_relation|contrast_relation|same_trend|contrast_trend|gap_widening|"
     "gap_narrowing|attribute, pair, above, time}; significance {dimension, asserted: significant|minor, word, "
     "time}. Times are the phrases as written; omit time for the whole chart. Task \"rewrite\": apply every "
     "replacement to the sentence and reply with the corrected sentence only. Task \"classify_level\": reply "
     "{\"level\": \"L1\"|\"L2\"|\"L3\"}."},
    {AgentTag::Chat,
     "You are the Writer answering a user's request to change a chart summary. You only use values present "
     "in the data you are given.",
     "Task \"edit\": apply the user's message to the summary sentences and reply with the full revised summary "
     "only. Keep sentences the message does not concern unchanged."},
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return {};
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

PromptPack::PromptPack() {
    for (const auto& d : kDefaults) {
        role_[d.tag] = d.role;
        instructions_[d.tag] = d.instructions;
    }
}

PromptPack PromptPack::load(const std::string& directory) {
    PromptPack pack;
    for (const auto& d : kDefaults) {
        const std::string text = read_file(directory + "/" + std::string(to_string(d.tag)) + ".txt");
        if (text.empty()) continue;
        // Role text, a line holding "---", then the instructions.
        auto sep = text.find("\n---\n");
        if (sep == std::string::npos) {
            pack.instructions_[d.tag] = text;
        } else {
            pack.role_[d.tag] = text.substr(0, sep);
            pack.instructions_[d.tag] = text.substr(sep + 5);
        }
    }
    return pack;
}

const std::string& PromptPack::role(AgentTag tag) const { return role_.at(tag); }
const std::string& PromptPack::instructions(AgentTag tag) const { return instructions_.at(tag); }

// ---- factory --------------------------------------------------------------------

namespace {

std::optional<std::string> env(const char* name) {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    return std::string(v);
}

}  // namespace

std::unique_ptr<Backend> make_backend(std::optional<std::string> kind, std::optional<std::uint64_t> seed) {
    const std::string k = kind.value_or(env("CI_BACKEND").value_or("mock"));
    if (k == "mock") {
        MockOptions o;
        if (seed) o.seed = *seed;
        else if (auto s = env("CI_SEED")) o.seed = std::strtoull(s->c_str(), nullptr, 10);
        return std::make_unique<MockBackend>(o);
    }
    if (k == "remote") {
        RemoteOptions o;
        o.endpoint = env("CI_ENDPOINT").value_or("");
        o.api_key = env("CI_API_KEY").value_or("");
        if (auto m = env("CI_MODEL")) o.model = *m;
        if (o.endpoint.empty()) throw Error(ErrorCode::BackendError, "CI_ENDPOINT is not set");
        return std::make_unique<RemoteBackend>(o);
    }
    throw Error(ErrorCode::BackendError, "unknown backend '" + k + "' (expected mock or remote)");
}

}  // namespace chartinsight
