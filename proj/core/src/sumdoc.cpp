#include "chartinsight/sumdoc.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <regex>
#include <set>

#include "chartinsight/backend.hpp"
#include "chartinsight/error.hpp"
#include "chartinsight/ingest.hpp"
#include "chartinsight/temporal.hpp"

namespace chartinsight {

using nlohmann::json;

std::string_view to_string(Level l) noexcept {
    switch (l) {
        case Level::L1: return "L1";
        case Level::L2: return "L2";
        case Level::L3: return "L3";
    }
    return "L1";
}

std::optional<Level> level_from_string(std::string_view s) noexcept {
    if (s == "L1" || s == "l1") return Level::L1;
    if (s == "L2" || s == "l2") return Level::L2;
    if (s == "L3" || s == "l3") return Level::L3;
    return std::nullopt;
}

std::string_view to_string(RefKind k) noexcept {
    switch (k) {
        case RefKind::Point: return "point";
        case RefKind::Range: return "range";
        case RefKind::Comparison: return "comparison";
    }
    return "range";
}

std::string_view to_string(DocSource s) noexcept {
    switch (s) {
        case DocSource::Pipeline: return "pipeline";
        case DocSource::Gold: return "gold";
        case DocSource::ExternalModel: return "external-model";
    }
    return "pipeline";
}

std::string SummaryDoc::text() const {
    std::string out;
    for (const auto& s : sentences) {
        if (!out.empty()) out += ' ';
        out += s.text;
    }
    return out;
}

namespace {

std::string lower(std::string_view s) {
    std::string out;
    for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return out;
}

std::string trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
}

bool is_abbreviation(std::string_view word) {
    static const std::set<std::string> known = {"e.g", "i.e", "etc", "vs", "approx", "ca", "cf", "mr", "mrs", "ms",
                                                "dr", "st", "no", "fig", "jan", "feb", "mar", "apr", "jun", "jul",
                                                "aug", "sep", "sept", "oct", "nov", "dec", "u.s", "u.k", "inc",
                                                "corp", "ltd", "co", "approx", "est"};
    std::string w = lower(word);
    while (!w.empty() && !std::isalnum(static_cast<unsigned char>(w.front()))) w.erase(w.begin());
    if (known.count(w)) return true;
    // Single initials ("J. Smith").
    return w.size() == 1 && std::isalpha(static_cast<unsigned char>(w[0]));
}

}  // namespace

std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c != '.' && c != '!' && c != '?') continue;
        // Swallow runs like "?!" or "..." and closing quotes/brackets.
        std::size_t j = i + 1;
        while (j < text.size() && (text[j] == '.' || text[j] == '!' || text[j] == '?' || text[j] == '"' ||
                                   text[j] == '\'' || text[j] == ')'))
            ++j;
        if (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) continue;
        if (c == '.') {
            std::size_t w = i;
            while (w > start && !std::isspace(static_cast<unsigned char>(text[w - 1]))) --w;
            const auto word = text.substr(w, i - w);
            if (is_abbreviation(word)) {
                std::size_t k = j;
                while (k < text.size() && std::isspace(static_cast<unsigned char>(text[k]))) ++k;
                // Mid-sentence unless a capitalised word follows; initials never close.
                const bool initial = word.size() == 1;
                if (k < text.size() && (initial || !std::isupper(static_cast<unsigned char>(text[k])))) continue;
            }
        }
        auto s = trim(text.substr(start, j - start));
        if (!s.empty()) out.push_back(std::move(s));
        start = j;
        i = j - 1;
    }
    auto tail = trim(text.substr(std::min(start, text.size())));
    if (!tail.empty()) out.push_back(std::move(tail));
    return out;
}

namespace {

const std::regex& icase(const std::string& pattern) {
    thread_local std::map<std::string, std::regex> cache;
    auto it = cache.find(pattern);
    if (it == cache.end()) it = cache.emplace(pattern, std::regex(pattern, std::regex::icase)).first;
    return it->second;
}

bool matches(const std::string& s, const std::string& pattern) { return std::regex_search(s, icase(pattern)); }

const std::string kTrendWords =
    "\\b(ros[e]|ris(e|es|ing|en)|increas\\w*|grew|grow(s|ing)?|climb\\w*|upward|gain(ed|s)|rebound\\w*|"
    "recover\\w*|surg\\w*|spik\\w*|soar\\w*|jump\\w*|skyrocket\\w*|upturn|fell|fall(s|ing)?|declin\\w*|decreas\\w*|"
    "drop\\w*|downward|plung\\w*|slump\\w*|dip(s|ped)?|shrank|tumbl\\w*|sank|slid|crash\\w*|downturn|stable|"
    "stabili[sz]\\w*|flat|plateau\\w*|level(l)?ed off|fluctuat\\w*|oscillat\\w*|volatil\\w*|cyclic\\w*|seasonal\\w*|"
    "periodic\\w*|trend\\w*|steadily)\\b";
const std::string kRelationWords =
    "\\b(exceed\\w*|outperform\\w*|overtook|overtake\\w*|surpass\\w*|cross(ed|es|ing)?|intersect\\w*|"
    "(higher|lower) than|above|below|trail\\w*|lagg\\w*|together|in tandem|in parallel|same direction|"
    "(opposite|different) directions?|diverg\\w*|gap)\\b";
const std::string kStatWords =
    "\\b(maximum|minimum|highest|lowest|peak\\w*|trough|bottom\\w*|all-time|record (high|low)|average|mean|median|"
    "growth rate|percent|rate of)\\b|%";
const std::string kChartWords =
    "\\b(chart|graph|plot\\w*|axis|axes|x-axis|y-axis|legend|titled?|depict\\w*|display\\w*|shows?|illustrat\\w*|"
    "visuali[sz]\\w*|represent\\w*|encod\\w*|lines?|colou?r\\w*)\\b";

bool has_value_number(const std::string& s) {
    std::string masked = s;
    for (const auto& t : find_time_phrases(s))
        for (std::size_t i = t.offset; i < t.offset + t.text.size() && i < masked.size(); ++i) masked[i] = ' ';
    static const std::regex num("(^|[^\\w])\\d+(\\.\\d+)?");
    return std::regex_search(masked, num);
}

}  // namespace

std::optional<Level> classify_level_rules(std::string_view sentence, const L1Facts& l1) {
    const std::string s(sentence);
    if (matches(s, kTrendWords) || matches(s, kRelationWords)) return Level::L3;
    if (matches(s, kStatWords) || has_value_number(s)) return Level::L2;
    if (matches(s, kChartWords)) return Level::L1;
    const std::string low = lower(s);
    for (const auto& label : {l1.title, l1.x_label, l1.y_label})
        if (!label.empty() && low.find(lower(label)) != std::string::npos) return Level::L1;
    return std::nullopt;
}

Level classify_level(std::string_view sentence, const L1Facts& l1, Backend* backend) {
    if (auto l = classify_level_rules(sentence, l1)) return *l;
    if (!backend) return Level::L1;
    static const PromptPack defaults;
    GenRequest req;
    req.tag = AgentTag::SelfCheck;
    req.temperature = 0;
    req.role_prompt = defaults.role(AgentTag::SelfCheck);
    req.user_prompt = build_user_prompt(defaults.instructions(AgentTag::SelfCheck),
                                        json{{"task", "classify_level"}, {"sentence", std::string(sentence)}});
    auto resp = backend->complete(req);
    auto j = json_in_response(resp.text);
    if (!j || !j->contains("level") || !(*j)["level"].is_string())
        throw Error(ErrorCode::BackendError, "level classification returned no level");
    auto l = level_from_string((*j)["level"].get<std::string>());
    if (!l) throw Error(ErrorCode::BackendError, "unknown level '" + (*j)["level"].get<std::string>() + "'");
    return *l;
}

std::vector<std::string> mentioned_dimensions(std::string_view sentence, const std::vector<std::string>& dims) {
    const std::string low = lower(sentence);
    std::vector<std::string> out;
    for (const auto& d : dims) {
        const std::string ld = lower(d);
        if (ld.empty()) continue;
        for (std::size_t pos = low.find(ld); pos != std::string::npos; pos = low.find(ld, pos + 1)) {
            const bool left = pos == 0 || !std::isalnum(static_cast<unsigned char>(low[pos - 1]));
            const std::size_t e = pos + ld.size();
            const bool right = e >= low.size() || !std::isalnum(static_cast<unsigned char>(low[e])) ||
                               low.compare(e, 2, "'s") == 0;
            if (left && right) {
                out.push_back(d);
                break;
            }
        }
    }
    if (out.size() < 2 && dims.size() >= 2 && std::regex_search(low, icase("\\b(both|all)\\b"))) return dims;
    return out;
}

std::vector<DataRef> attach_data_refs(std::string_view sentence, const ChartFacts& facts) {
    const std::string s(sentence);
    const auto all = facts.data.dimension_names();
    auto dims = mentioned_dimensions(s, all);
    auto times = find_time_phrases(s);
    if (dims.empty() && times.empty()) return {};
    if (dims.empty()) dims = all;
    if (dims.empty()) return {};

    const bool comparison = dims.size() >= 2 && matches(s, "\\b(exceed\\w*|outperform\\w*|overtook|overtake\\w*|"
                                                           "surpass\\w*|cross\\w*|intersect\\w*|than|above|below|"
                                                           "trail\\w*|lagg\\w*|gap|compared|whereas|while)\\b");
    std::vector<std::pair<IndexRange, bool>> windows;  // window, precise
    for (const auto& t : times) {
        try {
            auto w = resolve_window(facts, t.text);
            auto span = parse_time_phrase(t.text);
            windows.push_back({w, span && !span->coarse && !span->range && !span->open_start && !span->open_end});
        } catch (const Error&) {
        }
    }
    if (windows.empty()) {
        if (!times.empty() && mentioned_dimensions(s, all).empty()) return {};
        windows.push_back({facts.data.full_range(), false});
    }

    std::vector<DataRef> out;
    for (const auto& [w, precise] : windows) {
        DataRef r;
        r.dimensions = dims;
        r.range = w;
        r.start_time = facts.data.display_label(w.first);
        r.end_time = facts.data.display_label(w.last);
        r.kind = comparison ? RefKind::Comparison : (precise && w.size() == 1 ? RefKind::Point : RefKind::Range);
        if (auto it = facts.patches.find(dims.front()); it != facts.patches.end())
            for (std::size_t i = 0; i < it->second.size(); ++i)
                if (it->second[i].range().overlaps(w)) r.patch_ids.push_back(i);
        if (std::find(out.begin(), out.end(), r) == out.end()) out.push_back(std::move(r));
    }
    return out;
}

SummaryDoc annotate(std::string_view text, const ChartFacts& facts, const L1Facts& l1, Backend* backend,
                    DocSource source) {
    SummaryDoc doc;
    doc.source = source;
    if (backend) doc.model = backend->id();
    for (auto& t : split_sentences(text)) {
        Sentence s;
        s.index = doc.sentences.size();
        s.level = classify_level(t, l1, backend);
        s.refs = attach_data_refs(t, facts);
        s.text = std::move(t);
        doc.sentences.push_back(std::move(s));
    }
    return doc;
}

void reindex(SummaryDoc& doc) {
    for (std::size_t i = 0; i < doc.sentences.size(); ++i) doc.sentences[i].index = i;
}

json to_json(const SummaryDoc& doc) {
    json sentences = json::array();
    for (const auto& s : doc.sentences) {
        json refs = json::array();
        for (const auto& r : s.refs)
            refs.push_back({{"dimensions", r.dimensions},
                            {"range", {r.range.first, r.range.last}},
                            {"start_time", r.start_time},
                            {"end_time", r.end_time},
                            {"patch_ids", r.patch_ids},
                            {"kind", std::string(to_string(r.kind))}});
        sentences.push_back({{"index", s.index},
                             {"text", s.text},
                             {"level", std::string(to_string(s.level))},
                             {"refs", std::move(refs)},
                             {"flags", {{"unverifiable", s.flags.unverifiable}, {"edited", s.flags.edited}}}});
    }
    return {{"schema_version", doc.schema_version},
            {"source", std::string(to_string(doc.source))},
            {"chart_id", doc.chart_id},
            {"model", doc.model},
            {"version", doc.version},
            {"sentences", std::move(sentences)}};
}

SummaryDoc summary_from_json(const json& j) {
    if (!j.is_object()) throw Error(ErrorCode::MalformedDocument, "summary must be a JSON object");
    if (!j.contains("schema_version") || !j["schema_version"].is_number_integer())
        throw Error(ErrorCode::MalformedDocument, "missing schema_version");
    const int v = j["schema_version"].get<int>();
    if (v != kSummarySchemaVersion)
        throw Error(ErrorCode::SchemaVersionMismatch,
                    "schema version " + std::to_string(v) + " (expected " + std::to_string(kSummarySchemaVersion) + ")");
    try {
        SummaryDoc doc;
        doc.schema_version = v;
        const std::string src = j.value("source", "pipeline");
        if (src == "pipeline") doc.source = DocSource::Pipeline;
        else if (src == "gold") doc.source = DocSource::Gold;
        else if (src == "external-model") doc.source = DocSource::ExternalModel;
        else throw Error(ErrorCode::MalformedDocument, "unknown source '" + src + "'");
        doc.chart_id = j.value("chart_id", "");
        doc.model = j.value("model", "");
        doc.version = j.value("version", 1);
        for (const auto& sj : j.at("sentences")) {
            Sentence s;
            s.index = sj.at("index").get<std::size_t>();
            s.text = sj.at("text").get<std::string>();
            auto lvl = level_from_string(sj.at("level").get<std::string>());
            if (!lvl) throw Error(ErrorCode::MalformedDocument, "unknown level");
            s.level = *lvl;
            for (const auto& rj : sj.value("refs", json::array())) {
                DataRef r;
                r.dimensions = rj.at("dimensions").get<std::vector<std::string>>();
                const auto& rg = rj.at("range");
                r.range = {rg.at(0).get<std::size_t>(), rg.at(1).get<std::size_t>()};
                r.start_time = rj.value("start_time", "");
                r.end_time = rj.value("end_time", "");
                r.patch_ids = rj.value("patch_ids", std::vector<std::size_t>{});
                const std::string k = rj.value("kind", "range");
                r.kind = k == "point" ? RefKind::Point : k == "comparison" ? RefKind::Comparison : RefKind::Range;
                s.refs.push_back(std::move(r));
            }
            if (sj.contains("flags")) {
                s.flags.unverifiable = sj["flags"].value("unverifiable", false);
                s.flags.edited = sj["flags"].value("edited", false);
            }
            doc.sentences.push_back(std::move(s));
        }
        return doc;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedDocument, e.what());
    }
}

std::string serialize(const SummaryDoc& doc) { return to_json(doc).dump(2); }

SummaryDoc deserialize(std::string_view bytes) {
    json j = json::parse(bytes, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::MalformedDocument, "summary is not valid JSON");
    return summary_from_json(j);
}

}  // namespace chartinsight
