#include "chartinsight/claims.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <mutex>
#include <regex>
#include <set>

#include "chartinsight/error.hpp"
#include "chartinsight/sumdoc.hpp"
#include "chartinsight/temporal.hpp"

namespace chartinsight {

using nlohmann::json;

std::string_view to_string(ClaimKind k) noexcept {
    switch (k) {
        case ClaimKind::Extremum: return "extremum";
        case ClaimKind::Numeric: return "numeric";
        case ClaimKind::TrendDirection: return "trend";
        case ClaimKind::Range: return "range";
        case ClaimKind::MultiTrend: return "multi";
        case ClaimKind::Significance: return "significance";
    }
    return "extremum";
}

std::optional<ClaimKind> claim_kind_from_string(std::string_view s) noexcept {
    for (auto k : {ClaimKind::Extremum, ClaimKind::Numeric, ClaimKind::TrendDirection, ClaimKind::Range,
                   ClaimKind::MultiTrend, ClaimKind::Significance})
        if (to_string(k) == s) return k;
    return std::nullopt;
}

std::string_view to_string(Statistic s) noexcept {
    switch (s) {
        case Statistic::Mean: return "mean";
        case Statistic::GrowthRate: return "growth_rate";
        case Statistic::ValueAt: return "value_at";
    }
    return "mean";
}

std::string_view to_string(MultiAssertion a) noexcept {
    switch (a) {
        case MultiAssertion::SameRelation: return "same_relation";
        case MultiAssertion::ContrastRelation: return "contrast_relation";
        case MultiAssertion::SameTrend: return "same_trend";
        case MultiAssertion::ContrastTrend: return "contrast_trend";
        case MultiAssertion::GapWidening: return "gap_widening";
        case MultiAssertion::GapNarrowing: return "gap_narrowing";
        case MultiAssertion::Attribute: return "attribute";
    }
    return "same_relation";
}

ClaimKind Claim::kind() const noexcept {
    return static_cast<ClaimKind>(body.index());
}

// ---- intensity words ------------------------------------------------------------

namespace {

const std::map<std::string, std::string>& soften_table() {
    static const std::map<std::string, std::string> t = {
        {"sharp", "gradual"},          {"sharply", "gradually"},     {"sharper", "more gradual"},
        {"dramatic", "modest"},        {"dramatically", "modestly"}, {"steep", "gentle"},
        {"steeply", "gently"},         {"significant", "slight"},    {"significantly", "slightly"},
        {"substantial", "slight"},     {"substantially", "slightly"}, {"massive", "modest"},
        {"marked", "slight"},          {"markedly", "slightly"},     {"rapid", "gradual"},
        {"rapidly", "gradually"},      {"major", "minor"},           {"plunge", "decline"},
        {"plunged", "declined"},       {"plunges", "declines"},      {"plunging", "declining"},
        {"soar", "rise"},              {"soared", "rose"},           {"soars", "rises"},
        {"soaring", "rising"},         {"surge", "rise"},            {"surged", "rose"},
        {"surges", "rises"},           {"surging", "rising"},        {"spike", "rise"},
        {"spiked", "rose"},            {"spikes", "rises"},          {"skyrocketed", "rose"},
        {"crash", "decline"},          {"crashed", "declined"},      {"tumble", "decline"},
        {"tumbled", "declined"}};
    return t;
}

const std::map<std::string, std::string>& strengthen_table() {
    static const std::map<std::string, std::string> t = {
        {"slight", "marked"},    {"slightly", "markedly"},     {"modest", "marked"},   {"modestly", "markedly"},
        {"gentle", "steep"},     {"gently", "steeply"},        {"gradual", "sharp"},   {"gradually", "sharply"},
        {"mild", "marked"},      {"mildly", "markedly"},       {"marginal", "marked"}, {"marginally", "markedly"},
        {"minor", "major"},      {"moderate", "marked"},       {"moderately", "markedly"}};
    return t;
}

std::string lower(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return out;
}

std::optional<std::string> lookup_cased(const std::map<std::string, std::string>& table, std::string_view word) {
    auto it = table.find(lower(word));
    if (it == table.end()) return std::nullopt;
    std::string out = it->second;
    if (!word.empty() && std::isupper(static_cast<unsigned char>(word[0])))
        out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
    return out;
}

}  // namespace

std::optional<std::string> soften_word(std::string_view word) { return lookup_cased(soften_table(), word); }
std::optional<std::string> strengthen_word(std::string_view word) { return lookup_cased(strengthen_table(), word); }

// ---- rule-based extraction ------------------------------------------------------

namespace {

struct Token {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::string text;
};

std::vector<Token> find_all(const std::string& text, const std::regex& re, int group = 0) {
    std::vector<Token> out;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator(); ++it) {
        const auto& m = *it;
        auto b = static_cast<std::size_t>(m.position(group));
        out.push_back({b, b + static_cast<std::size_t>(m.length(group)), m[group].str()});
    }
    return out;
}

const std::regex& rx(const char* pattern) {
    // Patterns are string literals with static storage; cache compiled forms.
    static std::map<const char*, std::regex> cache;
    static std::mutex mu;
    std::lock_guard lock(mu);
    auto it = cache.find(pattern);
    if (it == cache.end()) it = cache.emplace(pattern, std::regex(pattern, std::regex::icase)).first;
    return it->second;
}

constexpr const char* kRiseRe =
    "\\b(rose|rise|rises|rising|risen|increase|increased|increases|increasing|grew|grow|grows|growing|climb|"
    "climbed|climbing|climbs|upward|gained|gains|rebound|rebounded|rebounds|recovered|recovery|recovers|surge|"
    "surged|surges|surging|spike|spiked|spikes|soar|soared|soaring|soars|jump|jumped|jumps|skyrocketed|upturn|"
    "uptrend)\\b";
constexpr const char* kFallRe =
    "\\b(fell|fall|falls|falling|decline|declined|declines|declining|decrease|decreased|decreases|decreasing|drop|"
    "dropped|drops|dropping|downward|plunge|plunged|plunges|plunging|slump|slumped|slumps|dip|dipped|dips|shrank|"
    "tumble|tumbled|sank|slid|crash|crashed|downturn|downtrend)\\b";
constexpr const char* kStableRe =
    "\\b(stable|stabilized|stabilised|flat|plateau|plateaued|leveled off|levelled off|remained constant|unchanged)\\b";
constexpr const char* kChangeRe = "\\b(fluctuated|fluctuating|fluctuates|fluctuate|fluctuations?)\\b";
constexpr const char* kOscRe = "\\b(oscillated|oscillating|oscillates|oscillate|oscillations?|volatile|volatility)\\b";
constexpr const char* kCyclicRe = "\\b(cyclic|cyclical|cyclically|seasonal|seasonality|periodic|periodically)\\b";
constexpr const char* kIntenseRe =
    "\\b(sharp|sharply|sharper|dramatic|dramatically|steep|steeply|significant|significantly|substantial|"
    "substantially|massive|marked|markedly|rapid|rapidly|major|plunge|plunged|plunges|plunging|soar|soared|soars|"
    "soaring|surge|surged|surges|surging|spike|spiked|spikes|skyrocketed|crash|crashed|tumble|tumbled)\\b";
constexpr const char* kMildRe =
    "\\b(slight|slightly|modest|modestly|gentle|gently|gradual|gradually|mild|mildly|marginal|marginally|minor|"
    "moderate|moderately)\\b";
constexpr const char* kMaxRe = "\\b(maximum|highest|peaked at|peaking at|all-time high|its peak|record high)\\b";
constexpr const char* kMinRe = "\\b(minimum|lowest|bottomed out at|bottoming out at|all-time low|its trough|record low)\\b";
constexpr const char* kMeanRe = "\\b(average|mean)\\b";
constexpr const char* kNumberRe = "(^|[^\\w.])(-?\\d{1,3}(?:,\\d{3})+(?:\\.\\d+)?|-?\\d+(?:\\.\\d+)?)(\\s*%| percent)?";
constexpr const char* kAboveRe =
    "\\b(exceeded|exceeds|exceeding|remained above|stayed above|was above|were above|remained higher than|stayed "
    "higher than|was higher than|were higher than|outperformed|outperforms|led|leads)\\b";
constexpr const char* kBelowRe =
    "\\b(remained below|stayed below|was below|were below|remained lower than|stayed lower than|was lower than|were "
    "lower than|trailed|lagged behind|underperformed)\\b";
constexpr const char* kCrossRe =
    "\\b(overtook|overtakes|overtaken|overtaking|surpassed|surpasses|surpassing|crossed|crosses|intersected|"
    "intersect|crossing)\\b";
constexpr const char* kTogetherRe =
    "\\b(both|together|in tandem|same direction|similar trend|similar trends|in parallel)\\b";
constexpr const char* kOppositeRe = "\\b(opposite directions?|diverged|diverging|moved apart)\\b";
constexpr const char* kWidenRe = "\\bgap\\b[^.;]*?\\b(widened|widening|widens|grew|expanded)\\b|\\b(widening) gap\\b";
constexpr const char* kNarrowRe =
    "\\bgap\\b[^.;]*?\\b(narrowed|narrowing|narrows|shrank|closed)\\b|\\b(narrowing) gap\\b";
constexpr const char* kLocalRe = "\\b(local|a high of|a low of)\\b";

std::vector<std::string> split_clauses(const std::string& s) {
    static const std::regex sep("; |, while |, whereas |, but | while | whereas ", std::regex::icase);
    std::vector<std::string> out;
    std::sregex_token_iterator it(s.begin(), s.end(), sep, -1), end;
    for (; it != end; ++it)
        if (!it->str().empty()) out.push_back(it->str());
    return out;
}

struct Mention {
    Token token;
    std::string dimension;
};

std::vector<Mention> dimension_mentions(const std::string& text, const std::vector<std::string>& dims) {
    std::vector<Mention> out;
    const std::string low = lower(text);
    for (const auto& d : dims) {
        const std::string ld = lower(d);
        if (ld.empty()) continue;
        for (std::size_t pos = low.find(ld); pos != std::string::npos; pos = low.find(ld, pos + 1)) {
            const bool left_ok = pos == 0 || !std::isalnum(static_cast<unsigned char>(low[pos - 1]));
            const std::size_t e = pos + ld.size();
            const bool right_ok = e >= low.size() || !std::isalnum(static_cast<unsigned char>(low[e])) ||
                                  low.compare(e, 2, "'s") == 0;
            if (left_ok && right_ok) out.push_back({{pos, e, text.substr(pos, ld.size())}, d});
        }
    }
    std::sort(out.begin(), out.end(), [](const Mention& a, const Mention& b) { return a.token.begin < b.token.begin; });
    return out;
}

struct Number {
    Token token;
    double value = 0;
    bool percent = false;
    bool used = false;
};

std::vector<Number> find_numbers(const std::string& masked) {
    std::vector<Number> out;
    const auto& re = rx(kNumberRe);
    for (auto it = std::sregex_iterator(masked.begin(), masked.end(), re); it != std::sregex_iterator(); ++it) {
        const auto& m = *it;
        std::string digits = m[2].str();
        std::string clean;
        for (char c : digits)
            if (c != ',') clean.push_back(c);
        Number n;
        n.token = {static_cast<std::size_t>(m.position(2)), static_cast<std::size_t>(m.position(2) + m.length(2)),
                   digits};
        n.value = std::stod(clean);
        n.percent = m[3].matched;
        out.push_back(n);
    }
    return out;
}

struct TrendWord {
    Token token;
    TrendClass trend;
    std::vector<std::size_t> mentions;  // indices into the clause's time mentions
};

struct Clause {
    std::string text;
    std::vector<TimeMention> times;
    std::vector<std::string> dims;         // subjects, in order
    std::vector<std::string> named_dims;   // every dimension named
    std::vector<Number> numbers;
    std::vector<TrendWord> trends;
};

std::string mask(std::string s, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e && i < s.size(); ++i) s[i] = ' ';
    return s;
}

bool has(const std::string& text, const char* re) { return std::regex_search(text, rx(re)); }

// Time phrase(s) of a trend word, as one phrase. Two separate mentions
// ("from 0.30 in Oct 2002 to 2.40 in Jan 2006") become "A to B".
std::optional<std::string> phrase_for(const Clause& c, const TrendWord& w) {
    if (w.mentions.empty()) {
        if (c.times.empty()) return std::string();
        return std::nullopt;
    }
    if (w.mentions.size() == 1) return c.times[w.mentions[0]].text;
    return c.times[w.mentions.front()].text + " to " + c.times[w.mentions.back()].text;
}

void assign_mentions(Clause& c) {
    std::vector<bool> taken(c.times.size(), false);
    for (std::size_t w = 0; w < c.trends.size(); ++w) {
        const std::size_t from = c.trends[w].token.end;
        const std::size_t to = w + 1 < c.trends.size() ? c.trends[w + 1].token.begin : c.text.size();
        for (std::size_t m = 0; m < c.times.size(); ++m) {
            if (taken[m]) continue;
            if (c.times[m].offset >= from && c.times[m].offset < to) {
                c.trends[w].mentions.push_back(m);
                taken[m] = true;
            }
        }
    }
    // Phrases before the first trend word ("In 2007, prices rose").
    if (!c.trends.empty() && c.trends[0].mentions.empty()) {
        for (std::size_t m = 0; m < c.times.size(); ++m)
            if (!taken[m] && c.times[m].offset < c.trends[0].token.begin) {
                c.trends[0].mentions.push_back(m);
                taken[m] = true;
            }
    }
}

std::optional<std::size_t> nearest_time(const Clause& c, std::size_t pos) {
    std::optional<std::size_t> best;
    std::size_t best_d = 0;
    for (std::size_t m = 0; m < c.times.size(); ++m) {
        const std::size_t b = c.times[m].offset;
        const std::size_t d = b >= pos ? b - pos : pos - b;
        if (!best || d < best_d) {
            best = m;
            best_d = d;
        }
    }
    return best;
}

const char* trend_name(TrendClass t) {
    switch (t) {
        case TrendClass::Rising: return "rising";
        case TrendClass::Falling: return "falling";
        case TrendClass::Stable: return "stable";
        case TrendClass::Change: return "change";
        case TrendClass::Oscillating: return "oscillating";
        case TrendClass::Cyclic: return "cyclic";
        case TrendClass::BigChange: return "big_change";
    }
    return "rising";
}

Clause analyze_clause(const std::string& text, const std::vector<std::string>& dims,
                      const std::vector<std::string>& sentence_dims) {
    Clause c;
    c.text = text;
    c.times = find_time_phrases(text);

    auto mentions = dimension_mentions(text, dims);
    for (const auto& m : mentions)
        if (std::find(c.named_dims.begin(), c.named_dims.end(), m.dimension) == c.named_dims.end())
            c.named_dims.push_back(m.dimension);

    const bool everyone = has(text, "\\b(both|all)\\b");
    const bool comparative = has(text, kAboveRe) || has(text, kBelowRe) || has(text, kCrossRe) ||
                             has(text, "\\bthan\\b");
    if (everyone) {
        c.dims = c.named_dims.size() >= 2 ? c.named_dims : dims;
    } else if (!c.named_dims.empty()) {
        c.dims = comparative ? std::vector<std::string>{c.named_dims.front()} : c.named_dims;
    } else if (!sentence_dims.empty()) {
        c.dims = {sentence_dims.front()};
    } else if (dims.size() == 1) {
        c.dims = dims;
    }

    std::string masked = text;
    for (const auto& t : c.times) masked = mask(masked, t.offset, t.offset + t.text.size());
    for (const auto& m : mentions) masked = mask(masked, m.token.begin, m.token.end);
    c.numbers = find_numbers(masked);

    const std::pair<const char*, TrendClass> lexicon[] = {
        {kRiseRe, TrendClass::Rising},     {kFallRe, TrendClass::Falling},
        {kStableRe, TrendClass::Stable},   {kChangeRe, TrendClass::Change},
        {kOscRe, TrendClass::Oscillating}, {kCyclicRe, TrendClass::Cyclic}};
    for (const auto& [re, cls] : lexicon)
        for (auto& t : find_all(masked, rx(re), 1)) c.trends.push_back({t, cls, {}});
    std::sort(c.trends.begin(), c.trends.end(),
              [](const TrendWord& a, const TrendWord& b) { return a.token.begin < b.token.begin; });
    assign_mentions(c);
    return c;
}

json base_claim(const char* kind, const std::string& dim) {
    json j = {{"kind", kind}};
    if (!dim.empty()) j["dimension"] = dim;
    return j;
}

void put_time(json& j, const std::optional<std::string>& phrase, const char* key = "time") {
    if (phrase && !phrase->empty()) j[key] = *phrase;
}

// First unused non-percent number after `pos` within `window` characters.
Number* number_after(Clause& c, std::size_t pos, std::size_t window, bool percent) {
    for (auto& n : c.numbers)
        if (!n.used && n.percent == percent && n.token.begin >= pos && n.token.begin <= pos + window) return &n;
    return nullptr;
}

void extract_extrema(Clause& c, const std::vector<std::string>& dims, json& out) {
    const std::string low = lower(c.text);
    for (auto [re, which] : {std::pair{kMaxRe, "max"}, std::pair{kMinRe, "min"}}) {
        for (const auto& w : find_all(low, rx(re), 1)) {
            // "a local maximum" is a value claim, not a global one.
            const std::size_t lead = w.begin >= 12 ? w.begin - 12 : 0;
            if (std::regex_search(low.substr(lead, w.begin - lead), rx(kLocalRe))) continue;
            Number* n = number_after(c, w.end, 40, false);
            auto when = nearest_time(c, w.end);
            if (n)
                for (std::size_t m = 0; m < c.times.size(); ++m)
                    if (c.times[m].offset >= n->token.end && c.times[m].offset <= n->token.end + 12) {
                        when = m;
                        break;
                    }
            if (n) {
                n->used = true;
                for (const auto& d : c.dims) {
                    json j = base_claim("extremum", d);
                    j["which"] = which;
                    j["value"] = n->value;
                    j["value_text"] = n->token.text;
                    j["word"] = w.text;
                    if (when) j["time"] = c.times[*when].text;
                    out.push_back(std::move(j));
                }
            } else if (when && dims.size() >= 2) {
                for (const auto& d : c.dims) {
                    json j = base_claim("multi", "");
                    j["assert"] = "attribute";
                    std::vector<std::string> pair{d};
                    for (const auto& o : dims)
                        if (o != d) pair.push_back(o);
                    j["pair"] = pair;
                    j["attribute"] = {{"dimension", d}, {"feature", which}, {"time", c.times[*when].text}};
                    j["word"] = w.text;
                    out.push_back(std::move(j));
                }
            }
        }
    }
}

void extract_means(Clause& c, json& out) {
    for (const auto& w : find_all(c.text, rx(kMeanRe), 1)) {
        Number* n = number_after(c, w.end, 50, false);
        if (!n) continue;
        n->used = true;
        std::optional<std::string> phrase;
        if (!c.times.empty()) phrase = c.times[*nearest_time(c, w.end)].text;
        for (const auto& d : c.dims) {
            json j = base_claim("numeric", d);
            j["statistic"] = "mean";
            j["value"] = n->value;
            j["value_text"] = n->token.text;
            put_time(j, phrase);
            out.push_back(std::move(j));
        }
    }
}

void extract_growth(Clause& c, json& out) {
    for (auto& n : c.numbers) {
        if (!n.percent || n.used) continue;
        n.used = true;
        // Sign from the nearest trend word.
        double sign = 1;
        std::optional<std::string> phrase;
        const TrendWord* best = nullptr;
        std::size_t best_d = 0;
        for (const auto& t : c.trends) {
            if (t.trend != TrendClass::Rising && t.trend != TrendClass::Falling) continue;
            const std::size_t d = t.token.begin > n.token.begin ? t.token.begin - n.token.begin
                                                                : n.token.begin - t.token.begin;
            if (!best || d < best_d) {
                best = &t;
                best_d = d;
            }
        }
        if (best) {
            if (best->trend == TrendClass::Falling) sign = -1;
            phrase = phrase_for(c, *best);
            if (!phrase) continue;
        } else if (!c.times.empty()) {
            phrase = c.times[*nearest_time(c, n.token.begin)].text;
        }
        for (const auto& d : c.dims) {
            json j = base_claim("numeric", d);
            j["statistic"] = "growth_rate";
            j["value"] = sign * std::fabs(n.value) / 100.0;
            j["value_text"] = n.token.text;
            put_time(j, phrase);
            out.push_back(std::move(j));
        }
    }
}

void extract_values(Clause& c, json& out) {
    static const std::regex glue("^\\s*(?:[a-z$]+\\s+){0,2}?(?:in|by|during|around|on|at)\\s*(?:the\\s+)?$",
                                 std::regex::icase);
    for (auto& n : c.numbers) {
        if (n.used || n.percent) continue;
        for (const auto& t : c.times) {
            if (t.offset < n.token.end || t.offset - n.token.end > 24) continue;
            if (!std::regex_match(c.text.substr(n.token.end, t.offset - n.token.end), glue)) continue;
            n.used = true;
            for (const auto& d : c.dims) {
                json j = base_claim("numeric", d);
                j["statistic"] = "value_at";
                j["value"] = n.value;
                j["value_text"] = n.token.text;
                j["time"] = t.text;
                out.push_back(std::move(j));
            }
            break;
        }
    }
}

void extract_trends(Clause& c, json& out) {
    std::set<std::string> seen;
    for (const auto& w : c.trends) {
        auto phrase = phrase_for(c, w);
        if (!phrase) continue;
        for (const auto& d : c.dims) {
            const std::string key = d + "|" + trend_name(w.trend) + "|" + *phrase;
            if (!seen.insert(key).second) continue;
            json j = base_claim("trend", d);
            j["trend"] = trend_name(w.trend);
            j["word"] = w.token.text;
            put_time(j, phrase);
            out.push_back(j);

            const bool directional = w.trend == TrendClass::Rising || w.trend == TrendClass::Falling;
            if (!directional || w.mentions.empty() || c.dims.size() != 1) continue;
            std::optional<std::pair<std::string, std::string>> ends;
            if (w.mentions.size() >= 2) {
                ends = std::pair{c.times[w.mentions.front()].text, c.times[w.mentions.back()].text};
            } else if (auto span = parse_time_phrase(c.times[w.mentions[0]].text); span && span->range) {
                static const std::regex parts(
                    "(?:from |between )?(.+?)(?: *(?:\xE2\x80\x93|\xE2\x80\x94|-) *| +(?:to|and|through|until|till) +)(.+)",
                    std::regex::icase);
                std::smatch m;
                const std::string text = c.times[w.mentions[0]].text;
                if (std::regex_match(text, m, parts)) ends = std::pair{m[1].str(), m[2].str()};
            }
            if (!ends) continue;
            json r = base_claim("range", d);
            r["trend"] = trend_name(w.trend);
            r["start"] = ends->first;
            r["end"] = ends->second;
            r["word"] = w.token.text;
            out.push_back(std::move(r));
        }
    }
}

void extract_intensity(Clause& c, json& out) {
    for (auto [re, significant] : {std::pair{kIntenseRe, true}, std::pair{kMildRe, false}}) {
        for (const auto& w : find_all(c.text, rx(re), 1)) {
            // Attach to the closest directional trend word.
            const TrendWord* best = nullptr;
            std::size_t best_d = 0;
            for (const auto& t : c.trends) {
                const std::size_t d =
                    t.token.begin > w.begin ? t.token.begin - w.begin : w.begin - t.token.begin;
                if (!best || d < best_d) {
                    best = &t;
                    best_d = d;
                }
            }
            if (!best) continue;
            auto phrase = phrase_for(c, *best);
            if (!phrase) continue;
            for (const auto& d : c.dims) {
                json j = base_claim("significance", d);
                j["asserted"] = significant ? "significant" : "minor";
                j["word"] = w.text;
                put_time(j, phrase);
                out.push_back(std::move(j));
            }
        }
    }
}

void extract_multi(Clause& c, const std::vector<std::string>& dims, json& out) {
    auto mentions = dimension_mentions(c.text, dims);
    auto subject_object = [&](std::size_t pos) -> std::optional<std::pair<std::string, std::string>> {
        std::optional<std::string> subj, obj;
        for (const auto& m : mentions) {
            if (m.token.end <= pos) subj = m.dimension;
            if (m.token.begin >= pos && !obj) obj = m.dimension;
        }
        if (!subj || !obj || *subj == *obj) return std::nullopt;
        return std::pair{*subj, *obj};
    };
    auto any_phrase = [&]() -> std::optional<std::string> {
        if (c.times.empty()) return std::nullopt;
        if (c.times.size() == 1) return c.times[0].text;
        return c.times.front().text + " to " + c.times.back().text;
    };

    for (auto [re, subject_above] : {std::pair{kAboveRe, true}, std::pair{kBelowRe, false}}) {
        for (const auto& w : find_all(c.text, rx(re), 1)) {
            auto so = subject_object(w.begin);
            if (!so) continue;
            json j = base_claim("multi", "");
            j["assert"] = "same_relation";
            j["pair"] = {so->first, so->second};
            j["above"] = subject_above ? so->first : so->second;
            j["word"] = w.text;
            put_time(j, any_phrase());
            out.push_back(std::move(j));
        }
    }
    for (const auto& w : find_all(c.text, rx(kCrossRe), 1)) {
        auto so = subject_object(w.begin);
        if (!so) continue;
        json j = base_claim("multi", "");
        j["assert"] = "contrast_relation";
        j["pair"] = {so->first, so->second};
        j["word"] = w.text;
        put_time(j, any_phrase());
        out.push_back(std::move(j));
    }

    auto pairs_of = [&](const std::vector<std::string>& names) {
        std::vector<std::pair<std::string, std::string>> ps;
        for (std::size_t i = 0; i < names.size(); ++i)
            for (std::size_t k = i + 1; k < names.size(); ++k) ps.push_back({names[i], names[k]});
        return ps;
    };
    const auto group = c.dims.size() >= 2 ? c.dims : c.named_dims;
    if (group.size() >= 2) {
        auto directional = [](const TrendWord& t) {
            return t.trend == TrendClass::Rising || t.trend == TrendClass::Falling;
        };
        if (has(c.text, kTogetherRe)) {
            for (const auto& t : c.trends) {
                if (!directional(t)) continue;
                auto phrase = phrase_for(c, t);
                if (!phrase) continue;
                for (const auto& [a, b] : pairs_of(group)) {
                    json j = base_claim("multi", "");
                    j["assert"] = "same_trend";
                    j["pair"] = {a, b};
                    j["word"] = t.token.text;
                    put_time(j, phrase);
                    out.push_back(std::move(j));
                }
            }
        }
        if (has(c.text, kOppositeRe)) {
            for (const auto& [a, b] : pairs_of(group)) {
                json j = base_claim("multi", "");
                j["assert"] = "contrast_trend";
                j["pair"] = {a, b};
                put_time(j, any_phrase());
                out.push_back(std::move(j));
            }
        }
        for (auto [re, name] : {std::pair{kWidenRe, "gap_widening"}, std::pair{kNarrowRe, "gap_narrowing"}}) {
            if (!has(c.text, re)) continue;
            for (const auto& [a, b] : pairs_of(group)) {
                json j = base_claim("multi", "");
                j["assert"] = name;
                j["pair"] = {a, b};
                put_time(j, any_phrase());
                out.push_back(std::move(j));
            }
        }
    }
}

}  // namespace

json extract_claims_rule_based(std::string_view sentence, const std::vector<std::string>& dimensions) {
    json claims = json::array();
    const std::string text(sentence);
    const auto sentence_dims = mentioned_dimensions(text, dimensions);
    for (const auto& clause_text : split_clauses(text)) {
        Clause c = analyze_clause(clause_text, dimensions, sentence_dims);
        extract_multi(c, dimensions, claims);
        if (c.dims.empty()) continue;
        extract_extrema(c, dimensions, claims);
        extract_means(c, claims);
        extract_growth(c, claims);
        extract_values(c, claims);
        extract_trends(c, claims);
        extract_intensity(c, claims);
    }
    return json{{"claims", std::move(claims)}};
}

// ---- binding --------------------------------------------------------------------

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::ClaimParseError, what); }

std::string get_string(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_string()) bad(std::string("claim field '") + key + "' must be a string");
    return j[key].get<std::string>();
}

double get_number(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number()) bad(std::string("claim field '") + key + "' must be a number");
    double v = j[key].get<double>();
    if (!std::isfinite(v)) bad(std::string("claim field '") + key + "' is not finite");
    return v;
}

std::optional<std::string> opt_string(const json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    if (!j[key].is_string()) bad(std::string("claim field '") + key + "' must be a string");
    return j[key].get<std::string>();
}

Extreme extreme_of(const std::string& s) {
    if (s == "max") return Extreme::Max;
    if (s == "min") return Extreme::Min;
    bad("extremum must be max or min, got '" + s + "'");
}

TrendClass trend_of(const std::string& s) {
    auto t = trend_class_from_string(s);
    if (!t) bad("unknown trend '" + s + "'");
    return *t;
}

// Single-point phrases measure change from the preceding sample.
bool anchored_phrase(const std::optional<std::string>& phrase) {
    if (!phrase) return false;
    auto span = parse_time_phrase(*phrase);
    return span && !span->range && !span->open_start && !span->open_end;
}

struct Binder {
    const ChartFacts& facts;
    std::optional<std::string> failure;

    IndexRange window(const std::optional<std::string>& phrase) {
        if (!phrase || phrase->empty()) return facts.data.full_range();
        try {
            return resolve_window(facts, *phrase);
        } catch (const Error& e) {
            if (!failure) failure = "time phrase '" + *phrase + "' did not resolve: " + e.detail();
            return facts.data.full_range();
        }
    }

    std::string dimension(const std::string& d) {
        if (!facts.data.has_dimension(d) && !failure) failure = "unknown dimension '" + d + "'";
        return d;
    }
};

}  // namespace

std::vector<Claim> claims_from_json(const json& wire, const ChartFacts& facts, std::size_t sentence,
                                    const std::vector<std::string>& default_dimensions) {
    const json* list = &wire;
    if (wire.is_object()) {
        if (!wire.contains("claims")) bad("response has no 'claims' array");
        list = &wire["claims"];
    }
    if (!list->is_array()) bad("'claims' must be an array");

    std::vector<Claim> out;
    for (const auto& j : *list) {
        if (!j.is_object()) bad("each claim must be an object");
        const auto kind = claim_kind_from_string(get_string(j, "kind"));
        if (!kind) bad("unknown claim kind '" + get_string(j, "kind") + "'");

        Binder b{facts, std::nullopt};
        Claim c;
        c.sentence = sentence;
        c.value_text = opt_string(j, "value_text").value_or("");
        c.word = opt_string(j, "word").value_or("");
        auto dim = [&]() -> std::string {
            if (auto d = opt_string(j, "dimension")) return b.dimension(*d);
            if (default_dimensions.size() == 1) return default_dimensions.front();
            if (facts.data.dimensions.size() == 1) return facts.data.dimensions.begin()->first;
            bad("claim has no dimension");
        };
        const auto time = opt_string(j, "time");

        switch (*kind) {
            case ClaimKind::Extremum: {
                ExtremumClaim e;
                e.which = extreme_of(get_string(j, "which"));
                e.value = get_number(j, "value");
                e.dimension = dim();
                e.window = b.window(opt_string(j, "scope"));
                if (time) e.time = b.window(time);
                c.body = e;
                break;
            }
            case ClaimKind::Numeric: {
                NumericClaim n;
                const std::string stat = get_string(j, "statistic");
                if (stat == "mean")
                    n.statistic = Statistic::Mean;
                else if (stat == "growth_rate")
                    n.statistic = Statistic::GrowthRate;
                else if (stat == "value_at")
                    n.statistic = Statistic::ValueAt;
                else
                    throw Error(ErrorCode::UnknownStatistic, "unknown statistic '" + stat + "'");
                n.value = get_number(j, "value");
                n.dimension = dim();
                n.window = b.window(time);
                c.body = n;
                break;
            }
            case ClaimKind::TrendDirection: {
                TrendClaim t;
                t.trend = trend_of(get_string(j, "trend"));
                t.dimension = dim();
                t.window = b.window(time);
                t.anchored = j.value("anchored", anchored_phrase(time));
                c.body = t;
                break;
            }
            case ClaimKind::Range: {
                RangeClaim r;
                r.trend = trend_of(get_string(j, "trend"));
                r.dimension = dim();
                r.start = b.window(get_string(j, "start"));
                r.end = b.window(get_string(j, "end"));
                c.body = r;
                break;
            }
            case ClaimKind::MultiTrend: {
                MultiClaim m;
                const std::string a = get_string(j, "assert");
                bool found = false;
                for (auto x : {MultiAssertion::SameRelation, MultiAssertion::ContrastRelation,
                               MultiAssertion::SameTrend, MultiAssertion::ContrastTrend, MultiAssertion::GapWidening,
                               MultiAssertion::GapNarrowing, MultiAssertion::Attribute})
                    if (to_string(x) == a) {
                        m.asserted = x;
                        found = true;
                    }
                if (!found) bad("unknown multi assertion '" + a + "'");
                if (!j.contains("pair") || !j["pair"].is_array() || j["pair"].size() < 2 ||
                    !j["pair"][0].is_string() || !j["pair"][1].is_string())
                    bad("multi claim needs a 'pair' of two dimension names");
                m.dim_a = b.dimension(j["pair"][0].get<std::string>());
                m.dim_b = b.dimension(j["pair"][1].get<std::string>());
                m.window = b.window(time);
                const bool trend_like = m.asserted != MultiAssertion::SameRelation &&
                                        m.asserted != MultiAssertion::Attribute;
                m.anchored = j.value("anchored", trend_like && anchored_phrase(time));
                if (m.asserted == MultiAssertion::SameRelation) m.above = b.dimension(get_string(j, "above"));
                if (m.asserted == MultiAssertion::Attribute) {
                    if (!j.contains("attribute") || !j["attribute"].is_object()) bad("attribute claim needs 'attribute'");
                    const auto& at = j["attribute"];
                    AttributeRef ref;
                    ref.dimension = b.dimension(get_string(at, "dimension"));
                    ref.feature = extreme_of(get_string(at, "feature"));
                    ref.time = b.window(get_string(at, "time"));
                    m.attribute = ref;
                }
                c.body = m;
                break;
            }
            case ClaimKind::Significance: {
                SignificanceClaim s;
                s.dimension = dim();
                const std::string asserted = get_string(j, "asserted");
                if (asserted != "significant" && asserted != "minor")
                    bad("significance must be 'significant' or 'minor'");
                s.significant = asserted == "significant";
                s.window = b.window(time);
                if (j.value("anchored", anchored_phrase(time)) && s.window.first > 0) --s.window.first;
                c.body = s;
                break;
            }
        }
        c.unresolved = b.failure;
        out.push_back(std::move(c));
    }
    return out;
}

namespace {

json window_json(const TimeSeriesDataset& data, IndexRange w) {
    return {{"start", data.display_label(w.first)}, {"end", data.display_label(w.last)}};
}

}  // namespace

json to_json(const Claim& c, const TimeSeriesDataset& data) {
    json j = {{"kind", std::string(to_string(c.kind()))}, {"sentence", c.sentence}};
    if (!c.value_text.empty()) j["value_text"] = c.value_text;
    if (!c.word.empty()) j["word"] = c.word;
    if (c.unresolved) j["unresolved"] = *c.unresolved;
    std::visit(
        [&](const auto& b) {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, ExtremumClaim>) {
                j["which"] = b.which == Extreme::Max ? "max" : "min";
                j["value"] = b.value;
                j["dimension"] = b.dimension;
                j["window"] = window_json(data, b.window);
                if (b.time) j["time"] = window_json(data, *b.time);
            } else if constexpr (std::is_same_v<T, NumericClaim>) {
                j["statistic"] = std::string(to_string(b.statistic));
                j["value"] = b.value;
                j["dimension"] = b.dimension;
                j["window"] = window_json(data, b.window);
            } else if constexpr (std::is_same_v<T, TrendClaim>) {
                j["trend"] = std::string(to_string(b.trend));
                j["dimension"] = b.dimension;
                j["window"] = window_json(data, b.window);
                j["anchored"] = b.anchored;
            } else if constexpr (std::is_same_v<T, RangeClaim>) {
                j["trend"] = std::string(to_string(b.trend));
                j["dimension"] = b.dimension;
                j["start"] = window_json(data, b.start);
                j["end"] = window_json(data, b.end);
            } else if constexpr (std::is_same_v<T, MultiClaim>) {
                j["assert"] = std::string(to_string(b.asserted));
                j["pair"] = {b.dim_a, b.dim_b};
                j["window"] = window_json(data, b.window);
                if (!b.above.empty()) j["above"] = b.above;
                if (b.attribute)
                    j["attribute"] = {{"dimension", b.attribute->dimension},
                                      {"feature", b.attribute->feature == Extreme::Max ? "max" : "min"},
                                      {"time", window_json(data, b.attribute->time)}};
            } else {
                j["dimension"] = b.dimension;
                j["asserted"] = b.significant ? "significant" : "minor";
                j["window"] = window_json(data, b.window);
            }
        },
        c.body);
    return j;
}

}  // namespace chartinsight
