#include <algorithm>
#include <cctype>
#include <regex>

#include "chartinsight/backend.hpp"
#include "chartinsight/claims.hpp"
#include "chartinsight/error.hpp"
#include "chartinsight/patches.hpp"

namespace chartinsight {

using nlohmann::json;

namespace {

std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

class Picker {
public:
    Picker(std::uint64_t seed, std::string_view salt) : state_(mix(seed ^ fnv(salt))) {}
    template <std::size_t N>
    const char* pick(const char* const (&options)[N]) {
        state_ = mix(state_);
        return options[state_ % N];
    }

private:
    std::uint64_t state_;
};

std::string num(double v) { return format_number(v); }

std::string join_names(const std::vector<std::string>& names) {
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i > 0) out += i + 1 == names.size() ? " and " : ", ";
        out += names[i];
    }
    return out;
}

std::string lower(std::string_view s) {
    std::string out;
    for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return out;
}

bool directional(TrendClass t) {
    return t == TrendClass::Rising || t == TrendClass::Falling || t == TrendClass::BigChange;
}

// ---- uni ------------------------------------------------------------------------

std::string verbalize(const json& p, std::uint64_t seed, bool corrupt) {
    const UniInsightRecord r = uni_record_from_json(p.at("record"));
    const double reference = p.value("reference_range", 0.0);
    const double ratio = p.value("significance_ratio", 0.25);
    const std::string& d = r.dimension;
    Picker pick(seed, d);
    std::vector<std::string> out;

    const auto& ps = r.patches;
    std::size_t runs = 0;
    for (std::size_t i = 0; i < ps.size();) {
        const auto& first = ps[i];
        const TrendClass t = first.stats.trend_class;
        if (directional(t) && first.stats.direction != Direction::Flat) {
            std::size_t k = i;
            bool big = t == TrendClass::BigChange;
            double lo = std::min(first.stats.trend_start_value, first.stats.min.value);
            double hi = std::max(first.stats.trend_start_value, first.stats.max.value);
            while (k + 1 < ps.size() && directional(ps[k + 1].stats.trend_class) &&
                   ps[k + 1].stats.direction == first.stats.direction) {
                ++k;
                big = big || ps[k].stats.trend_class == TrendClass::BigChange;
                lo = std::min(lo, ps[k].stats.min.value);
                hi = std::max(hi, ps[k].stats.max.value);
            }
            const auto& last = ps[k];
            ++runs;
            if (first.anchor_time != last.end_time) {
                const bool up = first.stats.direction == Direction::Up;
                static const char* const rise[] = {"rose", "increased", "climbed"};
                static const char* const fall[] = {"fell", "declined", "dropped"};
                std::string verb = up ? pick.pick(rise) : pick.pick(fall);
                const double share = reference > 0 ? (hi - lo) / reference : 0;
                if (big && share >= ratio) verb += " sharply";
                else if (share < ratio / 2) verb += " slightly";
                out.push_back(d + " " + verb + " from " + num(first.stats.trend_start_value) + " in " +
                              first.anchor_time + " to " + num(last.stats.trend_end_value) + " in " + last.end_time +
                              ".");
            }
            i = k + 1;
            continue;
        }
        ++runs;
        const std::string& a = first.anchor_time;
        const std::string& b = first.end_time;
        if (a != b) {
            switch (t) {
                case TrendClass::Stable:
                    out.push_back(d + " remained stable at around " + num(first.stats.mean) + " from " + a + " to " +
                                  b + ".");
                    break;
                case TrendClass::Change: out.push_back(d + " fluctuated between " + a + " and " + b + "."); break;
                case TrendClass::Oscillating: out.push_back(d + " oscillated between " + a + " and " + b + "."); break;
                case TrendClass::Cyclic:
                    out.push_back(d + " followed a cyclic pattern between " + a + " and " + b + ".");
                    break;
                default: break;
            }
        }
        ++i;
    }

    const bool at_ends = (r.max.position == 0 || r.max.position + 1 == r.points) &&
                         (r.min.position == 0 || r.min.position + 1 == r.points);
    if (r.max.value != r.min.value && !(runs <= 1 && at_ends)) {
        double max_value = r.max.value;
        if (corrupt && !ps.empty() && ps.front().stats.max.value != r.max.value) max_value = ps.front().stats.max.value;
        static const char* const forms[] = {"reached its maximum of %1 in %2 and its minimum of %3 in %4.",
                                            "peaked at %1 in %2 and bottomed out at %3 in %4.",
                                            "hit its highest value of %1 in %2, while its lowest value was %3 in %4."};
        std::string s = pick.pick(forms);
        auto put = [&](const char* key, const std::string& v) {
            auto pos = s.find(key);
            if (pos != std::string::npos) s.replace(pos, 2, v);
        };
        put("%1", num(max_value));
        put("%2", r.max_time);
        put("%3", num(r.min.value));
        put("%4", r.min_time);
        out.push_back(d + " " + s);
    }
    if (out.empty()) out.push_back(d + " has a single value of " + num(r.first_value) + ".");

    std::string text;
    for (const auto& s : out) text += (text.empty() ? "" : " ") + s;
    return text;
}

// ---- multi ----------------------------------------------------------------------

json candidate(const json& p, std::uint64_t seed, bool novel) {
    json rec = p.at("record");
    const int index = p.value("candidate", 0);
    const int round = p.value("round", 0);
    // One candidate in three misreads the last shared trend.
    if ((seed + static_cast<std::uint64_t>(index)) % 3 == 2) {
        for (auto it = rec["pairs"].rbegin(); it != rec["pairs"].rend(); ++it) {
            auto& tps = (*it)["trend_pairs"];
            if (tps.empty()) continue;
            auto& tp = tps.back();
            const bool same = tp.value("kind", "") == "same_trend";
            tp["kind"] = same ? "contrast_trend" : "same_trend";
            break;
        }
    }
    if (novel && !rec["pairs"].empty()) {
        const auto start = static_cast<std::size_t>(std::max(round, 0));
        rec["pairs"][0]["trend_pairs"].push_back(
            {{"start_index", start}, {"end_index", start + 1}, {"kind", "same_trend"}, {"directions", {"up", "up"}}});
    }
    return {{"record", rec}};
}

std::string trend_phrase(const json& ins) {
    if (ins.value("single", false)) return "in " + ins.at("end").get<std::string>();
    return "from " + ins.at("start").get<std::string>() + " to " + ins.at("end").get<std::string>();
}

std::string synthesize_one(const json& ins, Picker& pick) {
    const std::string type = ins.at("type").get<std::string>();
    if (type == "dominance") {
        static const char* const verbs[] = {"stayed above", "remained above"};
        std::string s = ins.at("above").get<std::string>() + " " + pick.pick(verbs) + " " +
                        ins.at("below").get<std::string>();
        if (ins.value("whole", false)) return s + " throughout the period.";
        return s + " from " + ins.at("start").get<std::string>() + " to " + ins.at("end").get<std::string>() + ".";
    }
    if (type == "crossing") {
        static const char* const verbs[] = {"overtook", "surpassed"};
        return ins.at("over").get<std::string>() + " " + pick.pick(verbs) + " " + ins.at("under").get<std::string>() +
               " between " + ins.at("from").get<std::string>() + " and " + ins.at("to").get<std::string>() + ".";
    }
    if (type == "crossings") {
        const auto& pr = ins.at("pair");
        return pr[0].get<std::string>() + " and " + pr[1].get<std::string>() + " crossed " +
               std::to_string(ins.at("count").get<int>()) + " times.";
    }
    if (type == "tie") {
        const auto& pr = ins.at("pair");
        return pr[0].get<std::string>() + " and " + pr[1].get<std::string>() + " had identical values throughout.";
    }
    if (type == "trend") {
        const auto& pr = ins.at("pair");
        const std::string a = pr[0].get<std::string>(), b = pr[1].get<std::string>();
        const auto& dirs = ins.at("directions");
        const std::string da = dirs[0].get<std::string>(), db = dirs[1].get<std::string>();
        if (ins.at("kind").get<std::string>() == "same_trend") {
            if (da == "flat") return {};
            std::string verb;
            if (da == "up") {
                static const char* const rise[] = {"rose", "increased"};
                verb = ins.value("after", "") == "down" ? "rebounded" : pick.pick(rise);
            } else {
                static const char* const fall[] = {"fell", "declined"};
                verb = pick.pick(fall);
            }
            return "Both " + a + " and " + b + " " + verb + " " + trend_phrase(ins) + ".";
        }
        const bool opposite = da != "flat" && db != "flat";
        return a + " and " + b + " moved in " + (opposite ? "opposite" : "different") + " directions " +
               trend_phrase(ins) + ".";
    }
    return {};
}

std::string synthesize(const json& p, std::uint64_t seed) {
    Picker pick(seed, "multi");
    std::string text;
    for (const auto& ins : p.at("insights")) {
        auto s = synthesize_one(ins, pick);
        if (!s.empty()) text += (text.empty() ? "" : " ") + s;
    }
    return text;
}

// ---- writer ---------------------------------------------------------------------

std::string draft(const json& p, std::uint64_t seed) {
    Picker pick(seed, "writer");
    const auto dims = p.at("dimensions").get<std::vector<std::string>>();
    const std::string title = p.value("title", "");
    const std::string y = p.value("y_label", "value");
    const std::string x = p.value("x_label", "time");
    static const char* const verbs[] = {"shows", "displays"};
    std::string text = title.empty() ? std::string("This line chart ") : "The line chart \"" + title + "\" ";
    text += std::string(pick.pick(verbs)) + " " + y + " over " + x + " for " + join_names(dims) + ".";
    for (const auto& u : p.at("uni"))
        if (!u.value("prose", "").empty()) text += " " + u.at("prose").get<std::string>();
    const std::string multi = p.value("multi", "");
    if (!multi.empty()) text += " " + multi;
    return text;
}

std::string integrate(const json& p) {
    std::string text = p.at("text").get<std::string>();
    const std::string add = p.value("additions", "");
    if (!add.empty()) text += (text.empty() ? "" : " ") + add;
    return text;
}

// ---- selfcheck ------------------------------------------------------------------

std::string rewrite(const json& p, bool refuse) {
    std::string s = p.at("sentence").get<std::string>();
    if (refuse) return s;
    for (const auto& r : p.value("replacements", json::array())) {
        const std::string from = r.at("from").get<std::string>();
        const std::string to = r.at("to").get<std::string>();
        if (from.empty()) continue;
        auto pos = s.find(from);
        if (pos != std::string::npos) s.replace(pos, from.size(), to);
    }
    return s;
}

// ---- chat -----------------------------------------------------------------------

std::string initials(std::string_view name) {
    std::string out;
    bool start = true;
    for (char c : name) {
        if (std::isalpha(static_cast<unsigned char>(c)) && start) out.push_back(static_cast<char>(std::tolower(c)));
        start = c == ' ' || c == '-';
    }
    return out;
}

std::optional<std::string> dimension_in(const std::string& message, const std::vector<std::string>& dims) {
    const std::string low = lower(message);
    for (const auto& d : dims)
        if (low.find(lower(d)) != std::string::npos) return d;
    static const std::regex word("[A-Za-z.]+");
    for (auto it = std::sregex_iterator(message.begin(), message.end(), word); it != std::sregex_iterator(); ++it) {
        std::string w;
        for (char c : it->str())
            if (c != '.') w.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        if (w.size() < 2) continue;
        for (const auto& d : dims)
            if (d.find(' ') != std::string::npos && initials(d) == w) return d;
    }
    return std::nullopt;
}

bool mentions(const std::string& sentence, const std::string& dim) {
    return lower(sentence).find(lower(dim)) != std::string::npos;
}

std::string chat_edit(const json& p, std::uint64_t seed) {
    auto sentences = p.at("sentences").get<std::vector<std::string>>();
    const std::string message = p.value("message", "");
    const auto dims = p.value("dimensions", std::vector<std::string>{});
    auto joined = [&] {
        std::string t;
        for (const auto& s : sentences) t += (t.empty() ? "" : " ") + s;
        return t;
    };
    if (message.find_first_not_of(" \t\r\n") == std::string::npos) return joined();
    const std::string low = lower(message);
    const auto dim = dimension_in(message, dims);

    const bool soften = low.find("soften") != std::string::npos || low.find("tone down") != std::string::npos;
    const bool strengthen = low.find("strengthen") != std::string::npos || low.find("emphasi") != std::string::npos;
    if (soften || strengthen) {
        static const std::regex quoted("['\"\xE2\x80\x98\xE2\x80\x9C]([A-Za-z]+)['\"\xE2\x80\x99\xE2\x80\x9D]");
        std::smatch m;
        std::optional<std::string> target;
        if (std::regex_search(message, m, quoted)) target = lower(m[1].str());
        static const std::regex token("[A-Za-z]+");
        for (auto& s : sentences) {
            if (dim && !mentions(s, *dim)) continue;
            std::string out;
            std::size_t last = 0;
            bool changed = false;
            for (auto it = std::sregex_iterator(s.begin(), s.end(), token); it != std::sregex_iterator(); ++it) {
                const std::string w = it->str();
                const std::string lw = lower(w);
                if (target && lw.rfind(*target, 0) != 0) continue;
                auto repl = soften ? soften_word(w) : strengthen_word(w);
                if (!repl) continue;
                out += s.substr(last, static_cast<std::size_t>(it->position()) - last) + *repl;
                last = static_cast<std::size_t>(it->position() + it->length());
                changed = true;
            }
            if (changed) s = out + s.substr(last);
        }
        return joined();
    }

    static const std::regex year_re("\\b(1[0-9]{3}|20[0-9]{2})\\b");
    std::smatch ym;
    if (low.find("add") != std::string::npos && dim && std::regex_search(message, ym, year_re) &&
        p.contains("series") && p["series"].contains(*dim)) {
        const auto& ser = p["series"][*dim];
        const auto labels = ser.at("labels").get<std::vector<std::string>>();
        const auto& values = ser.at("values");
        std::optional<std::size_t> at;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i].find(ym[1].str()) != std::string::npos && !values[i].is_null()) {
                at = i;
                break;
            }
        if (!at) return joined();
        auto val = [&](std::size_t i) { return values[i].get<double>(); };
        // Walk back to where the move began.
        std::size_t from = *at;
        const bool up_move = *at > 0 && !values[*at - 1].is_null() && val(*at - 1) < val(*at);
        while (from > 0 && !values[from - 1].is_null() &&
               (up_move ? val(from - 1) < val(from) : val(from - 1) > val(from)))
            --from;
        if (from == *at) return joined();
        const double reference = p.value("reference_range", 0.0);
        const double ratio = p.value("significance_ratio", 0.25);
        const double change = std::fabs(val(*at) - val(from));
        Picker pick(seed, "chat");
        static const char* const rise[] = {"rose", "climbed"};
        static const char* const fall[] = {"fell", "dropped"};
        std::string verb = up_move ? pick.pick(rise) : pick.pick(fall);
        if (reference > 0 && change / reference >= ratio) verb += " sharply";
        const std::string added = *dim + " " + verb + " from " + num(val(from)) + " in " + labels[from] + " to " +
                                  num(val(*at)) + " in " + labels[*at] + ".";
        std::size_t insert_at = sentences.size();
        for (std::size_t i = 0; i < sentences.size(); ++i)
            if (mentions(sentences[i], *dim)) insert_at = i + 1;
        sentences.insert(sentences.begin() + static_cast<std::ptrdiff_t>(insert_at), added);
        return joined();
    }

    static const std::regex remove_re("(remove|delete|drop) (the )?sentence (about )?['\"]?([^'\"]+)['\"]?");
    std::smatch rm;
    if (std::regex_search(low, rm, remove_re)) {
        const std::string needle = rm[4].str();
        sentences.erase(std::remove_if(sentences.begin(), sentences.end(),
                                       [&](const std::string& s) { return lower(s).find(needle) != std::string::npos; }),
                        sentences.end());
        return joined();
    }
    return joined();
}

int approx_tokens(std::string_view s) { return static_cast<int>(s.size() / 4 + 1); }

}  // namespace

MockBackend::MockBackend(MockOptions opts) : opts_(opts) {}

GenResponse MockBackend::complete(const GenRequest& req) {
    ++calls_;
    auto payload = payload_of(req.user_prompt);
    if (!payload || !payload->contains("task") || !(*payload)["task"].is_string())
        throw Error(ErrorCode::TemplateMissing, "request for " + std::string(to_string(req.tag)) + " has no task payload");
    const std::string task = (*payload)["task"].get<std::string>();
    const std::uint64_t seed = req.seed.value_or(opts_.seed);

    std::string text;
    try {
        switch (req.tag) {
            case AgentTag::Uni:
                if (task != "verbalize") break;
                text = verbalize(*payload, seed, opts_.corrupt_first_uni && uni_calls_++ == 0);
                break;
            case AgentTag::Multi:
                if (task == "candidates") text = candidate(*payload, seed, opts_.always_novel).dump();
                else if (task == "synthesize") text = synthesize(*payload, seed);
                break;
            case AgentTag::Writer:
                if (task == "draft") text = draft(*payload, seed);
                else if (task == "integrate") text = integrate(*payload);
                break;
            case AgentTag::SelfCheck:
                if (task == "extract") {
                    text = extract_claims_rule_based((*payload).at("sentence").get<std::string>(),
                                                     (*payload).at("dimensions").get<std::vector<std::string>>())
                               .dump();
                } else if (task == "rewrite") {
                    text = rewrite(*payload, opts_.refuse_rewrites);
                } else if (task == "classify_level") {
                    static const std::regex digit("[0-9]");
                    const auto s = (*payload).at("sentence").get<std::string>();
                    text = json{{"level", std::regex_search(s, digit) ? "L2" : "L1"}}.dump();
                }
                break;
            case AgentTag::Chat:
                if (task == "edit") text = chat_edit(*payload, seed);
                break;
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::BackendError, std::string("mock could not read its payload: ") + e.what());
    }
    if (text.empty() && !(req.tag == AgentTag::Multi && task == "synthesize") &&
        !(req.tag == AgentTag::Writer && task == "integrate"))
        throw Error(ErrorCode::TemplateMissing,
                    "no mock template for " + std::string(to_string(req.tag)) + "/" + task);

    GenResponse r;
    r.text = std::move(text);
    r.usage = {approx_tokens(req.role_prompt) + approx_tokens(req.user_prompt), approx_tokens(r.text)};
    r.backend_id = id();
    return r;
}

}  // namespace chartinsight
