#include "chartinsight/temporal.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>

#include "chartinsight/error.hpp"

namespace chartinsight {

namespace chr = std::chrono;

namespace {

const std::string kMonth =
    "(?:jan(?:uary)?|feb(?:ruary)?|mar(?:ch)?|apr(?:il)?|may|june?|july?|aug(?:ust)?|sept?(?:ember)?|"
    "oct(?:ober)?|nov(?:ember)?|dec(?:ember)?)\\.?";
const std::string kYear = "(?:1[0-9]{3}|20[0-9]{2})(?![0-9])";
const std::string kAtom = "(?:(?:early|mid|late)[- ]?" + kYear + "|q[1-4],? *" + kYear + "|" + kMonth +
                          " +(?:[0-9]{1,2},? +)?" + kYear + "|" + kYear + "-[0-9]{2}(?:-[0-9]{2})?(?![0-9])|" +
                          kYear + ")";
const std::string kJoin = "(?: *(?:\xE2\x80\x93|\xE2\x80\x94|-) *| +(?:to|through|until|till) +)";
const std::string kRange = "(?:(?:from|between) +" + kAtom + " +(?:to|and|through|until|till) +" + kAtom + "|" +
                           kAtom + kJoin + kAtom + ")";
const std::string kOpen = "(?:(?:through|until|till|since|after|before|by) +(?:the end of +)?" + kAtom + ")";

const std::regex& mention_re() {
    static const std::regex re("(?:^|[^A-Za-z0-9])(" + kRange + "|" + kOpen + "|" + kAtom + ")",
                               std::regex::icase | std::regex::ECMAScript);
    return re;
}

std::string lower(std::string_view s) {
    std::string out;
    for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return out;
}

std::string trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && (std::isspace(static_cast<unsigned char>(s.back())) || s.back() == '.' || s.back() == ','))
        s.remove_suffix(1);
    return std::string(s);
}

chr::sys_days day_of(int y, unsigned m, unsigned d) {
    return chr::sys_days{chr::year{y} / chr::month{m} / chr::day{d}};
}

chr::sys_days month_end(int y, unsigned m) {
    return chr::sys_days{chr::year{y} / chr::month{m} / chr::last};
}

std::optional<CalendarSpan> parse_atom(const std::string& s) {
    static const std::regex year_re("(" + kYear + ")");
    static const std::regex ym_re("(" + kYear + ")-([0-9]{2})");
    static const std::regex ymd_re("(" + kYear + ")-([0-9]{2})-([0-9]{2})");
    static const std::regex coarse_re("(early|mid|late)[- ]?(" + kYear + ")");
    static const std::regex quarter_re("q([1-4]),? *(" + kYear + ")");
    static const std::regex month_re("(" + kMonth + ") +(?:([0-9]{1,2}),? +)?(" + kYear + ")");
    std::smatch m;
    if (std::regex_match(s, m, year_re)) {
        int y = std::stoi(m[1]);
        return CalendarSpan{day_of(y, 1, 1), day_of(y, 12, 31)};
    }
    if (std::regex_match(s, m, ymd_re)) {
        int y = std::stoi(m[1]);
        unsigned mo = unsigned(std::stoi(m[2])), d = unsigned(std::stoi(m[3]));
        chr::year_month_day ymd{chr::year{y}, chr::month{mo}, chr::day{d}};
        if (!ymd.ok()) return std::nullopt;
        return CalendarSpan{chr::sys_days{ymd}, chr::sys_days{ymd}};
    }
    if (std::regex_match(s, m, ym_re)) {
        int y = std::stoi(m[1]);
        unsigned mo = unsigned(std::stoi(m[2]));
        if (mo < 1 || mo > 12) return std::nullopt;
        return CalendarSpan{day_of(y, mo, 1), month_end(y, mo)};
    }
    if (std::regex_match(s, m, coarse_re)) {
        int y = std::stoi(m[2]);
        unsigned first = m[1] == "early" ? 1 : m[1] == "mid" ? 5 : 9;
        return CalendarSpan{day_of(y, first, 1), month_end(y, first + 3), true};
    }
    if (std::regex_match(s, m, quarter_re)) {
        unsigned q = unsigned(std::stoi(m[1]));
        int y = std::stoi(m[2]);
        return CalendarSpan{day_of(y, 3 * q - 2, 1), month_end(y, 3 * q)};
    }
    if (std::regex_match(s, m, month_re)) {
        auto mo = month_from_name(m[1].str());
        if (!mo) return std::nullopt;
        int y = std::stoi(m[3]);
        if (m[2].matched) {
            chr::year_month_day ymd{chr::year{y}, chr::month{*mo}, chr::day{unsigned(std::stoi(m[2]))}};
            if (!ymd.ok()) return std::nullopt;
            return CalendarSpan{chr::sys_days{ymd}, chr::sys_days{ymd}};
        }
        return CalendarSpan{day_of(y, *mo, 1), month_end(y, *mo)};
    }
    return std::nullopt;
}

const chr::sys_days kMinDay = day_of(1, 1, 1);
const chr::sys_days kMaxDay = day_of(9999, 12, 31);

std::optional<std::pair<std::string, std::string>> split_range(const std::string& s) {
    static const std::regex from_re("(?:from|between) +(.+?) +(?:to|and|through|until|till) +(.+)");
    static const std::regex join_re("(.+?)" + kJoin + "(.+)");
    std::smatch m;
    if (std::regex_match(s, m, from_re)) return std::pair{m[1].str(), m[2].str()};
    if (std::regex_match(s, m, join_re)) return std::pair{m[1].str(), m[2].str()};
    return std::nullopt;
}

}  // namespace

std::vector<TimeMention> find_time_phrases(std::string_view sentence) {
    std::vector<TimeMention> out;
    std::string s(sentence);
    for (auto it = std::sregex_iterator(s.begin(), s.end(), mention_re()); it != std::sregex_iterator(); ++it) {
        const auto& m = *it;
        out.push_back({m[1].str(), static_cast<std::size_t>(m.position(1))});
    }
    return out;
}

std::optional<CalendarSpan> parse_time_phrase(std::string_view expr) {
    const std::string s = lower(trim(expr));
    if (s.empty()) return std::nullopt;
    if (auto a = parse_atom(s)) return a;

    if (auto parts = split_range(s)) {
        auto a = parse_atom(trim(parts->first));
        auto b = parse_atom(trim(parts->second));
        if (a && b && a->first <= b->last) {
            CalendarSpan out{a->first, b->last, a->coarse || b->coarse};
            out.range = true;
            return out;
        }
    }

    static const std::regex open_re("(through|until|till|since|after|before|by|from) +(?:the end of +)?(.+)");
    std::smatch m;
    if (std::regex_match(s, m, open_re)) {
        auto a = parse_atom(m[2].str());
        if (!a) return std::nullopt;
        const std::string word = m[1];
        CalendarSpan out = *a;
        if (word == "since" || word == "from") {
            out.last = kMaxDay;
            out.open_end = true;
        } else if (word == "after") {
            out.first = a->last + chr::days{1};
            out.last = kMaxDay;
            out.open_end = true;
        } else if (word == "before") {
            out.first = kMinDay;
            out.last = a->first - chr::days{1};
            out.open_start = true;
        } else {
            out.first = kMinDay;
            out.open_start = true;
        }
        return out;
    }
    return std::nullopt;
}

std::vector<std::size_t> patch_boundaries(const std::map<std::string, std::vector<Patch>>& patches,
                                          std::size_t series_length) {
    std::set<std::size_t> b;
    if (series_length > 0) {
        b.insert(0);
        b.insert(series_length - 1);
    }
    for (const auto& [_, ps] : patches)
        for (const auto& p : ps) b.insert(p.end_index);
    return {b.begin(), b.end()};
}

namespace {

std::optional<IndexRange> align_ordinal(const std::string& expr, const TimeSeriesDataset& data) {
    auto index_of = [&](const std::string& label) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < data.timestamps.size(); ++i)
            if (lower(data.timestamps[i].label) == label) return i;
        return std::nullopt;
    };
    const std::string s = lower(trim(expr));
    if (auto i = index_of(s)) return IndexRange{*i, *i};
    if (auto parts = split_range(s)) {
        auto a = index_of(trim(parts->first)), b = index_of(trim(parts->second));
        if (a && b) return IndexRange{std::min(*a, *b), std::max(*a, *b)};
    }
    return std::nullopt;
}

std::size_t nearest(const std::vector<std::size_t>& sorted, std::size_t x) {
    auto it = std::lower_bound(sorted.begin(), sorted.end(), x);
    if (it == sorted.end()) return sorted.back();
    if (it == sorted.begin() || *it == x) return *it;
    auto prev = *(it - 1);
    return (x - prev) <= (*it - x) ? prev : *it;
}

}  // namespace

IndexRange align_temporal_expression(std::string_view expr,
                                     const std::map<std::string, std::vector<Patch>>& patches,
                                     const TimeSeriesDataset& data) {
    const std::size_t n = data.timestamps.size();
    if (n == 0) throw Error(ErrorCode::Unresolvable, "no data");
    if (data.x_type == XType::Ordinal)
        if (auto r = align_ordinal(std::string(expr), data)) return *r;

    auto span = parse_time_phrase(expr);
    if (!span) throw Error(ErrorCode::Unresolvable, "unrecognized time phrase '" + std::string(expr) + "'");

    std::vector<chr::sys_days> dates;
    dates.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto d = data.date_at(i);
        if (!d) throw Error(ErrorCode::Unresolvable, "axis labels are not dates");
        dates.push_back(chr::sys_days{*d});
    }
    if (span->last < dates.front() || span->first > dates.back())
        throw Error(ErrorCode::Unresolvable, "'" + std::string(expr) + "' lies outside the data");

    std::optional<std::size_t> lo, hi;
    for (std::size_t i = 0; i < n; ++i) {
        if (dates[i] < span->first || dates[i] > span->last) continue;
        if (!lo) lo = i;
        hi = i;
    }
    if (!lo) {
        // The span falls between two samples: take the closer one.
        auto after = std::upper_bound(dates.begin(), dates.end(), span->last) - dates.begin();
        std::size_t a = static_cast<std::size_t>(after);
        std::size_t b = a - 1;
        const auto gap_after = dates[a] - span->last;
        const auto gap_before = span->first - dates[b];
        lo = hi = gap_before <= gap_after ? b : a;
    }
    if (!span->coarse) return {*lo, *hi};

    auto bounds = patch_boundaries(patches, n);
    std::vector<std::size_t> inside;
    for (auto b : bounds)
        if (b >= *lo && b <= *hi) inside.push_back(b);
    if (!inside.empty()) return {inside.front(), inside.back()};
    return {nearest(bounds, *lo), nearest(bounds, *hi)};
}

std::string window_label(const TimeSeriesDataset& data, IndexRange w) {
    if (data.timestamps.empty()) return {};
    const std::size_t last = std::min(w.last, data.timestamps.size() - 1);
    if (data.x_type == XType::Temporal && data.granularity() == Granularity::Month) {
        auto a = data.date_at(w.first), b = data.date_at(last);
        if (a && b && unsigned(a->month()) == 1 && unsigned(b->month()) == 12) {
            if (a->year() == b->year()) return std::to_string(int(a->year()));
            return std::to_string(int(a->year())) + " to " + std::to_string(int(b->year()));
        }
    }
    if (w.first == last) return data.display_label(w.first);
    return data.display_label(w.first) + " to " + data.display_label(last);
}

}  // namespace chartinsight
