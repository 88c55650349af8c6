#include "chartinsight/dataset.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>

#include "chartinsight/error.hpp"

namespace chartinsight {

namespace chr = std::chrono;

std::string_view to_string(XType t) noexcept {
    return t == XType::Temporal ? "temporal" : "ordinal";
}

bool TimeSeriesDataset::has_dimension(std::string_view name) const {
    return dimensions.find(std::string(name)) != dimensions.end();
}

const Series& TimeSeriesDataset::series(std::string_view name) const {
    auto it = dimensions.find(std::string(name));
    if (it == dimensions.end()) throw Error(ErrorCode::UnknownDimension, std::string(name));
    return it->second;
}

std::vector<std::string> TimeSeriesDataset::dimension_names() const {
    std::vector<std::string> out;
    out.reserve(dimensions.size());
    for (const auto& [name, _] : dimensions) out.push_back(name);
    return out;
}

std::optional<chr::year_month_day> TimeSeriesDataset::date_at(std::size_t i) const {
    if (i >= timestamps.size()) return std::nullopt;
    if (x_type == XType::Temporal) return from_epoch_days(timestamps[i].key);
    return parse_date(timestamps[i].label);
}

Granularity TimeSeriesDataset::granularity() const {
    bool all_jan1 = true;
    bool all_first = true;
    for (std::size_t i = 0; i < timestamps.size(); ++i) {
        auto d = date_at(i);
        if (!d) return Granularity::Ordinal;
        if (unsigned(d->day()) != 1) all_first = false;
        if (unsigned(d->month()) != 1 || unsigned(d->day()) != 1) all_jan1 = false;
    }
    if (x_type == XType::Ordinal) return Granularity::Ordinal;
    if (all_jan1) return Granularity::Year;
    if (all_first) return Granularity::Month;
    return Granularity::Day;
}

std::string TimeSeriesDataset::display_label(std::size_t i) const {
    if (i >= timestamps.size()) return {};
    if (x_type == XType::Ordinal) return timestamps[i].label;
    auto d = from_epoch_days(timestamps[i].key);
    switch (granularity()) {
        case Granularity::Year: return std::to_string(int(d.year()));
        case Granularity::Month:
            return std::string(month_abbrev(unsigned(d.month()))) + " " + std::to_string(int(d.year()));
        default: return iso_date(d);
    }
}

PresentPoints present_points(const Series& s, IndexRange window) {
    PresentPoints out;
    if (s.empty()) return out;
    const std::size_t last = std::min(window.last, s.size() - 1);
    for (std::size_t i = window.first; i <= last; ++i) {
        if (s[i]) {
            out.index.push_back(i);
            out.value.push_back(*s[i]);
        }
    }
    return out;
}

namespace {

constexpr std::array<std::string_view, 12> kMonthAbbrev = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                                          "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
constexpr std::array<std::string_view, 12> kMonthName = {
    "january", "february", "march",     "april",   "may",      "june",
    "july",    "august",   "september", "october", "november", "december"};

std::optional<int> parse_int(std::string_view s) {
    if (s.empty()) return std::nullopt;
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
    return v;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::optional<chr::year_month_day> make_date(int y, int m, int d) {
    if (y < 1 || y > 9999 || m < 1 || m > 12 || d < 1 || d > 31) return std::nullopt;
    chr::year_month_day ymd{chr::year{y}, chr::month{unsigned(m)}, chr::day{unsigned(d)}};
    if (!ymd.ok()) return std::nullopt;
    return ymd;
}

std::vector<std::string_view> split_any(std::string_view s, std::string_view seps) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || seps.find(s[i]) != std::string_view::npos) {
            if (i > start) parts.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return parts;
}

}  // namespace

std::string_view month_abbrev(unsigned month) {
    return (month >= 1 && month <= 12) ? kMonthAbbrev[month - 1] : std::string_view{};
}

std::optional<unsigned> month_from_name(std::string_view word) {
    std::string w;
    for (char c : word) {
        if (c == '.') continue;
        w.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (w.size() < 3) return std::nullopt;
    for (unsigned i = 0; i < 12; ++i) {
        if (w == kMonthName[i]) return i + 1;
        if (w.size() == 3 && kMonthName[i].substr(0, 3) == w) return i + 1;
        if (w == "sept" && i == 8) return 9;
    }
    return std::nullopt;
}

std::optional<chr::year_month_day> parse_date(std::string_view text) {
    auto s = trim(text);
    if (s.empty()) return std::nullopt;
    // Drop a time-of-day suffix.
    if (auto t = s.find('T'); t != std::string_view::npos && t >= 4) s = s.substr(0, t);
    if (auto sp = s.find(' '); sp != std::string_view::npos && sp >= 8 && std::isdigit(static_cast<unsigned char>(s[0])))
        s = s.substr(0, sp);

    if (std::isdigit(static_cast<unsigned char>(s[0]))) {
        auto parts = split_any(s, "-/.");
        if (parts.empty() || parts.size() > 3) return std::nullopt;
        if (parts[0].size() == 4) {
            auto y = parse_int(parts[0]);
            if (!y) return std::nullopt;
            int m = 1, d = 1;
            if (parts.size() >= 2) {
                auto mm = parse_int(parts[1]);
                if (!mm || parts[1].size() > 2) return std::nullopt;
                m = *mm;
            }
            if (parts.size() == 3) {
                auto dd = parse_int(parts[2]);
                if (!dd || parts[2].size() > 2) return std::nullopt;
                d = *dd;
            }
            return make_date(*y, m, d);
        }
        // US-style MM/DD/YYYY.
        if (parts.size() == 3 && parts[2].size() == 4 && s.find('/') != std::string_view::npos) {
            auto m = parse_int(parts[0]), d = parse_int(parts[1]), y = parse_int(parts[2]);
            if (m && d && y) return make_date(*y, *m, *d);
        }
        return std::nullopt;
    }
    // "Jan 1 2000", "January 2000", "Jan 2000", "Jan 1, 2000".
    auto words = split_any(s, " ,");
    if (words.size() < 2 || words.size() > 3) return std::nullopt;
    auto month = month_from_name(words[0]);
    if (!month) return std::nullopt;
    int day = 1;
    std::string_view year_word = words.back();
    if (words.size() == 3) {
        auto d = parse_int(words[1]);
        if (!d) return std::nullopt;
        day = *d;
    }
    if (year_word.size() != 4) return std::nullopt;
    auto y = parse_int(year_word);
    if (!y) return std::nullopt;
    return make_date(*y, int(*month), day);
}

std::int64_t epoch_days(chr::year_month_day d) {
    return chr::sys_days{d}.time_since_epoch().count();
}

chr::year_month_day from_epoch_days(std::int64_t days) {
    return chr::year_month_day{chr::sys_days{chr::days{days}}};
}

std::string iso_date(chr::year_month_day d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(d.year()), unsigned(d.month()), unsigned(d.day()));
    return buf;
}

}  // namespace chartinsight
