#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace chartinsight {

enum class XType { Temporal, Ordinal };

std::string_view to_string(XType t) noexcept;

/// Sampling resolution of the time axis; drives how labels are printed.
enum class Granularity { Year, Month, Day, Ordinal };

/// A point on the x axis. For temporal axes `key` is days since 1970-01-01
/// and `label` the canonical ISO date; for ordinal axes `key` is the rank
/// index and `label` the original text.
struct TimePoint {
    std::int64_t key = 0;
    std::string label;

    bool operator==(const TimePoint&) const = default;
};

/// Inclusive index window [first, last] over a dataset's timestamps.
struct IndexRange {
    std::size_t first = 0;
    std::size_t last = 0;

    std::size_t size() const noexcept { return last >= first ? last - first + 1 : 0; }
    bool contains(std::size_t i) const noexcept { return i >= first && i <= last; }
    bool overlaps(const IndexRange& o) const noexcept { return first <= o.last && o.first <= last; }

    bool operator==(const IndexRange&) const = default;
    auto operator<=>(const IndexRange&) const = default;
};

/// One dimension's values aligned to the timestamps; nullopt marks a gap.
using Series = std::vector<std::optional<double>>;

struct TimeSeriesDataset {
    XType x_type = XType::Temporal;
    std::vector<TimePoint> timestamps;
    std::map<std::string, Series> dimensions;
    std::map<std::string, std::string> units;

    // Provenance of the parsed table. Not part of value identity: a long
    // table and its wide equivalent compare equal.
    std::string time_field;
    std::string key_field;
    std::string value_field;

    bool operator==(const TimeSeriesDataset& o) const {
        return x_type == o.x_type && timestamps == o.timestamps && dimensions == o.dimensions &&
               units == o.units;
    }

    std::size_t size() const noexcept { return timestamps.size(); }
    bool has_dimension(std::string_view name) const;
    const Series& series(std::string_view name) const;  // throws UnknownDimension
    std::vector<std::string> dimension_names() const;
    IndexRange full_range() const { return {0, size() == 0 ? 0 : size() - 1}; }

    Granularity granularity() const;
    std::optional<std::chrono::year_month_day> date_at(std::size_t i) const;
    /// Human-readable label: "2007", "Mar 2007", "2007-03-15" or the ordinal text.
    std::string display_label(std::size_t i) const;
};

/// Present (index, value) pairs of a series restricted to `window`.
struct PresentPoints {
    std::vector<std::size_t> index;
    std::vector<double> value;
    bool empty() const noexcept { return index.empty(); }
};
PresentPoints present_points(const Series& s, IndexRange window);

// Calendar helpers shared by ingest and the temporal grammar.
std::optional<std::chrono::year_month_day> parse_date(std::string_view text);
std::int64_t epoch_days(std::chrono::year_month_day d);
std::chrono::year_month_day from_epoch_days(std::int64_t days);
std::string iso_date(std::chrono::year_month_day d);
std::string_view month_abbrev(unsigned month);
/// 1-based month from an English month name or three-letter abbreviation.
std::optional<unsigned> month_from_name(std::string_view word);

}  // namespace chartinsight
