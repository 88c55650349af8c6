#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "chartinsight/dataset.hpp"

namespace chartinsight {

struct BoundChart;

struct SegmentationConfig {
    /// Merge threshold = median(variances) + k * stddev(variances).
    double k = 0.0;
    /// When false every prominent extremum cuts and nothing is merged.
    bool merge_patches = true;
    /// An interior extremum cuts the series when its prominence is at least
    /// this fraction of the series' global range.
    double prominence_fraction = 0.05;
    /// |slope| relative to the series' mean full-range rate below which a
    /// patch may be stable.
    double stable_slope_eps = 0.02;
    /// Stable additionally requires stddev / global range below this.
    double stable_spread_fraction = 0.1;
    int oscillation_min_crossings = 4;
    double cyclicality_min_autocorr = 0.6;
    /// A rise or fall is promoted to BigChange when its range is significant
    /// and its per-step rate is at least this multiple of the series' mean
    /// absolute step.
    double big_change_rate_factor = 2.0;
    /// Window range / chart-wide max patch range at or above which a change
    /// counts as significant.
    double significance_ratio = 0.25;
};

enum class TrendClass { Rising, Falling, Stable, Change, BigChange, Cyclic, Oscillating };

std::string_view to_string(TrendClass t) noexcept;
std::optional<TrendClass> trend_class_from_string(std::string_view s) noexcept;

enum class Direction { Up, Down, Flat };

std::string_view to_string(Direction d) noexcept;

struct ValueAt {
    double value = 0;
    std::size_t position = 0;
};

/// Descriptive statistics (min, max, mean, variance, range) cover the patch's
/// own samples. Trend quantities (net change, growth rate, direction, class)
/// are measured from the preceding patch's last sample, the extremum the
/// patch starts from, through the patch end.
struct PatchStats {
    ValueAt min;
    ValueAt max;
    double mean = 0;
    double variance = 0;  // population
    double range = 0;
    double trend_start_value = 0;  // value at the anchor
    double trend_end_value = 0;    // value at the patch end
    double net_change = 0;
    double growth_rate = 0;
    bool growth_is_absolute = false;  // first value was zero: growth_rate holds the delta
    Direction direction = Direction::Flat;
    TrendClass trend_class = TrendClass::Stable;
};

struct Patch {
    std::string dimension;
    std::size_t start_index = 0;
    std::size_t end_index = 0;
    std::size_t anchor_index = 0;  // start of the trend window
    std::string start_time;
    std::string end_time;
    std::string anchor_time;
    PatchStats stats;

    IndexRange range() const noexcept { return {start_index, end_index}; }
    IndexRange trend_window() const noexcept { return {anchor_index, end_index}; }
};

struct ExtremumPoint {
    std::size_t index = 0;
    bool is_max = false;
    double prominence = 0;
};

/// Interior local extrema of `series` with their prominence. Maxima satisfy
/// v[i] > v[i-1] and v[i] >= v[i+1] (minima mirrored), so a plateau counts once.
std::vector<ExtremumPoint> local_extrema(std::span<const double> series);

/// Extrema whose prominence reaches prominence_fraction * global range.
std::vector<ExtremumPoint> prominent_extrema(std::span<const double> series, const SegmentationConfig& cfg);

std::vector<std::size_t> find_segmentation_points(std::span<const double> series, const SegmentationConfig& cfg);

/// Patches ending at each cut (the cut sample belongs to the patch it ends),
/// with descriptive stats filled in and trend fields left default.
std::vector<Patch> patches_from_cuts(std::span<const double> series, std::span<const std::size_t> cuts);

double merge_threshold(std::span<const Patch> patches, const SegmentationConfig& cfg);

/// Single pass: each maximal run of two or more consecutive patches whose
/// variance is below the threshold becomes one patch.
std::vector<Patch> merge_low_variance_patches(std::span<const double> series, std::vector<Patch> patches,
                                              const SegmentationConfig& cfg);

/// Series-level scale used by the trend ladder.
struct TrendContext {
    double global_range = 0;
    double mean_abs_step = 0;
    std::size_t series_length = 0;
    double reference_patch_range = 0;  // max patch range across the chart
};

TrendContext trend_context(std::span<const double> series);

/// `values` is the trend window (anchor through patch end).
TrendClass classify_trend(std::span<const double> values, const TrendContext& ctx, const SegmentationConfig& cfg);

/// Mean-crossing count of `values` (zeros of the centred series skipped).
int mean_crossings(std::span<const double> values);

/// Largest autocorrelation local peak at lag >= 2 (0 when none).
double autocorrelation_peak(std::span<const double> values);

std::vector<Patch> segment(std::span<const double> series, const SegmentationConfig& cfg);

/// Segment a series that may contain gaps: cut over the present samples and
/// widen each patch so the patches tile [0, n-1]. Trend classes are judged
/// against `reference_patch_range` when given, the series' own otherwise.
std::vector<Patch> segment_series(const Series& series, const SegmentationConfig& cfg,
                                  std::optional<double> reference_patch_range = std::nullopt);

struct UniInsightRecord {
    std::string dimension;
    std::size_t points = 0;
    std::size_t missing = 0;
    std::string first_time;
    double first_value = 0;
    std::string last_time;
    double last_value = 0;
    double mean = 0;
    double overall_growth_rate = 0;
    bool growth_is_absolute = false;
    ValueAt max;
    std::string max_time;
    ValueAt min;
    std::string min_time;
    std::vector<Patch> patches;
};

/// Patches for every dimension of a chart, classified against the chart-wide
/// maximum patch range.
std::map<std::string, std::vector<Patch>> chart_patches(const TimeSeriesDataset& data, const SegmentationConfig& cfg);

double chart_max_patch_range(const std::map<std::string, std::vector<Patch>>& patches);

UniInsightRecord uni_insight(const BoundChart& chart, std::string_view dimension, const SegmentationConfig& cfg);
UniInsightRecord uni_insight(const TimeSeriesDataset& data, std::string_view dimension, const SegmentationConfig& cfg);

nlohmann::json to_json(const UniInsightRecord& r);
UniInsightRecord uni_record_from_json(const nlohmann::json& j);

/// Fixed-precision rendering shared by records and generated prose: four
/// significant digits, trailing zeros removed, no exponent.
std::string format_number(double v);

// Descriptive statistics over a sample (population variance).
double mean_of(std::span<const double> v);
double variance_of(std::span<const double> v);
double median_of(std::vector<double> v);

}  // namespace chartinsight
