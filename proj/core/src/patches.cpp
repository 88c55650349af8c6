#include "chartinsight/patches.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "chartinsight/error.hpp"
#include "chartinsight/ingest.hpp"

namespace chartinsight {

using nlohmann::json;

std::string_view to_string(TrendClass t) noexcept {
    switch (t) {
        case TrendClass::Rising: return "rising";
        case TrendClass::Falling: return "falling";
        case TrendClass::Stable: return "stable";
        case TrendClass::Change: return "change";
        case TrendClass::BigChange: return "big_change";
        case TrendClass::Cyclic: return "cyclic";
        case TrendClass::Oscillating: return "oscillating";
    }
    return "stable";
}

std::optional<TrendClass> trend_class_from_string(std::string_view s) noexcept {
    for (auto t : {TrendClass::Rising, TrendClass::Falling, TrendClass::Stable, TrendClass::Change,
                   TrendClass::BigChange, TrendClass::Cyclic, TrendClass::Oscillating})
        if (to_string(t) == s) return t;
    return std::nullopt;
}

std::string_view to_string(Direction d) noexcept {
    switch (d) {
        case Direction::Up: return "up";
        case Direction::Down: return "down";
        case Direction::Flat: return "flat";
    }
    return "flat";
}

double mean_of(std::span<const double> v) {
    if (v.empty()) return 0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance_of(std::span<const double> v) {
    if (v.empty()) return 0;
    const double m = mean_of(v);
    double acc = 0;
    for (double x : v) acc += (x - m) * (x - m);
    return acc / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
    if (v.empty()) return 0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string format_number(double v) {
    if (!std::isfinite(v) || v == 0) return "0";
    const double a = std::fabs(v);
    int before = static_cast<int>(std::floor(std::log10(a))) + 1;
    int decimals = std::clamp(4 - before, 0, 12);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    std::string s = buf;
    if (s.find('.') != std::string::npos) {
        while (!s.empty() && s.back() == '0') s.pop_back();
        if (!s.empty() && s.back() == '.') s.pop_back();
    }
    if (s == "-0") s = "0";
    return s;
}

// ---- extrema ------------------------------------------------------------------

namespace {

// Topographic prominence: walk outward to the nearest strictly more extreme
// sample on each side, tracking the deepest point passed; the higher of the
// two bases bounds the prominence.
double prominence_at(std::span<const double> s, std::size_t i, bool is_max) {
    const double sign = is_max ? 1.0 : -1.0;
    const double v = sign * s[i];
    double left_base = v;
    for (std::size_t j = i; j-- > 0;) {
        const double w = sign * s[j];
        if (w > v) break;
        left_base = std::min(left_base, w);
    }
    double right_base = v;
    for (std::size_t j = i + 1; j < s.size(); ++j) {
        const double w = sign * s[j];
        if (w > v) break;
        right_base = std::min(right_base, w);
    }
    return v - std::max(left_base, right_base);
}

}  // namespace

std::vector<ExtremumPoint> local_extrema(std::span<const double> s) {
    std::vector<ExtremumPoint> out;
    if (s.size() < 3) return out;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
        const bool is_max = s[i] > s[i - 1] && s[i] >= s[i + 1];
        const bool is_min = s[i] < s[i - 1] && s[i] <= s[i + 1];
        if (!is_max && !is_min) continue;
        out.push_back({i, is_max, prominence_at(s, i, is_max)});
    }
    return out;
}

std::vector<ExtremumPoint> prominent_extrema(std::span<const double> s, const SegmentationConfig& cfg) {
    std::vector<ExtremumPoint> out;
    if (s.size() < 3) return out;
    auto [lo, hi] = std::minmax_element(s.begin(), s.end());
    const double range = *hi - *lo;
    if (range <= 0) return out;
    const double need = cfg.prominence_fraction * range;
    for (const auto& e : local_extrema(s))
        if (e.prominence > 0 && e.prominence >= need) out.push_back(e);
    return out;
}

std::vector<std::size_t> find_segmentation_points(std::span<const double> s, const SegmentationConfig& cfg) {
    if (s.size() < 2) throw Error(ErrorCode::TooShort, "series needs at least two points");
    std::vector<std::size_t> out;
    for (const auto& e : prominent_extrema(s, cfg)) out.push_back(e.index);
    return out;
}

// ---- patches ------------------------------------------------------------------

namespace {

void fill_stats(std::span<const double> s, Patch& p) {
    auto slice = s.subspan(p.start_index, p.end_index - p.start_index + 1);
    auto lo = std::min_element(slice.begin(), slice.end());
    auto hi = std::max_element(slice.begin(), slice.end());
    PatchStats& st = p.stats;
    st.min = {*lo, p.start_index + static_cast<std::size_t>(lo - slice.begin())};
    st.max = {*hi, p.start_index + static_cast<std::size_t>(hi - slice.begin())};
    st.mean = mean_of(slice);
    st.variance = variance_of(slice);
    st.range = *hi - *lo;
    st.trend_start_value = s[p.anchor_index];
    st.trend_end_value = s[p.end_index];
    st.net_change = st.trend_end_value - st.trend_start_value;
    if (st.trend_start_value != 0) {
        st.growth_rate = st.net_change / std::fabs(st.trend_start_value);
        st.growth_is_absolute = false;
    } else {
        st.growth_rate = st.net_change;
        st.growth_is_absolute = true;
    }
    st.direction = st.net_change > 0 ? Direction::Up : st.net_change < 0 ? Direction::Down : Direction::Flat;
}

Patch make_patch(std::span<const double> s, std::size_t start, std::size_t end) {
    Patch p;
    p.start_index = start;
    p.end_index = end;
    p.anchor_index = start > 0 ? start - 1 : 0;
    fill_stats(s, p);
    return p;
}

double stddev_population(std::span<const double> v) { return std::sqrt(variance_of(v)); }

}  // namespace

std::vector<Patch> patches_from_cuts(std::span<const double> s, std::span<const std::size_t> cuts) {
    std::vector<Patch> out;
    if (s.empty()) return out;
    std::size_t start = 0;
    for (std::size_t c : cuts) {
        if (c < start || c + 1 >= s.size()) continue;
        out.push_back(make_patch(s, start, c));
        start = c + 1;
    }
    out.push_back(make_patch(s, start, s.size() - 1));
    return out;
}

double merge_threshold(std::span<const Patch> patches, const SegmentationConfig& cfg) {
    std::vector<double> vars;
    vars.reserve(patches.size());
    for (const auto& p : patches) vars.push_back(p.stats.variance);
    return median_of(vars) + cfg.k * stddev_population(vars);
}

std::vector<Patch> merge_low_variance_patches(std::span<const double> s, std::vector<Patch> patches,
                                              const SegmentationConfig& cfg) {
    if (patches.size() < 2 || !cfg.merge_patches) return patches;
    const double threshold = merge_threshold(patches, cfg);
    std::vector<Patch> out;
    std::size_t i = 0;
    while (i < patches.size()) {
        std::size_t j = i;
        if (patches[i].stats.variance < threshold) {
            while (j + 1 < patches.size() && patches[j + 1].stats.variance < threshold) ++j;
        }
        if (j > i) {
            Patch merged = make_patch(s, patches[i].start_index, patches[j].end_index);
            merged.dimension = patches[i].dimension;
            merged.anchor_index = patches[i].anchor_index;
            fill_stats(s, merged);
            out.push_back(std::move(merged));
        } else {
            out.push_back(std::move(patches[i]));
        }
        i = j + 1;
    }
    return out;
}

// ---- trend ladder -------------------------------------------------------------

TrendContext trend_context(std::span<const double> s) {
    TrendContext ctx;
    ctx.series_length = s.size();
    if (s.empty()) return ctx;
    auto [lo, hi] = std::minmax_element(s.begin(), s.end());
    ctx.global_range = *hi - *lo;
    if (s.size() > 1) {
        double acc = 0;
        for (std::size_t i = 1; i < s.size(); ++i) acc += std::fabs(s[i] - s[i - 1]);
        ctx.mean_abs_step = acc / static_cast<double>(s.size() - 1);
    }
    return ctx;
}

int mean_crossings(std::span<const double> v) {
    if (v.size() < 2) return 0;
    const double m = mean_of(v);
    double scale = 0;
    for (double x : v) scale = std::max(scale, std::fabs(x - m));
    const double eps = scale * 1e-12;
    int crossings = 0;
    int prev = 0;
    for (double x : v) {
        const double d = x - m;
        const int sgn = d > eps ? 1 : d < -eps ? -1 : 0;
        if (sgn == 0) continue;
        if (prev != 0 && sgn != prev) ++crossings;
        prev = sgn;
    }
    return crossings;
}

double autocorrelation_peak(std::span<const double> v) {
    const std::size_t n = v.size();
    if (n < 8) return 0;
    const double m = mean_of(v);
    double c0 = 0;
    for (double x : v) c0 += (x - m) * (x - m);
    c0 /= static_cast<double>(n);
    if (c0 <= 0) return 0;
    const std::size_t max_lag = n / 2;
    std::vector<double> r(max_lag + 1, 0.0);
    r[0] = 1.0;
    for (std::size_t lag = 1; lag <= max_lag; ++lag) {
        double acc = 0;
        for (std::size_t t = 0; t + lag < n; ++t) acc += (v[t] - m) * (v[t + lag] - m);
        r[lag] = acc / static_cast<double>(n - lag) / c0;
    }
    double best = 0;
    for (std::size_t lag = 2; lag <= max_lag; ++lag) {
        const bool rising_into = r[lag] > r[lag - 1];
        const bool falling_after = lag == max_lag || r[lag] >= r[lag + 1];
        if (rising_into && falling_after) best = std::max(best, r[lag]);
    }
    return best;
}

TrendClass classify_trend(std::span<const double> v, const TrendContext& ctx, const SegmentationConfig& cfg) {
    const std::size_t n = v.size();
    if (n <= 1 || ctx.global_range <= 0) return TrendClass::Stable;

    const int crossings = mean_crossings(v);
    if (crossings >= 3 && autocorrelation_peak(v) >= cfg.cyclicality_min_autocorr) return TrendClass::Cyclic;
    if (crossings >= cfg.oscillation_min_crossings) return TrendClass::Oscillating;

    auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double slice_range = *hi - *lo;
    const double net = v.back() - v.front();

    // Least-squares slope per step.
    const double tm = 0.5 * static_cast<double>(n - 1);
    const double vm = mean_of(v);
    double sxy = 0, sxx = 0;
    for (std::size_t t = 0; t < n; ++t) {
        sxy += (static_cast<double>(t) - tm) * (v[t] - vm);
        sxx += (static_cast<double>(t) - tm) * (static_cast<double>(t) - tm);
    }
    const double slope = sxx > 0 ? sxy / sxx : 0;
    const double mean_rate =
        ctx.series_length > 1 ? ctx.global_range / static_cast<double>(ctx.series_length - 1) : ctx.global_range;
    const double norm_slope = mean_rate > 0 ? slope / mean_rate : 0;
    const double spread = std::sqrt(variance_of(v)) / ctx.global_range;

    if (std::fabs(norm_slope) < cfg.stable_slope_eps && spread < cfg.stable_spread_fraction) return TrendClass::Stable;
    if (crossings >= 2 && std::fabs(net) < 0.25 * slice_range) return TrendClass::Change;

    TrendClass dir;
    if (net > 0)
        dir = TrendClass::Rising;
    else if (net < 0)
        dir = TrendClass::Falling;
    else if (slope != 0)
        dir = slope > 0 ? TrendClass::Rising : TrendClass::Falling;
    else
        return TrendClass::Stable;

    if (ctx.reference_patch_range > 0 && ctx.mean_abs_step > 0 &&
        slice_range / ctx.reference_patch_range >= cfg.significance_ratio &&
        std::fabs(net) / static_cast<double>(n - 1) >= cfg.big_change_rate_factor * ctx.mean_abs_step)
        return TrendClass::BigChange;
    return dir;
}

namespace {

void classify_all(std::span<const double> s, std::vector<Patch>& patches, const SegmentationConfig& cfg,
                  double reference) {
    TrendContext ctx = trend_context(s);
    ctx.reference_patch_range = reference;
    for (auto& p : patches) {
        auto window = s.subspan(p.anchor_index, p.end_index - p.anchor_index + 1);
        p.stats.trend_class = classify_trend(window, ctx, cfg);
    }
}

double max_range(const std::vector<Patch>& patches) {
    double r = 0;
    for (const auto& p : patches) r = std::max(r, p.stats.range);
    return r;
}

}  // namespace

std::vector<Patch> segment(std::span<const double> s, const SegmentationConfig& cfg) {
    auto cuts = find_segmentation_points(s, cfg);
    auto patches = merge_low_variance_patches(s, patches_from_cuts(s, cuts), cfg);
    classify_all(s, patches, cfg, max_range(patches));
    return patches;
}

std::vector<Patch> segment_series(const Series& series, const SegmentationConfig& cfg,
                                  std::optional<double> reference_patch_range) {
    auto pts = present_points(series, {0, series.empty() ? 0 : series.size() - 1});
    if (pts.value.size() < 2) throw Error(ErrorCode::TooShort, "series needs at least two present points");

    std::span<const double> s(pts.value);
    auto cuts = find_segmentation_points(s, cfg);
    auto compact = merge_low_variance_patches(s, patches_from_cuts(s, cuts), cfg);
    classify_all(s, compact, cfg, reference_patch_range.value_or(max_range(compact)));

    std::vector<Patch> out;
    out.reserve(compact.size());
    for (std::size_t k = 0; k < compact.size(); ++k) {
        Patch p = compact[k];
        p.start_index = k == 0 ? 0 : out.back().end_index + 1;
        p.end_index = k + 1 == compact.size() ? series.size() - 1 : pts.index[compact[k].end_index];
        p.anchor_index = pts.index[compact[k].anchor_index];
        p.stats.min.position = pts.index[compact[k].stats.min.position];
        p.stats.max.position = pts.index[compact[k].stats.max.position];
        out.push_back(std::move(p));
    }
    return out;
}

double chart_max_patch_range(const std::map<std::string, std::vector<Patch>>& patches) {
    double r = 0;
    for (const auto& [_, ps] : patches) r = std::max(r, max_range(ps));
    return r;
}

std::map<std::string, std::vector<Patch>> chart_patches(const TimeSeriesDataset& data, const SegmentationConfig& cfg) {
    std::map<std::string, std::vector<Patch>> out;
    for (const auto& [name, s] : data.dimensions) out.emplace(name, segment_series(s, cfg));
    const double reference = chart_max_patch_range(out);
    for (auto& [name, patches] : out) {
        patches = segment_series(data.series(name), cfg, reference);
        for (auto& p : patches) {
            p.dimension = name;
            p.start_time = data.display_label(p.start_index);
            p.end_time = data.display_label(p.end_index);
            p.anchor_time = data.display_label(p.anchor_index);
        }
    }
    return out;
}

UniInsightRecord uni_insight(const TimeSeriesDataset& data, std::string_view dimension, const SegmentationConfig& cfg) {
    const Series& s = data.series(dimension);
    auto all = chart_patches(data, cfg);
    auto pts = present_points(s, data.full_range());

    UniInsightRecord r;
    r.dimension = std::string(dimension);
    r.points = s.size();
    r.missing = s.size() - pts.index.size();
    r.first_time = data.display_label(pts.index.front());
    r.first_value = pts.value.front();
    r.last_time = data.display_label(pts.index.back());
    r.last_value = pts.value.back();
    r.mean = mean_of(pts.value);
    const double net = r.last_value - r.first_value;
    if (r.first_value != 0) {
        r.overall_growth_rate = net / std::fabs(r.first_value);
    } else {
        r.overall_growth_rate = net;
        r.growth_is_absolute = true;
    }
    auto hi = std::max_element(pts.value.begin(), pts.value.end());
    auto lo = std::min_element(pts.value.begin(), pts.value.end());
    r.max = {*hi, pts.index[static_cast<std::size_t>(hi - pts.value.begin())]};
    r.min = {*lo, pts.index[static_cast<std::size_t>(lo - pts.value.begin())]};
    r.max_time = data.display_label(r.max.position);
    r.min_time = data.display_label(r.min.position);
    r.patches = std::move(all.at(r.dimension));
    return r;
}

UniInsightRecord uni_insight(const BoundChart& chart, std::string_view dimension, const SegmentationConfig& cfg) {
    return uni_insight(chart.data, dimension, cfg);
}

// ---- records ------------------------------------------------------------------

namespace {

json value_at_json(const ValueAt& v, const std::string& time) {
    return {{"value", v.value}, {"index", v.position}, {"time", time}};
}

json patch_json(const Patch& p, std::size_t id) {
    const auto& st = p.stats;
    return {{"id", id},
            {"start", p.start_time},
            {"end", p.end_time},
            {"anchor", p.anchor_time},
            {"start_index", p.start_index},
            {"end_index", p.end_index},
            {"anchor_index", p.anchor_index},
            {"trend", std::string(to_string(st.trend_class))},
            {"direction", std::string(to_string(st.direction))},
            {"anchor_value", st.trend_start_value},
            {"end_value", st.trend_end_value},
            {"min", {{"value", st.min.value}, {"index", st.min.position}}},
            {"max", {{"value", st.max.value}, {"index", st.max.position}}},
            {"mean", st.mean},
            {"variance", st.variance},
            {"range", st.range},
            {"net_change", st.net_change},
            {"growth_rate", st.growth_rate},
            {"growth_is_absolute", st.growth_is_absolute}};
}

Direction direction_from(std::string_view s) {
    if (s == "up") return Direction::Up;
    if (s == "down") return Direction::Down;
    return Direction::Flat;
}

}  // namespace

json to_json(const UniInsightRecord& r) {
    json patches = json::array();
    for (std::size_t i = 0; i < r.patches.size(); ++i) patches.push_back(patch_json(r.patches[i], i));
    return {{"dimension", r.dimension},
            {"points", r.points},
            {"missing", r.missing},
            {"start", {{"time", r.first_time}, {"value", r.first_value}}},
            {"end", {{"time", r.last_time}, {"value", r.last_value}}},
            {"mean", r.mean},
            {"overall_growth", {{"rate", r.overall_growth_rate}, {"absolute", r.growth_is_absolute}}},
            {"max", value_at_json(r.max, r.max_time)},
            {"min", value_at_json(r.min, r.min_time)},
            {"patches", std::move(patches)}};
}

UniInsightRecord uni_record_from_json(const json& j) {
    UniInsightRecord r;
    r.dimension = j.at("dimension").get<std::string>();
    r.points = j.at("points").get<std::size_t>();
    r.missing = j.value("missing", std::size_t{0});
    r.first_time = j.at("start").at("time").get<std::string>();
    r.first_value = j.at("start").at("value").get<double>();
    r.last_time = j.at("end").at("time").get<std::string>();
    r.last_value = j.at("end").at("value").get<double>();
    r.mean = j.at("mean").get<double>();
    r.overall_growth_rate = j.at("overall_growth").at("rate").get<double>();
    r.growth_is_absolute = j.at("overall_growth").at("absolute").get<bool>();
    r.max = {j.at("max").at("value").get<double>(), j.at("max").at("index").get<std::size_t>()};
    r.max_time = j.at("max").at("time").get<std::string>();
    r.min = {j.at("min").at("value").get<double>(), j.at("min").at("index").get<std::size_t>()};
    r.min_time = j.at("min").at("time").get<std::string>();
    for (const auto& pj : j.at("patches")) {
        Patch p;
        p.dimension = r.dimension;
        p.start_time = pj.at("start").get<std::string>();
        p.end_time = pj.at("end").get<std::string>();
        p.anchor_time = pj.at("anchor").get<std::string>();
        p.start_index = pj.at("start_index").get<std::size_t>();
        p.end_index = pj.at("end_index").get<std::size_t>();
        p.anchor_index = pj.at("anchor_index").get<std::size_t>();
        auto& st = p.stats;
        st.trend_class = trend_class_from_string(pj.at("trend").get<std::string>()).value_or(TrendClass::Stable);
        st.direction = direction_from(pj.at("direction").get<std::string>());
        st.trend_start_value = pj.at("anchor_value").get<double>();
        st.trend_end_value = pj.at("end_value").get<double>();
        st.min = {pj.at("min").at("value").get<double>(), pj.at("min").at("index").get<std::size_t>()};
        st.max = {pj.at("max").at("value").get<double>(), pj.at("max").at("index").get<std::size_t>()};
        st.mean = pj.at("mean").get<double>();
        st.variance = pj.at("variance").get<double>();
        st.range = pj.at("range").get<double>();
        st.net_change = pj.at("net_change").get<double>();
        st.growth_rate = pj.at("growth_rate").get<double>();
        st.growth_is_absolute = pj.at("growth_is_absolute").get<bool>();
        r.patches.push_back(std::move(p));
    }
    return r;
}

}  // namespace chartinsight
