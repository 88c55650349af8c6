#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "chartinsight/dataset.hpp"
#include "chartinsight/patches.hpp"

namespace chartinsight {

enum class CrossDirection { AOvertakesB, BOvertakesA };

std::string_view to_string(CrossDirection d) noexcept;

struct CrossingPoint {
    std::string dim_a;
    std::string dim_b;
    std::size_t index = 0;       // crossing lies in [index, next present sample]
    std::size_t next_index = 0;
    double position = 0;         // interpolated fractional index
    bool at_sample = false;      // a == b exactly at `index`
    std::string time;            // interpolated time label
    CrossDirection direction = CrossDirection::AOvertakesB;

    bool operator==(const CrossingPoint&) const = default;
};

/// Sign changes of a-b on the window, skipping samples where either series
/// is missing. A run of exact ties between opposite signs counts once, at
/// its first sample; touches (same sign on both sides) do not count.
std::vector<CrossingPoint> detect_intersections(const Series& a, const Series& b, IndexRange window);
std::vector<CrossingPoint> detect_intersections(const TimeSeriesDataset& data, std::string_view dim_a,
                                                std::string_view dim_b, IndexRange window);

enum class RelationKind { Same, Contrast };

std::string_view to_string(RelationKind k) noexcept;

struct Relation {
    RelationKind kind = RelationKind::Same;
    std::string above;                     // Same only
    std::vector<CrossingPoint> crossings;  // Contrast only
};

Relation classify_relation(const TimeSeriesDataset& data, std::string_view dim_a, std::string_view dim_b,
                           IndexRange window);

enum class TrendPairKind { SameTrend, ContrastTrend };
enum class GapDirection { Widening, Narrowing };

std::string_view to_string(TrendPairKind k) noexcept;
std::string_view to_string(GapDirection g) noexcept;

struct TrendPair {
    std::string dim_a;
    std::string dim_b;
    IndexRange window;
    Direction direction_a = Direction::Flat;
    Direction direction_b = Direction::Flat;
    TrendPairKind kind = TrendPairKind::SameTrend;
    std::optional<GapDirection> gap;
};

/// Net change between the first and last present samples of the window.
double window_net_change(const Series& s, IndexRange window);

/// Fraction of steps allowed to break the monotonicity of |a-b|.
inline constexpr double kGapViolationFraction = 0.05;

TrendPair classify_trend_pair(const TimeSeriesDataset& data, std::string_view dim_a, std::string_view dim_b,
                              IndexRange window);

struct RankEntry {
    std::string dimension;
    double mean = 0;
};

struct Ranking {
    IndexRange period;
    std::vector<RankEntry> order;  // descending mean
    bool tie = false;
};

std::vector<Ranking> rank_over_periods(const TimeSeriesDataset& data, const std::vector<IndexRange>& periods);

/// Stretch between consecutive crossings in which one dimension stays on top.
struct DominanceWindow {
    IndexRange window;
    std::string above;
};

struct PairInsight {
    std::string dim_a;
    std::string dim_b;
    bool tie_throughout = false;
    Relation relation;
    std::vector<DominanceWindow> dominance;
    std::vector<TrendPair> trend_pairs;
};

struct MultiInsightRecord {
    IndexRange window;
    std::vector<PairInsight> pairs;
    std::vector<Ranking> rankings;
};

/// Pairwise relations over `window`, trend pairs over the windows cut by
/// both dimensions' patch boundaries, and rankings over the dominance
/// windows and the whole window.
MultiInsightRecord multi_insight(const std::map<std::string, std::vector<Patch>>& patches,
                                 const TimeSeriesDataset& data, IndexRange window);

nlohmann::json to_json(const MultiInsightRecord& r, const TimeSeriesDataset& data);
/// Inverse of to_json; labels are ignored. Malformed records raise ClaimParseError.
MultiInsightRecord multi_record_from_json(const nlohmann::json& j);

}  // namespace chartinsight
