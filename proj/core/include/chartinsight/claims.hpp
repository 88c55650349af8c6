#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "chartinsight/analysis.hpp"
#include "chartinsight/dataset.hpp"
#include "chartinsight/patches.hpp"

namespace chartinsight {

enum class ClaimKind { Extremum, Numeric, TrendDirection, Range, MultiTrend, Significance };

std::string_view to_string(ClaimKind k) noexcept;
std::optional<ClaimKind> claim_kind_from_string(std::string_view s) noexcept;

enum class Extreme { Max, Min };
enum class Statistic { Mean, GrowthRate, ValueAt };

std::string_view to_string(Statistic s) noexcept;

struct ExtremumClaim {
    Extreme which = Extreme::Max;
    double value = 0;
    std::string dimension;
    IndexRange window;                // scope of the extremum
    std::optional<IndexRange> time;   // when the sentence says it happened
};

struct NumericClaim {
    Statistic statistic = Statistic::Mean;
    double value = 0;
    std::string dimension;
    IndexRange window;
};

/// Claimed shape of a window: Rising, Falling, Stable, Change (fluctuating),
/// Oscillating or Cyclic.
struct TrendClaim {
    TrendClass trend = TrendClass::Rising;
    std::string dimension;
    IndexRange window;
    bool anchored = false;  // measure change from the sample before the window
};

struct RangeClaim {
    TrendClass trend = TrendClass::Rising;
    std::string dimension;
    IndexRange start;  // samples the start phrase covers
    IndexRange end;    // samples the end phrase covers
};

enum class MultiAssertion { SameRelation, ContrastRelation, SameTrend, ContrastTrend, GapWidening, GapNarrowing, Attribute };

std::string_view to_string(MultiAssertion a) noexcept;

/// "<dimension> reached its <feature> in <time>" used inside a comparison.
struct AttributeRef {
    std::string dimension;
    Extreme feature = Extreme::Max;
    IndexRange time;
};

struct MultiClaim {
    MultiAssertion asserted = MultiAssertion::SameRelation;
    std::string dim_a;
    std::string dim_b;
    IndexRange window;
    bool anchored = false;
    std::string above;  // SameRelation
    std::optional<AttributeRef> attribute;
};

struct SignificanceClaim {
    std::string dimension;
    IndexRange window;
    bool significant = true;
};

using ClaimBody = std::variant<ExtremumClaim, NumericClaim, TrendClaim, RangeClaim, MultiClaim, SignificanceClaim>;

struct Claim {
    ClaimBody body;
    std::size_t sentence = 0;
    std::string value_text;  // number as written, for substitution
    std::string word;        // trend or intensity word as written
    std::optional<std::string> unresolved;  // why the claim could not be bound to the data

    ClaimKind kind() const noexcept;
};

/// Wire form of a claim before its time phrases are resolved. This is the
/// JSON a backend returns for a selfcheck "extract" request:
///   {"claims": [{"kind": "extremum", "which": "max", "dimension": "Apple",
///                "value": 3.38, "value_text": "3.38", "time": "Nov 2007"}, ...]}
/// Kind-specific keys: numeric {statistic}, trend {trend, word}, range
/// {trend, start, end}, multi {assert, pair, above, attribute{dimension,
/// feature, time}}, significance {asserted: significant|minor, word}. A
/// missing "time" means the whole chart.
nlohmann::json extract_claims_rule_based(std::string_view sentence, const std::vector<std::string>& dimensions);

/// Bind wire claims to the chart. Malformed entries raise ClaimParseError;
/// phrases that do not resolve produce claims marked unresolved.
std::vector<Claim> claims_from_json(const nlohmann::json& wire, const ChartFacts& facts, std::size_t sentence,
                                    const std::vector<std::string>& default_dimensions = {});

nlohmann::json to_json(const Claim& c, const TimeSeriesDataset& data);

/// Words the intensity rules recognize, with their counterpart of the
/// opposite strength ("sharply" <-> "gradually").
std::optional<std::string> soften_word(std::string_view word);
std::optional<std::string> strengthen_word(std::string_view word);

}  // namespace chartinsight
