#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "chartinsight/analysis.hpp"
#include "chartinsight/claims.hpp"

namespace chartinsight {

class Backend;
struct DataRef;

enum class VerdictStatus { Pass, Fail, Unverifiable };

std::string_view to_string(VerdictStatus s) noexcept;

struct Verdict {
    VerdictStatus status = VerdictStatus::Pass;
    std::optional<double> computed;            // corrected value or ratio
    std::optional<std::string> computed_text;  // corrected class or window
    std::optional<IndexRange> computed_window;
    double tolerance_used = 0;
    std::string explanation;
};

inline constexpr double kExtremumTolerance = 0.005;
inline constexpr double kMeanTolerance = 0.01;
inline constexpr double kGrowthTolerance = 0.01;
inline constexpr double kValueAtTolerance = 0.005;

Verdict verify_extremum(const Claim& claim, const ChartFacts& facts);
Verdict verify_numeric(const Claim& claim, const ChartFacts& facts);
Verdict verify_trend_direction(const Claim& claim, const ChartFacts& facts);
Verdict verify_range(const Claim& claim, const ChartFacts& facts);
Verdict verify_multidim(const Claim& claim, const ChartFacts& facts);
Verdict verify_significance(const Claim& claim, const ChartFacts& facts);

/// Dispatch on the claim kind. Unresolved claims are Unverifiable.
Verdict verify(const Claim& claim, const ChartFacts& facts);

struct Significance {
    double ratio = 0;
    bool significant = false;
};

/// Window range over the largest patch range of any dimension in the chart.
Significance significance_of_change(const ChartFacts& facts, std::string_view dimension, IndexRange window);

/// Ask the backend for the claims in one sentence and bind them to the chart.
std::vector<Claim> extract_claims(std::string_view sentence, const std::vector<DataRef>& refs, Backend& backend,
                                  const ChartFacts& facts, std::size_t sentence_index = 0);

nlohmann::json to_json(const Verdict& v);

}  // namespace chartinsight
