#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "chartinsight/sumdoc.hpp"

namespace chartinsight {

struct PointSet {
    std::vector<std::vector<double>> points;
    std::vector<std::size_t> labels;  // sentence indices, optional

    std::size_t size() const noexcept { return points.size(); }
    std::size_t dim() const noexcept { return points.empty() ? 0 : points.front().size(); }
};

enum class Embedding { HashedTfidf, ExternalVectors };

struct MetricsConfig {
    double span_percentile = 95;
    int entropy_grid_bins = 10;
    Embedding embedding = Embedding::HashedTfidf;
    std::size_t embedding_dim = 256;

    void validate() const;
};

/// Deterministic hashed tf-idf vectors, L2-normalized. The idf is computed
/// over the given sentences.
PointSet embed(const std::vector<std::string>& sentences, const MetricsConfig& cfg = {});

/// Pass-through of externally supplied vectors, L2-normalized.
PointSet embed_external(std::vector<std::vector<double>> vectors);

std::vector<std::string> tokenize(std::string_view text);

struct Diversity {
    double remote_clique = 0;
    double chamfer = 0;
    double mst_dispersion = 0;
    double span = 0;
    double sparseness = 0;
    double entropy = 0;
    bool degenerate = false;  // fewer than two points: all zero by convention

    bool operator==(const Diversity&) const = default;
};

/// Distances are Euclidean on the points as given; embed() normalizes.
Diversity diversity(const PointSet& ps, const MetricsConfig& cfg = {});

double euclidean(const std::vector<double>& a, const std::vector<double>& b);

/// Prim's algorithm on the complete graph; returns the chosen edges.
std::vector<std::pair<std::size_t, std::size_t>> mst_edges(const PointSet& ps);

/// Linear-interpolated percentile, p in (0, 100].
double percentile(std::vector<double> v, double p);

enum class HallucinationType {
    ExtremumError,
    NumericalValueError,
    TrendDirectionError,
    MultidimensionalTrendError,
    RangeError,
    CyclicalityError,
    StabilityError,
    DetailOmission,
    JunkDescription,
    ProportionPerceptionError,
};

inline constexpr std::size_t kHallucinationTypeCount = 10;

std::string_view to_string(HallucinationType t) noexcept;
std::optional<HallucinationType> hallucination_type_from_string(std::string_view s) noexcept;
const std::vector<HallucinationType>& all_hallucination_types();

struct HallucinationAnnotation {
    std::size_t sentence_index = 0;
    HallucinationType type = HallucinationType::ExtremumError;
    std::string note;

    bool operator==(const HallucinationAnnotation&) const = default;
};

/// Fraction of sentences at L2 or L3.
double semantic_richness(const SummaryDoc& doc);

/// Annotation count per sentence; may exceed 1.
double hallucination_rate(std::size_t annotations, std::size_t sentence_count);
double hallucination_rate(const std::vector<HallucinationAnnotation>& annotations, std::size_t sentence_count);

}  // namespace chartinsight
