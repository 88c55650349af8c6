#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "chartinsight/agents.hpp"
#include "chartinsight/error.hpp"
#include "chartinsight/metrics.hpp"
#include "chartinsight/sumdoc.hpp"

namespace chartinsight {

enum class Complexity { Simple, Moderate, Complex };

std::string_view to_string(Complexity c) noexcept;
std::optional<Complexity> complexity_from_string(std::string_view s) noexcept;

/// Peak counts behind a complexity level, kept so borderline cases can be audited.
struct ComplexityScore {
    std::map<std::string, std::size_t> peaks_per_dimension;  // prominent interior maxima
    std::size_t peaks = 0;                                   // max over dimensions
    Complexity level = Complexity::Simple;
};

ComplexityScore score_complexity(const TimeSeriesDataset& data, const SegmentationConfig& cfg = {});
Complexity classify_complexity(const TimeSeriesDataset& data, const SegmentationConfig& cfg = {});

struct GeneratedSummary {
    SummaryDoc doc;
    std::vector<HallucinationAnnotation> annotations;
    bool annotated = false;  // an annotations file was present
};

struct BenchmarkEntry {
    std::string chart_id;
    std::string spec_text;
    std::string data_text;
    Complexity complexity = Complexity::Simple;
    nlohmann::json meta = nlohmann::json::object();
    SummaryDoc gold;
    std::map<std::string, GeneratedSummary> generated;
};

struct EntryError {
    std::string chart_id;
    ErrorCode code = ErrorCode::SchemaError;
    std::string message;
};

struct Corpus {
    std::filesystem::path root;
    std::vector<BenchmarkEntry> entries;
    std::vector<EntryError> errors;
};

/// Layout: <root>/<chart_id>/{spec.json, data.csv, meta.json,
/// gold.summary.json, generated/<model>.summary.json,
/// generated/<model>.annotations.json}. Broken entries are reported in
/// `errors` and skipped; a root without entry directories is a LayoutError.
Corpus load_corpus(const std::filesystem::path& root);

/// Write entries back in the same layout.
void save_corpus(const Corpus& corpus, const std::filesystem::path& root);

nlohmann::json annotations_to_json(const std::vector<HallucinationAnnotation>& a);
std::vector<HallucinationAnnotation> annotations_from_json(const nlohmann::json& j);

struct TypeTally {
    std::map<HallucinationType, std::size_t> counts;  // every type present, zeros included
    std::size_t total = 0;
    std::size_t sentences = 0;
    std::size_t summaries = 0;

    double frequency(HallucinationType t) const;  // percent of total, 0 when total is 0
};

struct CorpusStats {
    std::map<std::string, TypeTally> by_model;
    TypeTally overall;
};

CorpusStats corpus_stats(const Corpus& corpus);
nlohmann::json to_json(const CorpusStats& s);
std::string format_table(const CorpusStats& s);

struct EvalOptions {
    MetricsConfig metrics;
    bool diversity = true;
    bool quality = true;
    bool include_gold = true;
    /// When set, a row for the pipeline run on every entry is added.
    Backend* pipeline_backend = nullptr;
    PipelineConfig pipeline;
};

struct EvalRow {
    std::string system;
    std::size_t summaries = 0;
    Diversity diversity;  // mean over summaries
    double semantic_richness = 0;
    std::optional<double> hallucination_rate;  // only over annotated summaries
};

struct EvalReport {
    std::vector<EvalRow> rows;
    MetricsConfig metrics;
    bool diversity = true;
    bool quality = true;
};

EvalReport run_eval(const Corpus& corpus, const EvalOptions& opts = {});
nlohmann::json to_json(const EvalReport& r);
std::string format_table(const EvalReport& r);

}  // namespace chartinsight
