#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "chartinsight/analysis.hpp"
#include "chartinsight/dataset.hpp"

namespace chartinsight {

class Backend;
struct L1Facts;

enum class Level { L1, L2, L3 };

std::string_view to_string(Level l) noexcept;
std::optional<Level> level_from_string(std::string_view s) noexcept;

enum class RefKind { Point, Range, Comparison };

std::string_view to_string(RefKind k) noexcept;

/// Link from a sentence to the chart: a set of dimensions over a time range.
struct DataRef {
    std::vector<std::string> dimensions;
    IndexRange range;
    std::string start_time;
    std::string end_time;
    std::vector<std::size_t> patch_ids;  // patches of the first dimension overlapping the range
    RefKind kind = RefKind::Range;

    bool operator==(const DataRef&) const = default;
};

struct SentenceFlags {
    bool unverifiable = false;
    bool edited = false;

    bool operator==(const SentenceFlags&) const = default;
};

struct Sentence {
    std::size_t index = 0;
    std::string text;
    Level level = Level::L1;
    std::vector<DataRef> refs;
    SentenceFlags flags;

    bool operator==(const Sentence&) const = default;
};

enum class DocSource { Pipeline, Gold, ExternalModel };

std::string_view to_string(DocSource s) noexcept;

struct SummaryDoc {
    int schema_version = 1;
    DocSource source = DocSource::Pipeline;
    std::string chart_id;
    std::string model;
    int version = 1;
    std::vector<Sentence> sentences;

    std::string text() const;
    bool operator==(const SummaryDoc&) const = default;
};

inline constexpr int kSummarySchemaVersion = 1;

/// Split prose into sentences on . ! ? followed by whitespace or the end,
/// never inside a number ("3.38") or after a known abbreviation.
std::vector<std::string> split_sentences(std::string_view text);

/// Rule-based level, or nullopt when no rule applies.
std::optional<Level> classify_level_rules(std::string_view sentence, const L1Facts& l1);

/// Rules first; the backend decides sentences no rule matches. Without a
/// backend such sentences default to L1.
Level classify_level(std::string_view sentence, const L1Facts& l1, Backend* backend);

std::vector<DataRef> attach_data_refs(std::string_view sentence, const ChartFacts& facts);

/// Dimensions a sentence mentions by name, in chart order; "both" and "all"
/// stand for every dimension.
std::vector<std::string> mentioned_dimensions(std::string_view sentence, const std::vector<std::string>& dims);

/// Build a document from prose: split, level-tag and link every sentence.
SummaryDoc annotate(std::string_view text, const ChartFacts& facts, const L1Facts& l1, Backend* backend,
                    DocSource source = DocSource::Pipeline);

/// Re-index sentences densely from 0.
void reindex(SummaryDoc& doc);

nlohmann::json to_json(const SummaryDoc& doc);
SummaryDoc summary_from_json(const nlohmann::json& j);
std::string serialize(const SummaryDoc& doc);
SummaryDoc deserialize(std::string_view bytes);

}  // namespace chartinsight
