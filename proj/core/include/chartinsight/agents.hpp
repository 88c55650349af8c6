#pragma once

#include <cstdint>
#include <functional>
#include <mutex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "chartinsight/analysis.hpp"
#include "chartinsight/backend.hpp"
#include "chartinsight/claims.hpp"
#include "chartinsight/ingest.hpp"
#include "chartinsight/oracles.hpp"
#include "chartinsight/patches.hpp"
#include "chartinsight/relations.hpp"
#include "chartinsight/sumdoc.hpp"

namespace chartinsight {

struct PipelineConfig {
    int vote_candidates = 3;
    int max_refine_iters = 5;
    std::set<ClaimKind> selfcheck_kinds{ClaimKind::Extremum, ClaimKind::Significance};
    std::uint64_t seed = 7;
    /// Verify uni prose before the Writer sees it.
    bool generation_check = true;
    double temperature = 0.7;
    SegmentationConfig segmentation;
    PromptPack prompts;
    /// Called as run_pipeline enters each stage.
    std::function<void(std::string_view stage)> on_stage;

    /// Throws ValidationError when the vote size is even or below 3, or the
    /// refine bound is below 1.
    void validate() const;
};

struct TranscriptEvent {
    std::size_t seq = 0;
    std::string stage;
    std::string agent;
    bool backend_call = false;
    std::string request_digest;   // sha-256 of role and user prompt
    std::string response_digest;  // sha-256 of the response text
    nlohmann::json records;
    nlohmann::json verdicts;
    std::int64_t timestamp_ms = 0;
};

/// Append-only log of one pipeline run. Thread-safe.
class Transcript {
public:
    Transcript() = default;
    Transcript(const Transcript& other);
    Transcript& operator=(const Transcript& other);

    void append(TranscriptEvent e);
    std::vector<TranscriptEvent> events() const;
    std::size_t backend_calls() const;
    nlohmann::json to_json() const;

private:
    mutable std::mutex mu_;
    std::vector<TranscriptEvent> events_;
};

std::string sha256_hex(std::string_view bytes);

struct UniResult {
    UniInsightRecord record;
    std::string prose;
    int regenerations = 0;
    bool substituted = false;
};

std::vector<UniResult> run_uni_insighter(const BoundChart& chart, const ChartFacts& facts, const PipelineConfig& cfg,
                                         Backend& backend, Transcript* transcript = nullptr);

/// Canonical insight tuples of a record: one relation tuple per pair and one
/// tuple per maximal span of trend-pair windows sharing kind and directions.
std::set<std::string> insight_tuples(const MultiInsightRecord& r);

enum class VoteRule { Majority, Agreement, Canonical };

std::string_view to_string(VoteRule r) noexcept;

struct VoteOutcome {
    std::size_t winner = 0;
    VoteRule rule = VoteRule::Majority;
};

/// Modal tuple set wins; otherwise the candidate with the highest mean
/// pairwise Jaccard agreement; a tie there falls to the smallest canonical
/// serialization and is reported as VoteRule::Canonical.
VoteOutcome majority_vote(const std::vector<MultiInsightRecord>& candidates);

/// Recompute every voted relation and trend pair from the data and add the
/// computed trend windows the vote lacks.
MultiInsightRecord supplement(const MultiInsightRecord& voted, const MultiInsightRecord& computed,
                              const TimeSeriesDataset& data);

/// Synthesis payload items for the given tuples (all of them when empty).
nlohmann::json insight_items(const MultiInsightRecord& r, const TimeSeriesDataset& data,
                             const std::set<std::string>& only = {});

struct MultiResult {
    MultiInsightRecord record;
    std::set<std::string> tuples;
    std::string prose;
    VoteRule rule = VoteRule::Majority;
    bool regenerated = false;
};

/// Returns an empty result for single-dimension charts.
MultiResult run_multi_insighter(const ChartFacts& facts, const PipelineConfig& cfg, Backend& backend,
                                Transcript* transcript = nullptr);

struct RefineRound {
    int round = 0;
    int depth = 0;
    std::set<std::string> new_tuples;
};

struct RefineResult {
    std::string text;
    int iterations = 0;
    std::vector<RefineRound> rounds;
    std::set<std::string> tuples;  // every insight tuple covered by the text
};

/// Segmentation used at refinement depth d (1 = the brainstorming segmentation).
SegmentationConfig segmentation_at_depth(const SegmentationConfig& base, int depth);

RefineResult refine_loop(const std::string& draft, const std::set<std::string>& known, const ChartFacts& facts,
                         const PipelineConfig& cfg, Backend& backend, Transcript* transcript = nullptr);

struct SelfCheckReport {
    std::size_t claims = 0;
    std::size_t failed = 0;
    std::size_t rewritten = 0;
    std::size_t substituted = 0;
    std::size_t flagged = 0;
};

SummaryDoc self_consistency(const SummaryDoc& doc, const ChartFacts& facts, const L1Facts& l1,
                            const PipelineConfig& cfg, Backend& backend, Transcript* transcript = nullptr,
                            SelfCheckReport* report = nullptr);

struct PipelineResult {
    SummaryDoc summary;
    Transcript transcript;
    std::string draft;
    int refine_iterations = 0;
    SelfCheckReport selfcheck;
};

/// Errors leave with the stage they came from: ingest, brainstorming,
/// refining, selfcheck or annotate.
PipelineResult run_pipeline(std::string_view spec_text, std::string_view csv, const PipelineConfig& cfg,
                            Backend& backend);
PipelineResult run_pipeline(const BoundChart& chart, const PipelineConfig& cfg, Backend& backend);

/// Apply a user's request through the Chat agent; edited and added sentences
/// go through every oracle.
SummaryDoc chat_refine(const SummaryDoc& doc, std::string_view message, const ChartFacts& facts, const L1Facts& l1,
                       const PipelineConfig& cfg, Backend& backend, Transcript* transcript = nullptr);

}  // namespace chartinsight
