#pragma once

#include <map>
#include <string>
#include <vector>

#include "chartinsight/dataset.hpp"
#include "chartinsight/patches.hpp"

namespace chartinsight {

/// A dataset with its patches computed once, shared by the oracles, the
/// temporal resolver and the agents.
struct ChartFacts {
    TimeSeriesDataset data;
    std::map<std::string, std::vector<Patch>> patches;
    /// Same segmentation without the low-variance merge: one patch per
    /// stretch between prominent extrema.
    std::map<std::string, std::vector<Patch>> fine_patches;
    double max_patch_range = 0;
    SegmentationConfig cfg;
};

ChartFacts analyze(const TimeSeriesDataset& data, const SegmentationConfig& cfg = {});

/// Resolve a time phrase against the facts; empty phrase means the full range.
IndexRange resolve_window(const ChartFacts& facts, std::string_view phrase);

}  // namespace chartinsight
