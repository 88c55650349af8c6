#pragma once

#include <chrono>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chartinsight/dataset.hpp"
#include "chartinsight/patches.hpp"

namespace chartinsight {

/// A time phrase found inside a sentence.
struct TimeMention {
    std::string text;
    std::size_t offset = 0;  // byte offset in the sentence
};

/// Every time phrase in `sentence`, longest match first, left to right and
/// non-overlapping.
std::vector<TimeMention> find_time_phrases(std::string_view sentence);

/// Calendar reading of a phrase before it is matched to samples.
struct CalendarSpan {
    std::chrono::sys_days first;
    std::chrono::sys_days last;
    bool coarse = false;       // early/mid/late
    bool open_start = false;   // "until X", "before X"
    bool open_end = false;     // "since X", "after X"
    bool range = false;        // "from A to B", "A-B"
};

std::optional<CalendarSpan> parse_time_phrase(std::string_view expr);

/// Index positions that bound the patches of any dimension, plus the data
/// endpoints, sorted and unique.
std::vector<std::size_t> patch_boundaries(const std::map<std::string, std::vector<Patch>>& patches,
                                          std::size_t series_length);

/// Resolve a time phrase to a sample window. Calendar phrases cover the
/// samples inside their span; early/mid/late phrases snap to the patch
/// boundaries inside the span, or to the nearest ones when none fall inside.
/// Ordinal axes accept their own labels ("from A to B" included).
IndexRange align_temporal_expression(std::string_view expr,
                                     const std::map<std::string, std::vector<Patch>>& patches,
                                     const TimeSeriesDataset& data);

/// Short human label for a window, e.g. "2007", "Jan 2008", "2000-2008".
std::string window_label(const TimeSeriesDataset& data, IndexRange window);

}  // namespace chartinsight
