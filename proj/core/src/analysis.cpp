#include "chartinsight/analysis.hpp"

#include "chartinsight/temporal.hpp"

namespace chartinsight {

ChartFacts analyze(const TimeSeriesDataset& data, const SegmentationConfig& cfg) {
    ChartFacts f;
    f.data = data;
    f.cfg = cfg;
    f.patches = chart_patches(data, cfg);
    f.max_patch_range = chart_max_patch_range(f.patches);
    SegmentationConfig fine = cfg;
    fine.merge_patches = false;
    f.fine_patches = chart_patches(data, fine);
    return f;
}

IndexRange resolve_window(const ChartFacts& facts, std::string_view phrase) {
    if (phrase.empty()) return facts.data.full_range();
    return align_temporal_expression(phrase, facts.patches, facts.data);
}

}  // namespace chartinsight
