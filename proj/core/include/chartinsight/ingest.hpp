#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "chartinsight/dataset.hpp"

namespace chartinsight {

struct AxisLabels {
    std::string x;
    std::string y;

    bool operator==(const AxisLabels&) const = default;
};

/// The supported visualization-grammar subset: a single line mark with a
/// temporal or ordinal x channel, a quantitative y channel and an optional
/// color channel that keys the dimensions.
struct ChartSpec {
    std::string title;
    std::string mark = "line";
    std::string x_field;
    XType x_type = XType::Temporal;
    std::string y_field;
    std::string y_type = "quantitative";
    std::optional<std::string> color_field;
    AxisLabels axis_labels;
    std::optional<std::string> legend;
    std::optional<nlohmann::json> inline_values;  // data.values, when embedded

    bool operator==(const ChartSpec&) const = default;
};

ChartSpec parse_chart_spec(std::string_view text);
nlohmann::json to_json(const ChartSpec& spec);
std::string serialize_chart_spec(const ChartSpec& spec);

enum class TableFormat { Csv, InlineRecords };

/// How to read a table. With `key_field` set the table is read in long form
/// (one row per time point and dimension); otherwise every non-time column
/// is a dimension, or only `value_field` when it is named.
struct TableLayout {
    std::string time_field;  // empty: first column
    std::optional<XType> x_type;  // empty: temporal if every time cell parses as a date
    std::optional<std::string> key_field;
    std::optional<std::string> value_field;
    bool sort = true;
};

TableLayout layout_for(const ChartSpec& spec);

TimeSeriesDataset parse_data_table(std::string_view bytes, TableFormat format, const TableLayout& layout = {});

struct L1Facts {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<std::string> dimension_names;

    bool operator==(const L1Facts&) const = default;
};

struct BoundChart {
    ChartSpec spec;
    TimeSeriesDataset data;
    L1Facts l1;
};

BoundChart bind(const ChartSpec& spec, const TimeSeriesDataset& data);

/// Parse a spec and its table (CSV text, or the spec's inline values when
/// `csv` is empty) and bind them.
BoundChart load_chart(std::string_view spec_text, std::string_view csv = {});

nlohmann::json to_json(const TimeSeriesDataset& data);

}  // namespace chartinsight
