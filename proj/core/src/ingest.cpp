#include "chartinsight/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <set>

#include "chartinsight/error.hpp"

namespace chartinsight {

using nlohmann::json;

namespace {

std::string trim_copy(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
}

std::string title_text(const json& t) {
    if (t.is_string()) return t.get<std::string>();
    if (t.is_object() && t.contains("text")) return title_text(t["text"]);
    if (t.is_array()) {
        std::string out;
        for (const auto& part : t) {
            if (!out.empty()) out += ' ';
            out += title_text(part);
        }
        return out;
    }
    return {};
}

std::optional<std::string> channel_title(const json& channel) {
    if (channel.contains("title") && channel["title"].is_string()) return channel["title"].get<std::string>();
    if (channel.contains("axis") && channel["axis"].is_object() && channel["axis"].contains("title") &&
        channel["axis"]["title"].is_string())
        return channel["axis"]["title"].get<std::string>();
    return std::nullopt;
}

std::string field_of(const json& encoding, const char* channel) {
    if (!encoding.contains(channel) || !encoding[channel].is_object())
        throw Error(ErrorCode::MissingEncoding, std::string("no ") + channel + " encoding");
    const auto& ch = encoding[channel];
    if (!ch.contains("field") || !ch["field"].is_string() || ch["field"].get<std::string>().empty())
        throw Error(ErrorCode::MissingEncoding, std::string(channel) + " encoding has no field");
    return ch["field"].get<std::string>();
}

// ---- raw tables -------------------------------------------------------------

struct RawTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> row_numbers;  // 1-based source row/record numbers
    std::string unit = "row";
};

RawTable read_csv(std::string_view text) {
    if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF &&
        static_cast<unsigned char>(text[1]) == 0xBB && static_cast<unsigned char>(text[2]) == 0xBF)
        text.remove_prefix(3);

    std::vector<std::vector<std::string>> records;
    std::vector<std::size_t> line_of;
    std::vector<std::string> fields;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t line = 1;
    std::size_t record_line = 1;

    auto end_field = [&] {
        fields.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        bool blank = fields.size() == 1 && fields[0].empty();
        if (!blank) {
            records.push_back(std::move(fields));
            line_of.push_back(record_line);
        }
        fields.clear();
        record_line = line;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        if (c == '"' && !field_started) {
            in_quotes = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\r') {
            // CRLF handled by the '\n' branch.
        } else if (c == '\n') {
            ++line;
            end_record();
        } else {
            field.push_back(c);
            field_started = true;
        }
    }
    if (in_quotes) throw Error(ErrorCode::ParseError, "unterminated quoted field starting near row " + std::to_string(record_line));
    if (!field.empty() || !fields.empty()) end_record();

    RawTable t;
    if (records.empty()) throw Error(ErrorCode::EmptyTable, "no header row");
    for (auto& h : records[0]) t.header.push_back(trim_copy(h));
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != t.header.size())
            throw Error(ErrorCode::ParseError, "row " + std::to_string(line_of[r]) + ": expected " +
                                                   std::to_string(t.header.size()) + " fields, found " +
                                                   std::to_string(records[r].size()));
        t.rows.push_back(std::move(records[r]));
        t.row_numbers.push_back(line_of[r]);
    }
    return t;
}

std::string cell_text(const json& v) {
    if (v.is_null()) return {};
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
}

RawTable read_records(const json& records) {
    if (!records.is_array()) throw Error(ErrorCode::ParseError, "inline records must be an array");
    RawTable t;
    t.unit = "record";
    std::map<std::string, std::size_t> column;
    for (const auto& rec : records) {
        if (!rec.is_object()) throw Error(ErrorCode::ParseError, "inline record is not an object");
        for (const auto& [k, _] : rec.items()) {
            if (column.emplace(k, t.header.size()).second) t.header.push_back(k);
        }
    }
    std::size_t n = 0;
    for (const auto& rec : records) {
        ++n;
        std::vector<std::string> row(t.header.size());
        for (const auto& [k, v] : rec.items()) row[column[k]] = cell_text(v);
        t.rows.push_back(std::move(row));
        t.row_numbers.push_back(n);
    }
    return t;
}

bool is_missing_token(std::string_view s) {
    return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "null" || s == "N/A";
}

std::optional<double> parse_value(const std::string& raw, const RawTable& t, std::size_t r,
                                  const std::string& column) {
    std::string s = trim_copy(raw);
    if (is_missing_token(s)) return std::nullopt;
    double v = 0;
    const char* begin = s.data();
    if (!s.empty() && s[0] == '+') ++begin;
    auto [p, ec] = std::from_chars(begin, s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
        throw Error(ErrorCode::ParseError, t.unit + " " + std::to_string(t.row_numbers[r]) + ", column '" + column +
                                               "': '" + s + "' is not numeric");
    return v;
}

std::optional<std::size_t> column_index(const RawTable& t, std::string_view name) {
    for (std::size_t i = 0; i < t.header.size(); ++i)
        if (t.header[i] == name) return i;
    return std::nullopt;
}

TimeSeriesDataset build_dataset(const RawTable& t, const TableLayout& layout) {
    if (t.rows.empty()) throw Error(ErrorCode::EmptyTable, "table has no data rows");
    if (t.header.size() < 2) throw Error(ErrorCode::EmptyTable, "table needs a time column and a value column");

    std::size_t time_col = 0;
    if (!layout.time_field.empty()) {
        auto c = column_index(t, layout.time_field);
        if (!c) throw Error(ErrorCode::ParseError, "time column '" + layout.time_field + "' not found");
        time_col = *c;
    }

    XType x_type = XType::Temporal;
    if (layout.x_type) {
        x_type = *layout.x_type;
    } else {
        for (const auto& row : t.rows)
            if (!parse_date(row[time_col])) {
                x_type = XType::Ordinal;
                break;
            }
    }

    // Time keys per row.
    std::vector<TimePoint> row_time(t.rows.size());
    std::map<std::string, std::int64_t> ordinal_rank;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        std::string raw = trim_copy(t.rows[r][time_col]);
        if (x_type == XType::Temporal) {
            auto d = parse_date(raw);
            if (!d)
                throw Error(ErrorCode::ParseError, t.unit + " " + std::to_string(t.row_numbers[r]) + ": '" + raw +
                                                       "' is not a date");
            row_time[r] = {epoch_days(*d), iso_date(*d)};
        } else {
            auto [it, inserted] = ordinal_rank.emplace(raw, static_cast<std::int64_t>(ordinal_rank.size()));
            row_time[r] = {it->second, raw};
        }
    }

    TimeSeriesDataset ds;
    ds.x_type = x_type;
    ds.time_field = t.header[time_col];

    // dimension -> key -> value (in input order for the monotonicity check)
    std::map<std::string, std::vector<std::pair<std::int64_t, std::optional<double>>>> cells;
    std::map<std::int64_t, std::string> labels;

    std::optional<std::size_t> key_col;
    if (layout.key_field) key_col = column_index(t, *layout.key_field);

    if (key_col) {
        std::size_t value_col = 0;
        if (layout.value_field) {
            auto c = column_index(t, *layout.value_field);
            if (!c) throw Error(ErrorCode::ParseError, "value column '" + *layout.value_field + "' not found");
            value_col = *c;
        } else {
            std::vector<std::size_t> rest;
            for (std::size_t c = 0; c < t.header.size(); ++c)
                if (c != time_col && c != *key_col) rest.push_back(c);
            if (rest.size() != 1) throw Error(ErrorCode::ParseError, "cannot identify the value column of a long table");
            value_col = rest[0];
        }
        ds.key_field = t.header[*key_col];
        ds.value_field = t.header[value_col];
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            std::string key = trim_copy(t.rows[r][*key_col]);
            if (key.empty())
                throw Error(ErrorCode::ParseError, t.unit + " " + std::to_string(t.row_numbers[r]) + ": empty dimension key");
            cells[key].emplace_back(row_time[r].key, parse_value(t.rows[r][value_col], t, r, t.header[value_col]));
            labels.emplace(row_time[r].key, row_time[r].label);
        }
    } else {
        std::vector<std::size_t> value_cols;
        if (layout.value_field && column_index(t, *layout.value_field)) {
            value_cols.push_back(*column_index(t, *layout.value_field));
            ds.value_field = *layout.value_field;
        } else {
            for (std::size_t c = 0; c < t.header.size(); ++c)
                if (c != time_col) value_cols.push_back(c);
        }
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            labels.emplace(row_time[r].key, row_time[r].label);
            for (auto c : value_cols)
                cells[t.header[c]].emplace_back(row_time[r].key, parse_value(t.rows[r][c], t, r, t.header[c]));
        }
    }

    if (cells.empty()) throw Error(ErrorCode::EmptyTable, "table has no dimensions");
    if (labels.size() < 2) throw Error(ErrorCode::EmptyTable, "need at least two time points");

    for (const auto& [name, entries] : cells) {
        std::set<std::int64_t> seen;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (!seen.insert(entries[i].first).second)
                throw Error(ErrorCode::TimeOrderError, "duplicate time point '" + labels[entries[i].first] +
                                                           "' in dimension '" + name + "'");
            if (!layout.sort && i > 0 && entries[i].first <= entries[i - 1].first)
                throw Error(ErrorCode::TimeOrderError, "time points of '" + name + "' are not increasing at '" +
                                                           labels[entries[i].first] + "'");
        }
    }

    std::map<std::int64_t, std::size_t> position;
    for (const auto& [key, label] : labels) {
        position[key] = ds.timestamps.size();
        ds.timestamps.push_back({key, label});
    }
    for (const auto& [name, entries] : cells) {
        Series s(ds.timestamps.size());
        for (const auto& [key, v] : entries) s[position[key]] = v;
        ds.dimensions.emplace(name, std::move(s));
    }
    return ds;
}

}  // namespace

ChartSpec parse_chart_spec(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::SyntaxError, e.what());
    }
    if (!doc.is_object()) throw Error(ErrorCode::SyntaxError, "specification must be a JSON object");

    ChartSpec spec;
    if (!doc.contains("mark")) throw Error(ErrorCode::SyntaxError, "specification has no mark");
    const auto& mark = doc["mark"];
    std::string mark_type;
    if (mark.is_string())
        mark_type = mark.get<std::string>();
    else if (mark.is_object() && mark.contains("type") && mark["type"].is_string())
        mark_type = mark["type"].get<std::string>();
    else
        throw Error(ErrorCode::SyntaxError, "mark must be a string or an object with a type");
    if (mark_type != "line") throw Error(ErrorCode::UnsupportedMark, "mark '" + mark_type + "' is not supported");
    spec.mark = mark_type;

    if (doc.contains("title")) spec.title = title_text(doc["title"]);

    if (!doc.contains("encoding") || !doc["encoding"].is_object())
        throw Error(ErrorCode::MissingEncoding, "specification has no encoding");
    const auto& enc = doc["encoding"];
    spec.x_field = field_of(enc, "x");
    spec.y_field = field_of(enc, "y");

    const auto& x = enc["x"];
    std::string xt = x.value("type", std::string("temporal"));
    if (xt == "temporal")
        spec.x_type = XType::Temporal;
    else if (xt == "ordinal" || xt == "nominal" || xt == "quantitative")
        spec.x_type = XType::Ordinal;
    else
        throw Error(ErrorCode::InvalidEncoding, "unknown x type '" + xt + "'");

    const auto& y = enc["y"];
    spec.y_type = y.value("type", std::string("quantitative"));
    if (spec.y_type != "quantitative")
        throw Error(ErrorCode::InvalidEncoding, "y must be quantitative, got '" + spec.y_type + "'");

    if (spec.x_field == spec.y_field) throw Error(ErrorCode::InvalidEncoding, "x and y encode the same field");

    if (enc.contains("color") && enc["color"].is_object() && enc["color"].contains("field")) {
        const auto& color = enc["color"];
        spec.color_field = color["field"].get<std::string>();
        if (*spec.color_field == spec.x_field || *spec.color_field == spec.y_field)
            throw Error(ErrorCode::InvalidEncoding, "color must encode a separate field");
        if (color.contains("legend") && color["legend"].is_object() && color["legend"].contains("title") &&
            color["legend"]["title"].is_string())
            spec.legend = color["legend"]["title"].get<std::string>();
        else if (color.contains("title") && color["title"].is_string())
            spec.legend = color["title"].get<std::string>();
    }

    spec.axis_labels.x = channel_title(x).value_or(spec.x_field);
    spec.axis_labels.y = channel_title(y).value_or(spec.y_field);

    if (doc.contains("data") && doc["data"].is_object() && doc["data"].contains("values"))
        spec.inline_values = doc["data"]["values"];
    return spec;
}

json to_json(const ChartSpec& spec) {
    json enc;
    enc["x"] = {{"field", spec.x_field}, {"type", std::string(to_string(spec.x_type))}, {"title", spec.axis_labels.x}};
    enc["y"] = {{"field", spec.y_field}, {"type", spec.y_type}, {"title", spec.axis_labels.y}};
    if (spec.color_field) {
        enc["color"] = {{"field", *spec.color_field}, {"type", "nominal"}};
        if (spec.legend) enc["color"]["legend"] = {{"title", *spec.legend}};
    }
    json doc;
    doc["$schema"] = "https://vega.github.io/schema/vega-lite/v5.json";
    if (!spec.title.empty()) doc["title"] = spec.title;
    doc["mark"] = spec.mark;
    if (spec.inline_values) doc["data"] = {{"values", *spec.inline_values}};
    doc["encoding"] = std::move(enc);
    return doc;
}

std::string serialize_chart_spec(const ChartSpec& spec) { return to_json(spec).dump(2); }

TableLayout layout_for(const ChartSpec& spec) {
    TableLayout layout;
    layout.time_field = spec.x_field;
    layout.x_type = spec.x_type;
    layout.key_field = spec.color_field;
    layout.value_field = spec.y_field;
    return layout;
}

TimeSeriesDataset parse_data_table(std::string_view bytes, TableFormat format, const TableLayout& layout) {
    RawTable t;
    if (format == TableFormat::Csv) {
        t = read_csv(bytes);
    } else {
        json records;
        try {
            records = json::parse(bytes.begin(), bytes.end());
        } catch (const json::parse_error& e) {
            throw Error(ErrorCode::ParseError, e.what());
        }
        t = read_records(records);
    }
    return build_dataset(t, layout);
}

BoundChart bind(const ChartSpec& spec, const TimeSeriesDataset& data) {
    if (data.time_field != spec.x_field)
        throw Error(ErrorCode::UnboundColumn,
                    "x field '" + spec.x_field + "' not in data (time column is '" + data.time_field + "')");
    if (spec.x_type == XType::Temporal && data.x_type != XType::Temporal)
        throw Error(ErrorCode::ParseError, "x field '" + spec.x_field + "' is temporal but its values are not dates");

    BoundChart bc;
    bc.spec = spec;
    bc.data = data;
    if (spec.color_field) {
        if (!data.key_field.empty() && data.key_field != *spec.color_field)
            throw Error(ErrorCode::UnboundColumn, "color field '" + *spec.color_field + "' not in data");
        if (!data.key_field.empty() && !data.value_field.empty() && data.value_field != spec.y_field)
            throw Error(ErrorCode::UnboundColumn, "y field '" + spec.y_field + "' not in data");
    } else {
        if (!data.has_dimension(spec.y_field))
            throw Error(ErrorCode::UnboundColumn, "y field '" + spec.y_field + "' not in data");
        const std::string name = spec.axis_labels.y.empty() ? spec.y_field : spec.axis_labels.y;
        Series s = data.series(spec.y_field);
        bc.data.dimensions.clear();
        bc.data.dimensions.emplace(name, std::move(s));
        if (auto u = data.units.find(spec.y_field); u != data.units.end()) {
            bc.data.units.clear();
            bc.data.units.emplace(name, u->second);
        }
    }
    bc.l1.title = spec.title;
    bc.l1.x_label = spec.axis_labels.x;
    bc.l1.y_label = spec.axis_labels.y;
    bc.l1.dimension_names = bc.data.dimension_names();
    return bc;
}

BoundChart load_chart(std::string_view spec_text, std::string_view csv) {
    ChartSpec spec = parse_chart_spec(spec_text);
    TimeSeriesDataset data;
    if (!csv.empty()) {
        data = parse_data_table(csv, TableFormat::Csv, layout_for(spec));
    } else if (spec.inline_values) {
        data = parse_data_table(spec.inline_values->dump(), TableFormat::InlineRecords, layout_for(spec));
    } else {
        throw Error(ErrorCode::EmptyTable, "no data table and no inline values");
    }
    return bind(spec, data);
}

json to_json(const TimeSeriesDataset& data) {
    json j;
    j["x_type"] = std::string(to_string(data.x_type));
    j["timestamps"] = json::array();
    for (const auto& t : data.timestamps) j["timestamps"].push_back(t.label);
    j["dimensions"] = json::object();
    for (const auto& [name, s] : data.dimensions) {
        json arr = json::array();
        for (const auto& v : s) arr.push_back(v ? json(*v) : json(nullptr));
        j["dimensions"][name] = std::move(arr);
    }
    return j;
}

}  // namespace chartinsight
