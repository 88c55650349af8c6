#include "chartinsight/bench.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "chartinsight/ingest.hpp"
#include "chartinsight/patches.hpp"

namespace chartinsight {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(ErrorCode::SchemaError, "cannot read " + p.filename().string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& bytes) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::LayoutError, "cannot write " + p.string());
    out << bytes;
}

json parse_json_file(const fs::path& p) {
    try {
        return json::parse(read_file(p));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SchemaError, p.filename().string() + ": " + e.what());
    }
}

SummaryDoc load_summary(const fs::path& p, const std::string& chart_id) {
    SummaryDoc doc;
    try {
        doc = summary_from_json(parse_json_file(p));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::SchemaError) throw;
        throw Error(ErrorCode::SchemaError, p.filename().string() + ": " + e.detail());
    }
    if (doc.chart_id != chart_id)
        throw Error(ErrorCode::SchemaError,
                    p.filename().string() + " belongs to chart '" + doc.chart_id + "', not '" + chart_id + "'");
    if (doc.sentences.empty()) throw Error(ErrorCode::SchemaError, p.filename().string() + " has no sentences");
    return doc;
}

BenchmarkEntry load_entry(const fs::path& dir) {
    BenchmarkEntry e;
    e.chart_id = dir.filename().string();
    for (const char* f : {"spec.json", "data.csv", "meta.json", "gold.summary.json"})
        if (!fs::is_regular_file(dir / f)) throw Error(ErrorCode::SchemaError, std::string("missing ") + f);
    e.spec_text = read_file(dir / "spec.json");
    e.data_text = read_file(dir / "data.csv");
    load_chart(e.spec_text, e.data_text);  // ingest errors surface here

    e.meta = parse_json_file(dir / "meta.json");
    if (!e.meta.is_object() || !e.meta.contains("complexity") || !e.meta["complexity"].is_string())
        throw Error(ErrorCode::SchemaError, "meta.json needs a complexity string");
    auto c = complexity_from_string(e.meta["complexity"].get<std::string>());
    if (!c) throw Error(ErrorCode::SchemaError, "unknown complexity '" + e.meta["complexity"].get<std::string>() + "'");
    e.complexity = *c;

    e.gold = load_summary(dir / "gold.summary.json", e.chart_id);
    if (fs::exists(dir / "gold.annotations.json") &&
        !annotations_from_json(parse_json_file(dir / "gold.annotations.json")).empty())
        throw Error(ErrorCode::SchemaError, "the gold summary carries hallucination annotations");

    const fs::path gen = dir / "generated";
    if (fs::is_directory(gen)) {
        std::vector<fs::path> files;
        for (const auto& f : fs::directory_iterator(gen)) files.push_back(f.path());
        std::sort(files.begin(), files.end());
        const std::string suffix = ".summary.json";
        for (const auto& f : files) {
            const std::string name = f.filename().string();
            if (name.size() <= suffix.size() || name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0)
                continue;
            const std::string model = name.substr(0, name.size() - suffix.size());
            GeneratedSummary g;
            g.doc = load_summary(f, e.chart_id);
            const fs::path ann = gen / (model + ".annotations.json");
            if (fs::exists(ann)) {
                try {
                    g.annotations = annotations_from_json(parse_json_file(ann));
                } catch (const Error& err) {
                    throw Error(ErrorCode::SchemaError, ann.filename().string() + ": " + err.detail());
                }
                g.annotated = true;
                for (const auto& a : g.annotations)
                    if (a.sentence_index >= g.doc.sentences.size())
                        throw Error(ErrorCode::SchemaError, ann.filename().string() + ": sentence index " +
                                                                std::to_string(a.sentence_index) + " out of range");
            }
            e.generated.emplace(model, std::move(g));
        }
    }
    return e;
}

std::string fmt(double v, int prec = 2) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

std::string pad(const std::string& s, std::size_t w, bool right) {
    if (s.size() >= w) return s;
    return right ? std::string(w - s.size(), ' ') + s : s + std::string(w - s.size(), ' ');
}

std::string render(const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width;
    for (const auto& r : rows)
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (width.size() <= i) width.push_back(0);
            width[i] = std::max(width[i], r[i].size());
        }
    std::string out;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        std::string line;
        for (std::size_t i = 0; i < rows[k].size(); ++i) {
            if (i) line += "  ";
            line += pad(rows[k][i], width[i], i > 0);
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        out += line + "\n";
        if (k == 0) {
            std::size_t total = 0;
            for (auto w : width) total += w;
            out += std::string(total + 2 * (width.size() - 1), '-') + "\n";
        }
    }
    return out;
}

void add(TypeTally& t, const GeneratedSummary& g) {
    ++t.summaries;
    t.sentences += g.doc.sentences.size();
    for (const auto& a : g.annotations) {
        ++t.counts[a.type];
        ++t.total;
    }
}

TypeTally empty_tally() {
    TypeTally t;
    for (auto ty : all_hallucination_types()) t.counts[ty] = 0;
    return t;
}

struct Accumulator {
    std::size_t summaries = 0;
    Diversity sum;
    std::size_t sentences = 0;
    std::size_t rich = 0;
    std::size_t annotated_sentences = 0;
    std::size_t annotations = 0;
    bool any_annotated = false;

    void add(const SummaryDoc& doc, const std::vector<HallucinationAnnotation>* ann, const EvalOptions& o) {
        ++summaries;
        if (o.diversity) {
            std::vector<std::string> texts;
            for (const auto& s : doc.sentences) texts.push_back(s.text);
            auto d = diversity(embed(texts, o.metrics), o.metrics);
            sum.remote_clique += d.remote_clique;
            sum.chamfer += d.chamfer;
            sum.mst_dispersion += d.mst_dispersion;
            sum.span += d.span;
            sum.sparseness += d.sparseness;
            sum.entropy += d.entropy;
        }
        sentences += doc.sentences.size();
        for (const auto& s : doc.sentences)
            if (s.level != Level::L1) ++rich;
        if (ann) {
            any_annotated = true;
            annotated_sentences += doc.sentences.size();
            annotations += ann->size();
        }
    }

    EvalRow row(std::string name) const {
        EvalRow r;
        r.system = std::move(name);
        r.summaries = summaries;
        if (summaries > 0) {
            const double n = static_cast<double>(summaries);
            r.diversity = {sum.remote_clique / n, sum.chamfer / n, sum.mst_dispersion / n,
                           sum.span / n,          sum.sparseness / n, sum.entropy / n, false};
        }
        if (sentences > 0) r.semantic_richness = static_cast<double>(rich) / static_cast<double>(sentences);
        if (any_annotated && annotated_sentences > 0) r.hallucination_rate = hallucination_rate(annotations, annotated_sentences);
        return r;
    }
};

}  // namespace

std::string_view to_string(Complexity c) noexcept {
    switch (c) {
        case Complexity::Simple: return "simple";
        case Complexity::Moderate: return "moderate";
        case Complexity::Complex: return "complex";
    }
    return "simple";
}

std::optional<Complexity> complexity_from_string(std::string_view s) noexcept {
    if (s == "simple") return Complexity::Simple;
    if (s == "moderate") return Complexity::Moderate;
    if (s == "complex") return Complexity::Complex;
    return std::nullopt;
}

ComplexityScore score_complexity(const TimeSeriesDataset& data, const SegmentationConfig& cfg) {
    ComplexityScore s;
    for (const auto& name : data.dimension_names()) {
        auto pts = present_points(data.series(name), data.full_range());
        std::size_t peaks = 0;
        for (const auto& e : prominent_extrema(pts.value, cfg))
            if (e.is_max) ++peaks;
        s.peaks_per_dimension[name] = peaks;
        s.peaks = std::max(s.peaks, peaks);
    }
    s.level = s.peaks <= 2 ? Complexity::Simple : s.peaks <= 4 ? Complexity::Moderate : Complexity::Complex;
    return s;
}

Complexity classify_complexity(const TimeSeriesDataset& data, const SegmentationConfig& cfg) {
    return score_complexity(data, cfg).level;
}

json annotations_to_json(const std::vector<HallucinationAnnotation>& a) {
    json out = json::array();
    for (const auto& x : a)
        out.push_back({{"sentence_index", x.sentence_index}, {"type", std::string(to_string(x.type))}, {"note", x.note}});
    return out;
}

std::vector<HallucinationAnnotation> annotations_from_json(const json& j) {
    if (!j.is_array()) throw Error(ErrorCode::SchemaError, "annotations must be an array");
    std::vector<HallucinationAnnotation> out;
    for (const auto& x : j) {
        try {
            HallucinationAnnotation a;
            a.sentence_index = x.at("sentence_index").get<std::size_t>();
            const auto name = x.at("type").get<std::string>();
            auto t = hallucination_type_from_string(name);
            if (!t) throw Error(ErrorCode::SchemaError, "unknown hallucination type '" + name + "'");
            a.type = *t;
            a.note = x.value("note", "");
            out.push_back(std::move(a));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::SchemaError, std::string("bad annotation: ") + e.what());
        }
    }
    return out;
}

Corpus load_corpus(const fs::path& root) {
    if (!fs::is_directory(root)) throw Error(ErrorCode::LayoutError, root.string() + " is not a directory");
    std::vector<fs::path> dirs;
    for (const auto& d : fs::directory_iterator(root))
        if (d.is_directory()) dirs.push_back(d.path());
    if (dirs.empty()) throw Error(ErrorCode::LayoutError, root.string() + " holds no chart entries");
    std::sort(dirs.begin(), dirs.end());
    Corpus c;
    c.root = root;
    for (const auto& d : dirs) {
        try {
            c.entries.push_back(load_entry(d));
        } catch (const Error& e) {
            c.errors.push_back({d.filename().string(), e.code(), e.detail()});
        }
    }
    return c;
}

void save_corpus(const Corpus& corpus, const fs::path& root) {
    for (const auto& e : corpus.entries) {
        const fs::path dir = root / e.chart_id;
        write_file(dir / "spec.json", e.spec_text);
        write_file(dir / "data.csv", e.data_text);
        write_file(dir / "meta.json", e.meta.dump(2) + "\n");
        write_file(dir / "gold.summary.json", to_json(e.gold).dump(2) + "\n");
        for (const auto& [model, g] : e.generated) {
            write_file(dir / "generated" / (model + ".summary.json"), to_json(g.doc).dump(2) + "\n");
            if (g.annotated)
                write_file(dir / "generated" / (model + ".annotations.json"),
                           annotations_to_json(g.annotations).dump(2) + "\n");
        }
    }
}

double TypeTally::frequency(HallucinationType t) const {
    if (total == 0) return 0;
    auto it = counts.find(t);
    return it == counts.end() ? 0 : 100.0 * static_cast<double>(it->second) / static_cast<double>(total);
}

CorpusStats corpus_stats(const Corpus& corpus) {
    if (corpus.entries.empty()) throw Error(ErrorCode::EmptyCorpus, "corpus has no entries");
    CorpusStats s;
    s.overall = empty_tally();
    for (const auto& e : corpus.entries)
        for (const auto& [model, g] : e.generated) {
            auto [it, fresh] = s.by_model.try_emplace(model, empty_tally());
            add(it->second, g);
            add(s.overall, g);
        }
    return s;
}

json to_json(const CorpusStats& s) {
    auto tally = [](const TypeTally& t) {
        json types = json::object();
        for (auto ty : all_hallucination_types())
            types[std::string(to_string(ty))] = {{"count", t.counts.at(ty)}, {"frequency", t.frequency(ty)}};
        return json{{"types", types}, {"total", t.total}, {"sentences", t.sentences}, {"summaries", t.summaries}};
    };
    json models = json::object();
    for (const auto& [m, t] : s.by_model) models[m] = tally(t);
    return {{"models", models}, {"overall", tally(s.overall)}};
}

std::string format_table(const CorpusStats& s) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> head{"Type"};
    for (const auto& [m, t] : s.by_model) head.push_back(m);
    head.push_back("All");
    head.push_back("Freq %");
    rows.push_back(head);
    for (auto ty : all_hallucination_types()) {
        std::vector<std::string> r{std::string(to_string(ty))};
        for (const auto& [m, t] : s.by_model) r.push_back(std::to_string(t.counts.at(ty)));
        r.push_back(std::to_string(s.overall.counts.at(ty)));
        r.push_back(fmt(s.overall.frequency(ty), 1));
        rows.push_back(r);
    }
    std::vector<std::string> total{"Total"};
    for (const auto& [m, t] : s.by_model) total.push_back(std::to_string(t.total));
    total.push_back(std::to_string(s.overall.total));
    total.push_back(s.overall.total ? "100.0" : "0.0");
    rows.push_back(total);
    std::vector<std::string> sent{"Sentences"};
    for (const auto& [m, t] : s.by_model) sent.push_back(std::to_string(t.sentences));
    sent.push_back(std::to_string(s.overall.sentences));
    sent.push_back("");
    rows.push_back(sent);
    return render(rows);
}

EvalReport run_eval(const Corpus& corpus, const EvalOptions& opts) {
    opts.metrics.validate();
    if (corpus.entries.empty()) throw Error(ErrorCode::EmptyCorpus, "corpus has no entries");
    EvalReport report;
    report.metrics = opts.metrics;
    report.diversity = opts.diversity;
    report.quality = opts.quality;

    if (opts.include_gold) {
        Accumulator acc;
        for (const auto& e : corpus.entries) acc.add(e.gold, nullptr, opts);
        report.rows.push_back(acc.row("gold"));
    }
    std::map<std::string, Accumulator> models;
    for (const auto& e : corpus.entries)
        for (const auto& [m, g] : e.generated) models[m].add(g.doc, g.annotated ? &g.annotations : nullptr, opts);
    for (const auto& [m, acc] : models) report.rows.push_back(acc.row(m));

    if (opts.pipeline_backend) {
        Accumulator acc;
        for (const auto& e : corpus.entries) {
            auto r = run_pipeline(e.spec_text, e.data_text, opts.pipeline, *opts.pipeline_backend);
            acc.add(r.summary, nullptr, opts);
        }
        report.rows.push_back(acc.row("pipeline:" + opts.pipeline_backend->id()));
    }
    return report;
}

json to_json(const EvalReport& r) {
    json rows = json::array();
    for (const auto& row : r.rows) {
        json j{{"system", row.system}, {"summaries", row.summaries}};
        if (r.diversity) {
            j["remote_clique"] = row.diversity.remote_clique;
            j["chamfer"] = row.diversity.chamfer;
            j["mst_dispersion"] = row.diversity.mst_dispersion;
            j["span"] = row.diversity.span;
            j["sparseness"] = row.diversity.sparseness;
            j["entropy"] = row.diversity.entropy;
        }
        if (r.quality) {
            j["semantic_richness"] = row.semantic_richness;
            j["hallucination_rate"] = row.hallucination_rate ? json(*row.hallucination_rate) : json(nullptr);
        }
        rows.push_back(j);
    }
    return {{"rows", rows},
            {"config",
             {{"span_percentile", r.metrics.span_percentile},
              {"entropy_grid_bins", r.metrics.entropy_grid_bins},
              {"embedding", r.metrics.embedding == Embedding::HashedTfidf ? "hashed-tfidf" : "external-vectors"},
              {"embedding_dim", r.metrics.embedding_dim}}}};
}

std::string format_table(const EvalReport& r) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> head{"System"};
    if (r.diversity)
        for (const char* c : {"RC", "Chamfer", "MST", "Span", "Sparseness", "Entropy"}) head.emplace_back(c);
    if (r.quality)
        for (const char* c : {"Semantic Richness", "Hallucination Rate"}) head.emplace_back(c);
    rows.push_back(head);
    for (const auto& row : r.rows) {
        std::vector<std::string> v{row.system};
        if (r.diversity) {
            const auto& d = row.diversity;
            for (double x : {d.remote_clique, d.chamfer, d.mst_dispersion, d.span, d.sparseness, d.entropy})
                v.push_back(fmt(x));
        }
        if (r.quality) {
            v.push_back(fmt(row.semantic_richness));
            v.push_back(row.hallucination_rate ? fmt(*row.hallucination_rate) : "n/a");
        }
        rows.push_back(v);
    }
    return render(rows);
}

}  // namespace chartinsight
