#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "chartinsight/bench.hpp"
#include "chartinsight/error.hpp"
#include "support/fixtures.hpp"

using namespace chartinsight;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path corpus_dir() { return fixtures::data_dir() / "mini-corpus"; }

const Corpus& corpus() {
    static const Corpus c = load_corpus(corpus_dir());
    return c;
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("ci-bench-" + std::to_string(::getpid()) + "-" + std::to_string(counter()++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

void write(const fs::path& p, const std::string& s) {
    std::ofstream(p, std::ios::trunc) << s;
}

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error raised");
    return ErrorCode::BackendError;
}

using HT = HallucinationType;

// Counted by hand from the annotation files, one line per entry and model.
const std::map<std::string, std::map<HT, std::size_t>> kHandTally{
    {"llm-direct",
     {{HT::ExtremumError, 2},
      {HT::NumericalValueError, 1},
      {HT::TrendDirectionError, 3},
      {HT::MultidimensionalTrendError, 2},
      {HT::RangeError, 2},
      {HT::CyclicalityError, 2},
      {HT::StabilityError, 3},
      {HT::DetailOmission, 1},
      {HT::JunkDescription, 0},
      {HT::ProportionPerceptionError, 1}}},
    {"template",
     {{HT::ExtremumError, 1},
      {HT::NumericalValueError, 2},
      {HT::TrendDirectionError, 0},
      {HT::MultidimensionalTrendError, 0},
      {HT::RangeError, 0},
      {HT::CyclicalityError, 0},
      {HT::StabilityError, 0},
      {HT::DetailOmission, 4},
      {HT::JunkDescription, 3},
      {HT::ProportionPerceptionError, 2}}},
};

}  // namespace

TEST_CASE("complexity from prominent peaks") {
    auto one = fixtures::yearly("v", {0, 5, 10, 5, 0});
    auto three = fixtures::yearly("v", {0, 10, 2, 10, 2, 10, 0});
    auto five = fixtures::yearly("v", {0, 10, 2, 10, 2, 10, 2, 10, 2, 10, 0});
    CHECK(classify_complexity(one) == Complexity::Simple);
    CHECK(classify_complexity(three) == Complexity::Moderate);
    CHECK(classify_complexity(five) == Complexity::Complex);
    CHECK(score_complexity(five).peaks_per_dimension.at("v") == 5);

    // the busiest dimension decides
    auto mixed = fixtures::yearly({{"a", {0, 10, 2, 10, 2, 10, 2, 10, 2, 10, 0}}, {"b", {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10}}});
    auto s = score_complexity(mixed);
    CHECK(s.peaks == 5);
    CHECK(s.peaks_per_dimension.at("b") == 0);
    CHECK(s.level == Complexity::Complex);

    // small wiggles are not peaks
    CHECK(score_complexity(fixtures::yearly("v", {0, 10, 9.9, 9.95, 0})).peaks == 1);
}

TEST_CASE("complexity ignores positive scaling") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto walk = fixtures::random_walk(seed, 80);
        auto scaled = walk;
        for (auto& v : scaled) v *= 1000;
        auto a = score_complexity(fixtures::yearly("v", walk));
        auto b = score_complexity(fixtures::yearly("v", scaled));
        CHECK(a.peaks == b.peaks);
        CHECK(a.level == b.level);
    }
}

TEST_CASE("mini-corpus loads six entries, two per level") {
    const auto& c = corpus();
    CHECK(c.errors.empty());
    REQUIRE(c.entries.size() == 6);
    std::map<Complexity, int> per;
    for (const auto& e : c.entries) {
        ++per[e.complexity];
        CHECK(e.gold.chart_id == e.chart_id);
        CHECK(e.gold.source == DocSource::Gold);
        CHECK(e.generated.size() == 2);
        auto chart = load_chart(e.spec_text, e.data_text);
        CHECK(classify_complexity(chart.data) == e.complexity);
    }
    CHECK(per[Complexity::Simple] == 2);
    CHECK(per[Complexity::Moderate] == 2);
    CHECK(per[Complexity::Complex] == 2);
}

TEST_CASE("gold sentence counts match the hand count") {
    const std::map<std::string, std::size_t> hand{{"bakery-sales", 4},      {"energy-mix", 5}, {"museum-visitors", 4},
                                                  {"regional-rainfall", 5}, {"commodity-price", 5}, {"web-traffic", 5}};
    for (const auto& e : corpus().entries) {
        CHECK(e.gold.sentences.size() == hand.at(e.chart_id));
        CHECK(split_sentences(e.gold.text()).size() == hand.at(e.chart_id));
    }
}

TEST_CASE("corpus stats equal the hand tally") {
    auto s = corpus_stats(corpus());
    REQUIRE(s.by_model.size() == 2);
    for (const auto& [model, counts] : kHandTally) {
        const auto& t = s.by_model.at(model);
        for (auto ty : all_hallucination_types()) CHECK_MESSAGE(t.counts.at(ty) == counts.at(ty), model << " " << to_string(ty));
    }
    CHECK(s.by_model.at("llm-direct").total == 17);
    CHECK(s.by_model.at("template").total == 12);
    CHECK(s.overall.total == 29);
    CHECK(s.by_model.at("llm-direct").sentences == 28);
    CHECK(s.by_model.at("template").sentences == 21);

    double sum = 0;
    for (auto ty : all_hallucination_types()) sum += s.overall.frequency(ty);
    CHECK(sum == doctest::Approx(100.0).epsilon(1e-3));
    CHECK(s.overall.frequency(HT::DetailOmission) == doctest::Approx(100.0 * 5 / 29));

    auto j = to_json(s);
    CHECK(j["overall"]["types"].size() == 10);
    CHECK(format_table(s).find("DetailOmission") != std::string::npos);
}

TEST_CASE("frequencies reproduce a known distribution") {
    // 199 annotations split like the reference corpus's leading types
    Corpus c;
    BenchmarkEntry e;
    e.chart_id = "x";
    GeneratedSummary g;
    Sentence s;
    s.text = "x.";
    g.doc.sentences.assign(1, s);
    auto add = [&](HT t, int n) {
        for (int i = 0; i < n; ++i) g.annotations.push_back({0, t, ""});
    };
    add(HT::TrendDirectionError, 44);
    add(HT::DetailOmission, 44);
    add(HT::ExtremumError, 25);
    add(HT::NumericalValueError, 86);
    g.annotated = true;
    e.generated["m"] = g;
    c.entries.push_back(e);
    auto st = corpus_stats(c);
    auto one_decimal = [&](HT t) { return std::round(st.overall.frequency(t) * 10) / 10; };
    CHECK(one_decimal(HT::TrendDirectionError) == 22.1);
    CHECK(one_decimal(HT::DetailOmission) == 22.1);
    CHECK(one_decimal(HT::ExtremumError) == 12.6);
}

TEST_CASE("zero annotations give an all-zero table") {
    Corpus c = corpus();
    for (auto& e : c.entries)
        for (auto& [m, g] : e.generated) g.annotations.clear();
    auto s = corpus_stats(c);
    CHECK(s.overall.total == 0);
    for (auto ty : all_hallucination_types()) {
        CHECK(s.overall.counts.at(ty) == 0);
        CHECK(s.overall.frequency(ty) == 0);
    }
    CHECK(code_of([] { corpus_stats(Corpus{}); }) == ErrorCode::EmptyCorpus);
}

TEST_CASE("layout and schema errors") {
    TempDir empty;
    CHECK(code_of([&] { load_corpus(empty.path); }) == ErrorCode::LayoutError);
    CHECK(code_of([&] { load_corpus(empty.path / "missing"); }) == ErrorCode::LayoutError);

    TempDir t;
    fs::copy(corpus_dir(), t.path, fs::copy_options::recursive);
    fs::remove(t.path / "energy-mix" / "gold.summary.json");
    write(t.path / "web-traffic" / "generated" / "template.annotations.json",
          R"([{"sentence_index": 0, "type": "Typo", "note": ""}])");
    auto c = load_corpus(t.path);
    CHECK(c.entries.size() == 4);
    REQUIRE(c.errors.size() == 2);
    CHECK(c.errors[0].chart_id == "energy-mix");
    CHECK(c.errors[0].code == ErrorCode::SchemaError);
    CHECK(c.errors[1].chart_id == "web-traffic");
    CHECK(c.errors[1].message.find("Typo") != std::string::npos);
}

TEST_CASE("gold must carry no annotations, docs must share the chart id") {
    TempDir t;
    fs::copy(corpus_dir(), t.path, fs::copy_options::recursive);
    write(t.path / "bakery-sales" / "gold.annotations.json", R"([{"sentence_index": 0, "type": "RangeError"}])");
    auto j = json::parse(fixtures::read_file(t.path / "museum-visitors" / "generated" / "template.summary.json"));
    j["chart_id"] = "other";
    write(t.path / "museum-visitors" / "generated" / "template.summary.json", j.dump());
    auto c = load_corpus(t.path);
    CHECK(c.entries.size() == 4);
    CHECK(c.errors.size() == 2);
}

TEST_CASE("save then load is the identity") {
    TempDir t;
    save_corpus(corpus(), t.path);
    auto again = load_corpus(t.path);
    REQUIRE(again.entries.size() == corpus().entries.size());
    for (std::size_t i = 0; i < again.entries.size(); ++i) {
        const auto& a = corpus().entries[i];
        const auto& b = again.entries[i];
        CHECK(a.chart_id == b.chart_id);
        CHECK(a.spec_text == b.spec_text);
        CHECK(a.data_text == b.data_text);
        CHECK(a.meta == b.meta);
        CHECK(a.gold == b.gold);
        REQUIRE(a.generated.size() == b.generated.size());
        for (const auto& [m, g] : a.generated) {
            CHECK(b.generated.at(m).doc == g.doc);
            CHECK(b.generated.at(m).annotations == g.annotations);
        }
    }
}

TEST_CASE("evaluation table has a row per system") {
    auto r = run_eval(corpus());
    REQUIRE(r.rows.size() == 3);
    CHECK(r.rows[0].system == "gold");
    CHECK(r.rows[1].system == "llm-direct");
    CHECK(r.rows[2].system == "template");
    CHECK_FALSE(r.rows[0].hallucination_rate.has_value());
    CHECK(*r.rows[1].hallucination_rate == doctest::Approx(17.0 / 28));
    CHECK(*r.rows[2].hallucination_rate == doctest::Approx(12.0 / 21));
    for (const auto& row : r.rows) {
        CHECK(row.summaries == 6);
        CHECK(row.diversity.chamfer <= row.diversity.remote_clique);
        CHECK(row.semantic_richness >= 0);
        CHECK(row.semantic_richness <= 1);
    }
    // richness by hand from the stored levels
    std::size_t rich = 0, total = 0;
    for (const auto& e : corpus().entries)
        for (const auto& s : e.gold.sentences) {
            ++total;
            rich += s.level != Level::L1;
        }
    CHECK(r.rows[0].semantic_richness == doctest::Approx(double(rich) / double(total)));

    auto table = format_table(r);
    CHECK(table.find("Hallucination Rate") != std::string::npos);
    CHECK(table.find("n/a") != std::string::npos);
}

TEST_CASE("evaluation without annotations marks the rate n/a") {
    Corpus c = corpus();
    for (auto& e : c.entries)
        for (auto& [m, g] : e.generated) {
            g.annotated = false;
            g.annotations.clear();
        }
    auto r = run_eval(c);
    for (const auto& row : r.rows) CHECK_FALSE(row.hallucination_rate.has_value());
    CHECK(to_json(r)["rows"][1]["hallucination_rate"].is_null());
}

TEST_CASE("metric subsets and the pipeline row") {
    EvalOptions o;
    o.quality = false;
    auto r = run_eval(corpus(), o);
    auto j = to_json(r);
    CHECK(j["rows"][0].contains("remote_clique"));
    CHECK_FALSE(j["rows"][0].contains("semantic_richness"));
    CHECK(format_table(r).find("Semantic") == std::string::npos);

    MockBackend m1, m2;
    EvalOptions p;
    p.pipeline_backend = &m1;
    auto a = run_eval(corpus(), p);
    p.pipeline_backend = &m2;
    auto b = run_eval(corpus(), p);
    REQUIRE(a.rows.size() == 4);
    CHECK(a.rows.back().system == "pipeline:mock");
    CHECK(to_json(a) == to_json(b));
}
