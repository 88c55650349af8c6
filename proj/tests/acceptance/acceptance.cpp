// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failures, so ctest fails when any criterion does.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "chartinsight/agents.hpp"
#include "chartinsight/bench.hpp"
#include "chartinsight/error.hpp"
#include "chartinsight/metrics.hpp"
#include "chartinsight/oracles.hpp"
#include "chartinsight/server.hpp"
#include "support/brute.hpp"
#include "support/fixtures.hpp"

using namespace chartinsight;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

int g_failures = 0;

void criterion(const char* name, double bound_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o.ok = false;
        o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.ok && secs >= bound_s) {
        o.ok = false;
        char buf[96];
        std::snprintf(buf, sizeof buf, "took %.2f s, bound %.0f s", secs, bound_s);
        o.detail = buf;
    }
    if (!o.ok) ++g_failures;
    std::printf("%s  %-28s %7.2f s / %4.0f s  %s\n", o.ok ? "PASS" : "FAIL", name, secs, bound_s, o.detail.c_str());
    std::fflush(stdout);
}

std::string str(std::size_t n) { return std::to_string(n); }

Claim make(ClaimBody body) {
    Claim c;
    c.body = std::move(body);
    return c;
}

std::vector<double> walk(std::uint64_t seed, std::size_t n, double base) {
    auto w = fixtures::random_walk(seed, n);
    for (auto& x : w) x += base;
    return w;
}

double window_max(const std::vector<double>& v, IndexRange w) {
    return *std::max_element(v.begin() + long(w.first), v.begin() + long(w.last) + 1);
}
double window_min(const std::vector<double>& v, IndexRange w) {
    return *std::min_element(v.begin() + long(w.first), v.begin() + long(w.last) + 1);
}

std::vector<std::pair<Claim, Verdict>> claims_in(const SummaryDoc& doc, const ChartFacts& f) {
    std::vector<std::pair<Claim, Verdict>> out;
    for (std::size_t i = 0; i < doc.sentences.size(); ++i) {
        const json wire = extract_claims_rule_based(doc.sentences[i].text, f.data.dimension_names());
        for (auto& c : claims_from_json(wire, f, i)) out.emplace_back(c, verify(c, f));
    }
    return out;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("ci-accept-" + tag + "-" + std::to_string(::getpid()));
        fs::remove_all(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

// ---- segmentation -------------------------------------------------------------

Outcome segmentation_threshold() {
    Outcome o;
    SegmentationConfig cfg;
    cfg.k = 0;
    std::size_t checked = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto v = fixtures::random_walk(1000 + seed, 40 + seed % 160);
        const auto raw = patches_from_cuts(v, find_segmentation_points(v, cfg));
        if (raw.size() < 2) continue;
        ++checked;
        std::vector<double> vars;
        for (const auto& p : raw) vars.push_back(brute::population_variance(v, p.start_index, p.end_index));
        std::sort(vars.begin(), vars.end());
        const std::size_t m = vars.size();
        const double median = m % 2 ? vars[m / 2] : (vars[m / 2 - 1] + vars[m / 2]) / 2;
        const double thr = merge_threshold(raw, cfg);
        o.require(std::fabs(thr - median) <= 1e-9, "seed " + std::to_string(seed) + ": threshold is not the median");

        const auto merged = segment(v, cfg);
        for (std::size_t i = 0; i + 1 < merged.size(); ++i) {
            const double a = brute::population_variance(v, merged[i].start_index, merged[i].end_index);
            const double b = brute::population_variance(v, merged[i + 1].start_index, merged[i + 1].end_index);
            o.require(!(a < thr && b < thr), "seed " + std::to_string(seed) + ": consecutive low-variance patches");
        }
    }
    o.require(checked >= 150, "too few series with two or more patches");
    if (o.ok) o.detail = "200 series, " + str(checked) + " with a merge step";
    return o;
}

Outcome segmentation_oracle() {
    Outcome o;
    SegmentationConfig cfg;
    std::size_t patches = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto v = fixtures::random_walk(5000 + seed, 10 + (seed * 37) % 191);
        const auto cuts = brute::segmentation_points(v, cfg.prominence_fraction);
        o.require(find_segmentation_points(v, cfg) == cuts, "seed " + std::to_string(seed) + ": cut points differ");
        const auto want = brute::patch_bounds(v, cuts, cfg.k);
        std::vector<std::pair<std::size_t, std::size_t>> got;
        for (const auto& p : segment(v, cfg)) got.emplace_back(p.start_index, p.end_index);
        o.require(got == want, "seed " + std::to_string(seed) + ": patch bounds differ");
        patches += got.size();
    }
    if (o.ok) o.detail = "100 series, " + str(patches) + " patches";
    return o;
}

// ---- self-consistency ---------------------------------------------------------

Outcome extremum_correction() {
    Outcome o;
    const auto chart = fixtures::stocks();
    const auto facts = analyze(chart.data);
    std::vector<double> apple;
    for (const auto& x : chart.data.series("Apple")) apple.push_back(*x);
    const double truth = *std::max_element(apple.begin(), apple.end());
    o.require(truth == 3.38, "fixture maximum is not 3.38");

    const auto doc = annotate("Apple reached a maximum of 1.48.", facts, chart.l1, nullptr);
    bool seeded_fails = false;
    for (const auto& [c, v] : claims_in(doc, facts))
        if (c.kind() == ClaimKind::Extremum && v.status == VerdictStatus::Fail) seeded_fails = true;
    o.require(seeded_fails, "the seeded claim is not flagged");

    std::set<std::string> outputs;
    for (int run = 0; run < 5; ++run) {
        MockBackend m;
        const auto out = self_consistency(doc, facts, chart.l1, PipelineConfig{}, m);
        outputs.insert(serialize(out));
        bool exact = false;
        for (const auto& [c, v] : claims_in(out, facts))
            if (const auto* e = std::get_if<ExtremumClaim>(&c.body); e && e->which == Extreme::Max)
                exact = e->value == truth && v.status == VerdictStatus::Pass;
        o.require(exact, "run " + std::to_string(run) + ": corrected claim is not the computed maximum");
    }
    o.require(outputs.size() == 1, "reruns differ");
    if (o.ok) o.detail = "1.48 -> 3.38, 5 identical reruns";
    return o;
}

// Seeded charts, two dimensions that cross now and then.
struct SweepChart {
    std::vector<double> a, b;
    ChartFacts facts;
    double max_patch_range = 0;
};

SweepChart sweep_chart(std::uint64_t seed) {
    SweepChart c;
    c.a = walk(seed * 2 + 1, 80, 100);
    c.b = walk(seed * 2 + 2, 80, 100);
    c.facts = analyze(fixtures::yearly({{"a", c.a}, {"b", c.b}}));
    SegmentationConfig cfg;
    for (const auto* v : {&c.a, &c.b})
        for (auto [s, e] : brute::patch_bounds(*v, brute::segmentation_points(*v, cfg.prominence_fraction), cfg.k))
            c.max_patch_range = std::max(c.max_patch_range, window_max(*v, {s, e}) - window_min(*v, {s, e}));
    return c;
}

struct Tally {
    std::size_t clean = 0, corrupt = 0, detected = 0, false_pos = 0;
    std::string first_miss;
};

Outcome hallucination_sweep() {
    Outcome o;
    constexpr std::size_t kHalf = 30;
    std::map<ClaimKind, Tally> tally;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> factor(2.0001, 20.0);
    std::bernoulli_distribution coin;
    auto bump = [&](double value, double tol) { return value * (1 + (coin(rng) ? 1 : -1) * factor(rng) * tol); };

    auto record = [&](ClaimKind k, const ChartFacts& f, const Claim& clean, const Claim& bad) {
        auto& t = tally[k];
        if (t.clean >= kHalf) return;
        ++t.clean;
        ++t.corrupt;
        if (verify(clean, f).status != VerdictStatus::Pass) ++t.false_pos;
        const auto v = verify(bad, f);
        if (v.status == VerdictStatus::Fail) ++t.detected;
        else if (t.first_miss.empty()) t.first_miss = to_json(bad, f.data).dump() + " -> " + v.explanation;
    };
    auto full = [&](ClaimKind k) { return tally[k].clean >= kHalf; };

    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const auto c = sweep_chart(seed);
        const auto& f = c.facts;
        const std::size_t n = c.a.size();
        std::uniform_int_distribution<std::size_t> start(0, n - 3);
        auto random_window = [&](std::size_t min_len, std::size_t max_len) {
            const std::size_t s = start(rng);
            const std::size_t len = min_len + rng() % (max_len - min_len + 1);
            return IndexRange{s, std::min(n - 1, s + len - 1)};
        };

        for (int i = 0; i < 2; ++i) {
            const auto w = random_window(2, 40);
            const auto& v = i ? c.b : c.a;
            const std::string dim = i ? "b" : "a";
            // extremum
            const bool is_max = coin(rng);
            const double ex = is_max ? window_max(v, w) : window_min(v, w);
            const auto which = is_max ? Extreme::Max : Extreme::Min;
            record(ClaimKind::Extremum, f, make(ExtremumClaim{which, ex, dim, w, std::nullopt}),
                   make(ExtremumClaim{which, bump(ex, kExtremumTolerance), dim, w, std::nullopt}));
            // numeric: mean, growth and a single-sample value in turn
            const int stat = int(tally[ClaimKind::Numeric].clean % 3);
            if (stat == 0) {
                double sum = 0;
                for (std::size_t k = w.first; k <= w.last; ++k) sum += v[k];
                const double mean = sum / double(w.size());
                record(ClaimKind::Numeric, f, make(NumericClaim{Statistic::Mean, mean, dim, w}),
                       make(NumericClaim{Statistic::Mean, bump(mean, kMeanTolerance), dim, w}));
            } else if (stat == 1) {
                const double g = (v[w.last] - v[w.first]) / std::fabs(v[w.first]);
                if (std::fabs(g) > 1e-6)
                    record(ClaimKind::Numeric, f, make(NumericClaim{Statistic::GrowthRate, g, dim, w}),
                           make(NumericClaim{Statistic::GrowthRate, bump(g, kGrowthTolerance), dim, w}));
            } else {
                const IndexRange at{w.first, w.first};
                record(ClaimKind::Numeric, f, make(NumericClaim{Statistic::ValueAt, v[w.first], dim, at}),
                       make(NumericClaim{Statistic::ValueAt, bump(v[w.first], kValueAtTolerance), dim, at}));
            }
            // trend direction
            const double net = v[w.last] - v[w.first];
            if (net != 0) {
                const auto t = net > 0 ? TrendClass::Rising : TrendClass::Falling;
                const auto flip = net > 0 ? TrendClass::Falling : TrendClass::Rising;
                record(ClaimKind::TrendDirection, f, make(TrendClaim{t, dim, w, false}),
                       make(TrendClaim{flip, dim, w, false}));
            }
            // significance, only well away from the cut-off
            const double ratio = (window_max(v, w) - window_min(v, w)) / c.max_patch_range;
            const double cut = f.cfg.significance_ratio;
            if (ratio >= 2 * cut || ratio <= cut / 2) {
                const bool sig = ratio >= cut;
                record(ClaimKind::Significance, f, make(SignificanceClaim{dim, w, sig}),
                       make(SignificanceClaim{dim, w, !sig}));
            }
        }

        // which line is on top, over windows where one stays strictly above
        for (int tries = 0; tries < 20 && !full(ClaimKind::MultiTrend); ++tries) {
            const auto w = random_window(3, 20);
            bool a_above = true, b_above = true;
            for (std::size_t k = w.first; k <= w.last; ++k) {
                a_above = a_above && c.a[k] > c.b[k];
                b_above = b_above && c.b[k] > c.a[k];
            }
            if (!a_above && !b_above) continue;
            const std::string top = a_above ? "a" : "b", bottom = a_above ? "b" : "a";
            record(ClaimKind::MultiTrend, f,
                   make(MultiClaim{MultiAssertion::SameRelation, "a", "b", w, false, top, std::nullopt}),
                   make(MultiClaim{MultiAssertion::SameRelation, "a", "b", w, false, bottom, std::nullopt}));
            break;
        }

        // rise or fall between the ends of a maximal run of patches
        for (const auto& dim : {"a", "b"}) {
            const auto& ps = f.patches.at(dim);
            for (std::size_t i = 0; i < ps.size();) {
                std::size_t k = i;
                while (k + 1 < ps.size() && ps[k + 1].stats.direction == ps[i].stats.direction) ++k;
                const Direction d = ps[i].stats.direction;
                const std::size_t first = ps[i].anchor_index, last = ps[k].end_index;
                if (d != Direction::Flat && last - first >= 4) {
                    // endpoints are matched to within one sample, so move one by three or more
                    const auto t = d == Direction::Up ? TrendClass::Rising : TrendClass::Falling;
                    const std::size_t shift = 3 + rng() % 6;
                    IndexRange s{first, first}, e{last, last};
                    if (last + shift < n) e = {last + shift, last + shift};
                    else if (first >= shift) s = {first - shift, first - shift};
                    else e = {last - 3, last - 3};
                    record(ClaimKind::Range, f, make(RangeClaim{t, dim, {first, first}, {last, last}}),
                           make(RangeClaim{t, dim, s, e}));
                }
                i = k + 1;
            }
        }
    }

    std::string summary;
    for (auto k : {ClaimKind::Extremum, ClaimKind::Numeric, ClaimKind::TrendDirection, ClaimKind::Range,
                   ClaimKind::MultiTrend, ClaimKind::Significance}) {
        const auto& t = tally[k];
        const std::string name(to_string(k));
        o.require(t.clean + t.corrupt == 2 * kHalf, name + ": only " + str(t.clean + t.corrupt) + " claims");
        o.require(t.detected == t.corrupt, name + ": missed " + str(t.corrupt - t.detected) + " corrupted claims, first " + t.first_miss);
        o.require(t.false_pos == 0, name + ": " + str(t.false_pos) + " false positives");
        summary += name + " " + str(t.detected) + "/" + str(t.corrupt) + " ";
    }
    if (o.ok) o.detail = summary + "detected, 0 false positives";
    return o;
}

Outcome refine_bound() {
    Outcome o;
    const auto facts = analyze(fixtures::stocks().data);
    PipelineConfig cfg;
    o.require(cfg.max_refine_iters == 5, "default bound is not 5");
    {
        MockBackend m(MockOptions{7, false, true});
        auto multi = run_multi_insighter(facts, cfg, m);
        auto r = refine_loop("Draft.", multi.tuples, facts, cfg, m);
        o.require(r.iterations == 5, "adversarial mock ran " + std::to_string(r.iterations) + " rounds");
        o.require(r.rounds.size() == 5, "adversarial mock logged the wrong number of rounds");
        for (const auto& round : r.rounds) o.require(!round.new_tuples.empty(), "adversarial round without news");
    }
    int coop = 0;
    {
        MockBackend m;
        auto multi = run_multi_insighter(facts, cfg, m);
        auto r = refine_loop("Draft.", multi.tuples, facts, cfg, m);
        coop = r.iterations;
        o.require(r.iterations < 5, "cooperative mock hit the bound");
        o.require(!r.rounds.empty() && r.rounds.back().new_tuples.empty(), "cooperative mock did not end on an empty round");
        for (std::size_t i = 0; i + 1 < r.rounds.size(); ++i)
            o.require(!r.rounds[i].new_tuples.empty(), "cooperative mock kept going past an empty round");
    }
    if (o.ok) o.detail = "adversarial 5 rounds, cooperative stops after " + std::to_string(coop);
    return o;
}

// ---- pipeline -------------------------------------------------------------------

const Corpus& mini_corpus() {
    static const Corpus c = load_corpus(fixtures::data_dir() / "mini-corpus");
    return c;
}

Outcome pipeline_determinism() {
    Outcome o;
    const auto& corpus = mini_corpus();
    o.require(corpus.entries.size() == 6, "mini-corpus does not have 6 entries");
    std::size_t checked = 0;
    PipelineConfig cfg;
    cfg.seed = 7;
    for (const auto& e : corpus.entries) {
        MockBackend m1(MockOptions{7}), m2(MockOptions{7});
        const auto a = run_pipeline(e.spec_text, e.data_text, cfg, m1);
        const auto b = run_pipeline(e.spec_text, e.data_text, cfg, m2);
        o.require(serialize(a.summary) == serialize(b.summary), e.chart_id + ": runs differ");
        const auto facts = analyze(load_chart(e.spec_text, e.data_text).data);
        for (const auto& [c, v] : claims_in(a.summary, facts)) {
            if (c.kind() != ClaimKind::Extremum && c.kind() != ClaimKind::Significance) continue;
            ++checked;
            o.require(v.status != VerdictStatus::Fail, e.chart_id + ": failing claim: " + v.explanation);
        }
    }
    if (o.ok) o.detail = "6 entries byte-identical, " + str(checked) + " extremum/significance claims pass";
    return o;
}

// ---- metrics ----------------------------------------------------------------------

Outcome metrics_oracle() {
    Outcome o;
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g(0, 1);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + rng() % 5, dim = 1 + rng() % 4;
        PointSet ps;
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> p(dim);
            for (auto& x : p) x = g(rng);
            ps.points.push_back(p);
        }
        const auto d = diversity(ps);
        const double want = brute::mst_exhaustive(ps.points);
        o.require(std::fabs(d.mst_dispersion - want) <= 1e-9, "trial " + std::to_string(trial) + ": mst differs");
        o.require(d.chamfer <= d.remote_clique + 1e-9, "trial " + std::to_string(trial) + ": chamfer > remote clique");
    }
    PointSet line;
    line.points = {{0}, {1}, {2}};
    const auto d = diversity(line);
    o.require(d.remote_clique == 4.0 / 3.0, "remote clique of {0,1,2} is not 4/3");
    o.require(d.chamfer == 1.0, "chamfer of {0,1,2} is not 1");
    o.require(d.mst_dispersion == 2.0, "mst of {0,1,2} is not 2");
    if (o.ok) o.detail = "50 random sets, {0,1,2} fixture exact";
    return o;
}

Outcome quality_arithmetic() {
    Outcome o;
    SummaryDoc doc;
    const Level levels[] = {Level::L1, Level::L1, Level::L2, Level::L2, Level::L3, Level::L3, Level::L2, Level::L3};
    for (std::size_t i = 0; i < 8; ++i) {
        Sentence s;
        s.index = i;
        s.text = "s" + std::to_string(i) + ".";
        s.level = levels[i];
        doc.sentences.push_back(s);
    }
    o.require(semantic_richness(doc) == 0.75, "semantic richness of 6 in 8 is not 0.75");
    o.require(hallucination_rate(12, 10) == 1.2, "12 hallucinations in 10 sentences is not 1.2");
    if (o.ok) o.detail = "richness 0.75, rate 1.2";
    return o;
}

Outcome benchmark_stats() {
    using HT = HallucinationType;
    // Counted by hand from the annotation files.
    const std::map<std::string, std::map<HT, std::size_t>> hand{
        {"llm-direct",
         {{HT::ExtremumError, 2}, {HT::NumericalValueError, 1}, {HT::TrendDirectionError, 3},
          {HT::MultidimensionalTrendError, 2}, {HT::RangeError, 2}, {HT::CyclicalityError, 2},
          {HT::StabilityError, 3}, {HT::DetailOmission, 1}, {HT::JunkDescription, 0},
          {HT::ProportionPerceptionError, 1}}},
        {"template",
         {{HT::ExtremumError, 1}, {HT::NumericalValueError, 2}, {HT::TrendDirectionError, 0},
          {HT::MultidimensionalTrendError, 0}, {HT::RangeError, 0}, {HT::CyclicalityError, 0},
          {HT::StabilityError, 0}, {HT::DetailOmission, 4}, {HT::JunkDescription, 3},
          {HT::ProportionPerceptionError, 2}}},
    };
    Outcome o;
    const auto& corpus = mini_corpus();
    o.require(corpus.errors.empty(), "mini-corpus has invalid entries");
    const auto stats = corpus_stats(corpus);
    o.require(stats.by_model.size() == hand.size(), "unexpected model set");
    for (const auto& [model, counts] : hand) {
        auto it = stats.by_model.find(model);
        if (it == stats.by_model.end()) {
            o.require(false, "no tally for " + model);
            continue;
        }
        for (auto t : all_hallucination_types()) {
            o.require(it->second.counts.at(t) == counts.at(t),
                      model + " " + std::string(to_string(t)) + ": " + str(it->second.counts.at(t)) + " != " +
                          str(counts.at(t)));
            o.require(stats.overall.counts.at(t) == counts.at(t) + hand.at(model == "template" ? "llm-direct" : "template").at(t),
                      "overall tally of " + std::string(to_string(t)) + " is off");
        }
    }
    double sum = 0;
    for (auto t : all_hallucination_types()) sum += stats.overall.frequency(t);
    o.require(std::fabs(sum - 100.0) <= 0.1, "frequencies sum to " + std::to_string(sum));
    if (o.ok) o.detail = "10 types x 2 models match, " + str(stats.overall.total) + " annotations";
    return o;
}

Outcome complexity_classifier() {
    Outcome o;
    const std::vector<std::pair<std::vector<double>, Complexity>> cases{
        {{0, 5, 10, 5, 0}, Complexity::Simple},
        {{0, 10, 2, 10, 2, 10, 0}, Complexity::Moderate},
        {{0, 10, 2, 10, 2, 10, 2, 10, 2, 10, 0}, Complexity::Complex},
    };
    for (const auto& [values, want] : cases) {
        auto scaled = values;
        for (auto& x : scaled) x *= 1000;
        const auto a = score_complexity(fixtures::yearly("v", values));
        const auto b = score_complexity(fixtures::yearly("v", scaled));
        o.require(a.level == want, std::string("expected ") + std::string(to_string(want)));
        o.require(a.peaks == b.peaks && a.level == b.level, "scaling by 1000 changed the result");
    }
    if (o.ok) o.detail = "1/3/5 peaks -> simple/moderate/complex, x1000 invariant";
    return o;
}

// ---- service ------------------------------------------------------------------------

json payload(const BenchmarkEntry& e) { return {{"spec", e.spec_text}, {"data", e.data_text}}; }

std::string direct(const BenchmarkEntry& e) {
    MockBackend m;
    JobOptions jo;
    return serialize(run_pipeline(e.spec_text, e.data_text, jo.pipeline(), m).summary);
}

Outcome service_contract() {
    Outcome o;
    const auto& entries = mini_corpus().entries;
    TempDir t("service");
    ServiceConfig sc;
    sc.data_dir = t.path;
    sc.workers = 1;

    std::vector<std::string> ids;
    std::map<std::string, std::string> done_before;
    {
        JobService svc(sc);
        const auto first = svc.submit(payload(entries[0]));
        for (int i = 0; i < 20000; ++i) {
            const auto s = svc.status(first).state;
            if (s == JobState::Done || s == JobState::Failed) break;
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
        }
        o.require(svc.status(first).state == JobState::Done, "first job did not finish");
        o.require(serialize(svc.summary(first)) == direct(entries[0]), "service result differs from a direct run");

        ids.push_back(first);
        for (std::size_t i = 1; i < entries.size(); ++i) ids.push_back(svc.submit(payload(entries[i])));
        svc.wait(ids[2], std::chrono::seconds(120));
        // the service goes away with work still queued
        for (const auto& id : ids)
            if (svc.status(id).state == JobState::Done) done_before[id] = serialize(svc.summary(id));
    }
    o.require(done_before.size() >= 3 && done_before.size() < ids.size(), "restart did not land mid-corpus");

    JobService again(sc);
    for (const auto& [id, bytes] : done_before) {
        o.require(again.status(id).state == JobState::Done, id + " lost its completed state");
        o.require(serialize(again.summary(id)) == bytes, id + " summary changed across the restart");
    }
    for (std::size_t i = 0; i < ids.size(); ++i) {
        o.require(again.wait(ids[i], std::chrono::seconds(120)), ids[i] + " never finished");
        const auto j = again.status(ids[i]);
        o.require(j.state == JobState::Done, ids[i] + " is " + std::string(to_string(j.state)));
        if (j.state == JobState::Done)
            o.require(serialize(again.summary(ids[i])) == direct(entries[i]), entries[i].chart_id + " differs from a direct run");
    }
    if (o.ok)
        o.detail = str(done_before.size()) + " of " + str(ids.size()) + " done at restart, none lost, all match direct runs";
    return o;
}

}  // namespace

int main() {
    criterion("segmentation-threshold", 5, segmentation_threshold);
    criterion("segmentation-oracle", 10, segmentation_oracle);
    criterion("extremum-correction", 30, extremum_correction);
    criterion("hallucination-sweep", 10, hallucination_sweep);
    criterion("refine-bound", 30, refine_bound);
    criterion("pipeline-determinism", 180, pipeline_determinism);
    criterion("metrics-oracle", 10, metrics_oracle);
    criterion("quality-arithmetic", 1, quality_arithmetic);
    criterion("benchmark-stats", 10, benchmark_stats);
    criterion("complexity-classifier", 5, complexity_classifier);
    criterion("service-contract", 180, service_contract);
    std::printf("%d criteria failed\n", g_failures);
    return g_failures;
}
