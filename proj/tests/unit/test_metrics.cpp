#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "chartinsight/error.hpp"
#include "chartinsight/metrics.hpp"
#include "support/brute.hpp"

using namespace chartinsight;

namespace {

PointSet points_1d(std::vector<double> xs) {
    PointSet ps;
    for (double x : xs) ps.points.push_back({x});
    return ps;
}

PointSet random_points(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
    std::normal_distribution<double> g(0, 1);
    PointSet ps;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> p(dim);
        for (auto& x : p) x = g(rng);
        ps.points.push_back(p);
    }
    return ps;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

SummaryDoc doc_with_levels(std::vector<Level> levels) {
    SummaryDoc d;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        Sentence s;
        s.index = i;
        s.text = "s" + std::to_string(i) + ".";
        s.level = levels[i];
        d.sentences.push_back(s);
    }
    return d;
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

}  // namespace

TEST_CASE("points 0, 1, 2 on a line") {
    auto d = diversity(points_1d({0, 1, 2}));
    // mean distances 1.5, 1, 1.5 -> 4/3; nearest neighbours all 1; MST 1 + 1
    CHECK(d.remote_clique == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
    CHECK(d.chamfer == 1.0);
    CHECK(d.mst_dispersion == 2.0);
    // centroid 1: distances 1, 0, 1; 95th percentile by interpolation = 1
    CHECK(d.span == doctest::Approx(1.0));
    // medoid is 1, total distance 2 over 3 points
    CHECK(d.sparseness == doctest::Approx(2.0 / 3.0));
    // three distinct cells on a 10-bin axis
    CHECK(d.entropy == doctest::Approx(std::log(3.0)));
    CHECK_FALSE(d.degenerate);
}

TEST_CASE("two identical points") {
    PointSet ps;
    ps.points = {{0.3, 0.4}, {0.3, 0.4}};
    auto d = diversity(ps);
    CHECK(d.chamfer == 0);
    CHECK(d.mst_dispersion == 0);
    CHECK(d.sparseness == 0);
    CHECK(d.entropy == 0);
}

TEST_CASE("one point is degenerate, none is an error") {
    auto d = diversity(points_1d({5}));
    CHECK(d.degenerate);
    CHECK(d == Diversity{0, 0, 0, 0, 0, 0, true});
    CHECK(code_of([] { diversity(PointSet{}); }) == ErrorCode::EmptyInput);
    PointSet ragged;
    ragged.points = {{1, 2}, {1}};
    CHECK(code_of([&] { diversity(ragged); }) == ErrorCode::ValidationError);
}

TEST_CASE("mst matches exhaustive spanning trees on random sets") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + rng() % 5, dim = 1 + rng() % 4;
        auto ps = random_points(rng, n, dim);
        auto d = diversity(ps);
        CHECK(d.mst_dispersion == doctest::Approx(brute::mst_exhaustive(ps.points)).epsilon(1e-9));
        CHECK(mst_edges(ps).size() == n - 1);
        CHECK(d.chamfer <= d.remote_clique + 1e-12);
    }
}

TEST_CASE("diversity is invariant under point order") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        auto ps = random_points(rng, 3 + rng() % 8, 2 + rng() % 5);
        auto a = diversity(ps);
        std::shuffle(ps.points.begin(), ps.points.end(), rng);
        auto b = diversity(ps);
        CHECK(a.remote_clique == doctest::Approx(b.remote_clique).epsilon(1e-12));
        CHECK(a.chamfer == doctest::Approx(b.chamfer).epsilon(1e-12));
        CHECK(a.mst_dispersion == doctest::Approx(b.mst_dispersion).epsilon(1e-12));
        CHECK(a.span == doctest::Approx(b.span).epsilon(1e-12));
        CHECK(a.sparseness == doctest::Approx(b.sparseness).epsilon(1e-12));
        CHECK(a.entropy == doctest::Approx(b.entropy).epsilon(1e-12));
    }
}

TEST_CASE("dropping a duplicate never raises the mst") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 30; ++trial) {
        auto ps = random_points(rng, 3 + rng() % 5, 3);
        auto dup = ps;
        dup.points.push_back(ps.points[rng() % ps.size()]);
        CHECK(diversity(ps).mst_dispersion <= diversity(dup).mst_dispersion + 1e-12);
    }
}

TEST_CASE("entropy stays within the grid bound") {
    std::mt19937_64 rng(3);
    MetricsConfig cfg;
    cfg.entropy_grid_bins = 4;
    for (int trial = 0; trial < 30; ++trial) {
        auto ps = random_points(rng, 2 + rng() % 40, 3);
        auto d = diversity(ps, cfg);
        CHECK(d.entropy >= 0);
        CHECK(d.entropy <= std::log(16.0) + 1e-12);
    }
    cfg.entropy_grid_bins = 1;
    CHECK(code_of([&] { diversity(points_1d({0, 1}), cfg); }) == ErrorCode::ValidationError);
}

TEST_CASE("percentile interpolates") {
    CHECK(percentile({1, 2, 3, 4}, 50) == doctest::Approx(2.5));
    CHECK(percentile({7}, 95) == 7);
    CHECK(percentile({0, 10}, 95) == doctest::Approx(9.5));
}

TEST_CASE("embedding") {
    auto ps = embed({"Apple rose sharply.", "Apple rose sharply.", "Google fell in 2008."});
    REQUIRE(ps.size() == 3);
    CHECK(ps.dim() == 256);
    CHECK(ps.points[0] == ps.points[1]);
    for (const auto& p : ps.points) CHECK(cosine(p, p) == doctest::Approx(1.0));

    // disjoint vocabularies land in disjoint buckets unless they collide
    auto q = embed({"alpha beta gamma", "delta epsilon zeta"});
    CHECK(std::abs(cosine(q.points[0], q.points[1])) < 0.05);
    CHECK(embed({"alpha beta gamma", "delta epsilon zeta"}).points == q.points);

    CHECK(code_of([] { embed({}); }) == ErrorCode::EmptyInput);
    auto ext = embed_external({{3, 4}, {0, 2}});
    CHECK(ext.points[0][0] == doctest::Approx(0.6));
    CHECK(ext.points[1][1] == doctest::Approx(1.0));
}

TEST_CASE("semantic richness") {
    using L = Level;
    CHECK(semantic_richness(doc_with_levels({L::L1, L::L1, L::L2, L::L2, L::L3, L::L3, L::L2, L::L3})) == 0.75);
    CHECK(semantic_richness(doc_with_levels({L::L1, L::L1})) == 0.0);
    CHECK(semantic_richness(doc_with_levels({L::L3, L::L3, L::L3})) == 1.0);
    CHECK(code_of([] { semantic_richness(SummaryDoc{}); }) == ErrorCode::EmptyDoc);
}

TEST_CASE("hallucination rate") {
    CHECK(hallucination_rate(3, 10) == 0.3);
    CHECK(hallucination_rate(12, 10) == 1.2);
    CHECK(hallucination_rate(0, 10) == 0.0);
    CHECK(code_of([] { hallucination_rate(1, 0); }) == ErrorCode::ZeroSentences);
    std::vector<HallucinationAnnotation> a(4);
    CHECK(hallucination_rate(a, 8) == 0.5);
}

TEST_CASE("hallucination type names") {
    CHECK(all_hallucination_types().size() == 10);
    for (auto t : all_hallucination_types()) CHECK(hallucination_type_from_string(to_string(t)) == t);
    CHECK_FALSE(hallucination_type_from_string("Typo").has_value());
}
