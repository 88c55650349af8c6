#include <doctest.h>

#include <random>

#include "chartinsight/error.hpp"
#include "chartinsight/relations.hpp"
#include "chartinsight/temporal.hpp"
#include "support/brute.hpp"
#include "support/fixtures.hpp"

using namespace chartinsight;

namespace {

std::vector<double> line(double a, double b, int n) {
    std::vector<double> v;
    for (int t = 0; t < n; ++t) v.push_back(a * t + b);
    return v;
}

IndexRange all(const TimeSeriesDataset& d) { return d.full_range(); }

IndexRange window_of(const TimeSeriesDataset& d, const std::string& first, const std::string& last) {
    IndexRange w{0, 0};
    for (std::size_t i = 0; i < d.timestamps.size(); ++i) {
        if (d.display_label(i) == first) w.first = i;
        if (d.display_label(i) == last) w.last = i;
    }
    return w;
}

}  // namespace

TEST_CASE("detect_intersections basic cases") {
    auto parallel = fixtures::yearly({{"a", line(1, 1, 11)}, {"b", line(1, 0, 11)}});
    CHECK(detect_intersections(parallel, "a", "b", all(parallel)).empty());

    auto cross = fixtures::yearly({{"a", line(1, 0, 11)}, {"b", line(-1, 10, 11)}});
    auto cs = detect_intersections(cross, "a", "b", all(cross));
    REQUIRE(cs.size() == 1);
    CHECK(cs[0].position == 5);
    CHECK(cs[0].at_sample);
    CHECK(cs[0].direction == CrossDirection::AOvertakesB);

    auto odd = fixtures::yearly({{"a", line(1, 0, 10)}, {"b", line(-1, 9, 10)}});
    auto c2 = detect_intersections(odd, "a", "b", all(odd));
    REQUIRE(c2.size() == 1);
    CHECK(c2[0].position == doctest::Approx(4.5));
    CHECK_FALSE(c2[0].at_sample);
}

TEST_CASE("touches are not crossings") {
    auto d = fixtures::yearly({{"a", {2, 1, 2, 1}}, {"b", {1, 1, 1, 0}}});
    CHECK(detect_intersections(d, "a", "b", all(d)).empty());
}

TEST_CASE("crossings match a brute-force scan") {
    std::mt19937_64 rng(42);
    std::uniform_int_distribution<int> small(-3, 3);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> a(30), b(30);
        for (auto& x : a) x = small(rng);
        for (auto& x : b) x = small(rng);
        auto ds = fixtures::yearly({{"a", a}, {"b", b}});
        auto cs = detect_intersections(ds, "a", "b", all(ds));
        auto expected = brute::crossing_times(a, b);
        REQUIRE(cs.size() == expected.size());
        for (std::size_t i = 0; i < cs.size(); ++i) CHECK(cs[i].position == doctest::Approx(expected[i]));

        // Parity against the endpoint signs.
        const double d0 = a.front() - b.front(), d1 = a.back() - b.back();
        if (d0 != 0 && d1 != 0) CHECK((cs.size() % 2 == 0) == ((d0 > 0) == (d1 > 0)));
    }
}

TEST_CASE("classify_relation") {
    auto chart = fixtures::stocks();
    auto w = window_of(chart.data, "Jan 2000", "Dec 2008");
    auto r = classify_relation(chart.data, "Google", "Apple", w);
    CHECK(r.kind == RelationKind::Same);
    CHECK(r.above == "Google");

    auto full = classify_relation(chart.data, "Google", "Apple", all(chart.data));
    CHECK(full.kind == RelationKind::Contrast);
    CHECK(full.crossings.size() == 1);

    auto same = fixtures::yearly({{"a", {1, 2, 3}}, {"b", {1, 2, 3}}});
    CHECK_THROWS_AS(classify_relation(same, "a", "b", all(same)), Error);
    try {
        classify_relation(same, "a", "b", all(same));
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::TieThroughout);
    }
}

TEST_CASE("relations are antisymmetric and shift invariant") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        auto a = fixtures::random_walk(seed, 40), b = fixtures::random_walk(seed + 1000, 40);
        auto ds = fixtures::yearly({{"a", a}, {"b", b}});
        auto ab = classify_relation(ds, "a", "b", all(ds));
        auto ba = classify_relation(ds, "b", "a", all(ds));
        CHECK(ab.kind == ba.kind);
        CHECK(ab.above == ba.above);
        REQUIRE(ab.crossings.size() == ba.crossings.size());
        for (std::size_t i = 0; i < ab.crossings.size(); ++i) {
            CHECK(ab.crossings[i].position == doctest::Approx(ba.crossings[i].position));
            CHECK(ab.crossings[i].direction != ba.crossings[i].direction);
        }
        for (auto& x : a) x = 3 * x + 100;
        for (auto& x : b) x = 3 * x + 100;
        auto shifted = classify_relation(fixtures::yearly({{"a", a}, {"b", b}}), "a", "b", all(ds));
        CHECK(shifted.kind == ab.kind);
        CHECK(shifted.crossings.size() == ab.crossings.size());
    }
}

TEST_CASE("trend pairs") {
    auto ds = fixtures::yearly({{"a", {1, 2, 3}}, {"b", {2, 3, 5}}, {"c", {3, 2, 1}}});
    CHECK(classify_trend_pair(ds, "a", "b", all(ds)).kind == TrendPairKind::SameTrend);
    CHECK(classify_trend_pair(ds, "a", "c", all(ds)).kind == TrendPairKind::ContrastTrend);
    auto gap = classify_trend_pair(ds, "a", "b", all(ds));
    REQUIRE(gap.gap);
    CHECK(*gap.gap == GapDirection::Widening);

    auto chart = fixtures::stocks();
    auto w2007 = window_of(chart.data, "Jul 2006", "Nov 2007");
    auto w2008 = window_of(chart.data, "Jan 2008", "Dec 2008");
    auto up = classify_trend_pair(chart.data, "Google", "Apple", w2007);
    auto down = classify_trend_pair(chart.data, "Google", "Apple", w2008);
    CHECK(up.kind == TrendPairKind::SameTrend);
    CHECK(up.direction_a == Direction::Up);
    CHECK(down.kind == TrendPairKind::SameTrend);
    CHECK(down.direction_a == Direction::Down);
}

TEST_CASE("rank_over_periods") {
    auto one = fixtures::yearly("a", {1, 2});
    CHECK(rank_over_periods(one, {all(one)})[0].order.size() == 1);

    auto two = fixtures::yearly({{"A", {5, 5, 5}}, {"B", {3, 3, 3}}});
    auto r = rank_over_periods(two, {all(two)});
    CHECK(r[0].order[0].dimension == "A");
    CHECK(r[0].order[1].dimension == "B");
    CHECK_FALSE(r[0].tie);

    auto tie = fixtures::yearly({{"B", {1, 1}}, {"A", {1, 1}}});
    auto t = rank_over_periods(tie, {all(tie)});
    CHECK(t[0].tie);
    CHECK(t[0].order[0].dimension == "A");

    std::vector<double> x{1, 5, 2, 8, 3, 3}, y{4, 4, 4, 0, 0, 0}, z{2, 9, 1, 1, 1, 7};
    auto three = fixtures::yearly({{"x", x}, {"y", y}, {"z", z}});
    auto periods = std::vector<IndexRange>{{0, 2}, {3, 5}};
    auto rk = rank_over_periods(three, periods);
    for (std::size_t p = 0; p < 2; ++p) {
        std::vector<std::pair<double, std::string>> direct;
        for (auto [name, v] : {std::pair{"x", x}, {"y", y}, {"z", z}}) {
            double s = 0;
            for (std::size_t i = periods[p].first; i <= periods[p].last; ++i) s += v[i];
            direct.push_back({-s / 3, name});
        }
        std::sort(direct.begin(), direct.end());
        for (std::size_t i = 0; i < 3; ++i) CHECK(rk[p].order[i].dimension == direct[i].second);
    }
    CHECK_THROWS_AS(rank_over_periods(three, {{0, 10}}), Error);
}

TEST_CASE("multi_insight on the stock fixture") {
    auto chart = fixtures::stocks();
    auto patches = chart_patches(chart.data, {});
    auto rec = multi_insight(patches, chart.data, all(chart.data));
    REQUIRE(rec.pairs.size() == 1);
    const auto& p = rec.pairs[0];
    REQUIRE(p.dominance.size() == 2);
    CHECK(p.dominance[0].above == "Google");
    CHECK(chart.data.display_label(p.dominance[0].window.first) == "Jan 2000");
    CHECK(chart.data.display_label(p.dominance[0].window.last) == "Dec 2008");

    bool same_2007 = false, same_2008 = false;
    for (const auto& tp : p.trend_pairs) {
        if (tp.kind != TrendPairKind::SameTrend) continue;
        if (chart.data.display_label(tp.window.last) == "Nov 2007" && tp.direction_a == Direction::Up) same_2007 = true;
        if (chart.data.display_label(tp.window.last) == "Dec 2008" && tp.direction_a == Direction::Down)
            same_2008 = true;
    }
    CHECK(same_2007);
    CHECK(same_2008);

    auto j = to_json(rec, chart.data);
    CHECK(j["pairs"][0]["relation"]["kind"] == "contrast");
}

TEST_CASE("multi_insight edge cases") {
    auto one = fixtures::yearly("a", {1, 2, 3});
    CHECK_THROWS_AS(multi_insight({}, one, all(one)), Error);

    auto flat = fixtures::yearly({{"a", {2, 2, 2}}, {"b", {2, 2, 2}}});
    auto rec = multi_insight(chart_patches(flat, {}), flat, all(flat));
    CHECK(rec.pairs[0].tie_throughout);

    std::vector<double> x{1, 4, 2, 6, 3}, y{2, 2, 5, 1, 4}, z{0, 1, 2, 3, 4};
    auto three = fixtures::yearly({{"x", x}, {"y", y}, {"z", z}});
    auto r3 = multi_insight(chart_patches(three, {}), three, all(three));
    REQUIRE(r3.pairs.size() == 3);
    for (const auto& p : r3.pairs) {
        auto direct = classify_relation(three, p.dim_a, p.dim_b, all(three));
        CHECK(direct.kind == p.relation.kind);
        CHECK(direct.crossings.size() == p.relation.crossings.size());
    }
}

TEST_CASE("temporal phrases") {
    auto chart = fixtures::stocks();
    auto patches = chart_patches(chart.data, {});
    auto resolve = [&](const char* s) { return align_temporal_expression(s, patches, chart.data); };
    auto label = [&](IndexRange w) {
        return chart.data.display_label(w.first) + "|" + chart.data.display_label(w.last);
    };
    CHECK(label(resolve("2007")) == "Jan 2007|Dec 2007");
    CHECK(label(resolve("early 2008")) == "Jan 2008|Jan 2008");
    CHECK(label(resolve("March 2003")) == "Mar 2003|Mar 2003");
    CHECK(label(resolve("Q2 2004")) == "Apr 2004|Jun 2004");
    CHECK(label(resolve("from 2000 to 2008")) == "Jan 2000|Dec 2008");
    CHECK(label(resolve("2007-2008")) == "Jan 2007|Dec 2008");
    CHECK(label(resolve("through 2002")) == "Jan 2000|Dec 2002");
    CHECK(label(resolve("after 2008")) == "Jan 2009|Dec 2010");
    CHECK(label(resolve("since 2009")) == "Jan 2009|Dec 2010");
    CHECK_THROWS_AS(resolve("the Jurassic period"), Error);
    CHECK_THROWS_AS(resolve("1990"), Error);
}

TEST_CASE("coarse phrases land on patch boundaries") {
    auto chart = fixtures::stocks();
    auto patches = chart_patches(chart.data, {});
    auto bounds = patch_boundaries(patches, chart.data.timestamps.size());
    for (int y = 2000; y <= 2010; ++y)
        for (const char* part : {"early", "mid", "late"}) {
            auto phrase = std::string(part) + " " + std::to_string(y);
            auto w = align_temporal_expression(phrase, patches, chart.data);
            CHECK(std::binary_search(bounds.begin(), bounds.end(), w.first));
            CHECK(std::binary_search(bounds.begin(), bounds.end(), w.last));
            CHECK(w.last < chart.data.timestamps.size());
        }
}

TEST_CASE("find_time_phrases") {
    auto m = find_time_phrases("Google exceeded Apple from 2000 to 2008, and both rebounded in early 2008.");
    REQUIRE(m.size() == 2);
    CHECK(m[0].text == "from 2000 to 2008");
    CHECK(m[1].text == "early 2008");
    CHECK(find_time_phrases("Apple peaked at 3.38 in Nov 2007.")[0].text == "Nov 2007");
    CHECK(find_time_phrases("This is a line chart.").empty());
    CHECK(find_time_phrases("It fell after 1955.")[0].text == "after 1955");
}

TEST_CASE("ordinal axes resolve their labels") {
    auto ds = parse_data_table("stage,v\nalpha,1\nbeta,3\ngamma,2\n", TableFormat::Csv);
    CHECK(ds.x_type == XType::Ordinal);
    auto w = align_temporal_expression("from alpha to beta", {}, ds);
    CHECK(w.first == 0);
    CHECK(w.last == 1);
    CHECK_THROWS_AS(align_temporal_expression("delta", {}, ds), Error);
}
