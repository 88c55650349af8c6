#include <doctest.h>

#include <random>

#include "chartinsight/backend.hpp"
#include "chartinsight/error.hpp"
#include "chartinsight/oracles.hpp"
#include "chartinsight/sumdoc.hpp"
#include "support/fixtures.hpp"

using namespace chartinsight;
using nlohmann::json;

namespace {

const ChartFacts& stock_facts() {
    static const ChartFacts f = analyze(fixtures::stocks().data);
    return f;
}

const ChartFacts& co2_facts() {
    static const ChartFacts f = analyze(fixtures::co2().data);
    return f;
}

std::vector<Claim> bind(const std::string& sentence, const ChartFacts& f) {
    return claims_from_json(extract_claims_rule_based(sentence, f.data.dimension_names()), f, 0);
}

Claim one(const std::string& sentence, const ChartFacts& f, ClaimKind kind) {
    for (auto& c : bind(sentence, f))
        if (c.kind() == kind) return c;
    FAIL("no claim of the requested kind in: " << sentence);
    return {};
}

Claim make(ClaimBody body) {
    Claim c;
    c.body = std::move(body);
    return c;
}

IndexRange all(const ChartFacts& f) { return f.data.full_range(); }

}  // namespace

TEST_CASE("extremum: the Fig. 3 maximum correction") {
    const auto& f = stock_facts();
    auto v = verify(make(ExtremumClaim{Extreme::Max, 1.48, "Apple", all(f), std::nullopt}), f);
    CHECK(v.status == VerdictStatus::Fail);
    REQUIRE(v.computed);
    CHECK(*v.computed == doctest::Approx(3.38));

    auto ok = verify(one("Apple reached its maximum of 3.38 in Nov 2007.", f, ClaimKind::Extremum), f);
    CHECK(ok.status == VerdictStatus::Pass);
    CHECK(ok.tolerance_used == doctest::Approx(kExtremumTolerance));

    auto wrong_time = verify(one("Apple reached its maximum of 3.38 in 2003.", f, ClaimKind::Extremum), f);
    CHECK(wrong_time.status == VerdictStatus::Fail);

    auto min = verify(one("Apple bottomed out at 0.3 in Oct 2002.", f, ClaimKind::Extremum), f);
    CHECK(min.status == VerdictStatus::Pass);
}

TEST_CASE("extremum on an empty window raises WindowEmpty") {
    auto d = fixtures::yearly({{"a", {1, 2, 3, 4}}, {"b", {1, 2, 3, 4}}});
    d.dimensions["a"][1].reset();
    d.dimensions["a"][2].reset();
    auto f = analyze(d);
    try {
        verify_extremum(make(ExtremumClaim{Extreme::Max, 2, "a", {1, 2}, std::nullopt}), f);
        FAIL("expected WindowEmpty");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::WindowEmpty);
    }
    CHECK(verify(make(ExtremumClaim{Extreme::Max, 2, "a", {1, 2}, std::nullopt}), f).status ==
          VerdictStatus::Unverifiable);
}

TEST_CASE("numeric: mean against direct computation") {
    auto d = fixtures::yearly("v", {10, 12, 14, 14});
    auto f = analyze(d);
    auto bad = verify(make(NumericClaim{Statistic::Mean, 10.0, "v", all(f)}), f);
    CHECK(bad.status == VerdictStatus::Fail);
    CHECK(*bad.computed == doctest::Approx(12.5));
    CHECK(verify(make(NumericClaim{Statistic::Mean, 12.5, "v", all(f)}), f).status == VerdictStatus::Pass);
    // 1% relative tolerance.
    CHECK(verify(make(NumericClaim{Statistic::Mean, 12.6, "v", all(f)}), f).status == VerdictStatus::Pass);
    CHECK(verify(make(NumericClaim{Statistic::Mean, 12.7, "v", all(f)}), f).status == VerdictStatus::Fail);
}

TEST_CASE("numeric: average stock price mismatch") {
    const auto& f = stock_facts();
    double sum = 0;
    int n = 0;
    for (const auto& v : f.data.series("Apple")) {
        sum += *v;
        ++n;
    }
    const double truth = sum / n;
    auto v = verify(one("Apple's average price was 2.9 from 2000 to 2010.", f, ClaimKind::Numeric), f);
    CHECK(v.status == VerdictStatus::Fail);
    CHECK(*v.computed == doctest::Approx(truth));
}

TEST_CASE("numeric: growth and value_at") {
    const auto& f = stock_facts();
    auto g = verify(one("Google fell by 75% from Jan 2008 to Dec 2008.", f, ClaimKind::Numeric), f);
    CHECK(g.status == VerdictStatus::Pass);
    CHECK(*g.computed == doctest::Approx((1.6 - 6.4) / 6.4));

    auto v = verify(one("Apple rose from 0.3 in Oct 2002 to 2.4 in Jan 2006.", f, ClaimKind::Numeric), f);
    CHECK(v.status == VerdictStatus::Pass);
    auto wrong = verify(make(NumericClaim{Statistic::ValueAt, 0.5, "Apple", resolve_window(f, "Oct 2002")}), f);
    CHECK(wrong.status == VerdictStatus::Fail);
    CHECK(*wrong.computed == doctest::Approx(0.3));
}

TEST_CASE("trend direction") {
    auto up = fixtures::yearly("v", {1, 2, 3, 4, 5, 6});
    auto fu = analyze(up);
    CHECK(verify(make(TrendClaim{TrendClass::Rising, "v", all(fu), false}), fu).status == VerdictStatus::Pass);
    auto down = fixtures::yearly("v", {6, 7, 5, 4, 2, 1});
    auto fd = analyze(down);
    auto v = verify(make(TrendClaim{TrendClass::Rising, "v", all(fd), false}), fd);
    CHECK(v.status == VerdictStatus::Fail);
    CHECK(v.computed_text == "falling");

    std::vector<double> wild;
    for (int i = 0; i < 40; ++i) wild.push_back(i % 2 ? 10.0 : -10.0);
    auto fw = analyze(fixtures::yearly("v", wild));
    auto st = verify(make(TrendClaim{TrendClass::Stable, "v", all(fw), false}), fw);
    CHECK(st.status == VerdictStatus::Fail);
    REQUIRE(st.computed_text);
    CHECK(*st.computed_text != "stable");
}

TEST_CASE("anchored trends measure from the preceding sample") {
    const auto& f = stock_facts();
    // Jan 2008 alone is one sample; anchored it is the Dec 2007 -> Jan 2008 rebound.
    auto v = verify(one("Apple rebounded in early 2008.", f, ClaimKind::TrendDirection), f);
    CHECK(v.status == VerdictStatus::Pass);
    CHECK(verify(one("Apple rose in 2007.", f, ClaimKind::TrendDirection), f).status == VerdictStatus::Pass);
    CHECK(verify(one("Apple fell in 2008.", f, ClaimKind::TrendDirection), f).status == VerdictStatus::Pass);
    CHECK(verify(one("Apple rose in 2008.", f, ClaimKind::TrendDirection), f).status == VerdictStatus::Fail);
}

TEST_CASE("range: aligned, overlong and absent") {
    auto d = fixtures::yearly("v", {5, 4, 3, 4, 5, 6, 7, 6, 5, 4, 3});
    auto f = analyze(d);
    // Rise 2002-2006, fall 2006-2010.
    auto ok = verify(one("v rose from 2002 to 2006.", f, ClaimKind::Range), f);
    CHECK(ok.status == VerdictStatus::Pass);
    auto over = verify(one("v rose from 2002 to 2009.", f, ClaimKind::Range), f);
    CHECK(over.status == VerdictStatus::Fail);
    REQUIRE(over.computed_window);
    CHECK(over.computed_window->first == 2);
    CHECK(over.computed_window->last == 6);

    auto mono = analyze(fixtures::yearly("v", {1, 2, 3, 4, 5}));
    auto absent = make(RangeClaim{TrendClass::Falling, "v", {1, 1}, {3, 3}});
    CHECK_THROWS_AS(verify_range(absent, mono), Error);
    try {
        verify_range(absent, mono);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::TrendAbsent);
    }
    CHECK(verify(absent, mono).status == VerdictStatus::Fail);
}

TEST_CASE("range: sub-patch moves between prominent extrema") {
    const auto& f = co2_facts();
    auto v = verify(one("United States rose sharply from 0.45 in 1932 to 1.25 in 1944.", f, ClaimKind::Range), f);
    CHECK(v.status == VerdictStatus::Pass);
}

TEST_CASE("multi-dimensional relations and trends") {
    const auto& f = stock_facts();
    auto above = verify(one("Google exceeded Apple through 2008.", f, ClaimKind::MultiTrend), f);
    CHECK(above.status == VerdictStatus::Pass);
    auto whole = verify(one("Google stayed above Apple throughout the period.", f, ClaimKind::MultiTrend), f);
    CHECK(whole.status == VerdictStatus::Fail);
    auto cross = verify(one("Apple overtook Google in Jan 2009.", f, ClaimKind::MultiTrend), f);
    CHECK(cross.status == VerdictStatus::Pass);

    auto contrast = verify(make(MultiClaim{MultiAssertion::ContrastTrend, "Apple", "Google",
                                           resolve_window(f, "2007"), false, {}, std::nullopt}),
                           f);
    CHECK(contrast.status == VerdictStatus::Fail);
    CHECK(contrast.computed_text == "same_trend");
    auto same = verify(one("Both companies trended upward together in 2007.", f, ClaimKind::MultiTrend), f);
    CHECK(same.status == VerdictStatus::Pass);
}

TEST_CASE("attribute mixing is unverifiable") {
    const auto& f = co2_facts();
    // The US peak is in 2007; the UK peak is in 1955.
    auto v = verify(one("United Kingdom emissions were highest in 2007.", f, ClaimKind::MultiTrend), f);
    CHECK(v.status == VerdictStatus::Unverifiable);
    CHECK(v.explanation.find("United States") != std::string::npos);
    auto ok = verify(one("United Kingdom emissions were highest in 1955.", f, ClaimKind::MultiTrend), f);
    CHECK(ok.status == VerdictStatus::Pass);
}

TEST_CASE("significance of change") {
    const auto& f = co2_facts();
    auto flat = analyze(fixtures::yearly({{"a", {1, 1, 1, 1}}, {"b", {0, 5, 0, 5}}}));
    auto z = significance_of_change(flat, "a", all(flat));
    CHECK(z.ratio == 0.0);
    CHECK_FALSE(z.significant);

    // The window holding the chart's largest patch has ratio 1.
    double best = 0;
    IndexRange where;
    for (const auto& [dim, ps] : f.patches)
        for (const auto& p : ps)
            if (p.stats.range > best) {
                best = p.stats.range;
                where = p.range();
            }
    bool found = false;
    for (const auto& [dim, ps] : f.patches)
        for (const auto& p : ps)
            if (p.stats.range == best) {
                auto s = significance_of_change(f, dim, where);
                CHECK(s.ratio == doctest::Approx(1.0));
                CHECK(s.significant);
                found = true;
            }
    CHECK(found);

    auto uk = verify(one("United Kingdom emissions fell sharply after 1955.", f, ClaimKind::Significance), f);
    CHECK(uk.status == VerdictStatus::Fail);
    CHECK(*uk.computed < 0.25);
    auto us = verify(one("United States emissions fell sharply after 2007.", f, ClaimKind::Significance), f);
    CHECK(us.status == VerdictStatus::Pass);
}

TEST_CASE("significance is invariant under positive scaling") {
    auto base = fixtures::co2().data;
    auto scaled = base;
    for (auto& [_, s] : scaled.dimensions)
        for (auto& v : s)
            if (v) *v *= 7.5;
    auto f0 = analyze(base), f1 = analyze(scaled);
    for (const auto& dim : base.dimension_names())
        for (const auto& w : {IndexRange{0, 100}, IndexRange{150, 270}, IndexRange{200, 205}}) {
            auto a = significance_of_change(f0, dim, w), b = significance_of_change(f1, dim, w);
            CHECK(a.ratio == doctest::Approx(b.ratio));
            CHECK(a.significant == b.significant);
        }
}

TEST_CASE("soundness: claims built from computed statistics pass") {
    const auto& f = stock_facts();
    for (const auto& dim : f.data.dimension_names()) {
        const auto& s = f.data.series(dim);
        for (const auto& p : f.patches.at(dim)) {
            auto w = p.trend_window();
            if (p.stats.direction != Direction::Flat) {
                auto t = p.stats.direction == Direction::Up ? TrendClass::Rising : TrendClass::Falling;
                CHECK(verify(make(TrendClaim{t, dim, w, false}), f).status == VerdictStatus::Pass);
            }
            double mx = *s[p.start_index], mn = mx, sum = 0;
            for (std::size_t i = p.start_index; i <= p.end_index; ++i) {
                mx = std::max(mx, *s[i]);
                mn = std::min(mn, *s[i]);
                sum += *s[i];
            }
            CHECK(verify(make(ExtremumClaim{Extreme::Max, mx, dim, p.range(), std::nullopt}), f).status ==
                  VerdictStatus::Pass);
            CHECK(verify(make(ExtremumClaim{Extreme::Min, mn, dim, p.range(), std::nullopt}), f).status ==
                  VerdictStatus::Pass);
            CHECK(verify(make(NumericClaim{Statistic::Mean, sum / double(p.range().size()), dim, p.range()}), f)
                      .status == VerdictStatus::Pass);
            auto sig = significance_of_change(f, dim, w);
            CHECK(verify(make(SignificanceClaim{dim, w, sig.significant}), f).status == VerdictStatus::Pass);
        }
    }
}

TEST_CASE("seeded corruption beyond twice the tolerance always fails") {
    const auto& f = stock_facts();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> factor(2.0001, 20.0);
    std::bernoulli_distribution sign;
    for (int trial = 0; trial < 200; ++trial) {
        for (const auto& dim : f.data.dimension_names()) {
            const auto& s = f.data.series(dim);
            IndexRange w{static_cast<std::size_t>(trial % 60), static_cast<std::size_t>(60 + trial % 70)};
            double mx = *s[w.first], sum = 0;
            for (std::size_t i = w.first; i <= w.last; ++i) {
                mx = std::max(mx, *s[i]);
                sum += *s[i];
            }
            const double mean = sum / double(w.size());
            const double bump = (sign(rng) ? 1 : -1) * factor(rng);
            auto ve = verify(make(ExtremumClaim{Extreme::Max, mx * (1 + bump * kExtremumTolerance), dim, w, std::nullopt}), f);
            CHECK(ve.status == VerdictStatus::Fail);
            CHECK(*ve.computed == doctest::Approx(mx));
            auto vm = verify(make(NumericClaim{Statistic::Mean, mean * (1 + bump * kMeanTolerance), dim, w}), f);
            CHECK(vm.status == VerdictStatus::Fail);
            CHECK(*vm.computed == doctest::Approx(mean));
        }
    }
}

TEST_CASE("oracles are deterministic") {
    const auto& f = stock_facts();
    for (const auto& c : bind("Apple rose from 0.3 in Oct 2002 to 2.4 in Jan 2006 and peaked at 3.38 in Nov 2007.", f)) {
        auto a = to_json(verify(c, f)), b = to_json(verify(c, f));
        CHECK(a == b);
    }
}

TEST_CASE("extract_claims through the mock backend") {
    const auto& f = stock_facts();
    MockBackend mock;
    auto refs = attach_data_refs("Apple peaked at 3.38 in 2007.", f);
    auto claims = extract_claims("Apple peaked at 3.38 in 2007.", refs, mock, f, 4);
    REQUIRE(claims.size() == 1);
    const auto& e = std::get<ExtremumClaim>(claims[0].body);
    CHECK(e.which == Extreme::Max);
    CHECK(e.value == doctest::Approx(3.38));
    CHECK(e.dimension == "Apple");
    REQUIRE(e.time);
    CHECK(f.data.display_label(e.time->first) == "Jan 2007");
    CHECK(f.data.display_label(e.time->last) == "Dec 2007");
    CHECK(claims[0].sentence == 4);
    CHECK(extract_claims("The chart shows stock prices.", {}, mock, f).empty());
}
