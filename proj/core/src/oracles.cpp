#include "chartinsight/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "chartinsight/backend.hpp"
#include "chartinsight/error.hpp"
#include "chartinsight/relations.hpp"
#include "chartinsight/sumdoc.hpp"
#include "chartinsight/temporal.hpp"

namespace chartinsight {

using nlohmann::json;

std::string_view to_string(VerdictStatus s) noexcept {
    switch (s) {
        case VerdictStatus::Pass: return "pass";
        case VerdictStatus::Fail: return "fail";
        case VerdictStatus::Unverifiable: return "unverifiable";
    }
    return "pass";
}

namespace {

bool within(double computed, double claimed, double tol) {
    if (claimed == 0) return std::fabs(computed) <= 1e-12;
    return std::fabs(computed - claimed) <= tol * std::fabs(claimed);
}

Verdict unverifiable(std::string why) {
    Verdict v;
    v.status = VerdictStatus::Unverifiable;
    v.explanation = std::move(why);
    return v;
}

IndexRange anchor(IndexRange w) {
    if (w.first > 0) --w.first;
    return w;
}

const std::vector<Patch>& patches_of(const ChartFacts& facts, const std::string& dim) {
    auto it = facts.patches.find(dim);
    if (it == facts.patches.end()) throw Error(ErrorCode::UnknownDimension, "unknown dimension '" + dim + "'");
    return it->second;
}

const Patch* patch_containing(const ChartFacts& facts, const std::string& dim, std::size_t index) {
    for (const auto& p : patches_of(facts, dim))
        if (p.range().contains(index)) return &p;
    return nullptr;
}

std::string label(const ChartFacts& facts, IndexRange w) { return window_label(facts.data, w); }

std::optional<std::size_t> arg_extreme(const PresentPoints& pts, Extreme which) {
    if (pts.empty()) return std::nullopt;
    std::size_t best = 0;
    for (std::size_t i = 1; i < pts.value.size(); ++i) {
        if (which == Extreme::Max ? pts.value[i] > pts.value[best] : pts.value[i] < pts.value[best]) best = i;
    }
    return best;
}

TrendContext context_for(const ChartFacts& facts, const std::string& dim) {
    auto pts = present_points(facts.data.series(dim), facts.data.full_range());
    TrendContext ctx = trend_context(pts.value);
    ctx.reference_patch_range = facts.max_patch_range;
    return ctx;
}

bool trend_matches(TrendClass claimed, TrendClass actual) {
    switch (claimed) {
        case TrendClass::Change:
            return actual == TrendClass::Change || actual == TrendClass::Oscillating || actual == TrendClass::Cyclic;
        case TrendClass::Oscillating:
            return actual == TrendClass::Oscillating || actual == TrendClass::Cyclic;
        default:
            return claimed == actual;
    }
}

std::string fmt_ratio(double r) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", r);
    return buf;
}

}  // namespace

Significance significance_of_change(const ChartFacts& facts, std::string_view dimension, IndexRange window) {
    auto pts = present_points(facts.data.series(dimension), window);
    if (pts.empty()) throw Error(ErrorCode::WindowEmpty, "no samples of '" + std::string(dimension) + "' in window");
    auto [lo, hi] = std::minmax_element(pts.value.begin(), pts.value.end());
    Significance s;
    s.ratio = facts.max_patch_range > 0 ? (*hi - *lo) / facts.max_patch_range : 0.0;
    s.significant = s.ratio >= facts.cfg.significance_ratio;
    return s;
}

Verdict verify_extremum(const Claim& claim, const ChartFacts& facts) {
    const auto& c = std::get<ExtremumClaim>(claim.body);
    auto pts = present_points(facts.data.series(c.dimension), c.window);
    auto at = arg_extreme(pts, c.which);
    if (!at) throw Error(ErrorCode::WindowEmpty, "no samples of " + c.dimension + " in " + label(facts, c.window));
    const std::size_t idx = pts.index[*at];
    const double actual = pts.value[*at];

    Verdict v;
    v.computed = actual;
    v.tolerance_used = kExtremumTolerance;
    v.computed_window = IndexRange{idx, idx};
    v.computed_text = facts.data.display_label(idx);
    const char* what = c.which == Extreme::Max ? "maximum" : "minimum";
    if (!within(actual, c.value, kExtremumTolerance)) {
        v.status = VerdictStatus::Fail;
        v.explanation = std::string("the ") + what + " of " + c.dimension + " is " + format_number(actual) + " (" +
                        facts.data.display_label(idx) + "), not " + format_number(c.value);
        return v;
    }
    if (c.time) {
        const Patch* p = patch_containing(facts, c.dimension, idx);
        IndexRange around = p ? p->range() : IndexRange{idx, idx};
        if (!c.time->overlaps(around) && !c.time->contains(idx)) {
            v.status = VerdictStatus::Fail;
            v.explanation = std::string("the ") + what + " of " + c.dimension + " occurs in " +
                            facts.data.display_label(idx) + ", not " + label(facts, *c.time);
            return v;
        }
    }
    v.status = VerdictStatus::Pass;
    v.explanation = std::string("the ") + what + " of " + c.dimension + " is " + format_number(actual);
    return v;
}

Verdict verify_numeric(const Claim& claim, const ChartFacts& facts) {
    const auto& c = std::get<NumericClaim>(claim.body);
    auto pts = present_points(facts.data.series(c.dimension), c.window);
    if (pts.empty()) throw Error(ErrorCode::WindowEmpty, "no samples of " + c.dimension + " in " + label(facts, c.window));

    Verdict v;
    v.computed_window = IndexRange{pts.index.front(), pts.index.back()};
    switch (c.statistic) {
        case Statistic::Mean: {
            const double m = mean_of(pts.value);
            v.computed = m;
            v.tolerance_used = kMeanTolerance;
            v.status = within(m, c.value, kMeanTolerance) ? VerdictStatus::Pass : VerdictStatus::Fail;
            v.explanation = "mean of " + c.dimension + " over " + label(facts, c.window) + " is " + format_number(m);
            break;
        }
        case Statistic::GrowthRate: {
            if (pts.value.size() < 2) return unverifiable("growth needs two samples");
            const double first = pts.value.front(), last = pts.value.back();
            if (first == 0) return unverifiable("growth from zero is undefined");
            const double g = (last - first) / std::fabs(first);
            v.computed = g;
            v.tolerance_used = kGrowthTolerance;
            v.status = within(g, c.value, kGrowthTolerance) ? VerdictStatus::Pass : VerdictStatus::Fail;
            v.explanation = "growth of " + c.dimension + " over " + label(facts, c.window) + " is " +
                            format_number(g * 100) + "%";
            break;
        }
        case Statistic::ValueAt: {
            std::size_t best = 0;
            for (std::size_t i = 0; i < pts.value.size(); ++i)
                if (std::fabs(pts.value[i] - c.value) < std::fabs(pts.value[best] - c.value)) best = i;
            v.computed = pts.value[best];
            v.computed_window = IndexRange{pts.index[best], pts.index[best]};
            v.tolerance_used = kValueAtTolerance;
            v.status = within(pts.value[best], c.value, kValueAtTolerance) ? VerdictStatus::Pass : VerdictStatus::Fail;
            v.explanation = c.dimension + " is " + format_number(pts.value[best]) + " in " +
                            facts.data.display_label(pts.index[best]);
            break;
        }
    }
    return v;
}

Verdict verify_trend_direction(const Claim& claim, const ChartFacts& facts) {
    const auto& c = std::get<TrendClaim>(claim.body);
    const IndexRange w = c.anchored ? anchor(c.window) : c.window;
    const auto& s = facts.data.series(c.dimension);
    auto pts = present_points(s, w);
    if (pts.empty()) throw Error(ErrorCode::WindowEmpty, "no samples of " + c.dimension + " in " + label(facts, w));
    if (pts.value.size() < 2) return unverifiable("fewer than two samples in " + label(facts, w));

    Verdict v;
    v.computed_window = w;
    const double net = pts.value.back() - pts.value.front();
    if (c.trend == TrendClass::Rising || c.trend == TrendClass::Falling) {
        v.computed = net;
        const bool ok = c.trend == TrendClass::Rising ? net > 0 : net < 0;
        v.computed_text = net > 0 ? "rising" : net < 0 ? "falling" : "stable";
        v.status = ok ? VerdictStatus::Pass : VerdictStatus::Fail;
        v.explanation = c.dimension + " changed by " + format_number(net) + " over " + label(facts, w);
        return v;
    }
    if (c.trend == TrendClass::BigChange) {
        auto sig = significance_of_change(facts, c.dimension, w);
        v.computed = sig.ratio;
        v.computed_text = sig.significant ? "big_change" : "minor change";
        v.status = sig.significant && net != 0 ? VerdictStatus::Pass : VerdictStatus::Fail;
        v.explanation = "change ratio over " + label(facts, w) + " is " + fmt_ratio(sig.ratio);
        return v;
    }
    const TrendClass actual = classify_trend(pts.value, context_for(facts, c.dimension), facts.cfg);
    v.computed_text = std::string(to_string(actual));
    v.status = trend_matches(c.trend, actual) ? VerdictStatus::Pass : VerdictStatus::Fail;
    v.explanation = c.dimension + " over " + label(facts, w) + " is " + std::string(to_string(actual));
    return v;
}

Verdict verify_range(const Claim& claim, const ChartFacts& facts) {
    const auto& c = std::get<RangeClaim>(claim.body);
    if (c.trend != TrendClass::Rising && c.trend != TrendClass::Falling)
        return unverifiable("range claims need a rising or falling trend");
    const Direction want = c.trend == TrendClass::Falling ? Direction::Down : Direction::Up;
    const IndexRange claimed{c.start.first, c.end.last};
    auto near = [](std::size_t x, IndexRange span) { return x + 1 >= span.first && x <= span.last + 1; };

    // Maximal runs of consecutive patches moving in the claimed direction,
    // at patch level and at extremum level.
    std::optional<IndexRange> best;
    std::size_t best_overlap = 0;
    bool best_aligned = false;
    for (const auto* set : {&facts.patches, &facts.fine_patches}) {
        auto it = set->find(c.dimension);
        if (it == set->end()) throw Error(ErrorCode::UnknownDimension, "unknown dimension '" + c.dimension + "'");
        const auto& ps = it->second;
        for (std::size_t i = 0; i < ps.size();) {
            if (ps[i].stats.direction != want) {
                ++i;
                continue;
            }
            std::size_t k = i;
            while (k + 1 < ps.size() && ps[k + 1].stats.direction == want) ++k;
            IndexRange run{ps[i].anchor_index, ps[k].end_index};
            std::size_t ov = 0;
            if (run.overlaps(claimed))
                ov = std::min(run.last, claimed.last) - std::max(run.first, claimed.first) + 1;
            const bool aligned = near(run.first, c.start) && near(run.last, c.end);
            if (ov > 0 && ((aligned && !best_aligned) || (aligned == best_aligned && ov > best_overlap))) {
                best_overlap = ov;
                best = run;
                best_aligned = aligned;
            }
            i = k + 1;
        }
    }
    if (!best)
        throw Error(ErrorCode::TrendAbsent, "no " + std::string(to_string(c.trend)) + " patch of " + c.dimension +
                                                " overlaps " + label(facts, claimed));

    Verdict v;
    v.computed_window = *best;
    v.computed_text = facts.data.display_label(best->first) + " to " + facts.data.display_label(best->last);
    const bool ok = best_aligned;
    v.status = ok ? VerdictStatus::Pass : VerdictStatus::Fail;
    v.explanation = c.dimension + " " + std::string(want == Direction::Up ? "rises" : "falls") + " from " +
                    facts.data.display_label(best->first) + " to " + facts.data.display_label(best->last);
    return v;
}

Verdict verify_multidim(const Claim& claim, const ChartFacts& facts) {
    const auto& c = std::get<MultiClaim>(claim.body);
    const IndexRange w = c.anchored ? anchor(c.window) : c.window;
    Verdict v;
    v.computed_window = w;
    auto pass_if = [&](bool ok, std::string why) {
        v.status = ok ? VerdictStatus::Pass : VerdictStatus::Fail;
        v.explanation = std::move(why);
        return v;
    };

    switch (c.asserted) {
        case MultiAssertion::SameRelation:
        case MultiAssertion::ContrastRelation: {
            Relation r;
            try {
                r = classify_relation(facts.data, c.dim_a, c.dim_b, w);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::TieThroughout) throw;
                v.computed_text = "tie";
                return pass_if(false, c.dim_a + " and " + c.dim_b + " are equal throughout " + label(facts, w));
            }
            v.computed = static_cast<double>(r.crossings.size());
            if (r.kind == RelationKind::Same) {
                v.computed_text = r.above + " above";
                if (c.asserted == MultiAssertion::ContrastRelation)
                    return pass_if(false, "the lines do not cross over " + label(facts, w));
                return pass_if(r.above == c.above, r.above + " stays above over " + label(facts, w));
            }
            v.computed_text = std::to_string(r.crossings.size()) + " crossing(s)";
            const std::string when = r.crossings.front().time;
            if (c.asserted == MultiAssertion::SameRelation)
                return pass_if(false, c.dim_a + " and " + c.dim_b + " cross near " + when);
            return pass_if(true, c.dim_a + " and " + c.dim_b + " cross near " + when);
        }
        case MultiAssertion::SameTrend:
        case MultiAssertion::ContrastTrend:
        case MultiAssertion::GapWidening:
        case MultiAssertion::GapNarrowing: {
            TrendPair tp = classify_trend_pair(facts.data, c.dim_a, c.dim_b, w);
            v.computed_text = std::string(to_string(tp.kind));
            if (c.asserted == MultiAssertion::SameTrend)
                return pass_if(tp.kind == TrendPairKind::SameTrend,
                               c.dim_a + " is " + std::string(to_string(tp.direction_a)) + " and " + c.dim_b + " is " +
                                   std::string(to_string(tp.direction_b)) + " over " + label(facts, w));
            if (c.asserted == MultiAssertion::ContrastTrend)
                return pass_if(tp.kind == TrendPairKind::ContrastTrend,
                               c.dim_a + " is " + std::string(to_string(tp.direction_a)) + " and " + c.dim_b + " is " +
                                   std::string(to_string(tp.direction_b)) + " over " + label(facts, w));
            const GapDirection want =
                c.asserted == MultiAssertion::GapWidening ? GapDirection::Widening : GapDirection::Narrowing;
            if (tp.gap) v.computed_text = std::string(to_string(*tp.gap));
            else v.computed_text = "no consistent gap change";
            return pass_if(tp.gap == want, "the gap is " + *v.computed_text + " over " + label(facts, w));
        }
        case MultiAssertion::Attribute: {
            if (!c.attribute) return unverifiable("attribute claim without attribute");
            const auto& at = *c.attribute;
            auto peak = [&](const std::string& dim) -> std::optional<std::size_t> {
                auto pts = present_points(facts.data.series(dim), facts.data.full_range());
                auto i = arg_extreme(pts, at.feature);
                if (!i) return std::nullopt;
                return pts.index[*i];
            };
            auto holder = [&](const std::string& dim) -> std::optional<IndexRange> {
                auto i = peak(dim);
                if (!i) return std::nullopt;
                const Patch* p = patch_containing(facts, dim, *i);
                return p ? p->range() : IndexRange{*i, *i};
            };
            auto own = holder(at.dimension);
            if (own && own->overlaps(at.time)) {
                v.computed_window = own;
                return pass_if(true, at.dimension + " reaches its extreme around " + label(facts, *own));
            }
            std::vector<std::string> others{c.dim_a, c.dim_b};
            for (const auto& d : facts.data.dimension_names())
                if (d != c.dim_a && d != c.dim_b) others.push_back(d);
            std::optional<std::string> near;
            for (const auto& other : others) {
                if (other == at.dimension) continue;
                auto i = peak(other);
                if (i && at.time.contains(*i)) {
                    near = other;
                    break;
                }
                auto o = holder(other);
                if (!near && o && o->overlaps(at.time)) near = other;
            }
            if (near) return unverifiable("the extreme near " + label(facts, at.time) + " belongs to " + *near);
            if (own) v.computed_window = own;
            return pass_if(false, at.dimension + " does not reach its extreme in " + label(facts, at.time));
        }
    }
    return unverifiable("unknown assertion");
}

Verdict verify_significance(const Claim& claim, const ChartFacts& facts) {
    const auto& c = std::get<SignificanceClaim>(claim.body);
    auto sig = significance_of_change(facts, c.dimension, c.window);
    Verdict v;
    v.computed = sig.ratio;
    v.computed_text = sig.significant ? "significant" : "minor";
    v.computed_window = c.window;
    v.tolerance_used = facts.cfg.significance_ratio;
    v.status = sig.significant == c.significant ? VerdictStatus::Pass : VerdictStatus::Fail;
    v.explanation = "change ratio of " + c.dimension + " over " + label(facts, c.window) + " is " +
                    fmt_ratio(sig.ratio);
    return v;
}

Verdict verify(const Claim& claim, const ChartFacts& facts) {
    if (claim.unresolved) return unverifiable(*claim.unresolved);
    try {
        switch (claim.kind()) {
            case ClaimKind::Extremum: return verify_extremum(claim, facts);
            case ClaimKind::Numeric: return verify_numeric(claim, facts);
            case ClaimKind::TrendDirection: return verify_trend_direction(claim, facts);
            case ClaimKind::Range: return verify_range(claim, facts);
            case ClaimKind::MultiTrend: return verify_multidim(claim, facts);
            case ClaimKind::Significance: return verify_significance(claim, facts);
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::TrendAbsent) {
            Verdict v;
            v.status = VerdictStatus::Fail;
            v.explanation = e.detail();
            return v;
        }
        if (e.code() == ErrorCode::WindowEmpty || e.code() == ErrorCode::UnknownDimension)
            return unverifiable(e.detail());
        throw;
    }
    return unverifiable("unknown claim kind");
}

std::vector<Claim> extract_claims(std::string_view sentence, const std::vector<DataRef>& refs, Backend& backend,
                                  const ChartFacts& facts, std::size_t sentence_index) {
    std::vector<std::string> ref_dims;
    json ref_json = json::array();
    for (const auto& r : refs) {
        for (const auto& d : r.dimensions)
            if (std::find(ref_dims.begin(), ref_dims.end(), d) == ref_dims.end()) ref_dims.push_back(d);
        ref_json.push_back({{"dimensions", r.dimensions}, {"start", r.start_time}, {"end", r.end_time}});
    }
    json payload = {{"task", "extract"},
                    {"sentence", std::string(sentence)},
                    {"dimensions", facts.data.dimension_names()},
                    {"refs", ref_json}};
    static const PromptPack defaults;
    GenRequest req;
    req.tag = AgentTag::SelfCheck;
    req.role_prompt = defaults.role(AgentTag::SelfCheck);
    req.user_prompt = build_user_prompt(defaults.instructions(AgentTag::SelfCheck), payload);
    req.temperature = 0;
    auto resp = backend.complete(req);
    auto parsed = json_in_response(resp.text);
    if (!parsed) throw Error(ErrorCode::ClaimParseError, "claim extraction returned no JSON");
    return claims_from_json(*parsed, facts, sentence_index, ref_dims);
}

json to_json(const Verdict& v) {
    json j = {{"status", std::string(to_string(v.status))},
              {"tolerance", v.tolerance_used},
              {"explanation", v.explanation}};
    if (v.computed) j["computed"] = *v.computed;
    if (v.computed_text) j["computed_text"] = *v.computed_text;
    if (v.computed_window) j["computed_window"] = {v.computed_window->first, v.computed_window->last};
    return j;
}

}  // namespace chartinsight
