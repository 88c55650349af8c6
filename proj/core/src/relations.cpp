#include "chartinsight/relations.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "chartinsight/error.hpp"
#include "chartinsight/temporal.hpp"

namespace chartinsight {

using nlohmann::json;

std::string_view to_string(CrossDirection d) noexcept {
    return d == CrossDirection::AOvertakesB ? "a_overtakes_b" : "b_overtakes_a";
}

std::string_view to_string(RelationKind k) noexcept { return k == RelationKind::Same ? "same" : "contrast"; }

std::string_view to_string(TrendPairKind k) noexcept {
    return k == TrendPairKind::SameTrend ? "same_trend" : "contrast_trend";
}

std::string_view to_string(GapDirection g) noexcept { return g == GapDirection::Widening ? "widening" : "narrowing"; }

namespace {

struct Diff {
    std::vector<std::size_t> index;
    std::vector<double> value;
};

Diff differences(const Series& a, const Series& b, IndexRange window) {
    Diff d;
    const std::size_t n = std::min(a.size(), b.size());
    if (n == 0 || window.first > window.last || window.first >= n) return d;
    const std::size_t last = std::min(window.last, n - 1);
    for (std::size_t i = window.first; i <= last; ++i) {
        if (!a[i] || !b[i]) continue;
        d.index.push_back(i);
        d.value.push_back(*a[i] - *b[i]);
    }
    return d;
}

int sign(double x) { return x > 0 ? 1 : x < 0 ? -1 : 0; }

void check_window(const Diff& d) {
    if (d.index.empty()) throw Error(ErrorCode::WindowEmpty, "no samples where both series are present");
}

}  // namespace

std::vector<CrossingPoint> detect_intersections(const Series& a, const Series& b, IndexRange window) {
    const Diff d = differences(a, b, window);
    check_window(d);
    std::vector<CrossingPoint> out;
    int prev_sign = 0;
    std::size_t prev_k = 0;
    for (std::size_t k = 0; k < d.value.size(); ++k) {
        const int s = sign(d.value[k]);
        if (s == 0) continue;
        if (prev_sign != 0 && s != prev_sign) {
            CrossingPoint c;
            c.direction = s > 0 ? CrossDirection::AOvertakesB : CrossDirection::BOvertakesA;
            if (k == prev_k + 1) {
                const double d0 = d.value[prev_k], d1 = d.value[k];
                const double t = d0 / (d0 - d1);
                c.index = d.index[prev_k];
                c.next_index = d.index[k];
                c.position = double(c.index) + t * double(c.next_index - c.index);
            } else {
                // Exact tie at the first zero sample after prev_k.
                c.index = d.index[prev_k + 1];
                c.next_index = c.index;
                c.position = double(c.index);
                c.at_sample = true;
            }
            out.push_back(c);
        }
        prev_sign = s;
        prev_k = k;
    }
    return out;
}

std::vector<CrossingPoint> detect_intersections(const TimeSeriesDataset& data, std::string_view dim_a,
                                                std::string_view dim_b, IndexRange window) {
    auto out = detect_intersections(data.series(dim_a), data.series(dim_b), window);
    for (auto& c : out) {
        c.dim_a = std::string(dim_a);
        c.dim_b = std::string(dim_b);
        if (c.at_sample || data.x_type != XType::Temporal) {
            c.time = data.display_label(static_cast<std::size_t>(std::lround(c.position)));
        } else {
            const double k0 = double(data.timestamps[c.index].key);
            const double k1 = double(data.timestamps[c.next_index].key);
            const double frac = c.position - double(c.index);
            const double span = double(c.next_index - c.index);
            const auto day = static_cast<std::int64_t>(std::floor(k0 + (k1 - k0) * frac / span));
            c.time = iso_date(from_epoch_days(day));
        }
    }
    return out;
}

Relation classify_relation(const TimeSeriesDataset& data, std::string_view dim_a, std::string_view dim_b,
                           IndexRange window) {
    const Diff d = differences(data.series(dim_a), data.series(dim_b), window);
    check_window(d);
    if (std::all_of(d.value.begin(), d.value.end(), [](double x) { return x == 0; }))
        throw Error(ErrorCode::TieThroughout,
                    std::string(dim_a) + " and " + std::string(dim_b) + " are identical on the window");
    Relation r;
    r.crossings = detect_intersections(data, dim_a, dim_b, window);
    if (r.crossings.empty()) {
        r.kind = RelationKind::Same;
        const bool a_above = std::any_of(d.value.begin(), d.value.end(), [](double x) { return x > 0; });
        r.above = std::string(a_above ? dim_a : dim_b);
    } else {
        r.kind = RelationKind::Contrast;
    }
    return r;
}

double window_net_change(const Series& s, IndexRange window) {
    auto pts = present_points(s, window);
    if (pts.empty()) throw Error(ErrorCode::WindowEmpty, "window has no samples");
    return pts.value.back() - pts.value.front();
}

TrendPair classify_trend_pair(const TimeSeriesDataset& data, std::string_view dim_a, std::string_view dim_b,
                              IndexRange window) {
    const Series& a = data.series(dim_a);
    const Series& b = data.series(dim_b);
    TrendPair tp;
    tp.dim_a = std::string(dim_a);
    tp.dim_b = std::string(dim_b);
    tp.window = window;
    auto dir = [](double net) { return net > 0 ? Direction::Up : net < 0 ? Direction::Down : Direction::Flat; };
    tp.direction_a = dir(window_net_change(a, window));
    tp.direction_b = dir(window_net_change(b, window));
    tp.kind = tp.direction_a == tp.direction_b ? TrendPairKind::SameTrend : TrendPairKind::ContrastTrend;

    const Diff d = differences(a, b, window);
    if (d.value.size() >= 2) {
        std::vector<double> gap;
        for (double x : d.value) gap.push_back(std::fabs(x));
        const int overall = sign(gap.back() - gap.front());
        if (overall != 0) {
            std::size_t violations = 0;
            for (std::size_t i = 1; i < gap.size(); ++i)
                if (sign(gap[i] - gap[i - 1]) == -overall) ++violations;
            const double allowed = kGapViolationFraction * double(gap.size() - 1);
            if (double(violations) <= allowed)
                tp.gap = overall > 0 ? GapDirection::Widening : GapDirection::Narrowing;
        }
    }
    return tp;
}

std::vector<Ranking> rank_over_periods(const TimeSeriesDataset& data, const std::vector<IndexRange>& periods) {
    const std::size_t n = data.timestamps.size();
    std::vector<Ranking> out;
    for (const auto& p : periods) {
        if (p.first > p.last || p.last >= n)
            throw Error(ErrorCode::PeriodOutOfRange, "period [" + std::to_string(p.first) + ", " +
                                                         std::to_string(p.last) + "] outside the data");
        Ranking r;
        r.period = p;
        for (const auto& [name, s] : data.dimensions) {
            auto pts = present_points(s, p);
            if (pts.empty()) continue;
            r.order.push_back({name, mean_of(pts.value)});
        }
        if (r.order.empty()) throw Error(ErrorCode::WindowEmpty, "no dimension has data in the period");
        std::stable_sort(r.order.begin(), r.order.end(),
                         [](const RankEntry& x, const RankEntry& y) { return x.mean > y.mean; });
        for (std::size_t i = 1; i < r.order.size(); ++i)
            if (r.order[i].mean == r.order[i - 1].mean) r.tie = true;
        out.push_back(std::move(r));
    }
    return out;
}

namespace {

std::vector<DominanceWindow> dominance_windows(const TimeSeriesDataset& data, const std::string& a,
                                               const std::string& b, IndexRange window,
                                               const std::vector<CrossingPoint>& crossings) {
    std::vector<DominanceWindow> out;
    std::size_t start = window.first;
    auto above_on = [&](IndexRange w) {
        const Diff d = differences(data.series(a), data.series(b), w);
        for (double x : d.value)
            if (x != 0) return x > 0 ? a : b;
        return a;
    };
    for (const auto& c : crossings) {
        IndexRange w{start, c.index};
        out.push_back({w, above_on(w)});
        start = c.at_sample ? c.index : c.next_index;
    }
    IndexRange tail{start, window.last};
    out.push_back({tail, above_on(tail)});
    return out;
}

std::vector<std::size_t> pair_boundaries(const std::map<std::string, std::vector<Patch>>& patches,
                                         const std::string& a, const std::string& b, IndexRange window) {
    std::set<std::size_t> cuts{window.first, window.last};
    for (const auto* name : {&a, &b}) {
        auto it = patches.find(*name);
        if (it == patches.end()) continue;
        for (const auto& p : it->second)
            if (p.end_index > window.first && p.end_index < window.last) cuts.insert(p.end_index);
    }
    return {cuts.begin(), cuts.end()};
}

}  // namespace

MultiInsightRecord multi_insight(const std::map<std::string, std::vector<Patch>>& patches,
                                 const TimeSeriesDataset& data, IndexRange window) {
    if (data.dimensions.size() < 2) throw Error(ErrorCode::SingleDimension, "need at least two dimensions");
    MultiInsightRecord rec;
    rec.window = window;
    const auto names = data.dimension_names();
    std::vector<IndexRange> rank_periods{window};
    for (std::size_t i = 0; i < names.size(); ++i) {
        for (std::size_t j = i + 1; j < names.size(); ++j) {
            PairInsight pi;
            pi.dim_a = names[i];
            pi.dim_b = names[j];
            try {
                pi.relation = classify_relation(data, pi.dim_a, pi.dim_b, window);
                pi.dominance = dominance_windows(data, pi.dim_a, pi.dim_b, window, pi.relation.crossings);
                if (pi.dominance.size() > 1)
                    for (const auto& d : pi.dominance) rank_periods.push_back(d.window);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::TieThroughout) throw;
                pi.tie_throughout = true;
            }
            auto cuts = pair_boundaries(patches, pi.dim_a, pi.dim_b, window);
            for (std::size_t k = 1; k < cuts.size(); ++k) {
                try {
                    pi.trend_pairs.push_back(classify_trend_pair(data, pi.dim_a, pi.dim_b, {cuts[k - 1], cuts[k]}));
                } catch (const Error& e) {
                    if (e.code() != ErrorCode::WindowEmpty) throw;
                }
            }
            rec.pairs.push_back(std::move(pi));
        }
    }
    std::sort(rank_periods.begin(), rank_periods.end());
    rank_periods.erase(std::unique(rank_periods.begin(), rank_periods.end()), rank_periods.end());
    rec.rankings = rank_over_periods(data, rank_periods);
    return rec;
}

namespace {

json window_json(const TimeSeriesDataset& data, IndexRange w) {
    return {{"start", data.display_label(w.first)},
            {"end", data.display_label(w.last)},
            {"start_index", w.first},
            {"end_index", w.last},
            {"label", window_label(data, w)}};
}

}  // namespace

json to_json(const MultiInsightRecord& r, const TimeSeriesDataset& data) {
    json pairs = json::array();
    for (const auto& p : r.pairs) {
        json pj;
        pj["pair"] = {p.dim_a, p.dim_b};
        if (p.tie_throughout) {
            pj["relation"] = {{"kind", "tie_throughout"}};
        } else {
            json rel = {{"kind", std::string(to_string(p.relation.kind))}};
            if (p.relation.kind == RelationKind::Same) rel["above"] = p.relation.above;
            json cs = json::array();
            for (const auto& c : p.relation.crossings)
                cs.push_back({{"time", c.time},
                              {"index", c.index},
                              {"next_index", c.next_index},
                              {"position", c.position},
                              {"direction", std::string(to_string(c.direction))},
                              {"at_sample", c.at_sample}});
            rel["crossings"] = std::move(cs);
            pj["relation"] = std::move(rel);
        }
        json dom = json::array();
        for (const auto& d : p.dominance) {
            json w = window_json(data, d.window);
            w["above"] = d.above;
            dom.push_back(std::move(w));
        }
        pj["dominance"] = std::move(dom);
        json tps = json::array();
        for (const auto& t : p.trend_pairs) {
            json tj = window_json(data, t.window);
            tj["kind"] = std::string(to_string(t.kind));
            tj["directions"] = {std::string(to_string(t.direction_a)), std::string(to_string(t.direction_b))};
            if (t.gap) tj["gap"] = std::string(to_string(*t.gap));
            tps.push_back(std::move(tj));
        }
        pj["trend_pairs"] = std::move(tps);
        pairs.push_back(std::move(pj));
    }
    json ranks = json::array();
    for (const auto& rk : r.rankings) {
        json rj = window_json(data, rk.period);
        json order = json::array();
        for (const auto& e : rk.order) order.push_back({{"dimension", e.dimension}, {"mean", e.mean}});
        rj["order"] = std::move(order);
        rj["tie"] = rk.tie;
        ranks.push_back(std::move(rj));
    }
    json out = window_json(data, r.window);
    out["pairs"] = std::move(pairs);
    out["rankings"] = std::move(ranks);
    return out;
}

namespace {

IndexRange window_of(const json& j) {
    return {j.at("start_index").get<std::size_t>(), j.at("end_index").get<std::size_t>()};
}

Direction direction_of(const std::string& s) {
    if (s == "up") return Direction::Up;
    if (s == "down") return Direction::Down;
    if (s == "flat") return Direction::Flat;
    throw Error(ErrorCode::ClaimParseError, "unknown direction '" + s + "'");
}

}  // namespace

MultiInsightRecord multi_record_from_json(const json& j) {
    try {
        MultiInsightRecord r;
        r.window = window_of(j);
        for (const auto& pj : j.at("pairs")) {
            PairInsight pi;
            pi.dim_a = pj.at("pair").at(0).get<std::string>();
            pi.dim_b = pj.at("pair").at(1).get<std::string>();
            const auto& rel = pj.at("relation");
            const std::string kind = rel.at("kind").get<std::string>();
            if (kind == "tie_throughout") {
                pi.tie_throughout = true;
            } else if (kind == "same" || kind == "contrast") {
                pi.relation.kind = kind == "same" ? RelationKind::Same : RelationKind::Contrast;
                pi.relation.above = rel.value("above", "");
                for (const auto& c : rel.value("crossings", json::array())) {
                    CrossingPoint cp;
                    cp.dim_a = pi.dim_a;
                    cp.dim_b = pi.dim_b;
                    cp.index = c.at("index").get<std::size_t>();
                    cp.next_index = c.value("next_index", cp.index + 1);
                    cp.position = c.value("position", static_cast<double>(cp.index));
                    cp.at_sample = c.value("at_sample", false);
                    cp.time = c.value("time", "");
                    cp.direction = c.value("direction", "") == "b_overtakes_a" ? CrossDirection::BOvertakesA
                                                                              : CrossDirection::AOvertakesB;
                    pi.relation.crossings.push_back(std::move(cp));
                }
            } else {
                throw Error(ErrorCode::ClaimParseError, "unknown relation kind '" + kind + "'");
            }
            for (const auto& d : pj.value("dominance", json::array()))
                pi.dominance.push_back({window_of(d), d.value("above", "")});
            for (const auto& t : pj.value("trend_pairs", json::array())) {
                TrendPair tp;
                tp.dim_a = pi.dim_a;
                tp.dim_b = pi.dim_b;
                tp.window = window_of(t);
                const std::string k = t.at("kind").get<std::string>();
                if (k != "same_trend" && k != "contrast_trend")
                    throw Error(ErrorCode::ClaimParseError, "unknown trend pair kind '" + k + "'");
                tp.kind = k == "same_trend" ? TrendPairKind::SameTrend : TrendPairKind::ContrastTrend;
                const auto& dirs = t.at("directions");
                tp.direction_a = direction_of(dirs.at(0).get<std::string>());
                tp.direction_b = direction_of(dirs.at(1).get<std::string>());
                if (t.contains("gap"))
                    tp.gap = t["gap"] == "widening" ? GapDirection::Widening : GapDirection::Narrowing;
                pi.trend_pairs.push_back(std::move(tp));
            }
            r.pairs.push_back(std::move(pi));
        }
        for (const auto& rk : j.value("rankings", json::array())) {
            Ranking rank;
            rank.period = window_of(rk);
            rank.tie = rk.value("tie", false);
            for (const auto& e : rk.value("order", json::array()))
                rank.order.push_back({e.at("dimension").get<std::string>(), e.at("mean").get<double>()});
            r.rankings.push_back(std::move(rank));
        }
        return r;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ClaimParseError, std::string("malformed multi-insight record: ") + e.what());
    }
}

}  // namespace chartinsight
