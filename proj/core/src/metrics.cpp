#include "chartinsight/metrics.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include <Eigen/Dense>

#include "chartinsight/error.hpp"

namespace chartinsight {

namespace {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

void normalize(std::vector<double>& v) {
    double n = 0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    if (n > 0)
        for (double& x : v) x /= n;
}

constexpr std::array<std::string_view, kHallucinationTypeCount> kTypeNames{
    "ExtremumError",  "NumericalValueError", "TrendDirectionError", "MultidimensionalTrendError",
    "RangeError",     "CyclicalityError",    "StabilityError",      "DetailOmission",
    "JunkDescription", "ProportionPerceptionError"};

// Shannon-Wiener index of the points on a B x B grid over the first two
// principal components, each min-max scaled.
double grid_entropy(const PointSet& ps, int bins) {
    const auto n = static_cast<Eigen::Index>(ps.size());
    const auto d = static_cast<Eigen::Index>(ps.dim());
    Eigen::MatrixXd x(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) x(i, j) = ps.points[i][j];
    Eigen::RowVectorXd mean = x.colwise().mean();
    x.rowwise() -= mean;

    Eigen::MatrixXd proj(n, 2);
    proj.setZero();
    if (d == 1) {
        proj.col(0) = x.col(0);
    } else {
        Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
        // eigenvalues ascend; take the last two
        for (int k = 0; k < 2 && k < d; ++k) {
            Eigen::VectorXd axis = es.eigenvectors().col(d - 1 - k);
            // fix the sign so the projection does not depend on the solver
            Eigen::Index big = 0;
            axis.cwiseAbs().maxCoeff(&big);
            if (axis(big) < 0) axis = -axis;
            proj.col(k) = x * axis;
        }
    }

    std::map<std::pair<int, int>, std::size_t> cells;
    std::array<int, 2> idx{};
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int k = 0; k < 2; ++k) {
            const double lo = proj.col(k).minCoeff(), hi = proj.col(k).maxCoeff();
            const double span = hi - lo;
            if (span <= 1e-12 * std::max(1.0, std::abs(hi))) {
                idx[k] = 0;
                continue;
            }
            const double u = (proj(i, k) - lo) / span;
            idx[k] = std::clamp(static_cast<int>(std::floor(u * bins)), 0, bins - 1);
        }
        ++cells[{idx[0], idx[1]}];
    }
    double h = 0;
    for (const auto& [cell, count] : cells) {
        const double p = static_cast<double>(count) / static_cast<double>(n);
        h -= p * std::log(p);
    }
    return h;
}

}  // namespace

void MetricsConfig::validate() const {
    if (!(span_percentile > 0 && span_percentile <= 100))
        throw Error(ErrorCode::ValidationError, "span percentile must lie in (0, 100]");
    if (entropy_grid_bins < 2) throw Error(ErrorCode::ValidationError, "entropy grid needs at least 2 bins");
    if (embedding_dim < 1) throw Error(ErrorCode::ValidationError, "embedding dimension must be positive");
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

PointSet embed(const std::vector<std::string>& sentences, const MetricsConfig& cfg) {
    cfg.validate();
    if (sentences.empty()) throw Error(ErrorCode::EmptyInput, "no sentences to embed");
    std::vector<std::vector<std::string>> toks;
    std::map<std::string, std::size_t> df;
    for (const auto& s : sentences) {
        toks.push_back(tokenize(s));
        for (const auto& t : std::set<std::string>(toks.back().begin(), toks.back().end())) ++df[t];
    }
    const double n = static_cast<double>(sentences.size());
    PointSet ps;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        std::map<std::string, double> tf;
        for (const auto& t : toks[i]) tf[t] += 1;
        std::vector<double> v(cfg.embedding_dim, 0.0);
        for (const auto& [t, c] : tf) {
            const double idf = std::log((1 + n) / (1 + static_cast<double>(df[t]))) + 1;
            v[fnv1a(t) % cfg.embedding_dim] += c * idf;
        }
        normalize(v);
        ps.points.push_back(std::move(v));
        ps.labels.push_back(i);
    }
    return ps;
}

PointSet embed_external(std::vector<std::vector<double>> vectors) {
    if (vectors.empty()) throw Error(ErrorCode::EmptyInput, "no vectors");
    const auto d = vectors.front().size();
    PointSet ps;
    for (auto& v : vectors) {
        if (v.size() != d || d == 0) throw Error(ErrorCode::ValidationError, "vectors must share a positive dimension");
        normalize(v);
        ps.labels.push_back(ps.points.size());
        ps.points.push_back(std::move(v));
    }
    return ps;
}

double euclidean(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

double percentile(std::vector<double> v, double p) {
    if (v.empty()) throw Error(ErrorCode::EmptyInput, "percentile of nothing");
    std::sort(v.begin(), v.end());
    const double pos = p / 100.0 * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::vector<std::pair<std::size_t, std::size_t>> mst_edges(const PointSet& ps) {
    const auto n = ps.size();
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    if (n < 2) return edges;
    std::vector<bool> in(n, false);
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> from(n, 0);
    best[0] = 0;
    for (std::size_t step = 0; step < n; ++step) {
        std::size_t u = n;
        for (std::size_t i = 0; i < n; ++i)
            if (!in[i] && (u == n || best[i] < best[u])) u = i;
        in[u] = true;
        if (step > 0) edges.emplace_back(from[u], u);
        for (std::size_t v = 0; v < n; ++v) {
            if (in[v]) continue;
            const double w = euclidean(ps.points[u], ps.points[v]);
            if (w < best[v]) {
                best[v] = w;
                from[v] = u;
            }
        }
    }
    return edges;
}

Diversity diversity(const PointSet& ps, const MetricsConfig& cfg) {
    cfg.validate();
    if (ps.points.empty()) throw Error(ErrorCode::EmptyInput, "empty point set");
    const auto d = ps.dim();
    for (const auto& p : ps.points)
        if (p.size() != d || d == 0) throw Error(ErrorCode::ValidationError, "points must share a positive dimension");
    Diversity out;
    const auto n = ps.size();
    if (n < 2) {
        out.degenerate = true;
        return out;
    }

    std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) dist[i][j] = dist[j][i] = euclidean(ps.points[i], ps.points[j]);

    double rc = 0, ch = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0, mn = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            sum += dist[i][j];
            mn = std::min(mn, dist[i][j]);
        }
        rc += sum / static_cast<double>(n - 1);
        ch += mn;
    }
    out.remote_clique = rc / static_cast<double>(n);
    out.chamfer = ch / static_cast<double>(n);

    for (const auto& [a, b] : mst_edges(ps)) out.mst_dispersion += dist[a][b];

    std::vector<double> centroid(d, 0.0);
    for (const auto& p : ps.points)
        for (std::size_t k = 0; k < d; ++k) centroid[k] += p[k] / static_cast<double>(n);
    std::vector<double> to_centroid;
    for (const auto& p : ps.points) to_centroid.push_back(euclidean(p, centroid));
    out.span = percentile(to_centroid, cfg.span_percentile);

    // the medoid minimizes total distance; its total over n is the mean
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        double total = 0;
        for (std::size_t j = 0; j < n; ++j) total += dist[i][j];
        best = std::min(best, total);
    }
    out.sparseness = best / static_cast<double>(n);

    out.entropy = grid_entropy(ps, cfg.entropy_grid_bins);
    return out;
}

std::string_view to_string(HallucinationType t) noexcept { return kTypeNames[static_cast<std::size_t>(t)]; }

std::optional<HallucinationType> hallucination_type_from_string(std::string_view s) noexcept {
    for (std::size_t i = 0; i < kTypeNames.size(); ++i)
        if (kTypeNames[i] == s) return static_cast<HallucinationType>(i);
    return std::nullopt;
}

const std::vector<HallucinationType>& all_hallucination_types() {
    static const std::vector<HallucinationType> all = [] {
        std::vector<HallucinationType> v;
        for (std::size_t i = 0; i < kHallucinationTypeCount; ++i) v.push_back(static_cast<HallucinationType>(i));
        return v;
    }();
    return all;
}

double semantic_richness(const SummaryDoc& doc) {
    if (doc.sentences.empty()) throw Error(ErrorCode::EmptyDoc, "summary has no sentences");
    std::size_t rich = 0;
    for (const auto& s : doc.sentences)
        if (s.level != Level::L1) ++rich;
    return static_cast<double>(rich) / static_cast<double>(doc.sentences.size());
}

double hallucination_rate(std::size_t annotations, std::size_t sentence_count) {
    if (sentence_count == 0) throw Error(ErrorCode::ZeroSentences, "hallucination rate over zero sentences");
    return static_cast<double>(annotations) / static_cast<double>(sentence_count);
}

double hallucination_rate(const std::vector<HallucinationAnnotation>& annotations, std::size_t sentence_count) {
    return hallucination_rate(annotations.size(), sentence_count);
}

}  // namespace chartinsight
