#pragma once

#include <queue>
#include <utility>
#include <vector>

#include "pbmo/geometry.hpp"

namespace pbmo {

inline constexpr std::size_t kNoCell = static_cast<std::size_t>(-1);

/// Single-source quasihyperbolic distances on the cell graph.
struct QHResult {
    std::size_t source = kNoCell;
    std::vector<double> k;            ///< k(source, cell); +inf off the interior
    std::vector<std::size_t> pred;    ///< predecessor towards the source
    std::vector<std::size_t> order;   ///< settle order of the shortest-path run
    std::vector<double> arclength;    ///< Euclidean length of the extracted geodesic
};

/// Sequence of cell centers from a cell back to the source.
struct Polyline {
    std::vector<std::size_t> cells;
    std::vector<Point> vertices;
};

namespace detail {

struct Neighbor {
    std::ptrdiff_t dx, dy;
    double length_factor;
};

inline std::vector<Neighbor> lattice_neighbors(int dim) {
    if (dim == 1) return {{-1, 0, 1.0}, {1, 0, 1.0}};
    double const diag = std::sqrt(2.0);
    return {{-1, 0, 1.0}, {1, 0, 1.0}, {0, -1, 1.0}, {0, 1, 1.0},
            {-1, -1, diag}, {1, -1, diag}, {-1, 1, diag}, {1, 1, diag}};
}

/// Euclidean edge length times the trapezoidal mean of 1/d at the endpoints.
inline double qh_edge_weight(double length, double da, double db) { return length * 0.5 * (1.0 / da + 1.0 / db); }

/// Diagonal moves may not cut a corner of the complement.
inline bool edge_allowed(SpatialDomain const& dom, std::ptrdiff_t x, std::ptrdiff_t y, Neighbor const& nb) {
    if (!dom.interior(x + nb.dx, y + nb.dy)) return false;
    if (nb.dx != 0 && nb.dy != 0) return dom.interior(x + nb.dx, y) && dom.interior(x, y + nb.dy);
    return true;
}

}  // namespace detail

inline QHResult quasihyperbolic_distances(SpatialDomain const& dom, DistanceField const& dist, std::size_t source) {
    if (source >= dom.cell_count() || !dom.interior(source)) throw InputError("quasihyperbolic source is not an interior cell");
    QHResult r;
    r.source = source;
    r.k.assign(dom.cell_count(), kInf);
    r.pred.assign(dom.cell_count(), kNoCell);
    r.arclength.assign(dom.cell_count(), kInf);
    r.order.reserve(dom.interior_cells().size());
    auto const neighbors = detail::lattice_neighbors(dom.dim());
    std::vector<std::uint8_t> done(dom.cell_count(), 0);
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    r.k[source] = 0.0;
    r.arclength[source] = 0.0;
    heap.emplace(0.0, source);
    while (!heap.empty()) {
        auto const [du, u] = heap.top();
        heap.pop();
        if (done[u]) continue;
        done[u] = 1;
        r.order.push_back(u);
        auto const x = static_cast<std::ptrdiff_t>(dom.ix(u)), y = static_cast<std::ptrdiff_t>(dom.iy(u));
        for (auto const& nb : neighbors) {
            if (!detail::edge_allowed(dom, x, y, nb)) continue;
            std::size_t const v = dom.index(static_cast<std::size_t>(x + nb.dx), static_cast<std::size_t>(y + nb.dy));
            if (done[v]) continue;
            double const len = nb.length_factor * dom.h();
            double const alt = du + detail::qh_edge_weight(len, dist[u], dist[v]);
            if (alt < r.k[v]) {
                r.k[v] = alt;
                r.pred[v] = u;
                heap.emplace(alt, v);
            }
        }
    }
    for (std::size_t c : r.order)
        if (c != source) r.arclength[c] = r.arclength[r.pred[c]] + euclidean_distance(dom.center(c), dom.center(r.pred[c]), dom.dim());
    return r;
}

inline QHResult quasihyperbolic_distances(SpatialDomain const& dom, DistanceField const& dist, Point const& x0) {
    return quasihyperbolic_distances(dom, dist, dom.locate(x0));
}

/// Predecessor walk from `cell` to the source.
inline Polyline geodesic(SpatialDomain const& dom, QHResult const& qh, std::size_t cell) {
    if (cell >= dom.cell_count() || !dom.interior(cell)) throw InputError("geodesic endpoint is not an interior cell");
    if (!std::isfinite(qh.k[cell])) throw ComputationError("geodesic endpoint is unreachable from the source");
    Polyline line;
    for (std::size_t c = cell; c != kNoCell; c = qh.pred[c]) {
        line.cells.push_back(c);
        line.vertices.push_back(dom.center(c));
        if (c == qh.source) break;
    }
    if (line.cells.back() != qh.source) throw ComputationError("predecessor map does not reach the source");
    return line;
}

/// Weighted length of a geodesic, accumulated from the source outward in the
/// same order as the shortest-path run, so it reproduces k exactly.
inline double weighted_length(SpatialDomain const& dom, DistanceField const& dist, Polyline const& line) {
    double acc = 0.0;
    for (std::size_t i = line.cells.size() - 1; i > 0; --i) {
        std::size_t const a = line.cells[i], b = line.cells[i - 1];
        bool const diagonal = dom.dim() == 2 && dom.ix(a) != dom.ix(b) && dom.iy(a) != dom.iy(b);
        double const len = (diagonal ? std::sqrt(2.0) : 1.0) * dom.h();
        acc = acc + detail::qh_edge_weight(len, dist[a], dist[b]);
    }
    return acc;
}

/// Largest Euclidean arclength among the extracted geodesics.
inline double max_geodesic_length(SpatialDomain const& dom, QHResult const& qh) {
    double q = 0.0;
    for (std::size_t c : dom.interior_cells()) {
        if (!std::isfinite(qh.arclength[c])) throw ComputationError("incomplete shortest-path result");
        q = std::max(q, qh.arclength[c]);
    }
    return q;
}

/// Quasihyperbolic boundary condition fit k(z, y) <= K log(K / d(y)).
struct QHBCFit {
    std::size_t z = kNoCell;
    double K = kInf;
    bool holds = false;        ///< false: no K on the search grid works (non-Hölder at this resolution)
    double q = 0.0;
    double nu = 0.0;           ///< decay exponent of |{d < 2^-k}|
    double residual = kInf;    ///< max over cells of k - K log(K/d)
    std::vector<std::pair<int, double>> shells;  ///< (k, |Omega_k|) used in the nu fit
};

struct QHBCOptions {
    int min_exponent = -80;  ///< K ranges over 2^{j/4}, j in [min_exponent, max_exponent]
    int max_exponent = 80;
};

inline double qhbc_residual(SpatialDomain const& dom, DistanceField const& dist, QHResult const& qh, double K) {
    double worst = -kInf;
    for (std::size_t c : dom.interior_cells()) worst = std::max(worst, qh.k[c] - K * std::log(K / dist[c]));
    return worst;
}

inline QHBCFit fit_qhbc(SpatialDomain const& dom, DistanceField const& dist, QHResult const& qh, QHBCOptions const& opt = {}) {
    QHBCFit fit;
    fit.z = qh.source;
    fit.q = max_geodesic_length(dom, qh);
    for (int j = opt.min_exponent; j <= opt.max_exponent; ++j) {
        double const K = std::exp2(static_cast<double>(j) / 4.0);
        double const res = qhbc_residual(dom, dist, qh, K);
        if (res <= 0.0) {
            fit.K = K;
            fit.residual = res;
            fit.holds = true;
            break;
        }
    }
    if (!fit.holds) fit.residual = qhbc_residual(dom, dist, qh, std::exp2(opt.max_exponent / 4.0));

    // Dyadic boundary shells; saturated (whole domain) and empty shells are skipped.
    double const total = dom.interior_measure();
    std::vector<double> ks, logs;
    double const dmax = dist.max();
    for (int k = static_cast<int>(std::floor(-std::log2(dmax))); k < 64; ++k) {
        double const thr = std::exp2(-k);
        std::size_t count = 0;
        for (std::size_t c : dom.interior_cells())
            if (dist[c] < thr) ++count;
        if (count == 0) break;
        double const m = static_cast<double>(count) * dom.cell_volume();
        if (m >= total) continue;
        fit.shells.emplace_back(k, m);
        ks.push_back(k);
        logs.push_back(std::log2(m));
    }
    fit.nu = ks.size() >= 2 ? -fit_line(ks, logs).slope : std::numeric_limits<double>::quiet_NaN();
    return fit;
}

}  // namespace pbmo
