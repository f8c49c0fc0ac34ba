#pragma once

#include <optional>
#include <ostream>
#include <vector>

#include <fmt/format.h>

#include "pbmo/parabolic.hpp"
#include "pbmo/quasihyperbolic.hpp"

namespace pbmo {

struct ChainParams {
    double beta = 0.5;
    double alpha = 0.01;
    double alpha_prime = 0.01;
    double delta = 0.0;
    double eta = 0.0;
    double N = 0.0;               ///< measured bound on sum l_i / q
    double p = 2.0;
    double T = 1.0;
    double fragment_ratio = kFragmentRatio;
    std::size_t max_links = 1000000;
};

/// min{beta d, beta (T - t)^{1/p}, alpha q}
inline double sidelength_rule(double d, double t, ChainParams const& prm, double q) {
    if (!(t < prm.T)) throw InputError("sidelength rule: time must lie below the horizon T");
    if (!(d > 0.0)) throw InputError("sidelength rule: point is not inside the domain");
    return std::min({prm.beta * d, prm.beta * std::pow(prm.T - t, 1.0 / prm.p), prm.alpha * q});
}

inline double capped_sidelength(double d, double t, ChainParams const& prm, double q) {
    return std::min(sidelength_rule(d, t, prm, q), prm.alpha_prime * q);
}

struct ChainLink {
    Point y{};
    double t = 0.0;
    double l = 0.0;
    bool doubling = false;   ///< sidelength set by the doubling phase, not by the rule
};

struct Chain {
    int dim = 2;
    double p = 2.0;
    ParabolicPoint start;
    std::vector<ChainLink> links;
    double tau = 0.0;        ///< time of the last center
    double k_xz = 0.0;       ///< quasihyperbolic distance of the start cell to z

    ParabolicRectangle rectangle(std::size_t j) const { return {dim, links[j].y, links[j].t, links[j].l, p}; }
    std::size_t size() const { return links.size(); }
};

namespace detail {

/// Distance to the complement at an arbitrary point, computed exactly only
/// when it can decide the minimum in the sidelength rule.
inline double rule_distance(DistanceField const& dist, Point const& y, double other_terms, double beta) {
    SpatialDomain const& d = dist.domain();
    double lower = 0.0;
    auto const cx = static_cast<std::ptrdiff_t>(std::floor((y[0] - d.origin()[0]) / d.h()));
    auto const cy = d.dim() == 1 ? 0 : static_cast<std::ptrdiff_t>(std::floor((y[1] - d.origin()[1]) / d.h()));
    if (d.interior(cx, cy)) {
        std::size_t const c = d.index(static_cast<std::size_t>(cx), static_cast<std::size_t>(cy));
        lower = dist[c] - euclidean_distance(d.center(c), y, d.dim());
    }
    if (beta * lower >= other_terms) return lower;
    return dist.at(y);
}

/// Walks a polyline from a position on segment `seg` and returns the first
/// point where it leaves the open cube of half-width w around `y`.
struct PolylineCursor {
    std::vector<Point> const* vertices = nullptr;
    std::size_t seg = 0;  ///< current point lies on [v[seg], v[seg + 1]]
    Point at{};

    bool at_end() const { return seg + 1 >= vertices->size(); }

    void exit_cube(double w, int dim) {
        auto const& v = *vertices;
        Point const y = at;
        Point a = at;
        for (std::size_t s = seg; s + 1 < v.size(); ++s) {
            Point const& b = v[s + 1];
            if (inf_distance(b, y, dim) >= w) {
                double lambda = 1.0;
                int axis = -1;
                double target = 0.0;
                for (int k = 0; k < dim; ++k) {
                    auto const i = static_cast<std::size_t>(k);
                    double const step = b[i] - a[i];
                    if (step == 0.0) continue;
                    double const tgt = y[i] + (step > 0.0 ? w : -w);
                    double const lam = (tgt - a[i]) / step;
                    if (lam >= 0.0 && lam <= lambda) {
                        lambda = lam;
                        axis = k;
                        target = tgt;
                    }
                }
                Point e{a[0] + lambda * (b[0] - a[0]), a[1] + lambda * (b[1] - a[1])};
                if (axis >= 0) e[static_cast<std::size_t>(axis)] = target;
                if (dim == 1) e[1] = 0.0;
                at = e;
                seg = s;
                return;
            }
            a = b;
        }
        seg = v.size() - 1;
        at = v.back();
    }
};

}  // namespace detail

/// Backward-in-time chain from (x, t) to the root z of the shortest-path run.
inline Chain build_chain(ParabolicPoint const& start, SpatialDomain const& dom, DistanceField const& dist, QHResult const& qh,
                         ChainParams const& prm, double q) {
    if (!(prm.beta > 0.0 && prm.beta < 1.0)) throw InputError("chain parameter beta must lie in (0, 1)");
    if (!(prm.alpha > 0.0 && prm.alpha_prime > 0.0)) throw InputError("chain parameters alpha, alpha' must be positive");
    if (!(prm.p > 1.0)) throw InputError("parabolic exponent must exceed 1");
    if (!(q > 0.0)) throw InputError("maximal geodesic length must be positive");
    if (!(start.t > prm.delta * std::pow(q, prm.p) && start.t < prm.T))
        throw InputError("chain start time must lie in (delta q^p, T)");
    if (qh.source == kNoCell) throw InputError("chain needs a completed shortest-path run");
    int const dim = dom.dim();
    std::size_t const cell = dom.locate(start.x);
    double const d0 = dist.at(start.x);
    if (!(d0 > 0.0)) throw InputError("chain start point is not inside the domain");

    Polyline const path = geodesic(dom, qh, cell);
    std::vector<Point> verts{start.x};
    for (auto const& v : path.vertices)
        if (v != verts.back()) verts.push_back(v);
    Point const z = dom.center(qh.source);

    Chain chain;
    chain.dim = dim;
    chain.p = prm.p;
    chain.start = start;
    chain.k_xz = qh.k[cell];

    auto const rule_at = [&](Point const& y, double t) {
        double const others = std::min(prm.beta * std::pow(prm.T - t, 1.0 / prm.p), prm.alpha * q);
        return sidelength_rule(detail::rule_distance(dist, y, others, prm.beta), t, prm, q);
    };

    double const rule1 = rule_at(start.x, start.t);
    bool doubling = prm.alpha_prime * q < rule1;
    double l = doubling ? prm.alpha_prime * q : rule1;
    detail::PolylineCursor cur{&verts, 0, start.x};
    if (verts.size() == 1) cur.seg = 0;
    chain.links.push_back({start.x, start.t, l, doubling});
    double rule_now = rule1;

    auto const terminal = [&](ChainLink const& k, double rule) { return k.y == z && k.l >= 0.5 * rule; };
    while (!terminal(chain.links.back(), rule_now)) {
        if (chain.links.size() >= prm.max_links) throw ComputationError("chain did not terminate within the link budget");
        ChainLink const& cur_link = chain.links.back();
        if (verts.size() > 1 && cur.at != verts.back()) cur.exit_cube(0.5 * prm.fragment_ratio * cur_link.l, dim);
        Point const y = cur.at_end() ? verts.back() : cur.at;
        double const t_frag = cur_link.t - 0.75 * std::pow(cur_link.l, prm.p);
        double const rule = rule_at(y, t_frag);
        double next = rule;
        bool dbl = false;
        if (doubling) {
            next = std::min(2.0 * cur_link.l, rule);
            dbl = next < rule;
            doubling = dbl;
        }
        double const t_next = t_frag - 0.75 * std::pow(next, prm.p);
        if (!(t_next > 0.0))
            throw ComputationError("chain leaves the cylinder bottom (tau <= 0): increase delta or decrease eta/alpha");
        chain.links.push_back({y, t_next, next, dbl});
        rule_now = rule;
    }
    chain.tau = chain.links.back().t;
    return chain;
}

struct ChainCertificate {
    bool inclusion_ok = true;          ///< (i) beta^{-1} R_j inside Omega x (0, T)
    std::size_t inclusion_failures = 0;
    double min_overlap_ratio = kInf;   ///< (ii) min over links, +inf for a single rectangle
    double displacement = 0.0;         ///< (iii) t - tau
    double displacement_bound = 0.0;   ///< q^p eta
    bool displacement_ok = true;
    std::size_t links = 0;             ///< (iv) k
    double bound_expression = 0.0;     ///< k(x,z) + log T/(T-t) + log(alpha/alpha' + 1) + 1/alpha + 1
    double ratio = 0.0;                ///< k / bound_expression
    bool comparable_ok = true;         ///< l_{i+1} <= (beta+1) l_i and l_i <= l_{i+1}/(1-beta) on rule-driven links
    bool valid() const { return inclusion_ok && displacement_ok && min_overlap_ratio > 0.0 && comparable_ok; }
};

inline ChainCertificate verify_chain(Chain const& chain, SpatialDomain const& dom, DistanceField const& dist, ChainParams const& prm, double q) {
    ChainCertificate cert;
    int const n = chain.dim;
    for (std::size_t j = 0; j < chain.size(); ++j) {
        ChainLink const& k = chain.links[j];
        double const side = k.l / prm.beta;
        double const reach = 0.5 * side * std::sqrt(static_cast<double>(n));
        double const lp = std::pow(side, prm.p);
        bool const ok = reach <= dist.at(k.y) && k.t - lp >= 0.0 && k.t + lp <= prm.T;
        if (!ok) {
            cert.inclusion_ok = false;
            ++cert.inclusion_failures;
        }
    }
    (void)dom;
    for (std::size_t j = 0; j + 1 < chain.size(); ++j) {
        ParabolicRectangle const a = chain.rectangle(j), b = chain.rectangle(j + 1);
        double const inter = intersection_measure(a.lower_fragment(prm.fragment_ratio), b.upper_fragment(prm.fragment_ratio));
        cert.min_overlap_ratio = std::min(cert.min_overlap_ratio, inter / std::max(a.measure(), b.measure()));
        ChainLink const& u = chain.links[j];
        ChainLink const& v = chain.links[j + 1];
        if (!u.doubling && !v.doubling) {
            if (v.l > (prm.beta + 1.0) * u.l || u.l > v.l / (1.0 - prm.beta)) cert.comparable_ok = false;
        }
    }
    cert.displacement = chain.start.t - chain.tau;
    cert.displacement_bound = std::pow(q, prm.p) * prm.eta;
    cert.displacement_ok = cert.displacement >= 0.0 && cert.displacement <= cert.displacement_bound;
    cert.links = chain.size();
    cert.bound_expression = chain.k_xz + std::log(prm.T / (prm.T - chain.start.t)) + std::log(prm.alpha / prm.alpha_prime + 1.0) +
                            1.0 / prm.alpha + 1.0;
    cert.ratio = static_cast<double>(cert.links) / cert.bound_expression;
    return cert;
}

/// Sum of l_i / q over the chain.
inline double length_sum_ratio(Chain const& chain, double q) {
    double s = 0.0;
    for (auto const& k : chain.links) s += k.l;
    return s / q;
}

/// N as the largest sum l_i / q over calibration chains, then eta = 2 N alpha^{p-1}.
inline void calibrate(ChainParams& prm, std::vector<Chain> const& sweep, double q) {
    double N = 0.0;
    for (auto const& c : sweep) N = std::max(N, length_sum_ratio(c, q));
    prm.N = N;
    prm.eta = 2.0 * N * std::pow(prm.alpha, prm.p - 1.0);
}

/// Smallest delta compatible with eta: the chain then stays above t = (alpha q / beta)^p.
inline double minimal_delta(ChainParams const& prm) { return prm.eta + std::pow(prm.alpha / prm.beta, prm.p); }

// ---------------------------------------------------------------------------
// Vertical chains: a fixed spatial cube, centers marching from t' down to t.

struct VerticalChain {
    std::vector<double> times;   ///< centers from t' down to t
    double min_overlap = kInf;   ///< smallest temporal overlap of consecutive rectangles
};

inline VerticalChain vertical_chain(ParabolicRectangle const& r, ParabolicRectangle const& r2, double M, double T,
                                    std::size_t min_links = 0) {
    if (r.center() != r2.center() || r.side() != r2.side() || r.p() != r2.p() || r.dim() != r2.dim())
        throw InputError("vertical chain: rectangles must share the spatial cube and exponent");
    if (!(M >= 1.0)) throw InputError("vertical chain: M must be at least 1");
    double const gap = r2.t() - r.t();
    VerticalChain vc;
    if (gap == 0.0) {
        vc.times = {r.t()};
        return vc;
    }
    if (gap < 0.0) throw InputError("vertical chain: the second rectangle must lie later in time");
    if (gap < M * r.side() || gap > T) throw InputError("vertical chain: need T >= t' - t >= M L");
    double const lp = r.time_scale();
    double const step_max = (2.0 - 1.0 / M) * lp;
    auto const steps = std::max<std::size_t>(static_cast<std::size_t>(std::ceil(gap / step_max)), std::max<std::size_t>(min_links, 2) - 1);
    double const step = gap / static_cast<double>(steps);
    for (std::size_t i = 0; i <= steps; ++i) vc.times.push_back(i == steps ? r.t() : r2.t() - static_cast<double>(i) * step);
    for (std::size_t i = 0; i + 1 < vc.times.size(); ++i) {
        double const lo = std::max(vc.times[i] - lp, vc.times[i + 1] - lp);
        double const hi = std::min(vc.times[i] + lp, vc.times[i + 1] + lp);
        vc.min_overlap = std::min(vc.min_overlap, hi - lo);
    }
    return vc;
}

// ---------------------------------------------------------------------------

inline void write_chain_csv(std::ostream& out, Chain const& chain, ChainCertificate const& cert) {
    out << (chain.dim == 2 ? "j,yx,yy,t,l\n" : "j,yx,t,l\n");
    for (std::size_t j = 0; j < chain.size(); ++j) {
        auto const& k = chain.links[j];
        if (chain.dim == 2)
            out << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g}\n", j + 1, k.y[0], k.y[1], k.t, k.l);
        else
            out << fmt::format("{},{:.17g},{:.17g},{:.17g}\n", j + 1, k.y[0], k.t, k.l);
    }
    out << fmt::format("summary,inclusion_ok={},min_overlap={:.17g},displacement={:.17g},bound={:.17g},links={},ratio={:.17g}\n",
                       cert.inclusion_ok ? 1 : 0, cert.min_overlap_ratio, cert.displacement, cert.displacement_bound, cert.links,
                       cert.ratio);
}

}  // namespace pbmo
