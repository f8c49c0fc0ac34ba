#pragma once

#include <optional>
#include <queue>
#include <tuple>
#include <string>
#include <vector>

#include "pbmo/grid_function.hpp"

namespace pbmo {

struct OscillationResult {
    double a = 0.0;                ///< best constant
    double value = 0.0;            ///< objective at a
    bool interval = false;         ///< minimizer set is a nondegenerate interval [lo, hi]
    double lo = 0.0, hi = 0.0;
    std::size_t n_upper = 0, n_lower = 0;
};

/// mean_upper((u - a)_+^b) + mean_lower((a - u)_+^b), summed in input order.
inline double oscillation_objective(std::span<const double> upper, std::span<const double> lower, double a, double b) {
    auto const term = [b](double v) { return v > 0.0 ? (b == 1.0 ? v : b == 0.5 ? std::sqrt(v) : std::pow(v, b)) : 0.0; };
    double su = 0.0, sl = 0.0;
    for (double v : upper) su += term(v - a);
    for (double v : lower) sl += term(a - v);
    return su / static_cast<double>(upper.size()) + sl / static_cast<double>(lower.size());
}

namespace detail {

inline std::vector<double> distinct_sorted(std::span<const double> a, std::span<const double> b) {
    std::vector<double> v(a.begin(), a.end());
    v.insert(v.end(), b.begin(), b.end());
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

/// b = 1: the slope on (w_k, w_{k+1}) is #lower<=w_k / nL - #upper>w_k / nU.
inline OscillationResult linear_minimizer(std::span<const double> upper, std::span<const double> lower) {
    std::vector<double> su(upper.begin(), upper.end()), sl(lower.begin(), lower.end());
    std::sort(su.begin(), su.end());
    std::sort(sl.begin(), sl.end());
    std::vector<double> const w = distinct_sorted(su, sl);
    auto const nu = static_cast<long long>(su.size()), nl = static_cast<long long>(sl.size());
    std::size_t iu = 0, il = 0;
    OscillationResult r;
    for (std::size_t k = 0; k < w.size(); ++k) {
        while (il < sl.size() && sl[il] <= w[k]) ++il;
        while (iu < su.size() && su[iu] <= w[k]) ++iu;
        long long const slope = static_cast<long long>(il) * nu - (nu - static_cast<long long>(iu)) * nl;
        if (slope > 0) {
            r.a = r.lo = r.hi = w[k];
            return r;
        }
        if (slope == 0) {
            // Flat piece; k < w.size() - 1 because the slope past the last value is positive.
            r.interval = true;
            r.lo = w[k];
            r.hi = w[k + 1];
            r.a = 0.5 * (r.lo + r.hi);
            return r;
        }
    }
    throw ComputationError("best constant: slope never changes sign");
}

/// b < 1: the objective is concave between consecutive data values, so the
/// minimum sits on a data value. Exact branch and bound over ranges of data
/// values, using that the upper term decreases and the lower term increases in a.
inline OscillationResult concave_minimizer(std::span<const double> upper, std::span<const double> lower, double b) {
    std::vector<double> su(upper.begin(), upper.end()), sl(lower.begin(), lower.end());
    std::sort(su.begin(), su.end());
    std::sort(sl.begin(), sl.end());
    std::vector<double> const w = distinct_sorted(su, sl);
    auto const term = [b](double v) { return b == 0.5 ? std::sqrt(v) : std::pow(v, b); };
    std::vector<double> up(w.size(), -1.0), lo(w.size(), -1.0);
    auto const upper_part = [&](std::size_t i) {
        if (up[i] < 0.0) {
            double s = 0.0;
            for (auto it = std::upper_bound(su.begin(), su.end(), w[i]); it != su.end(); ++it) s += term(*it - w[i]);
            up[i] = s / static_cast<double>(su.size());
        }
        return up[i];
    };
    auto const lower_part = [&](std::size_t i) {
        if (lo[i] < 0.0) {
            double s = 0.0;
            for (auto it = sl.begin(), end = std::lower_bound(sl.begin(), sl.end(), w[i]); it != end; ++it) s += term(w[i] - *it);
            lo[i] = s / static_cast<double>(sl.size());
        }
        return lo[i];
    };
    double best = kInf;
    std::size_t best_i = 0;
    auto const visit = [&](std::size_t i) {
        double const f = upper_part(i) + lower_part(i);
        if (f < best || (f == best && i < best_i)) {
            best = f;
            best_i = i;
        }
    };
    // Seed with evenly spaced knots, then expand ranges best-first by their bound.
    std::size_t const seeds = std::min<std::size_t>(w.size(), 33);
    std::vector<std::size_t> knots;
    for (std::size_t k = 0; k < seeds; ++k) knots.push_back(seeds == 1 ? 0 : k * (w.size() - 1) / (seeds - 1));
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    for (std::size_t i : knots) visit(i);
    using Range = std::tuple<double, std::size_t, std::size_t>;
    std::priority_queue<Range, std::vector<Range>, std::greater<>> queue;
    auto const push = [&](std::size_t i, std::size_t j) {
        if (j > i + 1) queue.emplace(upper_part(j) + lower_part(i), i, j);
    };
    for (std::size_t k = 0; k + 1 < knots.size(); ++k) push(knots[k], knots[k + 1]);
    while (!queue.empty()) {
        auto const [bound, i, j] = queue.top();
        queue.pop();
        if (bound > best || (bound == best && best_i <= i)) continue;
        std::size_t const m = i + (j - i) / 2;
        visit(m);
        push(i, m);
        push(m, j);
    }
    OscillationResult r;
    r.a = r.lo = r.hi = w[best_i];
    return r;
}

}  // namespace detail

/// Minimizes the lagged two-sided oscillation over the constant a.
inline OscillationResult best_constant(std::span<const double> upper, std::span<const double> lower, double b = 1.0) {
    if (upper.empty() || lower.empty()) throw InputError("best constant: a box contains no lattice cell");
    if (!(b > 0.0 && b <= 1.0)) throw InputError("oscillation exponent must lie in (0, 1]");
    OscillationResult r = b == 1.0 ? detail::linear_minimizer(upper, lower) : detail::concave_minimizer(upper, lower, b);
    r.value = oscillation_objective(upper, lower, r.a, b);
    r.n_upper = upper.size();
    r.n_lower = lower.size();
    return r;
}

template <SpaceTimeField F>
OscillationResult best_constant(F const& u, Box const& upper, Box const& lower, double b = 1.0) {
    std::vector<double> const vu = gather(u, upper), vl = gather(u, lower);
    return best_constant(vu, vl, b);
}

/// Lag selector: R uses the halves, S the quarters.
enum class Lag { R, S };

struct PowerOscillationParams {
    double b = 1.0;
    Lag lag = Lag::S;
};

/// Optional sigma-admissibility check against Omega x (0, T).
struct SigmaCheck {
    double sigma = 1.0;
    double T = 0.0;
};

template <SpaceTimeField F>
OscillationResult power_oscillation(F const& u, ParabolicRectangle const& r, PowerOscillationParams const& params,
                                    std::optional<SigmaCheck> check = std::nullopt) {
    if (check && !admissible(r, check->sigma, u.domain(), check->T))
        throw InputError("rectangle is rejected: its sigma-dilate leaves the cylinder");
    if (params.lag == Lag::S) return best_constant(u, r.upper_quarter(), r.lower_quarter(), params.b);
    return best_constant(u, r.upper_half(), r.lower_half(), params.b);
}

template <SpaceTimeField F>
OscillationResult rectangle_oscillation(F const& u, ParabolicRectangle const& r, std::optional<SigmaCheck> check = std::nullopt) {
    return power_oscillation(u, r, {1.0, Lag::S}, check);
}

// ---------------------------------------------------------------------------
// Rectangle families and the seminorm.

struct FamilyOptions {
    std::size_t max_levels = 6;          ///< dyadic sidelength levels below the top one
    std::size_t centers_per_axis = 8;    ///< cap on spatial centers per axis and level
    std::size_t time_centers = 6;        ///< cap on temporal centers per level
    std::size_t random_count = 64;       ///< seeded random rectangles
    double min_side_cells = 2.0;         ///< smallest sidelength in grid spacings
    std::uint64_t seed = 0;
};

/// Candidate rectangles independent of sigma. Dyadic part: sidelengths
/// L_top 2^-k; centers on a lattice of spacing max(L/2, extent/cap) in space
/// and max(L^p/2, T/cap) in time. Random part: log-uniform L, uniform centers.
inline std::vector<ParabolicRectangle> rectangle_family(SpatialDomain const& dom, double T, double p, FamilyOptions const& opt) {
    if (!(T > 0.0)) throw InputError("time horizon must be positive");
    int const n = dom.dim();
    Point const lo = dom.origin(), hi = dom.upper_corner();
    double const extent = std::max(hi[0] - lo[0], n == 2 ? hi[1] - lo[1] : 0.0);
    double const top = std::min(extent, std::pow(0.5 * T, 1.0 / p));
    double const min_side = opt.min_side_cells * dom.h();
    std::vector<ParabolicRectangle> family;
    auto const axis_centers = [&](double a, double b, double step) {
        std::vector<double> c;
        for (double x = a + step; x < b; x += step) c.push_back(x);
        return c;
    };
    for (std::size_t k = 0; k <= opt.max_levels; ++k) {
        double const L = top * std::exp2(-static_cast<double>(k));
        if (L < min_side) break;
        double const lp = std::pow(L, p);
        double const sx = std::max(0.5 * L, (hi[0] - lo[0]) / static_cast<double>(opt.centers_per_axis));
        double const st = std::max(0.5 * lp, T / static_cast<double>(opt.time_centers));
        std::vector<double> const xs = axis_centers(lo[0], hi[0], sx);
        std::vector<double> ys{0.0};
        if (n == 2) ys = axis_centers(lo[1], hi[1], std::max(0.5 * L, (hi[1] - lo[1]) / static_cast<double>(opt.centers_per_axis)));
        std::vector<double> const ts = axis_centers(0.0, T, st);
        for (double t : ts)
            for (double y : ys)
                for (double x : xs) family.emplace_back(n, Point{x, y}, t, L, p);
    }
    CounterRng rng = CounterRng(opt.seed).split(0x5eed);
    double const lmin = std::min(min_side, top);
    for (std::size_t i = 0; i < opt.random_count; ++i) {
        double const L = lmin * std::exp(rng.uniform() * std::log(top / lmin));
        double const x = rng.uniform(lo[0], hi[0]);
        double const y = n == 2 ? rng.uniform(lo[1], hi[1]) : 0.0;
        double const t = rng.uniform(0.0, T);
        family.emplace_back(n, Point{x, y}, t, L, p);
    }
    return family;
}

struct SeminormEstimate {
    double sigma = 1.0;
    double value = 0.0;
    std::optional<ParabolicRectangle> argmax;
    std::size_t candidates = 0;    ///< size of the candidate list
    std::size_t evaluated = 0;     ///< admissible rectangles with nonempty quarters
};

/// Rectangles of the family whose sigma-dilate lies in the cylinder and whose
/// upper and lower sets both contain lattice cells.
template <SpaceTimeField F>
std::vector<ParabolicRectangle> admissible_family(F const& u, std::vector<ParabolicRectangle> const& family, double sigma, Lag lag = Lag::S) {
    if (!(sigma >= 1.0)) throw InputError("sigma must be at least 1");
    double const T = u.time().horizon();
    std::vector<ParabolicRectangle> out;
    for (auto const& r : family) {
        if (!admissible(r, sigma, u.domain(), T)) continue;
        Box const up = lag == Lag::S ? r.upper_quarter() : r.upper_half();
        Box const dn = lag == Lag::S ? r.lower_quarter() : r.lower_half();
        if (cell_block(u.domain(), u.time(), up).empty() || cell_block(u.domain(), u.time(), dn).empty()) continue;
        out.push_back(r);
    }
    return out;
}

template <SpaceTimeField F>
SeminormEstimate power_seminorm(F const& u, std::vector<ParabolicRectangle> const& family, double sigma, PowerOscillationParams const& params) {
    std::vector<ParabolicRectangle> const adm = admissible_family(u, family, sigma, params.lag);
    if (adm.empty()) throw InputError("no admissible rectangle: the cylinder is too small for this sigma");
    SeminormEstimate est;
    est.sigma = sigma;
    est.candidates = family.size();
    est.value = -1.0;
    std::vector<double> vu, vl;
    for (auto const& r : adm) {
        Box const up = params.lag == Lag::S ? r.upper_quarter() : r.upper_half();
        Box const dn = params.lag == Lag::S ? r.lower_quarter() : r.lower_half();
        gather(u, up, vu);
        gather(u, dn, vl);
        if (vu.empty() || vl.empty()) continue;
        double const v = best_constant(vu, vl, params.b).value;
        ++est.evaluated;
        if (v > est.value) {
            est.value = v;
            est.argmax = r;
        }
    }
    return est;
}

template <SpaceTimeField F>
SeminormEstimate pbmo_seminorm(F const& u, std::vector<ParabolicRectangle> const& family, double sigma) {
    return power_seminorm(u, family, sigma, {1.0, Lag::S});
}

inline std::string format_point(ParabolicRectangle const& r) {
    if (r.dim() == 2) return fmt::format("{:.17g};{:.17g};{:.17g}", r.center()[0], r.center()[1], r.t());
    return fmt::format("{:.17g};{:.17g}", r.center()[0], r.t());
}

}  // namespace pbmo
