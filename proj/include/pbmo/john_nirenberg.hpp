#pragma once

#include <ostream>
#include <vector>

#include <fmt/format.h>

#include "pbmo/oscillation.hpp"

namespace pbmo {

enum class Sign { Plus, Minus };

/// Superlevel measures of (u - c)^+ (plus) or (c - u)^+ (minus) on a set.
struct DistributionSamples {
    std::vector<double> lambda;
    std::vector<double> measure;
    double base_measure = 0.0;   ///< grid measure of the set (or of the normalizing set)
    double cell_measure = 0.0;   ///< measure of one space-time cell
    double column_measure = 0.0; ///< one spatial cell times the time layers of the set
    double c = 0.0;
    Sign sign = Sign::Plus;
};

struct JNFit {
    double A = 0.0;
    double B = 0.0;
    double residual = 0.0;       ///< rms residual of the log-scale fit
    double lambda_lo = 0.0, lambda_hi = 0.0;
    std::size_t used = 0;
};

/// Spatial values of -log d(x, complement) on interior cells (0 elsewhere).
inline std::vector<double> log_distance_values(SpatialDomain const& dom, DistanceField const& dist) {
    std::vector<double> v(dom.cell_count(), 0.0);
    for (std::size_t c : dom.interior_cells()) v[c] = -std::log(dist[c]);
    return v;
}

/// Time step giving each fragment of a side-L rectangle `layers` time cells.
inline double fragment_time_step(double L, double p, double layers) {
    return 0.5 * std::pow(kFragmentRatio * L, p) / layers;
}

/// 32 geometric points on [0.05, 20] times the scale.
inline std::vector<double> jn_lambda_grid(double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw InputError("lambda scale must be positive");
    return geometric_grid(0.05 * scale, 20.0 * scale, 32);
}

/// Space-time slab over the whole bounding box of the domain, times in [t0, t1).
inline Box slab(SpatialDomain const& dom, double t0, double t1) {
    Point const lo = dom.origin(), hi = dom.upper_corner();
    double const half = 0.5 * std::max(hi[0] - lo[0], dom.dim() == 2 ? hi[1] - lo[1] : 0.0) + dom.h();
    return {dom.dim(), {0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])}, half, 0.5 * (t0 + t1), 0.5 * (t1 - t0)};
}

namespace detail {

template <SpaceTimeField F>
std::vector<double> deviations(F const& u, Box const& set, double c, Sign sign) {
    std::vector<double> w;
    for_each_cell(u.domain(), u.time(), set, [&](std::size_t cell, std::size_t it) {
        double const v = u(cell, it);
        w.push_back(positive_part(sign == Sign::Plus ? v - c : c - v));
    });
    return w;
}

}  // namespace detail

template <SpaceTimeField F>
DistributionSamples distribution_function(F const& u, Box const& set, double c, Sign sign, std::vector<double> lambdas) {
    std::vector<double> w = detail::deviations(u, set, c, sign);
    if (w.empty()) throw InputError("distribution function: the set contains no lattice cell");
    std::sort(w.begin(), w.end());
    DistributionSamples s;
    s.cell_measure = u.domain().cell_volume() * u.time().tstep;
    s.base_measure = static_cast<double>(w.size()) * s.cell_measure;
    CellBlock const blk = cell_block(u.domain(), u.time(), set);
    s.column_measure = s.cell_measure * static_cast<double>(blk.it1 - blk.it0);
    s.c = c;
    s.sign = sign;
    s.lambda = std::move(lambdas);
    for (double lam : s.lambda) {
        auto const above = static_cast<std::size_t>(w.end() - std::upper_bound(w.begin(), w.end(), lam));
        s.measure.push_back(static_cast<double>(above) * s.cell_measure);
    }
    return s;
}

/// Least squares of log(measure / base) against lambda over samples at or
/// above the noise floor, counted in spatial cells per time layer. Fewer than
/// four usable samples is an error.
inline JNFit fit_exponential_tail(DistributionSamples const& s, double floor_cells = 10.0) {
    std::vector<double> x, y;
    double const floor = floor_cells * s.column_measure;
    for (std::size_t i = 0; i < s.lambda.size(); ++i)
        if (s.measure[i] > 0.0 && s.measure[i] >= floor) {
            x.push_back(s.lambda[i]);
            y.push_back(std::log(s.measure[i] / s.base_measure));
        }
    if (x.size() < 4) throw ComputationError("tail too short to fit: fewer than 4 positive samples above the noise floor");
    LineFit const f = fit_line(x, y);
    JNFit fit;
    fit.A = std::exp(f.intercept);
    fit.B = -f.slope;
    fit.residual = f.rms_residual;
    fit.lambda_lo = x.front();
    fit.lambda_hi = x.back();
    fit.used = x.size();
    return fit;
}

struct LocalJN {
    OscillationResult osc;
    DistributionSamples plus, minus;
    std::optional<JNFit> plus_fit, minus_fit;   ///< empty when the tail is too short
};

/// Tails of (u - a_R)^+ on U^+ and (a_R - u)^+ on U^-; the lambda grid is
/// scaled by `scale` (the rectangle's own oscillation when scale <= 0).
template <SpaceTimeField F>
LocalJN local_jn(F const& u, ParabolicRectangle const& r, SigmaCheck check, double scale = 0.0, double floor_cells = 10.0) {
    LocalJN out;
    out.osc = rectangle_oscillation(u, r, check);
    double const s = scale > 0.0 ? scale : out.osc.value;
    if (!(s > 0.0)) throw ComputationError("local tails are empty: the rectangle has zero oscillation");
    auto const grid = jn_lambda_grid(s);
    out.plus = distribution_function(u, r.upper_fragment(), out.osc.a, Sign::Plus, grid);
    out.minus = distribution_function(u, r.lower_fragment(), out.osc.a, Sign::Minus, grid);
    try {
        out.plus_fit = fit_exponential_tail(out.plus, floor_cells);
    } catch (ComputationError const&) {
    }
    try {
        out.minus_fit = fit_exponential_tail(out.minus, floor_cells);
    } catch (ComputationError const&) {
    }
    return out;
}

/// Largest sigma-admissible rectangle centered at (z, T/2), by bisection on L.
inline ParabolicRectangle reference_rectangle(SpatialDomain const& dom, Point const& z, double T, double p, double sigma = 1.0) {
    Point const lo = dom.origin(), hi = dom.upper_corner();
    double const extent = std::max(hi[0] - lo[0], dom.dim() == 2 ? hi[1] - lo[1] : 0.0);
    double a = 0.0, b = std::min(extent, std::pow(0.5 * T, 1.0 / p) / sigma);
    auto const ok = [&](double L) { return L > 0.0 && admissible(ParabolicRectangle(dom.dim(), z, 0.5 * T, L, p), sigma, dom, T); };
    if (ok(b)) {
        a = b;
    } else {
        for (int i = 0; i < 80; ++i) {
            double const m = 0.5 * (a + b);
            (ok(m) ? a : b) = m;
        }
    }
    if (!(a > 0.0)) throw InputError("no admissible reference rectangle at the distinguished point");
    return {dom.dim(), z, 0.5 * T, a, p};
}

enum class GlobalVariant { Cylinder, Rectangle };

struct GlobalJN {
    ParabolicRectangle reference;
    double c = 0.0;
    Box base;
    DistributionSamples samples;
    JNFit fit;
};

/// Cylinder variant: tail of (u - c)^+ over Omega x (delta q^p, T).
/// Rectangle variant: tail over R_delta^+ = Q x (tau - (1 - delta) L^p, tau + L^p)
/// of the reference rectangle, normalized by |R|.
template <SpaceTimeField F>
GlobalJN global_jn(F const& u, Point const& z, double q, double delta, double p, double scale, GlobalVariant variant,
                   double floor_cells = 10.0) {
    SpatialDomain const& dom = u.domain();
    double const T = u.time().horizon();
    GlobalJN g;
    g.reference = reference_rectangle(dom, z, T, p);
    g.c = rectangle_oscillation(u, g.reference).a;
    auto const grid = jn_lambda_grid(scale);
    if (variant == GlobalVariant::Cylinder) {
        double const t0 = delta * std::pow(q, p);
        if (!(t0 < T)) throw InputError("global tail: delta q^p must stay below T");
        g.base = slab(dom, t0, T);
        g.samples = distribution_function(u, g.base, g.c, Sign::Plus, grid);
    } else {
        if (!(delta > 0.0 && delta < 2.0)) throw InputError("rectangle tail: delta must lie in (0, 2)");
        ParabolicRectangle const& r = g.reference;
        double const lp = r.time_scale();
        g.base = {dom.dim(), r.center(), 0.5 * r.side(), r.t() + 0.5 * delta * lp, (1.0 - 0.5 * delta) * lp};
        g.samples = distribution_function(u, g.base, g.c, Sign::Plus, grid);
        g.samples.base_measure = grid_measure(dom, u.time(), r.box());
    }
    g.fit = fit_exponential_tail(g.samples, floor_cells);
    return g;
}

struct IntegrabilityReport {
    double gamma = 0.0;
    double c = 0.0;
    double delta = 0.0;
    Sign sign = Sign::Plus;
    double integral = 0.0;       ///< direct quadrature
    double layer_cake = 0.0;     ///< |base| + int_0^inf gamma e^{gamma l} |{w > l}| dl, trapezoid rule
    double base_measure = 0.0;
};

/// Plus: e^{gamma (u - c)^+} over Omega x (delta, T). Minus: e^{gamma (c - u)^+} over Omega x (0, T - delta).
template <SpaceTimeField F>
IntegrabilityReport exp_integral(F const& u, double delta, double gamma, double c, Sign sign, std::size_t layer_points = 4096) {
    if (!(gamma > 0.0)) throw InputError("exponential integrability: gamma must be positive");
    double const T = u.time().horizon();
    if (!(delta >= 0.0 && delta < T)) throw InputError("exponential integrability: delta must lie in [0, T)");
    Box const base = sign == Sign::Plus ? slab(u.domain(), delta, T) : slab(u.domain(), 0.0, T - delta);
    std::vector<double> w = detail::deviations(u, base, c, sign);
    if (w.empty()) throw InputError("exponential integrability: empty base set");
    double const cell = u.domain().cell_volume() * u.time().tstep;
    IntegrabilityReport r;
    r.gamma = gamma;
    r.c = c;
    r.delta = delta;
    r.sign = sign;
    r.base_measure = static_cast<double>(w.size()) * cell;
    double sum = 0.0;
    for (double v : w) sum += std::exp(gamma * v);
    r.integral = sum * cell;

    std::sort(w.begin(), w.end());
    double const top = w.back();
    double tail = 0.0;
    if (top > 0.0) {
        double const dl = top / static_cast<double>(layer_points);
        auto const m = [&](double lam) {
            return static_cast<double>(w.end() - std::upper_bound(w.begin(), w.end(), lam)) * cell;
        };
        double prev = gamma * m(0.0);
        for (std::size_t i = 1; i <= layer_points; ++i) {
            double const lam = dl * static_cast<double>(i);
            double const cur = gamma * std::exp(gamma * lam) * m(lam);
            tail += 0.5 * (prev + cur) * dl;
            prev = cur;
        }
    }
    r.layer_cake = r.base_measure + tail;
    return r;
}

struct NormRatio {
    double numerator = 0.0;      ///< sigma = 1 estimate
    double denominator = 0.0;    ///< sigma estimate
    double ratio = 1.0;
};

/// seminorm(sigma = 1) / seminorm(sigma) on one candidate family; 0/0 := 1, x/0 := inf.
template <SpaceTimeField F>
NormRatio norm_equivalence(F const& u, std::vector<ParabolicRectangle> const& family, double sigma) {
    if (!(sigma > 1.0)) throw InputError("norm equivalence needs sigma > 1");
    NormRatio r;
    r.numerator = pbmo_seminorm(u, family, 1.0).value;
    r.denominator = pbmo_seminorm(u, family, sigma).value;
    if (r.denominator == 0.0)
        r.ratio = r.numerator == 0.0 ? 1.0 : kInf;
    else
        r.ratio = r.numerator / r.denominator;
    return r;
}

inline void write_distribution_csv(std::ostream& out, DistributionSamples const& s) {
    out << "lambda,measure\n";
    for (std::size_t i = 0; i < s.lambda.size(); ++i) out << fmt::format("{:.17g},{:.17g}\n", s.lambda[i], s.measure[i]);
}

inline std::string jn_summary_header() { return "A,B,residual,gamma,c,delta,integral\n"; }

inline std::string jn_summary_row(JNFit const& f, double gamma, double c, double delta, double integral) {
    return fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", f.A, f.B, f.residual, gamma, c, delta, integral);
}

}  // namespace pbmo
