#pragma once

#include <functional>
#include <fstream>
#include <string>
#include <vector>

#include "pbmo/john_nirenberg.hpp"

namespace pbmo {

/// Growth constants of the model operator A(Du) = |Du|^{p-2} Du.
struct StructuralConstants {
    double C0 = 1.0;
    double C1 = 1.0;
    double p = 2.0;
};

/// A(g) for the model operator; A(0) = 0.
inline std::array<double, 2> model_flux(std::array<double, 2> const& g, double p, double eps_reg = 0.0) {
    double const m = std::max(std::hypot(g[0], g[1]), eps_reg);
    if (m == 0.0) return {0.0, 0.0};
    double const a = std::pow(m, p - 2.0);
    return {a * g[0], a * g[1]};
}

struct GrowthCheck {
    double max_coercivity_error = 0.0;   ///< max | A.g - |g|^p | / |g|^p
    double max_bound_error = 0.0;        ///< max | |A| - |g|^{p-1} | / |g|^{p-1}
    std::size_t samples = 0;
};

/// Relative deviations from A.g = C0 |g|^p and |A| = C1 |g|^{p-1} on seeded gradients.
inline GrowthCheck check_growth(StructuralConstants const& k, std::size_t samples, std::uint64_t seed) {
    CounterRng rng = CounterRng(seed).split(0x9a0);
    GrowthCheck out;
    out.samples = samples;
    for (std::size_t i = 0; i < samples; ++i) {
        double const m = std::exp(rng.uniform(-6.0, 6.0)), th = rng.uniform(0.0, 2.0 * std::acos(-1.0));
        std::array<double, 2> const g{m * std::cos(th), m * std::sin(th)};
        auto const A = model_flux(g, k.p);
        double const mg = std::hypot(g[0], g[1]);
        double const gp = std::pow(mg, k.p);
        out.max_coercivity_error = std::max(out.max_coercivity_error, std::abs(A[0] * g[0] + A[1] * g[1] - k.C0 * gp) / gp);
        double const gp1 = std::pow(mg, k.p - 1.0);
        out.max_bound_error = std::max(out.max_bound_error, std::abs(std::hypot(A[0], A[1]) - k.C1 * gp1) / gp1);
    }
    return out;
}

using SpaceTimeData = std::function<double(Point const&, double)>;

/// Boundary data: "constant:<v>", "exact:heat_exp", "exact:heat_kernel", or
/// "file:<path>" with a "t,value" table (spatially constant, linear in time).
inline SpaceTimeData parse_boundary(std::string const& spec, int dim) {
    auto const colon = spec.find(':');
    if (colon == std::string::npos) throw InputError(fmt::format("boundary spec '{}' has no kind prefix", spec));
    std::string const kind = spec.substr(0, colon), arg = spec.substr(colon + 1);
    if (kind == "constant") {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(arg, &used);
        } catch (std::exception const&) {
            used = 0;
        }
        if (used != arg.size() || arg.empty() || !(v > 0.0)) throw InputError(fmt::format("boundary constant '{}' must be a positive number", arg));
        return [v](Point const&, double) { return v; };
    }
    if (kind == "exact" && arg == "heat_exp") return [](Point const& x, double t) { return std::exp(x[0] + t); };
    if (kind == "exact" && arg == "heat_kernel") {
        double const n = dim;
        return [n](Point const& x, double t) {
            double const t0 = 0.05, dx = x[0] - 1.1, dy = x[1];
            return 1.0 + std::pow(t0 / (t + t0), 0.5 * n) * std::exp(-(dx * dx + dy * dy) / (4.0 * (t + t0)));
        };
    }
    if (kind == "file") {
        std::ifstream in(arg);
        if (!in) throw InputError(fmt::format("cannot open boundary file '{}'", arg));
        std::string line;
        std::getline(in, line);
        if (line != "t,value") throw InputError(fmt::format("boundary file '{}' must start with header 't,value'", arg));
        std::vector<std::pair<double, double>> rows;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            double t = 0.0, v = 0.0;
            char comma = 0;
            std::istringstream ls(line);
            if (!(ls >> t >> comma >> v) || comma != ',' || !(v > 0.0))
                throw InputError(fmt::format("bad boundary row '{}' in '{}'", line, arg));
            if (!rows.empty() && !(t > rows.back().first)) throw InputError("boundary file times must increase");
            rows.emplace_back(t, v);
        }
        if (rows.empty()) throw InputError(fmt::format("boundary file '{}' has no rows", arg));
        return [rows](Point const&, double t) {
            if (t <= rows.front().first) return rows.front().second;
            if (t >= rows.back().first) return rows.back().second;
            auto const it = std::upper_bound(rows.begin(), rows.end(), t, [](double s, auto const& r) { return s < r.first; });
            auto const& [t1, v1] = *it;
            auto const& [t0, v0] = *(it - 1);
            return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
        };
    }
    throw InputError(fmt::format("unknown boundary spec '{}'", spec));
}

struct SchemeParams {
    double tstep = 0.0;        ///< requested step; 0 uses the stability bound
    double safety = 0.9;       ///< fraction of the stability bound
    double eps_reg = 1e-3;     ///< gradient floor for p < 2
    double min_tstep = 1e-14;
    TimeGrid output;           ///< layers are recorded at their center times
};

struct SupersolutionField {
    GridFunction f;
    double gamma_low = 0.0;    ///< smallest interior value
    StructuralConstants constants;
    std::size_t steps = 0;
    std::size_t rejections = 0;
    double eps_reg = 0.0;
    double max_tstep = 0.0;
};

namespace detail {

/// Interior cells, their axis neighbors (interior index or ghost index), and ghost centers.
struct Stencil {
    std::vector<std::size_t> cells;
    std::vector<std::array<std::ptrdiff_t, 4>> nb;   ///< -1 - ghost for boundary neighbors; order -x, +x, -y, +y
    std::vector<Point> ghosts;

    explicit Stencil(SpatialDomain const& dom) : cells(dom.interior_cells()) {
        std::vector<std::ptrdiff_t> compact(dom.cell_count(), -1);
        for (std::size_t i = 0; i < cells.size(); ++i) compact[cells[i]] = static_cast<std::ptrdiff_t>(i);
        int const n = dom.dim();
        nb.resize(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            auto const ix = static_cast<std::ptrdiff_t>(dom.ix(cells[i])), iy = static_cast<std::ptrdiff_t>(dom.iy(cells[i]));
            std::array<std::array<std::ptrdiff_t, 2>, 4> const off{{{-1, 0}, {1, 0}, {0, -1}, {0, 1}}};
            for (int k = 0; k < 2 * n; ++k) {
                std::ptrdiff_t const jx = ix + off[k][0], jy = iy + off[k][1];
                if (dom.interior(jx, jy)) {
                    nb[i][k] = compact[dom.index(static_cast<std::size_t>(jx), static_cast<std::size_t>(jy))];
                } else {
                    ghosts.push_back({dom.axis_center(0, jx), n == 2 ? dom.axis_center(1, jy) : 0.0});
                    nb[i][k] = -1 - static_cast<std::ptrdiff_t>(ghosts.size() - 1);
                }
            }
        }
    }
};

}  // namespace detail

/// Explicit scheme for d(u^{p-1})/dt = div(|Du|^{p-2} Du) with Dirichlet data
/// at the exterior neighbors of interior cells.
inline SupersolutionField solve_model_equation(std::shared_ptr<const SpatialDomain> dom, double p, SpaceTimeData const& initial,
                                               SpaceTimeData const& boundary, SchemeParams const& scheme) {
    if (!(p > 1.0)) throw InputError("the model equation needs p > 1");
    if (scheme.output.nt == 0) throw InputError("scheme needs an output time grid");
    if (scheme.tstep < 0.0 || !(scheme.safety > 0.0 && scheme.safety <= 1.0)) throw InputError("bad time step policy");
    SpatialDomain const& d = *dom;
    int const n = d.dim();
    double const h = d.h(), q = 1.0 / (p - 1.0);
    detail::Stencil const st(d);
    std::size_t const m = st.cells.size();

    std::vector<double> u(m), w(m), next(m), ghost(st.ghosts.size());
    for (std::size_t i = 0; i < m; ++i) {
        u[i] = initial(d.center(st.cells[i]), 0.0);
        if (!(u[i] > 0.0)) throw InputError("initial data must be positive");
        w[i] = std::pow(u[i], p - 1.0);
    }
    auto const fill_ghosts = [&](double t) {
        for (std::size_t g = 0; g < ghost.size(); ++g) {
            ghost[g] = boundary(st.ghosts[g], t);
            if (!(ghost[g] > 0.0)) throw InputError("boundary data must be positive");
        }
    };
    auto const value = [&](std::vector<double> const& uu, std::ptrdiff_t k) {
        return k >= 0 ? uu[static_cast<std::size_t>(k)] : ghost[static_cast<std::size_t>(-1 - k)];
    };

    SupersolutionField out{GridFunction(dom, scheme.output, 0.0), kInf, {1.0, 1.0, p}, 0, 0, p < 2.0 ? scheme.eps_reg : 0.0, 0.0};
    std::vector<double> tang(m, 0.0), flux_coef(m);
    double const base_bound = h * h / (2.0 * n);

    // Face coefficients |Du|^{p-2} use the normal difference and the mean of
    // the two cells' central tangential differences.
    auto const face_coef = [&](std::size_t i, std::ptrdiff_t j, int axis, double ui, double uj) {
        if (p == 2.0) return 1.0;
        double const dn = (uj - ui) / h;
        double dt = 0.0;
        if (n == 2) {
            double const ti = tang[i * 2 + static_cast<std::size_t>(1 - axis)];
            double const tj = j >= 0 ? tang[static_cast<std::size_t>(j) * 2 + static_cast<std::size_t>(1 - axis)] : ti;
            dt = 0.5 * (ti + tj);
        }
        double const g = std::max(std::hypot(dn, dt), p < 2.0 ? scheme.eps_reg : 0.0);
        return g == 0.0 ? 0.0 : std::pow(g, p - 2.0);
    };

    double t = 0.0;
    for (std::size_t it = 0; it < scheme.output.nt; ++it) {
        double const target = scheme.output.center(it);
        while (t < target) {
            fill_ghosts(t);
            if (p != 2.0 && n == 2) {
                tang.assign(2 * m, 0.0);
                for (std::size_t i = 0; i < m; ++i) {
                    tang[2 * i] = (value(u, st.nb[i][1]) - value(u, st.nb[i][0])) / (2.0 * h);
                    tang[2 * i + 1] = (value(u, st.nb[i][3]) - value(u, st.nb[i][2])) / (2.0 * h);
                }
            }
            // div_i = sum over faces of a_face (u_j - u_i) / h^2.
            double bound = kInf;
            for (std::size_t i = 0; i < m; ++i) {
                double div = 0.0, amax = 0.0;
                for (int k = 0; k < 2 * n; ++k) {
                    std::ptrdiff_t const j = st.nb[i][k];
                    double const uj = value(u, j);
                    double const a = face_coef(i, j, k / 2, u[i], uj);
                    amax = std::max(amax, a);
                    div += a * (uj - u[i]);
                }
                flux_coef[i] = div / (h * h);
                if (amax > 0.0) bound = std::min(bound, base_bound * (p - 1.0) * std::pow(u[i], p - 2.0) / amax);
            }
            double tau = scheme.safety * bound;
            if (p == 2.0) tau = base_bound;
            if (scheme.tstep > 0.0) tau = std::min(tau, scheme.tstep);
            tau = std::min(tau, target - t);
            for (;;) {
                bool ok = true;
                for (std::size_t i = 0; i < m && ok; ++i) {
                    next[i] = w[i] + tau * flux_coef[i];
                    ok = next[i] > 0.0;
                }
                if (ok) break;
                ++out.rejections;
                tau *= 0.5;
                if (tau < scheme.min_tstep) throw ComputationError(fmt::format("positivity lost at t = {}: step halved below {}", t, scheme.min_tstep));
            }
            w.swap(next);
            for (std::size_t i = 0; i < m; ++i) u[i] = p == 2.0 ? w[i] : std::pow(w[i], q);
            out.max_tstep = std::max(out.max_tstep, tau);
            ++out.steps;
            t = target - t <= tau ? target : t + tau;
        }
        for (std::size_t i = 0; i < m; ++i) {
            out.f.at(st.cells[i], it) = u[i];
            out.gamma_low = std::min(out.gamma_low, u[i]);
        }
    }
    if (!(out.gamma_low > 0.0)) throw ComputationError("solution lost positivity");
    return out;
}

/// Tensor-product bump exp(-1/(1 - s^2)) in each variable on a space-time box.
struct Bump {
    Box support;
    double operator()(double s) const { return std::abs(s) < 1.0 ? std::exp(-1.0 / (1.0 - s * s)) : 0.0; }
    double derivative(double s) const {
        if (!(std::abs(s) < 1.0)) return 0.0;
        double const r = 1.0 - s * s;
        return std::exp(-1.0 / r) * (-2.0 * s / (r * r));
    }
};

struct BumpResult {
    Box support;
    double value = 0.0;     ///< the weak-form pairing
    double mass = 0.0;      ///< integral of the bump
    double tol = 0.0;
    bool pass = false;
};

struct SupersolutionVerdict {
    std::vector<BumpResult> bumps;
    std::size_t skipped = 0;
    bool pass = false;
    double min_value = kInf;
};

struct BumpFamily {
    std::size_t count = 32;
    double r_lo = 0.1, r_hi = 0.3;     ///< spatial half-widths
    double rt_lo = 0.05, rt_hi = 0.2;  ///< temporal half-widths
    std::uint64_t seed = 1;
    double rel_tol = 1e-3;
};

/// Weak-form pairing int int (A(Du).Dphi - u^{p-1} phi_t) for seeded bumps, in
/// summation-by-parts form: face differences of phi against face fluxes of u,
/// and time differences of u^{p-1} against phi at the half-layer times. A bump
/// passes when the pairing is at least -rel_tol * mass * scale, with scale the
/// largest |u|^{p-1} on its support.
inline SupersolutionVerdict verify_supersolution(GridFunction const& u, double p, BumpFamily const& fam, std::ostream* warn = nullptr) {
    if (!(p > 1.0)) throw InputError("supersolution check needs p > 1");
    SpatialDomain const& d = u.domain();
    TimeGrid const& time = u.time();
    int const n = d.dim();
    double const h = d.h(), T = time.horizon();
    Point const lo = d.origin(), hi = d.upper_corner();
    CounterRng rng = CounterRng(fam.seed).split(0xb0b);
    Bump const bump{};
    SupersolutionVerdict v;
    for (std::size_t b = 0; b < fam.count; ++b) {
        double const r = rng.uniform(fam.r_lo, fam.r_hi), rt = rng.uniform(fam.rt_lo, fam.rt_hi);
        Box const box{n, {rng.uniform(lo[0] + r, hi[0] - r), n == 2 ? rng.uniform(lo[1] + r, hi[1] - r) : 0.0}, r, rng.uniform(rt, T - rt), rt};
        if (box.t_lo() < time.center(0) || box.t_hi() > time.center(time.nt - 1) || !cube_inside_domain(d, box.center, r + 3.0 * h)) {
            ++v.skipped;
            if (warn) *warn << fmt::format("warning: bump {} skipped: support touches the cylinder boundary\n", b);
            continue;
        }
        auto const phi_x = [&](Point const& x) {
            return bump((x[0] - box.center[0]) / r) * (n == 2 ? bump((x[1] - box.center[1]) / r) : 1.0);
        };
        auto const phi_t = [&](double t) { return bump((t - box.t_center) / rt); };
        auto const cell_at = [&](std::size_t c, std::ptrdiff_t dx, std::ptrdiff_t dy) {
            return d.index(static_cast<std::size_t>(static_cast<std::ptrdiff_t>(d.ix(c)) + dx), static_cast<std::size_t>(static_cast<std::ptrdiff_t>(d.iy(c)) + dy));
        };
        Box grown = box;
        grown.half += h;
        double scale = 0.0, pairing = 0.0, mass = 0.0;
        double const vol = d.cell_volume();
        for_each_cell(d, time, grown, [&](std::size_t c, std::size_t it) {
            Point const x = d.center(c);
            double const px = phi_x(x), pt = phi_t(time.center(it));
            double const w = std::pow(u(c, it), p - 1.0);
            mass += px * pt * vol * time.tstep;
            if (px * pt > 0.0) scale = std::max(scale, std::abs(w));
            if (it + 1 < time.nt) pairing += (std::pow(u(c, it + 1), p - 1.0) - w) * px * phi_t(time.center(it) + 0.5 * time.tstep) * vol;
            if (pt == 0.0) return;
            for (int axis = 0; axis < n; ++axis) {
                std::size_t const e = axis == 0 ? cell_at(c, 1, 0) : cell_at(c, 0, 1);
                double const dphi = phi_x(d.center(e)) - px;
                if (dphi == 0.0) continue;
                double const dn = (u(e, it) - u(c, it)) / h;
                double a = 1.0;
                if (p != 2.0) {
                    double dt = 0.0;
                    if (n == 2) {
                        auto const tangential = [&](std::size_t k) {
                            return axis == 0 ? (u(cell_at(k, 0, 1), it) - u(cell_at(k, 0, -1), it)) / (2.0 * h)
                                             : (u(cell_at(k, 1, 0), it) - u(cell_at(k, -1, 0), it)) / (2.0 * h);
                        };
                        dt = 0.5 * (tangential(c) + tangential(e));
                    }
                    double const g = std::hypot(dn, dt);
                    a = g == 0.0 ? 0.0 : std::pow(g, p - 2.0);
                }
                pairing += a * dn * (dphi / h) * pt * vol * time.tstep;
            }
        });
        BumpResult res;
        res.support = box;
        res.value = pairing;
        res.mass = mass;
        res.tol = fam.rel_tol * mass * scale;
        res.pass = pairing >= -res.tol;
        v.min_value = std::min(v.min_value, pairing);
        v.bumps.push_back(res);
    }
    v.pass = !v.bumps.empty() && std::all_of(v.bumps.begin(), v.bumps.end(), [](BumpResult const& b) { return b.pass; });
    return v;
}

struct Lemma62Report {
    ParabolicRectangle rect;
    double beta = 0.0;        ///< median of log f on R
    double c_prime = 0.0;     ///< median absolute deviation of log f on R
    std::optional<double> exponent_minus = std::nullopt, exponent_plus = std::nullopt;
    double C = 0.0;           ///< largest fitted prefactor
    double exponent = kInf;   ///< smaller fitted exponent; inf when both tails are vacuous
    bool vacuous = false;
    bool pass = false;
};

namespace detail {

/// Power-law fit of normalized superlevel measures: log(m / base) against
/// log(lambda) over samples at or above the floor; needs three samples.
inline std::optional<std::pair<double, double>> power_fit(std::vector<double> const& lambda, std::vector<double> const& measure,
                                                          double base, double floor) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < lambda.size(); ++i)
        if (measure[i] > 0.0 && measure[i] >= floor) {
            x.push_back(std::log(lambda[i]));
            y.push_back(std::log(measure[i] / base));
        }
    if (x.size() < 3) return std::nullopt;
    LineFit const f = fit_line(x, y);
    return std::make_pair(-f.slope, std::exp(f.intercept));
}

}  // namespace detail

/// Superlevel measures {log f > l + beta + C'} on R^- and {log f < -l + beta - C'}
/// on R^+ over a geometric lambda grid of 24 points on [C'/4, 16 C'] (the spread
/// of log f on R replaces C' when the latter vanishes), with power-law fits.
inline Lemma62Report lemma62_rectangle(GridFunction const& f, ParabolicRectangle const& r, double p, double slack = 0.2,
                                       double floor_cells = 10.0) {
    std::vector<double> all, lower, upper;
    gather(f, r.box(), all);
    gather(f, r.lower_half(), lower);
    gather(f, r.upper_half(), upper);
    if (all.empty() || lower.empty() || upper.empty()) throw InputError("rectangle halves contain no lattice cell");
    for (auto* v : {&all, &lower, &upper})
        for (double& x : *v) {
            if (!(x > 0.0)) throw InputError("lemma check needs a positive field");
            x = std::log(x);
        }
    Lemma62Report rep{r};
    rep.beta = median(all);
    std::vector<double> dev(all.size());
    for (std::size_t i = 0; i < all.size(); ++i) dev[i] = std::abs(all[i] - rep.beta);
    rep.c_prime = median(dev);
    double const spread = *std::max_element(dev.begin(), dev.end());
    double const s = rep.c_prime > 0.0 ? rep.c_prime : spread;
    if (!(s > 0.0)) {
        rep.vacuous = rep.pass = true;
        return rep;
    }
    std::vector<double> const lambda = geometric_grid(0.25 * s, 16.0 * s, 24);
    double const cell = f.domain().cell_volume() * f.time().tstep;
    auto const tail = [&](std::vector<double> const& vals, bool above) {
        std::vector<double> m;
        for (double l : lambda) {
            std::size_t k = 0;
            for (double x : vals) k += above ? (x > l + rep.beta + rep.c_prime) : (x < -l + rep.beta - rep.c_prime);
            m.push_back(static_cast<double>(k) * cell);
        }
        return detail::power_fit(lambda, m, static_cast<double>(vals.size()) * cell, floor_cells * cell);
    };
    auto const minus = tail(lower, true), plus = tail(upper, false);
    if (minus) rep.exponent_minus = minus->first, rep.C = std::max(rep.C, minus->second);
    if (plus) rep.exponent_plus = plus->first, rep.C = std::max(rep.C, plus->second);
    rep.vacuous = !minus && !plus;
    rep.exponent = std::min(minus ? minus->first : kInf, plus ? plus->first : kInf);
    rep.pass = rep.exponent >= (p - 1.0) - slack;
    return rep;
}

inline std::vector<Lemma62Report> lemma62_check(GridFunction const& f, std::vector<ParabolicRectangle> const& family, double sigma, double p,
                                                double slack = 0.2) {
    std::vector<Lemma62Report> out;
    for (auto const& r : admissible_family(f, family, sigma, Lag::R)) out.push_back(lemma62_rectangle(f, r, p, slack));
    return out;
}

inline double log_pbmo_exponent(double p) { return std::min((p - 1.0) / 2.0, 1.0); }

struct LogPBMO {
    SeminormEstimate power;   ///< b = min((p-1)/2, 1), lag R
    SeminormEstimate pbmo;    ///< b = 1, lag S
};

inline GridFunction negative_log(GridFunction const& f) {
    return f.transformed([](double v) { return v > 0.0 ? -std::log(v) : 0.0; });
}

inline LogPBMO log_pbmo_check(GridFunction const& f, std::vector<ParabolicRectangle> const& family, double sigma, double p) {
    GridFunction const u = negative_log(f);
    return {power_seminorm(u, family, sigma, {log_pbmo_exponent(p), Lag::R}), pbmo_seminorm(u, family, sigma)};
}

struct GlobalIntegrability {
    double eps = 0.0;
    double integral = 0.0;         ///< on the refined field
    double integral_coarse = 0.0;
    double c = 0.0;                ///< reference constant of -log f
    double delta = 0.0;
    bool stable = false;
};

/// Integral of f^eps over Omega x (0, T - delta).
inline double power_integral(GridFunction const& f, double eps, double delta) {
    double const T = f.time().horizon();
    if (!(delta > 0.0 && delta < T)) throw InputError("delta must lie in (0, T)");
    double sum = 0.0;
    for_each_cell(f.domain(), f.time(), slab(f.domain(), 0.0, T - delta), [&](std::size_t c, std::size_t it) { sum += std::pow(f(c, it), eps); });
    return sum * f.domain().cell_volume() * f.time().tstep;
}

/// Halves eps from 1 until the integral agrees within rel_tol between the two
/// resolutions; reports failure when no eps >= eps_floor is stable.
inline GlobalIntegrability global_integrability(GridFunction const& coarse, GridFunction const& fine, double delta, Point const& z, double p,
                                                double eps_floor = 1.0 / 64, double rel_tol = 0.1) {
    GlobalIntegrability g;
    g.delta = delta;
    GridFunction const u = negative_log(fine);
    g.c = rectangle_oscillation(u, reference_rectangle(fine.domain(), z, fine.time().horizon(), p)).a;
    for (double eps = 1.0; eps >= eps_floor; eps *= 0.5) {
        g.eps = eps;
        g.integral_coarse = power_integral(coarse, eps, delta);
        g.integral = power_integral(fine, eps, delta);
        if (std::isfinite(g.integral) && std::abs(g.integral - g.integral_coarse) <= rel_tol * std::abs(g.integral)) {
            g.stable = true;
            return g;
        }
    }
    return g;
}

}  // namespace pbmo
