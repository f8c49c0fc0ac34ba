#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "pbmo/pde.hpp"

using namespace pbmo;

namespace {

SchemeParams scheme_with(TimeGrid out, double tstep = 0.0) {
    SchemeParams s;
    s.output = out;
    s.tstep = tstep;
    return s;
}

double max_error(GridFunction const& f, SpaceTimeData const& exact) {
    double err = 0.0;
    for (std::size_t it = 0; it < f.time().nt; ++it)
        for (std::size_t c : f.domain().interior_cells()) err = std::max(err, std::abs(f(c, it) - exact(f.domain().center(c), f.time().center(it))));
    return err;
}

SupersolutionField heat_benchmark(double h, std::size_t nt = 256) {
    auto const dom = std::make_shared<const SpatialDomain>(domains::disk({0, 0}, 1.0, h));
    auto const data = parse_boundary("exact:heat_kernel", 2);
    return solve_model_equation(dom, 2.0, data, data, scheme_with(TimeGrid(nt, 1.0 / static_cast<double>(nt))));
}

std::vector<ParabolicRectangle> heat_family() {
    FamilyOptions opt;
    opt.max_levels = 3;
    opt.seed = 3;
    return rectangle_family(domains::disk({0, 0}, 1.0, 1.0 / 16), 1.0, 2.0, opt);
}

}  // namespace

TEST(Growth, ModelOperatorIdentities) {
    for (double p : {1.3, 2.0, 3.5}) {
        GrowthCheck const g = check_growth({1.0, 1.0, p}, 10000, 5);
        EXPECT_EQ(g.samples, 10000u);
        EXPECT_LT(g.max_coercivity_error, 1e-13);
        EXPECT_LT(g.max_bound_error, 1e-13);
    }
    auto const zero = model_flux({0.0, 0.0}, 1.5);
    EXPECT_EQ(zero[0], 0.0);
    EXPECT_EQ(zero[1], 0.0);
}

TEST(Solver, ConstantDataStaysConstantExactly) {
    auto const dom = std::make_shared<const SpatialDomain>(domains::lshape(1.0, 1.0 / 16));
    for (auto [p, c] : std::vector<std::pair<double, double>>{{2.0, 3.0}, {3.0, 2.0}, {1.5, 4.0}}) {
        auto const data = parse_boundary(fmt::format("constant:{}", c), 2);
        SupersolutionField const s = solve_model_equation(dom, p, data, data, scheme_with(TimeGrid(8, 1.0 / 64)));
        for (std::size_t it = 0; it < 8; ++it)
            for (std::size_t cell : dom->interior_cells()) EXPECT_EQ(s.f(cell, it), c);
        EXPECT_EQ(s.gamma_low, c);
    }
}

TEST(Solver, ExactHeatSolutionConvergesAtSecondOrder) {
    auto const data = parse_boundary("exact:heat_exp", 1);
    std::vector<double> errs;
    for (double h : {1.0 / 32, 1.0 / 64, 1.0 / 128}) {
        auto const dom = std::make_shared<const SpatialDomain>(domains::interval(0.0, 1.0, h));
        errs.push_back(max_error(solve_model_equation(dom, 2.0, data, data, scheme_with(TimeGrid(16, 0.5 / 16), h * h / 4)).f, data));
    }
    EXPECT_LE(errs[1], 5e-3);
    for (std::size_t i = 0; i + 1 < errs.size(); ++i) {
        EXPECT_GE(errs[i] / errs[i + 1], 3.2);
        EXPECT_LE(errs[i] / errs[i + 1], 4.8);
    }
}

TEST(Solver, HeatKernelBenchmarkMatchesExactSolution) {
    auto const data = parse_boundary("exact:heat_kernel", 2);
    double const e1 = max_error(heat_benchmark(1.0 / 16, 64).f, data), e2 = max_error(heat_benchmark(1.0 / 32, 64).f, data);
    EXPECT_LT(e2, 1e-3);
    EXPECT_GT(e1 / e2, 3.0);
}

TEST(Solver, PositivityOnRandomData) {
    auto const dom = std::make_shared<const SpatialDomain>(domains::disk({0, 0}, 1.0, 1.0 / 16));
    CounterRng rng(8);
    for (double p : {1.5, 2.0, 3.0}) {
        for (int k = 0; k < 3; ++k) {
            double const a = rng.uniform(0.5, 3.0), b = rng.uniform(0.1, 2.0), w = rng.uniform(1.0, 6.0);
            SpaceTimeData const init = [=](Point const& x, double) { return a + b * std::sin(w * x[0]) * std::cos(w * x[1]) + b; };
            SpaceTimeData const bnd = [=](Point const&, double) { return a; };
            SupersolutionField const s = solve_model_equation(dom, p, init, bnd, scheme_with(TimeGrid(4, 1.0 / 32)));
            double lo = kInf;
            for (std::size_t it = 0; it < 4; ++it)
                for (std::size_t c : dom->interior_cells()) lo = std::min(lo, s.f(c, it));
            EXPECT_GT(lo, 0.0);
            EXPECT_EQ(s.gamma_low, lo);
        }
    }
}

TEST(Solver, DiscreteMaximumPrincipleForHeat) {
    auto const dom = std::make_shared<const SpatialDomain>(domains::box({0, 0}, {1, 1}, 1.0 / 32));
    SpaceTimeData const init = [](Point const& x, double) { return 1.0 + std::exp(-40 * ((x[0] - 0.4) * (x[0] - 0.4) + (x[1] - 0.6) * (x[1] - 0.6))); };
    SpaceTimeData const bnd = [](Point const&, double) { return 1.0; };
    SupersolutionField const s = solve_model_equation(dom, 2.0, init, bnd, scheme_with(TimeGrid(32, 1.0 / 128)));
    double prev = kInf;
    for (std::size_t it = 0; it < 32; ++it) {
        double m = 0.0, lo = kInf;
        for (std::size_t c : dom->interior_cells()) m = std::max(m, s.f(c, it)), lo = std::min(lo, s.f(c, it));
        EXPECT_LE(m, prev);
        EXPECT_GE(lo, 1.0);
        prev = m;
    }
}

TEST(Solver, Errors) {
    auto const dom = std::make_shared<const SpatialDomain>(domains::interval(0.0, 1.0, 1.0 / 16));
    auto const one = parse_boundary("constant:1", 1);
    SpaceTimeData const zero = [](Point const&, double) { return 0.0; };
    EXPECT_THROW(solve_model_equation(dom, 1.0, one, one, scheme_with(TimeGrid(4, 0.1))), InputError);
    EXPECT_THROW(solve_model_equation(dom, 2.0, zero, one, scheme_with(TimeGrid(4, 0.1))), InputError);
    EXPECT_THROW(solve_model_equation(dom, 2.0, one, zero, scheme_with(TimeGrid(4, 0.1))), InputError);
    EXPECT_THROW(solve_model_equation(dom, 2.0, one, one, SchemeParams{}), InputError);
}

TEST(Boundary, SpecsAndFiles) {
    EXPECT_EQ(parse_boundary("constant:2.5", 2)({0.3, 0.1}, 0.7), 2.5);
    EXPECT_EQ(parse_boundary("exact:heat_exp", 1)({0.5, 0.0}, 0.25), std::exp(0.75));
    EXPECT_DOUBLE_EQ(parse_boundary("exact:heat_kernel", 2)({1.1, 0.0}, 0.0), 2.0);
    for (char const* bad : {"constant:-1", "constant:x", "exact:nope", "constant", "file:/nonexistent/path.csv"})
        EXPECT_THROW(parse_boundary(bad, 2), InputError) << bad;
    auto const path = std::filesystem::temp_directory_path() / "pbmo_boundary_test.csv";
    {
        std::ofstream out(path);
        out << "t,value\n0,1\n1,3\n";
    }
    SpaceTimeData const f = parse_boundary("file:" + path.string(), 2);
    EXPECT_EQ(f({0, 0}, 0.5), 2.0);
    EXPECT_EQ(f({0, 0}, 2.0), 3.0);
    {
        std::ofstream out(path);
        out << "time,value\n0,1\n";
    }
    EXPECT_THROW(parse_boundary("file:" + path.string(), 2), InputError);
    std::filesystem::remove(path);
}

TEST(Supersolution, SpaceFreeExamples) {
    auto const dom = std::make_shared<const SpatialDomain>(domains::box({0, 0}, {1, 1}, 1.0 / 32));
    TimeGrid const time(128, 1.0 / 128);
    BumpFamily fam;
    fam.r_lo = 0.1;
    fam.r_hi = 0.25;
    for (double p : {2.0, 3.0}) {
        auto const up = GridFunction::sample(dom, time, [](Point const&, double t) { return 1.0 + t; });
        auto const down = GridFunction::sample(dom, time, [](Point const&, double t) { return 2.0 - t; });
        SupersolutionVerdict const a = verify_supersolution(up, p, fam), b = verify_supersolution(down, p, fam);
        EXPECT_TRUE(a.pass);
        EXPECT_FALSE(b.pass);
        EXPECT_FALSE(a.bumps.empty());
    }
}

TEST(Supersolution, SpaceFreeSignPattern) {
    // For u(t) the pairing reduces to int (u^{p-1})' phi: the verdict of each
    // bump follows the sign of that integral, computed here by fine quadrature.
    auto const dom = std::make_shared<const SpatialDomain>(domains::box({0, 0}, {1, 1}, 1.0 / 32));
    TimeGrid const time(256, 1.0 / 256);
    double const p = 3.0;
    auto const g = [](double t) { return 2.0 + std::sin(9.0 * t); };
    auto const u = GridFunction::sample(dom, time, [&](Point const&, double t) { return g(t); });
    BumpFamily fam;
    fam.count = 48;
    fam.r_lo = 0.1;
    fam.r_hi = 0.25;
    SupersolutionVerdict const v = verify_supersolution(u, p, fam);
    Bump const bump{};
    std::size_t decided = 0;
    for (BumpResult const& b : v.bumps) {
        double oracle = 0.0;
        std::size_t const m = 20000;
        double const dt = 2.0 * b.support.t_half / m;
        for (std::size_t k = 0; k < m; ++k) {
            double const t = b.support.t_lo() + (static_cast<double>(k) + 0.5) * dt;
            double const wt = (p - 1.0) * std::pow(g(t), p - 2.0) * 9.0 * std::cos(9.0 * t);
            oracle += wt * bump((t - b.support.t_center) / b.support.t_half) * dt;
        }
        double const bump_integral = 0.4439938161680794;
        if (std::abs(oracle) * b.mass / (bump_integral * b.support.t_half) < 10.0 * b.tol) continue;
        ++decided;
        EXPECT_EQ(b.pass, oracle > 0.0);
    }
    EXPECT_GT(decided, 5u);
}

TEST(Supersolution, ExactSolutionsPass) {
    auto const exp1 = parse_boundary("exact:heat_exp", 1);
    auto const line = std::make_shared<const SpatialDomain>(domains::interval(0.0, 1.0, 1.0 / 128));
    BumpFamily fam;
    fam.r_hi = 0.4;
    fam.rt_hi = 0.2;
    SupersolutionVerdict const a = verify_supersolution(GridFunction::sample(line, TimeGrid(128, 0.5 / 128), exp1), 2.0, fam);
    EXPECT_TRUE(a.pass);
    EXPECT_FALSE(a.bumps.empty());
    SupersolutionVerdict const b = verify_supersolution(heat_benchmark(1.0 / 32).f, 2.0, BumpFamily{});
    EXPECT_TRUE(b.pass);
    EXPECT_EQ(b.bumps.size() + b.skipped, 32u);
}

TEST(Supersolution, SkipsBumpsTouchingTheBoundary) {
    auto const dom = std::make_shared<const SpatialDomain>(domains::disk({0, 0}, 1.0, 1.0 / 16));
    auto const u = GridFunction(dom, TimeGrid(32, 1.0 / 32), 1.0);
    BumpFamily fam;
    fam.r_lo = 0.6;
    fam.r_hi = 0.9;
    std::ostringstream warn;
    SupersolutionVerdict const v = verify_supersolution(u, 2.0, fam, &warn);
    EXPECT_EQ(v.skipped, fam.count);
    EXPECT_FALSE(v.pass);
    EXPECT_NE(warn.str().find("warning: bump"), std::string::npos);
    EXPECT_THROW(verify_supersolution(u, 1.0, fam), InputError);
}

TEST(Lemma62, ConstantFieldIsVacuous) {
    auto const dom = std::make_shared<const SpatialDomain>(domains::box({0, 0}, {1, 1}, 1.0 / 16));
    auto const f = GridFunction(dom, TimeGrid(64, 1.0 / 64), 3.0);
    for (Lemma62Report const& r : lemma62_check(f, rectangle_family(*dom, 1.0, 2.0, {}), 1.0, 2.0)) {
        EXPECT_TRUE(r.vacuous);
        EXPECT_TRUE(r.pass);
        EXPECT_DOUBLE_EQ(r.beta, std::log(3.0));
    }
}

TEST(Lemma62, ScalingShiftsBetaOnly) {
    SupersolutionField const s = heat_benchmark(1.0 / 16, 128);
    GridFunction const twice = s.f.transformed([](double v) { return 2.0 * v; });
    auto const family = heat_family();
    std::size_t compared = 0;
    for (std::size_t i = 0; i < family.size(); i += 7) {
        ParabolicRectangle const& r = family[i];
        if (!admissible(r, 1.0, s.f.domain(), 1.0)) continue;
        Lemma62Report const a = lemma62_rectangle(s.f, r, 2.0), b = lemma62_rectangle(twice, r, 2.0);
        EXPECT_NEAR(b.beta - a.beta, std::log(2.0), 1e-12);
        EXPECT_NEAR(b.c_prime, a.c_prime, 1e-12);
        EXPECT_EQ(a.vacuous, b.vacuous);
        if (a.exponent_minus && b.exponent_minus) {
            EXPECT_NEAR(*a.exponent_minus, *b.exponent_minus, 1e-9);
        }
        ++compared;
    }
    EXPECT_GT(compared, 10u);
}

TEST(Lemma62, HeatBenchmarkDecay) {
    SupersolutionField const s = heat_benchmark(1.0 / 32, 512);
    auto const reports = lemma62_check(s.f, heat_family(), 1.0, 2.0);
    ASSERT_FALSE(reports.empty());
    std::size_t pass = 0;
    for (auto const& r : reports) pass += r.pass;
    EXPECT_GE(static_cast<double>(pass), 0.9 * static_cast<double>(reports.size()));
}

TEST(LogPBMO, ConstantScalingAndStability) {
    auto const family = heat_family();
    auto const dom = std::make_shared<const SpatialDomain>(domains::disk({0, 0}, 1.0, 1.0 / 16));
    LogPBMO const flat = log_pbmo_check(GridFunction(dom, TimeGrid(128, 1.0 / 128), 5.0), family, 1.0, 2.0);
    EXPECT_EQ(flat.power.value, 0.0);
    EXPECT_EQ(flat.pbmo.value, 0.0);
    EXPECT_EQ(log_pbmo_exponent(2.0), 0.5);
    EXPECT_EQ(log_pbmo_exponent(4.0), 1.0);

    SupersolutionField const coarse = heat_benchmark(1.0 / 16, 512), fine = heat_benchmark(1.0 / 32, 512);
    LogPBMO const a = log_pbmo_check(coarse.f, family, 1.0, 2.0);
    LogPBMO const scaled = log_pbmo_check(coarse.f.transformed([](double v) { return 3.0 * v; }), family, 1.0, 2.0);
    EXPECT_NEAR(scaled.power.value, a.power.value, 1e-12 * a.power.value);
    EXPECT_NEAR(scaled.pbmo.value, a.pbmo.value, 1e-12 * a.pbmo.value);
    LogPBMO const b = log_pbmo_check(fine.f, family, 1.0, 2.0);
    EXPECT_GT(a.power.value, 0.0);
    EXPECT_NEAR(b.power.value / a.power.value, 1.0, 0.2);
}

TEST(GlobalIntegrability, UnitFieldAndMonotonicity) {
    auto const dom = std::make_shared<const SpatialDomain>(domains::disk({0, 0}, 1.0, 1.0 / 16));
    auto const fine_dom = std::make_shared<const SpatialDomain>(domains::disk({0, 0}, 1.0, 1.0 / 32));
    TimeGrid const time(32, 1.0 / 32);
    GridFunction const one(dom, time, 1.0), one_fine(fine_dom, time, 1.0);
    for (double eps : {0.05, 0.5, 1.0}) EXPECT_DOUBLE_EQ(power_integral(one, eps, 0.25), dom->interior_measure() * 0.75);
    GlobalIntegrability const g = global_integrability(one, one_fine, 0.25, {0, 0}, 2.0);
    EXPECT_TRUE(g.stable);
    EXPECT_EQ(g.eps, 1.0);

    auto const big = GridFunction::sample(dom, time, [](Point const& x, double t) { return 1.0 + 5.0 * x[0] * x[0] + t; });
    double prev = 0.0;
    for (double eps : {0.1, 0.2, 0.5, 1.0, 2.0}) {
        double const v = power_integral(big, eps, 0.25);
        EXPECT_GE(v, prev);
        prev = v;
    }
    EXPECT_THROW(power_integral(big, 1.0, 1.0), InputError);

    GridFunction const wild(fine_dom, time, 1e6);
    GlobalIntegrability const bad = global_integrability(one, wild, 0.25, {0, 0}, 2.0);
    EXPECT_FALSE(bad.stable);
}

TEST(GlobalIntegrability, HeatBenchmarkIsStable) {
    SupersolutionField const a = heat_benchmark(1.0 / 16, 64), b = heat_benchmark(1.0 / 32, 64);
    GlobalIntegrability const g = global_integrability(a.f, b.f, 0.1, {0, 0}, 2.0);
    EXPECT_TRUE(g.stable);
    EXPECT_GE(g.eps, 0.05);
    EXPECT_GT(g.integral, 0.0);
}
