#include <gtest/gtest.h>

#include <sstream>

#include "pbmo/john_nirenberg.hpp"

using namespace pbmo;

namespace {

auto unit_square(double h) { return std::make_shared<const SpatialDomain>(domains::box({0, 0}, {1, 1}, h)); }

struct DiskBenchmark {
    std::shared_ptr<const SpatialDomain> dom;
    std::vector<double> values;
    explicit DiskBenchmark(double h) : dom(std::make_shared<const SpatialDomain>(domains::disk({0, 0}, 1.0, h))) {
        values = log_distance_values(*dom, distance_to_boundary(*dom));
    }
    auto field(double tstep, double T = 1.0) const { return stationary_field(dom, TimeGrid::covering(T, tstep), values); }
};

DistributionSamples synthetic(double A, double B) {
    DistributionSamples s;
    s.base_measure = 2.0;
    s.cell_measure = 1e-9;
    s.column_measure = 1e-9;
    s.lambda = jn_lambda_grid(0.1);
    for (double l : s.lambda) s.measure.push_back(A * std::exp(-B * l) * s.base_measure);
    return s;
}

}  // namespace

TEST(Distribution, ConstantGivesZeroMeasures) {
    auto const u = GridFunction(unit_square(1.0 / 16), TimeGrid(8, 0.125), 2.0);
    Box const set = slab(u.domain(), 0.0, 1.0);
    for (Sign sg : {Sign::Plus, Sign::Minus}) {
        DistributionSamples const s = distribution_function(u, set, 2.0, sg, jn_lambda_grid(1.0));
        for (double m : s.measure) EXPECT_EQ(m, 0.0);
        EXPECT_DOUBLE_EQ(s.base_measure, 1.0);
    }
}

TEST(Distribution, UniformDataMatchesLayerCake) {
    double const h = 1.0 / 64;
    auto const u = GridFunction::sample(unit_square(h), TimeGrid(4, 0.25), [](Point const& x, double) { return x[0]; });
    std::vector<double> const lambdas = geometric_grid(0.01, 0.99, 40);
    DistributionSamples const s = distribution_function(u, slab(u.domain(), 0.0, 1.0), 0.0, Sign::Plus, lambdas);
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        EXPECT_NEAR(s.measure[i], 1.0 - lambdas[i], h);
        if (i > 0) {
            EXPECT_LE(s.measure[i], s.measure[i - 1]);
        }
    }
}

TEST(Distribution, NonincreasingOnRandomData) {
    auto const dom = unit_square(1.0 / 16);
    CounterRng rng(31);
    for (int k = 0; k < 20; ++k) {
        auto const u = GridFunction::sample(dom, TimeGrid(8, 0.125), [&](Point const&, double) { return rng.uniform(-3, 3); });
        for (Sign sg : {Sign::Plus, Sign::Minus}) {
            DistributionSamples const s = distribution_function(u, slab(*dom, 0.0, 1.0), rng.uniform(-1, 1), sg, jn_lambda_grid(1.0));
            for (std::size_t i = 1; i < s.measure.size(); ++i) EXPECT_LE(s.measure[i], s.measure[i - 1]);
        }
    }
}

TEST(Distribution, EmptySetIsAnError) {
    auto const u = GridFunction(unit_square(1.0 / 16), TimeGrid(8, 0.125), 0.0);
    Box const outside{2, {5.0, 5.0}, 0.1, 0.5, 0.1};
    EXPECT_THROW(distribution_function(u, outside, 0.0, Sign::Plus, jn_lambda_grid(1.0)), InputError);
}

TEST(TailFit, ExactExponentialData) {
    JNFit const f = fit_exponential_tail(synthetic(3.0, 2.0));
    EXPECT_NEAR(f.A, 3.0, 1e-9);
    EXPECT_NEAR(f.B, 2.0, 1e-9);
    EXPECT_LT(f.residual, 1e-9);
    EXPECT_EQ(f.used, 32u);
}

TEST(TailFit, ShortTailsAreErrors) {
    auto const u = GridFunction(unit_square(1.0 / 16), TimeGrid(8, 0.125), 2.0);
    DistributionSamples const s = distribution_function(u, slab(u.domain(), 0.0, 1.0), 2.0, Sign::Plus, jn_lambda_grid(1.0));
    EXPECT_THROW(fit_exponential_tail(s), ComputationError);
    DistributionSamples few = synthetic(1.0, 1.0);
    for (std::size_t i = 3; i < few.measure.size(); ++i) few.measure[i] = 0.0;
    EXPECT_THROW(fit_exponential_tail(few), ComputationError);
}

TEST(TailFit, ShiftEquivariantBitForBit) {
    auto const dom = unit_square(1.0 / 32);
    auto const u = GridFunction::sample(dom, TimeGrid(16, 1.0 / 16), [](Point const& x, double t) {
        return std::floor(64 * std::exp(3 * x[0] * x[1] + t)) / 64;
    });
    Box const set = slab(*dom, 0.0, 1.0);
    auto const grid = jn_lambda_grid(2.0);
    JNFit const a = fit_exponential_tail(distribution_function(u, set, 1.0, Sign::Plus, grid));
    JNFit const b = fit_exponential_tail(distribution_function(u.transformed([](double v) { return v + 8.0; }), set, 9.0, Sign::Plus, grid));
    EXPECT_EQ(a.A, b.A);
    EXPECT_EQ(a.B, b.B);
    EXPECT_EQ(a.residual, b.residual);
}

TEST(LocalJN, RejectsNonAdmissibleAndFlatData) {
    auto const dom = unit_square(1.0 / 32);
    auto const u = GridFunction(dom, TimeGrid::covering(1.0, fragment_time_step(0.5, 2.0, 2)), 1.0);
    ParabolicRectangle const r(2, {0.5, 0.5}, 0.5, 0.5, 2.0);
    EXPECT_THROW(local_jn(u, r, SigmaCheck{3.0, 1.0}), InputError);
    EXPECT_THROW(local_jn(u, r, SigmaCheck{1.0, 1.0}), ComputationError);
    LocalJN const j = local_jn(u, r, SigmaCheck{1.0, 1.0}, 1.0);
    EXPECT_FALSE(j.plus_fit);
    EXPECT_FALSE(j.minus_fit);
    for (double m : j.plus.measure) EXPECT_EQ(m, 0.0);
}

TEST(LocalJN, ExponentialProfileInsideFragment) {
    // u(x) = -log(x - x0) / 2 on the fragment, so |{u - a > l}| decays like e^{-2 l}.
    double const h = 1.0 / 2048;
    auto const dom = std::make_shared<const SpatialDomain>(domains::interval(0.0, 1.0, h));
    ParabolicRectangle const r(1, {0.5, 0.0}, 0.5, 0.5, 2.0);
    Box const frag = r.upper_fragment();
    double const x0 = frag.lo(0), w = frag.hi(0) - frag.lo(0);
    auto const u = GridFunction::sample(dom, TimeGrid::covering(1.0, fragment_time_step(0.5, 2.0, 4)), [&](Point const& x, double t) {
        if (t > r.t() && x[0] > x0 && x[0] < x0 + w) return -0.5 * std::log((x[0] - x0) / w);
        return 0.0;
    });
    LocalJN const j = local_jn(u, r, SigmaCheck{1.0, 1.0}, 0.5);
    EXPECT_EQ(j.osc.a, 0.0);
    ASSERT_TRUE(j.plus_fit);
    EXPECT_NEAR(j.plus_fit->B, 2.0, 0.1);
    EXPECT_NEAR(j.plus_fit->A, 1.0, 0.1);
    EXPECT_LT(j.plus_fit->residual, 0.05);
}

TEST(LocalJN, BenchmarkOnResolvedRectangles) {
    DiskBenchmark const bench(1.0 / 128);
    for (auto const& [c, L] : std::vector<std::pair<Point, double>>{{{0.2, -0.3}, 0.5}, {{0.3, 0.2}, 0.5}, {{-0.4, 0.3}, 0.4}}) {
        ParabolicRectangle const r(2, c, 0.5, L, 2.0);
        auto const u = bench.field(fragment_time_step(L, 2.0, 2));
        LocalJN const j = local_jn(u, r, SigmaCheck{1.0, 1.0});
        EXPECT_TRUE(j.plus_fit || j.minus_fit);
        for (auto const& f : {j.plus_fit, j.minus_fit})
            if (f) {
                EXPECT_GT(f->B, 0.0);
                EXPECT_LE(f->residual, 0.5);
            }
    }
}

TEST(LocalJN, NearlyConstantFragmentGivesFlatTail) {
    // At the center of the disk the fragment sits at the minimum of -log d:
    // every cell exceeds the small levels and then all drop out at once.
    DiskBenchmark const bench(1.0 / 128);
    ParabolicRectangle const r(2, {0.0, 0.0}, 0.5, 0.6, 2.0);
    LocalJN const j = local_jn(bench.field(fragment_time_step(0.6, 2.0, 2)), r, SigmaCheck{1.0, 1.0});
    EXPECT_FALSE(j.plus_fit);
    ASSERT_TRUE(j.minus_fit);
    EXPECT_EQ(j.minus_fit->B, 0.0);
    EXPECT_EQ(j.minus_fit->A, 1.0);
}

TEST(Reference, LargestAdmissibleRectangle) {
    auto const dom = unit_square(1.0 / 32);
    ParabolicRectangle const r = reference_rectangle(*dom, {0.5, 0.5}, 1.0, 2.0);
    EXPECT_TRUE(admissible(r, 1.0, *dom, 1.0));
    EXPECT_FALSE(admissible(ParabolicRectangle(2, {0.5, 0.5}, 0.5, r.side() * 1.01, 2.0), 1.0, *dom, 1.0));
    EXPECT_EQ(r.t(), 0.5);
    ParabolicRectangle const thin = reference_rectangle(*dom, {0.5, 0.5}, 0.02, 2.0);
    EXPECT_DOUBLE_EQ(thin.side(), 0.1);
}

TEST(GlobalJN, ConstantAndBadDelta) {
    auto const dom = unit_square(1.0 / 32);
    auto const u = GridFunction(dom, TimeGrid(32, 1.0 / 32), 5.0);
    EXPECT_THROW(global_jn(u, {0.5, 0.5}, 1.0, 0.05, 2.0, 1.0, GlobalVariant::Cylinder), ComputationError);
    DistributionSamples const s = distribution_function(u, slab(*dom, 0.05, 1.0), 5.0, Sign::Plus, jn_lambda_grid(1.0));
    for (double m : s.measure) EXPECT_EQ(m, 0.0);
    EXPECT_THROW(global_jn(u, {0.5, 0.5}, 1.0, 1.0, 2.0, 1.0, GlobalVariant::Cylinder), InputError);
    EXPECT_THROW(global_jn(u, {0.5, 0.5}, 2.0, 0.3, 2.0, 1.0, GlobalVariant::Cylinder), InputError);
}

TEST(GlobalJN, BenchmarkDecaysAndIsStableUnderRefinement) {
    std::vector<double> Bs;
    for (double h : {1.0 / 32, 1.0 / 64}) {
        DiskBenchmark const bench(h);
        auto const u = bench.field(1.0 / 64);
        GlobalJN const g = global_jn(u, {0.0, 0.0}, 1.0, 0.05, 2.0, 0.5, GlobalVariant::Cylinder);
        EXPECT_GT(g.fit.B, 0.0);
        EXPECT_LE(g.fit.residual, 0.5);
        Bs.push_back(g.fit.B);
        GlobalJN const rect = global_jn(u, {0.0, 0.0}, 1.0, 0.05, 2.0, 0.5, GlobalVariant::Rectangle);
        EXPECT_GT(rect.fit.B, 0.0);
        EXPECT_EQ(rect.c, g.c);
    }
    EXPECT_GT(Bs[1], 0.5 * Bs[0]);
    EXPECT_LT(Bs[1], 2.0 * Bs[0]);
}

TEST(GlobalJN, ShrinkingDeltaTrend) {
    DiskBenchmark const bench(1.0 / 32);
    auto const u = bench.field(1.0 / 64);
    JNFit prev;
    bool first = true;
    for (double delta : {0.4, 0.2, 0.1, 0.05}) {
        JNFit const f = global_jn(u, {0.0, 0.0}, 1.0, delta, 2.0, 0.5, GlobalVariant::Cylinder).fit;
        if (!first) {
            EXPECT_TRUE(f.A >= prev.A * (1 - 1e-9) || f.B <= prev.B * (1 + 1e-9));
        }
        prev = f;
        first = false;
    }
}

TEST(ExpIntegral, ConstantGivesBaseMeasure) {
    auto const dom = unit_square(1.0 / 16);
    auto const u = GridFunction(dom, TimeGrid(20, 0.05), 3.0);
    IntegrabilityReport const plus = exp_integral(u, 0.25, 2.0, 3.0, Sign::Plus);
    EXPECT_DOUBLE_EQ(plus.integral, 0.75);
    EXPECT_DOUBLE_EQ(plus.layer_cake, 0.75);
    IntegrabilityReport const minus = exp_integral(u, 0.25, 2.0, 3.0, Sign::Minus);
    EXPECT_DOUBLE_EQ(minus.integral, 0.75);
    EXPECT_THROW(exp_integral(u, 0.25, 0.0, 3.0, Sign::Plus), InputError);
    EXPECT_THROW(exp_integral(u, 1.0, 1.0, 3.0, Sign::Plus), InputError);
}

TEST(ExpIntegral, LayerCakeAgreesAndMonotoneInGamma) {
    DiskBenchmark const bench(1.0 / 32);
    auto const u = bench.field(1.0 / 32);
    for (Sign sg : {Sign::Plus, Sign::Minus}) {
        double prev = 0.0;
        for (double gamma : {0.1, 0.25, 0.5, 1.0, 2.0}) {
            IntegrabilityReport const r = exp_integral(u, 0.05, gamma, 0.4, sg);
            EXPECT_NEAR(r.layer_cake / r.integral, 1.0, 0.01);
            EXPECT_GE(r.integral, prev);
            EXPECT_GE(r.integral, r.base_measure);
            prev = r.integral;
        }
    }
}

TEST(ExpIntegral, OracleForLinearProfile) {
    // u = x on the unit square: int_0^1 e^{g x} dx = (e^g - 1) / g per unit time.
    double const h = 1.0 / 256;
    auto const u = GridFunction::sample(unit_square(h), TimeGrid(4, 0.25), [](Point const& x, double) { return x[0]; });
    double const g = 1.5;
    IntegrabilityReport const r = exp_integral(u, 0.5, g, 0.0, Sign::Plus);
    EXPECT_NEAR(r.integral, 0.5 * (std::exp(g) - 1.0) / g, 1e-4);
}

TEST(NormEquivalence, ConventionsAndLowerBound) {
    auto const dom = unit_square(1.0 / 16);
    TimeGrid const time(64, 1.0 / 64);
    auto const family = rectangle_family(*dom, 1.0, 2.0, {});
    NormRatio const flat = norm_equivalence(GridFunction(dom, time, 1.0), family, 2.0);
    EXPECT_EQ(flat.ratio, 1.0);
    auto const u = GridFunction::sample(dom, time, [](Point const& x, double t) { return std::sin(4 * x[0] + 9 * t) + x[1] * t; });
    NormRatio const r = norm_equivalence(u, family, 2.0);
    EXPECT_GE(r.ratio, 1.0);
    EXPECT_THROW(norm_equivalence(u, family, 1.0), InputError);

    auto const step = GridFunction::sample(dom, time, [](Point const&, double t) { return t >= 0.75 ? 1.0 : 0.0; });
    std::vector<ParabolicRectangle> const pair{ParabolicRectangle(2, {0.5, 0.5}, 0.75, 0.5, 2.0), ParabolicRectangle(2, {0.5, 0.5}, 0.25, 0.25, 2.0)};
    NormRatio const inf = norm_equivalence(step, pair, 2.0);
    EXPECT_EQ(inf.denominator, 0.0);
    EXPECT_GT(inf.numerator, 0.0);
    EXPECT_EQ(inf.ratio, kInf);
}

TEST(Reports, CsvLayout) {
    DistributionSamples const s = synthetic(1.0, 1.0);
    std::ostringstream os;
    write_distribution_csv(os, s);
    std::string const text = os.str();
    EXPECT_EQ(text.rfind("lambda,measure\n", 0), 0u);
    EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), s.lambda.size() + 1);
    EXPECT_EQ(jn_summary_header(), "A,B,residual,gamma,c,delta,integral\n");
    std::string const row = jn_summary_row(JNFit{}, 1, 2, 3, 4);
    EXPECT_EQ(std::count(row.begin(), row.end(), ','), 6);
}
