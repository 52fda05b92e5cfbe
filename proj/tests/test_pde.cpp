#include "oracles.hpp"

#include <wolffkit/pde.hpp>

#include <gtest/gtest.h>

using namespace wolffkit;

namespace {

SolveConfig box_config(double p, int res, int levels = 3) {
    SolveConfig cfg;
    cfg.p = p;
    cfg.grid = Domain::cube(3, 1.0, res);
    cfg.ladder_levels = levels;
    return cfg;
}

ScalarField bump_density(const Domain& d, Point c, double radius, double height) {
    ScalarField f(d);
    Point x(d.dim());
    for (std::size_t i = 0; i < d.cell_count(); ++i) {
        d.cell_center(i, x.data());
        const double r2 = squared_distance(x.data(), c.data(), d.dim()) / (radius * radius);
        if (r2 < 1.0) f[i] = height * (1.0 - r2);
    }
    return f;
}

}  // namespace

TEST(Truncate, Examples) {
    const Domain d = Domain::cube(2, 1.0, 4);
    const ScalarField hi = truncate(ScalarField(d, 5.0), 3.0), lo = truncate(ScalarField(d, -5.0), 3.0);
    for (double v : hi.values()) EXPECT_EQ(v, 3.0);
    for (double v : lo.values()) EXPECT_EQ(v, -3.0);
    oracle::Gen gen(301);
    const ScalarField u = gen.field(d, -2.0, 2.0);
    const ScalarField t = truncate(u, 2.0);
    for (std::size_t i = 0; i < u.size(); ++i) EXPECT_EQ(t[i], u[i]);
    EXPECT_THROW(truncate(u, 0.0), ParameterError);
}

TEST(Truncate, IdempotentAndOdd) {
    oracle::Gen gen(302);
    const Domain d = Domain::cube(2, 1.0, 8);
    for (int trial = 0; trial < 10; ++trial) {
        const ScalarField u = gen.field(d, -10.0, 10.0);
        const double k = gen.uniform(0.1, 8.0);
        const ScalarField t = truncate(u, k);
        ScalarField neg = u;
        for (double& v : neg.values()) v = -v;
        const ScalarField tn = truncate(neg, k);
        const ScalarField tt = truncate(t, k);
        for (std::size_t i = 0; i < u.size(); ++i) {
            EXPECT_EQ(tt[i], t[i]);
            EXPECT_EQ(tn[i], -t[i]);
        }
    }
}

TEST(SolveConfig, Validation) {
    auto cfg = box_config(3.0, 8);
    EXPECT_THROW(cfg.validate(), ParameterError);
    cfg = box_config(2.0, 8);
    cfg.tolerance = 0.0;
    EXPECT_THROW(cfg.validate(), ParameterError);
    cfg = box_config(2.0, 8);
    EXPECT_GT(cfg.regularization(), 0.0);
}

TEST(SolveRegularized, ZeroDataGivesZero) {
    for (const auto& g : {AbsorptionSpec::none(), AbsorptionSpec::power(1.5), AbsorptionSpec::exponential(1.0, 1.0)}) {
        const auto cfg = box_config(1.6, 8);
        const auto sol = solve_regularized(ScalarField(cfg.grid), g, cfg);
        EXPECT_TRUE(sol.converged);
        EXPECT_EQ(sol.u.max_abs(), 0.0);
    }
}

TEST(SolveRegularized, LinearCaseSolvesDiscreteLaplacian) {
    const auto cfg = box_config(2.0, 12);
    const ScalarField f = bump_density(cfg.grid, {0.1, -0.1, 0.0}, 0.6, 3.0);
    const auto sol = solve_regularized(f, AbsorptionSpec::none(), cfg);
    EXPECT_TRUE(sol.converged);
    EXPECT_LE(sol.residual, cfg.tolerance * std::max(1.0, f.max_abs()));
    EXPECT_LE(sol.newton_iterations, 3);
}

TEST(SolveRegularized, BoundaryLayerPinned) {
    const auto cfg = box_config(1.7, 10);
    const ScalarField f = bump_density(cfg.grid, {0.0, 0.0, 0.0}, 0.7, 5.0);
    const auto sol = solve_regularized(f, AbsorptionSpec::power(2.0), cfg);
    int idx[3];
    for (std::size_t c = 0; c < cfg.grid.cell_count(); ++c) {
        cfg.grid.multi_index(c, idx);
        const bool edge = idx[0] == 0 || idx[1] == 0 || idx[2] == 0 || idx[0] == 9 || idx[1] == 9 || idx[2] == 9;
        if (edge) {
            EXPECT_EQ(sol.u[c], 0.0);
        }
    }
}

TEST(SolveRegularized, EnergyDecreasesAndSignPreserved) {
    for (double p : {1.5, 2.0, 2.5}) {
        for (const auto& g : {AbsorptionSpec::none(), AbsorptionSpec::power(p), AbsorptionSpec::exponential(0.5, 1.5)}) {
            const auto cfg = box_config(p, 10);
            const ScalarField f = bump_density(cfg.grid, {0.2, 0.0, -0.1}, 0.6, 10.0);
            const auto sol = solve_regularized(f, g, cfg);
            EXPECT_TRUE(sol.converged) << p;
            for (std::size_t i = 1; i < sol.energy_trace.size(); ++i)
                EXPECT_LT(sol.energy_trace[i], sol.energy_trace[i - 1] + 1e-12 * std::abs(sol.energy_trace[i - 1]));
            for (double v : sol.u.values()) EXPECT_GE(v, -1e-10);
        }
    }
}

TEST(SolveRegularized, ComparisonPrinciple) {
    oracle::Gen gen(303);
    for (int trial = 0; trial < 4; ++trial) {
        const double p = gen.uniform(1.4, 2.6);
        const auto cfg = box_config(p, 10);
        const ScalarField f1 = gen.field(cfg.grid, -1.0, 3.0);
        ScalarField f2 = f1;
        for (double& v : f2.values()) v += gen.uniform(0.0, 2.0);
        const auto g = AbsorptionSpec::power(gen.uniform(p - 0.9, 3.0));
        const auto u1 = solve_regularized(f1, g, cfg);
        const auto u2 = solve_regularized(f2, g, cfg);
        ASSERT_TRUE(u1.converged && u2.converged);
        for (std::size_t i = 0; i < u1.u.size(); ++i) EXPECT_LE(u1.u[i], u2.u[i] + 1e-8);
    }
}

TEST(SolveRegularized, AbsorptionMassBoundedByData) {
    oracle::Gen gen(304);
    for (int trial = 0; trial < 4; ++trial) {
        const double p = gen.uniform(1.4, 2.6);
        const auto cfg = box_config(p, 10);
        const ScalarField f = gen.field(cfg.grid, -20.0, 20.0);
        const auto g = trial % 2 ? AbsorptionSpec::power(gen.uniform(p - 0.9, 3.0))
                                 : AbsorptionSpec::exponential(gen.uniform(0.2, 2.0), 1.0);
        const auto sol = solve_regularized(f, g, cfg);
        ASSERT_TRUE(sol.converged);
        EXPECT_LE(sol.absorption.integral_abs(), f.integral_abs() * (1.0 + 1e-6));
    }
}

TEST(SolveRegularized, OddInData) {
    const auto cfg = box_config(1.8, 10);
    const ScalarField f = bump_density(cfg.grid, {0.1, 0.0, 0.0}, 0.5, 8.0);
    ScalarField nf = f;
    for (double& v : nf.values()) v = -v;
    const auto g = AbsorptionSpec::power(1.5);
    const auto a = solve_regularized(f, g, cfg);
    const auto b = solve_regularized(nf, g, cfg);
    for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(a.u[i], -b.u[i], 1e-9 * std::max(1.0, a.u.max_abs()));
}

TEST(SolveRegularized, GreenFunctionCoarse) {
    // Unit ball, unit atom mollified over a couple of cells: away from the
    // atom u tracks (1/4pi)(1/|x| - 1).
    SolveConfig cfg;
    cfg.p = 2.0;
    cfg.grid = Domain::cube(3, 1.0, 32);
    cfg.ball = BallMask{{0.0, 0.0, 0.0}, 1.0};
    cfg.ladder_levels = 1;
    Measure mu;
    mu.atoms.push_back({Point{0.0, 0.0, 0.0}, 1.0});
    const auto sol = solve_measure(mu, AbsorptionSpec::none(), cfg);
    EXPECT_TRUE(sol.converged);
    double worst = 0.0;
    for (std::size_t c = 0; c < cfg.grid.cell_count(); ++c) {
        const Point x = cfg.grid.cell_center(c);
        const double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
        if (r < 0.35 || r > 0.75) continue;
        const double exact = (1.0 / r - 1.0) / (4.0 * std::numbers::pi);
        worst = std::max(worst, std::abs(sol.u[c] - exact) / exact);
    }
    EXPECT_LT(worst, 0.10);
}

TEST(SolveMeasure, ZeroMeasure) {
    const auto sol = solve_measure(Measure{}, AbsorptionSpec::power(1.5), box_config(2.0, 8));
    EXPECT_EQ(sol.u.max_abs(), 0.0);
}

TEST(SolveMeasure, LadderDiagnosticsAndSandwich) {
    const auto cfg = box_config(2.0, 16, 3);
    SignedMeasure mu;
    mu.positive.atoms.push_back({Point{0.3, 0.0, 0.0}, 1.0});
    mu.negative.atoms.push_back({Point{-0.3, 0.1, 0.0}, 0.5});
    const auto sol = solve_measure(mu, AbsorptionSpec::power(1.5), cfg);
    ASSERT_EQ(sol.levels.size(), 3u);
    EXPECT_TRUE(sol.sandwich_checked);
    EXPECT_LE(sol.sandwich_violation, 1e-8);
    for (std::size_t l = 1; l < sol.levels.size(); ++l) {
        EXPECT_LT(sol.levels[l].bandwidth, sol.levels[l - 1].bandwidth);
        EXPECT_GE(sol.levels[l].u_l1_change, 0.0);
    }
    EXPECT_LE(sol.absorption.integral_abs(), mu.total_variation() * (1.0 + 1e-6));
    const auto bands = ladder_bandwidths(cfg);
    EXPECT_NEAR(bands.back(), 1.6 * cfg.grid.cell_width(), 1e-15);
    EXPECT_NEAR(bands.front(), 4.0 * bands.back(), 1e-15);
}

TEST(SolveMeasure, DensityPlusAtomLadderMassesIncrease) {
    auto cfg = box_config(1.8, 12, 4);
    Measure mu;
    mu.density = bump_density(cfg.grid, {0.0, 0.0, 0.0}, 0.6, 4.0);
    mu.atoms.push_back({Point{0.2, 0.2, 0.2}, 0.3});
    const auto sol = solve_measure(mu, AbsorptionSpec::power(2.0), cfg);
    for (std::size_t l = 1; l < sol.levels.size(); ++l)
        EXPECT_GE(sol.levels[l].data_mass, sol.levels[l - 1].data_mass - 1e-9);
    EXPECT_LE(sol.levels.back().data_mass, mu.total_mass() * (1.0 + 1e-8));
}

TEST(TruncationEnergy, ZeroField) {
    const Domain d = Domain::cube(2, 1.0, 8);
    const auto t = truncation_energy_table(ScalarField(d), 2.0, {1.0, 2.0});
    for (double v : t.values) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(t.max_value, 0.0);
}

TEST(TruncationEnergy, LinearRamp) {
    const Domain d({0.0, 0.0}, {1.0, 1.0}, {20, 20});
    ScalarField u(d);
    for (std::size_t c = 0; c < d.cell_count(); ++c) u[c] = d.cell_center(c)[0];
    for (double k : {1.0, 2.0, 4.0}) {
        const auto t = truncation_energy_table(u, 2.0, {k});
        EXPECT_NEAR(t.values[0], 1.0 / k, 1e-12);
    }
    // partial truncation only counts the part below k
    const auto half = truncation_energy_table(u, 2.0, {0.5});
    EXPECT_LT(half.values[0], 1.0 / 0.5);
    EXPECT_THROW(truncation_energy_table(u, 2.0, {0.0}), ParameterError);
}

TEST(PointwiseBound, ZeroSolution) {
    const Domain d = Domain::cube(3, 1.0, 6);
    Measure mu;
    mu.atoms.push_back({Point{0.0, 0.0, 0.0}, 1.0});
    const auto pp = PotentialParams::make(3, 1.0, 2.0, Radius::finite(2.0 * d.diameter()));
    const auto rep = pointwise_bound_check(ScalarField(d), SignedMeasure{mu, {}}, pp);
    EXPECT_EQ(rep.constant("c_hat"), 0.0);
    EXPECT_TRUE(rep.pass);
}

TEST(PointwiseBound, ViolationWhenPotentialVanishes) {
    const Domain d = Domain::cube(3, 1.0, 4);
    const auto pp = PotentialParams::make(3, 1.0, 2.0, Radius::finite(2.0 * d.diameter()));
    const auto rep = pointwise_bound_check(ScalarField(d, 1.0), SignedMeasure{}, pp);
    EXPECT_FALSE(rep.pass);
    EXPECT_GT(rep.constant("violations"), 0.0);
}

TEST(PointwiseBound, ScalesLinearlyAtPTwo) {
    auto cfg = box_config(2.0, 16, 1);
    Measure mu;
    mu.atoms.push_back({Point{0.05, 0.0, 0.0}, 1.0});
    const auto pp = PotentialParams::make(3, 1.0, 2.0, Radius::finite(2.0 * cfg.grid.diameter()));
    const auto s1 = solve_measure(mu, AbsorptionSpec::none(), cfg);
    const auto s2 = solve_measure(mu.scaled(2.0), AbsorptionSpec::none(), cfg);
    const double c1 = pointwise_bound_check(s1.u, SignedMeasure{mu, {}}, pp).constant("c_hat");
    const double c2 = pointwise_bound_check(s2.u, SignedMeasure{mu.scaled(2.0), {}}, pp).constant("c_hat");
    EXPECT_GT(c1, 0.0);
    EXPECT_NEAR(c2, c1, 0.15 * c1);
}
