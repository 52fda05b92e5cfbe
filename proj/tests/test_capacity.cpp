#include "oracles.hpp"

#include <wolffkit/capacity.hpp>

#include <gtest/gtest.h>

using namespace wolffkit;

namespace {

CapacityProblem problem(const Domain& g, std::vector<std::size_t> E, int iters = 400) {
    CapacityProblem prob;
    prob.E = std::move(E);
    prob.alpha = 2.0;
    prob.lp = LorentzParams::make(2.0, 2.0);
    prob.grid = g;
    prob.opt.max_iterations = iters;
    return prob;
}

double min_potential(const CapacityResult& r, const CapacityProblem& prob) {
    const auto rows = bessel_rows(prob.grid, prob.alpha, prob.E);
    double m = INFINITY;
    for (const auto& row : rows) {
        double s = 0.0;
        for (std::size_t j = 0; j < row.size(); ++j) s += row[j] * r.argmin[j];
        m = std::min(m, s);
    }
    return m;
}

}  // namespace

TEST(Capacity, EmptySetIsZero) {
    const auto r = capacity_estimate(problem(Domain::cube(3, 1.0, 6), {}));
    EXPECT_EQ(r.value, 0.0);
    EXPECT_EQ(r.argmin.max_abs(), 0.0);
    EXPECT_TRUE(r.converged);
}

TEST(Capacity, Validation) {
    const Domain g = Domain::cube(3, 1.0, 4);
    auto prob = problem(g, {0});
    prob.alpha = 3.0;
    EXPECT_THROW(capacity_estimate(prob), ParameterError);
    prob = problem(g, {0});
    prob.lp = LorentzParams::make(1.0, 2.0);
    EXPECT_THROW(capacity_estimate(prob), ParameterError);
    prob = problem(g, {1000});
    EXPECT_THROW(capacity_estimate(prob), ParameterError);
}

TEST(Capacity, FeasibleTraceMonotoneAndFingerprinted) {
    const Domain g = Domain::cube(3, 1.0, 8);
    const auto prob = problem(g, {g.locate(Point{0.0, 0.0, 0.0}), g.locate(Point{0.3, 0.0, 0.0})});
    const auto r = capacity_estimate(prob);
    EXPECT_GT(r.value, 0.0);
    EXPECT_GE(min_potential(r, prob), 1.0 - 1e-6);
    for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_LE(r.trace[i].objective, r.trace[i - 1].objective + 1e-9);
    EXPECT_NEAR(r.value, lorentz_norm(r.argmin, prob.lp).value, 1e-9 * r.value);
    EXPECT_NE(r.fingerprint.find("table:G_2"), std::string::npos);
    for (double v : r.argmin.values()) EXPECT_GE(v, 0.0);
}

TEST(Capacity, DeterministicOnRerun) {
    const Domain g = Domain::cube(3, 1.0, 6);
    const auto prob = problem(g, {3, 40, 77}, 100);
    EXPECT_EQ(capacity_estimate(prob).value, capacity_estimate(prob).value);
}

TEST(Capacity, MonotoneAndSubadditiveWithWarmStarts) {
    oracle::Gen gen(201);
    const Domain g = Domain::cube(3, 1.0, 6);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<std::size_t> big;
        for (int k = 0; k < 6; ++k) big.push_back(static_cast<std::size_t>(gen.integer(0, 215)));
        std::sort(big.begin(), big.end());
        big.erase(std::unique(big.begin(), big.end()), big.end());
        std::vector<std::size_t> small(big.begin(), big.begin() + (big.size() + 1) / 2);
        std::vector<std::size_t> rest(big.begin() + (big.size() + 1) / 2, big.end());

        const auto rb = capacity_estimate(problem(g, big, 200));
        auto ps = problem(g, small, 200);
        ps.initial = std::vector<double>(rb.argmin.values().begin(), rb.argmin.values().end());
        const auto rs = capacity_estimate(ps);
        EXPECT_LE(rs.value, rb.value + 1e-6);

        if (rest.empty()) continue;
        const auto rr = capacity_estimate(problem(g, rest, 200));
        const auto rs0 = capacity_estimate(problem(g, small, 200));
        auto pu = problem(g, big, 200);
        std::vector<double> sum(g.cell_count());
        for (std::size_t j = 0; j < sum.size(); ++j) sum[j] = rr.argmin[j] + rs0.argmin[j];
        pu.initial = sum;
        EXPECT_LE(capacity_estimate(pu).value, rr.value + rs0.value + 1e-6);
    }
}

TEST(Capacity, QuasiNormRangeFlaggedHeuristic) {
    const Domain g = Domain::cube(3, 1.0, 4);
    auto prob = problem(g, {5}, 50);
    prob.lp = LorentzParams::make(2.0, 0.8);
    EXPECT_TRUE(capacity_estimate(prob).heuristic);
}

TEST(CapacityIndices, Examples) {
    auto [a, s, q] = power_capacity_indices(3, 2.0, 2.0, 0.0);
    EXPECT_DOUBLE_EQ(a, 2.0);
    EXPECT_DOUBLE_EQ(s, 2.0);
    EXPECT_DOUBLE_EQ(q, 2.0);
    auto [a2, s2, q2] = power_capacity_indices(3, 2.0, 2.0, 0.0, true);
    EXPECT_DOUBLE_EQ(a2, 2.0);
    EXPECT_DOUBLE_EQ(s2, 2.0);
    EXPECT_DOUBLE_EQ(q2, 1.0);
    EXPECT_THROW(power_capacity_indices(3, 2.0, 1.0, 0.0), ParameterError);
}

TEST(CapacityIndices, SecondExponentAboveOne) {
    oracle::Gen gen(202);
    for (int trial = 0; trial < 200; ++trial) {
        const int N = gen.integer(2, 8);
        const double p = gen.uniform(1.01, N - 0.01);
        const double q = gen.uniform(p - 1.0 + 1e-3, 20.0);
        const double beta = gen.uniform(0.0, N - 1e-3);
        EXPECT_GT(std::get<1>(power_capacity_indices(N, p, q, beta)), 1.0);
    }
}

TEST(IntegralTests, Subcritical) {
    const auto half = subcritical_integral(AbsorptionSpec::power(0.5), 3);
    EXPECT_TRUE(half.finite);
    EXPECT_NEAR(half.value, 2.0, 1e-12);
    EXPECT_NEAR(oracle::simpson([](double u) { return std::exp(u) * std::pow(std::exp(u), -1.5); }, 0.0, 60.0, 20000),
                2.0, 1e-9);
    EXPECT_FALSE(subcritical_integral(AbsorptionSpec::power(1.5), 3).finite);
    EXPECT_FALSE(subcritical_integral(AbsorptionSpec::exponential(0.1, 1.0), 3).finite);
    EXPECT_FALSE(subcritical_integral(AbsorptionSpec::power(0.5), 2).applicable);
    // boundary exponent 1/(N-2) is infinite
    EXPECT_FALSE(subcritical_integral(AbsorptionSpec::power(0.5), 4).finite);
}

TEST(IntegralTests, TailQ) {
    const auto lin = tail_integral_q(AbsorptionSpec::power(1.0), 2.0);
    EXPECT_TRUE(lin.finite);
    EXPECT_NEAR(lin.value, 1.0, 1e-12);
    EXPECT_FALSE(tail_integral_q(AbsorptionSpec::power(2.0), 2.0).finite);
    const auto zero = tail_integral_q(AbsorptionSpec::none(), 2.0);
    EXPECT_TRUE(zero.finite);
    EXPECT_EQ(zero.value, 0.0);
}

TEST(IntegralTests, CustomGrowthNumeric) {
    const auto g = AbsorptionSpec::from_function([](std::span<const double>, double u) {
        return std::copysign(std::pow(std::abs(u), 0.5), u);
    });
    const auto r = tail_integral_q(g, 1.0);
    EXPECT_TRUE(r.finite);
    EXPECT_NEAR(r.value, 2.0, 1e-6);
    const auto h = AbsorptionSpec::from_function([](std::span<const double>, double u) { return u * u * u; });
    EXPECT_FALSE(tail_integral_q(h, 2.0).finite);
}

TEST(ExpThreshold, Examples) {
    const double c = 0.37;
    EXPECT_NEAR(exp_threshold(3, 2.0, 2.0 * std::log(2.0) / (12.0 * c), 1.0, c), 1.0, 1e-14);
    EXPECT_NEAR(exp_threshold(3, 2.0, 1.0, 1.0, 1.0), 2.0 * std::log(2.0) / 12.0, 1e-15);
    EXPECT_NEAR(exp_threshold(3, 2.0, 1.0, 1.0, 2.0), 0.5 * exp_threshold(3, 2.0, 1.0, 1.0, 1.0), 1e-15);
    EXPECT_THROW(exp_threshold(3, 2.0, 1.0, 0.5, 1.0), ParameterError);
    EXPECT_THROW(exp_threshold(3, 2.0, 0.0, 1.0, 1.0), ParameterError);
}

TEST(ExpCriterion, StrictComparisonAndDeterminism) {
    const Domain g = Domain::cube(3, 1.0, 8);
    Measure nu;
    nu.atoms.push_back({Point{0.01, 0.02, -0.03}, 1e-4});
    const auto r1 = exp_good_criterion(nu, 3, 2.0, 1.0, 1.0, 1.0, g, g.diameter());
    const auto r2 = exp_good_criterion(nu, 3, 2.0, 1.0, 1.0, 1.0, g, g.diameter());
    EXPECT_EQ(r1.verdict, Verdict::Pass);
    EXPECT_EQ(r1.measured.value, r2.measured.value);
    EXPECT_LT(r1.measured.value, r1.threshold.value);

    nu.atoms[0].w = 10.0;
    EXPECT_EQ(exp_good_criterion(nu, 3, 2.0, 1.0, 1.0, 1.0, g, g.diameter()).verdict, Verdict::Fail);
}

TEST(CapacityProbe, SingleAtomAtSmallAlphaVanishes) {
    // Cubes of side eps shrink like eps^{(N - alpha s)/s} in capacity when alpha s < N.
    const Domain g = Domain::cube(3, 1.0, 16);
    Measure mu;
    mu.atoms.push_back({Point{0.0625, 0.0625, 0.0625}, 1.0});
    OptimizerSettings opt;
    opt.max_iterations = 150;
    const auto rep = capacity_probe(mu, 1.0, LorentzParams::make(1.5, 1.5), g, 1.0, 0.5, opt);
    EXPECT_EQ(rep.notes.size(), 1u);
    EXPECT_TRUE(rep.measured.is_finite());
    EXPECT_NE(rep.verdict, Verdict::Pass);
}
