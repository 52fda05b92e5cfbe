#include "oracles.hpp"

#include <wolffkit/measure.hpp>

#include <gtest/gtest.h>

using namespace wolffkit;

namespace {

Measure unit_atom(Point x = {0.0, 0.0, 0.0}, double w = 1.0) {
    Measure mu;
    mu.atoms.push_back({std::move(x), w});
    return mu;
}

}  // namespace

TEST(Domain, RejectsDegenerateBoxes) {
    EXPECT_THROW(Domain({0.0}, {1.0}, {4}), ParameterError);
    EXPECT_THROW(Domain({0.0, 0.0}, {1.0, 0.0}, {4, 4}), ParameterError);
    EXPECT_THROW(Domain({0.0, 0.0}, {1.0, 1.0}, {4, 1}), ParameterError);
}

TEST(Domain, CellVolumeAndIndexing) {
    const Domain d({-1.0, 0.0, 0.0}, {1.0, 1.0, 2.0}, {4, 2, 8});
    EXPECT_EQ(d.cell_count(), 64u);
    EXPECT_DOUBLE_EQ(d.cell_volume(), 0.5 * 0.5 * 0.25);
    EXPECT_GT(d.diameter(), 0.0);
    int idx[3];
    for (std::size_t c = 0; c < d.cell_count(); ++c) {
        d.multi_index(c, idx);
        EXPECT_EQ(d.flat_index(idx), c);
    }
    // last axis fastest
    d.multi_index(1, idx);
    EXPECT_EQ(idx[0], 0);
    EXPECT_EQ(idx[2], 1);
}

TEST(BallMass, AtomInsideEveryBallCentredOnIt) {
    EXPECT_DOUBLE_EQ(ball_mass(unit_atom(), Point{0, 0, 0}, 0.1), 1.0);
}

TEST(BallMass, BallMissesAtom) {
    EXPECT_DOUBLE_EQ(ball_mass(unit_atom(), Point{0.5, 0, 0}, 0.4), 0.0);
}

TEST(BallMass, OpenBallExcludesBoundary) {
    EXPECT_DOUBLE_EQ(ball_mass(unit_atom(), Point{0.5, 0, 0}, 0.5), 0.0);
    EXPECT_DOUBLE_EQ(ball_mass(unit_atom(), Point{0.5, 0, 0}, 0.5000001), 1.0);
}

TEST(BallMass, RejectsNonPositiveRadius) {
    EXPECT_THROW(ball_mass(unit_atom(), Point{0, 0, 0}, 0.0), ParameterError);
}

TEST(BallMass, UniformDensityMatchesBallVolume) {
    const Domain d = Domain::cube(3, 1.0, 64);
    Measure mu;
    mu.density = ScalarField(d, 1.0);
    const double exact = 4.0 / 3.0 * std::numbers::pi * 0.125;
    const double shell = 4.0 * std::numbers::pi * 0.25 * (2.0 / 64.0);  // one-cell shell
    EXPECT_NEAR(ball_mass(mu, Point{0, 0, 0}, 0.5), exact, shell);
}

TEST(BallMass, MonotoneInRadiusAndAdditive) {
    oracle::Gen gen(7);
    const Domain d = Domain::cube(3, 1.0, 12);
    for (int trial = 0; trial < 10; ++trial) {
        Measure a = gen.atomic_measure(3, 5, 0.9);
        Measure b = gen.atomic_measure(3, 5, 0.9);
        b.density = gen.field(d, 0.0, 2.0);
        const Point x = gen.point_in_ball(3, 1.0);
        double prev = 0.0;
        for (int i = 1; i <= 40; ++i) {
            const double t = 0.05 * i;
            const double m = ball_mass(a, x, t);
            EXPECT_GE(m, prev);
            prev = m;
            EXPECT_DOUBLE_EQ(ball_mass(a + b, x, t), ball_mass(a, x, t) + ball_mass(b, x, t));
        }
    }
}

TEST(Mollify, ZeroMeasureGivesZeroField) {
    const MollifyResult r = mollify(Measure{}, 0.2, Domain::cube(3, 1.0, 8));
    EXPECT_EQ(r.field.max_abs(), 0.0);
}

TEST(Mollify, UnitAtomKeepsMassAndSupport) {
    const Domain d = Domain::cube(3, 1.0, 32);
    const MollifyResult r = mollify(unit_atom({0.01, -0.02, 0.03}), 0.2, d);
    EXPECT_NEAR(r.field.integral(), 1.0, 1e-8);
    EXPECT_FALSE(r.clipped);
    Point x(3);
    for (std::size_t c = 0; c < d.cell_count(); ++c) {
        if (r.field[c] == 0.0) continue;
        d.cell_center(c, x.data());
        const double dist = std::sqrt(std::pow(x[0] - 0.01, 2) + std::pow(x[1] + 0.02, 2) + std::pow(x[2] - 0.03, 2));
        EXPECT_LT(dist, 0.2);
        EXPECT_GT(r.field[c], 0.0);
    }
}

TEST(Mollify, TwoAtomsTotalMass) {
    Measure mu = unit_atom({0.2, 0.0, 0.0});
    mu.atoms.push_back({Point{-0.3, 0.1, 0.0}, 2.0});
    const MollifyResult r = mollify(mu, 0.15, Domain::cube(3, 1.0, 24));
    EXPECT_NEAR(r.field.integral(), 3.0, 1e-8);
}

TEST(Mollify, BandwidthErrorsAndClipping) {
    const Domain d = Domain::cube(3, 1.0, 16);
    EXPECT_THROW(mollify(unit_atom(), 0.0, d), ParameterError);
    const MollifyResult r = mollify(unit_atom({0.8, 0.0, 0.0}), 0.5, d);
    EXPECT_TRUE(r.clipped);
    EXPECT_LT(r.bandwidth, 0.2);
    EXPECT_NEAR(r.field.integral(), 1.0, 1e-8);
}

TEST(Mollify, MonotoneInMeasure) {
    oracle::Gen gen(11);
    const Domain d = Domain::cube(3, 1.0, 16);
    for (int trial = 0; trial < 5; ++trial) {
        Measure small = gen.atomic_measure(3, 4, 0.6);
        Measure big = small;
        for (auto& a : big.atoms) a.w *= 1.5;
        big.atoms.push_back({gen.point_in_ball(3, 0.6), 0.7});
        const auto fs = mollify(small, 0.25, d).field;
        const auto fb = mollify(big, 0.25, d).field;
        for (std::size_t c = 0; c < d.cell_count(); ++c) EXPECT_LE(fs[c], fb[c] + 1e-12);
        EXPECT_NEAR(fb.integral(), big.total_mass(), 1e-8 * big.total_mass());
    }
}

TEST(TruncateRestrict, AtomAloneWhenDensityVanishes) {
    const Domain d = Domain::cube(3, 1.0, 8);
    const Box omega{{-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5}};
    const Measure out = truncate_restrict(ScalarField(d), unit_atom({0.1, 0.1, 0.1}), 3.0, omega);
    ASSERT_EQ(out.atoms.size(), 1u);
    EXPECT_DOUBLE_EQ(out.total_mass(), 1.0);
}

TEST(TruncateRestrict, TruncatesToLevel) {
    const Domain d = Domain::cube(3, 1.0, 8);
    const Measure out = truncate_restrict(ScalarField(d, 5.0), Measure{}, 3.0, d.box());
    for (double v : out.density->values()) EXPECT_DOUBLE_EQ(v, 3.0);
}

TEST(TruncateRestrict, HalfDomainMass) {
    const Domain d = Domain::cube(3, 1.0, 8);
    const Box half{{-1.0, -1.0, -1.0}, {0.0, 1.0, 1.0}};
    const Measure out = truncate_restrict(ScalarField(d, 5.0), Measure{}, 3.0, half);
    EXPECT_NEAR(out.total_mass(), 3.0 * half.volume(), 1e-12);
}

TEST(TruncateRestrict, Errors) {
    const Domain d = Domain::cube(3, 1.0, 8);
    EXPECT_THROW(truncate_restrict(ScalarField(d), Measure{}, 0.0, d.box()), ParameterError);
    const Box outside{{-2.0, -1.0, -1.0}, {0.0, 1.0, 1.0}};
    EXPECT_THROW(truncate_restrict(ScalarField(d), Measure{}, 1.0, outside), ParameterError);
}

TEST(TruncateRestrict, MassesIncreaseAlongExhaustingSequence) {
    oracle::Gen gen(3);
    const Domain d = Domain::cube(3, 1.0, 16);
    for (int trial = 0; trial < 5; ++trial) {
        const ScalarField f = gen.field(d, 0.0, 10.0);
        const Measure nu = gen.atomic_measure(3, 6, 0.95);
        const double full = f.integral() + nu.total_mass();
        double prev = 0.0, last = 0.0;
        for (int n = 1; n <= 5; ++n) {
            const double margin = 0.5 * std::ldexp(1.0, -n) * (n < 5);
            const Box omega{Point(3, -1.0 + margin), Point(3, 1.0 - margin)};
            const double level = n < 5 ? 2.0 * n : 10.0;
            last = truncate_restrict(f, nu, level, omega).total_mass();
            EXPECT_GE(last, prev - 1e-12);
            EXPECT_LE(last, full + 1e-9);
            prev = last;
        }
        EXPECT_NEAR(last, full, 1e-9 * full);
    }
}
