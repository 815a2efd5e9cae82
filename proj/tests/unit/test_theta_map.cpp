#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "../support/oracles.hpp"
#include "tacsim/initial_data.hpp"
#include "tacsim/theta_map.hpp"

using namespace tacsim;

namespace {
// root of 0.5 s + s ln s = -0.1 on (e^{-1.5}, e^{-0.5}), 40-digit reference
constexpr double kRootHalfTenth = 0.4957307100208623839;
}  // namespace

TEST(SolveThetaBranch, ReferenceRoot) {
    const auto p = ModelParams::make(1, 1);
    const double s = solve_theta_branch(0.5, 0.1, p);
    EXPECT_GT(s, std::exp(-1.5));
    EXPECT_LT(s, std::exp(-0.5));
    EXPECT_NEAR(s, kRootHalfTenth, 1e-12);
    EXPECT_NEAR(s, oracle::theta_upper(0.5, 0.1, oracle::Consts{}), 1e-12);
}

TEST(SolveThetaBranch, ZeroTargetReturnsUpperExactly) {
    const auto p = ModelParams::make(1.7, 0.6);
    for (double r : {0.1, 0.5, 0.93}) EXPECT_EQ(solve_theta_branch(r, 0.0, p), s_upper(r, p));
}

TEST(SolveThetaBranch, RoundTripOnRandomBranchPoints) {
    auto g = oracle::rng(51);
    for (int i = 0; i < 5000; ++i) {
        const auto p = ModelParams::make(oracle::uniform(g, 0.2, 4), oracle::uniform(g, 0.2, 4));
        const double r = oracle::uniform(g, 0.01, 0.99);
        const double lo = s_lower(r, p), hi = s_upper(r, p);
        const double th = lo + oracle::uniform(g, 0.01, 1.0) * (hi - lo);
        const double q = -lambda(r, th, p);
        const double s = solve_theta_branch(r, q, p);
        EXPECT_LE(std::abs(lambda(r, s, p) + q), 1e-12);
        EXPECT_NEAR(s, th, 1e-9);
        EXPECT_GT(s, lo);
        EXPECT_LE(s, hi);
    }
}

TEST(SolveThetaBranch, UnbracketedTargetThrows) {
    const auto p = ModelParams::make(1, 1);
    EXPECT_THROW(solve_theta_branch(0.5, 0.3, p), BracketFailure);  // beyond cv e^{-1.5}
}

TEST(MarginCheck, ZeroXiGivesFullMargin) {
    const auto p = ModelParams::make(1, 1);
    const auto g = Grid::make(1, 9);
    const auto rho = ScalarField::from_function(g, [](double x, double) { return 0.2 + 0.5 * x; });
    const auto rep = margin_check({rho}, {ScalarField(g, 0.0)}, p);
    for (std::size_t k = 0; k < g.size(); ++k) EXPECT_EQ(rep.margin[0][k], std::exp(-1.0 - rho[k]));
    EXPECT_GT(rep.min_margin, 0.0);
}

TEST(MarginCheck, EqualityCaseIsAViolation) {
    const auto p = ModelParams::make(1, 1);
    const auto g = Grid::make(1, 5);
    const double q = std::exp(-1.5);
    const ScalarField rho(g, 0.5);
    ScalarField xi_exact(g, q * q / 0.5);
    // land exactly on the equality, not an ulp on the safe side
    while (margin_at(0.5, xi_exact[0], p) > 0.0) xi_exact.values.assign(g.size(), std::nextafter(xi_exact[0], 1.0));
    ASSERT_GT(margin_at(0.5, xi_exact[0], p), -1e-16);
    EXPECT_THROW(margin_check({rho}, {xi_exact}, p), MarginViolation);
}

TEST(MarginCheck, CanonicalEps0IsHalfTheInitialMargin) {
    const auto p = ModelParams::make(1, 1);
    const auto g = Grid::make(1, 129);
    const auto rho0 = ScalarField::from_function(g, [](double x, double) { return 0.4 + 0.1 * std::cos(std::numbers::pi * x); });
    const auto t = synthesize(rho0, 0.5, p);
    double direct = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double r = rho0[k];
        const double lo = std::exp(-1 - r), hi = std::exp(-r);
        const double th = lo + 0.5 * (hi - lo);
        const double lam = r * th + th * std::log(th);
        direct = std::min(direct, std::exp(-1 - r) + lam);  // cv e^{-1-r} - |lam|
    }
    const auto rep = margin_check({t.rho0}, {t.xi0}, p);
    EXPECT_NEAR(rep.eps0, 0.5 * direct, 1e-14);
    EXPECT_NEAR(t.eps0, 0.5 * direct, 1e-14);
    EXPECT_GT(rep.delta0, 0.0);
}

TEST(MarginCheck, ClearanceImpliedByMargin) {
    // theta - s_lower >= 2 delta0 wherever margin >= eps0
    auto gen = oracle::rng(52);
    const auto g = Grid::make(1, 33);
    for (int trial = 0; trial < 200; ++trial) {
        const auto p = ModelParams::make(oracle::uniform(gen, 0.3, 3), oracle::uniform(gen, 0.3, 3));
        ScalarField rho(g), xi(g);
        for (std::size_t k = 0; k < g.size(); ++k) {
            rho[k] = oracle::uniform(gen, 0.05, 0.95);
            const double lo = s_lower(rho[k], p), hi = s_upper(rho[k], p);
            const double lam = lambda(rho[k], lo + oracle::uniform(gen, 0.02, 1.0) * (hi - lo), p);
            xi[k] = lam * lam / rho[k];
        }
        const auto rep = margin_check({rho}, {xi}, p);
        const auto th = f2_map({rho}, {xi}, p);
        for (std::size_t k = 0; k < g.size(); ++k)
            if (rep.margin[0][k] >= rep.eps0) {
                EXPECT_GE(th[0][k] - s_lower(rho[k], p), 2 * rep.delta0 - 1e-14);
            }
    }
}

TEST(F2Map, LipschitzInRhoAndSqrtRhoXi) {
    auto gen = oracle::rng(53);
    int violations = 0, trials = 0;
    while (trials < 1000) {
        const auto p = ModelParams::make(oracle::uniform(gen, 0.3, 3), oracle::uniform(gen, 0.3, 3));
        const double r = oracle::uniform(gen, 0.05, 0.95);
        const double lo = s_lower(r, p), hi = s_upper(r, p);
        const double lam = lambda(r, lo + oracle::uniform(gen, 0.05, 1.0) * (hi - lo), p);
        const double xi = lam * lam / r;
        const double eps0 = 0.5 * margin_at(r, xi, p);
        const double r2 = r + oracle::uniform(gen, -1e-3, 1e-3);
        const double xi2 = std::max(0.0, xi + oracle::uniform(gen, -1e-3, 1e-3));
        if (margin_at(r2, xi2, p) < eps0) continue;  // outside the hypothesis
        ++trials;
        const double d0 = clearance_delta0(eps0, std::max(r, r2), p);
        const double q = std::sqrt(r * xi), q2 = std::sqrt(r2 * xi2);
        const double dth = std::abs(solve_theta_branch(r2, q2, p) - solve_theta_branch(r, q, p));
        const double bound = (std::abs(q2 - q) + p.c0 * std::abs(r2 - r)) / (p.cv * std::log1p(d0 / theta_star_hi(p)));
        if (dth > bound + 1e-10) ++violations;
    }
    EXPECT_EQ(violations, 0);
}

TEST(ThetaRateBound, StationarySeriesGivesZero) {
    const auto p = ModelParams::make(1, 1);
    const auto g = Grid::make(1, 9);
    const auto t = synthesize(ScalarField(g, 0.4), 0.5, p);
    FieldSeries rho(5, t.rho0), th(5, t.theta0);
    XiSolution xs;
    xs.xi = FieldSeries(5, t.xi0);
    auto rep = margin_check(rho, xs.xi, p);
    EXPECT_EQ(theta_rate_bound(th, rho, xs, rep, p, 1e-3), 0.0);
    EXPECT_EQ(rep.max_dt_theta, 0.0);
}

TEST(ThetaRateBound, BoundsObservedRate) {
    const auto p = ModelParams::make(1, 1);
    const auto g = Grid::make(1, 17);
    const double dt = 1e-3;
    FieldSeries rho, xi;
    for (int k = 0; k <= 20; ++k) {
        rho.push_back(ScalarField::from_function(g, [&](double x, double) { return 0.4 + 0.1 * std::sin(3 * x + 2 * k * dt); }));
        xi.push_back(ScalarField::from_function(g, [&](double x, double) { return 0.05 * (1 + 0.3 * std::cos(x - 5 * k * dt)); }));
    }
    XiSolution xs;
    xs.xi = xi;
    auto rep = margin_check(rho, xi, p);
    const auto th = f2_map(rho, xi, p);
    const double bound = theta_rate_bound(th, rho, xs, rep, p, dt);
    EXPECT_LE(observed_max_dt(th, dt), 1.1 * bound);
}

TEST(RateConstant, DoublingDelta0ShrinksL0ByAtMostHalf) {
    // L0(2 d) <= L0(d): monotone, and L0(2d) >= L0(d) / 2 since ln(1+2x) <= 2 ln(1+x)
    auto gen = oracle::rng(55);
    const auto p = ModelParams::make(1, 1);
    for (int i = 0; i < 1000; ++i) {
        const double d = oracle::uniform(gen, 1e-6, 0.5);
        EXPECT_LE(rate_constant_L0(2 * d, p), rate_constant_L0(d, p));
        EXPECT_GE(rate_constant_L0(2 * d, p), 0.5 * rate_constant_L0(d, p) * (1 - 1e-12));
    }
}

TEST(F2Map, InitialRoundTripOnSynthesizedData) {
    const auto p = ModelParams::make(1, 1);
    const auto g = Grid::make(2, 17);
    const auto rho0 = ScalarField::from_function(g, [](double x, double y) { return 0.5 + 0.2 * std::cos(3 * x) * std::sin(2 * y); });
    const auto t = synthesize(rho0, 0.3, p);
    const auto th = f2_map({t.rho0}, {t.xi0}, p);
    EXPECT_LE(max_abs_diff(th[0], t.theta0), 1e-10);
}
