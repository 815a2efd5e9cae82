#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "../support/oracles.hpp"
#include "tacsim/driver.hpp"

using namespace tacsim;

namespace {

ScalarField bump(const Grid& g, double base = 0.4, double amp = 0.1) {
    return ScalarField::from_function(g, [=](double x, double) { return base + amp * std::cos(std::numbers::pi * x); });
}

DriverConfig short_config() {
    DriverConfig c;
    c.dt = 1e-3;
    c.T_init = 0.05;
    return c;
}

}  // namespace

TEST(DriverConfig, RejectsInconsistentSettings) {
    DriverConfig c;
    c.dt = 0.2;
    EXPECT_THROW(c.check(), ConfigError);
    c = DriverConfig{};
    c.window_shrink = 1.0;
    EXPECT_THROW(c.check(), ConfigError);
    c = DriverConfig{};
    c.outer_tol = 0.0;
    EXPECT_THROW(c.check(), ConfigError);
    c = DriverConfig{};
    c.T_init = 2.0;
    EXPECT_THROW(c.check(), ConfigError);
    EXPECT_NO_THROW(DriverConfig{}.check());
}

TEST(RunWindow, EquilibriumConvergesImmediately) {
    const auto p = ModelParams::make(1, 1);
    const double req = oracle::equilibrium_rho(oracle::Consts{}, 0.9, 0.99);
    const auto g = Grid::make(1, 17);
    const SystemState s0{0.0, ScalarField(g, req), ScalarField(g, 0.0), ScalarField(g, std::exp(-req))};
    const auto cfg = short_config();
    const auto out = run_window(FieldSeries(51, s0.theta), s0, SourceTerm::constant(0.0), cfg, p);
    ASSERT_TRUE(std::holds_alternative<WindowResult>(out));
    const auto& w = std::get<WindowResult>(out);
    EXPECT_LE(w.increments.size(), 2u);
    for (const auto& th : w.theta) EXPECT_LE(max_abs_diff(th, s0.theta), 1e-12);
}

TEST(RunWindow, CanonicalIncrementsDecreaseGeometrically) {
    const auto p = ModelParams::make(1, 1);
    const auto t = synthesize(bump(Grid::make(1, 129)), 0.5, p);
    DriverConfig cfg;
    const auto out = run_window(FieldSeries(401, t.theta0), initial_state(t), SourceTerm::constant(0.1), cfg, p);
    ASSERT_TRUE(std::holds_alternative<WindowResult>(out));
    const auto& w = std::get<WindowResult>(out);
    ASSERT_GE(w.increments.size(), 2u);
    for (std::size_t i = 1; i < w.increments.size(); ++i) EXPECT_LT(w.increments[i], w.increments[i - 1]);
    EXPECT_LE(w.increments.back(), cfg.outer_tol);
    EXPECT_LE(w.transcendental_residual, 1e-10);
    EXPECT_LE(w.pde_residual, 1e-9);
    EXPECT_GE(w.min_clearance, 2 * w.margin.delta0 - 1e-9);
    // finite-difference rate of theta within the computed bound (slack 1.1)
    EXPECT_LE(w.observed_max_dt_theta, 1.1 * w.margin.max_dt_theta);
}

TEST(RunWindow, NearZeroMarginSignalsShrink) {
    const auto p = ModelParams::make(1, 1);
    const auto t = synthesize(bump(Grid::make(1, 65)), 0.02, p);
    const auto out = run_window(FieldSeries(401, t.theta0), initial_state(t), SourceTerm::constant(-5.0), DriverConfig{}, p);
    ASSERT_TRUE(std::holds_alternative<ShrinkSignal>(out));
    const auto r = std::get<ShrinkSignal>(out).reason;
    EXPECT_TRUE(r == ShrinkReason::margin_below_eps0 || r == ShrinkReason::margin_lost) << to_string(r);
}

TEST(ContinueInTime, StressRunShrinksAndEndsCleanly) {
    const auto p = ModelParams::make(1, 1);
    const auto t = synthesize(bump(Grid::make(1, 65)), 0.02, p);
    const auto res = continue_in_time(initial_state(t), SourceTerm::constant(-5.0), DriverConfig{}, p, 0.3);
    EXPECT_GE(res.shrink_log.size(), 1u);
    EXPECT_TRUE(res.status == RunStatus::converged || res.status == RunStatus::margin_violation);
}

TEST(ContinueInTime, ShrinkingAdmitsShorterWindows) {
    // a mild negative source erodes the margin slowly: the long first window is refused,
    // shorter ones are accepted and time advances until the margin is finally used up
    const auto p = ModelParams::make(1, 1);
    const auto t = synthesize(bump(Grid::make(1, 33)), 0.5, p);
    DriverConfig cfg;
    cfg.dt = 1e-3;
    cfg.T_init = 0.2;
    const auto res = continue_in_time(initial_state(t), SourceTerm::constant(-0.3), cfg, p, 0.5);
    EXPECT_TRUE(res.status == RunStatus::converged || res.status == RunStatus::margin_violation) << to_string(res.status);
    ASSERT_GE(res.shrink_log.size(), 1u);
    ASSERT_GE(res.windows.size(), 2u);
    for (const auto& w : res.windows) EXPECT_LT(w.T, cfg.T_init);
    EXPECT_GT(res.trajectory.times.back(), 0.1);
    const auto& tr = res.trajectory;
    for (std::size_t i = 0; i < tr.states.size(); ++i)
        for (std::size_t k = 0; k < tr.states[i].rho.size(); ++k)
            EXPECT_GE(margin_at(tr.states[i].rho[k], tr.states[i].xi[k], p), tr.eps0[i]);
}

TEST(ContinueInTime, RelaxesTowardEquilibriumWithoutSource) {
    const auto p = ModelParams::make(1, 1);
    const double req = oracle::equilibrium_rho(oracle::Consts{}, 0.9, 0.99);
    const auto g = Grid::make(1, 33);
    const auto t = synthesize(bump(g, 0.7, 0.1), 1.0, p);  // xi0 = 0
    DriverConfig cfg;
    cfg.dt = 2e-3;
    cfg.T_init = 0.2;
    cfg.save_stride = 50;
    const auto res = continue_in_time(initial_state(t), SourceTerm::constant(0.0), cfg, p, 2.0);
    ASSERT_EQ(res.status, RunStatus::converged) << res.status_detail;
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& s : res.trajectory.states) {
        const double d = max_abs_diff(s.rho, ScalarField(g, req));
        EXPECT_LE(d, prev + 1e-12);
        prev = d;
        for (double v : s.xi.values) EXPECT_EQ(v, 0.0);
        for (std::size_t k = 0; k < g.size(); ++k) EXPECT_NEAR(s.theta[k], std::exp(-s.rho[k]), 1e-12);
    }
    EXPECT_LT(prev, 0.05);
}

TEST(ContinueInTime, TrajectoryBookkeepingAndSeamConsistency) {
    const auto p = ModelParams::make(1, 1);
    const auto t = synthesize(bump(Grid::make(1, 33)), 0.5, p);
    auto cfg = short_config();
    cfg.save_stride = 7;
    const auto res = continue_in_time(initial_state(t), SourceTerm::constant(0.1), cfg, p, 0.13);
    ASSERT_EQ(res.status, RunStatus::converged);
    const auto& tr = res.trajectory;
    ASSERT_EQ(tr.times.size(), tr.states.size());
    ASSERT_EQ(tr.eps0.size(), tr.states.size());
    for (std::size_t i = 1; i < tr.times.size(); ++i) EXPECT_GT(tr.times[i], tr.times[i - 1]);
    EXPECT_DOUBLE_EQ(tr.times.back(), 0.13);
    // window seams are saved and carry theta = F2(rho, xi)
    for (const auto& s : tr.states)
        for (std::size_t k = 0; k < s.rho.size(); ++k)
            EXPECT_NEAR(s.theta[k], solve_theta_branch(s.rho[k], std::sqrt(s.rho[k] * s.xi[k]), p), 1e-11);
    double covered = 0.0;
    for (const auto& w : res.windows) {
        EXPECT_NEAR(w.t_start, covered, 1e-12);
        covered += w.T;
    }
    EXPECT_NEAR(covered, 0.13, 1e-12);
}

TEST(ContinueInTime, RateCapUnderflowIsReported) {
    const auto p = ModelParams::make(1, 1);
    const auto t = synthesize(bump(Grid::make(1, 17)), 0.5, p);
    auto cfg = short_config();
    cfg.M_cap = 1e-9;
    const auto res = continue_in_time(initial_state(t), SourceTerm::constant(0.1), cfg, p, 0.1);
    EXPECT_EQ(res.status, RunStatus::window_underflow);
    ASSERT_FALSE(res.shrink_log.empty());
    EXPECT_EQ(res.shrink_log.back().reason, ShrinkReason::rate_cap);
    EXPECT_TRUE(res.windows.empty());
}

TEST(ContinueInTime, Deterministic) {
    const auto p = ModelParams::make(1, 1);
    const auto t = synthesize(bump(Grid::make(1, 33)), 0.5, p);
    auto cfg = short_config();
    const auto a = continue_in_time(initial_state(t), SourceTerm::constant(0.1), cfg, p, 0.1);
    const auto b = continue_in_time(initial_state(t), SourceTerm::constant(0.1), cfg, p, 0.1);
    ASSERT_EQ(a.trajectory.states.size(), b.trajectory.states.size());
    for (std::size_t i = 0; i < a.trajectory.states.size(); ++i) {
        EXPECT_EQ(a.trajectory.states[i].rho.values, b.trajectory.states[i].rho.values);
        EXPECT_EQ(a.trajectory.states[i].theta.values, b.trajectory.states[i].theta.values);
    }
    ASSERT_EQ(a.windows.size(), b.windows.size());
    for (std::size_t i = 0; i < a.windows.size(); ++i) EXPECT_EQ(a.windows[i].increments, b.windows[i].increments);
}

TEST(SourceTerm, FieldSourceChecksGrid) {
    const auto g = Grid::make(1, 9);
    const auto src = SourceTerm::field(ScalarField(g, 0.3));
    EXPECT_EQ(src.at(g, 0.5)[4], 0.3);
    EXPECT_THROW(src.at(Grid::make(1, 5), 0.0), DomainError);
}
