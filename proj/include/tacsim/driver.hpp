#pragma once

// Outer Picard iteration theta <- F2(F1(theta)) on a window [t, t+T], with the
// window shrunk geometrically whenever the margin, the theta-rate cap or the
// convergence budget is violated, and continuation from window to window.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "tacsim/ac_stepper.hpp"
#include "tacsim/errors.hpp"
#include "tacsim/grid.hpp"
#include "tacsim/initial_data.hpp"
#include "tacsim/model.hpp"
#include "tacsim/theta_map.hpp"

namespace tacsim {

/// sigma_bar(x, t) sampled on a grid.
struct SourceTerm {
    std::function<ScalarField(const Grid&, double)> at;
    std::string description = "custom";

    static SourceTerm constant(double c) {
        return {[c](const Grid& g, double) { return ScalarField(g, c); }, "constant " + std::to_string(c)};
    }
    static SourceTerm field(ScalarField f) {
        return {[f = std::move(f)](const Grid& g, double) {
                    if (!(g == f.grid)) throw DomainError("SourceTerm: field grid does not match the run grid");
                    return f;
                },
                "field"};
    }
};

struct SystemState {
    double t = 0.0;
    ScalarField rho;
    ScalarField xi;
    ScalarField theta;
};

struct DriverConfig {
    double T_init = 0.1;
    double T_ref = 1.0;  ///< reference final time bounding every window
    double dt = 2.5e-4;
    double outer_tol = 1e-8;
    int outer_max_iters = 30;
    double window_shrink = 0.5;
    double M_cap = 1e4;
    double inner_tol = 1e-12;
    int inner_max_iters = 100;
    double theta_tol = 1e-12;
    NewtonOptions newton{};
    int min_window_steps = 16;
    int save_stride = 1;

    void check() const {
        if (!(dt > 0.0 && dt < T_init && T_init <= T_ref)) throw ConfigError("DriverConfig: need 0 < dt < T_init <= T_ref");
        if (!(outer_tol > 0.0)) throw ConfigError("DriverConfig: outer_tol must be positive");
        if (!(window_shrink > 0.0 && window_shrink < 1.0)) throw ConfigError("DriverConfig: window_shrink must lie in (0,1)");
        if (outer_max_iters < 1 || inner_max_iters < 1) throw ConfigError("DriverConfig: iteration budgets must be >= 1");
        if (save_stride < 1) throw ConfigError("DriverConfig: save_stride must be >= 1");
    }
};

enum class ShrinkReason { margin_below_eps0, margin_lost, rate_cap, outer_budget, inner_failure };

inline const char* to_string(ShrinkReason r) {
    switch (r) {
        case ShrinkReason::margin_below_eps0: return "margin_below_eps0";
        case ShrinkReason::margin_lost: return "margin_lost";
        case ShrinkReason::rate_cap: return "rate_cap";
        case ShrinkReason::outer_budget: return "outer_budget";
        case ShrinkReason::inner_failure: return "inner_failure";
    }
    return "unknown";
}

struct ShrinkSignal {
    ShrinkReason reason;
    std::string detail;
};

struct WindowResult {
    FieldSeries theta;
    FieldSeries f1_theta;  ///< theta the final (rho, xi) was computed from
    F1Output f1;
    MarginReport margin;
    std::vector<double> increments;  ///< L2(Q) norm of successive theta updates
    double transcendental_residual = 0.0;
    double pde_residual = 0.0;
    double min_clearance = 0.0;  ///< min theta - s_lower(rho)
    double observed_max_dt_theta = 0.0;
};

using WindowOutcome = std::variant<WindowResult, ShrinkSignal>;

inline FieldSeries sample_source(const SourceTerm& src, const Grid& g, double t0, double dt, std::size_t levels) {
    FieldSeries s;
    s.reserve(levels);
    for (std::size_t k = 0; k < levels; ++k) s.push_back(src.at(g, t0 + static_cast<double>(k) * dt));
    return s;
}

inline WindowOutcome run_window(const FieldSeries& theta_guess, const SystemState& state0, const SourceTerm& source,
                                const DriverConfig& cfg, const ModelParams& params) {
    const std::size_t steps = theta_guess.size() - 1;
    if (theta_guess.size() < 2) throw DomainError("run_window: need at least one step");
    const Grid& g = state0.rho.grid;

    double eps0 = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < g.size(); ++k) eps0 = std::min(eps0, margin_at(state0.rho[k], state0.xi[k], params));
    if (!(eps0 > 0.0)) return ShrinkSignal{ShrinkReason::margin_lost, "seam state has no margin"};
    eps0 *= 0.5;

    F1Input in;
    in.rho0 = state0.rho;
    in.xi0 = state0.xi;
    in.sigma_bar = sample_source(source, g, state0.t, cfg.dt, steps + 1);
    in.t_start = state0.t;
    in.dt = cfg.dt;
    in.params = params;
    in.inner_tol = cfg.inner_tol;
    in.inner_max_iters = cfg.inner_max_iters;
    in.newton = cfg.newton;
    in.theta = theta_guess;

    WindowResult res;
    for (int it = 1; it <= cfg.outer_max_iters; ++it) {
        try {
            res.f1 = f1_map(in);
        } catch (const SolverError& e) {
            return ShrinkSignal{ShrinkReason::inner_failure, e.what()};
        }
        try {
            res.margin = margin_check(res.f1.rho, res.f1.xi_solution.xi, params, eps0);
        } catch (const MarginViolation& e) {
            return ShrinkSignal{ShrinkReason::margin_lost, e.what()};
        }
        if (res.margin.min_margin < eps0)
            return ShrinkSignal{ShrinkReason::margin_below_eps0,
                                "min margin " + std::to_string(res.margin.min_margin) + " < eps0 " + std::to_string(eps0)};
        FieldSeries next;
        try {
            next = f2_map(res.f1.rho, res.f1.xi_solution.xi, params, cfg.theta_tol);
        } catch (const BracketFailure& e) {
            return ShrinkSignal{ShrinkReason::margin_lost, e.what()};
        }
        const double rate = observed_max_dt(next, cfg.dt);
        if (rate > cfg.M_cap)
            return ShrinkSignal{ShrinkReason::rate_cap, "max |dt theta| " + std::to_string(rate) + " > M_cap"};
        const double inc = l2q_diff(next, in.theta, cfg.dt);
        res.increments.push_back(inc);
        if (inc <= cfg.outer_tol) {
            res.f1_theta = std::move(in.theta);
            res.theta = std::move(next);
            res.observed_max_dt_theta = rate;
            break;
        }
        in.theta = std::move(next);
    }
    if (res.theta.empty())
        return ShrinkSignal{ShrinkReason::outer_budget,
                            "theta increments did not reach outer_tol in " + std::to_string(cfg.outer_max_iters) + " iterations"};

    // Discrete property set of the accepted window.
    const double lo = theta_star_lo(params), hi = theta_star_hi(params);
    res.min_clearance = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t <= steps; ++t) {
        const auto& rho = res.f1.rho[t];
        const auto& xi = res.f1.xi_solution.xi[t];
        const auto& th = res.theta[t];
        for (std::size_t k = 0; k < g.size(); ++k) {
            res.transcendental_residual =
                std::max(res.transcendental_residual, std::abs(lambda(rho[k], th[k], params) + std::sqrt(rho[k] * xi[k])));
            res.min_clearance = std::min(res.min_clearance, th[k] - s_lower(rho[k], params));
            if (!(th[k] >= lo && th[k] <= hi)) throw std::logic_error("run_window: theta left [theta_*, theta^*]");
            if (!(th[k] <= s_upper(rho[k], params))) throw std::logic_error("run_window: theta above s_upper(rho)");
        }
    }
    // The clearance bound holds up to the root-solve tolerance.
    const double clearance_slack = 1e-9;
    if (res.min_clearance < 2.0 * res.margin.delta0 - clearance_slack)
        throw std::logic_error("run_window: theta - s_lower(rho) fell below 2 delta0");
    for (std::size_t t = 0; t < steps; ++t)
        res.pde_residual = std::max(res.pde_residual, step_residual(res.f1.rho[t], res.f1.rho[t + 1],
                                                                    res.f1.xi_solution.sqrt_xi[t], res.f1_theta[t], cfg.dt, params));
    theta_rate_bound(res.theta, res.f1.rho, res.f1.xi_solution, res.margin, params, cfg.dt);
    return res;
}

enum class RunStatus { converged, margin_violation, window_underflow };

inline const char* to_string(RunStatus s) {
    switch (s) {
        case RunStatus::converged: return "Converged";
        case RunStatus::margin_violation: return "MarginViolation";
        case RunStatus::window_underflow: return "WindowUnderflow";
    }
    return "unknown";
}

struct WindowStats {
    double t_start = 0.0;
    double T = 0.0;
    std::size_t steps = 0;
    int outer_iters = 0;
    double theta_residual = 0.0;  ///< last L2(Q) theta increment
    std::vector<double> increments;
    int shrinks = 0;  ///< shrink signals before this window was accepted
    int inner_iters = 0;
    double eps0 = 0.0;
    double min_margin = 0.0;
    double delta0 = 0.0;
    double theta_rate_bound = 0.0;
    double observed_max_dt_theta = 0.0;
    double transcendental_residual = 0.0;
    double pde_residual = 0.0;
    double min_clearance = 0.0;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<SystemState> states;
    std::vector<double> eps0;  ///< margin allowance of the window that produced each state
    std::vector<std::pair<std::string, std::string>> manifest;
};

struct RunResult {
    Trajectory trajectory;
    std::vector<WindowStats> windows;
    std::vector<ShrinkSignal> shrink_log;
    RunStatus status = RunStatus::converged;
    std::string status_detail;
};

inline SystemState initial_state(const InitialTriple& t) { return SystemState{0.0, t.rho0, t.xi0, t.theta0}; }

/// Chains accepted windows from state0 up to the horizon.
inline RunResult continue_in_time(const SystemState& state0, const SourceTerm& source, const DriverConfig& cfg,
                                  const ModelParams& params, double horizon) {
    cfg.check();
    RunResult out;
    auto& traj = out.trajectory;

    auto save = [&](const SystemState& s, double eps0) {
        traj.times.push_back(s.t);
        traj.states.push_back(s);
        traj.eps0.push_back(eps0);
    };

    double seam_margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < state0.rho.size(); ++k)
        seam_margin = std::min(seam_margin, margin_at(state0.rho[k], state0.xi[k], params));
    save(state0, 0.5 * seam_margin);
    if (!(seam_margin > 0.0)) {
        out.status = RunStatus::margin_violation;
        out.status_detail = "initial state has no margin";
        return out;
    }

    const auto horizon_steps = static_cast<std::size_t>(std::llround(horizon / cfg.dt));
    std::size_t global_step = 0;
    SystemState state = state0;
    double T = cfg.T_init;
    int shrinks_here = 0;

    while (global_step < horizon_steps) {
        const std::size_t remaining = horizon_steps - global_step;
        auto steps = static_cast<std::size_t>(std::llround(T / cfg.dt));
        if (steps < static_cast<std::size_t>(cfg.min_window_steps) && steps < remaining) {
            const bool margin_cause = !out.shrink_log.empty() &&
                                      (out.shrink_log.back().reason == ShrinkReason::margin_below_eps0 ||
                                       out.shrink_log.back().reason == ShrinkReason::margin_lost);
            out.status = margin_cause ? RunStatus::margin_violation : RunStatus::window_underflow;
            out.status_detail = "window shrank below " + std::to_string(cfg.min_window_steps) + " steps at t=" +
                                std::to_string(state.t) +
                                (out.shrink_log.empty() ? std::string() : " (" + out.shrink_log.back().detail + ")");
            return out;
        }
        steps = std::min(steps, remaining);

        const FieldSeries guess(steps + 1, state.theta);
        WindowOutcome outcome = run_window(guess, state, source, cfg, params);
        if (auto* sig = std::get_if<ShrinkSignal>(&outcome)) {
            out.shrink_log.push_back(*sig);
            ++shrinks_here;
            T = static_cast<double>(steps) * cfg.dt * cfg.window_shrink;
            continue;
        }
        auto& win = std::get<WindowResult>(outcome);

        WindowStats st;
        st.t_start = state.t;
        st.T = static_cast<double>(steps) * cfg.dt;
        st.steps = steps;
        st.outer_iters = static_cast<int>(win.increments.size());
        st.theta_residual = win.increments.back();
        st.increments = win.increments;
        st.shrinks = shrinks_here;
        st.inner_iters = win.f1.inner_iters;
        st.eps0 = win.margin.eps0;
        st.min_margin = win.margin.min_margin;
        st.delta0 = win.margin.delta0;
        st.theta_rate_bound = win.margin.max_dt_theta;
        st.observed_max_dt_theta = win.observed_max_dt_theta;
        st.transcendental_residual = win.transcendental_residual;
        st.pde_residual = win.pde_residual;
        st.min_clearance = win.min_clearance;
        out.windows.push_back(std::move(st));
        shrinks_here = 0;

        // Every stride-th global step is saved, and always the last level of a window.
        for (std::size_t k = 1; k <= steps; ++k) {
            const std::size_t gs = global_step + k;
            if (gs % static_cast<std::size_t>(cfg.save_stride) != 0 && k != steps) continue;
            save(SystemState{static_cast<double>(gs) * cfg.dt, win.f1.rho[k], win.f1.xi_solution.xi[k], win.theta[k]},
                 win.margin.eps0);
        }
        state = SystemState{static_cast<double>(global_step + steps) * cfg.dt, win.f1.rho[steps],
                            win.f1.xi_solution.xi[steps], win.theta[steps]};
        global_step += steps;
        T = std::min(cfg.T_init, T / cfg.window_shrink);
    }
    out.status = RunStatus::converged;
    return out;
}

}  // namespace tacsim
