#pragma once

// The map (rho, xi) -> theta: pointwise root of lambda(rho, theta) = -sqrt(rho xi)
// on the upper branch s_lower(rho) < theta <= s_upper(rho), with the margin
// bookkeeping that keeps that branch alive.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

#include "tacsim/errors.hpp"
#include "tacsim/grid.hpp"
#include "tacsim/model.hpp"
#include "tacsim/xi_transport.hpp"

namespace tacsim {

struct MarginReport {
    FieldSeries margin;  ///< cv exp(-1 - c* rho) - sqrt(rho xi)
    double eps0 = 0.0;
    double min_margin = 0.0;
    double delta0 = 0.0;  ///< theta - s_lower(rho) >= 2 delta0 wherever margin >= eps0
    double max_rho = 0.0;
    double max_dt_theta = 0.0;
};

inline double margin_at(double r, double xi, const ModelParams& p) {
    return p.cv * std::exp(-1.0 - p.cstar() * r) - std::sqrt(r * xi);
}

/// Clearance from the branch minimiser implied by a margin allowance eps0.
inline double clearance_delta0(double eps0, double max_rho, const ModelParams& p) {
    return 0.5 * std::sqrt(2.0 * eps0 / p.cv * std::exp(-1.0 - p.cstar() * max_rho));
}

/// Margin over a level series. eps0 defaults to half the minimum margin of the
/// first level; pass a positive value to impose a fixed allowance instead.
inline MarginReport margin_check(const FieldSeries& rho, const FieldSeries& xi, const ModelParams& p,
                                 double eps0 = std::numeric_limits<double>::quiet_NaN()) {
    if (rho.empty() || rho.size() != xi.size()) throw DomainError("margin_check: series mismatch");
    MarginReport rep;
    rep.min_margin = std::numeric_limits<double>::infinity();
    double initial_min = std::numeric_limits<double>::infinity();
    rep.max_rho = -std::numeric_limits<double>::infinity();
    rep.margin.reserve(rho.size());
    for (std::size_t t = 0; t < rho.size(); ++t) {
        ScalarField m(rho[t].grid);
        for (std::size_t k = 0; k < m.size(); ++k) {
            const double r = rho[t][k];
            if (!(r > 0.0 && r < 1.0)) throw DomainError("margin_check: rho outside (0,1)");
            if (!(xi[t][k] >= 0.0)) throw DomainError("margin_check: xi negative");
            m[k] = margin_at(r, xi[t][k], p);
            rep.max_rho = std::max(rep.max_rho, r);
        }
        const double mn = m.min();
        rep.min_margin = std::min(rep.min_margin, mn);
        if (t == 0) initial_min = mn;
        rep.margin.push_back(std::move(m));
    }
    rep.eps0 = std::isnan(eps0) ? 0.5 * initial_min : eps0;
    if (rep.min_margin <= 0.0)
        throw MarginViolation("margin_check: sqrt(rho xi) reached cv exp(-1-c* rho) (min margin " +
                              std::to_string(rep.min_margin) + ")");
    rep.delta0 = rep.eps0 > 0.0 ? clearance_delta0(rep.eps0, rep.max_rho, p) : 0.0;
    return rep;
}

/// Root of lambda(r, s) = -q on (s_lower(r), s_upper(r)] by Newton from the
/// bracket midpoint, falling back to bisection whenever Newton leaves the bracket.
inline double solve_theta_branch(double r, double q, const ModelParams& p, double tol = 1e-12) {
    const double upper = s_upper(r, p);
    if (q == 0.0) return upper;
    double lo = s_lower(r, p), hi = upper;
    auto h = [&](double s) { return p.c0 * r * s + p.cv * s * std::log(s) + q; };
    // targets within tol of an endpoint value are roots there, whatever the sign of the roundoff
    if (std::abs(h(hi)) <= tol) return hi;
    if (std::abs(h(lo)) <= tol) return lo;
    if (!(h(lo) < 0.0 && h(hi) > 0.0))
        throw BracketFailure("solve_theta_branch: target outside the upper branch (r=" + std::to_string(r) +
                             ", sqrt(rho xi)=" + std::to_string(q) + ")");
    double s = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double hs = h(s);
        if (std::abs(hs) <= tol) return s;
        (hs < 0.0 ? lo : hi) = s;
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) return s;
        double next = s - hs / dlambda_ds(r, s, p);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        s = next;
    }
    return s;
}

inline FieldSeries f2_map(const FieldSeries& rho, const FieldSeries& xi, const ModelParams& p, double tol = 1e-12) {
    if (rho.size() != xi.size()) throw DomainError("f2_map: series mismatch");
    FieldSeries theta;
    theta.reserve(rho.size());
    for (std::size_t t = 0; t < rho.size(); ++t) {
        ScalarField th(rho[t].grid);
        for (std::size_t k = 0; k < th.size(); ++k)
            th[k] = solve_theta_branch(rho[t][k], std::sqrt(rho[t][k] * xi[t][k]), p, tol);
        theta.push_back(std::move(th));
    }
    return theta;
}

/// Lipschitz constant of theta in terms of (sqrt(rho xi), rho) rates once the
/// clearance theta - s_lower >= 2 delta0 holds.
inline double rate_constant_L0(double delta0, const ModelParams& p) {
    return 1.0 / (p.cv * std::log1p(2.0 * delta0 / theta_star_hi(p)));
}

/// max over points and intervals of L0 (|dt sqrt(rho xi)| + c0 theta^* |dt rho|),
/// by finite differences in time. Also stored in report.max_dt_theta.
inline double theta_rate_bound(const FieldSeries& theta, const FieldSeries& rho, const XiSolution& xi_sol,
                               MarginReport& report, const ModelParams& p, double dt) {
    if (theta.size() != rho.size() || xi_sol.xi.size() != rho.size())
        throw DomainError("theta_rate_bound: series are not aligned");
    const double l0 = rate_constant_L0(report.delta0, p);
    double bound = 0.0;
    for (std::size_t t = 0; t + 1 < rho.size(); ++t) {
        for (std::size_t k = 0; k < rho[t].size(); ++k) {
            const double q0 = std::sqrt(rho[t][k] * xi_sol.xi[t][k]);
            const double q1 = std::sqrt(rho[t + 1][k] * xi_sol.xi[t + 1][k]);
            const double rate = std::abs(q1 - q0) / dt + p.c0 * theta_star_hi(p) * std::abs(rho[t + 1][k] - rho[t][k]) / dt;
            bound = std::max(bound, l0 * rate);
        }
    }
    report.max_dt_theta = bound;
    return bound;
}

/// max |theta(t+dt) - theta(t)| / dt over the series.
inline double observed_max_dt(const FieldSeries& f, double dt) {
    double m = 0.0;
    for (std::size_t t = 0; t + 1 < f.size(); ++t) m = std::max(m, max_abs_diff(f[t + 1], f[t]) / dt);
    return m;
}

}  // namespace tacsim
