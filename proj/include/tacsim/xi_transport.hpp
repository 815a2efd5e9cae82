#pragma once

// Pointwise ODE  d/dt xi + (kappa |dt v|^2 + sigma) / sqrt(v) * sqrt(xi) = 0
// integrated for its maximal solution.
//
// In y = sqrt(xi) the equation reads y' = -g/2 with g = (kappa |dt v|^2 + sigma)/sqrt(v),
// which no longer depends on y. The non-uniqueness sits at y = 0: while g >= 0 the
// solution is held at zero, and as soon as g < 0 the maximal solution leaves zero
// with slope -g/2 > 0.

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "tacsim/errors.hpp"
#include "tacsim/grid.hpp"

namespace tacsim {

/// Coefficients for the xi transport over one window of N steps.
/// v and sigma_bar are level series (N+1 entries), dtv is an interval series
/// (N entries, dtv[k] is the rate on [t_k, t_k+1]).
struct XiOdeInput {
    FieldSeries v;
    FieldSeries dtv;
    FieldSeries sigma_bar;
    ScalarField xi0;
    double dt = 0.0;
    double kappa = 1.0;

    [[nodiscard]] std::size_t steps() const noexcept { return dtv.size(); }
};

struct XiSolution {
    FieldSeries xi;
    FieldSeries sqrt_xi;
    FieldSeries chi;  ///< 1 where xi > 0, 0 elsewhere
};

namespace detail {

inline double xi_rate_coefficient(const XiOdeInput& in, std::size_t k, std::size_t p) {
    const double v_mid = 0.5 * (in.v[k][p] + in.v[k + 1][p]);
    const double s_mid = 0.5 * (in.sigma_bar[k][p] + in.sigma_bar[k + 1][p]);
    const double dv = in.dtv[k][p];
    return (in.kappa * dv * dv + s_mid) / std::sqrt(v_mid);
}

inline void check_xi_input(const XiOdeInput& in) {
    const std::size_t n = in.steps();
    if (in.v.size() != n + 1 || in.sigma_bar.size() != n + 1)
        throw DomainError("phi_maximal: v and sigma_bar need one more level than dtv");
    if (!(in.dt > 0.0)) throw DomainError("phi_maximal: dt must be positive");
    for (const auto& f : in.v)
        for (double x : f.values)
            if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("phi_maximal: v must be strictly positive");
    for (double x : in.xi0.values)
        if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError("phi_maximal: xi0 must be nonnegative");
}

}  // namespace detail

inline XiSolution phi_maximal(const XiOdeInput& in) {
    detail::check_xi_input(in);
    const std::size_t n = in.steps();
    const Grid& g = in.xi0.grid;

    XiSolution sol;
    sol.sqrt_xi.reserve(n + 1);
    sol.xi.reserve(n + 1);
    ScalarField y(g), xi = in.xi0;
    for (std::size_t p = 0; p < y.size(); ++p) y[p] = std::sqrt(in.xi0[p]);
    sol.sqrt_xi.push_back(y);
    sol.xi.push_back(xi);

    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t p = 0; p < y.size(); ++p) {
            const double rate = detail::xi_rate_coefficient(in, k, p);
            // Explicit midpoint; the rate is y-independent so both stages coincide.
            // Clamp at zero while rate >= 0, release from zero when rate < 0.
            const double next = std::max(y[p] - 0.5 * in.dt * rate, 0.0);
            // a node that does not move keeps xi exactly instead of re-squaring its root
            if (next != y[p]) xi[p] = next * next;
            y[p] = next;
        }
        sol.sqrt_xi.push_back(y);
        sol.xi.push_back(xi);
    }

    sol.chi.reserve(n + 1);
    for (const auto& x : sol.xi) {
        ScalarField chi(g);
        for (std::size_t p = 0; p < x.size(); ++p) chi[p] = x[p] > 0.0 ? 1.0 : 0.0;
        sol.chi.push_back(std::move(chi));
    }
    return sol;
}

/// d/dt sqrt(xi) = -chi g / 2 on each interval; chi is taken as active if
/// sqrt(xi) is positive at either end of the interval.
inline FieldSeries dt_sqrt_xi(const XiSolution& sol, const XiOdeInput& in) {
    FieldSeries out;
    out.reserve(in.steps());
    for (std::size_t k = 0; k < in.steps(); ++k) {
        ScalarField d(in.xi0.grid);
        for (std::size_t p = 0; p < d.size(); ++p) {
            const bool active = sol.chi[k][p] > 0.0 || sol.chi[k + 1][p] > 0.0;
            d[p] = active ? -0.5 * detail::xi_rate_coefficient(in, k, p) : 0.0;
        }
        out.push_back(std::move(d));
    }
    return out;
}

}  // namespace tacsim
