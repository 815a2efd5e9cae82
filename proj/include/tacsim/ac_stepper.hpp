#pragma once

// The map theta -> (rho, xi): the Allen-Cahn equation
//   kappa dt rho - Lap rho + f'(rho) - c0 theta = sqrt(xi / rho),  d_n rho = 0,
// coupled to the maximal xi transport by a Picard loop over the window.
//
// Time stepping is a convex splitting: f1' and the Laplacian are implicit,
// f2', c0 theta and the sqrt(xi/rho) source are lagged.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "tacsim/errors.hpp"
#include "tacsim/grid.hpp"
#include "tacsim/model.hpp"
#include "tacsim/xi_transport.hpp"

namespace tacsim {

struct NewtonOptions {
    double tol = 1e-10;  ///< max-norm residual
    int max_iters = 50;
};

namespace detail {

// Solves (shift + diag - Lap) x = b for the Neumann Laplacian.
// 1D: Thomas algorithm. 2D: CG in the trapezoid-weighted inner product,
// where the mirrored Laplacian is self-adjoint; Jacobi preconditioner.
inline void solve_shifted_laplacian(const Grid& g, double shift, std::span<const double> diag,
                                    std::span<const double> b, std::span<double> x) {
    const std::size_t m = g.size();
    const double ih2 = 1.0 / (g.h * g.h);
    if (g.dim == 1) {
        const int n = g.n;
        std::vector<double> c(n), d(n);
        auto lower = [&](int i) { return i == n - 1 ? -2.0 * ih2 : -ih2; };
        auto upper = [&](int i) { return i == 0 ? -2.0 * ih2 : -ih2; };
        double beta = shift + 2.0 * ih2 + diag[0];
        c[0] = upper(0) / beta;
        d[0] = b[0] / beta;
        for (int i = 1; i < n; ++i) {
            beta = shift + 2.0 * ih2 + diag[i] - lower(i) * c[i - 1];
            c[i] = i < n - 1 ? upper(i) / beta : 0.0;
            d[i] = (b[i] - lower(i) * d[i - 1]) / beta;
        }
        x[n - 1] = d[n - 1];
        for (int i = n - 2; i >= 0; --i) x[i] = d[i] - c[i] * x[i + 1];
        return;
    }

    std::vector<double> lap(m), r(m), z(m), p(m), ap(m), pre(m);
    auto apply = [&](std::span<const double> in, std::span<double> out) {
        apply_laplacian(g, in, lap);
        for (std::size_t k = 0; k < m; ++k) out[k] = g.weight(k) * ((shift + diag[k]) * in[k] - lap[k]);
    };
    for (std::size_t k = 0; k < m; ++k) pre[k] = 1.0 / (g.weight(k) * (shift + 4.0 * ih2 + diag[k]));

    std::fill(x.begin(), x.end(), 0.0);
    double bnorm = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        r[k] = g.weight(k) * b[k];
        bnorm += r[k] * r[k];
        z[k] = pre[k] * r[k];
        p[k] = z[k];
    }
    bnorm = std::sqrt(bnorm);
    if (bnorm == 0.0) return;
    double rz = 0.0;
    for (std::size_t k = 0; k < m; ++k) rz += r[k] * z[k];
    const int max_iters = static_cast<int>(4 * m + 100);
    for (int it = 0; it < max_iters; ++it) {
        apply(p, ap);
        double pap = 0.0;
        for (std::size_t k = 0; k < m; ++k) pap += p[k] * ap[k];
        const double alpha = rz / pap;
        double rr = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
            rr += r[k] * r[k];
        }
        if (std::sqrt(rr) <= 1e-14 * bnorm) return;
        double rz_new = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            z[k] = pre[k] * r[k];
            rz_new += r[k] * z[k];
        }
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t k = 0; k < m; ++k) p[k] = z[k] + beta * p[k];
    }
}

inline double max_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace detail

/// Explicit right-hand side of one step: -f2'(rho) + c0 theta + sqrt(xi)/sqrt(rho).
inline ScalarField lagged_source(const ScalarField& rho_prev, const ScalarField& sqrt_xi,
                                 const ScalarField& theta_now, const ModelParams& p) {
    ScalarField rhs(rho_prev.grid);
    for (std::size_t k = 0; k < rhs.size(); ++k)
        rhs[k] = -p.potential.df2(rho_prev[k]) + p.c0 * theta_now[k] + sqrt_xi[k] / std::sqrt(rho_prev[k]);
    return rhs;
}

/// Max-norm residual of the discrete step equation for a candidate rho_next.
inline double step_residual(const ScalarField& rho_prev, const ScalarField& rho_next, const ScalarField& sqrt_xi,
                            const ScalarField& theta_now, double dt, const ModelParams& p) {
    const ScalarField rhs = lagged_source(rho_prev, sqrt_xi, theta_now, p);
    const ScalarField lap = laplacian_neumann(rho_next);
    double m = 0.0;
    for (std::size_t k = 0; k < rhs.size(); ++k) {
        const double r = p.kappa / dt * (rho_next[k] - rho_prev[k]) - lap[k] + p.potential.df1(rho_next[k]) - rhs[k];
        m = std::max(m, std::abs(r));
    }
    return m;
}

/// One semi-implicit step
///   (kappa/dt)(u - rho) - Lap u + f1'(u) = -f2'(rho) + c0 theta + sqrt(xi)/sqrt(rho)
/// solved by damped Newton; the Jacobian (kappa/dt) - Lap + diag f1''(u) is SPD.
inline ScalarField pde_substep(const ScalarField& rho_prev, const ScalarField& sqrt_xi, const ScalarField& theta_now,
                               double dt, const ModelParams& p, NewtonOptions opts = {}) {
    const Grid& g = rho_prev.grid;
    const std::size_t m = g.size();
    for (std::size_t k = 0; k < m; ++k) {
        if (!(rho_prev[k] > 0.0 && rho_prev[k] < 1.0))
            throw RangeViolation("pde_substep: previous rho outside (0,1)");
        if (!(sqrt_xi[k] >= 0.0)) throw DomainError("pde_substep: sqrt_xi must be nonnegative");
    }
    const ScalarField rhs = lagged_source(rho_prev, sqrt_xi, theta_now, p);
    const double shift = p.kappa / dt;

    std::vector<double> u = rho_prev.values;
    std::vector<double> lap(m), res(m), jd(m), du(m), trial(m);

    auto residual = [&](std::span<const double> x, std::span<double> out) {
        apply_laplacian(g, x, lap);
        for (std::size_t k = 0; k < m; ++k)
            out[k] = shift * (x[k] - rho_prev[k]) - lap[k] + p.potential.df1(x[k]) - rhs[k];
        return detail::max_norm(out);
    };

    auto finish = [&] {
        ScalarField out(g);
        out.values = std::move(u);
        return out;
    };

    double rnorm = residual(u, res);
    for (int it = 0; it < opts.max_iters; ++it) {
        if (rnorm <= opts.tol) return finish();
        for (std::size_t k = 0; k < m; ++k) {
            jd[k] = p.potential.d2f1(u[k]);
            res[k] = -res[k];
        }
        detail::solve_shifted_laplacian(g, shift, jd, res, du);
        const double full_step = detail::max_norm(du);

        bool accepted = false;
        double alpha = 1.0;
        double trial_norm = 0.0;
        for (int backtrack = 0; backtrack < 60; ++backtrack) {
            bool inside = true;
            for (std::size_t k = 0; k < m && inside; ++k) {
                trial[k] = u[k] + alpha * du[k];
                inside = trial[k] > 0.0 && trial[k] < 1.0;
            }
            if (inside) {
                trial_norm = residual(trial, res);
                accepted = trial_norm < rnorm || alpha * full_step < 1e-15;
                if (accepted) break;
            }
            alpha *= 0.5;
        }
        if (!accepted) throw RangeViolation("pde_substep: no damped Newton step stays inside (0,1)");
        u.swap(trial);
        // Roundoff floor of the stiff terms: a vanishing update at near-tolerance residual is converged.
        if (alpha * full_step < 1e-15 && trial_norm <= 1e3 * opts.tol) return finish();
        rnorm = trial_norm;
    }
    if (rnorm <= opts.tol) return finish();
    throw NewtonDivergence("pde_substep: Newton did not reach residual " + std::to_string(opts.tol));
}

struct F1Input {
    FieldSeries theta;      ///< N+1 levels, must lie in [theta_*, theta^*]
    ScalarField rho0;
    ScalarField xi0;
    FieldSeries sigma_bar;  ///< N+1 levels
    double t_start = 0.0;
    double dt = 0.0;
    ModelParams params;
    double inner_tol = 1e-12;
    int inner_max_iters = 100;
    double xi_ceiling = std::numeric_limits<double>::infinity();
    NewtonOptions newton{};

    [[nodiscard]] std::size_t steps() const noexcept { return theta.empty() ? 0 : theta.size() - 1; }
    [[nodiscard]] double length() const noexcept { return static_cast<double>(steps()) * dt; }
};

struct BoundsReport {
    double min_rho = 0.0;
    double max_rho = 0.0;
    double max_xi = 0.0;
};

struct F1Output {
    FieldSeries rho;    ///< N+1 levels
    FieldSeries dtrho;  ///< N intervals
    XiSolution xi_solution;
    XiOdeInput xi_input;  ///< coefficients the final xi was computed from
    BoundsReport bounds;
    int inner_iters = 0;
    double inner_residual = 0.0;
    std::vector<double> picard_distances;  ///< sup-norm change per inner iterate
};

inline FieldSeries constant_series(const ScalarField& f, std::size_t levels) { return FieldSeries(levels, f); }

inline F1Output f1_map(const F1Input& in) {
    const std::size_t n = in.steps();
    if (n == 0) throw DomainError("f1_map: empty window");
    if (in.sigma_bar.size() != n + 1) throw DomainError("f1_map: sigma_bar must have one entry per level");
    const double lo = theta_star_lo(in.params), hi = theta_star_hi(in.params);
    const double slack = 1e-14;
    for (const auto& th : in.theta)
        for (double v : th.values)
            if (!(v >= lo * (1.0 - slack) && v <= hi * (1.0 + slack)))
                throw DomainError("f1_map: theta outside [theta_*, theta^*]");
    for (std::size_t k = 0; k < in.rho0.size(); ++k) {
        if (!(in.rho0[k] > 0.0 && in.rho0[k] < 1.0)) throw DomainError("f1_map: rho0 outside (0,1)");
        if (!(in.xi0[k] >= 0.0)) throw DomainError("f1_map: xi0 negative");
    }

    bool sigma_nonneg = true;
    for (const auto& s : in.sigma_bar)
        for (double v : s.values) sigma_nonneg = sigma_nonneg && v >= 0.0;
    const double ceiling = sigma_nonneg ? std::min(in.xi_ceiling, in.xi0.max()) : in.xi_ceiling;

    XiOdeInput xin;
    xin.v = constant_series(in.rho0, n + 1);
    xin.dtv = constant_series(ScalarField(in.rho0.grid, 0.0), n);
    xin.sigma_bar = in.sigma_bar;
    xin.xi0 = in.xi0;
    xin.dt = in.dt;
    xin.kappa = in.params.kappa;

    F1Output out;
    bool converged = false;
    for (int it = 1; it <= in.inner_max_iters; ++it) {
        const XiSolution xs = phi_maximal(xin);
        FieldSeries rho;
        rho.reserve(n + 1);
        rho.push_back(in.rho0);
        for (std::size_t k = 0; k < n; ++k)
            rho.push_back(pde_substep(rho[k], xs.sqrt_xi[k], in.theta[k], in.dt, in.params, in.newton));
        const double dist = max_abs_diff(rho, xin.v);
        out.picard_distances.push_back(dist);
        xin.dtv = time_differences(rho, in.dt);
        xin.v = std::move(rho);
        out.inner_iters = it;
        out.inner_residual = dist;
        if (dist <= in.inner_tol) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw NoContraction("f1_map: inner Picard loop exceeded " + std::to_string(in.inner_max_iters) +
                            " iterations (last change " + std::to_string(out.inner_residual) + ")");

    out.xi_solution = phi_maximal(xin);
    out.rho = xin.v;
    out.dtrho = xin.dtv;
    out.xi_input = std::move(xin);

    out.bounds.min_rho = std::numeric_limits<double>::infinity();
    out.bounds.max_rho = -std::numeric_limits<double>::infinity();
    for (const auto& r : out.rho) {
        out.bounds.min_rho = std::min(out.bounds.min_rho, r.min());
        out.bounds.max_rho = std::max(out.bounds.max_rho, r.max());
    }
    for (const auto& x : out.xi_solution.xi) out.bounds.max_xi = std::max(out.bounds.max_xi, x.max());
    if (!(out.bounds.min_rho > 0.0 && out.bounds.max_rho < 1.0))
        throw RangeViolation("f1_map: rho left (0,1)");
    if (out.bounds.max_xi > ceiling)
        throw RangeViolation("f1_map: xi exceeded its ceiling " + std::to_string(ceiling));
    return out;
}

/// Discrete free energy  sum w (1/2 |grad rho|^2 + f(rho) - c rho)  with a given
/// linear coefficient field c (e.g. c0 theta + sqrt(xi/rho) lagged). The gradient
/// part is the edge sum whose variation is the mirrored Laplacian.
inline double discrete_energy(const ScalarField& rho, const ScalarField& coeff, const ModelParams& p) {
    const Grid& g = rho.grid;
    const int n = g.n;
    double e = 0.0;
    for (std::size_t k = 0; k < rho.size(); ++k)
        e += g.weight(k) * (f_value(rho[k], p) - coeff[k] * rho[k]);
    auto edge_w = [&](int i) { return (i == 0 || i == n - 1) ? 0.5 * g.h : g.h; };
    if (g.dim == 1) {
        for (int i = 0; i + 1 < n; ++i) {
            const double d = (rho[i + 1] - rho[i]) / g.h;
            e += 0.5 * g.h * d * d;
        }
        return e;
    }
    for (int j = 0; j < n; ++j)
        for (int i = 0; i + 1 < n; ++i) {
            const double dx = (rho[static_cast<std::size_t>(j) * n + i + 1] - rho[static_cast<std::size_t>(j) * n + i]) / g.h;
            const double dy = (rho[static_cast<std::size_t>(i) * n + j + n] - rho[static_cast<std::size_t>(i) * n + j]) / g.h;
            e += 0.5 * g.h * edge_w(j) * dx * dx;  // x-edges in row j
            e += 0.5 * g.h * edge_w(j) * dy * dy;  // y-edges in column j (rows i, i+1)
        }
    return e;
}

}  // namespace tacsim
