#pragma once

// Admissibility of initial triples (rho0, xi0, theta0) and synthesis of
// compatible triples from a given rho0.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "tacsim/errors.hpp"
#include "tacsim/grid.hpp"
#include "tacsim/model.hpp"
#include "tacsim/theta_map.hpp"

namespace tacsim {

struct InitialTriple {
    ScalarField rho0;
    ScalarField xi0;
    ScalarField theta0;
    double eps0 = 0.0;
};

struct ValidationReport {
    struct Check {
        std::string name;
        bool passed = false;
        std::string detail;
    };
    std::vector<Check> checks;
    double eps0 = 0.0;
    double min_margin = 0.0;

    [[nodiscard]] bool passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
    }
    [[nodiscard]] bool failed(const std::string& name) const {
        return std::any_of(checks.begin(), checks.end(), [&](const Check& c) { return c.name == name && !c.passed; });
    }
};

inline constexpr double kCompatibilityTol = 1e-10;

namespace detail {

inline std::string fmt_value(const char* label, double v) {
    std::ostringstream os;
    os.precision(6);
    os << label << '=' << v;
    return os.str();
}

/// Largest |d_n u| on the boundary by the second-order one-sided difference.
inline double max_boundary_normal_derivative(const ScalarField& u) {
    const Grid& g = u.grid;
    const int n = g.n;
    auto one_sided = [&](double a0, double a1, double a2) { return std::abs(-3.0 * a0 + 4.0 * a1 - a2) / (2.0 * g.h); };
    if (g.dim == 1) return std::max(one_sided(u[0], u[1], u[2]), one_sided(u[n - 1], u[n - 2], u[n - 3]));
    double m = 0.0;
    auto at = [&](int i, int j) { return u[static_cast<std::size_t>(j) * n + i]; };
    for (int t = 0; t < n; ++t) {
        m = std::max(m, one_sided(at(0, t), at(1, t), at(2, t)));
        m = std::max(m, one_sided(at(n - 1, t), at(n - 2, t), at(n - 3, t)));
        m = std::max(m, one_sided(at(t, 0), at(t, 1), at(t, 2)));
        m = std::max(m, one_sided(at(t, n - 1), at(t, n - 2), at(t, n - 3)));
    }
    return m;
}

inline double max_interior_abs(const ScalarField& u) {
    const Grid& g = u.grid;
    const int n = g.n;
    double m = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        const int i = static_cast<int>(k % n);
        const int j = static_cast<int>(k / n);
        const bool interior = i > 0 && i < n - 1 && (g.dim == 1 || (j > 0 && j < n - 1));
        if (interior) m = std::max(m, std::abs(u[k]));
    }
    return m;
}

inline double max_forward_gradient(const ScalarField& u) {
    const Grid& g = u.grid;
    const int n = g.n;
    double m = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        const int i = static_cast<int>(k % n);
        const int j = static_cast<int>(k / n);
        if (i + 1 < n) m = std::max(m, std::abs(u[k + 1] - u[k]) / g.h);
        if (g.dim == 2 && j + 1 < n) m = std::max(m, std::abs(u[k + n] - u[k]) / g.h);
    }
    return m;
}

}  // namespace detail

inline ValidationReport validate(const InitialTriple& t, const ModelParams& p) {
    ValidationReport rep;
    auto add = [&](std::string name, bool ok, std::string detail) {
        rep.checks.push_back({std::move(name), ok, std::move(detail)});
    };
    if (!(t.rho0.grid == t.xi0.grid && t.rho0.grid == t.theta0.grid))
        throw DomainError("validate: fields live on different grids");

    bool in_range = true;
    for (std::size_t k = 0; k < t.rho0.size(); ++k) {
        const double r = t.rho0[k], x = t.xi0[k], th = t.theta0[k];
        if (!(r > 0.0 && r < 1.0) || !(x >= 0.0) || !(th > 0.0) || !std::isfinite(x) || !std::isfinite(th))
            in_range = false;
    }
    add("range", in_range, "0 < rho0 < 1, xi0 >= 0, theta0 > 0");
    if (!in_range) return rep;

    double max_resid = 0.0, sup_zeta = -std::numeric_limits<double>::infinity();
    double min_clear = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < t.rho0.size(); ++k) {
        const double r = t.rho0[k], q = std::sqrt(r * t.xi0[k]), th = t.theta0[k];
        max_resid = std::max(max_resid, std::abs(lambda(r, th, p) + q));
        sup_zeta = std::max(sup_zeta, q - p.cv * std::exp(-1.0 - p.cstar() * r));
        min_clear = std::min(min_clear, th - s_lower(r, p));
    }
    rep.min_margin = -sup_zeta;
    rep.eps0 = 0.5 * rep.min_margin;

    add("compatibility", max_resid <= kCompatibilityTol, detail::fmt_value("max |lambda + sqrt(rho0 xi0)|", max_resid));
    // Both sides carry the roundoff of sqrt(rho0 * xi0): a margin within it counts as zero.
    const double roundoff = 1e-12 * p.cv;
    add("necessary_condition", sup_zeta <= roundoff, detail::fmt_value("sup zeta", sup_zeta));
    add("strict_margin", sup_zeta < -roundoff, detail::fmt_value("sup zeta", sup_zeta));
    add("branch", min_clear >= 0.0, detail::fmt_value("min theta0 - s_lower(rho0)", min_clear));

    // The one-sided difference of a Neumann-compatible field is O(h^2 |u'''|), so the
    // allowance scales with the interior curvature; data with a genuine boundary
    // slope keeps an O(1) normal derivative and fails on any fine enough grid.
    const ScalarField lap = laplacian_neumann(t.rho0);
    const double allowance = t.rho0.grid.h * std::max(1.0, detail::max_interior_abs(lap));
    const double dn = detail::max_boundary_normal_derivative(t.rho0);
    add("neumann_boundary", dn <= allowance,
        detail::fmt_value("max |d_n rho0|", dn) + ", " + detail::fmt_value("allowance", allowance));
    add("bounded_laplacian", lap.all_finite(), detail::fmt_value("max |Lap rho0|", norms(lap).linf));

    ScalarField sq(t.xi0.grid);
    for (std::size_t k = 0; k < sq.size(); ++k) sq[k] = std::sqrt(t.xi0[k]);
    const double grad = detail::max_forward_gradient(sq);
    add("sqrt_xi_gradient", std::isfinite(grad), detail::fmt_value("max |grad sqrt(xi0)|", grad));
    return rep;
}

/// theta0 = s_lower + theta_frac (s_upper - s_lower), xi0 = lambda(rho0, theta0)^2 / rho0.
inline InitialTriple synthesize(const ScalarField& rho0, double theta_frac, const ModelParams& p) {
    if (!(theta_frac >= 0.0 && theta_frac <= 1.0)) throw DomainError("synthesize: theta_frac must lie in [0,1]");
    InitialTriple t;
    t.rho0 = rho0;
    t.xi0 = ScalarField(rho0.grid);
    t.theta0 = ScalarField(rho0.grid);
    double min_margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < rho0.size(); ++k) {
        const double r = rho0[k];
        require_open_unit(r, "synthesize");
        const double lo = s_lower(r, p), hi = s_upper(r, p);
        const double th = theta_frac == 1.0 ? hi : lo + theta_frac * (hi - lo);
        const double lam = lambda(r, th, p);
        t.theta0[k] = th;
        // lambda(r, s_upper) vanishes exactly; evaluating it leaves O(eps) noise
        t.xi0[k] = theta_frac == 1.0 ? 0.0 : lam * lam / r;
        min_margin = std::min(min_margin, margin_at(r, t.xi0[k], p));
    }
    t.eps0 = 0.5 * min_margin;
    return t;
}

}  // namespace tacsim
