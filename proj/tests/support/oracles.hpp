#pragma once

// Reference solutions used by the tests. Deliberately naive: plain bisection
// and fixed-step RK4, written from the formulas rather than from the library.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <random>

namespace oracle {

/// Root of f on [lo, hi] by bisection to a bracket width of ~ulp.
inline double bisect(const std::function<double(double)>& f, double lo, double hi) {
    double flo = f(lo);
    for (int i = 0; i < 400; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fm = f(mid);
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

struct Consts {
    double c0 = 1.0, cv = 1.0, kappa = 1.0, a = 3.0;
};

inline double lam(double r, double s, const Consts& c) { return c.c0 * r * s + c.cv * s * std::log(s); }

/// f'(r) of the logarithmic well, written out directly.
inline double fprime(double r, const Consts& c) { return std::log(r / (1.0 - r)) + c.a * (1.0 - 2.0 * r); }

/// Upper-branch temperature: root of lam(r, s) = -q with s in [e^{-1-c* r}, e^{-c* r}].
inline double theta_upper(double r, double q, const Consts& c) {
    const double cs = c.c0 / c.cv;
    const double lo = std::exp(-1.0 - cs * r), hi = std::exp(-cs * r);
    if (q == 0.0) return hi;
    return bisect([&](double s) { return lam(r, s, c) + q; }, lo, hi);
}

/// Spatially uniform coupled system: kappa rho' = -f'(rho) + c0 theta + y / sqrt(rho),
/// y = sqrt(xi), y' = -(kappa rho'^2 + sigma) / (2 sqrt(rho)) (held at 0 while the rate is
/// nonpositive and y = 0), theta from the upper branch of lam(rho, theta) = -sqrt(rho) y.
struct UniformState {
    double rho, y;
};

inline double uniform_theta(const UniformState& s, const Consts& c) { return theta_upper(s.rho, std::sqrt(s.rho) * s.y, c); }

inline UniformState uniform_rhs(const UniformState& s, double sigma, const Consts& c) {
    const double th = uniform_theta(s, c);
    const double drho = (-fprime(s.rho, c) + c.c0 * th + s.y / std::sqrt(s.rho)) / c.kappa;
    double dy = -(c.kappa * drho * drho + sigma) / (2.0 * std::sqrt(s.rho));
    if (s.y <= 0.0 && dy < 0.0) dy = 0.0;
    return {drho, dy};
}

inline UniformState rk4_uniform(UniformState s, double sigma, double t_end, double h, const Consts& c) {
    const int n = static_cast<int>(std::llround(t_end / h));
    for (int i = 0; i < n; ++i) {
        auto k1 = uniform_rhs(s, sigma, c);
        auto k2 = uniform_rhs({s.rho + 0.5 * h * k1.rho, s.y + 0.5 * h * k1.y}, sigma, c);
        auto k3 = uniform_rhs({s.rho + 0.5 * h * k2.rho, s.y + 0.5 * h * k2.y}, sigma, c);
        auto k4 = uniform_rhs({s.rho + h * k3.rho, s.y + h * k3.y}, sigma, c);
        s.rho += h / 6.0 * (k1.rho + 2 * k2.rho + 2 * k3.rho + k4.rho);
        s.y = std::max(0.0, s.y + h / 6.0 * (k1.y + 2 * k2.y + 2 * k3.y + k4.y));
    }
    return s;
}

/// Scalar Allen-Cahn ODE with frozen theta and xi: kappa rho' = -f'(rho) + c0 theta + sqrt(xi / rho).
inline double rk4_rho(double rho, double theta, double xi, double t_end, double h, const Consts& c) {
    auto f = [&](double r) { return (-fprime(r, c) + c.c0 * theta + std::sqrt(xi / r)) / c.kappa; };
    const int n = static_cast<int>(std::llround(t_end / h));
    for (int i = 0; i < n; ++i) {
        const double k1 = f(rho), k2 = f(rho + 0.5 * h * k1), k3 = f(rho + 0.5 * h * k2), k4 = f(rho + h * k3);
        rho += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return rho;
}

/// Uniform equilibrium with xi = 0 and theta = e^{-c* rho}: f'(rho) = c0 e^{-c* rho}.
inline double equilibrium_rho(const Consts& c, double lo, double hi) {
    const double cs = c.c0 / c.cv;
    return bisect([&](double r) { return fprime(r, c) - c.c0 * std::exp(-cs * r); }, lo, hi);
}

inline std::mt19937_64 rng(unsigned long long seed) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& g, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(g); }

}  // namespace oracle
