#pragma once

// Physical parameters, the double-well potential f = f1 + f2, and the
// consistency function lambda(r, s) = c0 r s + cv s ln s together with the
// geometry of its admissible branch.

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "tacsim/errors.hpp"

namespace tacsim {

enum class PotentialKind { logarithmic, user_supplied };

/// f = f1 + f2 on (0,1): f1 convex and singular at the endpoints, f2 smooth with
/// bounded derivative. The constant c0*theta_c is already folded into f2'.
struct PotentialSpec {
    using Fn = std::function<double(double)>;

    PotentialKind kind = PotentialKind::logarithmic;
    double a = 3.0;  ///< quadratic coefficient of the logarithmic well (metadata otherwise)
    Fn f1, df1, d2f1;
    Fn f2, df2;
    double m2_base = 0.0;  ///< sup |f2'| over (0,1)

    /// f1 = r ln r + (1-r) ln(1-r) + ln 2,  f2 = a r (1-r) + shift r.
    static PotentialSpec logarithmic(double a, double shift = 0.0) {
        PotentialSpec p;
        p.kind = PotentialKind::logarithmic;
        p.a = a;
        p.f1 = [](double r) { return r * std::log(r) + (1.0 - r) * std::log1p(-r) + std::numbers::ln2; };
        p.df1 = [](double r) { return std::log(r) - std::log1p(-r); };
        p.d2f1 = [](double r) { return 1.0 / (r * (1.0 - r)); };
        p.f2 = [a, shift](double r) { return a * r * (1.0 - r) + shift * r; };
        p.df2 = [a, shift](double r) { return a * (1.0 - 2.0 * r) + shift; };
        p.m2_base = std::abs(a) + std::abs(shift);
        return p;
    }

    static PotentialSpec custom(Fn f1, Fn df1, Fn d2f1, Fn f2, Fn df2, double m2_base) {
        PotentialSpec p;
        p.kind = PotentialKind::user_supplied;
        p.a = 0.0;
        p.f1 = std::move(f1);
        p.df1 = std::move(df1);
        p.d2f1 = std::move(d2f1);
        p.f2 = std::move(f2);
        p.df2 = std::move(df2);
        p.m2_base = m2_base;
        return p;
    }
};

struct ModelParams {
    double c0 = 1.0;
    double cv = 1.0;
    double kappa = 1.0;
    double theta_c = 0.0;  ///< metadata; its effect lives inside potential.df2
    PotentialSpec potential = PotentialSpec::logarithmic(3.0);

    [[nodiscard]] double cstar() const noexcept { return c0 / cv; }

    static ModelParams make(double c0, double cv, double kappa = 1.0, double theta_c = 0.0,
                            double a = 3.0) {
        if (!(c0 > 0.0) || !(cv > 0.0) || !(kappa > 0.0))
            throw DomainError("ModelParams: c0, cv and kappa must be positive");
        ModelParams p;
        p.c0 = c0;
        p.cv = cv;
        p.kappa = kappa;
        p.theta_c = theta_c;
        p.potential = PotentialSpec::logarithmic(a, c0 * theta_c);
        return p;
    }
};

inline void require_open_unit(double r, const char* what) {
    if (!(r > 0.0 && r < 1.0))
        throw DomainError(std::string(what) + ": argument must lie in (0,1)");
}

inline double f_prime(double r, const ModelParams& p) {
    require_open_unit(r, "f_prime");
    return p.potential.df1(r) + p.potential.df2(r);
}

inline double f_value(double r, const ModelParams& p) {
    require_open_unit(r, "f_value");
    return p.potential.f1(r) + p.potential.f2(r);
}

inline double lambda(double r, double s, const ModelParams& p) {
    if (!(s > 0.0)) throw DomainError("lambda: s must be positive");
    return p.c0 * r * s + p.cv * s * std::log(s);
}

inline double dlambda_ds(double r, double s, const ModelParams& p) {
    if (!(s > 0.0)) throw DomainError("dlambda_ds: s must be positive");
    return p.c0 * r + p.cv * (1.0 + std::log(s));
}

// Branch geometry of s -> lambda(r, s).

/// Minimiser of lambda(r, .).
inline double s_lower(double r, const ModelParams& p) { return std::exp(-1.0 - p.cstar() * r); }
/// Positive zero of lambda(r, .).
inline double s_upper(double r, const ModelParams& p) { return std::exp(-p.cstar() * r); }
inline double lambda_min(double r, const ModelParams& p) { return -p.cv * s_lower(r, p); }

/// inf over r in (0,1) of s_lower, attained as r -> 1.
inline double theta_star_lo(const ModelParams& p) { return std::exp(-(1.0 + p.cstar())); }
/// sup over r in (0,1) of s_upper, attained as r -> 0.
inline double theta_star_hi(const ModelParams&) { return 1.0; }

/// M2 of the maximum principle with the -c0 theta term absorbed into f2.
inline double m2_bound(const ModelParams& p) { return p.potential.m2_base + p.c0 * theta_star_hi(p); }

/// Sampled structural checks on the potential. Returns the names of violated
/// conditions; empty means the potential looks admissible.
inline std::vector<std::string> check_potential(const PotentialSpec& pot, int samples = 2000) {
    std::vector<std::string> failed;
    bool nonneg = true, convex = true;
    const double hs = 1.0 / samples;
    for (int i = 1; i < samples; ++i) {
        const double r = i * hs;
        if (pot.f1(r) + pot.f2(r) < -1e-12) nonneg = false;
        if (i > 1 && i < samples - 1) {
            const double second = pot.f1(r - hs) - 2.0 * pot.f1(r) + pot.f1(r + hs);
            if (second < -1e-12) convex = false;
        }
    }
    if (!nonneg) failed.emplace_back("nonnegative");
    if (!convex) failed.emplace_back("f1_convex");

    auto fp = [&](double r) { return pot.df1(r) + pot.df2(r); };
    bool left = true, right = true;
    double prev_left = fp(1e-2), prev_right = fp(1.0 - 1e-2);
    for (double e : {1e-4, 1e-6, 1e-8}) {
        const double l = fp(e), rr = fp(1.0 - e);
        if (!(l < prev_left)) left = false;
        if (!(rr > prev_right)) right = false;
        prev_left = l;
        prev_right = rr;
    }
    if (!left) failed.emplace_back("diverges_at_0");
    if (!right) failed.emplace_back("diverges_at_1");
    return failed;
}

}  // namespace tacsim
