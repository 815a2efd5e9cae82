#pragma once

// Uniform grids on the unit interval/square, scalar fields on them, the
// homogeneous-Neumann Laplacian (ghost-point mirror) and discrete norms.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tacsim/errors.hpp"

namespace tacsim {

struct Grid {
    int dim = 1;
    int n = 3;
    double h = 0.5;

    static Grid make(int dim, int n) {
        if (dim != 1 && dim != 2) throw DomainError("Grid: dim must be 1 or 2");
        if (n < 3) throw DomainError("Grid: need at least 3 points per axis");
        return Grid{dim, n, 1.0 / (n - 1)};
    }

    [[nodiscard]] std::size_t size() const noexcept {
        return dim == 1 ? static_cast<std::size_t>(n) : static_cast<std::size_t>(n) * n;
    }
    [[nodiscard]] double x(std::size_t k) const noexcept { return static_cast<double>(k % n) * h; }
    [[nodiscard]] double y(std::size_t k) const noexcept {
        return dim == 1 ? 0.0 : static_cast<double>(k / n) * h;
    }

    /// Trapezoid cell measure of point k; weights sum to 1 (the domain measure).
    [[nodiscard]] double weight(std::size_t k) const noexcept {
        auto axis = [this](std::size_t i) { return (i == 0 || i == static_cast<std::size_t>(n - 1)) ? 0.5 * h : h; };
        if (dim == 1) return axis(k);
        return axis(k % n) * axis(k / n);
    }

    friend bool operator==(const Grid&, const Grid&) = default;
};

struct ScalarField {
    Grid grid;
    std::vector<double> values;

    ScalarField() = default;
    explicit ScalarField(const Grid& g, double fill = 0.0) : grid(g), values(g.size(), fill) {}

    static ScalarField from_function(const Grid& g, const std::function<double(double, double)>& fn) {
        ScalarField f(g);
        for (std::size_t k = 0; k < f.size(); ++k) f.values[k] = fn(g.x(k), g.y(k));
        return f;
    }

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
    double& operator[](std::size_t k) noexcept { return values[k]; }
    double operator[](std::size_t k) const noexcept { return values[k]; }

    [[nodiscard]] bool all_finite() const noexcept {
        return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
    }
    [[nodiscard]] double min() const { return *std::min_element(values.begin(), values.end()); }
    [[nodiscard]] double max() const { return *std::max_element(values.begin(), values.end()); }
};

/// Fields at consecutive time levels (or, for rates, on consecutive intervals).
using FieldSeries = std::vector<ScalarField>;

/// out = Laplacian of in, zero normal derivative imposed by mirroring the
/// first interior neighbour into the ghost point.
inline void apply_laplacian(const Grid& g, std::span<const double> in, std::span<double> out) {
    const int n = g.n;
    const double ih2 = 1.0 / (g.h * g.h);
    auto nb = [n](int i, int d) {
        int j = i + d;
        if (j < 0) j = 1;
        if (j > n - 1) j = n - 2;
        return j;
    };
    // neighbours are summed in pairs so that mirrored data gives bit-identical output
    if (g.dim == 1) {
        for (int i = 0; i < n; ++i)
            out[i] = ((in[nb(i, -1)] + in[nb(i, +1)]) - 2.0 * in[i]) * ih2;
        return;
    }
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const std::size_t k = static_cast<std::size_t>(j) * n + i;
            const double c = in[k];
            const double w = in[static_cast<std::size_t>(j) * n + nb(i, -1)];
            const double e = in[static_cast<std::size_t>(j) * n + nb(i, +1)];
            const double s = in[static_cast<std::size_t>(nb(j, -1)) * n + i];
            const double nn = in[static_cast<std::size_t>(nb(j, +1)) * n + i];
            out[k] = (((w + e) + (s + nn)) - 4.0 * c) * ih2;
        }
    }
}

inline ScalarField laplacian_neumann(const ScalarField& u) {
    if (!u.all_finite()) throw DomainError("laplacian_neumann: non-finite input");
    ScalarField out(u.grid);
    apply_laplacian(u.grid, u.values, out.values);
    return out;
}

struct Norms {
    double l2 = 0.0;
    double linf = 0.0;
    double l1 = 0.0;
};

inline Norms norms(const ScalarField& u) {
    Norms r;
    double s2 = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        const double a = std::abs(u[k]);
        const double w = u.grid.weight(k);
        r.l1 += w * a;
        s2 += w * a * a;
        r.linf = std::max(r.linf, a);
    }
    r.l2 = std::sqrt(s2);
    return r;
}

inline double max_abs_diff(const ScalarField& a, const ScalarField& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

inline double max_abs_diff(const FieldSeries& a, const FieldSeries& b) {
    double m = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) m = std::max(m, max_abs_diff(a[t], b[t]));
    return m;
}

/// Discrete L2(Q) norm of a - b over a level series with step dt
/// (trapezoid in time and space).
inline double l2q_diff(const FieldSeries& a, const FieldSeries& b, double dt) {
    double s = 0.0;
    const std::size_t levels = a.size();
    for (std::size_t t = 0; t < levels; ++t) {
        const double wt = (levels > 1 && (t == 0 || t + 1 == levels)) ? 0.5 * dt : dt;
        for (std::size_t k = 0; k < a[t].size(); ++k) {
            const double d = a[t][k] - b[t][k];
            s += wt * a[t].grid.weight(k) * d * d;
        }
    }
    return std::sqrt(s);
}

/// Forward differences (f[t+1]-f[t])/dt: N levels give N-1 interval rates.
inline FieldSeries time_differences(const FieldSeries& levels, double dt) {
    FieldSeries out;
    if (levels.size() < 2) return out;
    out.reserve(levels.size() - 1);
    for (std::size_t t = 0; t + 1 < levels.size(); ++t) {
        ScalarField d(levels[t].grid);
        for (std::size_t k = 0; k < d.size(); ++k) d[k] = (levels[t + 1][k] - levels[t][k]) / dt;
        out.push_back(std::move(d));
    }
    return out;
}

}  // namespace tacsim
