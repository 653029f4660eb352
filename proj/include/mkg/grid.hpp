#ifndef MKG_GRID_HPP
#define MKG_GRID_HPP

// Uniform-grid calculus: 4th-order finite differences, Simpson quadrature,
// cumulative integrals, and local cubic interpolation.

#include <cassert>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace mkg {

struct UniformGrid {
    double x0 = 0.0;
    double dx = 1.0;
    int n = 0; // number of samples

    double x(int i) const { return x0 + i * dx; }
    double xmax() const { return x(n - 1); }

    // Cell index such that x lies in [x(i), x(i+1)); clamped to valid range.
    int cell(double xq) const {
        int i = static_cast<int>(std::floor((xq - x0) / dx));
        if (i < 0) i = 0;
        if (i > n - 2) i = n - 2;
        return i;
    }
};

// 4th-order first derivative of a sampled array. One-sided stencils at the
// four boundary samples, centered 5-point stencil inside.
template <class T>
std::vector<T> deriv1_o4(const std::vector<T>& f, double h) {
    const int n = static_cast<int>(f.size());
    if (n < 5) throw std::invalid_argument("deriv1_o4: need >= 5 samples");
    std::vector<T> d(n);
    const double c = 1.0 / (12.0 * h);
    d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) * c;
    d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) * c;
    for (int i = 2; i < n - 2; ++i)
        d[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) * c;
    d[n - 2] = (3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5]) * c;
    d[n - 1] = (25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4] + 3.0 * f[n - 5]) * c;
    return d;
}

// 4th-order second derivative; 6-point one-sided stencils at the edges.
template <class T>
std::vector<T> deriv2_o4(const std::vector<T>& f, double h) {
    const int n = static_cast<int>(f.size());
    if (n < 6) throw std::invalid_argument("deriv2_o4: need >= 6 samples");
    std::vector<T> d(n);
    const double c2 = 1.0 / (12.0 * h * h);
    auto edge = [&](int i0, int s) {
        // s=+1 forward from i0, s=-1 backward
        return (45.0 * f[i0] - 154.0 * f[i0 + s] + 214.0 * f[i0 + 2 * s] - 156.0 * f[i0 + 3 * s] +
                61.0 * f[i0 + 4 * s] - 10.0 * f[i0 + 5 * s]) / 12.0 * (1.0 / (h * h));
    };
    auto edge1 = [&](int i0, int s) {
        return (10.0 * f[i0 - s] - 15.0 * f[i0] - 4.0 * f[i0 + s] + 14.0 * f[i0 + 2 * s] -
                6.0 * f[i0 + 3 * s] + f[i0 + 4 * s]) / 12.0 * (1.0 / (h * h));
    };
    d[0] = edge(0, 1);
    d[1] = edge1(1, 1);
    for (int i = 2; i < n - 2; ++i)
        d[i] = (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2]) * c2;
    d[n - 2] = edge1(n - 2, -1);
    d[n - 1] = edge(n - 1, -1);
    return d;
}

// Composite Simpson; falls back to a trapezoid cell at the tail for an even
// number of intervals between odd sample counts.
template <class T>
T simpson(const std::vector<T>& f, double h) {
    const int n = static_cast<int>(f.size());
    if (n < 2) return T{};
    if (n == 2) return (f[0] + f[1]) * (h / 2.0);
    T s{};
    int m = (n % 2 == 1) ? n : n - 3; // largest odd prefix, leave 3/8 block if even
    for (int i = 0; i + 2 < m; i += 2) s += (f[i] + 4.0 * f[i + 1] + f[i + 2]) * (h / 3.0);
    if (n % 2 == 0) {
        // Simpson 3/8 on the last three intervals
        s += (f[n - 4] + 3.0 * f[n - 3] + 3.0 * f[n - 2] + f[n - 1]) * (3.0 * h / 8.0);
    }
    return s;
}

template <class T>
T trapezoid(const std::vector<T>& f, double h) {
    const int n = static_cast<int>(f.size());
    if (n < 2) return T{};
    T s = (f[0] + f[n - 1]) * 0.5;
    for (int i = 1; i < n - 1; ++i) s += f[i];
    return s * h;
}

// Cumulative integral from the left end, trapezoid cells corrected to 4th
// order with stencil derivatives (Hermite / Euler-Maclaurin correction).
template <class T>
std::vector<T> cumulative_integral(const std::vector<T>& f, double h) {
    const int n = static_cast<int>(f.size());
    std::vector<T> F(n, T{});
    if (n < 5) {
        for (int i = 1; i < n; ++i) F[i] = F[i - 1] + (f[i - 1] + f[i]) * (h / 2.0);
        return F;
    }
    const auto d = deriv1_o4(f, h);
    for (int i = 1; i < n; ++i) {
        // cubic Hermite cell integral: h/2 (f0+f1) + h^2/12 (f0' - f1')
        F[i] = F[i - 1] + (f[i - 1] + f[i]) * (h / 2.0) + (d[i - 1] - d[i]) * (h * h / 12.0);
    }
    return F;
}

// Weights of cubic Lagrange interpolation on 4 consecutive samples
// {i0, i0+1, i0+2, i0+3} of a uniform grid. Returns base index i0.
struct CubicWeights {
    int i0;
    double w[4];
};

inline CubicWeights cubic_weights(const UniformGrid& g, double xq) {
    int j = g.cell(xq);
    int i0 = j - 1;
    if (i0 < 0) i0 = 0;
    if (i0 > g.n - 4) i0 = g.n - 4;
    const double s = (xq - g.x(i0)) / g.dx; // in [~0,3]
    CubicWeights cw;
    cw.i0 = i0;
    cw.w[0] = -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0;
    cw.w[1] = s * (s - 2.0) * (s - 3.0) / 2.0;
    cw.w[2] = -s * (s - 1.0) * (s - 3.0) / 2.0;
    cw.w[3] = s * (s - 1.0) * (s - 2.0) / 6.0;
    return cw;
}

template <class T>
T interp_cubic(const UniformGrid& g, const std::vector<T>& f, double xq) {
    const auto cw = cubic_weights(g, xq);
    return cw.w[0] * f[cw.i0] + cw.w[1] * f[cw.i0 + 1] + cw.w[2] * f[cw.i0 + 2] + cw.w[3] * f[cw.i0 + 3];
}

inline double japanese_bracket(double q) { return std::sqrt(1.0 + q * q); }

} // namespace mkg

#endif
