#ifndef MKG_CUTOFFS_HPP
#define MKG_CUTOFFS_HPP

// Smooth transition profiles built from the normalized primitive of the
// standard bump exp(-1/(x(1-x))) on (0,1), mapped affinely onto each
// transition interval. Values are exactly 0/1 on the plateaus.

#include <cmath>
#include <vector>

#include "mkg/sphharm.hpp" // gauss_legendre

namespace mkg {

namespace detail {
inline double bump(double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    return std::exp(-1.0 / (x * (1.0 - x)));
}
inline double bump_d(double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    const double u = x - x * x;
    return bump(x) * (1.0 - 2.0 * x) / (u * u);
}
inline double bump_dd(double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    const double u = x - x * x;
    const double fp = (1.0 - 2.0 * x) / (u * u);
    const double fpp = -2.0 / (u * u) + 2.0 * (1.0 - 2.0 * x) * (1.0 - 2.0 * x) / (u * u * u);
    return bump(x) * (fp * fp + fpp);
}

// High-accuracy table of the normalized primitive C(x) = int_0^x B / int_0^1 B.
struct BumpPrimitive {
    double total;
    // 32-point Gauss-Legendre per panel, 64 panels: far below 1e-15 already.
    double integral_to(double x) const {
        if (x <= 0.0) return 0.0;
        if (x >= 1.0) return total_;
        return raw_integral(0.0, x);
    }
    BumpPrimitive() {
        gauss_legendre(32, gx_, gw_);
        total_ = raw_integral(0.0, 1.0);
        total = total_;
    }
    double raw_integral(double a, double b) const {
        const int panels = 64;
        double s = 0.0;
        const double h = (b - a) / panels;
        for (int p = 0; p < panels; ++p) {
            const double c = a + (p + 0.5) * h;
            for (size_t k = 0; k < gx_.size(); ++k) s += gw_[k] * bump(c + 0.5 * h * gx_[k]);
        }
        return s * 0.5 * h;
    }
  private:
    std::vector<double> gx_, gw_;
    double total_ = 1.0;
};

inline const BumpPrimitive& bump_primitive() {
    static const BumpPrimitive bp;
    return bp;
}
} // namespace detail

// Smooth profile equal to `left_value` for s <= a and 1-left_value for s >= b.
struct SmoothStep {
    double a, b;
    bool decreasing; // 1 on the left if true

    double operator()(double s) const { return value(s); }
    double value(double s) const {
        if (s <= a) return decreasing ? 1.0 : 0.0;
        if (s >= b) return decreasing ? 0.0 : 1.0;
        const double u = (s - a) / (b - a);
        const double c = detail::bump_primitive().integral_to(u) / detail::bump_primitive().total;
        return decreasing ? 1.0 - c : c;
    }
    double d(double s) const {
        if (s <= a || s >= b) return 0.0;
        const double u = (s - a) / (b - a);
        const double v = detail::bump(u) / detail::bump_primitive().total / (b - a);
        return decreasing ? -v : v;
    }
    double dd(double s) const {
        if (s <= a || s >= b) return 0.0;
        const double u = (s - a) / (b - a);
        const double v = detail::bump_d(u) / detail::bump_primitive().total / ((b - a) * (b - a));
        return decreasing ? -v : v;
    }
};

// The four profiles used throughout: chi localizes the wave zone,
// chi_in/chi_ex split q < 0 / q > 0, chi_tilde schedules the source cutoff.
struct CutoffFamily {
    SmoothStep chi{0.5, 0.75, true};       // 1 for s<=1/2, 0 for s>=3/4
    SmoothStep chi_in{-1.0, -0.5, true};   // 1 for q<=-1, 0 for q>=-1/2
    SmoothStep chi_ex{0.5, 1.0, false};    // 0 for q<=1/2, 1 for q>=1
    SmoothStep chi_tilde{1.0, 2.0, true};  // 1 for s<=1, 0 for s>=2
};

} // namespace mkg

#endif
