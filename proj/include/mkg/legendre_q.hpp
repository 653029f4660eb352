#ifndef MKG_LEGENDRE_Q_HPP
#define MKG_LEGENDRE_Q_HPP

// Legendre functions of the second kind Q_l(z), z > 1. Q_l is the minimal
// solution of the three-term recurrence, so values are generated by a
// continued-fraction ratio (Gautschi) followed by downward recurrence,
// normalized with the closed-form Q_0. Uniformly accurate in l and z.

#include <cmath>
#include <stdexcept>
#include <vector>

namespace mkg {

inline double legendre_q0(double z) { return 0.5 * std::log((z + 1.0) / (z - 1.0)); }
inline double legendre_q1(double z) { return z * legendre_q0(z) - 1.0; }

namespace detail {
// ratio Q_l / Q_{l-1} by backward continued fraction
inline double legendre_q_ratio(int l, double z) {
    const double xi = std::log(z + std::sqrt(z * z - 1.0)); // decay rate per order
    int depth = static_cast<int>(40.0 / std::max(xi, 1e-8)) + 40;
    if (depth > 4000000) depth = 4000000;
    double r = 0.0;
    for (int k = l + depth; k >= l; --k) r = k / ((2.0 * k + 1.0) * z - (k + 1.0) * r);
    return r;
}
} // namespace detail

// Q_l(z) for all l = 0..lmax.
inline std::vector<double> legendre_q_all(int lmax, double z) {
    if (z <= 1.0 + 1e-12) throw std::domain_error("legendre_q: z must exceed 1+1e-12");
    std::vector<double> q(lmax + 1);
    q[0] = legendre_q0(z);
    if (lmax == 0) return q;
    if (lmax == 1) {
        q[1] = legendre_q1(z);
        return q;
    }
    // downward pass from a continued-fraction seed, then rescale by Q_0
    std::vector<double> tmp(lmax + 2);
    tmp[lmax + 1] = detail::legendre_q_ratio(lmax + 1, z);
    tmp[lmax] = 1.0;
    // k Q_{k-1} = (2k+1) z Q_k - (k+1) Q_{k+1}
    tmp[lmax + 1] *= tmp[lmax];
    for (int k = lmax; k >= 1; --k) tmp[k - 1] = ((2.0 * k + 1.0) * z * tmp[k] - (k + 1.0) * tmp[k + 1]) / k;
    const double scale = q[0] / tmp[0];
    for (int l = 1; l <= lmax; ++l) q[l] = tmp[l] * scale;
    return q;
}

inline double legendre_q(int l, double z) { return legendre_q_all(l, z).back(); }

// First derivative: (z^2-1) Q_l'(z) = l (z Q_l - Q_{l-1}).
inline std::vector<double> legendre_q_deriv_all(int lmax, double z, const std::vector<double>& q) {
    std::vector<double> d(lmax + 1);
    d[0] = 1.0 / (1.0 - z * z); // = -1/(z^2-1)
    for (int l = 1; l <= lmax; ++l) d[l] = l * (z * q[l] - q[l - 1]) / (z * z - 1.0);
    return d;
}

// Second derivative from the Legendre ODE: (1-z^2) Q'' - 2 z Q' + l(l+1) Q = 0.
inline double legendre_q_dd(int l, double z, double q, double dq) {
    return (2.0 * z * dq - l * (l + 1.0) * q) / (1.0 - z * z);
}

} // namespace mkg

#endif
