#ifndef MKG_KERNELS_HPP
#define MKG_KERNELS_HPP

// Light-cone potential kernels. The zonal kernel 1/(t - r<w,s>)^k acting on a
// degree-l harmonic has Funk-Hecke eigenvalue
//   k=1: (4pi/r) Q_l(t/r),   k=2: -(4pi/r^2) Q_l'(t/r),  k=3: (2pi/r^3) Q_l''(t/r),
// which reduces every surface integral to a Legendre-Q weighted mode sum.

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mkg/geometry.hpp"
#include "mkg/legendre_q.hpp"
#include "mkg/sphharm.hpp"

namespace mkg {

// int_{S^2} P_l(<w,s>)/(t - r<w,s>) dS(s) / (2 pi) = (2/r) Q_l(t/r)
inline double funk_hecke_weight(int l, double t, double r) {
    if (!(r > 0.0) || t <= r) throw std::domain_error("funk_hecke_weight: requires t > r > 0");
    return (2.0 / r) * legendre_q(l, t / r);
}

// q-integrated spherical-harmonic coefficients of a source n(q, w): one row
// of nlm coefficients per component.
struct IntegratedSource {
    int lmax = 0;
    std::vector<std::vector<double>> N; // [component][lm]
};

// (1/4pi) iint n_c(eta, s) / (t - r<w,s>) dS(s) deta  per component c,
// evaluated as (1/r) sum_lm N_lm Q_l(t/r) Y_lm(w). For r -> 0 the kernel is
// uniformly 1/t and the value tends to the exact mean (1/4pi t) iint n.
inline std::vector<double> interior_potential(const IntegratedSource& src, double t, const Vec3& x) {
    const double r = std::sqrt(dot3(x, x));
    if (t - r < 0.1) throw std::domain_error("interior_potential: needs t - |x| >= 0.1");
    std::vector<double> out(src.N.size(), 0.0);
    if (r < 1e-9) {
        const double y00 = 1.0 / std::sqrt(4.0 * M_PI);
        for (size_t c = 0; c < src.N.size(); ++c) out[c] = src.N[c][0] * y00 / t;
        return out;
    }
    const auto q = legendre_q_all(src.lmax, t / r);
    const Vec3 w = {x[0] / r, x[1] / r, x[2] / r};
    std::vector<double> y;
    sh_eval(src.lmax, {w[0], w[1], w[2]}, y);
    for (size_t c = 0; c < src.N.size(); ++c) {
        double s = 0.0;
        for (int l = 0; l <= src.lmax; ++l)
            for (int m = -l; m <= l; ++m) s += src.N[c][lm_index(l, m)] * q[l] * y[lm_index(l, m)];
        out[c] = s / r;
    }
    return out;
}

// phi_k(t, r w) = iint (n(eta,s) - n(eta,w)) / (t - r<w,s>)^k dS(s) deta
//              = sum_lm N_lm (lambda^k_l - lambda^k_0) Y_lm(w).
inline double smooth_remainder_phi_k(const IntegratedSource& src, int component, int k, double t, const Vec3& x) {
    const double r = std::sqrt(dot3(x, x));
    if (t - r < 0.5) throw std::domain_error("smooth_remainder_phi_k: needs t - r >= 1/2");
    if (k < 1 || k > 3) throw std::invalid_argument("smooth_remainder_phi_k: k in {1,2,3}");
    const double z = t / std::max(r, 1e-12);
    std::vector<double> lam(src.lmax + 1);
    if (r < 1e-9) return 0.0; // kernel angular-constant: integrand cancels
    const auto q = legendre_q_all(src.lmax, z);
    const auto dq = legendre_q_deriv_all(src.lmax, z, q);
    for (int l = 0; l <= src.lmax; ++l) {
        if (k == 1) lam[l] = (4.0 * M_PI / r) * q[l];
        else if (k == 2) lam[l] = -(4.0 * M_PI / (r * r)) * dq[l];
        else lam[l] = (2.0 * M_PI / (r * r * r)) * legendre_q_dd(l, z, q[l], dq[l]);
    }
    const Vec3 w = {x[0] / r, x[1] / r, x[2] / r};
    std::vector<double> y;
    sh_eval(src.lmax, {w[0], w[1], w[2]}, y);
    double s = 0.0;
    for (int l = 0; l <= src.lmax; ++l)
        for (int m = -l; m <= l; ++m)
            s += src.N[component][lm_index(l, m)] * (lam[l] - lam[0]) * y[lm_index(l, m)];
    return s;
}

} // namespace mkg

#endif
