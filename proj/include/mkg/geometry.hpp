#ifndef MKG_GEOMETRY_HPP
#define MKG_GEOMETRY_HPP

// Null frame, null decomposition, the energy weight w(q), and vector-field
// identifiers. Metric signature diag(-1,1,1,1); L^a=(1,w), Lbar^a=(1,-w).

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace mkg {

using Vec3 = std::array<double, 3>;
using Vec4 = std::array<double, 4>; // (t, x, y, z) components

inline double dot3(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

// Minkowski inner product of two 4-vectors (contravariant components).
inline double minkowski(const Vec4& a, const Vec4& b) {
    return -a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
}

// Sphere-tangent frame at direction omega: deterministic Gram-Schmidt of
// (d_theta, d_phi) with a fixed branch near the z-axis so outputs are
// reproducible at every point.
struct NullFrame {
    Vec3 omega;
    Vec4 L, Lbar;       // contravariant
    std::array<Vec4, 2> e; // unit sphere-tangent (spatial) vectors

    explicit NullFrame(const Vec3& w) : omega(w) {
        const double st = std::sqrt(w[0] * w[0] + w[1] * w[1]);
        Vec3 th, ph;
        if (st > 1e-12) {
            const double cp = w[0] / st, sp = w[1] / st;
            th = {w[2] * cp, w[2] * sp, -st};
            ph = {-sp, cp, 0.0};
        } else {
            // on the z-axis: fixed Cartesian branch
            const double sz = (w[2] >= 0.0) ? 1.0 : -1.0;
            th = {sz, 0.0, 0.0};
            ph = {0.0, 1.0, 0.0};
        }
        L = {1.0, w[0], w[1], w[2]};
        Lbar = {1.0, -w[0], -w[1], -w[2]};
        e[0] = {0.0, th[0], th[1], th[2]};
        e[1] = {0.0, ph[0], ph[1], ph[2]};
    }
};

struct NullDecomposition {
    double a_L, a_Lbar, a_e1, a_e2;
};

// a given by covariant components a_mu (index down). Returns
// (L^mu a_mu, Lbar^mu a_mu, e_B^mu a_mu).
inline NullDecomposition null_decompose(const Vec4& a_cov, const Vec3& omega) {
    const double r2 = dot3(omega, omega);
    if (std::abs(r2 - 1.0) > 1e-10)
        throw std::invalid_argument("null_decompose: omega must be a unit vector");
    NullFrame fr(omega);
    auto contract = [&](const Vec4& v) {
        return v[0] * a_cov[0] + v[1] * a_cov[1] + v[2] * a_cov[2] + v[3] * a_cov[3];
    };
    return {contract(fr.L), contract(fr.Lbar), contract(fr.e[0]), contract(fr.e[1])};
}

// Inverse of null_decompose via a_mu = -(Lbar_mu/2) a_L - (L_mu/2) a_Lbar + w_mu^B a_{e_B}.
inline Vec4 null_reconstruct(const NullDecomposition& d, const Vec3& omega) {
    NullFrame fr(omega);
    Vec4 a;
    // covariant frame components: L_mu = (-1, w), Lbar_mu = (-1, -w), (e_B)_mu = (0, e_B)
    const Vec4 L_cov = {-1.0, fr.L[1], fr.L[2], fr.L[3]};
    const Vec4 Lb_cov = {-1.0, fr.Lbar[1], fr.Lbar[2], fr.Lbar[3]};
    for (int m = 0; m < 4; ++m)
        a[m] = -0.5 * Lb_cov[m] * d.a_L - 0.5 * L_cov[m] * d.a_Lbar + fr.e[0][m] * d.a_e1 + fr.e[1][m] * d.a_e2;
    return a;
}

// Energy weight of the backward problem: heavier interior of the light cone.
struct Weight {
    double gamma = 0.9;
    double mu = 0.05;

    double operator()(double q) const { return value(q); }
    double value(double q) const {
        if (q < 0.0) return 1.0 + std::pow(1.0 - q, mu);
        return 1.0 + std::pow(1.0 + q, 0.5 - gamma);
    }
    double d(double q) const {
        if (q < 0.0) return -mu * std::pow(1.0 - q, mu - 1.0);
        return (0.5 - gamma) * std::pow(1.0 + q, -0.5 - gamma);
    }
};

// The eleven commuting vector fields.
enum class VF {
    Dt, Dx, Dy, Dz,          // translations
    Oxy, Oxz, Oyz,           // rotations Omega_{12}, Omega_{13}, Omega_{23}
    Btx, Bty, Btz,           // boosts Omega_{0i}
    S                        // scaling
};

inline const std::vector<VF>& all_vector_fields() {
    static const std::vector<VF> v = {VF::Dt, VF::Dx, VF::Dy, VF::Dz, VF::Oxy, VF::Oxz,
                                      VF::Oyz, VF::Btx, VF::Bty, VF::Btz, VF::S};
    return v;
}

inline std::string vf_name(VF z) {
    switch (z) {
        case VF::Dt: return "dt";
        case VF::Dx: return "dx";
        case VF::Dy: return "dy";
        case VF::Dz: return "dz";
        case VF::Oxy: return "Oxy";
        case VF::Oxz: return "Oxz";
        case VF::Oyz: return "Oyz";
        case VF::Btx: return "Btx";
        case VF::Bty: return "Bty";
        case VF::Btz: return "Btz";
        case VF::S: return "S";
    }
    return "?";
}

} // namespace mkg

#endif
