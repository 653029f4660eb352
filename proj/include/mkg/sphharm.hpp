#ifndef MKG_SPHHARM_HPP
#define MKG_SPHHARM_HPP

// Real spherical harmonics on Gauss-Legendre x uniform-phi collocation grids:
// synthesis/analysis matrices, tangential derivative matrices, and exact
// rotation-generator matrices per degree block.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace mkg {

inline int num_lm(int lmax) { return (lmax + 1) * (lmax + 1); }
// l-major packing, m ascending from -l to l.
inline int lm_index(int l, int m) { return l * l + (m + l); }

// Legendre polynomial P_l(x), plain recurrence.
inline double legendre_p(int l, double x) {
    if (l == 0) return 1.0;
    double pm1 = 1.0, p = x;
    for (int k = 1; k < l; ++k) {
        double pn = ((2.0 * k + 1.0) * x * p - k * pm1) / (k + 1.0);
        pm1 = p;
        p = pn;
    }
    return p;
}

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.resize(n);
    w.resize(n);
    for (int i = 0; i < n; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p = legendre_p(n, z);
            double pm1 = legendre_p(n - 1, z);
            dp = n * (pm1 - z * p) / (1.0 - z * z);
            double dz = p / dp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
}

// Fully-normalized associated Legendre values Pbar_{l m}(x) for all l<=lmax at
// fixed m, such that the real harmonics below are L2(S^2)-orthonormal.
// out[l] valid for l >= m.
inline void normalized_plm(int lmax, int m, double x, std::vector<double>& out) {
    out.assign(lmax + 1, 0.0);
    const double sx = std::sqrt(std::max(0.0, 1.0 - x * x));
    double pmm = std::sqrt(1.0 / (4.0 * M_PI));
    for (int k = 1; k <= m; ++k) pmm *= sx * std::sqrt((2.0 * k + 1.0) / (2.0 * k));
    if (m <= lmax) out[m] = pmm;
    if (m + 1 <= lmax) out[m + 1] = x * std::sqrt(2.0 * m + 3.0) * pmm;
    for (int l = m + 2; l <= lmax; ++l) {
        double a = std::sqrt((4.0 * l * l - 1.0) / (double(l) * l - double(m) * m));
        double b = std::sqrt(((l - 1.0) * (l - 1.0) - double(m) * m) / (4.0 * (l - 1.0) * (l - 1.0) - 1.0));
        out[l] = a * (x * out[l - 1] - b * out[l - 2]);
    }
}

// Point evaluation of the real harmonics (and optionally the tangential
// derivative rows d/dtheta and (1/sin theta) d/dphi) at a unit direction.
inline void sh_eval(int lmax, const std::array<double, 3>& w, std::vector<double>& y,
                    std::vector<double>* yth = nullptr, std::vector<double>* yph = nullptr) {
    const int nc = num_lm(lmax);
    y.assign(nc, 0.0);
    if (yth) yth->assign(nc, 0.0);
    if (yph) yph->assign(nc, 0.0);
    const double x = w[2];
    const double st = std::sqrt(std::max(1e-300, w[0] * w[0] + w[1] * w[1]));
    const double ph = std::atan2(w[1], w[0]);
    std::vector<double> plm;
    for (int m = 0; m <= lmax; ++m) {
        normalized_plm(lmax, m, x, plm);
        const double cmp = std::cos(m * ph), smp = std::sin(m * ph);
        const double pos = (m > 0) ? std::sqrt(2.0) : 1.0;
        for (int l = m; l <= lmax; ++l) {
            double dth = 0.0;
            if (yth) {
                double e = (l > m) ? std::sqrt((double(l) * l - double(m) * m) * (2.0 * l + 1.0) / (2.0 * l - 1.0)) : 0.0;
                dth = (l * x * plm[l] - ((l > m) ? e * plm[l - 1] : 0.0)) / st;
            }
            if (m == 0) {
                y[lm_index(l, 0)] = plm[l];
                if (yth) (*yth)[lm_index(l, 0)] = dth;
            } else {
                y[lm_index(l, m)] = pos * plm[l] * cmp;
                y[lm_index(l, -m)] = pos * plm[l] * smp;
                if (yth) {
                    (*yth)[lm_index(l, m)] = pos * dth * cmp;
                    (*yth)[lm_index(l, -m)] = pos * dth * smp;
                }
                if (yph) {
                    (*yph)[lm_index(l, m)] = -pos * m * plm[l] * smp / st;
                    (*yph)[lm_index(l, -m)] = pos * m * plm[l] * cmp / st;
                }
            }
        }
    }
}

// Angular collocation basis with dense transform matrices.
struct AngularBasis {
    int lmax = 0;
    int nlat = 0, nphi = 0;
    std::vector<double> xlat, wlat; // Gauss-Legendre in cos(theta)
    std::vector<double> phi;
    // per node: direction and frame
    std::vector<std::array<double, 3>> omega, theta_hat, phi_hat;
    std::vector<double> wnode; // quadrature weight (integrates over S^2)
    std::vector<double> sin_theta;

    Eigen::MatrixXd Y;   // nodes x nlm : synthesis
    Eigen::MatrixXd Yth; // nodes x nlm : d/dtheta
    Eigen::MatrixXd Yph; // nodes x nlm : (1/sin theta) d/dphi
    Eigen::MatrixXd P;   // nlm x nodes : analysis (includes weights)
    std::array<Eigen::MatrixXd, 3> G; // generators Omega_xy, Omega_xz, Omega_yz on coefficients

    int nodes() const { return nlat * nphi; }
    int nlm() const { return num_lm(lmax); }

    // quadrature grid: exact analysis for integrands of degree <= quad_degree
    explicit AngularBasis(int lmax_, int nlat_ = -1, int nphi_ = -1) : lmax(lmax_) {
        nlat = (nlat_ > 0) ? nlat_ : (3 * lmax) / 2 + 1;
        if (nlat < lmax + 1) nlat = lmax + 1;
        nphi = (nphi_ > 0) ? nphi_ : 2 * nlat;
        if (nphi < 2 * lmax + 1) nphi = 2 * lmax + 1;
        gauss_legendre(nlat, xlat, wlat);
        phi.resize(nphi);
        for (int j = 0; j < nphi; ++j) phi[j] = 2.0 * M_PI * j / nphi;

        const int nn = nodes(), nc = nlm();
        omega.resize(nn);
        theta_hat.resize(nn);
        phi_hat.resize(nn);
        wnode.resize(nn);
        sin_theta.resize(nn);
        Y.resize(nn, nc);
        Yth.resize(nn, nc);
        Yph.resize(nn, nc);

        std::vector<double> plm, plm_lo;
        for (int i = 0; i < nlat; ++i) {
            const double x = xlat[i];
            const double st = std::sqrt(1.0 - x * x);
            for (int j = 0; j < nphi; ++j) {
                const int node = i * nphi + j;
                const double cp = std::cos(phi[j]), sp = std::sin(phi[j]);
                omega[node] = {st * cp, st * sp, x};
                theta_hat[node] = {x * cp, x * sp, -st};
                phi_hat[node] = {-sp, cp, 0.0};
                wnode[node] = wlat[i] * (2.0 * M_PI / nphi);
                sin_theta[node] = st;
            }
            for (int m = 0; m <= lmax; ++m) {
                normalized_plm(lmax, m, x, plm);
                // d/dtheta Pbar_lm = -(l x Pbar_lm - e_lm Pbar_{l-1,m})/sin(theta)
                for (int l = m; l <= lmax; ++l) {
                    double e = (l > m) ? std::sqrt((double(l) * l - double(m) * m) * (2.0 * l + 1.0) / (2.0 * l - 1.0)) : 0.0;
                    double dth = (l * x * plm[l] - ((l > m) ? e * plm[l - 1] : 0.0)) / st;
                    double pos = (m > 0) ? std::sqrt(2.0) : 1.0;
                    for (int j = 0; j < nphi; ++j) {
                        const int node = i * nphi + j;
                        const double cmp = std::cos(m * phi[j]), smp = std::sin(m * phi[j]);
                        if (m == 0) {
                            Y(node, lm_index(l, 0)) = plm[l];
                            Yth(node, lm_index(l, 0)) = dth;
                            Yph(node, lm_index(l, 0)) = 0.0;
                        } else {
                            Y(node, lm_index(l, m)) = pos * plm[l] * cmp;
                            Y(node, lm_index(l, -m)) = pos * plm[l] * smp;
                            Yth(node, lm_index(l, m)) = pos * dth * cmp;
                            Yth(node, lm_index(l, -m)) = pos * dth * smp;
                            Yph(node, lm_index(l, m)) = -pos * m * plm[l] * smp / st;
                            Yph(node, lm_index(l, -m)) = pos * m * plm[l] * cmp / st;
                        }
                    }
                }
            }
        }
        P = Y.transpose() * wnode_matrix();
        build_generators();
    }

    Eigen::MatrixXd wnode_matrix() const {
        Eigen::MatrixXd W = Eigen::MatrixXd::Zero(nodes(), nodes());
        for (int k = 0; k < nodes(); ++k) W(k, k) = wnode[k];
        return W;
    }

    // synthesis: coefficients -> node values
    Eigen::VectorXd synth(const Eigen::VectorXd& c) const { return Y * c; }
    // analysis: node values -> coefficients (exact for band-limited input)
    Eigen::VectorXd analyze(const Eigen::VectorXd& v) const { return P * v; }

    // Rotation generators Omega_ab = x_a d_b - x_b d_a restricted to S^2 map
    // degree-l harmonics to degree-l harmonics; the quadrature projection is
    // exact, so these matrices give the exact angular action.
    void build_generators() {
        const int nc = nlm(), nn = nodes();
        std::array<std::array<int, 2>, 3> pairs = {{{0, 1}, {0, 2}, {1, 2}}};
        for (int g = 0; g < 3; ++g) {
            const int a = pairs[g][0], b = pairs[g][1];
            Eigen::MatrixXd Gn(nn, nc);
            for (int k = 0; k < nn; ++k) {
                for (int c = 0; c < nc; ++c) {
                    double gth = Yth(k, c), gph = Yph(k, c);
                    // Cartesian surface gradient
                    double ga = theta_hat[k][a] * gth + phi_hat[k][a] * gph;
                    double gb = theta_hat[k][b] * gth + phi_hat[k][b] * gph;
                    Gn(k, c) = omega[k][a] * gb - omega[k][b] * ga;
                }
            }
            G[g] = P * Gn;
        }
    }
};

} // namespace mkg

#endif
