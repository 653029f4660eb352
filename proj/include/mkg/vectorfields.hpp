#ifndef MKG_VECTORFIELDS_HPP
#define MKG_VECTORFIELDS_HPP

// Application of the commuting vector fields Z to fields sampled as
// spherical-harmonic mode tables over (t, r). Translations in (t,r) use
// 4th-order stencils; rotations act exactly on angular coefficients; boosts
// and the scaling field are composed as
//   d_i     = w_i d_r + (1/r) w^j Omega_{ji}
//   Omega_0i = t d_i + x_i d_t,   S = t d_t + r d_r.

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "mkg/geometry.hpp"
#include "mkg/grid.hpp"
#include "mkg/sphharm.hpp"

namespace mkg {

using CMat = Eigen::MatrixXcd;
using RMat = Eigen::MatrixXd;

// Order-2 jet of a field on a time slice: coefficient tables (n_r x nlm) of
// d_t^a d_r^b f for a+b <= order.
struct SliceJet {
    double t = 0.0;
    UniformGrid rg;
    const AngularBasis* ab = nullptr;
    int order = 2;
    std::array<std::array<CMat, 3>, 3> C;

    const CMat& coeff(int a, int b) const { return C[a][b]; }
    CMat node_values(int a, int b) const { return C[a][b] * ab->Y.transpose(); }
    // Omega_k applied on coefficients, then synthesized at nodes.
    CMat node_values_omega(int k, int a, int b) const {
        return C[a][b] * ab->G[k].transpose() * ab->Y.transpose();
    }
};

// Build a SliceJet from mode tables on a (t,r) lattice; the slice sits at
// time index it (needs >= 2 levels on both sides for 4th-order stencils).
struct ModeLattice {
    std::vector<double> tlev;
    UniformGrid rg;
    const AngularBasis* ab = nullptr;
    std::vector<CMat> data; // per time level: n_r x nlm

    SliceJet slice_jet(int it, int order = 2) const {
        const int nt = static_cast<int>(tlev.size());
        if (it < 2 || it > nt - 3) throw std::out_of_range("slice_jet: need 2 stencil levels each side");
        const double ht = tlev[1] - tlev[0];
        SliceJet j;
        j.t = tlev[it];
        j.rg = rg;
        j.ab = ab;
        j.order = order;
        auto dt1 = [&](int i) {
            return (data[i - 2] - 8.0 * data[i - 1] + 8.0 * data[i + 1] - data[i + 2]) / (12.0 * ht);
        };
        auto dt2 = [&](int i) {
            return (-data[i - 2] + 16.0 * data[i - 1] - 30.0 * data[i] + 16.0 * data[i + 1] - data[i + 2]) /
                   (12.0 * ht * ht);
        };
        auto dr = [&](const CMat& m, int nder) {
            CMat out(m.rows(), m.cols());
            std::vector<std::complex<double>> col(m.rows());
            for (int c = 0; c < m.cols(); ++c) {
                for (int r = 0; r < m.rows(); ++r) col[r] = m(r, c);
                auto d = (nder == 1) ? deriv1_o4(col, rg.dx) : deriv2_o4(col, rg.dx);
                for (int r = 0; r < m.rows(); ++r) out(r, c) = d[r];
            }
            return out;
        };
        j.C[0][0] = data[it];
        j.C[1][0] = dt1(it);
        j.C[0][1] = dr(data[it], 1);
        if (order >= 2) {
            j.C[2][0] = dt2(it);
            j.C[1][1] = dr(j.C[1][0], 1);
            j.C[0][2] = dr(data[it], 2);
        }
        return j;
    }
};

namespace detail {

// First-order form of Z: coefficients of (d_t, d_r, Omega_xy, Omega_xz, Omega_yz)
// at a node with direction w and point (t, r), plus their first derivatives.
struct ZCoeffs {
    double ct = 0, cr = 0, cO[3] = {0, 0, 0};
    double dt_ct = 0, dt_cr = 0, dt_cO[3] = {0, 0, 0};
    double dr_ct = 0, dr_cr = 0, dr_cO[3] = {0, 0, 0};
    double dO_ct[3] = {0, 0, 0}, dO_cr[3] = {0, 0, 0};
    double dO_cO[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
};

// Omega_ab(w_i) for generator order {xy, xz, yz}.
inline void omega_of_direction(const std::array<double, 3>& w, double out[3][3]) {
    const int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
    for (int k = 0; k < 3; ++k) {
        const int a = pairs[k][0], b = pairs[k][1];
        for (int i = 0; i < 3; ++i) out[k][i] = w[a] * ((b == i) ? 1.0 : 0.0) - w[b] * ((a == i) ? 1.0 : 0.0);
    }
}

// Angular part of d_i: coefficients g[i][k] of Omega_k such that
// d_i = w_i d_r + (1/r) sum_k g[i][k] Omega_k, plus Omega_j(g[i][k]).
inline void spatial_angular_coeffs(const std::array<double, 3>& w, double g[3][3]) {
    // from w^j Omega_{ji}: x: -wy Oxy - wz Oxz; y: wx Oxy - wz Oyz; z: wx Oxz + wy Oyz
    g[0][0] = -w[1]; g[0][1] = -w[2]; g[0][2] = 0.0;
    g[1][0] = w[0];  g[1][1] = 0.0;   g[1][2] = -w[2];
    g[2][0] = 0.0;   g[2][1] = w[0];  g[2][2] = w[1];
}

inline ZCoeffs z_coeffs(VF z, double t, double r, const std::array<double, 3>& w) {
    ZCoeffs c;
    double dw[3][3]; // Omega_k(w_i)
    omega_of_direction(w, dw);
    auto set_spatial = [&](int i, double scale_t, double scale_r, bool boost) {
        // scale for d_i coefficient: plain d_i has scale 1; boost has t
        double g[3][3];
        spatial_angular_coeffs(w, g);
        const double s = boost ? t : 1.0;
        c.cr += s * w[i];
        for (int k = 0; k < 3; ++k) c.cO[k] += s * g[i][k] / r;
        if (boost) {
            c.dt_cr += w[i];
            for (int k = 0; k < 3; ++k) c.dt_cO[k] += g[i][k] / r;
            for (int k = 0; k < 3; ++k) c.dr_cO[k] += -t * g[i][k] / (r * r);
        } else {
            for (int k = 0; k < 3; ++k) c.dr_cO[k] += -g[i][k] / (r * r);
        }
        // Omega_j of the coefficients: via dw
        double gx[3][3]; // d g[i][k] / d w_m, then chain with dw
        // g entries are +-w_m: handle directly
        // Omega_j(g[i][k]) computed by recomputing g from Omega_j-perturbed w is
        // exact since g is linear in w: g[i][k](Omega_j w).
        for (int j = 0; j < 3; ++j) {
            std::array<double, 3> wj = {dw[j][0], dw[j][1], dw[j][2]};
            double gj[3][3];
            spatial_angular_coeffs(wj, gj);
            c.dO_cr[j] += s * dw[j][i];
            for (int k = 0; k < 3; ++k) c.dO_cO[j][k] += s * gj[i][k] / r;
        }
        (void)scale_t; (void)scale_r; (void)gx;
    };
    switch (z) {
        case VF::Dt: c.ct = 1.0; break;
        case VF::Dx: set_spatial(0, 0, 0, false); break;
        case VF::Dy: set_spatial(1, 0, 0, false); break;
        case VF::Dz: set_spatial(2, 0, 0, false); break;
        case VF::Oxy: c.cO[0] = 1.0; break;
        case VF::Oxz: c.cO[1] = 1.0; break;
        case VF::Oyz: c.cO[2] = 1.0; break;
        case VF::Btx:
        case VF::Bty:
        case VF::Btz: {
            const int i = (z == VF::Btx) ? 0 : (z == VF::Bty) ? 1 : 2;
            set_spatial(i, 0, 0, true);       // t d_i part
            c.ct = r * w[i];                  // x_i d_t part
            c.dr_ct = w[i];
            for (int j = 0; j < 3; ++j) c.dO_ct[j] = r * dw[j][i];
            break;
        }
        case VF::S:
            c.ct = t;
            c.cr = r;
            c.dt_ct = 1.0;
            c.dr_cr = 1.0;
            break;
    }
    return c;
}

} // namespace detail

// Node-space order-1 jet of a once-differentiated field.
struct NodeJet {
    CMat v, vt, vr;
    std::array<CMat, 3> vO;
};

// Apply a single vector field to an order-2 SliceJet, producing the order-1
// node jet of Zf (enough for one further application).
inline NodeJet apply_vf_once(const SliceJet& f, VF z) {
    const int nr = f.rg.n, nn = f.ab->nodes();
    NodeJet out;
    out.v.resize(nr, nn);
    out.vt.resize(nr, nn);
    out.vr.resize(nr, nn);
    for (auto& m : out.vO) m.resize(nr, nn);

    const CMat F = f.node_values(0, 0);
    const CMat Ft = f.node_values(1, 0);
    const CMat Fr = f.node_values(0, 1);
    const CMat Ftt = (f.order >= 2) ? f.node_values(2, 0) : CMat();
    const CMat Ftr = (f.order >= 2) ? f.node_values(1, 1) : CMat();
    const CMat Frr = (f.order >= 2) ? f.node_values(0, 2) : CMat();
    std::array<CMat, 3> OF, OFt, OFr;
    std::array<std::array<CMat, 3>, 3> OOF;
    for (int k = 0; k < 3; ++k) {
        OF[k] = f.node_values_omega(k, 0, 0);
        if (f.order >= 2) {
            OFt[k] = f.node_values_omega(k, 1, 0);
            OFr[k] = f.node_values_omega(k, 0, 1);
            for (int j = 0; j < 3; ++j)
                OOF[j][k] = f.C[0][0] * (f.ab->G[k].transpose() * f.ab->G[j].transpose()) * f.ab->Y.transpose();
        }
    }
    const bool full = (f.order >= 2);
    for (int ir = 0; ir < nr; ++ir) {
        const double r = f.rg.x(ir);
        if (r < 0.5 * f.rg.dx) { // degenerate axis row: flagged as zero
            out.v.row(ir).setZero();
            out.vt.row(ir).setZero();
            out.vr.row(ir).setZero();
            for (auto& m : out.vO) m.row(ir).setZero();
            continue;
        }
        for (int in = 0; in < nn; ++in) {
            const auto c = detail::z_coeffs(z, f.t, r, f.ab->omega[in]);
            auto D = [&](const CMat& m) { return m(ir, in); };
            std::complex<double> g = c.ct * D(Ft) + c.cr * D(Fr);
            for (int k = 0; k < 3; ++k) g += c.cO[k] * D(OF[k]);
            out.v(ir, in) = g;
            if (!full) continue;
            std::complex<double> gt = c.dt_ct * D(Ft) + c.ct * D(Ftt) + c.dt_cr * D(Fr) + c.cr * D(Ftr);
            std::complex<double> gr = c.dr_ct * D(Ft) + c.ct * D(Ftr) + c.dr_cr * D(Fr) + c.cr * D(Frr);
            for (int k = 0; k < 3; ++k) {
                gt += c.dt_cO[k] * D(OF[k]) + c.cO[k] * D(OFt[k]);
                gr += c.dr_cO[k] * D(OF[k]) + c.cO[k] * D(OFr[k]);
            }
            out.vt(ir, in) = gt;
            out.vr(ir, in) = gr;
            for (int j = 0; j < 3; ++j) {
                std::complex<double> go = c.dO_ct[j] * D(Ft) + c.dO_cr[j] * D(Fr) + c.ct * D(OFt[j]) + c.cr * D(OFr[j]);
                for (int k = 0; k < 3; ++k) go += c.dO_cO[j][k] * D(OF[k]) + c.cO[k] * D(OOF[j][k]);
                out.vO[j](ir, in) = go;
            }
        }
    }
    return out;
}

// Apply a further vector field to a NodeJet (values only).
inline CMat apply_vf_final(const NodeJet& g, VF z, double t, const UniformGrid& rg, const AngularBasis& ab) {
    const int nr = rg.n, nn = ab.nodes();
    CMat out(nr, nn);
    for (int ir = 0; ir < nr; ++ir) {
        const double r = rg.x(ir);
        if (r < 0.5 * rg.dx) {
            out.row(ir).setZero();
            continue;
        }
        for (int in = 0; in < nn; ++in) {
            const auto c = detail::z_coeffs(z, t, r, ab.omega[in]);
            std::complex<double> v = c.ct * g.vt(ir, in) + c.cr * g.vr(ir, in);
            for (int k = 0; k < 3; ++k) v += c.cO[k] * g.vO[k](ir, in);
            out(ir, in) = v;
        }
    }
    return out;
}

// (Z^I f) at all nodes for |I| <= 2; the list applies right-to-left
// (innermost last), matching operator composition Z_{i1} Z_{i2} f.
inline CMat apply_vector_field(const SliceJet& f, const std::vector<VF>& I) {
    if (I.empty()) return f.node_values(0, 0);
    if (I.size() == 1) return apply_vf_once(f, I[0]).v;
    if (I.size() == 2) {
        NodeJet inner = apply_vf_once(f, I[1]);
        return apply_vf_final(inner, I[0], f.t, f.rg, *f.ab);
    }
    throw std::invalid_argument("apply_vector_field: |I| <= 2 supported");
}

// sup over the slice of [(1+t+r)|good derivatives| + (1+|t-r|)|all derivatives|]
// divided by the sum of first-order vector-field values (skips zero
// denominators); checks the pointwise derivative estimate.
inline double tangential_bound_check(const SliceJet& f, double denom_floor = 1e-13) {
    const CMat Ft = f.node_values(1, 0);
    const CMat Fr = f.node_values(0, 1);
    std::array<CMat, 3> OF;
    for (int k = 0; k < 3; ++k) OF[k] = f.node_values_omega(k, 0, 0);
    std::vector<CMat> zvals;
    for (VF z : all_vector_fields()) zvals.push_back(apply_vf_once(f, z).v);

    double worst = 0.0;
    const double t = f.t;
    for (int ir = 0; ir < f.rg.n; ++ir) {
        const double r = f.rg.x(ir);
        if (r < 0.5 * f.rg.dx) continue;
        for (int in = 0; in < f.ab->nodes(); ++in) {
            const auto& w = f.ab->omega[in];
            double g3[3][3];
            detail::spatial_angular_coeffs(w, g3);
            // good: d_p = (d_t + d_r)/2 and the angular derivatives
            double good = 0.5 * std::abs(Ft(ir, in) + Fr(ir, in));
            for (int i = 0; i < 3; ++i) {
                std::complex<double> sl = 0.0;
                for (int k = 0; k < 3; ++k) sl += g3[i][k] * OF[k](ir, in) / r;
                good += std::abs(sl);
            }
            double bad = std::abs(Ft(ir, in)) + std::abs(Fr(ir, in));
            for (int i = 0; i < 3; ++i) {
                std::complex<double> di = w[i] * Fr(ir, in);
                for (int k = 0; k < 3; ++k) di += g3[i][k] * OF[k](ir, in) / r;
                bad += std::abs(di);
            }
            double den = 0.0;
            for (const auto& zv : zvals) den += std::abs(zv(ir, in));
            if (den < denom_floor) continue;
            const double num = (1.0 + t + r) * good + (1.0 + std::abs(t - r)) * bad;
            worst = std::max(worst, num / den);
        }
    }
    return worst;
}

} // namespace mkg

#endif
