#ifndef MKG_RADIATION_HPP
#define MKG_RADIATION_HPP

// Scattering data (Phi, A_alpha) on a (q, omega) grid: weighted norms, the
// radiation current and charge, the asymptotic gauge constraint on the L null
// component, and the slow-time asymptotic system.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <complex>
#include <memory>
#include <stdexcept>
#include <vector>

#include "mkg/cutoffs.hpp"
#include "mkg/geometry.hpp"
#include "mkg/grid.hpp"
#include "mkg/sphharm.hpp"

namespace mkg {

using CMat = Eigen::MatrixXcd;
using RMat = Eigen::MatrixXd;

struct RadiationFieldSet {
    double gamma = 0.9;
    double mu = 0.05;
    int order = 7;   // vector-field regularity order of the data family
    double eps = 1e-2;
    UniformGrid qg;  // uniform q grid
    std::shared_ptr<AngularBasis> ab;
    CMat phi;                 // n_q x nlm
    std::array<RMat, 4> a;    // n_q x nlm each
    bool constrained = false; // gauge constraint applied

    int lmax() const { return ab->lmax; }
    void validate() const {
        if (!(0.5 < gamma && gamma < 1.0) || !(0.0 < mu && mu < gamma - 0.5))
            throw std::invalid_argument("RadiationFieldSet: need 1/2<gamma<1, 0<mu<gamma-1/2");
        if (phi.rows() != qg.n || phi.cols() != ab->nlm())
            throw std::invalid_argument("RadiationFieldSet: table shape mismatch");
    }
};

namespace detail {
// columnwise 4th-order q-derivative of a coefficient table
template <class M>
M table_dq(const M& m, double h) {
    M out(m.rows(), m.cols());
    std::vector<typename M::Scalar> col(m.rows());
    for (int c = 0; c < m.cols(); ++c) {
        for (int r = 0; r < m.rows(); ++r) col[r] = m(r, c);
        auto d = deriv1_o4(col, h);
        for (int r = 0; r < m.rows(); ++r) out(r, c) = d[r];
    }
    return out;
}
template <class M>
M table_cumint(const M& m, double h) {
    M out(m.rows(), m.cols());
    std::vector<typename M::Scalar> col(m.rows());
    for (int c = 0; c < m.cols(); ++c) {
        for (int r = 0; r < m.rows(); ++r) col[r] = m(r, c);
        auto F = cumulative_integral(col, h);
        for (int r = 0; r < m.rows(); ++r) out(r, c) = F[r];
    }
    return out;
}
} // namespace detail

// max over the grid of <q>^gamma |(<q> d_q)^j Omega^beta F|, j+|beta| <= k,
// over all five fields. The weighted derivative nests innermost-first; the
// angular derivatives are the rotation generators.
inline double evaluate_norm(const RadiationFieldSet& data, int k, double gamma) {
    if (data.qg.n < 5 + k)
        throw std::invalid_argument("evaluate_norm: grid too coarse; need n_q >= " + std::to_string(5 + k));
    if (k > 5) throw std::invalid_argument("evaluate_norm: k <= 5 supported");
    const auto& ab = *data.ab;
    std::vector<double> jb(data.qg.n);
    for (int i = 0; i < data.qg.n; ++i) jb[i] = japanese_bracket(data.qg.x(i));

    double worst = 0.0;
    auto sup_weighted = [&](const CMat& c) {
        CMat nodes = c * ab.Y.transpose();
        for (int i = 0; i < nodes.rows(); ++i) {
            const double wq = std::pow(jb[i], gamma);
            for (int j = 0; j < nodes.cols(); ++j) worst = std::max(worst, wq * std::abs(nodes(i, j)));
        }
    };
    auto process_field = [&](CMat base) {
        std::vector<CMat> level = {base};
        sup_weighted(base);
        for (int depth = 1; depth <= k; ++depth) {
            std::vector<CMat> next;
            for (const auto& f : level) {
                CMat wd = detail::table_dq(f, data.qg.dx);
                for (int i = 0; i < wd.rows(); ++i) wd.row(i) *= jb[i];
                next.push_back(wd);
                for (int g = 0; g < 3; ++g) next.push_back(f * ab.G[g].transpose());
            }
            for (const auto& f : next) sup_weighted(f);
            level = std::move(next);
        }
    };
    process_field(data.phi);
    for (const auto& aa : data.a) process_field(aa.cast<std::complex<double>>());
    return worst;
}

// Radiation current J_alpha = L_alpha(w) Im(Phi d_q conj(Phi)). Lives on a
// product basis wide enough for the quadratic band 2*lmax(+1).
struct CurrentProfile {
    UniformGrid qg;
    std::shared_ptr<AngularBasis> ab; // band 2*lmax+1
    RMat jtilde;                      // n_q x nodes, scalar profile Im(Phi dq conj Phi)
    std::array<RMat, 4> jcoef;        // coefficient tables of J_alpha
    std::array<RMat, 4> jnodes;       // node tables (rank-1 by construction)
};

inline CurrentProfile compute_current(const RadiationFieldSet& data) {
    CurrentProfile cp;
    cp.qg = data.qg;
    cp.ab = std::make_shared<AngularBasis>(2 * data.lmax() + 1);
    const auto& ab2 = *cp.ab;
    // synthesize Phi and dq Phi on the wide grid (coefficients zero-padded)
    const int nc_s = data.ab->nlm(), nc_w = ab2.nlm();
    CMat phiw = CMat::Zero(data.qg.n, nc_w);
    phiw.leftCols(nc_s) = data.phi;
    CMat dphiw = detail::table_dq(phiw, data.qg.dx);
    CMat pn = phiw * ab2.Y.transpose();
    CMat dpn = dphiw * ab2.Y.transpose();
    cp.jtilde = (pn.array() * dpn.conjugate().array()).imag().matrix();
    for (int al = 0; al < 4; ++al) {
        RMat jn(data.qg.n, ab2.nodes());
        for (int node = 0; node < ab2.nodes(); ++node) {
            const double Lal = (al == 0) ? -1.0 : ab2.omega[node][al - 1]; // covariant L_alpha
            jn.col(node) = cp.jtilde.col(node) * Lal;
        }
        cp.jnodes[al] = jn;
        cp.jcoef[al] = jn * ab2.P.transpose();
    }
    return cp;
}

// q = iint -Im(Phi dq conj Phi) dS(w) dq
inline double compute_charge(const RadiationFieldSet& data) {
    auto cp = compute_current(data);
    double total = 0.0;
    std::vector<double> col(data.qg.n);
    for (int node = 0; node < cp.ab->nodes(); ++node) {
        for (int i = 0; i < data.qg.n; ++i) col[i] = cp.jtilde(i, node);
        total += cp.ab->wnode[node] * simpson(col, data.qg.dx);
    }
    return -total;
}

// Target profile of the L null component forced by the asymptotic gauge ODE.
inline double gauge_target_AL(double q, double charge, const CutoffFamily& cf) {
    const double c = charge / (4.0 * M_PI);
    if (q < 0.0) return c * (1.0 - cf.chi_in(q));
    return c * (1.0 - cf.chi_ex(q));
}

// Overwrite the L null component of A so L^a A_a matches the constraint;
// realized as A_a -= (Lbar_a / 2) * (L^b A_b - target), which changes only the
// L component and keeps the result exactly band-limited (band + 1).
inline RadiationFieldSet solve_gauge_constraint(const RadiationFieldSet& data, double charge,
                                                const CutoffFamily& cf) {
    RadiationFieldSet out = data;
    out.ab = std::make_shared<AngularBasis>(data.lmax() + 2);
    const auto& ab = *out.ab;
    const int nc_s = data.ab->nlm(), nc_w = ab.nlm();
    out.phi = CMat::Zero(data.qg.n, nc_w);
    out.phi.leftCols(nc_s) = data.phi;
    std::array<RMat, 4> an;
    for (int al = 0; al < 4; ++al) {
        RMat aw = RMat::Zero(data.qg.n, nc_w);
        aw.leftCols(nc_s) = data.a[al];
        an[al] = aw * ab.Y.transpose();
    }
    RMat delta(data.qg.n, ab.nodes());
    for (int node = 0; node < ab.nodes(); ++node) {
        const auto& w = ab.omega[node];
        for (int i = 0; i < data.qg.n; ++i) {
            const double AL = an[0](i, node) + w[0] * an[1](i, node) + w[1] * an[2](i, node) + w[2] * an[3](i, node);
            delta(i, node) = gauge_target_AL(data.qg.x(i), charge, cf) - AL;
        }
    }
    // Lbar_a = (-1, -w): A_0 += delta/2, A_i += w_i delta/2
    for (int al = 0; al < 4; ++al) {
        RMat upd = an[al];
        for (int node = 0; node < ab.nodes(); ++node) {
            const double lb = (al == 0) ? 1.0 : ab.omega[node][al - 1];
            upd.col(node) += 0.5 * lb * delta.col(node);
        }
        out.a[al] = upd * ab.P.transpose();
    }
    out.constrained = true;
    return out;
}

// sup_q |d_q (L^a A_a + (q/4pi) chi_in + (q/4pi) chi_ex)| over nodes.
inline double verify_gauge_constraint(const RadiationFieldSet& data, double charge, const CutoffFamily& cf) {
    const auto& ab = *data.ab;
    std::array<RMat, 4> an;
    for (int al = 0; al < 4; ++al) an[al] = data.a[al] * ab.Y.transpose();
    RMat comb(data.qg.n, ab.nodes());
    const double c = charge / (4.0 * M_PI);
    for (int i = 0; i < data.qg.n; ++i) {
        const double q = data.qg.x(i);
        const double shift = c * (cf.chi_in(q) + cf.chi_ex(q));
        for (int node = 0; node < ab.nodes(); ++node) {
            const auto& w = ab.omega[node];
            comb(i, node) = an[0](i, node) + w[0] * an[1](i, node) + w[1] * an[2](i, node) +
                            w[2] * an[3](i, node) + shift;
        }
    }
    RMat d = detail::table_dq(comb, data.qg.dx);
    return d.cwiseAbs().maxCoeff();
}

// Slow-time asymptotic system, method of lines in s on the q-derivative
// variables G = dq Phi0, H_a = dq A_a, evaluated per angular node.
struct AsymptoticState {
    UniformGrid qg;
    std::shared_ptr<AngularBasis> ab;
    double s = 0.0;
    CMat G;                    // n_q x nodes
    std::array<RMat, 4> H;
    Eigen::VectorXcd phi_end;  // Phi0 at q = q_max (held fixed; decaying tail)
    std::array<Eigen::VectorXd, 4> a_end;
};

namespace detail {
struct AsymRhs {
    CMat dG;
    std::array<RMat, 4> dH;
};

inline AsymRhs asymptotic_rhs(const AsymptoticState& st) {
    const int nq = st.qg.n, nn = st.ab->nodes();
    // recover Phi0 and A_a by integrating from the decaying right end
    CMat cum = detail::table_cumint(st.G, st.qg.dx);
    CMat phi0(nq, nn);
    for (int i = 0; i < nq; ++i) phi0.row(i) = st.phi_end.transpose() - (cum.row(nq - 1) - cum.row(i));
    std::array<RMat, 4> aa;
    for (int al = 0; al < 4; ++al) {
        RMat c = detail::table_cumint(st.H[al], st.qg.dx);
        aa[al].resize(nq, nn);
        for (int i = 0; i < nq; ++i) aa[al].row(i) = st.a_end[al].transpose() - (c.row(nq - 1) - c.row(i));
    }
    AsymRhs rhs;
    rhs.dG.resize(nq, nn);
    for (auto& h : rhs.dH) h.resize(nq, nn);
    for (int node = 0; node < nn; ++node) {
        const auto& w = st.ab->omega[node];
        for (int i = 0; i < nq; ++i) {
            const double AL = aa[0](i, node) + w[0] * aa[1](i, node) + w[1] * aa[2](i, node) + w[2] * aa[3](i, node);
            rhs.dG(i, node) = std::complex<double>(0.0, -1.0) * AL * st.G(i, node);
            const double cur = std::imag(phi0(i, node) * std::conj(st.G(i, node)));
            for (int al = 0; al < 4; ++al) {
                const double Lal = (al == 0) ? -1.0 : w[al - 1];
                rhs.dH[al](i, node) = -0.5 * Lal * cur;
            }
        }
    }
    return rhs;
}
} // namespace detail

inline AsymptoticState evolve_asymptotic_system(AsymptoticState st, double s_end, double ds) {
    const double sup0 = std::max(st.G.cwiseAbs().maxCoeff(), 1e-30);
    double supH0 = 0.0;
    for (const auto& h : st.H) supH0 = std::max(supH0, h.cwiseAbs().maxCoeff());
    const double C = 10.0 * (sup0 + supH0 + 1.0);
    while (st.s < s_end - 1e-14) {
        const double h = std::min(ds, s_end - st.s);
        auto k1 = detail::asymptotic_rhs(st);
        AsymptoticState tmp = st;
        auto advance = [&](const detail::AsymRhs& k, double f) {
            tmp.G = st.G + f * h * k.dG;
            for (int al = 0; al < 4; ++al) tmp.H[al] = st.H[al] + f * h * k.dH[al];
        };
        advance(k1, 0.5);
        auto k2 = detail::asymptotic_rhs(tmp);
        advance(k2, 0.5);
        auto k3 = detail::asymptotic_rhs(tmp);
        advance(k3, 1.0);
        auto k4 = detail::asymptotic_rhs(tmp);
        st.G += (h / 6.0) * (k1.dG + 2.0 * k2.dG + 2.0 * k3.dG + k4.dG);
        for (int al = 0; al < 4; ++al)
            st.H[al] += (h / 6.0) * (k1.dH[al] + 2.0 * k2.dH[al] + 2.0 * k3.dH[al] + k4.dH[al]);
        st.s += h;
        const double sup = st.G.cwiseAbs().maxCoeff();
        if (sup > (sup0 + supH0 + 1e-12) * std::exp(C * st.s))
            throw std::runtime_error("evolve_asymptotic_system: growth beyond envelope, reduce ds");
    }
    return st;
}

} // namespace mkg

#endif
