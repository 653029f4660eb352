#ifndef MKG_DIAGNOSTICS_HPP
#define MKG_DIAGNOSTICS_HPP

// Weighted conformal energies, the multiplier identity and its residual,
// Hardy / Klainerman-Sobolev ratio checks, norm-control ratios, decay-exponent
// fits, the Cauchy study across horizons, and the gauge monitor.
//
// Slice quantities are computed mode-exactly in the angular directions
// (orthonormal real harmonics) and with composite Simpson radially; spacetime
// integrals use the trapezoid rule at checkpoint cadence.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include "mkg/geometry.hpp"
#include "mkg/grid.hpp"
#include "mkg/solver.hpp"
#include "mkg/vectorfields.hpp"

namespace mkg {

// mode tables of h = r*f and its time derivative at one time
struct FieldSlice {
    double t = 0.0;
    UniformGrid rg;
    int lmax = 0;
    CMat h, h_t;
    CMat hF; // modes of r*F where box f = F (empty if none)

    int l_of(int c) const {
        int l = 0;
        while ((l + 1) * (l + 1) <= c) ++l;
        return l;
    }
};

namespace detail {

inline CMat radial_d1(const CMat& m, double dx) {
    CMat out(m.rows(), m.cols());
    std::vector<Cplx> col(m.rows());
    for (int c = 0; c < m.cols(); ++c) {
        for (int r = 0; r < m.rows(); ++r) col[r] = m(r, c);
        auto d = deriv1_o4(col, dx);
        for (int r = 0; r < m.rows(); ++r) out(r, c) = d[r];
    }
    return out;
}

inline CMat radial_d2(const CMat& m, double dx) {
    CMat out(m.rows(), m.cols());
    std::vector<Cplx> col(m.rows());
    for (int c = 0; c < m.cols(); ++c) {
        for (int r = 0; r < m.rows(); ++r) col[r] = m(r, c);
        auto d = deriv2_o4(col, dx);
        for (int r = 0; r < m.rows(); ++r) out(r, c) = d[r];
    }
    return out;
}

} // namespace detail

// (1/2) int [ <t+r>^2 |L(rf)/r|^2 + (<t+r>^2 + <t-r>^2)|tangential f|^2
//           + <t-r>^2 |Lbar(rf)/r|^2 ] w dx
inline double conformal_energy(const FieldSlice& f, const Weight* w) {
    const int nr = f.rg.n, nc = (int)f.h.cols();
    const CMat hr = detail::radial_d1(f.h, f.rg.dx);
    std::vector<double> integrand(nr, 0.0);
    for (int ir = 0; ir < nr; ++ir) {
        const double r = f.rg.x(ir);
        const double q = r - f.t;
        const double ww = w ? (*w)(q) : 1.0;
        const double ap = japanese_bracket(f.t + r), am = japanese_bracket(q);
        double s = 0.0;
        for (int c = 0; c < nc; ++c) {
            const int l = f.l_of(c);
            const Cplx L = f.h_t(ir, c) + hr(ir, c);
            const Cplx Lb = f.h_t(ir, c) - hr(ir, c);
            const double ang = double(l) * (l + 1.0) * std::norm(f.h(ir, c)) / (r * r);
            s += ap * ap * std::norm(L) + (ap * ap + am * am) * ang + am * am * std::norm(Lb);
        }
        integrand[ir] = 0.5 * ww * s;
    }
    return simpson(integrand, f.rg.dx);
}

// || f ||_{1,+}^2 of eq-style wave-zone norm:
// int ( <t+r>^2(|L(rf)/r|^2 + |tangential f|^2) + <t-r>^2 |Lbar(rf)/r|^2
//     + (<t-r>^2 + r^2)/r^2 |f|^2 ) w dx
inline double wavezone_norm_sq(const FieldSlice& f, const Weight* w) {
    const int nr = f.rg.n, nc = (int)f.h.cols();
    const CMat hr = detail::radial_d1(f.h, f.rg.dx);
    std::vector<double> integrand(nr, 0.0);
    for (int ir = 0; ir < nr; ++ir) {
        const double r = f.rg.x(ir);
        const double q = r - f.t;
        const double ww = w ? (*w)(q) : 1.0;
        const double ap = japanese_bracket(f.t + r), am = japanese_bracket(q);
        double s = 0.0;
        for (int c = 0; c < nc; ++c) {
            const int l = f.l_of(c);
            const Cplx L = f.h_t(ir, c) + hr(ir, c);
            const Cplx Lb = f.h_t(ir, c) - hr(ir, c);
            const double ang = double(l) * (l + 1.0) * std::norm(f.h(ir, c)) / (r * r);
            s += ap * ap * (std::norm(L) + ang) + am * am * std::norm(Lb) +
                 (am * am + r * r) / (r * r) * std::norm(f.h(ir, c));
        }
        integrand[ir] = ww * s;
    }
    return simpson(integrand, f.rg.dx);
}

// normalized defect of the multiplier identity
//   E(t1) = E(t2) + II Re((2/r) K0bar(rf) conj(F)) w dx dt
//                 + II (<t+r>^2 |L(rf)/r|^2 + <t-r>^2 |tangential f|^2) w'(q) dx dt
// over an ascending-in-t sequence of slices carrying the source modes.
inline double energy_identity_residual(const std::vector<FieldSlice>& slices, const Weight* w) {
    if (slices.size() < 2) throw std::invalid_argument("energy_identity_residual: need >= 2 slices");
    const double E1 = conformal_energy(slices.front(), w);
    const double E2 = conformal_energy(slices.back(), w);

    std::vector<double> srcflux(slices.size(), 0.0), wflux(slices.size(), 0.0);
    for (size_t k = 0; k < slices.size(); ++k) {
        const FieldSlice& f = slices[k];
        const int nr = f.rg.n, nc = (int)f.h.cols();
        const CMat hr = detail::radial_d1(f.h, f.rg.dx);
        std::vector<double> a(nr, 0.0), b(nr, 0.0);
        for (int ir = 0; ir < nr; ++ir) {
            const double r = f.rg.x(ir);
            const double q = r - f.t;
            const double ww = w ? (*w)(q) : 1.0;
            const double dw = w ? w->d(q) : 0.0;
            const double ap = japanese_bracket(f.t + r), am = japanese_bracket(q);
            double sa = 0.0, sb = 0.0;
            for (int c = 0; c < nc; ++c) {
                const int l = f.l_of(c);
                const Cplx L = f.h_t(ir, c) + hr(ir, c);
                const Cplx Lb = f.h_t(ir, c) - hr(ir, c);
                if (f.hF.size() > 0)
                    sa += std::real((ap * ap * L + am * am * Lb) * std::conj(f.hF(ir, c)));
                const double ang = double(l) * (l + 1.0) * std::norm(f.h(ir, c)) / (r * r);
                sb += ap * ap * std::norm(L) + am * am * ang;
            }
            a[ir] = ww * sa;
            b[ir] = dw * sb;
        }
        srcflux[k] = simpson(a, f.rg.dx);
        wflux[k] = simpson(b, f.rg.dx);
    }
    double I_src = 0.0, I_w = 0.0;
    for (size_t k = 0; k + 1 < slices.size(); ++k) {
        const double dt = slices[k + 1].t - slices[k].t;
        I_src += 0.5 * dt * (srcflux[k] + srcflux[k + 1]);
        I_w += 0.5 * dt * (wflux[k] + wflux[k + 1]);
    }
    const double scale = std::max({E1, E2, 1e-300});
    return std::abs(E1 - E2 - I_src - I_w) / scale;
}

// [ II |f|^2 w ] / [ II <t+r>^2 |L(rf)/r|^2 w ]  over the slice sequence
inline double hardy_check(const std::vector<FieldSlice>& slices, const Weight* w) {
    std::vector<double> num(slices.size(), 0.0), den(slices.size(), 0.0);
    for (size_t k = 0; k < slices.size(); ++k) {
        const FieldSlice& f = slices[k];
        const int nr = f.rg.n, nc = (int)f.h.cols();
        const CMat hr = detail::radial_d1(f.h, f.rg.dx);
        std::vector<double> a(nr, 0.0), b(nr, 0.0);
        for (int ir = 0; ir < nr; ++ir) {
            const double q = f.rg.x(ir) - f.t;
            const double ww = w ? (*w)(q) : 1.0;
            const double ap = japanese_bracket(f.t + f.rg.x(ir));
            double sa = 0.0, sb = 0.0;
            for (int c = 0; c < nc; ++c) {
                sa += std::norm(f.h(ir, c));
                const Cplx L = f.h_t(ir, c) + hr(ir, c);
                sb += ap * ap * std::norm(L);
            }
            a[ir] = ww * sa;
            b[ir] = ww * sb;
        }
        num[k] = simpson(a, f.rg.dx);
        den[k] = simpson(b, f.rg.dx);
    }
    double In = 0.0, Id = 0.0;
    for (size_t k = 0; k + 1 < slices.size(); ++k) {
        const double dt = slices[k + 1].t - slices[k].t;
        In += 0.5 * dt * (num[k] + num[k + 1]);
        Id += 0.5 * dt * (den[k] + den[k + 1]);
    }
    if (Id <= 0.0) return (In <= 0.0) ? 0.0 : std::numeric_limits<double>::infinity();
    return In / Id;
}

// jet of f = h/r from a single checkpoint level (h, h_t, h_tt suffice for
// all |I| <= 2 combinations: pure d_t^2, mixed d_t d_r, radial)
inline SliceJet jet_from_h(double t, const UniformGrid& rg, const AngularBasis* ab, const CMat& h,
                           const CMat& h_t, const CMat& h_tt, int order = 2) {
    SliceJet j;
    j.t = t;
    j.rg = rg;
    j.ab = ab;
    j.order = order;
    const int nr = rg.n;
    auto over_r = [&](const CMat& m) {
        CMat o = m;
        for (int ir = 0; ir < nr; ++ir) o.row(ir) /= rg.x(ir);
        return o;
    };
    const CMat f = over_r(h), ft = over_r(h_t);
    j.C[0][0] = f;
    j.C[1][0] = ft;
    j.C[0][1] = detail::radial_d1(f, rg.dx);
    if (order >= 2) {
        j.C[2][0] = over_r(h_tt);
        j.C[1][1] = detail::radial_d1(ft, rg.dx);
        j.C[0][2] = detail::radial_d2(f, rg.dx);
    }
    return j;
}

inline std::vector<VF> all_single_vfs() { return all_vector_fields(); }

// L^2(w) norm of node-value tables over the slice
inline double l2w_nodes(const CMat& vals, double t, const UniformGrid& rg, const AngularBasis& ab,
                        const Weight* w) {
    const int nr = rg.n, nn = ab.nodes();
    std::vector<double> integrand(nr, 0.0);
    for (int ir = 0; ir < nr; ++ir) {
        const double r = rg.x(ir);
        const double ww = w ? (*w)(r - t) : 1.0;
        double s = 0.0;
        for (int p = 0; p < nn; ++p) s += ab.wnode[p] * std::norm(vals(ir, p));
        integrand[ir] = ww * r * r * s;
    }
    return std::sqrt(std::max(0.0, simpson(integrand, rg.dx)));
}

// sum_{|I| <= k} ||Z^I f||_{L^2(w)} for k in {1, 2}
inline double graded_norm(const SliceJet& jet, const Weight* w, int k) {
    double total = l2w_nodes(jet.node_values(0, 0), jet.t, jet.rg, *jet.ab, w);
    const auto zs = all_vector_fields();
    for (VF z : zs) total += l2w_nodes(apply_vector_field(jet, {z}), jet.t, jet.rg, *jet.ab, w);
    if (k >= 2)
        for (VF z1 : zs)
            for (VF z2 : zs) total += l2w_nodes(apply_vector_field(jet, {z1, z2}), jet.t, jet.rg, *jet.ab, w);
    return total;
}

// sup over the slice of (1+t+r)(1+|t-r|)^{1/2} w^{1/2} |f| / sum_{|I|<=2} ||Z^I f||
struct KSReport {
    double ratio = 0.0;
    double sup_weighted = 0.0;
    double norm_sum = 0.0;
};

inline KSReport ks_pointwise_check(const SliceJet& jet, const Weight* w) {
    KSReport rep;
    rep.norm_sum = graded_norm(jet, w, 2);
    const CMat vals = jet.node_values(0, 0);
    for (int ir = 0; ir < jet.rg.n; ++ir) {
        const double r = jet.rg.x(ir);
        const double q = r - jet.t;
        const double ww = w ? (*w)(q) : 1.0;
        const double fac = (1.0 + jet.t + r) * std::sqrt(1.0 + std::abs(q)) * std::sqrt(ww);
        for (int p = 0; p < vals.cols(); ++p)
            rep.sup_weighted = std::max(rep.sup_weighted, fac * std::abs(vals(ir, p)));
    }
    rep.ratio = (rep.norm_sum > 0.0) ? rep.sup_weighted / rep.norm_sum : 0.0;
    return rep;
}

struct NormControlReport {
    double plus_over_energy = 0.0; // ||f||_{1,+} / sqrt(E^w)
    double one_over_plus = 0.0;    // ||f||_1 / ||f||_{1,+}
};

inline NormControlReport norm_control_check(const FieldSlice& fs, const SliceJet& jet, const Weight* w) {
    NormControlReport rep;
    const double E = conformal_energy(fs, w);
    const double np = std::sqrt(std::max(0.0, wavezone_norm_sq(fs, w)));
    const double n1 = graded_norm(jet, w, 1);
    rep.plus_over_energy = (E > 0.0) ? np / std::sqrt(E) : 0.0;
    rep.one_over_plus = (np > 0.0) ? n1 / np : 0.0;
    return rep;
}

// least-squares fit of log(value) vs log<t>
struct DecayFit {
    double p = 0.0, ci = 0.0, intercept = 0.0;
    std::vector<size_t> rejected; // indices of non-positive samples
    int used = 0;
};

inline DecayFit decay_fit(const std::vector<double>& t, const std::vector<double>& v) {
    DecayFit fit;
    std::vector<double> x, y;
    for (size_t i = 0; i < t.size(); ++i) {
        if (!(v[i] > 0.0)) {
            fit.rejected.push_back(i);
            continue;
        }
        x.push_back(std::log(japanese_bracket(t[i])));
        y.push_back(std::log(v[i]));
    }
    const int n = (int)x.size();
    fit.used = n;
    if (n < 2) return fit;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) sx += x[i], sy += y[i], sxx += x[i] * x[i], sxy += x[i] * y[i];
    const double d = n * sxx - sx * sx;
    fit.p = (n * sxy - sx * sy) / d;
    fit.intercept = (sy - fit.p * sx) / n;
    if (n > 2) {
        double rss = 0.0;
        for (int i = 0; i < n; ++i) {
            const double e = y[i] - fit.intercept - fit.p * x[i];
            rss += e * e;
        }
        const double s2 = rss / (n - 2);
        fit.ci = 1.96 * std::sqrt(s2 * n / d);
    }
    return fit;
}

// --- gauge monitor -------------------------------------------------------

// lambda = d^a A_a at the collocation nodes for a solver state
inline RMat lambda_nodes(const BackwardSolver& sol, const RemainderState& st) {
    const AppBatch& ap = sol.app_batch(st.t, true);
    const auto& rg = sol.rgrid();
    const auto& ab = *sol.basis;
    const int nr = rg.n, nn = ab.nodes();
    RMat lam(nr, nn);

    const RMat v0t = st.hv_t[0] * sol.synth_band().transpose();
    std::array<RMat, 3> vi, vir, vith, viph;
    for (int i = 0; i < 3; ++i) {
        vi[i] = st.hv[i + 1] * sol.synth_band().transpose();
        vir[i] = detail::radial_d1(st.hv[i + 1].cast<Cplx>(), rg.dx).real().matrix() *
                 sol.synth_band().transpose();
        vith[i] = st.hv[i + 1] * sol.synth_band_th().transpose();
        viph[i] = st.hv[i + 1] * sol.synth_band_ph().transpose();
    }
    for (int ir = 0; ir < nr; ++ir) {
        const double r = rg.x(ir), inv_r = 1.0 / r;
        for (int p = 0; p < nn; ++p) {
            const auto& w = ab.omega[p];
            const auto& th = ab.theta_hat[p];
            const auto& ph = ab.phi_hat[p];
            // approximate part
            double s = -ap.dA_t[0](ir, p);
            for (int i = 0; i < 3; ++i)
                s += w[i] * ap.dA_r[i + 1](ir, p) +
                     (th[i] * ap.dA_th[i + 1](ir, p) + ph[i] * ap.dA_ph[i + 1](ir, p)) * inv_r;
            // remainder part: v = h/r
            s += -v0t(ir, p) * inv_r;
            for (int i = 0; i < 3; ++i) {
                const double dvr = (vir[i](ir, p) - vi[i](ir, p) * inv_r) * inv_r;
                s += w[i] * dvr + (th[i] * vith[i](ir, p) + ph[i] * viph[i](ir, p)) * inv_r * inv_r;
            }
            lam(ir, p) = s;
        }
    }
    return lam;
}

// five-level bundle of lambda mode tables around a plateau time, for the
// discrete wave-residual check box(lambda) = |phi|^2 lambda
struct GaugeBundle {
    std::vector<double> tlev;
    std::vector<RMat> lam_modes; // per level: n_r x nlm(band)
    int band = 0;
    RMat phi2_nodes;             // |phi|^2 at the center level
    RMat lam_nodes_center;
};

class GaugeProbe {
  public:
    std::vector<double> centers; // requested bundle center times
    std::vector<GaugeBundle> bundles;
    std::map<double, double> sup_lambda; // time -> sup |lambda|

    explicit GaugeProbe(std::vector<double> cs, double step_dt, int band)
        : centers(std::move(cs)), dt_(step_dt), band_(band) {}

    void observe(const RemainderState& st, const BackwardSolver& sol) {
        for (size_t ci = 0; ci < centers.size(); ++ci) {
            const double off = (st.t - centers[ci]) / dt_;
            if (std::abs(off - std::round(off)) > 1e-6) continue;
            const int k = (int)std::llround(off);
            if (k < -2 || k > 2) continue;
            ensure_bundle_(ci, sol);
            GaugeBundle& b = bundles[ci];
            const RMat lam = lambda_nodes(sol, st);
            b.tlev[k + 2] = st.t;
            b.lam_modes[k + 2] = lam * Pband_.transpose();
            if (k == 0) {
                b.lam_nodes_center = lam;
                // |phi|^2 at nodes
                const AppBatch& ap = sol.app_batch(st.t);
                CMat un = st.hu * sol.synth_band().transpose().cast<Cplx>();
                const auto& rg = sol.rgrid();
                RMat p2(rg.n, lam.cols());
                for (int ir = 0; ir < rg.n; ++ir)
                    for (int p = 0; p < lam.cols(); ++p)
                        p2(ir, p) = std::norm(ap.phi(ir, p) + un(ir, p) / rg.x(ir));
                b.phi2_nodes = p2;
                sup_lambda[st.t] = lam.cwiseAbs().maxCoeff();
            }
        }
    }

    // sup |box(lambda) - |phi|^2 lambda| over a bundle, away from the axis cell
    double box_residual(const GaugeBundle& b, const UniformGrid& rg, const RMat& Yband) const {
        const double ht = b.tlev[1] - b.tlev[0];
        const int nr = rg.n;
        // 4th-order second time derivative
        RMat ltt = (-b.lam_modes[0] + 16.0 * b.lam_modes[1] - 30.0 * b.lam_modes[2] + 16.0 * b.lam_modes[3] -
                    b.lam_modes[4]) /
                   (12.0 * ht * ht);
        // Laplacian per mode: (1/r) d_r^2 (r lam) - l(l+1)/r^2 lam
        const RMat& lc = b.lam_modes[2];
        RMat rl = lc;
        for (int ir = 0; ir < nr; ++ir) rl.row(ir) *= rg.x(ir);
        RMat d2 = detail::radial_d2(rl.cast<Cplx>(), rg.dx).real();
        RMat lap(nr, lc.cols());
        for (int c = 0; c < lc.cols(); ++c) {
            int l = 0;
            while ((l + 1) * (l + 1) <= c) ++l;
            for (int ir = 0; ir < nr; ++ir) {
                const double r = rg.x(ir);
                lap(ir, c) = d2(ir, c) / r - double(l) * (l + 1.0) / (r * r) * lc(ir, c);
            }
        }
        RMat box = (-ltt + lap) * Yband.transpose(); // to nodes
        RMat rhs = b.phi2_nodes.array() * b.lam_nodes_center.array();
        double worst = 0.0;
        for (int ir = 4; ir < nr - 4; ++ir)
            for (int p = 0; p < box.cols(); ++p)
                worst = std::max(worst, std::abs(box(ir, p) - rhs(ir, p)));
        return worst;
    }

    const RMat& band_synthesis() const { return Yband_; }

  private:
    double dt_;
    int band_;
    RMat Pband_, Yband_;
    bool built_ = false;

    void ensure_bundle_(size_t ci, const BackwardSolver& sol) {
        if (bundles.empty()) bundles.resize(centers.size());
        GaugeBundle& b = bundles[ci];
        if (b.tlev.empty()) {
            b.tlev.assign(5, 0.0);
            b.lam_modes.assign(5, RMat());
            b.band = band_;
        }
        if (!built_) {
            // full-band analysis/synthesis at the solver nodes
            const auto& ab = *sol.basis;
            const int nn = ab.nodes(), nc = num_lm(band_);
            Yband_.resize(nn, nc);
            std::vector<double> y;
            for (int p = 0; p < nn; ++p) {
                sh_eval(band_, ab.omega[p], y);
                for (int c = 0; c < nc; ++c) Yband_(p, c) = y[c];
            }
            RMat W = RMat::Zero(nn, nn);
            for (int p = 0; p < nn; ++p) W(p, p) = ab.wnode[p];
            Pband_ = Yband_.transpose() * W;
            built_ = true;
        }
    }
};

// discretization envelope for the gauge wave-residual comparison: apply the
// same 5-level + radial stencils to a manufactured field with known source
inline double mms_wave_residual(const UniformGrid& rg, double dt, double t0) {
    // h = exp(-(r - t)^2), the h-profile of the outgoing wave f = h/r
    auto prof = [&](double t, double r) { return std::exp(-(r - t) * (r - t)); };
    const int nr = rg.n;
    std::vector<RMat> lev(5);
    for (int k = 0; k < 5; ++k) {
        lev[k].resize(nr, 1);
        const double t = t0 + (k - 2) * dt;
        for (int ir = 0; ir < nr; ++ir) lev[k](ir, 0) = prof(t, rg.x(ir));
    }
    RMat ftt = (-lev[0] + 16.0 * lev[1] - 30.0 * lev[2] + 16.0 * lev[3] - lev[4]) / (12.0 * dt * dt);
    RMat d2 = detail::radial_d2(lev[2].cast<Cplx>(), rg.dx).real();
    double worst = 0.0;
    for (int ir = 4; ir < nr - 4; ++ir) {
        const double r = rg.x(ir);
        // box(h/r) = (1/r)(-h_tt + h_rr) for the l = 0 radial operator; the
        // pulse is exactly outgoing so box(h/r) = 0
        const double box = (-ftt(ir, 0) + d2(ir, 0)) / r;
        worst = std::max(worst, std::abs(box));
    }
    return worst;
}

// --- Cauchy study across horizons ---------------------------------------

inline CauchyTable cauchy_study(const RadiationFieldSet& data, double charge, const CutoffFamily& cf,
                                const std::vector<double>& T_list, double dr_common, int lmax,
                                const Weight& w, double checkpoint_dt, double eps_scale) {
    if (T_list.size() < 2) throw std::invalid_argument("cauchy_study: need >= 2 horizons");
    for (size_t i = 1; i < T_list.size(); ++i)
        if (T_list[i] <= T_list[i - 1]) throw std::invalid_argument("cauchy_study: T_list must ascend");

    auto app = std::make_shared<const ApproximateSolution>(data, charge, cf);

    struct Run {
        double T;
        SolveResult res;
        std::shared_ptr<BackwardSolver> sol;
    };
    std::vector<Run> runs;
    std::shared_ptr<AngularBasis> shared_basis;
    for (double T : T_list) {
        SolverGrid g;
        g.T = T;
        g.lmax = lmax;
        g.n_r = (int)std::llround(6.0 * T / dr_common);
        std::shared_ptr<BackwardSolver> sol;
        if (!shared_basis) {
            sol = std::make_shared<BackwardSolver>(g, app, w);
            shared_basis = sol->basis;
        } else {
            sol = std::make_shared<BackwardSolver>(g, app, w, shared_basis);
        }
        Run run;
        run.T = T;
        run.res = sol->solve_backward(checkpoint_dt, eps_scale);
        run.sol = sol;
        runs.push_back(std::move(run));
    }

    CauchyTable table;
    const double model_exp = -(w.gamma - w.mu - 0.5) / 2.0;
    for (size_t i = 0; i + 1 < runs.size(); ++i) {
        const Run& a = runs[i];
        const Run& b = runs[i + 1];
        const int nr1 = a.sol->grid.n_r;
        UniformGrid rg1 = a.sol->rgrid();
        const AngularBasis* ab = a.sol->basis.get();

        double du = 0.0, dv = 0.0;
        for (const Checkpoint& ca : a.res.checkpoints) {
            if (ca.t > a.T + 1e-9) continue;
            const Checkpoint* cb = nullptr;
            for (const Checkpoint& c : b.res.checkpoints)
                if (std::abs(c.t - ca.t) < 1e-9) cb = &c;
            if (!cb) continue;
            CMat dh = cb->hu.topRows(nr1) - ca.hu;
            CMat dht = cb->hu_t.topRows(nr1) - ca.hu_t;
            CMat dhtt = cb->hu_tt.topRows(nr1) - ca.hu_tt;
            SliceJet ju = jet_from_h(ca.t, rg1, ab, dh, dht, dhtt, 1);
            du = std::max(du, graded_norm(ju, &w, 1));
            for (int al = 0; al < 4; ++al) {
                CMat vh = (cb->hv[al].topRows(nr1) - ca.hv[al]).cast<Cplx>();
                CMat vht = (cb->hv_t[al].topRows(nr1) - ca.hv_t[al]).cast<Cplx>();
                CMat vhtt = (cb->hv_tt[al].topRows(nr1) - ca.hv_tt[al]).cast<Cplx>();
                SliceJet jv = jet_from_h(ca.t, rg1, ab, vh, vht, vhtt, 1);
                dv = std::max(dv, graded_norm(jv, &w, 1));
            }
        }
        CauchyRow row;
        row.T1 = a.T;
        row.T2 = b.T;
        row.diff_u = du;
        row.diff_v = dv;
        row.ratio_vs_model = du / std::pow(1.0 + a.T, model_exp);
        table.rows.push_back(row);
    }
    for (size_t i = 1; i < table.rows.size(); ++i)
        if (table.rows[i].diff_u > table.rows[i - 1].diff_u * 1.2) table.monotone = false;
    return table;
}

} // namespace mkg

#endif
