// Acceptance gate: ten end-to-end criteria, one printed pass/fail line each.
// All tolerances are pinned here. Criteria 6-9 share three backward solves
// (horizons 16, 32, 64 at common radial spacing 0.25), run once and cached.

#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <map>
#include <memory>
#include <sstream>

#include "mkg/diagnostics.hpp"

using namespace mkg;
using namespace std::complex_literals;

namespace {

using Clock = std::chrono::steady_clock;

double secs(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(int crit, const char* name, bool ok, const std::string& detail) {
    std::printf("[criterion %02d] %-32s %s  (%s)\n", crit, name, ok ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
}

std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(3);
    ss << std::scientific << v;
    return ss.str();
}

Vec3 unit_from(double th, double ph) {
    return {std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)};
}

// ---- analytic radiation data: c_lm(q) = (re + i im) exp(-((q-c)/s)^2) e^{ikq}
struct ModeSpec {
    int l, m;
    double re, im, c, s, k;
};

Cplx mode_val(const ModeSpec& ms, double q) {
    const double x = (q - ms.c) / ms.s;
    return Cplx(ms.re, ms.im) * std::exp(-x * x) * std::exp(Cplx(0.0, ms.k * q));
}

Cplx mode_dq(const ModeSpec& ms, double q) {
    const double x = (q - ms.c) / ms.s;
    return mode_val(ms, q) * (Cplx(0.0, ms.k) - 2.0 * x / ms.s);
}

RadiationFieldSet data_from_specs(int lmax, const std::vector<ModeSpec>& specs, int n_q, double qext) {
    RadiationFieldSet d;
    d.gamma = 0.9;
    d.mu = 0.05;
    d.eps = 1.0;
    d.qg = UniformGrid{-qext, 2.0 * qext / (n_q - 1), n_q};
    d.ab = std::make_shared<AngularBasis>(lmax);
    d.phi = CMat::Zero(n_q, d.ab->nlm());
    for (auto& a : d.a) a = RMat::Zero(n_q, d.ab->nlm());
    for (const auto& ms : specs)
        for (int i = 0; i < n_q; ++i) d.phi(i, lm_index(ms.l, ms.m)) += mode_val(ms, d.qg.x(i));
    return d;
}

// independent charge oracle: real-orthonormal harmonics reduce the sphere
// integral exactly, leaving -sum_lm int Im(c conj(c')) dq on a 10x-finer grid
// with the analytic q-derivative
double charge_oracle(const std::vector<ModeSpec>& specs, int n_q, double qext) {
    const int nf = 10 * (n_q - 1) + 1;
    const double dq = 2.0 * qext / (nf - 1);
    std::map<std::pair<int, int>, std::vector<const ModeSpec*>> by_lm;
    for (const auto& ms : specs) by_lm[{ms.l, ms.m}].push_back(&ms);
    double total = 0.0;
    for (const auto& [lm, group] : by_lm) {
        std::vector<double> row(nf);
        for (int i = 0; i < nf; ++i) {
            const double q = -qext + i * dq;
            Cplx v = 0.0, dv = 0.0;
            for (const ModeSpec* ms : group) {
                v += mode_val(*ms, q);
                dv += mode_dq(*ms, q);
            }
            row[i] = std::imag(v * std::conj(dv));
        }
        total += simpson(row, dq);
    }
    return -total;
}

// positive-integrand oracle for the kernel eigenvalue: Heine's representation
//   Q_l(z) = int_0^1 2^{l+1} u^l / (s u^2 + 2 z u + s)^{l+1} du,  s = sqrt(z^2-1),
// free of the cancellation that defeats direct Legendre quadrature at large l*z
double legendre_q_heine(int l, double z) {
    static std::vector<double> gx, gw;
    if (gx.empty()) gauss_legendre(100, gx, gw);
    const double s = std::sqrt(z * z - 1.0);
    double total = 0.0;
    const int npanel = 8;
    for (int p = 0; p < npanel; ++p) {
        const double a = double(p) / npanel, b = double(p + 1) / npanel;
        for (size_t i = 0; i < gx.size(); ++i) {
            const double u = 0.5 * (a + b) + 0.5 * (b - a) * gx[i];
            const double den = s * u * u + 2.0 * z * u + s;
            double term = 2.0 / den;
            for (int j = 0; j < l; ++j) term *= 2.0 * u / den;
            total += 0.5 * (b - a) * gw[i] * term;
        }
    }
    return total;
}

// ---- analytic slices reused from the energy criteria ----------------------

double bump(double x, double c, double w) { return std::exp(-(x - c) * (x - c) / (w * w)); }
double bump_d(double x, double c, double w) { return -2.0 * (x - c) / (w * w) * bump(x, c, w); }
double bump_dd(double x, double c, double w) {
    return (4.0 * (x - c) * (x - c) / (w * w) - 2.0) / (w * w) * bump(x, c, w);
}

// kind 0: outgoing G(r-t); 1: ingoing G(r+t); 2: standing G(t-r)-G(t+r);
// 3: forced sin(1.3 t) G(r) with its source table
FieldSlice family_slice(int kind, int col, int ncol, double t, const UniformGrid& rg, double c, double w) {
    FieldSlice fs;
    fs.t = t;
    fs.rg = rg;
    fs.lmax = 2;
    fs.h = CMat::Zero(rg.n, ncol);
    fs.h_t = CMat::Zero(rg.n, ncol);
    for (int ir = 0; ir < rg.n; ++ir) {
        const double r = rg.x(ir);
        switch (kind) {
            case 0:
                fs.h(ir, col) = bump(r - t, c, w);
                fs.h_t(ir, col) = -bump_d(r - t, c, w);
                break;
            case 1:
                fs.h(ir, col) = bump(r + t, c, w);
                fs.h_t(ir, col) = bump_d(r + t, c, w);
                break;
            case 2:
                fs.h(ir, col) = bump(t - r, c, w) - bump(t + r, c, w);
                fs.h_t(ir, col) = bump_d(t - r, c, w) - bump_d(t + r, c, w);
                break;
            default:
                fs.h(ir, col) = std::sin(1.3 * t) * bump(r, c, w);
                fs.h_t(ir, col) = 1.3 * std::cos(1.3 * t) * bump(r, c, w);
                break;
        }
    }
    return fs;
}

CMat family_htt(int kind, int col, int ncol, double t, const UniformGrid& rg, double c, double w) {
    CMat htt = CMat::Zero(rg.n, ncol);
    for (int ir = 0; ir < rg.n; ++ir) {
        const double r = rg.x(ir);
        switch (kind) {
            case 0: htt(ir, col) = bump_dd(r - t, c, w); break;
            case 1: htt(ir, col) = bump_dd(r + t, c, w); break;
            case 2: htt(ir, col) = bump_dd(t - r, c, w) - bump_dd(t + r, c, w); break;
            default: htt(ir, col) = -1.69 * std::sin(1.3 * t) * bump(r, c, w); break;
        }
    }
    return htt;
}

FieldSlice forced_slice(double t, const UniformGrid& rg, double om, double c, double w) {
    FieldSlice fs;
    fs.t = t;
    fs.rg = rg;
    fs.lmax = 0;
    fs.h = CMat::Zero(rg.n, 1);
    fs.h_t = CMat::Zero(rg.n, 1);
    fs.hF = CMat::Zero(rg.n, 1);
    for (int ir = 0; ir < rg.n; ++ir) {
        const double r = rg.x(ir);
        fs.h(ir, 0) = std::sin(om * t) * bump(r, c, w);
        fs.h_t(ir, 0) = om * std::cos(om * t) * bump(r, c, w);
        fs.hF(ir, 0) = om * om * std::sin(om * t) * bump(r, c, w) + std::sin(om * t) * bump_dd(r, c, w);
    }
    return fs;
}

// ---- shared primary configuration -----------------------------------------

struct SharedData {
    std::vector<ModeSpec> specs;
    RadiationFieldSet raw;         // pre-constraint, band 4, amplitude eps
    RadiationFieldSet constrained; // gauge-solved, band 6
    double charge = 0.0;
    CutoffFamily cf;
    Weight w{0.9, 0.05};
    std::shared_ptr<const ApproximateSolution> app;
};

const SharedData& shared() {
    static SharedData S = [] {
        SharedData s;
        // deterministic multi-mode spectrum up to degree 4
        for (int l = 0; l <= 4; ++l)
            for (int m = -l; m <= l; ++m) {
                const int j = lm_index(l, m);
                s.specs.push_back({l, m, (1.0 + 0.25 * m) / ((l + 1.0) * (l + 1.0)),
                                   0.3 / (l + 1.0), -1.0 + 0.4 * (j % 5), 1.0 + 0.15 * (j % 3),
                                   0.5 - 0.1 * (j % 4)});
            }
        s.raw = data_from_specs(4, s.specs, 481, 6.0);
        // modest vector-potential content (constrained away where needed)
        for (int i = 0; i < s.raw.qg.n; ++i) {
            const double q = s.raw.qg.x(i);
            s.raw.a[2](i, lm_index(1, 0)) = 0.2 * bump(q, 0.5, 0.8);
            s.raw.a[1](i, lm_index(2, 1)) = 0.1 * bump(q, -0.5, 1.2);
        }
        const double eps = 1e-2;
        const double n0 = evaluate_norm(s.raw, 2, s.raw.gamma);
        s.raw.phi *= eps / n0;
        for (auto& a : s.raw.a) a *= eps / n0;
        for (auto& ms : s.specs) { // keep specs in sync for the extraction check
            ms.re *= eps / n0;
            ms.im *= eps / n0;
        }
        s.raw.eps = eps;
        s.charge = compute_charge(s.raw);
        s.constrained = solve_gauge_constraint(s.raw, s.charge, s.cf);
        s.app = std::make_shared<const ApproximateSolution>(s.constrained, s.charge, s.cf);
        return s;
    }();
    return S;
}

// ---- shared backward solves ------------------------------------------------

struct RunOut {
    double T = 0.0, dt = 0.0, runtime = 0.0;
    UniformGrid rg;
    std::vector<double> ts, l2wu;      // at integer times, ascending
    std::map<int, CMat> hu, hu_t;      // even t <= 32
    CMat hu_tt8;                       // at t = 8
    std::map<int, double> sup_lambda;  // even t in [2, 16]
    GaugeBundle bundle;                // centered at t = 8
    RMat Yband;
    double support_viol = 0.0;
    std::shared_ptr<AngularBasis> basis;
};

RunOut run_backward(double T, std::shared_ptr<AngularBasis>& basis) {
    const SharedData& S = shared();
    const auto t0 = Clock::now();
    SolverGrid g{T, (int)std::llround(6.0 * T / 0.25), 4, 0.5};
    std::unique_ptr<BackwardSolver> solp;
    if (basis)
        solp = std::make_unique<BackwardSolver>(g, S.app, S.w, basis);
    else {
        solp = std::make_unique<BackwardSolver>(g, S.app, S.w);
        basis = solp->basis;
    }
    BackwardSolver& sol = *solp;

    RunOut out;
    out.T = T;
    out.dt = g.dt();
    out.rg = sol.rgrid();
    out.basis = sol.basis;
    GaugeProbe probe({8.0}, g.dt(), g.lmax);

    auto obs = [&](const RemainderState& st, const BackwardSolver& s) {
        probe.observe(st, s);
        const double ri = std::round(st.t);
        if (std::abs(st.t - ri) > 1e-9) return;
        const int it = (int)ri;
        // weighted L2 of u from its h-tables
        std::vector<double> row(g.n_r);
        double tot = 0.0;
        for (int c = 0; c < st.hu.cols(); ++c) {
            for (int ir = 0; ir < g.n_r; ++ir) row[ir] = S.w(out.rg.x(ir) - st.t) * std::norm(st.hu(ir, c));
            tot += simpson(row, out.rg.dx);
        }
        out.ts.push_back(st.t);
        out.l2wu.push_back(std::sqrt(tot));
        // support invariant: fields vanish outside r <= 6T - t
        const double redge = 6.0 * T - st.t + 1e-9;
        for (int ir = 0; ir < g.n_r; ++ir) {
            const double r = out.rg.x(ir);
            if (r <= redge) continue;
            double m = st.hu.row(ir).cwiseAbs().maxCoeff();
            for (int al = 0; al < 4; ++al) m = std::max(m, st.hv[al].row(ir).cwiseAbs().maxCoeff());
            out.support_viol = std::max(out.support_viol, m / r);
        }
        if (it % 2 == 0 && it <= 32) {
            out.hu[it] = st.hu;
            out.hu_t[it] = st.hu_t;
        }
        if (it % 2 == 0 && it >= 2 && it <= 16)
            out.sup_lambda[it] = lambda_nodes(s, st).cwiseAbs().maxCoeff();
        if (it == 8) out.hu_tt8 = s.rhs(st).hu_t;
    };
    sol.solve_backward(4.0 * T, S.raw.eps, obs);
    std::reverse(out.ts.begin(), out.ts.end());
    std::reverse(out.l2wu.begin(), out.l2wu.end());
    REQUIRE(!probe.bundles.empty());
    out.bundle = probe.bundles[0];
    out.Yband = probe.band_synthesis();
    out.runtime = secs(t0);
    std::printf("    [solve] T=%g n_r=%d steps=%d  %.1f s\n", T, g.n_r, g.n_steps(), out.runtime);
    std::fflush(stdout);
    return out;
}

const std::array<RunOut, 3>& runs() {
    static std::array<RunOut, 3> R = [] {
        std::shared_ptr<AngularBasis> basis;
        std::array<RunOut, 3> r = {run_backward(16.0, basis), run_backward(32.0, basis),
                                   run_backward(64.0, basis)};
        return r;
    }();
    return R;
}

double l2w_diff(const CMat& h1, const CMat& h2, double t, const UniformGrid& rg1, const Weight& w) {
    std::vector<double> row(rg1.n);
    double tot = 0.0;
    for (int c = 0; c < h1.cols(); ++c) {
        for (int ir = 0; ir < rg1.n; ++ir)
            row[ir] = w(rg1.x(ir) - t) * std::norm(h2(ir, c) - h1(ir, c));
        tot += simpson(row, rg1.dx);
    }
    return std::sqrt(tot);
}

} // namespace

TEST_CASE("acceptance 01: charge identity") {
    const auto t0 = Clock::now();
    const int n_q = 2401;
    const double qext = 8.0;

    std::vector<std::vector<ModeSpec>> families = {
        {{0, 0, 1.1, 0.0, 0.0, 1.0, -0.7}, {0, 0, 0.3, -0.1, 1.0, 1.5, 0.4}},
        {{0, 0, 0.8, 0.2, -0.5, 1.2, 0.6},
         {1, 1, 0.4, 0.0, 0.5, 0.9, -0.3},
         {2, -1, 0.25, 0.15, 0.0, 1.4, 0.9},
         {2, 0, -0.2, 0.1, 1.2, 1.1, 0.2}},
        {{0, 0, 0.5, 0.0, 0.0, 1.0, 1.1},
         {1, -1, 0.35, 0.2, -1.0, 1.3, -0.8},
         {3, 2, 0.3, -0.25, 0.8, 0.8, 0.5},
         {3, -3, 0.15, 0.05, -0.3, 1.6, 1.4}}};
    const int lmaxes[3] = {0, 2, 3};

    double worst = 0.0;
    for (int k = 0; k < 3; ++k) {
        RadiationFieldSet d = data_from_specs(lmaxes[k], families[k], n_q, qext);
        const double have = compute_charge(d);
        const double want = charge_oracle(families[k], n_q, qext);
        worst = std::max(worst, std::abs(have - want) / std::abs(want));
    }

    // closed-form reference: Phi(q, omega) = e^{-q^2} e^{-iq} on every direction
    RadiationFieldSet ref = data_from_specs(0, {{0, 0, std::sqrt(4.0 * M_PI), 0.0, 0.0, 1.0, -1.0}}, n_q, qext);
    const double qref = compute_charge(ref);
    const double expect = -4.0 * M_PI * std::sqrt(M_PI / 2.0);
    const double dref = std::abs(qref - expect);

    const double el = secs(t0);
    const bool ok = worst <= 1e-8 && dref <= 1e-6 && el < 5.0;
    report(1, "charge identity", ok,
           "worst rel " + fmt(worst) + ", reference dev " + fmt(dref) + ", " + fmt(el) + " s");
    CHECK(worst <= 1e-8);
    CHECK(dref <= 1e-6);
    CHECK(el < 5.0);
}

TEST_CASE("acceptance 02: kernel eigenvalue exactness") {
    const auto t0 = Clock::now();
    const double r = 1.7;
    double worst = 0.0;
    for (int j = 0; j < 200; ++j) {
        const double z = 1.05 * std::pow(20.0 / 1.05, j / 199.0);
        for (int l = 0; l <= 16; ++l) {
            const double have = funk_hecke_weight(l, z * r, r);
            const double want = (2.0 / r) * legendre_q_heine(l, z);
            worst = std::max(worst, std::abs(have - want) / std::abs(want));
        }
    }
    const double el = secs(t0);
    const bool ok = worst <= 1e-9 && el < 30.0;
    report(2, "kernel eigenvalue exactness", ok, "worst rel " + fmt(worst) + ", " + fmt(el) + " s");
    CHECK(worst <= 1e-9);
    CHECK(el < 30.0);
}

TEST_CASE("acceptance 03: energy identity") {
    Weight wt;
    const UniformGrid rg{0.02, 0.02, 2101};
    // manufactured forced mode: residual vs slice-count refinement
    double res[3];
    const int nts[3] = {33, 65, 129};
    for (int k = 0; k < 3; ++k) {
        std::vector<FieldSlice> sl;
        for (int i = 0; i < nts[k]; ++i)
            sl.push_back(forced_slice(2.0 + 4.0 * i / (nts[k] - 1), rg, 1.3, 15.0, 2.0));
        res[k] = energy_identity_residual(sl, &wt);
    }
    const double ord1 = std::log2(res[0] / res[1]);
    const double ord2 = std::log2(res[1] / res[2]);

    // free-wave drift, unit weight, t in [0, 10], reflected pulse regular at 0
    auto sl = [&](double t) {
        FieldSlice f;
        f.t = t;
        f.rg = rg;
        f.lmax = 0;
        f.h = CMat::Zero(rg.n, 1);
        f.h_t = CMat::Zero(rg.n, 1);
        for (int ir = 0; ir < rg.n; ++ir) {
            const double r = rg.x(ir);
            f.h(ir, 0) = bump(t - r, 16.0, 2.0) - bump(t + r, 16.0, 2.0);
            f.h_t(ir, 0) = bump_d(t - r, 16.0, 2.0) - bump_d(t + r, 16.0, 2.0);
        }
        return f;
    };
    const double E0 = conformal_energy(sl(0.0), nullptr);
    const double E1 = conformal_energy(sl(10.0), nullptr);
    const double drift = std::abs(E1 - E0) / E0;

    const bool ok = ord1 >= 1.9 && ord2 >= 1.9 && res[2] <= 1e-3 && drift <= 1e-6;
    report(3, "energy identity", ok,
           "orders " + fmt(ord1) + "/" + fmt(ord2) + ", finest " + fmt(res[2]) + ", drift " + fmt(drift));
    CHECK(ord1 >= 1.9);
    CHECK(ord2 >= 1.9);
    CHECK(res[2] <= 1e-3);
    CHECK(drift <= 1e-6);
}

TEST_CASE("acceptance 04: approximate-solution residual envelope") {
    const SharedData& S = shared();
    const double q = -3.0;
    const Vec3 w = unit_from(1.0, 0.3);
    double lo_p = 1e300, hi_p = 0.0, lo_a = 1e300, hi_a = 0.0;
    for (int k = 6; k <= 11; ++k) {
        const double r = std::pow(2.0, k);
        const auto res = S.app->residual(r - q, {r * w[0], r * w[1], r * w[2]});
        const double fac = std::log(r) / (r * r * r);
        lo_p = std::min(lo_p, std::abs(res.res_phi) / fac);
        hi_p = std::max(hi_p, std::abs(res.res_phi) / fac);
        double na = 0.0;
        for (double v : res.res_a) na = std::max(na, std::abs(v));
        lo_a = std::min(lo_a, na / fac);
        hi_a = std::max(hi_a, na / fac);
    }
    const bool ok = hi_p / lo_p <= 2.0 && hi_a / lo_a <= 2.0;
    report(4, "equation residual envelope", ok,
           "phi band " + fmt(hi_p / lo_p) + ", A band " + fmt(hi_a / lo_a) + " over r=2^6..2^11");
    CHECK(hi_p / lo_p <= 2.0);
    CHECK(hi_a / lo_a <= 2.0);
}

TEST_CASE("acceptance 05: gauge constraint") {
    const SharedData& S = shared();
    // decay envelope on a cutoff plateau (inside the transition zones the
    // tabulated/closed-form cutoff mismatch adds an interpolation-order 1/r tail)
    const double q = -1.5;
    const Vec3 w = unit_from(0.6, 4.0);
    double lo = 1e300, hi = 0.0;
    for (int k = 6; k <= 11; ++k) {
        const double r = std::pow(2.0, k);
        const double lam = S.app->lambda(r - q, {r * w[0], r * w[1], r * w[2]});
        const double n = std::abs(lam) * r * r / std::log(r);
        lo = std::min(lo, n);
        hi = std::max(hi, n);
    }
    const double resid = verify_gauge_constraint(S.constrained, S.charge, S.cf);
    const double tol = 1e-10 * std::abs(S.charge) + 1e-12;
    const bool ok = hi / lo <= 2.0 && resid <= tol;
    report(5, "gauge constraint", ok,
           "lambda band " + fmt(hi / lo) + ", verify residual " + fmt(resid) + " <= " + fmt(tol));
    CHECK(hi / lo <= 2.0);
    CHECK(resid <= tol);
}

TEST_CASE("acceptance 06: backward solve decay") {
    const RunOut& R = runs()[2]; // horizon 64, n_r = 1536, band 4, eps = 1e-2
    std::vector<double> ts, vs;
    for (size_t i = 0; i < R.ts.size(); ++i)
        if (R.ts[i] >= 8.0 && R.ts[i] <= 64.0) {
            ts.push_back(R.ts[i]);
            vs.push_back(R.l2wu[i]);
        }
    const DecayFit fit = decay_fit(ts, vs);
    double blo = 1e300, bhi = 0.0, tlo = 0.0, thi = 0.0;
    for (size_t i = 0; i < ts.size(); ++i) {
        const double b = vs[i] * std::pow(japanese_bracket(ts[i]), 0.175);
        if (b < blo) {
            blo = b;
            tlo = ts[i];
        }
        if (b > bhi) {
            bhi = b;
            thi = ts[i];
        }
    }
    std::printf("    [c6] |u|_w: v(8)=%.4e v(64)=%.4e; band extremes at t=%g (hi) / t=%g (lo)\n",
                vs.front(), vs.back(), thi, tlo);
    const double eps = 1e-2;
    // wall-clock budget: the quoted 15 min on 8 cores, evaluated single-core
    const bool ok = fit.p <= -0.075 && bhi / blo <= 5.0 && R.support_viol <= 1e-12 * eps &&
                    R.runtime < 8.0 * 15.0 * 60.0;
    report(6, "backward solve decay", ok,
           "exponent " + fmt(fit.p) + " (ci " + fmt(fit.ci) + "), band " + fmt(bhi / blo) +
               ", support " + fmt(R.support_viol) + ", " + fmt(R.runtime) + " s");
    CHECK(fit.p <= -0.075);
    CHECK(bhi / blo <= 5.0);
    CHECK(R.support_viol <= 1e-12 * eps);
    CHECK(R.runtime < 8.0 * 15.0 * 60.0);
}

TEST_CASE("acceptance 07: horizon differences shrink") {
    const SharedData& S = shared();
    const auto& R = runs();
    auto pair_diff = [&](const RunOut& a, const RunOut& b, int tcap) {
        double worst = 0.0;
        int targ = -1;
        for (const auto& [t, ha] : a.hu) {
            if (t > tcap) continue;
            const auto it = b.hu.find(t);
            if (it == b.hu.end()) continue;
            const double d = l2w_diff(ha, it->second.topRows(ha.rows()), t, a.rg, S.w);
            if (d > worst) {
                worst = d;
                targ = t;
            }
        }
        std::printf("    [c7] sup_(t<=%d) reached at t=%d: %.4e\n", tcap, targ, worst);
        return worst;
    };
    const double d12 = pair_diff(R[0], R[1], 16); // 16 vs 32
    const double d23 = pair_diff(R[1], R[2], 32); // 32 vs 64
    const double d23c = pair_diff(R[1], R[2], 16); // same diff, common window
    const bool ok = d12 > 0.0 && d23 > 0.0 && d12 / d23 >= 1.5;
    report(7, "horizon differences shrink", ok,
           "d(16,32) " + fmt(d12) + ", d(32,64) " + fmt(d23) + ", factor " + fmt(d12 / d23) +
               "; common-window t<=16 factor " + fmt(d12 / d23c));
    CHECK(d12 / d23 >= 1.5);
    CHECK(d23 > 0.0);
}

TEST_CASE("acceptance 08: gauge scalar vanishes with the horizon") {
    const auto& R = runs();
    double S[3];
    for (int k = 0; k < 3; ++k) {
        S[k] = 0.0;
        for (const auto& [t, v] : R[k].sup_lambda) S[k] = std::max(S[k], v);
    }
    bool decreasing = S[0] > S[1] && S[1] > S[2];

    // discrete wave-residual of lambda vs the manufactured envelope at the
    // same (dr, dt), bundle centered at t = 8
    bool boxok = true;
    std::string det;
    for (int k = 0; k < 3; ++k) {
        const double br = R[k].bundle.tlev.empty()
                              ? -1.0
                              : GaugeProbe({8.0}, R[k].dt, 4).box_residual(R[k].bundle, R[k].rg, R[k].Yband);
        const double env = mms_wave_residual(R[k].rg, R[k].dt, 8.0);
        if (!(br >= 0.0 && br <= 100.0 * env)) boxok = false;
        det += " T" + std::to_string((int)R[k].T) + ": box " + fmt(br) + " env " + fmt(env) + ";";
    }
    const bool ok = decreasing && boxok;
    report(8, "gauge scalar vanishes", ok,
           "sup " + fmt(S[0]) + " > " + fmt(S[1]) + " > " + fmt(S[2]) + ";" + det);
    CHECK(S[0] > S[1]);
    CHECK(S[1] > S[2]);
    CHECK(boxok);
}

TEST_CASE("acceptance 09: inequality suites") {
    const SharedData& Sd = shared();
    const double baseline = 10.0;

    // full remainder runs (the two finest horizons), slices at even t <= 16
    double hardy_run[2], ks_run[2];
    for (int k = 1; k <= 2; ++k) {
        const RunOut& R = runs()[k];
        std::vector<FieldSlice> sl;
        for (const auto& [t, h] : R.hu) {
            if (t < 2 || t > 16) continue;
            FieldSlice f;
            f.t = t;
            f.rg = R.rg;
            f.lmax = 4;
            f.h = h;
            f.h_t = R.hu_t.at(t);
            sl.push_back(std::move(f));
        }
        hardy_run[k - 1] = hardy_check(sl, &Sd.w);
        SliceJet jet = jet_from_h(8.0, R.rg, R.basis.get(), R.hu.at(8), R.hu_t.at(8), R.hu_tt8);
        ks_run[k - 1] = ks_pointwise_check(jet, &Sd.w).ratio;
    }

    // frozen 12-member analytic family (4 shape/width combinations x 3
    // harmonics, each with nonvanishing outgoing-derivative content), and the
    // same family at doubled resolution in both r and t
    AngularBasis ab(2);
    const int cols[3] = {lm_index(0, 0), lm_index(1, 0), lm_index(2, 0)};
    const std::pair<int, double> shapes[4] = {{1, 2.0}, {2, 2.0}, {3, 2.0}, {1, 1.2}};
    double fam_hi = 0.0, fam_ks_hi = 0.0, fam_drift = 0.0;
    for (const auto& [kind, wid] : shapes) {
        for (int ci = 0; ci < 3; ++ci) {
            double h2[2], k2[2];
            for (int ref = 0; ref < 2; ++ref) {
                const double dx = ref ? 0.0125 : 0.025;
                const UniformGrid rg{dx, dx, ref ? 2400 : 1200}; // r up to 30
                const int nt = ref ? 17 : 9;
                std::vector<FieldSlice> sl;
                for (int i = 0; i < nt; ++i)
                    sl.push_back(family_slice(kind, cols[ci], 9, 2.0 + 4.0 * i / (nt - 1), rg, 15.0, wid));
                h2[ref] = hardy_check(sl, &Sd.w);
                const double tj = 4.0;
                const FieldSlice fj = family_slice(kind, cols[ci], 9, tj, rg, 15.0, wid);
                SliceJet jet =
                    jet_from_h(tj, rg, &ab, fj.h, fj.h_t, family_htt(kind, cols[ci], 9, tj, rg, 15.0, wid));
                k2[ref] = ks_pointwise_check(jet, &Sd.w).ratio;
            }
            fam_hi = std::max(fam_hi, std::max(h2[0], h2[1]));
            fam_ks_hi = std::max(fam_ks_hi, std::max(k2[0], k2[1]));
            fam_drift = std::max(fam_drift, std::abs(h2[1] - h2[0]) / std::max(h2[0], 1e-300));
            fam_drift = std::max(fam_drift, std::abs(k2[1] - k2[0]) / std::max(k2[0], 1e-300));
        }
    }

    const bool ok = hardy_run[0] <= baseline && hardy_run[1] <= baseline && ks_run[0] <= baseline &&
                    ks_run[1] <= baseline && fam_hi <= baseline && fam_ks_hi <= baseline &&
                    fam_drift <= 0.2;
    report(9, "inequality suites", ok,
           "run hardy " + fmt(hardy_run[0]) + "/" + fmt(hardy_run[1]) + ", run ks " + fmt(ks_run[0]) +
               "/" + fmt(ks_run[1]) + ", family max " + fmt(fam_hi) + "/" + fmt(fam_ks_hi) +
               ", refinement drift " + fmt(fam_drift));
    CHECK(hardy_run[0] <= baseline);
    CHECK(hardy_run[1] <= baseline);
    CHECK(ks_run[0] <= baseline);
    CHECK(ks_run[1] <= baseline);
    CHECK(fam_hi <= baseline);
    CHECK(fam_ks_hi <= baseline);
    CHECK(fam_drift <= 0.2);
}

TEST_CASE("acceptance 10: radiation extraction") {
    const SharedData& S = shared();

    // free-wave oracle: exact geometric tail, integrator-tolerance recovery
    const Cplx g0 = 1.3 - 0.4i;
    auto fw = [&](double t, const Vec3& x) {
        const double r = std::sqrt(dot3(x, x));
        const double q = r - t;
        return g0 * std::exp(-q * q) / r + (0.2 + 0.1i) * std::exp(-q * q) / (r * r);
    };
    std::vector<double> rs;
    for (int k = 7; k <= 12; ++k) rs.push_back(std::pow(2.0, k));
    const auto exf = extract_radiation(fw, 0.5, {0.0, 0.0, 1.0}, rs);
    const double dev_free = std::abs(exf.limit - g0 * std::exp(-0.25));

    // approximate solution: strip the logarithmic Coulomb phase, compare with
    // the data profile at collocation-exact q samples
    const double kappa = S.charge / (4.0 * M_PI);
    double dev_app = 0.0;
    for (const auto& [q, dir] : {std::pair<double, Vec3>{0.5, unit_from(1.0, 0.3)},
                                 {-1.0, unit_from(2.1, 4.0)}}) {
        auto fa = [&](double t, const Vec3& x) {
            const double r = std::sqrt(dot3(x, x));
            return S.app->eval_point(t, x).phi * std::exp(Cplx(0.0, kappa * std::log(r)));
        };
        const auto ex = extract_radiation(fa, q, dir, rs);
        Cplx want = 0.0;
        std::vector<double> y;
        sh_eval(4, {dir[0], dir[1], dir[2]}, y);
        for (const auto& ms : S.specs) want += mode_val(ms, q) * y[lm_index(ms.l, ms.m)];
        dev_app = std::max(dev_app, std::abs(ex.limit - want));
    }

    const bool ok = dev_free <= 1e-10 && dev_app <= 1e-4;
    report(10, "radiation extraction", ok, "free-wave dev " + fmt(dev_free) + ", profile dev " + fmt(dev_app));
    CHECK(dev_free <= 1e-10);
    CHECK(dev_app <= 1e-4);
}
