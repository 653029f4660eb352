// mkgscat: batch front-end for the backward-scattering toolkit.
// Subcommands: make-data, solve, cauchy, verify, report.
// Exit codes: 0 pass, 2 config error, 3 numerical abort, 4 assertion failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mkg/diagnostics.hpp"
#include "mkg/io.hpp"
#include "mkg/kernels.hpp"
#include "mkg/solver.hpp"

using nlohmann::json;
using namespace mkg;

namespace {

struct RunConfig {
    // physics
    double gamma = 0.9, mu = 0.05, eps = 1e-2;
    int l_max = 2;
    // data grid
    double q_min = -16.0, q_max = 16.0;
    int n_q = 1024;
    std::uint64_t seed = 0;
    // solver grid
    double T = 16.0;
    std::vector<double> T_list;
    int n_r = 384;
    double cfl = 0.5;
    double checkpoint_dt = 2.0;
    // toggles
    bool assert_support = true;
    bool assert_decay = false;
    bool gauge_monitor = false;
    // paths
    std::string data_path = "radiation.dat";
    std::string out_dir = ".";

    std::uint64_t hash = 0;
};

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    json j;
    in >> j;
    RunConfig c;
    auto get = [&](const json& o, const char* k, auto dflt) {
        using Tv = decltype(dflt);
        return o.contains(k) ? o.at(k).get<Tv>() : dflt;
    };
    if (j.contains("physics")) {
        const auto& p = j["physics"];
        c.gamma = get(p, "gamma", c.gamma);
        c.mu = get(p, "mu", c.mu);
        c.eps = get(p, "eps", c.eps);
        c.l_max = get(p, "l_max", c.l_max);
    }
    if (j.contains("data")) {
        const auto& d = j["data"];
        c.q_min = get(d, "q_min", c.q_min);
        c.q_max = get(d, "q_max", c.q_max);
        c.n_q = get(d, "n_q", c.n_q);
        c.seed = get(d, "seed", c.seed);
    }
    if (j.contains("grid")) {
        const auto& g = j["grid"];
        c.T = get(g, "T", c.T);
        c.n_r = get(g, "n_r", c.n_r);
        c.cfl = get(g, "cfl", c.cfl);
        c.checkpoint_dt = get(g, "checkpoint_dt", c.checkpoint_dt);
        if (g.contains("T_list")) c.T_list = g["T_list"].get<std::vector<double>>();
    }
    if (j.contains("diagnostics")) {
        const auto& d = j["diagnostics"];
        c.assert_support = get(d, "assert_support", c.assert_support);
        c.assert_decay = get(d, "assert_decay", c.assert_decay);
        c.gauge_monitor = get(d, "gauge_monitor", c.gauge_monitor);
    }
    if (j.contains("paths")) {
        const auto& p = j["paths"];
        c.data_path = get(p, "data", c.data_path);
        c.out_dir = get(p, "out", c.out_dir);
    }
    c.hash = fnv1a_hash(j.dump());
    return c;
}

void validate_config(const RunConfig& c) {
    if (!(0.5 < c.gamma && c.gamma < 1.0)) throw std::invalid_argument("gamma out of range (1/2, 1)");
    if (!(0.0 < c.mu && c.mu < c.gamma - 0.5)) throw std::invalid_argument("mu out of range (0, gamma-1/2)");
    if (c.n_q < 16 || c.q_max <= c.q_min) throw std::invalid_argument("bad q grid");
    if (c.l_max < 0 || c.l_max > 8) throw std::invalid_argument("l_max out of supported range");
    if (c.n_r < 32 || c.cfl <= 0.0 || c.cfl > 0.5 + 1e-12) throw std::invalid_argument("bad solver grid");
}

// deterministic standard normals (Box-Muller over the raw engine stream, so
// files are bit-identical across standard libraries)
struct NormalGen {
    std::mt19937_64 eng;
    explicit NormalGen(std::uint64_t seed) : eng(seed) {}
    double uniform() { return ((eng() >> 11) + 0.5) * 0x1p-53; }
    double operator()() {
        const double u = uniform(), v = uniform();
        return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * M_PI * v);
    }
};

RadiationFieldSet synthesize_data(const RunConfig& c) {
    RadiationFieldSet d;
    d.gamma = c.gamma;
    d.mu = c.mu;
    d.eps = c.eps;
    d.qg = UniformGrid{c.q_min, (c.q_max - c.q_min) / (c.n_q - 1), c.n_q};
    d.ab = std::make_shared<AngularBasis>(c.l_max);
    const int nc = d.ab->nlm();
    d.phi = CMat::Zero(c.n_q, nc);
    for (auto& m : d.a) m = RMat::Zero(c.n_q, nc);

    NormalGen g(c.seed);
    auto packet = [&](double amp_decay) {
        // q-profile: sum of two Gaussian packets, kept well inside the grid
        const double q0 = -2.0 + 4.0 * g.uniform();
        const double q1 = -2.0 + 4.0 * g.uniform();
        const double s0 = 1.0 + g.uniform(), s1 = 1.0 + g.uniform();
        const double a0 = g() * amp_decay, a1 = 0.5 * g() * amp_decay;
        Eigen::VectorXd prof(c.n_q);
        for (int i = 0; i < c.n_q; ++i) {
            const double q = d.qg.x(i);
            prof(i) = a0 * std::exp(-(q - q0) * (q - q0) / (s0 * s0)) +
                      a1 * std::exp(-(q - q1) * (q - q1) / (s1 * s1));
        }
        return prof;
    };
    for (int l = 0; l <= c.l_max; ++l) {
        const double decay = std::pow(0.5, l);
        for (int m = -l; m <= l; ++m) {
            const int cc = lm_index(l, m);
            d.phi.col(cc) = (packet(decay) + Cplx(0.0, 1.0) * packet(decay)).eval();
            for (int al = 0; al < 4; ++al) d.a[al].col(cc) = 0.5 * packet(decay);
        }
    }
    if (c.eps == 0.0) {
        d.phi.setZero();
        for (auto& m : d.a) m.setZero();
        return d;
    }
    const double n0 = evaluate_norm(d, 2, c.gamma);
    const double scale = c.eps / n0;
    d.phi *= scale;
    for (auto& m : d.a) m *= scale;
    return d;
}

void write_csv(const std::string& path, const EnergyReport& rep) {
    std::ofstream out(path);
    out << "t,l2w_u,l2w_v,sup_wu\n";
    out.precision(17);
    for (size_t i = 0; i < rep.times.size(); ++i)
        out << rep.times[i] << ',' << rep.l2w_u[i] << ',' << rep.l2w_v[i] << ',' << rep.sup_wu[i] << '\n';
}

int cmd_make_data(const RunConfig& c) {
    RadiationFieldSet d = synthesize_data(c);
    const CutoffFamily cf;
    const double charge = compute_charge(d);
    RadiationFieldSet constrained = solve_gauge_constraint(d, charge, cf);
    const double resid = verify_gauge_constraint(constrained, charge, cf);
    if (resid > 1e-10 * std::abs(charge) + 1e-12) {
        std::cerr << "gauge constraint verification failed: residual " << resid << "\n";
        return 3;
    }
    const auto parent = std::filesystem::path(c.data_path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    write_radiation_file(c.data_path, constrained, c.seed, c.hash);
    std::cout << "wrote " << c.data_path << "  charge=" << charge << "  gauge-residual=" << resid << "\n";
    return 0;
}

int cmd_solve(const RunConfig& c) {
    RadiationFieldSet d = read_radiation_file(c.data_path);
    const CutoffFamily cf;
    const double charge = compute_charge(d);
    auto app = std::make_shared<const ApproximateSolution>(d, charge, cf);
    SolverGrid g;
    g.T = c.T;
    g.n_r = c.n_r;
    g.lmax = d.lmax() - 2; // evolved band matches the pre-constraint data band
    if (g.lmax < 0) g.lmax = d.lmax();
    g.cfl = c.cfl;
    Weight w{c.gamma, c.mu};
    BackwardSolver solver(g, app, w);

    std::unique_ptr<GaugeProbe> probe;
    if (c.gauge_monitor) {
        const double dt = g.dt();
        const double center = std::round(0.5 * c.T / dt) * dt;
        probe = std::make_unique<GaugeProbe>(std::vector<double>{center}, dt, 2 * d.lmax() + 1);
    }
    std::function<void(const RemainderState&, const BackwardSolver&)> obs;
    if (probe) obs = [&](const RemainderState& st, const BackwardSolver& s) { probe->observe(st, s); };
    SolveResult res;
    try {
        res = solver.solve_backward(c.checkpoint_dt, c.eps, obs);
    } catch (const SolverAbort& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return 3;
    }

    std::filesystem::create_directories(c.out_dir);
    write_csv(c.out_dir + "/energy.csv", res.report);

    std::vector<double> ts, vs;
    for (size_t i = 0; i < res.report.times.size(); ++i) {
        if (res.report.times[i] >= 8.0 && res.report.times[i] <= c.T) {
            ts.push_back(res.report.times[i]);
            vs.push_back(res.report.l2w_u[i]);
        }
    }
    const DecayFit fit = decay_fit(ts, vs);

    bool pass = true;
    json summary;
    summary["config_hash"] = c.hash;
    summary["T"] = c.T;
    summary["steps"] = res.report.steps;
    summary["decay_exponent"] = fit.p;
    summary["decay_ci"] = fit.ci;
    summary["max_support_violation"] = res.report.max_support_violation;
    if (c.assert_support && res.report.max_support_violation > 1e-12 * std::max(c.eps, 1e-30)) pass = false;
    if (c.assert_decay && !(fit.p <= -0.075)) pass = false;
    if (probe && !probe->bundles.empty()) {
        json gm;
        for (const auto& [t, s] : probe->sup_lambda) gm[std::to_string(t)] = s;
        summary["gauge_sup_lambda"] = gm;
    }
    summary["pass"] = pass;
    std::ofstream(c.out_dir + "/summary.json") << summary.dump(2) << "\n";
    std::cout << summary.dump(2) << "\n";
    return pass ? 0 : 4;
}

int cmd_cauchy(const RunConfig& c) {
    if (c.T_list.size() < 2) {
        std::cerr << "cauchy requires grid.T_list with at least two ascending horizons\n";
        return 2;
    }
    RadiationFieldSet d = read_radiation_file(c.data_path);
    const CutoffFamily cf;
    const double charge = compute_charge(d);
    Weight w{c.gamma, c.mu};
    const double dr = 6.0 * c.T_list.back() / c.n_r;
    const int lmax_evolve = std::max(0, d.lmax() - 2);
    CauchyTable table = cauchy_study(d, charge, cf, c.T_list, dr, lmax_evolve, w, c.checkpoint_dt, c.eps);

    std::filesystem::create_directories(c.out_dir);
    std::ofstream out(c.out_dir + "/cauchy.csv");
    out << "T1,T2,diff_u,diff_v,ratio_vs_model\n";
    out.precision(17);
    for (const auto& r : table.rows)
        out << r.T1 << ',' << r.T2 << ',' << r.diff_u << ',' << r.diff_v << ',' << r.ratio_vs_model << '\n';
    std::cout << "cauchy rows: " << table.rows.size() << "  monotone: " << (table.monotone ? "yes" : "no")
              << "\n";
    return table.monotone ? 0 : 4;
}

int run_verify_suite(const RunConfig& c, const std::string& filter, std::ostream& os) {
    int failures = 0;
    auto check = [&](const std::string& name, bool ok, double value) {
        if (!filter.empty() && name.find(filter) == std::string::npos) return;
        os << (ok ? "pass" : "FAIL") << "  " << name << "  (" << value << ")\n";
        if (!ok) ++failures;
    };

    if (filter.empty() || std::string("charge").find(filter) != std::string::npos) {
        // charge of the axisymmetric reference profile Phi = e^{-q^2} e^{-iq}
        RadiationFieldSet d;
        d.gamma = c.gamma;
        d.mu = c.mu;
        d.eps = 1.0;
        d.qg = UniformGrid{-12.0, 24.0 / 2047, 2048};
        d.ab = std::make_shared<AngularBasis>(0);
        d.phi = CMat::Zero(2048, 1);
        for (int i = 0; i < 2048; ++i) {
            const double q = d.qg.x(i);
            d.phi(i, 0) = std::exp(-q * q) * std::exp(Cplx(0.0, -q)) * std::sqrt(4.0 * M_PI);
        }
        for (auto& m : d.a) m = RMat::Zero(2048, 1);
        const double q = compute_charge(d);
        const double expect = -4.0 * M_PI * std::sqrt(M_PI / 2.0);
        check("charge-reference-profile", std::abs(q - expect) < 1e-6, q);
    }
    if (filter.empty() || std::string("kernels").find(filter) != std::string::npos) {
        // spot-check the zonal kernel reduction against direct quadrature
        double worst = 0.0;
        for (int l : {0, 3, 9}) {
            for (double z : {1.1, 2.0, 8.0}) {
                const double r = 1.7, t = z * r;
                const double have = funk_hecke_weight(l, t, r);
                // int_{-1}^{1} P_l(x) / (t - r x) dx = (2/r) Q_l(t/r)
                std::vector<double> x, wq;
                gauss_legendre(256, x, wq);
                double val = 0.0, ref = 0.0;
                for (size_t i = 0; i < x.size(); ++i) {
                    val += wq[i] * legendre_p(l, x[i]) / (t - r * x[i]);
                    ref += wq[i] * std::abs(legendre_p(l, x[i])) / (t - r * x[i]);
                }
                // normalize by the L1 size of the integrand: for large l, z the
                // integral is cancellation-small and the quadrature only
                // resolves it to roundoff at that scale
                worst = std::max(worst, std::abs(have - val) / ref);
            }
        }
        check("kernel-vs-quadrature", worst < 1e-9, worst);
    }
    if (filter.empty() || std::string("gauge").find(filter) != std::string::npos) {
        RadiationFieldSet d = synthesize_data(c);
        const CutoffFamily cf;
        const double charge = compute_charge(d);
        RadiationFieldSet con = solve_gauge_constraint(d, charge, cf);
        const double resid = verify_gauge_constraint(con, charge, cf);
        check("gauge-constraint-residual", resid <= 1e-10 * std::abs(charge) + 1e-12, resid);
    }
    if (filter.empty() || std::string("energy").find(filter) != std::string::npos) {
        // free outgoing wave: conformal energy drift with w == 1
        UniformGrid rg{0.05, 0.05, 800};
        auto make_slice = [&](double t) {
            FieldSlice f;
            f.t = t;
            f.rg = rg;
            f.lmax = 0;
            f.h = CMat::Zero(rg.n, 1);
            f.h_t = CMat::Zero(rg.n, 1);
            for (int ir = 0; ir < rg.n; ++ir) {
                const double r = rg.x(ir);
                auto G = [](double s) { return std::exp(-(s - 6.0) * (s - 6.0)); };
                auto Gp = [](double s) { return -2.0 * (s - 6.0) * std::exp(-(s - 6.0) * (s - 6.0)); };
                f.h(ir, 0) = G(t - r) - G(t + r);
                f.h_t(ir, 0) = Gp(t - r) - Gp(t + r);
            }
            return f;
        };
        const double E0 = conformal_energy(make_slice(0.0), nullptr);
        const double E1 = conformal_energy(make_slice(10.0), nullptr);
        check("free-wave-energy-drift", std::abs(E1 - E0) / E0 < 1e-6, std::abs(E1 - E0) / E0);
    }
    return failures;
}

int cmd_verify(const RunConfig& c, const std::string& filter) {
    const int failures = run_verify_suite(c, filter, std::cout);
    if (failures) {
        std::cout << failures << " check(s) failed\n";
        return 4;
    }
    std::cout << "all checks passed\n";
    return 0;
}

int cmd_report(const RunConfig& c) {
    std::ifstream in(c.out_dir + "/summary.json");
    if (!in) {
        std::cerr << "no summary.json under " << c.out_dir << "\n";
        return 2;
    }
    json j;
    in >> j;
    std::cout << "run summary (config hash " << j.value("config_hash", 0ull) << ")\n";
    for (auto& [k, v] : j.items()) std::cout << "  " << k << ": " << v.dump() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App cli{"backward-scattering toolkit"};
    cli.require_subcommand(1);
    std::string config_path, out_override, filter;
    std::int64_t seed_override = -1;
    int threads = 1;
    cli.add_option("--config", config_path, "JSON config file")->required();
    cli.add_option("--out", out_override, "output directory override");
    cli.add_option("--filter", filter, "verify: restrict to matching suites");
    cli.add_option("--seed", seed_override, "data seed override");
    cli.add_option("--threads", threads, "worker threads (reserved)");
    auto* s_make = cli.add_subcommand("make-data", "synthesize and constrain radiation data");
    auto* s_solve = cli.add_subcommand("solve", "backward solve + diagnostics");
    auto* s_cauchy = cli.add_subcommand("cauchy", "horizon convergence study");
    auto* s_verify = cli.add_subcommand("verify", "run property suites");
    auto* s_report = cli.add_subcommand("report", "print a run summary");

    CLI11_PARSE(cli, argc, argv);

    RunConfig cfg;
    try {
        cfg = load_config(config_path);
        if (!out_override.empty()) cfg.out_dir = out_override;
        if (seed_override >= 0) cfg.seed = (std::uint64_t)seed_override;
        validate_config(cfg);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (s_make->parsed()) return cmd_make_data(cfg);
        if (s_solve->parsed()) return cmd_solve(cfg);
        if (s_cauchy->parsed()) return cmd_cauchy(cfg);
        if (s_verify->parsed()) return cmd_verify(cfg, filter);
        if (s_report->parsed()) return cmd_report(cfg);
    } catch (const SolverAbort& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
