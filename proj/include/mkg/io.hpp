#ifndef MKG_IO_HPP
#define MKG_IO_HPP

// Radiation data files: one JSON header line followed by a little-endian
// float64 block of spherical-harmonic coefficient tables, ordered
// (field: Phi_re, Phi_im, A_0..A_3) x (q index) x (l,m  l-major).
// Profiles are stored unit-scale and multiplied by eps on load.

#include <cstdint>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "mkg/radiation.hpp"

namespace mkg {

inline uint64_t fnv1a_hash(const std::string& s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline void write_radiation_file(const std::string& path, const RadiationFieldSet& data,
                                 uint64_t seed = 0, uint64_t config_hash = 0) {
    nlohmann::json hdr;
    hdr["format"] = "radiation-data-v1";
    hdr["gamma"] = data.gamma;
    hdr["mu"] = data.mu;
    hdr["order"] = data.order;
    hdr["eps"] = data.eps;
    hdr["l_max"] = data.lmax();
    hdr["q_min"] = data.qg.x0;
    hdr["q_max"] = data.qg.xmax();
    hdr["n_q"] = data.qg.n;
    hdr["constrained"] = data.constrained;
    hdr["seed"] = seed;
    hdr["config_hash"] = config_hash;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    f << hdr.dump() << "\n";
    const int nq = data.qg.n, nc = data.ab->nlm();
    const double inv_eps = (data.eps != 0.0) ? 1.0 / data.eps : 0.0;
    std::vector<double> buf(static_cast<size_t>(nq) * nc);
    auto dump_block = [&](auto get) {
        for (int i = 0; i < nq; ++i)
            for (int c = 0; c < nc; ++c) buf[static_cast<size_t>(i) * nc + c] = get(i, c) * inv_eps;
        f.write(reinterpret_cast<const char*>(buf.data()), buf.size() * sizeof(double));
    };
    dump_block([&](int i, int c) { return data.phi(i, c).real(); });
    dump_block([&](int i, int c) { return data.phi(i, c).imag(); });
    for (int al = 0; al < 4; ++al) dump_block([&](int i, int c) { return data.a[al](i, c); });
}

inline RadiationFieldSet read_radiation_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::string line;
    std::getline(f, line);
    auto hdr = nlohmann::json::parse(line);
    RadiationFieldSet data;
    data.gamma = hdr.at("gamma");
    data.mu = hdr.at("mu");
    data.order = hdr.at("order");
    data.eps = hdr.at("eps");
    data.constrained = hdr.value("constrained", false);
    const int lmax = hdr.at("l_max");
    const int nq = hdr.at("n_q");
    const double qmin = hdr.at("q_min"), qmax = hdr.at("q_max");
    data.qg = UniformGrid{qmin, (qmax - qmin) / (nq - 1), nq};
    data.ab = std::make_shared<AngularBasis>(lmax);
    const int nc = data.ab->nlm();
    data.phi.resize(nq, nc);
    for (auto& a : data.a) a.resize(nq, nc);
    std::vector<double> buf(static_cast<size_t>(nq) * nc);
    auto load_block = [&](auto set) {
        f.read(reinterpret_cast<char*>(buf.data()), buf.size() * sizeof(double));
        if (!f) throw std::runtime_error("truncated radiation file: " + path);
        for (int i = 0; i < nq; ++i)
            for (int c = 0; c < nc; ++c) set(i, c, buf[static_cast<size_t>(i) * nc + c] * data.eps);
    };
    RMat re(nq, nc), im(nq, nc);
    load_block([&](int i, int c, double v) { re(i, c) = v; });
    load_block([&](int i, int c, double v) { im(i, c) = v; });
    for (int i = 0; i < nq; ++i)
        for (int c = 0; c < nc; ++c) data.phi(i, c) = std::complex<double>(re(i, c), im(i, c));
    for (int al = 0; al < 4; ++al) load_block([&](int i, int c, double v) { data.a[al](i, c) = v; });
    return data;
}

} // namespace mkg

#endif
