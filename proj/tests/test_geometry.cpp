#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "mkg/geometry.hpp"

using namespace mkg;

namespace {
Vec3 unit(double th, double ph) {
    return {std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)};
}
} // namespace

TEST_CASE("null frame vectors satisfy the bracket relations") {
    for (double th : {0.01, 0.9, 2.2, M_PI - 0.01}) {
        for (double ph : {0.0, 1.3, 4.0}) {
            NullFrame f(unit(th, ph));
            CHECK(minkowski(f.L, f.L) == Catch::Approx(0.0).margin(1e-14));
            CHECK(minkowski(f.Lbar, f.Lbar) == Catch::Approx(0.0).margin(1e-14));
            CHECK(minkowski(f.L, f.Lbar) == Catch::Approx(-2.0).margin(1e-14));
            for (int B = 0; B < 2; ++B) {
                CHECK(minkowski(f.e[B], f.e[B]) == Catch::Approx(1.0).margin(1e-14));
                CHECK(minkowski(f.L, f.e[B]) == Catch::Approx(0.0).margin(1e-14));
                CHECK(minkowski(f.Lbar, f.e[B]) == Catch::Approx(0.0).margin(1e-14));
            }
            CHECK(minkowski(f.e[0], f.e[1]) == Catch::Approx(0.0).margin(1e-14));
        }
    }
}

TEST_CASE("decompose then reconstruct is the identity") {
    std::mt19937 eng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        Vec3 w = unit(0.1 + 2.9 * (0.5 + 0.5 * u(eng)), 3.0 * u(eng));
        Vec4 a = {u(eng), u(eng), u(eng), u(eng)};
        const NullDecomposition d = null_decompose(a, w);
        const Vec4 back = null_reconstruct(d, w);
        for (int i = 0; i < 4; ++i) CHECK(back[i] == Catch::Approx(a[i]).margin(1e-13));
    }
}

TEST_CASE("decomposition of pure-time and radial covectors") {
    const Vec3 w = unit(1.1, 0.4);
    // a_mu = (-1, 0, 0, 0): a_L = L^mu a_mu = -1, a_Lbar = -1, tangential 0
    NullDecomposition d = null_decompose({-1.0, 0.0, 0.0, 0.0}, w);
    CHECK(d.a_L == Catch::Approx(-1.0));
    CHECK(d.a_Lbar == Catch::Approx(-1.0));
    CHECK(std::abs(d.a_e1) < 1e-15);
    CHECK(std::abs(d.a_e2) < 1e-15);
    // a_mu = (0, w): a_L = 1, a_Lbar = -1
    d = null_decompose({0.0, w[0], w[1], w[2]}, w);
    CHECK(d.a_L == Catch::Approx(1.0));
    CHECK(d.a_Lbar == Catch::Approx(-1.0));
}

TEST_CASE("weight function profile and monotonicity") {
    Weight w{0.9, 0.05};
    // q < 0 branch: 1 + (1-q)^mu ; q >= 0 branch: 1 + (1+q)^{1/2-gamma}
    CHECK(w(-3.0) == Catch::Approx(1.0 + std::pow(4.0, 0.05)));
    CHECK(w(2.0) == Catch::Approx(1.0 + std::pow(3.0, 0.5 - 0.9)));
    CHECK(w(0.0) == Catch::Approx(2.0));
    // w' <= 0 for q >= 0 (decreasing), w' >= 0 for q <= 0 is false here:
    // the interior branch grows toward q -> -infinity
    CHECK(w.d(1.0) < 0.0);
    CHECK(w.d(-1.0) < 0.0);
    // finite-difference consistency of the derivative
    for (double q : {-4.0, -0.5, 0.5, 7.0}) {
        const double h = 1e-6;
        CHECK(w.d(q) == Catch::Approx((w(q + h) - w(q - h)) / (2 * h)).margin(1e-7));
    }
}

TEST_CASE("vector field inventory") {
    const auto vf = all_vector_fields();
    CHECK(vf.size() == 11);
    CHECK(std::string(vf_name(VF::S)) == "S");
}
