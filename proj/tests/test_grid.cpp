#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "mkg/grid.hpp"

using namespace mkg;

TEST_CASE("finite differences are 4th order on smooth data") {
    auto run = [&](int n) {
        UniformGrid g{0.0, 1.0 / (n - 1), n};
        std::vector<double> f(n), d1e(n), d2e(n);
        for (int i = 0; i < n; ++i) {
            const double x = g.x(i);
            f[i] = std::sin(3.0 * x) + 0.25 * std::cos(7.0 * x);
            d1e[i] = 3.0 * std::cos(3.0 * x) - 1.75 * std::sin(7.0 * x);
            d2e[i] = -9.0 * std::sin(3.0 * x) - 12.25 * std::cos(7.0 * x);
        }
        auto d1 = deriv1_o4(f, g.dx);
        auto d2 = deriv2_o4(f, g.dx);
        double e1 = 0, e2 = 0;
        for (int i = 0; i < n; ++i) {
            e1 = std::max(e1, std::abs(d1[i] - d1e[i]));
            e2 = std::max(e2, std::abs(d2[i] - d2e[i]));
        }
        return std::pair{e1, e2};
    };
    auto [a1, a2] = run(101);
    auto [b1, b2] = run(201);
    CHECK(a1 / b1 > 12.0); // ~16x for 4th order
    CHECK(a2 / b2 > 6.0);  // edge stencil for d2 is 3rd order
    CHECK(b1 < 1e-6);
    CHECK(b2 < 1e-3);
}

TEST_CASE("simpson integrates polynomials of degree 3 exactly") {
    UniformGrid g{0.0, 0.1, 11};
    std::vector<double> f(11);
    for (int i = 0; i < 11; ++i) {
        const double x = g.x(i);
        f[i] = 2.0 + x - 3.0 * x * x + 5.0 * x * x * x;
    }
    // exact integral over [0, 1]
    const double exact = 2.0 + 0.5 - 1.0 + 1.25;
    CHECK(simpson(f, g.dx) == Catch::Approx(exact).epsilon(1e-12));
}

TEST_CASE("simpson handles even sample counts via the 3/8 tail") {
    const int n = 100;
    UniformGrid g{0.0, 1.0 / (n - 1), n};
    std::vector<double> f(n);
    for (int i = 0; i < n; ++i) f[i] = std::exp(g.x(i));
    CHECK(simpson(f, g.dx) == Catch::Approx(std::exp(1.0) - 1.0).epsilon(1e-8));
}

TEST_CASE("cumulative integral matches closed forms and endpoint quadrature") {
    const int n = 400;
    UniformGrid g{-6.0, 12.0 / (n - 1), n};
    std::vector<double> f(n);
    for (int i = 0; i < n; ++i) f[i] = std::exp(-g.x(i) * g.x(i));
    auto F = cumulative_integral(f, g.dx);
    CHECK(F[0] == 0.0);
    // erf-based reference
    for (int i : {50, 200, 399}) {
        const double want = std::sqrt(M_PI) / 2.0 * (std::erf(g.x(i)) - std::erf(-6.0));
        CHECK(F[i] == Catch::Approx(want).margin(1e-9));
    }
}

TEST_CASE("cubic interpolation reproduces cubics exactly and is 4th order") {
    const int n = 50;
    UniformGrid g{0.0, 1.0 / (n - 1), n};
    std::vector<double> f(n);
    for (int i = 0; i < n; ++i) {
        const double x = g.x(i);
        f[i] = 1.0 - 2.0 * x + x * x + 0.5 * x * x * x;
    }
    for (double x : {0.013, 0.5004, 0.871, 0.99}) {
        const double want = 1.0 - 2.0 * x + x * x + 0.5 * x * x * x;
        CHECK(interp_cubic(g, f, x) == Catch::Approx(want).epsilon(1e-13));
    }
    // smooth non-polynomial: error shrinks ~16x per refinement
    auto err = [&](int m) {
        UniformGrid gg{0.0, 1.0 / (m - 1), m};
        std::vector<double> ff(m);
        for (int i = 0; i < m; ++i) ff[i] = std::sin(5.0 * gg.x(i));
        double worst = 0.0;
        for (int k = 0; k < 97; ++k) {
            const double x = 0.01 + 0.98 * k / 96.0;
            worst = std::max(worst, std::abs(interp_cubic(gg, ff, x) - std::sin(5.0 * x)));
        }
        return worst;
    };
    CHECK(err(51) / err(101) > 10.0);
}

TEST_CASE("japanese bracket") {
    CHECK(japanese_bracket(0.0) == 1.0);
    CHECK(japanese_bracket(3.0) == Catch::Approx(std::sqrt(10.0)));
    CHECK(japanese_bracket(-4.0) == japanese_bracket(4.0));
}
