#include <catch_amalgamated.hpp>

#include <numbers>

#include "chaoslab/stein.hpp"

using namespace chaoslab;
using Catch::Approx;

TEST_CASE("quadrature rules integrate polynomials exactly") {
    const GaussRule& gh = gauss_hermite(16);
    CHECK(gh.apply([](double) { return 1.0; }) == Approx(1.0).epsilon(1e-14));
    CHECK(gh.apply([](double x) { return x * x; }) == Approx(1.0).epsilon(1e-13));
    CHECK(gh.apply([](double x) { return std::pow(x, 6); }) == Approx(15.0).epsilon(1e-12));
    const GaussRule gl = gauss_legendre(20, 0.0, 2.0);
    CHECK(gl.apply([](double x) { return std::pow(x, 7); }) == Approx(32.0).epsilon(1e-13));
}

TEST_CASE("stein solution closed cases") {
    const std::vector<double> y{0.4};
    for (double s2 : {0.25, 1.0, 4.0}) {
        const SteinTarget t(s2);
        const TestFunction c = [](double, std::span<const double>) { return 3.0; };
        CHECK(std::abs(stein_solution_eval(c, 1.3, y, t).value) <= 1e-14);
        const TestFunction lin = [](double x, std::span<const double>) { return x; };
        for (double x : {-2.0, 0.0, 0.7, 3.0}) CHECK(std::abs(stein_solution_eval(lin, x, y, t).value + 1.0) <= 1e-8);
    }
}

TEST_CASE("stein equation residual for sin(x + y1)") {
    const TestFunction h = [](double x, std::span<const double> y) { return std::sin(x + y[0]); };
    for (double sigma : {0.5, 1.0, 2.0}) {
        const SteinTarget t(sigma * sigma);
        double worst = 0.0;
        for (double x = -3.0; x <= 3.0 + 1e-12; x += 0.75)
            for (double yy = -3.0; yy <= 3.0 + 1e-12; yy += 1.5) {
                const std::vector<double> y{yy};
                const double d = 1e-4;
                const double fx = stein_solution_eval(h, x, y, t).value;
                const double fp = stein_solution_eval(h, x + d, y, t).value;
                const double fm = stein_solution_eval(h, x - d, y, t).value;
                const double res = t.sigma2 * (fp - fm) / (2 * d) - x * fx - (h(x, y) - gaussian_expectation(h, y, t));
                worst = std::max(worst, std::abs(res));
            }
        CHECK(worst <= 1e-6);
    }
}

TEST_CASE("stein bounds on sampled smooth test functions") {
    // h(x,y) = a·sin(b x + c y) + d·tanh(x − y): ‖∂ₓh‖∞ ≤ |a b| + |d|, ‖∂_y h‖∞ ≤ |a c| + |d|.
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 8; ++trial) {
        const double a = 2 * uniform01(rng) - 1, b = 3 * uniform01(rng), c = 2 * uniform01(rng) - 1,
                     d = uniform01(rng);
        const TestFunction h = [=](double x, std::span<const double> y) {
            return a * std::sin(b * x + c * y[0]) + d * std::tanh(x - y[0]);
        };
        const double hx = std::abs(a * b) + d, hy = std::abs(a * c) + d;
        const double sigma = 0.5 + uniform01(rng) * 1.5;
        const SteinTarget t(sigma * sigma);
        for (double x : {-2.0, -0.5, 0.3, 1.7})
            for (double yy : {-1.0, 0.6}) {
                const std::vector<double> y{yy}, yp{yy + 1e-4}, ym{yy - 1e-4};
                const double f = stein_solution_eval(h, x, y, t).value;
                CHECK(std::abs(f) <= hx + 1e-6);
                const double fx = (stein_solution_eval(h, x + 1e-4, y, t).value -
                                   stein_solution_eval(h, x - 1e-4, y, t).value) / 2e-4;
                CHECK(std::abs(fx) <= std::sqrt(2.0 / std::numbers::pi) / sigma * hx + 1e-6);
                const double fy = (stein_solution_eval(h, x, yp, t).value - stein_solution_eval(h, x, ym, t).value) / 2e-4;
                CHECK(std::abs(fy) <= std::sqrt(std::numbers::pi / 2.0) / sigma * hy + 1e-6);
            }
    }
}

TEST_CASE("non-convergence is reported with the achieved estimate") {
    const TestFunction rough = [](double x, std::span<const double>) { return std::sin(40.0 * x); };
    SteinSolverOptions opt;
    opt.hermite_points = 8;
    opt.outer_points = 8;
    const std::vector<double> y{0.0};
    try {
        stein_solution_eval(rough, 0.5, y, SteinTarget(1.0), opt);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(e.achieved_error() > opt.tolerance);
    }
}
