#pragma once

#include <functional>
#include <numbers>
#include <span>
#include <string>

#include "chaoslab/common.hpp"
#include "chaoslab/malliavin.hpp"
#include "chaoslab/quadrature.hpp"

namespace chaoslab {

/// h(x, y) with x the Gaussian coordinate and y the conditioning vector.
using TestFunction = std::function<double(double, std::span<const double>)>;

struct SteinSolverOptions {
    int hermite_points = 192;
    int outer_points = 96;
    double tolerance = 1e-6;
};

struct SteinValue {
    double value;
    double error_estimate;
};

namespace detail {

// With t = sin²θ the weight dt / (2√(t(1−t))) becomes dθ on [0, π/2].
inline double stein_integral(const TestFunction& h, double x, std::span<const double> y, double sigma, int inner,
                             int outer) {
    const GaussRule& gh = gauss_hermite(inner);
    const GaussRule gl = gauss_legendre(outer, 0.0, 0.5 * std::numbers::pi);
    CompensatedSum s;
    for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
        const double st = std::sin(gl.nodes[k]), ct = std::cos(gl.nodes[k]);
        // Nodes come in ± pairs, so pairing them cancels the constant part of h exactly.
        CompensatedSum e;
        const std::size_t m = gh.nodes.size();
        for (std::size_t i = 0; i < m / 2; ++i) {
            const double xi = gh.nodes[m - 1 - i];
            const double diff = h(st * x + ct * sigma * xi, y) - h(st * x - ct * sigma * xi, y);
            e.add(gh.weights[m - 1 - i] * sigma * xi * diff);
        }
        s.add(gl.weights[k] * e.value());
    }
    return s.value();
}

}  // namespace detail

/// Solution f_h(x, y) of σ²∂ₓf − x·f = h(x,y) − E h(Z,y), evaluated by nested Gauss rules.
/// The error estimate compares against the same rules at half the points.
inline SteinValue stein_solution_eval(const TestFunction& h, double x, std::span<const double> y,
                                      const SteinTarget& target, const SteinSolverOptions& opt = {}) {
    const double sigma = std::sqrt(target.sigma2);
    const double fine = detail::stein_integral(h, x, y, sigma, opt.hermite_points, opt.outer_points);
    const double coarse = detail::stein_integral(h, x, y, sigma, std::max(1, opt.hermite_points / 2),
                                                 std::max(1, opt.outer_points / 2));
    const double scale = 1.0 / target.sigma2;
    SteinValue v{-scale * fine, scale * std::abs(fine - coarse)};
    if (!(v.error_estimate <= opt.tolerance))
        throw ConvergenceError("stein_solution_eval: quadrature did not converge (estimate " +
                                   std::to_string(v.error_estimate) + ")",
                               v.error_estimate);
    return v;
}

/// E h(Z, y) for Z ~ N(0, σ²).
inline double gaussian_expectation(const TestFunction& h, std::span<const double> y, const SteinTarget& target,
                                   int points = 64) {
    const double sigma = std::sqrt(target.sigma2);
    return gauss_hermite(points).apply([&](double xi) { return h(sigma * xi, y); });
}

}  // namespace chaoslab
