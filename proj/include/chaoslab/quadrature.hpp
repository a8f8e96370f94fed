#pragma once

#include <Eigen/Dense>

#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace chaoslab {

struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    template <class Fn>
    double apply(Fn&& fn) const {
        double s = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * fn(nodes[i]);
        return s;
    }
};

namespace detail {

/// Golub–Welsch: nodes are eigenvalues of the Jacobi matrix, weights μ0·(first eigenvector component)².
inline GaussRule golub_welsch(int n, const std::vector<double>& offdiag, double mu0) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k + 1 < n; ++k) J(k, k + 1) = J(k + 1, k) = offdiag[k];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    GaussRule rule;
    for (int i = 0; i < n; ++i) {
        rule.nodes.push_back(es.eigenvalues()(i));
        const double v = es.eigenvectors()(0, i);
        rule.weights.push_back(mu0 * v * v);
    }
    return rule;
}

template <class Build>
const GaussRule& cached_rule(int kind, int n, Build&& build) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::unique_ptr<GaussRule>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[{kind, n}];
    if (!slot) slot = std::make_unique<GaussRule>(build());
    return *slot;
}

}  // namespace detail

/// n-point rule for E[φ(ξ)], ξ ~ N(0,1).
inline const GaussRule& gauss_hermite(int n) {
    if (n < 1) throw std::invalid_argument("gauss_hermite: n must be positive");
    return detail::cached_rule(0, n, [n] {
        std::vector<double> off(n > 1 ? n - 1 : 0);
        for (int k = 1; k < n; ++k) off[k - 1] = std::sqrt(static_cast<double>(k));
        return detail::golub_welsch(n, off, 1.0);
    });
}

/// n-point Gauss–Legendre rule on [a, b].
inline GaussRule gauss_legendre(int n, double a, double b) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
    const GaussRule& ref = detail::cached_rule(1, n, [n] {
        std::vector<double> off(n > 1 ? n - 1 : 0);
        for (int k = 1; k < n; ++k) off[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
        return detail::golub_welsch(n, off, 2.0);
    });
    GaussRule out;
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (std::size_t i = 0; i < ref.nodes.size(); ++i) {
        out.nodes.push_back(mid + half * ref.nodes[i]);
        out.weights.push_back(half * ref.weights[i]);
    }
    return out;
}

}  // namespace chaoslab
