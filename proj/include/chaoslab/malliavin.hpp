#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "chaoslab/chaos.hpp"
#include "chaoslab/gram.hpp"

namespace chaoslab {

/// Γ(X,Y) = ⟨D(−L)⁻¹X, DY⟩ as a chaos expansion.
/// Per kernel pair: (1/p)·DI_p(f) = I_{p−1}(f(·,t)), DI_q(g) = q·I_{q−1}(g(·,t)); pairing over t and
/// applying the product formula gives q·Σ_r r!·C(p−1,r)·C(q−1,r)·I_{p+q−2−2r}(f ⊗̃_{r+1} g).
inline ChaosExpansion gamma(const ChaosExpansion& X, const ChaosExpansion& Y, int order_cap = kDefaultOrderCap) {
    if (X.dim() != Y.dim()) throw std::invalid_argument("gamma: dimension mismatch");
    if (X.mean() != 0.0) throw std::invalid_argument("gamma: X must be centered");
    if (X.max_order() + Y.max_order() - 2 > order_cap) throw std::domain_error("gamma: order cap exceeded");
    ChaosExpansion out(X.dim());
    for (const auto& [p, f] : X.kernels()) {
        if (p == 0) continue;
        for (const auto& [q, g] : Y.kernels()) {
            if (q == 0) continue;
            for (int r = 0; r < std::min(p, q); ++r) {
                const double c = q * factorial(r) * binomial(p - 1, r) * binomial(q - 1, r);
                out.add(c * symmetrize(contract(f, g, r + 1)));
            }
        }
    }
    if (out.kernels().empty()) out.add(DenseSymTensor::scalar(X.dim(), 0.0));
    return out;
}

inline double gamma_second_moment(const ChaosExpansion& X, const ChaosExpansion& Y,
                                  int order_cap = kDefaultOrderCap) {
    return second_moment(gamma(X, Y, order_cap));
}

/// E Γ(I_p(f), I_q(g))² = q²·Σ_r (r!·C(p−1,r)·C(q−1,r))²·(p+q−2−2r)!·‖f ⊗̃_{r+1} g‖².
inline double gamma_second_moment(const RankOneSum& f, const RankOneSum& g) {
    const int p = f.order(), q = g.order();
    if (p < 1 || q < 1) throw std::invalid_argument("gamma_second_moment: orders must be >= 1");
    CompensatedSum s;
    for (int r = 0; r < std::min(p, q); ++r) {
        const double c = factorial(r) * binomial(p - 1, r) * binomial(q - 1, r);
        s.add(c * c * factorial(p + q - 2 - 2 * r) * gram_sym_contract_norm2(f, g, r + 1));
    }
    return q * q * s.value();
}

/// Var Γ(X,X) for X = I_p(f): the second moment without its constant (r = p−1) term.
inline double gamma_self_variance(const RankOneSum& f) {
    const int p = f.order();
    if (p < 1) throw std::invalid_argument("gamma_self_variance: order must be >= 1");
    CompensatedSum s;
    for (int r = 0; r + 1 < p; ++r) {
        const double c = factorial(r) * binomial(p - 1, r) * binomial(p - 1, r);
        s.add(c * c * factorial(2 * p - 2 - 2 * r) * gram_sym_contract_norm2(f, f, r + 1));
    }
    return p * p * s.value();
}

/// Gaussian target N(0, σ²).
struct SteinTarget {
    explicit SteinTarget(double s2) : sigma2(s2) {
        if (!(s2 > 0.0) || !std::isfinite(s2)) throw std::invalid_argument("SteinTarget: sigma2 must be positive");
    }
    double sigma2;
};

/// Parts of the Stein–Malliavin Wasserstein bound. The multiplicative constant is taken as 1.
struct BoundReport {
    double gamma_self_l2 = 0.0;
    std::vector<double> gamma_cross_l2;
    std::optional<double> drift_term;
    double total = 0.0;

    static BoundReport assemble(double self, std::vector<double> cross, std::optional<double> drift = std::nullopt) {
        BoundReport b;
        b.gamma_self_l2 = self;
        b.gamma_cross_l2 = std::move(cross);
        b.drift_term = drift;
        CompensatedSum s;
        s.add(self);
        for (double c : b.gamma_cross_l2) s.add(c);
        if (drift) s.add(*drift);
        b.total = s.value();
        return b;
    }
};

inline BoundReport stein_bound(const ChaosExpansion& X, const std::vector<ChaosExpansion>& Ys,
                               const SteinTarget& target, int order_cap = kDefaultOrderCap) {
    if (pure_order(X) < 1) throw std::invalid_argument("stein_bound: X must be a pure chaos of order >= 1");
    const ChaosExpansion G = gamma(X, X, order_cap);
    const double bias = target.sigma2 - second_moment(X);
    const double self = std::sqrt(bias * bias + std::max(0.0, covariance(G, G)));
    std::vector<double> cross;
    for (const auto& Y : Ys) cross.push_back(std::sqrt(std::max(0.0, gamma_second_moment(X, Y, order_cap))));
    return BoundReport::assemble(self, std::move(cross));
}

inline BoundReport stein_bound(const RankOneSum& f, const std::vector<RankOneSum>& gs, const SteinTarget& target) {
    const double bias = target.sigma2 - second_moment(f);
    const double self = std::sqrt(bias * bias + std::max(0.0, gamma_self_variance(f)));
    std::vector<double> cross;
    for (const auto& g : gs) cross.push_back(std::sqrt(std::max(0.0, gamma_second_moment(f, g))));
    return BoundReport::assemble(self, std::move(cross));
}

}  // namespace chaoslab
