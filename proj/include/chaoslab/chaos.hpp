#pragma once

#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "chaoslab/common.hpp"
#include "chaoslab/gram.hpp"
#include "chaoslab/hermite.hpp"
#include "chaoslab/symtensor.hpp"

namespace chaoslab {

inline constexpr int kDefaultOrderCap = 8;

/// I_p(f) at the sample point w = (W(e_1), …, W(e_m)) of an orthonormal basis.
/// Each sorted index tuple contributes p!·f(s)·Π_j H_{α_j}(w_j), α_j = multiplicity of coordinate j.
inline double eval_multiple_integral(const DenseSymTensor& f, std::span<const double> w) {
    if (static_cast<int>(w.size()) != f.dim()) throw std::invalid_argument("eval_multiple_integral: dimension mismatch");
    const int p = f.order();
    std::vector<std::vector<double>> h(w.size());
    for (std::size_t j = 0; j < w.size(); ++j) h[j] = hermite_all(p, w[j]);
    const SymLayout& lay = f.layout();
    CompensatedSum s;
    for (std::size_t c = 0; c < f.canonical_size(); ++c) {
        if (f.coeff(c) == 0.0) continue;
        double prod = f.coeff(c);
        for (auto [coord, count] : lay.counts(c)) prod *= h[coord][count];
        s.add(prod);
    }
    return factorial(p) * s.value();
}

/// F = Σ_n I_n(g_n) with finitely many symmetric kernels; order 0 is the mean.
class ChaosExpansion {
public:
    explicit ChaosExpansion(int dim) : dim_(dim) {
        if (dim < 1) throw std::invalid_argument("ChaosExpansion: dim must be positive");
    }
    static ChaosExpansion constant(int dim, double c) {
        ChaosExpansion e(dim);
        e.add(DenseSymTensor::scalar(dim, c));
        return e;
    }
    static ChaosExpansion integral(const DenseSymTensor& f) {
        ChaosExpansion e(f.dim());
        e.add(f);
        return e;
    }

    ChaosExpansion& add(const DenseSymTensor& f) {
        if (f.dim() != dim_) throw std::invalid_argument("ChaosExpansion: kernel dimension mismatch");
        auto it = kernels_.find(f.order());
        if (it == kernels_.end())
            kernels_.emplace(f.order(), f);
        else
            it->second += f;
        return *this;
    }

    int dim() const { return dim_; }
    const std::map<int, DenseSymTensor>& kernels() const { return kernels_; }
    int max_order() const { return kernels_.empty() ? 0 : kernels_.rbegin()->first; }
    double mean() const {
        auto it = kernels_.find(0);
        return it == kernels_.end() ? 0.0 : it->second.coeff(0);
    }
    const DenseSymTensor* kernel(int n) const {
        auto it = kernels_.find(n);
        return it == kernels_.end() ? nullptr : &it->second;
    }

    double evaluate(std::span<const double> w) const {
        double s = 0.0;
        for (const auto& [n, g] : kernels_) s += eval_multiple_integral(g, w);
        return s;
    }

    ChaosExpansion& operator+=(const ChaosExpansion& o) {
        if (o.dim_ != dim_) throw std::invalid_argument("ChaosExpansion: dimension mismatch");
        for (const auto& [n, g] : o.kernels_) add(g);
        return *this;
    }
    ChaosExpansion& operator*=(double s) {
        for (auto& [n, g] : kernels_) g *= s;
        return *this;
    }
    friend ChaosExpansion operator+(ChaosExpansion a, const ChaosExpansion& b) { return a += b; }
    friend ChaosExpansion operator*(double s, ChaosExpansion a) { return a *= s; }

private:
    int dim_;
    std::map<int, DenseSymTensor> kernels_;
};

/// I_n(f)·I_m(g) = Σ_r r!·C(n,r)·C(m,r)·I_{n+m−2r}(f ⊗̃_r g), summed over all kernel pairs.
inline ChaosExpansion multiply(const ChaosExpansion& F, const ChaosExpansion& G, int order_cap = kDefaultOrderCap) {
    if (F.dim() != G.dim()) throw std::invalid_argument("multiply: dimension mismatch");
    if (F.max_order() + G.max_order() > order_cap) throw std::domain_error("multiply: order cap exceeded");
    ChaosExpansion out(F.dim());
    for (const auto& [n, f] : F.kernels())
        for (const auto& [m, g] : G.kernels())
            for (int r = 0; r <= std::min(n, m); ++r) {
                const double c = factorial(r) * binomial(n, r) * binomial(m, r);
                out.add(c * symmetrize(contract(f, g, r)));
            }
    return out;
}

/// E[FG] − E[F]E[G] by the isometry: Σ_{n≥1} n!⟨f_n, g_n⟩.
inline double covariance(const ChaosExpansion& F, const ChaosExpansion& G) {
    if (F.dim() != G.dim()) throw std::invalid_argument("covariance: dimension mismatch");
    CompensatedSum s;
    for (const auto& [n, f] : F.kernels()) {
        if (n == 0) continue;
        if (const DenseSymTensor* g = G.kernel(n)) s.add(factorial(n) * inner(f, *g));
    }
    return s.value();
}

inline double second_moment(const ChaosExpansion& F) { return covariance(F, F) + F.mean() * F.mean(); }

/// The single order p when F is a pure chaos, otherwise -1.
inline int pure_order(const ChaosExpansion& F) {
    int p = -1;
    for (const auto& [n, f] : F.kernels()) {
        if (f.norm_squared() == 0.0) continue;
        if (p >= 0) return -1;
        p = n;
    }
    return p;
}

/// E[X⁴] = E[(X²)²] for a pure chaos X.
inline double fourth_moment(const ChaosExpansion& X, int order_cap = kDefaultOrderCap) {
    const int p = pure_order(X);
    if (p < 1) throw std::invalid_argument("fourth_moment: X must be a pure chaos of order >= 1");
    const ChaosExpansion XX = multiply(X, X, order_cap);
    return covariance(XX, XX) + XX.mean() * XX.mean();
}

/// E[I_p(f)²] = p!⟨f,f⟩ from the Gram representation.
inline double second_moment(const RankOneSum& f) { return factorial(f.order()) * gram_inner(f, f); }

/// E[I_p(f)⁴] = Σ_r (r!C(p,r)²)²·(2p−2r)!·‖f ⊗̃_r f‖².
inline double fourth_moment(const RankOneSum& f) {
    const int p = f.order();
    if (p < 1) throw std::invalid_argument("fourth_moment: order must be >= 1");
    CompensatedSum s;
    for (int r = 0; r <= p; ++r) {
        const double c = factorial(r) * binomial(p, r) * binomial(p, r);
        s.add(c * c * factorial(2 * p - 2 * r) * gram_sym_contract_norm2(f, f, r));
    }
    return s.value();
}

/// ‖f ⊗_r f‖ for r = 1..p−1.
inline std::vector<double> contraction_diagnostics(const DenseSymTensor& f) {
    if (f.order() < 2) throw std::invalid_argument("contraction_diagnostics: order must be >= 2");
    std::vector<double> out;
    for (int r = 1; r < f.order(); ++r) out.push_back(norm(contract(f, f, r)));
    return out;
}

inline std::vector<double> contraction_diagnostics(const RankOneSum& f) {
    if (f.order() < 2) throw std::invalid_argument("contraction_diagnostics: order must be >= 2");
    std::vector<double> out;
    for (int r = 1; r < f.order(); ++r) out.push_back(std::sqrt(std::max(0.0, gram_contract_norm2(f, f, r))));
    return out;
}

/// Largest r in the cross-contraction list: min(p,q) when p≠q, p−1 when p=q.
inline int cross_contraction_max_r(int p, int q) { return p == q ? p - 1 : std::min(p, q); }

/// ‖f ⊗_r g‖ for r = 1..cross_contraction_max_r(p, q).
inline std::vector<double> cross_contraction_norms(const DenseSymTensor& f, const DenseSymTensor& g) {
    if (f.order() < 2) throw std::invalid_argument("cross_contraction_norms: order of f must be >= 2");
    std::vector<double> out;
    for (int r = 1; r <= cross_contraction_max_r(f.order(), g.order()); ++r) out.push_back(norm(contract(f, g, r)));
    return out;
}

inline std::vector<double> cross_contraction_norms(const RankOneSum& f, const RankOneSum& g) {
    if (f.order() < 2) throw std::invalid_argument("cross_contraction_norms: order of f must be >= 2");
    std::vector<double> out;
    for (int r = 1; r <= cross_contraction_max_r(f.order(), g.order()); ++r)
        out.push_back(std::sqrt(std::max(0.0, gram_contract_norm2(f, g, r))));
    return out;
}

}  // namespace chaoslab
