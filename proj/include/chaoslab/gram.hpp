#pragma once

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "chaoslab/common.hpp"
#include "chaoslab/symtensor.hpp"
#include "chaoslab/toeplitz.hpp"

namespace chaoslab {

inline constexpr double kPsdTolerance = 1e-8;
inline constexpr double kPsdHardLimit = 1e-4;

/// Inner products ⟨e_i, e_j⟩ of N atoms. Either dense, or block-Toeplitz: atoms are grouped into
/// F families of n atoms each and ⟨e_(a,x), e_(b,y)⟩ = T_ab(x − y).
class GramMatrix {
public:
    static std::shared_ptr<const GramMatrix> dense(Eigen::MatrixXd g) {
        auto out = std::shared_ptr<GramMatrix>(new GramMatrix());
        if (g.rows() != g.cols() || g.rows() < 1) throw std::invalid_argument("GramMatrix: need a square matrix");
        const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
        if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
            throw std::invalid_argument("GramMatrix: matrix is not symmetric");
        out->dense_ = std::move(g);
        out->size_ = static_cast<int>(out->dense_.rows());
        out->classify(min_eigenvalue_dense(out->dense_), true);
        return out;
    }

    static std::shared_ptr<const GramMatrix> toeplitz(const Toeplitz& t) { return block_toeplitz(1, {t}); }

    /// blocks[a*F + b] = T_ab; requires T_ba = transpose(T_ab).
    static std::shared_ptr<const GramMatrix> block_toeplitz(int families, std::vector<Toeplitz> blocks) {
        if (families < 1 || blocks.size() != static_cast<std::size_t>(families * families))
            throw std::invalid_argument("GramMatrix: need F*F Toeplitz blocks");
        const int n = blocks[0].n();
        for (int a = 0; a < families; ++a)
            for (int b = 0; b < families; ++b) {
                const Toeplitz& ab = blocks[a * families + b];
                const Toeplitz& ba = blocks[b * families + a];
                if (ab.n() != n) throw std::invalid_argument("GramMatrix: blocks differ in size");
                for (int d = -(n - 1); d < n; ++d)
                    if (std::abs(ab.lag(d) - ba.lag(-d)) > 1e-12 * std::max(1.0, std::abs(ab.lag(d))))
                        throw std::invalid_argument("GramMatrix: block structure is not symmetric");
            }
        auto out = std::shared_ptr<GramMatrix>(new GramMatrix());
        out->families_ = families;
        out->family_size_ = n;
        out->size_ = families * n;
        out->blocks_ = std::move(blocks);
        out->check_structured_psd();
        return out;
    }

    int size() const { return size_; }
    bool is_block_toeplitz() const { return families_ > 0; }
    int families() const { return families_; }
    int family_size() const { return family_size_; }
    const Toeplitz& block(int a, int b) const { return blocks_.at(a * families_ + b); }

    double operator()(int i, int j) const {
        if (!is_block_toeplitz()) return dense_(i, j);
        return block(i / family_size_, j / family_size_)(i % family_size_, j % family_size_);
    }

    /// Smallest eigenvalue found by the construction check (exact for dense and single-family inputs).
    double min_eigenvalue() const { return min_eig_; }
    /// True when the smallest eigenvalue lies in the tolerated band (−1e−4, −1e−8).
    bool psd_warning() const { return warning_; }
    /// False when only the diagonal blocks could be certified (large multi-family inputs).
    bool psd_fully_checked() const { return fully_checked_; }

    Eigen::MatrixXd to_dense() const {
        if (!is_block_toeplitz()) return dense_;
        Eigen::MatrixXd g(size_, size_);
        for (int i = 0; i < size_; ++i)
            for (int j = 0; j < size_; ++j) g(i, j) = (*this)(i, j);
        return g;
    }

    /// Rows are atom coordinates in an orthonormal basis: E·Eᵀ = G (negative eigenvalues clipped).
    Eigen::MatrixXd embedding() const {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_dense());
        Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        return es.eigenvectors() * root.asDiagonal();
    }

private:
    GramMatrix() = default;

    static double min_eigenvalue_dense(const Eigen::MatrixXd& g) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff();
    }

    /// Durbin recursion; returns false if some prediction-error variance is not positive.
    static bool durbin_positive(const Toeplitz& t, double& min_variance) {
        const int n = t.n();
        double v = t.lag(0);
        min_variance = v;
        if (v <= 0.0) return false;
        std::vector<double> phi, prev;
        for (int k = 1; k < n; ++k) {
            double acc = t.lag(k);
            for (int j = 0; j < k - 1; ++j) acc -= phi[j] * t.lag(k - 1 - j);
            const double kappa = acc / v;
            prev = phi;
            phi.resize(k);
            for (int j = 0; j < k - 1; ++j) phi[j] = prev[j] - kappa * prev[k - 2 - j];
            phi[k - 1] = kappa;
            v *= (1.0 - kappa * kappa);
            min_variance = std::min(min_variance, v);
            if (v <= 0.0) return false;
        }
        return true;
    }

    void check_structured_psd() {
        bool blocks_ok = true;
        for (int a = 0; a < families_; ++a) {
            double mv = 0.0;
            if (!durbin_positive(block(a, a), mv)) blocks_ok = false;
        }
        if (families_ == 1 && blocks_ok) {
            classify(0.0, true);
            return;
        }
        if (size_ <= 1024) {
            classify(min_eigenvalue_dense(to_dense()), true);
            return;
        }
        if (!blocks_ok) throw std::domain_error("GramMatrix: diagonal Toeplitz block is not positive definite");
        classify(0.0, false);
    }

    void classify(double min_eig, bool full) {
        const double scale = std::max(1.0, std::abs((*this)(0, 0)));
        min_eig_ = min_eig;
        fully_checked_ = full;
        if (min_eig < -kPsdHardLimit * scale) throw std::domain_error("GramMatrix: not positive semidefinite");
        warning_ = min_eig < -kPsdTolerance * scale;
    }

    int size_ = 0;
    int families_ = 0;
    int family_size_ = 0;
    Eigen::MatrixXd dense_;
    std::vector<Toeplitz> blocks_;
    double min_eig_ = 0.0;
    bool warning_ = false;
    bool fully_checked_ = true;
};

using GramPtr = std::shared_ptr<const GramMatrix>;

/// Σ_i a_i e_i^{⊗p} over the atoms of a GramMatrix.
class RankOneSum {
public:
    RankOneSum(GramPtr gram, int order, std::vector<double> weights, std::vector<int> atoms)
        : gram_(std::move(gram)), order_(order), weights_(std::move(weights)), atoms_(std::move(atoms)) {
        if (!gram_) throw std::invalid_argument("RankOneSum: null Gram matrix");
        if (order_ < 0) throw std::invalid_argument("RankOneSum: negative order");
        if (weights_.size() != atoms_.size()) throw std::invalid_argument("RankOneSum: weights/atoms size mismatch");
        for (int a : atoms_)
            if (a < 0 || a >= gram_->size()) throw std::out_of_range("RankOneSum: atom index out of range");
        detect_uniform_family();
    }

    /// weight · Σ_{x<n} e_(family,x)^{⊗p} over a block-Toeplitz Gram.
    static RankOneSum uniform_family(GramPtr gram, int family, int order, double weight) {
        if (!gram->is_block_toeplitz()) throw std::invalid_argument("uniform_family: Gram is not block-Toeplitz");
        const int n = gram->family_size();
        std::vector<int> atoms(n);
        for (int x = 0; x < n; ++x) atoms[x] = family * n + x;
        return RankOneSum(std::move(gram), order, std::vector<double>(n, weight), std::move(atoms));
    }

    const GramPtr& gram() const { return gram_; }
    int order() const { return order_; }
    std::size_t terms() const { return atoms_.size(); }
    double weight(std::size_t k) const { return weights_[k]; }
    int atom(std::size_t k) const { return atoms_[k]; }
    /// Family index when the sum is a uniform weight over one whole Toeplitz family.
    std::optional<int> uniform_family_index() const { return family_; }
    double uniform_weight() const { return weights_.empty() ? 0.0 : weights_[0]; }

    RankOneSum scaled(double s) const {
        std::vector<double> w = weights_;
        for (double& v : w) v *= s;
        return RankOneSum(gram_, order_, std::move(w), atoms_);
    }

    /// Dense symmetric tensor in the orthonormal coordinates given by an embedding (rows = atoms).
    DenseSymTensor embed(const Eigen::MatrixXd& coords) const {
        const int m = static_cast<int>(coords.cols());
        DenseSymTensor out(m, order_);
        std::vector<double> h(m);
        for (std::size_t k = 0; k < atoms_.size(); ++k) {
            for (int c = 0; c < m; ++c) h[c] = coords(atoms_[k], c);
            out += weights_[k] * DenseSymTensor::rank_one(h, order_);
        }
        return out;
    }

private:
    void detect_uniform_family() {
        if (!gram_->is_block_toeplitz() || atoms_.empty()) return;
        const int n = gram_->family_size();
        if (static_cast<int>(atoms_.size()) != n || atoms_[0] % n != 0) return;
        for (int x = 0; x < n; ++x)
            if (atoms_[x] != atoms_[0] + x || weights_[x] != weights_[0]) return;
        family_ = atoms_[0] / n;
    }

    GramPtr gram_;
    int order_;
    std::vector<double> weights_;
    std::vector<int> atoms_;
    std::optional<int> family_;
};

namespace detail {

inline void require_shared_gram(std::initializer_list<const RankOneSum*> xs) {
    const GramMatrix* g = (*xs.begin())->gram().get();
    for (auto* x : xs)
        if (x->gram().get() != g) throw std::invalid_argument("gram_contract_inner: incompatible Gram references");
}

inline bool all_uniform(std::initializer_list<const RankOneSum*> xs) {
    for (auto* x : xs)
        if (!x->uniform_family_index()) return false;
    return true;
}

inline std::optional<Toeplitz> edge(const GramMatrix& g, int fa, int fb, int power) {
    if (power == 0) return std::nullopt;
    return g.block(fa, fb).power(power);
}

/// Σ over (i∈f, j∈g, k∈f2, l∈g2) of weights × ⟨i,j⟩^e01 ⟨i,k⟩^e02 ⟨i,l⟩^e03 ⟨j,k⟩^e12 ⟨j,l⟩^e13 ⟨k,l⟩^e23.
inline double four_atom_sum(const RankOneSum& f, const RankOneSum& g, const RankOneSum& f2, const RankOneSum& g2,
                            const std::array<int, 6>& ex) {
    const GramMatrix& G = *f.gram();
    if (all_uniform({&f, &g, &f2, &g2})) {
        const int fam[4] = {*f.uniform_family_index(), *g.uniform_family_index(), *f2.uniform_family_index(),
                            *g2.uniform_family_index()};
        static constexpr int ends[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
        K4Edges e;
        for (int s = 0; s < 6; ++s) e[s] = edge(G, fam[ends[s][0]], fam[ends[s][1]], ex[s]);
        const double w = f.uniform_weight() * g.uniform_weight() * f2.uniform_weight() * g2.uniform_weight();
        return w * k4_sum(G.family_size(), e);
    }
    const double work = static_cast<double>(f.terms()) * g.terms() * f2.terms() * g2.terms();
    if (work > 2e8) throw std::domain_error("four_atom_sum: generic path too large");
    auto gp = [&](int a, int b, int e) { return ipow(G(a, b), e); };
    CompensatedSum total;
    for (std::size_t i = 0; i < f.terms(); ++i)
        for (std::size_t j = 0; j < g.terms(); ++j) {
            const int ai = f.atom(i), aj = g.atom(j);
            const double wij = f.weight(i) * g.weight(j) * gp(ai, aj, ex[0]);
            if (wij == 0.0) continue;
            for (std::size_t k = 0; k < f2.terms(); ++k) {
                const int ak = f2.atom(k);
                const double wk = wij * f2.weight(k) * gp(ai, ak, ex[1]) * gp(aj, ak, ex[3]);
                if (wk == 0.0) continue;
                double row = 0.0;
                for (std::size_t l = 0; l < g2.terms(); ++l) {
                    const int al = g2.atom(l);
                    row += g2.weight(l) * gp(ai, al, ex[2]) * gp(aj, al, ex[4]) * gp(ak, al, ex[5]);
                }
                total.add(wk * row);
            }
        }
    return total.value();
}

inline void check_orders(const RankOneSum& f, const RankOneSum& g, const RankOneSum& f2, const RankOneSum& g2,
                         int r) {
    require_shared_gram({&f, &g, &f2, &g2});
    if (f.order() != f2.order() || g.order() != g2.order())
        throw std::invalid_argument("gram_contract_inner: order mismatch between pairs");
    if (r < 0 || r > std::min(f.order(), g.order())) throw std::invalid_argument("gram_contract_inner: r out of range");
}

}  // namespace detail

/// ⟨f ⊗_r g, f2 ⊗_r g2⟩ using f ⊗_r g = Σ a_i b_j ⟨e_i,e_j⟩^r e_i^{⊗(p−r)} ⊗ e_j^{⊗(q−r)}.
inline double gram_contract_inner(const RankOneSum& f, const RankOneSum& g, const RankOneSum& f2,
                                  const RankOneSum& g2, int r) {
    detail::check_orders(f, g, f2, g2, r);
    const int a = f.order() - r, b = g.order() - r;
    return detail::four_atom_sum(f, g, f2, g2, {r, a, 0, 0, b, r});
}

inline double gram_contract_norm2(const RankOneSum& f, const RankOneSum& g, int r) {
    return gram_contract_inner(f, g, f, g, r);
}

/// ⟨f ⊗̃_r g, f2 ⊗̃_r g2⟩. For rank-one factors, ⟨sym(e_i^a⊗e_j^b), sym(e_k^a⊗e_l^b)⟩ is a hypergeometric
/// mixture over t, the number of e_j factors landing in the first a slots.
inline double gram_sym_contract_inner(const RankOneSum& f, const RankOneSum& g, const RankOneSum& f2,
                                      const RankOneSum& g2, int r) {
    detail::check_orders(f, g, f2, g2, r);
    const int a = f.order() - r, b = g.order() - r;
    CompensatedSum total;
    for (int t = 0; t <= std::min(a, b); ++t) {
        const double c = binomial(a, t) * binomial(b, t) / binomial(a + b, a);
        total.add(c * detail::four_atom_sum(f, g, f2, g2, {r, a - t, t, t, b - t, r}));
    }
    return total.value();
}

inline double gram_sym_contract_norm2(const RankOneSum& f, const RankOneSum& g, int r) {
    return gram_sym_contract_inner(f, g, f, g, r);
}

/// ⟨f, g⟩ for equal orders.
inline double gram_inner(const RankOneSum& f, const RankOneSum& g) {
    if (f.order() != g.order()) throw std::invalid_argument("gram_inner: order mismatch");
    detail::require_shared_gram({&f, &g});
    const GramMatrix& G = *f.gram();
    if (detail::all_uniform({&f, &g}))
        return f.uniform_weight() * g.uniform_weight() *
               G.block(*f.uniform_family_index(), *g.uniform_family_index()).power(f.order()).total();
    CompensatedSum s;
    for (std::size_t i = 0; i < f.terms(); ++i)
        for (std::size_t j = 0; j < g.terms(); ++j)
            s.add(f.weight(i) * g.weight(j) * ipow(G(f.atom(i), g.atom(j)), f.order()));
    return s.value();
}

}  // namespace chaoslab
