#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "chaoslab/common.hpp"

namespace chaoslab {

/// Index bookkeeping for order-p tensors over m coordinates.
/// Canonical tuples are the sorted ones; every full tuple maps to exactly one of them.
class SymLayout {
public:
    static std::shared_ptr<const SymLayout> get(int dim, int order) {
        static std::mutex mu;
        static std::map<std::pair<int, int>, std::shared_ptr<const SymLayout>> cache;
        std::lock_guard<std::mutex> lock(mu);
        auto& slot = cache[{dim, order}];
        if (!slot) slot = std::shared_ptr<const SymLayout>(new SymLayout(dim, order));
        return slot;
    }

    int dim() const { return dim_; }
    int order() const { return order_; }
    std::size_t full_size() const { return full_size_; }
    std::size_t canonical_size() const { return multiplicity_.size(); }

    std::span<const int> tuple(std::size_t c) const {
        return {tuples_.data() + c * order_, static_cast<std::size_t>(order_)};
    }
    /// Number of distinct arrangements of canonical tuple c.
    double multiplicity(std::size_t c) const { return multiplicity_[c]; }
    /// (coordinate, count) pairs of canonical tuple c.
    std::span<const std::pair<int, int>> counts(std::size_t c) const {
        return {counts_.data() + counts_offset_[c], counts_offset_[c + 1] - counts_offset_[c]};
    }
    std::size_t canonical_of_full(std::size_t flat) const { return full_to_canonical_[flat]; }

    std::size_t flat_index(std::span<const int> t) const {
        std::size_t flat = 0;
        for (int v : t) {
            if (v < 0 || v >= dim_) throw std::out_of_range("tensor index out of range");
            flat = flat * dim_ + static_cast<std::size_t>(v);
        }
        return flat;
    }

private:
    SymLayout(int dim, int order) : dim_(dim), order_(order) {
        if (dim < 1 || order < 0) throw std::invalid_argument("SymLayout: need dim >= 1, order >= 0");
        double size = std::pow(static_cast<double>(dim), order);
        if (size > static_cast<double>(1u << 27)) throw std::length_error("SymLayout: dim^order too large");
        full_size_ = static_cast<std::size_t>(size);
        full_to_canonical_.assign(full_size_, 0);
        std::vector<std::uint32_t> position(full_size_, UINT32_MAX);
        std::vector<int> digits(order_);
        counts_offset_.push_back(0);
        std::size_t next = 0;
        for (std::size_t flat = 0; flat < full_size_; ++flat) {
            decode(flat, digits);
            if (!std::is_sorted(digits.begin(), digits.end())) continue;
            position[flat] = static_cast<std::uint32_t>(next++);
            tuples_.insert(tuples_.end(), digits.begin(), digits.end());
            double mult = factorial(order_);
            for (int i = 0; i < order_;) {
                int j = i;
                while (j < order_ && digits[j] == digits[i]) ++j;
                mult /= factorial(j - i);
                counts_.emplace_back(digits[i], j - i);
                i = j;
            }
            multiplicity_.push_back(mult);
            counts_offset_.push_back(counts_.size());
        }
        for (std::size_t flat = 0; flat < full_size_; ++flat) {
            decode(flat, digits);
            std::sort(digits.begin(), digits.end());
            full_to_canonical_[flat] = position[flat_index(digits)];
        }
    }

    void decode(std::size_t flat, std::vector<int>& digits) const {
        for (int k = order_ - 1; k >= 0; --k) {
            digits[k] = static_cast<int>(flat % dim_);
            flat /= dim_;
        }
    }

    int dim_;
    int order_;
    std::size_t full_size_ = 1;
    std::vector<int> tuples_;
    std::vector<double> multiplicity_;
    std::vector<std::pair<int, int>> counts_;
    std::vector<std::size_t> counts_offset_;
    std::vector<std::uint32_t> full_to_canonical_;
};

/// Order-p tensor over R^m stored on all m^p index tuples (row-major, first index slowest).
class DenseTensor {
public:
    DenseTensor(int dim, int order)
        : dim_(dim), order_(order), data_(SymLayout::get(dim, order)->full_size(), 0.0) {}
    DenseTensor(int dim, int order, std::vector<double> data) : dim_(dim), order_(order), data_(std::move(data)) {
        if (data_.size() != SymLayout::get(dim, order)->full_size())
            throw std::invalid_argument("DenseTensor: data size does not match dim^order");
    }

    int dim() const { return dim_; }
    int order() const { return order_; }
    std::size_t size() const { return data_.size(); }
    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }
    double operator[](std::size_t flat) const { return data_[flat]; }
    double& operator[](std::size_t flat) { return data_[flat]; }
    double at(std::span<const int> t) const { return data_[checked_flat(t)]; }
    double& at(std::span<const int> t) { return data_[checked_flat(t)]; }

private:
    std::size_t checked_flat(std::span<const int> t) const {
        if (static_cast<int>(t.size()) != order_) throw std::invalid_argument("DenseTensor: wrong tuple length");
        return SymLayout::get(dim_, order_)->flat_index(t);
    }

    int dim_;
    int order_;
    std::vector<double> data_;
};

/// Symmetric order-p tensor stored on sorted multi-indices.
class DenseSymTensor {
public:
    DenseSymTensor(int dim, int order)
        : layout_(SymLayout::get(dim, order)), coeffs_(layout_->canonical_size(), 0.0) {}

    static DenseSymTensor scalar(int dim, double value) {
        DenseSymTensor t(dim, 0);
        t.coeffs_[0] = value;
        return t;
    }

    /// h^{⊗p}.
    static DenseSymTensor rank_one(std::span<const double> h, int order) {
        DenseSymTensor t(static_cast<int>(h.size()), order);
        for (std::size_t c = 0; c < t.coeffs_.size(); ++c) {
            double v = 1.0;
            for (int i : t.layout_->tuple(c)) v *= h[i];
            t.coeffs_[c] = v;
        }
        return t;
    }

    int dim() const { return layout_->dim(); }
    int order() const { return layout_->order(); }
    const SymLayout& layout() const { return *layout_; }
    std::size_t canonical_size() const { return coeffs_.size(); }
    double coeff(std::size_t c) const { return coeffs_[c]; }
    double& coeff(std::size_t c) { return coeffs_[c]; }

    double at(std::span<const int> t) const { return coeffs_[canonical(t)]; }
    void set(std::span<const int> t, double v) { coeffs_[canonical(t)] = v; }

    DenseTensor to_dense() const {
        DenseTensor out(dim(), order());
        for (std::size_t flat = 0; flat < out.size(); ++flat) out[flat] = coeffs_[layout_->canonical_of_full(flat)];
        return out;
    }

    double norm_squared() const {
        double s = 0.0;
        for (std::size_t c = 0; c < coeffs_.size(); ++c) s += layout_->multiplicity(c) * coeffs_[c] * coeffs_[c];
        return s;
    }

    DenseSymTensor& operator+=(const DenseSymTensor& o) {
        check_same(o);
        for (std::size_t c = 0; c < coeffs_.size(); ++c) coeffs_[c] += o.coeffs_[c];
        return *this;
    }
    DenseSymTensor& operator*=(double s) {
        for (double& v : coeffs_) v *= s;
        return *this;
    }
    friend DenseSymTensor operator+(DenseSymTensor a, const DenseSymTensor& b) { return a += b; }
    friend DenseSymTensor operator*(double s, DenseSymTensor a) { return a *= s; }

    void check_same(const DenseSymTensor& o) const {
        if (dim() != o.dim() || order() != o.order()) throw std::invalid_argument("DenseSymTensor: shape mismatch");
    }

private:
    friend DenseSymTensor symmetrize(const DenseTensor& f);

    std::size_t canonical(std::span<const int> t) const {
        if (static_cast<int>(t.size()) != order()) throw std::invalid_argument("DenseSymTensor: wrong tuple length");
        return layout_->canonical_of_full(layout_->flat_index(t));
    }

    std::shared_ptr<const SymLayout> layout_;
    std::vector<double> coeffs_;
};

/// Average over all permutations of the index positions.
inline DenseSymTensor symmetrize(const DenseTensor& f) {
    DenseSymTensor out(f.dim(), f.order());
    const SymLayout& lay = out.layout();
    // Every arrangement of a multiset is hit p!/mult times by S_p, so the
    // permutation average equals the plain average over its arrangements.
    for (std::size_t flat = 0; flat < f.size(); ++flat) out.coeffs_[lay.canonical_of_full(flat)] += f[flat];
    for (std::size_t c = 0; c < out.coeffs_.size(); ++c) out.coeffs_[c] /= lay.multiplicity(c);
    return out;
}

inline DenseSymTensor symmetrize(const DenseSymTensor& f) { return f; }

/// r-contraction of full tensors: the first r indices of f are paired with the first r of g.
inline DenseTensor contract(const DenseTensor& f, const DenseTensor& g, int r) {
    if (f.dim() != g.dim()) throw std::invalid_argument("contract: dimension mismatch");
    if (r < 0 || r > std::min(f.order(), g.order())) throw std::invalid_argument("contract: r out of range");
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const int m = f.dim();
    const auto shared = static_cast<Eigen::Index>(std::llround(std::pow(m, r)));
    const auto fr = static_cast<Eigen::Index>(f.size() / shared);
    const auto gr = static_cast<Eigen::Index>(g.size() / shared);
    Eigen::Map<const RowMat> F(f.data().data(), shared, fr);
    Eigen::Map<const RowMat> G(g.data().data(), shared, gr);
    DenseTensor out(m, f.order() + g.order() - 2 * r);
    Eigen::Map<RowMat> O(out.data().data(), fr, gr);
    O.noalias() = F.transpose() * G;
    return out;
}

inline DenseTensor contract(const DenseSymTensor& f, const DenseSymTensor& g, int r) {
    if (f.dim() != g.dim()) throw std::invalid_argument("contract: dimension mismatch");
    if (r < 0 || r > std::min(f.order(), g.order())) throw std::invalid_argument("contract: r out of range");
    return contract(f.to_dense(), g.to_dense(), r);
}

inline DenseTensor tensor_product(const DenseSymTensor& f, const DenseSymTensor& g) { return contract(f, g, 0); }

inline double inner(const DenseTensor& f, const DenseTensor& g) {
    if (f.dim() != g.dim() || f.order() != g.order()) throw std::invalid_argument("inner: shape mismatch");
    CompensatedSum s;
    for (std::size_t i = 0; i < f.size(); ++i) s.add(f[i] * g[i]);
    return s.value();
}

inline double inner(const DenseSymTensor& f, const DenseSymTensor& g) {
    f.check_same(g);
    CompensatedSum s;
    for (std::size_t c = 0; c < f.canonical_size(); ++c) s.add(f.layout().multiplicity(c) * f.coeff(c) * g.coeff(c));
    return s.value();
}

inline double norm(const DenseTensor& f) { return std::sqrt(std::max(0.0, inner(f, f))); }
inline double norm(const DenseSymTensor& f) { return std::sqrt(std::max(0.0, f.norm_squared())); }

}  // namespace chaoslab
