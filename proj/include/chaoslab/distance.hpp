#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "chaoslab/common.hpp"

namespace chaoslab {

/// n draws of a d-dimensional statistic, row-major.
class EmpiricalSample {
public:
    EmpiricalSample(std::size_t n, std::size_t d, std::vector<double> values)
        : n_(n), d_(d), values_(std::move(values)) {
        if (n_ < 2) throw std::invalid_argument("EmpiricalSample: need n >= 2");
        if (d_ < 1) throw std::invalid_argument("EmpiricalSample: need d >= 1");
        if (values_.size() != n_ * d_) throw std::invalid_argument("EmpiricalSample: values size != n*d");
        for (double v : values_)
            if (!std::isfinite(v)) throw std::invalid_argument("EmpiricalSample: non-finite entry");
    }
    static EmpiricalSample column(std::vector<double> v) {
        const std::size_t n = v.size();
        return EmpiricalSample(n, 1, std::move(v));
    }

    std::size_t n() const { return n_; }
    std::size_t d() const { return d_; }
    double operator()(std::size_t i, std::size_t j) const { return values_[i * d_ + j]; }
    const std::vector<double>& values() const { return values_; }

    /// Rows [begin, end).
    EmpiricalSample rows(std::size_t begin, std::size_t end) const {
        return EmpiricalSample(end - begin, d_,
                               std::vector<double>(values_.begin() + begin * d_, values_.begin() + end * d_));
    }
    std::vector<double> project(const std::vector<double>& dir) const {
        std::vector<double> out(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < d_; ++j) s += dir[j] * values_[i * d_ + j];
            out[i] = s;
        }
        return out;
    }

private:
    std::size_t n_, d_;
    std::vector<double> values_;
};

namespace detail {

/// ∫_0^1 |F⁻¹(u) − G⁻¹(u)| du for empirical quantile functions of sorted samples (any sizes).
inline double quantile_l1(const std::vector<double>& a, const std::vector<double>& b) {
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double u = 0.0;
    CompensatedSum s;
    while (i < a.size() && j < b.size()) {
        const double ua = (i + 1) / na, ub = (j + 1) / nb;
        const double next = std::min(ua, ub);
        s.add((next - u) * std::abs(a[i] - b[j]));
        u = next;
        if (ua <= next) ++i;
        if (ub <= next) ++j;
    }
    return s.value();
}

}  // namespace detail

/// Empirical W₁ on the line: L¹ distance between quantile functions.
/// Unequal sizes require allow_unequal, in which case the quantile functions are compared exactly.
inline double w1_1d(std::vector<double> a, std::vector<double> b, bool allow_unequal = false) {
    if (a.empty() || b.empty()) throw std::invalid_argument("w1_1d: empty sample");
    if (a.size() != b.size() && !allow_unequal) throw std::invalid_argument("w1_1d: sample sizes differ");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a.size() == b.size()) {
        CompensatedSum s;
        for (std::size_t i = 0; i < a.size(); ++i) s.add(std::abs(a[i] - b[i]));
        return s.value() / static_cast<double>(a.size());
    }
    return detail::quantile_l1(a, b);
}

inline double w1_1d(const EmpiricalSample& a, const EmpiricalSample& b, bool allow_unequal = false) {
    if (a.d() != 1 || b.d() != 1) throw std::invalid_argument("w1_1d: samples must be one-dimensional");
    return w1_1d(a.values(), b.values(), allow_unequal);
}

enum class SliceMode { Random, Axis };

/// Unit directions: uniform on the sphere (Random) or the ±coordinate axes cycled (Axis).
inline std::vector<std::vector<double>> slice_directions(std::size_t d, int projections, std::uint64_t seed,
                                                         SliceMode mode) {
    if (projections < 1) throw std::invalid_argument("slice_directions: projections must be >= 1");
    std::vector<std::vector<double>> dirs;
    for (int k = 0; k < projections; ++k) {
        std::vector<double> v(d, 0.0);
        if (mode == SliceMode::Axis) {
            v[k % d] = 1.0;
        } else {
            auto rng = make_stream(seed, static_cast<std::uint64_t>(k));
            double nrm = 0.0;
            while (nrm == 0.0) {
                nrm = 0.0;
                for (double& x : v) {
                    x = standard_normal(rng);
                    nrm += x * x;
                }
            }
            nrm = std::sqrt(nrm);
            for (double& x : v) x /= nrm;
        }
        dirs.push_back(std::move(v));
    }
    return dirs;
}

/// Sliced W₁: mean of one-dimensional W₁ over projection directions.
inline double w1_sliced(const EmpiricalSample& a, const EmpiricalSample& b, int projections, std::uint64_t seed,
                        SliceMode mode = SliceMode::Random) {
    if (a.d() != b.d()) throw std::invalid_argument("w1_sliced: dimension mismatch");
    const auto dirs = slice_directions(a.d(), projections, seed, mode);
    std::vector<double> dist(dirs.size());
    parallel_for(dirs.size(), [&](std::size_t k) { dist[k] = w1_1d(a.project(dirs[k]), b.project(dirs[k]), true); });
    CompensatedSum s;
    for (double v : dist) s.add(v);
    return s.value() / static_cast<double>(dirs.size());
}

struct GapReport {
    double gap;
    double baseline;
    std::uint64_t permutation_seed;
};

/// Each column rescaled to zero mean and unit variance using the pooled sample; constant columns are only centred.
inline EmpiricalSample standardize_columns(const EmpiricalSample& x) {
    const std::size_t n = x.n(), d = x.d();
    std::vector<double> out(n * d);
    for (std::size_t j = 0; j < d; ++j) {
        double mean = 0.0, var = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += x(i, j);
        mean /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) var += (x(i, j) - mean) * (x(i, j) - mean);
        const double sd = std::sqrt(var / static_cast<double>(n));
        const double scale = sd > 0.0 ? 1.0 / sd : 1.0;
        for (std::size_t i = 0; i < n; ++i) out[i * d + j] = (x(i, j) - mean) * scale;
    }
    return EmpiricalSample(n, d, std::move(out));
}

/// Joint law versus product law. The first half of the rows is the joint sample; the second half,
/// with columns [split, d) permuted across rows, is the product-law sample. The baseline compares the
/// two halves unpermuted, i.e. two independent draws of the joint law under the same estimator.
/// Columns are standardised first so that no coordinate dominates the random projections; both the
/// gap and the baseline are then invariant under per-coordinate affine rescaling.
inline GapReport independence_gap(const EmpiricalSample& raw, std::size_t split, int projections,
                                  std::uint64_t seed) {
    if (raw.n() % 2 != 0) throw std::invalid_argument("independence_gap: n must be even");
    if (split < 1 || split >= raw.d()) throw std::invalid_argument("independence_gap: split must be in [1, d)");
    const EmpiricalSample joint = standardize_columns(raw);
    const std::size_t half = joint.n() / 2, d = joint.d();
    const EmpiricalSample first = joint.rows(0, half), second = joint.rows(half, joint.n());
    std::vector<std::size_t> perm(half);
    std::iota(perm.begin(), perm.end(), 0);
    auto rng = make_stream(seed, 0xfeedull);
    for (std::size_t i = half - 1; i > 0; --i) std::swap(perm[i], perm[rng() % (i + 1)]);
    std::vector<double> product(half * d);
    for (std::size_t i = 0; i < half; ++i)
        for (std::size_t j = 0; j < d; ++j) product[i * d + j] = j < split ? second(i, j) : second(perm[i], j);
    const EmpiricalSample prod(half, d, std::move(product));
    return {w1_sliced(first, prod, projections, seed), w1_sliced(first, second, projections, seed), seed};
}

}  // namespace chaoslab
