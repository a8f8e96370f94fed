#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/bernoulli.hpp>

#include <complex>
#include <stdexcept>
#include <vector>

#include "chaoslab/common.hpp"
#include "chaoslab/gram.hpp"
#include "chaoslab/toeplitz.hpp"

namespace chaoslab {

inline void require_hurst(double H) {
    if (!(H > 0.0 && H < 1.0)) throw std::invalid_argument("Hurst index must lie in (0,1)");
}

/// Autocorrelation of unit-step fractional Gaussian noise: ½(|v+1|^{2H} + |v−1|^{2H} − 2|v|^{2H}).
inline double rho(double H, long v) {
    require_hurst(H);
    const double a = std::abs(static_cast<double>(v));
    if (a == 0.0) return 1.0;
    const double h2 = 2.0 * H;
    if (a < 64.0) return 0.5 * (std::pow(a + 1.0, h2) + std::pow(a - 1.0, h2) - 2.0 * std::pow(a, h2));
    // Second difference written with expm1/log1p to avoid cancellation at large lags.
    const double up = std::expm1(h2 * std::log1p(1.0 / a));
    const double dn = std::expm1(h2 * std::log1p(-1.0 / a));
    return 0.5 * std::pow(a, h2) * (up + dn);
}

/// Row-major count × n matrix of sample paths.
struct PathMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }
};

/// Stream ids used by the samplers; replicas use stream base + row.
inline constexpr std::uint64_t kFgnStream = 0x100000000ull;
inline constexpr std::uint64_t kCorrelatedStream = 0x200000000ull;

/// Exact fGn paths with covariance ρ_H(k−l). Circulant embedding when the embedding spectrum is
/// nonnegative (eigenvalues down to −1e−10 are treated as zero), Cholesky otherwise.
inline PathMatrix sample_fgn(double H, int N, std::size_t count, std::uint64_t seed, unsigned workers = 0) {
    require_hurst(H);
    if (N < 1) throw std::invalid_argument("sample_fgn: N must be >= 1");
    PathMatrix out{count, static_cast<std::size_t>(N), std::vector<double>(count * N)};
    const int M = 2 * N;
    std::vector<std::complex<double>> c(M), lambda(M);
    for (int k = 0; k <= N; ++k) c[k] = rho(H, k);
    for (int k = 1; k < N; ++k) c[M - k] = rho(H, k);
    Eigen::FFT<double> fft;
    fft.fwd(lambda, c);
    double min_eig = 0.0;
    for (auto& l : lambda) min_eig = std::min(min_eig, l.real());

    if (min_eig >= -1e-10) {
        std::vector<double> root(M);
        for (int k = 0; k < M; ++k) root[k] = std::sqrt(std::max(0.0, lambda[k].real()) / M);
        parallel_for(count, [&](std::size_t r) {
            auto rng = make_stream(seed, kFgnStream + r);
            std::vector<std::complex<double>> w(M), y(M);
            for (int k = 0; k < M; ++k) {
                const double a = standard_normal(rng), b = standard_normal(rng);
                w[k] = root[k] * std::complex<double>(a, b);
            }
            Eigen::FFT<double> local;
            local.fwd(y, w);
            for (int k = 0; k < N; ++k) out.row(r)[k] = y[k].real();
        }, workers);
        return out;
    }

    Eigen::MatrixXd cov(N, N);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) cov(i, j) = rho(H, i - j);
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("sample_fgn: circulant embedding and Cholesky both failed");
    const Eigen::MatrixXd L = llt.matrixL();
    parallel_for(count, [&](std::size_t r) {
        auto rng = make_stream(seed, kFgnStream + r);
        Eigen::VectorXd z(N);
        for (int k = 0; k < N; ++k) z(k) = standard_normal(rng);
        Eigen::VectorXd x = L * z;
        for (int k = 0; k < N; ++k) out.row(r)[k] = x(k);
    }, workers);
    return out;
}

// ---------------------------------------------------------------------------------------------
// Moving-average representation B_t = d(H)∫((t−s)₊^α − (−s)₊^α) dW_s, α = H − ½.
// The unit increment L_k has kernel d(H)·ψ(k+1−s) with ψ(x) = x₊^α − (x−1)₊^α.

namespace detail {

inline double ma_psi(double alpha, double x) {
    if (x <= 0.0) return 0.0;
    if (x <= 1.0) return std::pow(x, alpha);
    if (x < 2.0) return std::pow(x, alpha) - std::pow(x - 1.0, alpha);
    return -std::pow(x, alpha) * std::expm1(alpha * std::log1p(-1.0 / x));
}

/// ∫_0^x ψ.
inline double ma_psi_antiderivative(double alpha, double x) {
    const double b = alpha + 1.0;
    if (x <= 0.0) return 0.0;
    if (x <= 1.0) return std::pow(x, b) / b;
    if (x < 2.0) return (std::pow(x, b) - std::pow(x - 1.0, b)) / b;
    return -std::pow(x, b) * std::expm1(b * std::log1p(-1.0 / x)) / b;
}

/// Average of ψ over [a, b].
inline double ma_psi_average(double alpha, double a, double b) {
    return (ma_psi_antiderivative(alpha, b) - ma_psi_antiderivative(alpha, a)) / (b - a);
}

/// ψ(n + t) for integer n ≥ 0 and t ∈ (0, 1], with t passed exactly so the kink at n = 1 keeps precision.
inline double ma_psi_offset(double alpha, long n, double t) {
    if (n == 0) return std::pow(t, alpha);
    if (n == 1) return std::pow(1.0 + t, alpha) - std::pow(t, alpha);
    return ma_psi(alpha, static_cast<double>(n) + t);
}

/// ∫_0^1 f with endpoint singularities allowed.
template <class F>
double integrate_unit(F&& f) {
    boost::math::quadrature::tanh_sinh<double> ts;
    return ts.integrate(f, 0.0, 1.0);
}

/// ∫_0^∞ f for smooth, integrable f.
template <class F>
double integrate_half_line(F&& f) {
    boost::math::quadrature::exp_sinh<double> es;
    return es.integrate(f);
}

}  // namespace detail

/// d(H) such that Var B_1 = 1: d^{−2} = ∫_0^∞ ψ(1+u)² du + 1/(2H).
inline double moving_average_constant(double H) {
    require_hurst(H);
    const double alpha = H - 0.5;
    const double head = detail::integrate_unit([alpha](double t) {
        const double v = detail::ma_psi_offset(alpha, 1, t);
        return v * v;
    });
    const double tail = detail::integrate_half_line([alpha](double u) {
        const double v = detail::ma_psi(alpha, 2.0 + u);
        return v * v;
    });
    return 1.0 / std::sqrt(head + tail + 1.0 / (2.0 * H));
}

/// ⟨L_{k,Hi}, L_{l,Hj}⟩ at lag v = k − l for increments driven by the same white noise, by quadrature.
inline double cross_increment_covariance_quadrature(double Hi, double Hj, long v) {
    const double ai = Hi - 0.5, aj = Hj - 0.5;
    const double di = moving_average_constant(Hi), dj = moving_average_constant(Hj);
    // ∫ ψ_i(x + v) ψ_j(x) dx over x > lo = max(0, −v). Every kink is an integer, so unit pieces carry
    // the exact offset; past lo + 2 both arguments exceed 2 and the integrand is smooth.
    const long lo = std::max(0L, -v);
    double s = 0.0;
    for (long m = lo; m < lo + 2; ++m)
        s += detail::integrate_unit([&](double t) {
            return detail::ma_psi_offset(ai, m + v, t) * detail::ma_psi_offset(aj, m, t);
        });
    const double x0 = static_cast<double>(lo + 2);
    s += detail::integrate_half_line([&](double u) {
        return detail::ma_psi(ai, x0 + u + v) * detail::ma_psi(aj, x0 + u);
    });
    return di * dj * s;
}

/// Cross-covariance of two increment families sharing one white noise.
/// It has the form ½(w(v+1) + w(v−1) − 2w(v)) with w(x) = (A + B·sign x)|x|^{Hi+Hj}, so it equals
/// (A+B)·ρ_{H̄}(v) for v > 0, (A−B)·ρ_{H̄}(v) for v < 0 and A at v = 0, H̄ = (Hi+Hj)/2.
/// A and B are fitted from lags 0 and ±1 by quadrature.
class CrossCovariance {
public:
    CrossCovariance(double Hi, double Hj) : Hi_(Hi), Hj_(Hj), Hbar_(0.5 * (Hi + Hj)) {
        require_hurst(Hi);
        require_hurst(Hj);
        if (Hi == Hj) {
            A_ = 1.0;
            return;
        }
        A_ = cross_increment_covariance_quadrature(Hi, Hj, 0);
        const double denom = std::pow(2.0, 2.0 * Hbar_) - 2.0;
        if (std::abs(denom) > 1e-12)
            B_ = (cross_increment_covariance_quadrature(Hi, Hj, 1) -
                  cross_increment_covariance_quadrature(Hi, Hj, -1)) / denom;
    }

    double operator()(long v) const {
        if (v == 0) return A_;
        return (v > 0 ? A_ + B_ : A_ - B_) * rho(Hbar_, v);
    }
    double lag_zero() const { return A_; }
    double positive_side() const { return A_ + B_; }
    double negative_side() const { return A_ - B_; }

private:
    double Hi_, Hj_, Hbar_;
    double A_ = 1.0;
    double B_ = 0.0;
};

/// fGn autocorrelation plus cross-covariances among a set of Hurst indices sharing one noise.
class CovarianceModel {
public:
    explicit CovarianceModel(std::vector<double> Hs) : Hs_(std::move(Hs)) {
        if (Hs_.empty()) throw std::invalid_argument("CovarianceModel: need at least one Hurst index");
        for (double h : Hs_) require_hurst(h);
        for (std::size_t i = 0; i < Hs_.size(); ++i)
            for (std::size_t j = 0; j < Hs_.size(); ++j) cross_.emplace_back(Hs_[i], Hs_[j]);
    }

    std::size_t families() const { return Hs_.size(); }
    double hurst(std::size_t i) const { return Hs_.at(i); }
    /// ⟨L_{k,Hi}, L_{l,Hj}⟩ with v = k − l.
    double covariance(std::size_t i, std::size_t j, long v) const {
        if (i == j) return rho(Hs_[i], v);
        return cross_[i * Hs_.size() + j](v);
    }
    /// Lag-zero cross constant D(Hi, Hj).
    double D(std::size_t i, std::size_t j) const { return i == j ? 1.0 : cross_[i * Hs_.size() + j].lag_zero(); }
    const CrossCovariance& cross(std::size_t i, std::size_t j) const { return cross_[i * Hs_.size() + j]; }

    GramPtr increment_gram(int N) const {
        const int F = static_cast<int>(Hs_.size());
        std::vector<Toeplitz> blocks;
        for (int i = 0; i < F; ++i)
            for (int j = 0; j < F; ++j)
                blocks.push_back(Toeplitz::from_function(N, [&](long v) { return covariance(i, j, v); }));
        return GramMatrix::block_toeplitz(F, std::move(blocks));
    }

private:
    std::vector<double> Hs_;
    std::vector<CrossCovariance> cross_;
};

/// Toeplitz Gram ρ_H(k−l) of N unit increments.
inline GramPtr increment_gram(double H, int N) {
    require_hurst(H);
    if (N < 1) throw std::invalid_argument("increment_gram: N must be >= 1");
    return GramMatrix::toeplitz(Toeplitz::from_function(N, [H](long v) { return rho(H, v); }));
}

/// f_N = N^{−1/2} Σ_k h_k^{⊗p} on the given increment family.
inline RankOneSum breuer_major_kernel(const GramPtr& gram, int family, int p) {
    if (p < 1) throw std::invalid_argument("breuer_major_kernel: p must be >= 1");
    return RankOneSum::uniform_family(gram, family, p, 1.0 / std::sqrt(static_cast<double>(gram->family_size())));
}
inline RankOneSum breuer_major_kernel(double H, int N, int p) { return breuer_major_kernel(increment_gram(H, N), 0, p); }

/// g_N = N^{q(1−H)−1} Σ_k h_k^{⊗q}.
inline RankOneSum hermite_variation_kernel(const GramPtr& gram, int family, double H, int q) {
    if (q < 1) throw std::invalid_argument("hermite_variation_kernel: q must be >= 1");
    const double N = gram->family_size();
    return RankOneSum::uniform_family(gram, family, q, std::pow(N, q * (1.0 - H) - 1.0));
}
inline RankOneSum hermite_variation_kernel(double H, int N, int q) {
    return hermite_variation_kernel(increment_gram(H, N), 0, H, q);
}

struct CertifiedValue {
    double value;
    double error;
};

namespace detail {

/// Σ_{v>V} v^s for s < −1 by Euler–Maclaurin at V.
inline CertifiedValue power_tail(double s, long V) {
    const double x = static_cast<double>(V);
    double sum = -std::pow(x, s + 1.0) / (s + 1.0) + 0.5 * std::pow(x, s) - std::pow(x, s);
    double falling = s, last = 0.0;  // s(s−1)…(s−m+1)
    for (int k = 1; k <= 6; ++k) {
        const int m = 2 * k - 1;
        if (k > 1) falling *= (s - m + 2) * (s - m + 1);
        last = boost::math::bernoulli_b2n<double>(k) / factorial(2 * k) * falling * std::pow(x, s - m);
        sum -= last;
    }
    return {sum, std::abs(last)};
}

}  // namespace detail

/// σ²_{p,H} = p!·Σ_{v∈ℤ} ρ_H(v)^p. Lags beyond V use the binomial expansion
/// ρ(v) = v^{2H} Σ_{k≥1} C(2H,2k) v^{−2k} raised to the p-th power and summed term-wise.
inline CertifiedValue breuer_major_sigma2(int p, double H, long V = 2000) {
    require_hurst(H);
    if (p < 1) throw std::invalid_argument("breuer_major_sigma2: p must be >= 1");
    if (!(H < 1.0 - 1.0 / (2.0 * p))) throw std::domain_error("breuer_major_sigma2: H outside the Breuer-Major regime");
    CompensatedSum head;
    for (long v = 1; v <= V; ++v) head.add(ipow(rho(H, v), p));

    constexpr int J = 10;
    auto gbinom = [](double a, int n) {
        double r = 1.0;
        for (int i = 0; i < n; ++i) r *= (a - i) / (i + 1);
        return r;
    };
    std::vector<double> u(J + 1), b(J + 1, 0.0);
    for (int m = 0; m <= J; ++m) u[m] = gbinom(2.0 * H, 2 * m + 2);
    b[0] = 1.0;
    for (int k = 0; k < p; ++k) {
        std::vector<double> nb(J + 1, 0.0);
        for (int i = 0; i <= J; ++i)
            for (int j = 0; i + j <= J; ++j) nb[i + j] += b[i] * u[j];
        b = nb;
    }
    CompensatedSum tail;
    double err = 0.0;
    for (int j = 0; j <= J; ++j) {
        const auto t = detail::power_tail((2.0 * H - 2.0) * p - 2.0 * j, V);
        tail.add(b[j] * t.value);
        err += std::abs(b[j]) * t.error;
        if (j == J) err += std::abs(b[j] * t.value);
    }
    const double pf = factorial(p);
    const double value = pf * (1.0 + 2.0 * (head.value() + tail.value()));
    err = 2.0 * pf * err + 4.0 * V * 1e-16 * pf;
    if (err > 1e-8) throw ConvergenceError("breuer_major_sigma2: tail not certified to 1e-8", err);
    return {value, err};
}

/// Correlated fGn families driven by one discretised white noise.
/// Fine cells of width 1/subdivisions cover [−T_fine, N]; cells on (−T_cut, −T_fine) grow geometrically.
/// Each increment kernel is replaced by its cell averages, the L² projection onto cell-constant functions.
class CorrelatedFgnSampler {
public:
    struct Options {
        int subdivisions = 64;
        double fine_past = 8.0;
        double coarse_ratio = 1.2;
        double neglected_mass = 1e-4;
        double variance_tolerance = 0.01;
    };

    CorrelatedFgnSampler(std::vector<double> Hs, int N) : CorrelatedFgnSampler(std::move(Hs), N, Options{}) {}

    CorrelatedFgnSampler(std::vector<double> Hs, int N, Options opt) : Hs_(std::move(Hs)), N_(N), opt_(opt) {
        if (N < 1) throw std::invalid_argument("CorrelatedFgnSampler: N must be >= 1");
        if (Hs_.empty()) throw std::invalid_argument("CorrelatedFgnSampler: need at least one Hurst index");
        const double delta = 1.0 / opt_.subdivisions;
        fine_cells_ = static_cast<std::size_t>(std::llround((N_ + opt_.fine_past) * opt_.subdivisions));
        std::size_t L = 1;
        while (L < 2 * fine_cells_ + 2) L *= 2;
        fft_size_ = L;

        double t_cut = opt_.fine_past;
        for (double H : Hs_) {
            require_hurst(H);
            d_.push_back(moving_average_constant(H));
            const double a = H - 0.5;
            if (a != 0.0) {
                const double c = d_.back() * d_.back() * a * a / (2.0 - 2.0 * H);
                t_cut = std::max(t_cut, std::pow(opt_.neglected_mass / c, 1.0 / (2.0 * H - 2.0)));
            }
        }
        for (double b = opt_.fine_past; b < t_cut;) {
            const double nb = std::min(t_cut, b * opt_.coarse_ratio);
            coarse_.push_back({b, nb});
            b = nb;
        }

        Eigen::FFT<double> fft;
        for (std::size_t f = 0; f < Hs_.size(); ++f) {
            const double alpha = Hs_[f] - 0.5;
            std::vector<std::complex<double>> kern(fft_size_, 0.0), spec;
            // kern[J] = d·√δ·(average of ψ over ((J−1)δ, Jδ]).
            for (std::size_t J = 1; J <= fine_cells_; ++J)
                kern[J] = d_[f] * std::sqrt(delta) * detail::ma_psi_average(alpha, (J - 1.0) * delta, J * delta);
            fft.fwd(spec, kern);
            kernel_spec_.push_back(std::move(spec));
            // coarse_w[f][k][c]: weight of coarse noise c in increment k.
            std::vector<double> w(static_cast<std::size_t>(N_) * coarse_.size());
            for (int k = 0; k < N_; ++k)
                for (std::size_t c = 0; c < coarse_.size(); ++c) {
                    const auto [lo, hi] = coarse_[c];
                    w[k * coarse_.size() + c] = d_[f] * std::sqrt(hi - lo) *
                                                detail::ma_psi_average(alpha, k + 1.0 + lo, k + 1.0 + hi);
                }
            coarse_weight_.push_back(std::move(w));
        }
        for (std::size_t f = 0; f < Hs_.size(); ++f)
            for (int k : {0, N_ - 1}) {
                const double v = discretized_covariance(f, f, k, k);
                if (std::abs(v - 1.0) > opt_.variance_tolerance)
                    throw std::runtime_error("CorrelatedFgnSampler: grid too coarse for the marginal-variance tolerance");
            }
    }

    std::size_t families() const { return Hs_.size(); }
    int length() const { return N_; }
    double truncation() const { return coarse_.empty() ? opt_.fine_past : coarse_.back().second; }

    /// Exact covariance of the discretised increments L_{k,Hi} and L_{l,Hj}.
    double discretized_covariance(std::size_t fi, std::size_t fj, int k, int l) const {
        const double delta = 1.0 / opt_.subdivisions;
        const double ai = Hs_[fi] - 0.5, aj = Hs_[fj] - 0.5;
        CompensatedSum s;
        // Fine cell m covers s ∈ [−T_f + mδ, −T_f + (m+1)δ); its lag index for increment k is (k+1+T_f)/δ − m.
        const long base_k = std::lround((k + 1 + opt_.fine_past) * opt_.subdivisions);
        const long base_l = std::lround((l + 1 + opt_.fine_past) * opt_.subdivisions);
        for (long m = 0; m < static_cast<long>(fine_cells_); ++m) {
            const long Jk = base_k - m, Jl = base_l - m;
            if (Jk < 1 || Jl < 1) continue;
            s.add(delta * detail::ma_psi_average(ai, (Jk - 1) * delta, Jk * delta) *
                  detail::ma_psi_average(aj, (Jl - 1) * delta, Jl * delta));
        }
        for (const auto& [lo, hi] : coarse_)
            s.add((hi - lo) * detail::ma_psi_average(ai, k + 1.0 + lo, k + 1.0 + hi) *
                  detail::ma_psi_average(aj, l + 1.0 + lo, l + 1.0 + hi));
        return d_[fi] * d_[fj] * s.value();
    }

    /// One PathMatrix per family; row r uses noise stream (seed, r).
    std::vector<PathMatrix> sample(std::size_t count, std::uint64_t seed, unsigned workers = 0) const {
        const std::size_t F = Hs_.size();
        std::vector<PathMatrix> out(F, PathMatrix{count, static_cast<std::size_t>(N_), {}});
        for (auto& pm : out) pm.data.assign(count * N_, 0.0);
        const std::size_t C = coarse_.size();
        parallel_for(count, [&](std::size_t r) {
            auto rng = make_stream(seed, kCorrelatedStream + r);
            std::vector<std::complex<double>> z(fft_size_, 0.0), zs, prod(fft_size_), conv;
            for (std::size_t m = 0; m < fine_cells_; ++m) z[m] = standard_normal(rng);
            std::vector<double> zc(C);
            for (auto& v : zc) v = standard_normal(rng);
            Eigen::FFT<double> fft;
            fft.fwd(zs, z);
            for (std::size_t f = 0; f < F; ++f) {
                for (std::size_t i = 0; i < fft_size_; ++i) prod[i] = zs[i] * kernel_spec_[f][i];
                fft.inv(conv, prod);
                double* row = out[f].row(r);
                for (int k = 0; k < N_; ++k) {
                    const std::size_t idx = static_cast<std::size_t>(std::lround((k + 1 + opt_.fine_past) * opt_.subdivisions));
                    double v = conv[idx].real();
                    const double* w = coarse_weight_[f].data() + k * C;
                    for (std::size_t c = 0; c < C; ++c) v += w[c] * zc[c];
                    row[k] = v;
                }
            }
        }, workers);
        return out;
    }

private:
    std::vector<double> Hs_;
    int N_;
    Options opt_;
    std::vector<double> d_;
    std::size_t fine_cells_ = 0;
    std::size_t fft_size_ = 0;
    std::vector<std::pair<double, double>> coarse_;
    std::vector<std::vector<std::complex<double>>> kernel_spec_;
    std::vector<std::vector<double>> coarse_weight_;
};

/// Convenience wrapper: paths of every family in Hs from one shared noise.
inline std::vector<PathMatrix> sample_correlated_fgn(const std::vector<double>& Hs, int N, std::size_t count,
                                                     std::uint64_t seed, unsigned workers = 0) {
    return CorrelatedFgnSampler(Hs, N).sample(count, seed, workers);
}

}  // namespace chaoslab
