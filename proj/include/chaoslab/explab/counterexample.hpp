#pragma once

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "chaoslab/chaos.hpp"
#include "chaoslab/distance.hpp"
#include "chaoslab/fbm.hpp"
#include "chaoslab/explab/experiment.hpp"
#include "chaoslab/explab/joint_clt.hpp"

namespace chaoslab::explab {

/// X_N = I_p(f_N) Breuer–Major; X_N² − E X_N² = Y_N + R_N with Y_N = I_{2p}(f_N ⊗ f_N) and
/// R_N = Σ_{r=1}^{p−1} r!C(p,r)² I_{2p−2r}(f_N ⊗̃_r f_N).
struct CounterexampleParams {
    int p = 2;
    double H = 0.3;
    std::vector<int> Ns{64, 128, 256, 512, 1024, 2048, 4096};
    std::vector<int> mc_Ns{1024};
    std::size_t replicas = 10000;
    int projections = 64;
    double slope_tolerance = 0.15;
    unsigned workers = 0;

    static CounterexampleParams from(const Config& c) {
        c.require_known(with_common_keys({"p", "H", "N", "mc_N", "replicas", "projections"}));
        CounterexampleParams P;
        P.p = static_cast<int>(c.get_int("p", P.p));
        P.H = c.get_double("H", P.H);
        std::vector<long long> ns(P.Ns.begin(), P.Ns.end()), ms(P.mc_Ns.begin(), P.mc_Ns.end());
        P.Ns = validate_schedule(c.get_ints("N", ns), "N", 2);
        P.mc_Ns = validate_schedule(c.get_string("mc_N", "") == "none" ? std::vector<long long>{} : c.get_ints("mc_N", ms),
                                    "mc_N", 2, true);
        P.replicas = static_cast<std::size_t>(c.get_int("replicas", static_cast<long long>(P.replicas)));
        P.projections = static_cast<int>(c.get_int("projections", P.projections));
        P.slope_tolerance = slope_tolerance_of(c);
        P.workers = workers_of(c);
        require(P.p >= 2 && P.p <= 4, "p must lie in [2, 4]");
        require(P.H > 0.0 && P.H < 1.0 - 1.0 / (2.0 * P.p), "H must satisfy 0 < H < 1 - 1/(2p)");
        require(P.replicas >= 4 && P.replicas % 2 == 0, "replicas must be an even number >= 4");
        require(P.projections >= 1, "projections must be >= 1");
        return P;
    }
};

struct CounterexampleMoments {
    std::vector<double> sym_contraction_norm2;  // ‖f ⊗̃_r f‖², r = 0..p−1
    double E_R2, E_Y2, E_X2;
    /// corr(X², Y) = √(E Y² / (E Y² + E R²)) since Y ⟂ R.
    double corr;
};

inline CounterexampleMoments counterexample_exact(int p, double H, int N) {
    const RankOneSum f = breuer_major_kernel(H, N, p);
    CounterexampleMoments out{};
    CompensatedSum r2;
    for (int r = 0; r < p; ++r) {
        const double n2 = gram_sym_contract_norm2(f, f, r);
        out.sym_contraction_norm2.push_back(n2);
        const double c = factorial(r) * binomial(p, r) * binomial(p, r);
        if (r == 0)
            out.E_Y2 = factorial(2 * p) * n2;
        else
            r2.add(c * c * factorial(2 * p - 2 * r) * n2);
    }
    out.E_R2 = r2.value();
    out.E_X2 = second_moment(f);
    out.corr = std::sqrt(out.E_Y2 / (out.E_Y2 + out.E_R2));
    return out;
}

/// Pathwise R_N from W_k = W(h_k) via I_{2a}(h_k^a ⊗̃ h_l^a) = Σ_s (−1)^s s! C(a,s)² ρ^s He_{a−s}(W_k) He_{a−s}(W_l):
/// R_N = (1/N) Σ_{m=1}^p C_m · Σ_{k,l} ρ(k−l)^m He_{p−m}(W_k) He_{p−m}(W_l),
/// C_m = Σ_{r=1}^{min(m,p−1)} r!C(p,r)² (−1)^{m−r} (m−r)! C(p−r,m−r)².
class RemainderEvaluator {
public:
    RemainderEvaluator(int p, double H, int N) : p_(p), N_(N) {
        L_ = 1;
        while (L_ < static_cast<std::size_t>(2 * N)) L_ *= 2;
        Eigen::FFT<double> fft;
        for (int m = 1; m <= p; ++m) {
            double cm = 0.0;
            for (int r = 1; r <= std::min(m, p - 1); ++r)
                cm += factorial(r) * binomial(p, r) * binomial(p, r) * ((m - r) % 2 ? -1.0 : 1.0) * factorial(m - r) *
                      binomial(p - r, m - r) * binomial(p - r, m - r);
            coeff_.push_back(cm);
            // Circulant embedding of the symmetric Toeplitz matrix ρ^m; its eigenvalues are real.
            std::vector<double> c(L_, 0.0);
            for (int v = 0; v < N; ++v) c[v] = ipow(rho(H, v), m);
            for (int v = 1; v < N; ++v) c[L_ - v] = c[v];
            std::vector<std::complex<double>> spec;
            fft.fwd(spec, c);
            std::vector<double> lam(L_);
            for (std::size_t i = 0; i < L_; ++i) lam[i] = spec[i].real();
            eig_.push_back(std::move(lam));
        }
    }

    int p() const { return p_; }
    const std::vector<double>& coefficients() const { return coeff_; }

    /// vᵀ T v for the Toeplitz matrix of ρ^m, using vᵀCv = (1/L) Σ λ_ω |v̂_ω|² on the zero-padded vector.
    double quadratic_form(int m, const std::vector<double>& v, Eigen::FFT<double>& fft) const {
        std::vector<double> pad(L_, 0.0);
        std::copy(v.begin(), v.end(), pad.begin());
        std::vector<std::complex<double>> spec;
        fft.fwd(spec, pad);
        const auto& lam = eig_[m - 1];
        CompensatedSum s;
        for (std::size_t i = 0; i < L_; ++i) s.add(lam[i] * std::norm(spec[i]));
        return s.value() / static_cast<double>(L_);
    }

    double evaluate(const double* w, Eigen::FFT<double>& fft) const {
        CompensatedSum s;
        std::vector<double> v(N_);
        for (int m = 1; m <= p_; ++m) {
            if (coeff_[m - 1] == 0.0) continue;
            for (int k = 0; k < N_; ++k) v[k] = detail::probabilists_hermite(p_ - m, w[k]);
            s.add(coeff_[m - 1] * quadratic_form(m, v, fft));
        }
        return s.value() / N_;
    }

private:
    int p_, N_;
    std::size_t L_;
    std::vector<double> coeff_;
    std::vector<std::vector<double>> eig_;
};

namespace detail {

inline void counterexample_oracles(RunManifest& m, const RunOptions& opt, const CounterexampleParams& P) {
    // Pathwise remainder and Y against the dense chaos representation on a small grid.
    const int n = 4, p = P.p;
    const GramPtr g = increment_gram(P.H, n);
    const Eigen::MatrixXd E = g->embedding();
    const RankOneSum fr = breuer_major_kernel(g, 0, p);
    const DenseSymTensor f = fr.embed(E);
    ChaosExpansion R(n), Y(n);
    for (int r = 1; r < p; ++r)
        R += ChaosExpansion::integral(factorial(r) * binomial(p, r) * binomial(p, r) * symmetrize(contract(f, f, r)));
    Y += ChaosExpansion::integral(symmetrize(contract(f, f, 0)));
    const ChaosExpansion X = ChaosExpansion::integral(f);
    const RemainderEvaluator rem(p, P.H, n);
    Eigen::FFT<double> fft;
    auto rng = make_stream(derive_seed(opt.seed, 77), 0);
    double worst_r = 0.0, worst_y = 0.0;
    const double ex2 = second_moment(fr);
    for (int s = 0; s < 20; ++s) {
        std::vector<double> w(n);
        for (auto& x : w) x = standard_normal(rng);
        std::vector<double> Wk(n);
        for (int k = 0; k < n; ++k) Wk[k] = E.row(k).dot(Eigen::Map<const Eigen::VectorXd>(w.data(), n));
        const double fast_r = rem.evaluate(Wk.data(), fft);
        const double dense_r = R.evaluate(w);
        worst_r = std::max(worst_r, std::abs(fast_r - dense_r) / std::max(1.0, std::abs(dense_r)));
        const double xv = X.evaluate(w), fast_y = xv * xv - ex2 - fast_r;
        worst_y = std::max(worst_y, std::abs(fast_y - Y.evaluate(w)) / std::max(1.0, std::abs(fast_y)));
    }
    record_oracle(m, opt, "pathwise_R_vs_dense_chaos", worst_r, 1e-9);
    record_oracle(m, opt, "pathwise_Y_vs_dense_chaos", worst_y, 1e-9);
    // E X⁴ = (E X²)² + E Y² + E R², the right side from Gram sums, the left from the dense product formula.
    const CounterexampleMoments cm = counterexample_exact(p, P.H, n);
    const double lhs = fourth_moment(X), rhs = cm.E_X2 * cm.E_X2 + cm.E_Y2 + cm.E_R2;
    record_oracle(m, opt, "fourth_moment_decomposition", std::abs(lhs - rhs) / lhs, 1e-9);
}

}  // namespace detail

/// results.csv columns: N, sym_contraction2_r (r = 0..p−1), E_R2, E_Y2, corr_exact; for N in mc_N:
/// mc_corr, mc_corr_se, mc_R2, mc_R2_se, mc_gap, mc_baseline, mc_gap_ratio.
inline RunManifest run_counterexample(const Config& cfg, const RunOptions& opt) {
    const CounterexampleParams P = CounterexampleParams::from(cfg);
    RunManifest m;
    start_manifest(m, "counterexample", cfg, opt);
    detail::counterexample_oracles(m, opt, P);

    std::vector<std::string> cols{"N"};
    for (int r = 0; r < P.p; ++r) cols.push_back("sym_contraction2_" + std::to_string(r));
    for (const char* c : {"E_R2", "E_Y2", "corr_exact", "mc_corr", "mc_corr_se", "mc_R2", "mc_R2_se", "mc_gap",
                          "mc_baseline", "mc_gap_ratio"})
        cols.push_back(c);
    m.table = ResultsTable(cols);

    std::vector<int> all = P.Ns;
    for (int n : P.mc_Ns)
        if (std::find(all.begin(), all.end(), n) == all.end()) all.push_back(n);
    std::sort(all.begin(), all.end());

    std::vector<double> fitN, fitR;
    for (int N : all) {
        const CounterexampleMoments e = counterexample_exact(P.p, P.H, N);
        std::vector<double> row{static_cast<double>(N)};
        row.insert(row.end(), e.sym_contraction_norm2.begin(), e.sym_contraction_norm2.end());
        row.insert(row.end(), {e.E_R2, e.E_Y2, e.corr});
        if (std::find(P.Ns.begin(), P.Ns.end(), N) != P.Ns.end()) {
            fitN.push_back(N);
            fitR.push_back(e.E_R2);
        }
        if (std::find(P.mc_Ns.begin(), P.mc_Ns.end(), N) != P.mc_Ns.end()) {
            const PathMatrix paths = sample_fgn(P.H, N, P.replicas, derive_seed(opt.seed, static_cast<std::uint64_t>(N)), P.workers);
            const RemainderEvaluator rem(P.p, P.H, N);
            const auto X = detail::hermite_row_sums(paths, P.p, 1.0 / std::sqrt(static_cast<double>(N)));
            std::vector<double> X2(P.replicas), Y(P.replicas), R2(P.replicas);
            parallel_for(P.replicas, [&](std::size_t r) {
                Eigen::FFT<double> fft;
                const double rv = rem.evaluate(paths.row(r), fft);
                X2[r] = X[r] * X[r];
                Y[r] = X2[r] - e.E_X2 - rv;
                R2[r] = rv * rv;
            }, P.workers);
            const double c = correlation(X2, Y);
            const MeanSe r2 = mean_se(R2);
            const GapReport gap = independence_gap(pair_sample(X, Y), 1, P.projections, derive_seed(opt.seed, 3000003u + N));
            row.insert(row.end(), {c, (1.0 - c * c) / std::sqrt(static_cast<double>(P.replicas)), r2.mean, r2.se, gap.gap,
                                   gap.baseline, gap.gap / gap.baseline});
            m.checks.push_back({"corr_X2_Y_above_0.9_N" + std::to_string(N), c > 0.9, c, 0.9});
            m.checks.push_back({"gap_above_5_baselines_N" + std::to_string(N), gap.gap > 5.0 * gap.baseline,
                                gap.gap / gap.baseline, 5.0});
            if (N == P.mc_Ns.back()) m.samples = pair_sample(X, Y);
        } else {
            row.insert(row.end(), {kNaN, kNaN, kNaN, kNaN, kNaN, kNaN, kNaN});
        }
        m.table.add_row(std::move(row));
    }
    bool decreasing = true;
    for (std::size_t i = 1; i < fitR.size(); ++i) decreasing = decreasing && fitR[i] < fitR[i - 1];
    m.checks.push_back({"E_R2_decreasing", decreasing, fitR.empty() ? kNaN : fitR.back(), 0.0});
    if (fitN.size() >= 4) {
        const RateFit fit = rate_fit(fitN, fitR);
        m.notes.push_back("E_R2 fitted log2 slope " + fmt(fit.slope) + " +- " + fmt(fit.stderr_));
    }
    m.notes.push_back("limit pair is (Z, Z^2 - sigma^2): the X and Y coordinates stay dependent while E R^2 -> 0");
    return m;
}

}  // namespace chaoslab::explab
