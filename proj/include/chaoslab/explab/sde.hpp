#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "chaoslab/distance.hpp"
#include "chaoslab/explab/experiment.hpp"

namespace chaoslab::explab {

/// Euler–Maruyama run failed the strong-error doubling test.
class StepSizeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Drift { Tanh, Linear };

inline double drift_value(Drift b, double x) { return b == Drift::Tanh ? std::tanh(x) : x; }

inline double drift_slope(Drift b, double x) {
    if (b == Drift::Linear) return 1.0;
    const double th = std::tanh(x);
    return 1.0 - th * th;
}

/// X^λ_t = x0 + λ∫b(X^λ_s)ds + W_t with |b′| ≤ 1 for both built-in drifts.
struct SdeParams {
    std::vector<double> lambdas{-16, -8, -4, -2, -1, -0.5, 0, 0.5, 1, 2};
    Drift drift = Drift::Tanh;
    double t = 1.0, x0 = 0.0, C = 1.0;
    int steps = 256;
    std::size_t replicas = 4000;
    int projections = 64;
    std::size_t strong_paths = 256;
    double strong_tolerance = 0.05;
    unsigned workers = 0;
    static constexpr double M = 1.0;

    static SdeParams from(const Config& c) {
        c.require_known(with_common_keys({"lambda", "drift", "t", "x0", "C", "steps", "replicas", "projections",
                                          "strong_paths", "strong_tolerance"}));
        SdeParams P;
        P.lambdas = c.get_doubles("lambda", P.lambdas);
        const std::string d = c.get_string("drift", "tanh");
        require(d == "tanh" || d == "linear", "drift must be tanh or linear");
        P.drift = d == "tanh" ? Drift::Tanh : Drift::Linear;
        P.t = c.get_double("t", P.t);
        P.x0 = c.get_double("x0", P.x0);
        P.C = c.get_double("C", P.C);
        P.steps = static_cast<int>(c.get_int("steps", P.steps));
        P.replicas = static_cast<std::size_t>(c.get_int("replicas", static_cast<long long>(P.replicas)));
        P.projections = static_cast<int>(c.get_int("projections", P.projections));
        P.strong_paths = static_cast<std::size_t>(c.get_int("strong_paths", static_cast<long long>(P.strong_paths)));
        P.strong_tolerance = c.get_double("strong_tolerance", P.strong_tolerance);
        P.workers = workers_of(c);
        slope_tolerance_of(c);
        require(!P.lambdas.empty(), "lambda must list at least one value");
        for (double l : P.lambdas) require(std::isfinite(l), "lambda values must be finite");
        require(P.t > 0.0 && std::isfinite(P.t), "t must be positive");
        require(P.C > 0.0, "C must be positive");
        require(P.steps >= 2, "steps must be >= 2");
        require(P.replicas >= 4 && P.replicas % 2 == 0, "replicas must be an even number >= 4");
        require(P.projections >= 1, "projections must be >= 1");
        require(P.strong_paths >= 2, "strong_paths must be >= 2");
        require(P.strong_tolerance > 0.0, "strong_tolerance must be positive");
        return P;
    }
};

/// (e^{Mλt} − 1)/(Mλ), equal to t at λ = 0.
inline double sde_envelope(double lambda, double M, double t) {
    const double x = M * lambda * t;
    return x == 0.0 ? t : t * std::expm1(x) / x;
}

/// t·Σ_{n≤terms} x^n/(n+1)! with x = Mλt; the Taylor expansion of the envelope about λ = 0.
inline double sde_envelope_series(double lambda, double M, double t, int terms = 40) {
    const double x = M * lambda * t;
    CompensatedSum s;
    double term = 1.0;
    for (int n = 0; n <= terms; ++n) {
        s.add(term);
        term *= x / (n + 2.0);
    }
    return t * s.value();
}

/// Right-endpoint grid analogue dt·Σ_{k=1}^{steps} e^{Mλ·k·dt}; the pathwise accumulation meets it when b′ ≡ M.
inline double sde_envelope_grid(double lambda, double M, double t, int steps) {
    const double dt = t / steps;
    CompensatedSum s;
    for (int k = 1; k <= steps; ++k) s.add(std::exp(M * lambda * dt * k));
    return t * (s.value() / steps);
}

struct SdePath {
    double X_t;
    double W_t;
    /// ∫₀ᵗ D_aX_t da on the grid, t·mean_j D_{a_j}X_t.
    double bound;
    /// D_0X_t.
    double D0;
};

/// One Euler–Maruyama path driven by the given Brownian increments, with
/// D_{a_j}X_t = exp(λ Σ_{n≥j} b′(X_n) dt) accumulated backwards along the same grid.
inline SdePath sde_path(Drift b, double lambda, double x0, double t, const std::vector<double>& dW) {
    const int steps = static_cast<int>(dW.size());
    const double dt = t / steps;
    std::vector<double> X(steps + 1);
    X[0] = x0;
    double W = 0.0;
    for (int n = 0; n < steps; ++n) {
        X[n + 1] = X[n] + lambda * drift_value(b, X[n]) * dt + dW[n];
        W += dW[n];
    }
    double exponent = 0.0, sumD = 0.0, D = 1.0;
    for (int j = steps - 1; j >= 0; --j) {
        exponent += drift_slope(b, X[j]) * dt;
        D = std::exp(lambda * exponent);
        sumD += D;
    }
    return {X[steps], W, t * (sumD / steps), D};
}

inline std::vector<double> brownian_increments(std::uint64_t seed, std::size_t replica, int steps, double t) {
    auto rng = make_stream(seed, replica);
    const double s = std::sqrt(t / steps);
    std::vector<double> dW(steps);
    for (double& w : dW) w = s * standard_normal(rng);
    return dW;
}

/// Sums adjacent pairs: increments of the same Brownian path on a grid twice as coarse.
inline std::vector<double> coarsen(const std::vector<double>& dW) {
    std::vector<double> out(dW.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = dW[2 * i] + dW[2 * i + 1];
    return out;
}

struct StrongErrors {
    double coarse, fine;
};

/// RMS terminal differences between grids of steps vs 2·steps and 2·steps vs 4·steps on shared paths.
inline StrongErrors sde_strong_errors(const SdeParams& P, double lambda, std::uint64_t seed) {
    std::vector<double> e1(P.strong_paths), e2(P.strong_paths);
    parallel_for(P.strong_paths, [&](std::size_t r) {
        const auto d4 = brownian_increments(seed, r, 4 * P.steps, P.t);
        const auto d2 = coarsen(d4), d1 = coarsen(d2);
        const double x4 = sde_path(P.drift, lambda, P.x0, P.t, d4).X_t;
        const double x2 = sde_path(P.drift, lambda, P.x0, P.t, d2).X_t;
        const double x1 = sde_path(P.drift, lambda, P.x0, P.t, d1).X_t;
        e1[r] = (x1 - x2) * (x1 - x2);
        e2[r] = (x2 - x4) * (x2 - x4);
    }, P.workers);
    return {std::sqrt(mean_se(e1).mean), std::sqrt(mean_se(e2).mean)};
}

namespace detail {

inline void sde_oracles(RunManifest& m, const RunOptions& opt, const SdeParams& P) {
    const double M = SdeParams::M;
    double series = 0.0;
    for (double x : {1e-9, 1e-6, 1e-3, 0.1, 0.5, 1.0, 2.0})
        for (double sgn : {-1.0, 1.0}) {
            const double l = sgn * x / (M * P.t);
            series = std::max(series, std::abs(sde_envelope(l, M, P.t) - sde_envelope_series(l, M, P.t)) /
                                          sde_envelope_series(l, M, P.t));
        }
    record_oracle(m, opt, "envelope_vs_series", series, 1e-12);
    // λ → 0⁺: g → C·t, checked on the series side where no cancellation occurs.
    const double small = 1e-9;
    record_oracle(m, opt, "g_limit_lambda_to_0",
                  std::abs(P.C * sde_envelope(small, M, P.t) - P.C * sde_envelope_series(0.0, M, P.t)), 1e-6);
    // λ → −∞: g = C(1 − e^{Mλt})/(M|λ|) → 0.
    const double big = -1e8;
    const double asym = P.C * (1.0 - std::exp(M * big * P.t)) / (M * std::abs(big));
    record_oracle(m, opt, "g_limit_lambda_to_minus_inf", std::abs(P.C * sde_envelope(big, M, P.t)), 1e-6);
    record_oracle(m, opt, "g_vs_large_negative_expansion", std::abs(P.C * sde_envelope(big, M, P.t) - asym) / asym, 1e-12);

    const auto dW = brownian_increments(derive_seed(opt.seed, 71), 0, P.steps, P.t);
    const SdePath zero = sde_path(P.drift, 0.0, P.x0, P.t, dW);
    record_oracle(m, opt, "lambda0_bound_equals_t", std::abs(zero.bound - P.t) + std::abs(zero.D0 - 1.0), 0.0);
    const double l = 0.7;
    const SdePath lin = sde_path(Drift::Linear, l, P.x0, P.t, dW);
    const double grid = sde_envelope_grid(l, 1.0, P.t, P.steps);
    record_oracle(m, opt, "linear_drift_bound_vs_grid_envelope", std::abs(lin.bound - grid) / grid, 1e-12);
}

}  // namespace detail

/// results.csv columns: lambda, bound_mean, bound_se (∫₀ᵗ D_aX_t da), D0_mean, D0_se, envelope (C = 1),
/// envelope_grid, g = C·envelope, frac_on_bound_side (share of paths with bound ≤ envelope_grid for λ ≥ 0,
/// ≥ for λ < 0), corr_XW, gap, baseline (independence_gap of (X^λ_t, W_t)).
inline RunManifest run_sde(const Config& cfg, const RunOptions& opt) {
    const SdeParams P = SdeParams::from(cfg);
    RunManifest m;
    start_manifest(m, "sde", cfg, opt);
    detail::sde_oracles(m, opt, P);

    const double worst = *std::max_element(P.lambdas.begin(), P.lambdas.end(),
                                           [](double a, double b) { return std::abs(a) < std::abs(b); });
    if (worst != 0.0) {
        const StrongErrors se = sde_strong_errors(P, worst, derive_seed(opt.seed, 72));
        const bool ok = se.coarse <= P.strong_tolerance && se.fine <= 0.75 * se.coarse + 1e-14;
        m.checks.push_back({"strong_error_doubling", ok, se.coarse, P.strong_tolerance});
        m.notes.push_back("strong RMS error at lambda " + fmt(worst) + ": steps vs 2 steps " +
                          fmt(se.coarse) + ", 2 steps vs 4 steps " + fmt(se.fine));
        if (!ok)
            throw StepSizeError("step size too coarse: RMS terminal difference " + fmt(se.coarse) +
                                " (next halving " + fmt(se.fine) + ", tolerance " +
                                fmt(P.strong_tolerance) + ")");
    }

    m.table = ResultsTable({"lambda", "bound_mean", "bound_se", "D0_mean", "D0_se", "envelope", "envelope_grid", "g",
                            "frac_on_bound_side", "corr_XW", "gap", "baseline"});
    const std::size_t L = P.lambdas.size(), R = P.replicas;
    std::vector<std::vector<SdePath>> paths(L, std::vector<SdePath>(R));
    const std::uint64_t noise = derive_seed(opt.seed, 73);
    parallel_for(R, [&](std::size_t r) {
        const auto dW = brownian_increments(noise, r, P.steps, P.t);
        for (std::size_t i = 0; i < L; ++i) paths[i][r] = sde_path(P.drift, P.lambdas[i], P.x0, P.t, dW);
    }, P.workers);

    for (std::size_t i = 0; i < L; ++i) {
        const double l = P.lambdas[i];
        const double env = sde_envelope(l, SdeParams::M, P.t), grid = sde_envelope_grid(l, SdeParams::M, P.t, P.steps);
        std::vector<double> bound(R), D0(R), X(R), W(R);
        std::size_t side = 0;
        for (std::size_t r = 0; r < R; ++r) {
            const SdePath& s = paths[i][r];
            bound[r] = s.bound;
            D0[r] = s.D0;
            X[r] = s.X_t;
            W[r] = s.W_t;
            const double slack = 1e-12 * grid;
            side += l >= 0.0 ? s.bound <= grid + slack : s.bound >= grid - slack;
        }
        const MeanSe b = mean_se(bound), d = mean_se(D0);
        const double frac = static_cast<double>(side) / static_cast<double>(R);
        const GapReport gap = independence_gap(pair_sample(X, W), 1, P.projections, derive_seed(opt.seed, 80 + i));
        m.table.add_row({l, b.mean, b.se, d.mean, d.se, env, grid, P.C * env, frac, correlation(X, W), gap.gap,
                         gap.baseline});
        m.checks.push_back({"pathwise_bound_side_lambda_" + fmt(l), frac == 1.0, frac, 1.0});
        if (l == 0.0) {
            const bool exact = std::all_of(paths[i].begin(), paths[i].end(),
                                           [&](const SdePath& s) { return s.bound == P.t && s.D0 == 1.0; });
            m.checks.push_back({"lambda0_bound_equals_t_all_paths", exact, b.mean, P.t});
        }
    }
    m.notes.push_back("for lambda < 0 the envelope bounds the accumulated derivative integral from below; "
                      "the upper bound there is t since D_aX_t <= 1");
    return m;
}

}  // namespace chaoslab::explab
