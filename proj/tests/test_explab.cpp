#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "chaoslab/explab/run.hpp"

using namespace chaoslab;
using namespace chaoslab::explab;
using Catch::Approx;

TEST_CASE("rate_fit recovers exact power laws", "[explab][rate_fit]") {
    const std::vector<double> Ns{64, 128, 256, 512, 1024};
    std::vector<double> v;
    for (double n : Ns) v.push_back(3.0 / std::sqrt(n));
    const RateFit f = rate_fit(Ns, v);
    CHECK(f.slope == Approx(-0.5).margin(1e-12));
    CHECK(f.stderr_ < 1e-12);

    const RateFit c = rate_fit(Ns, std::vector<double>(Ns.size(), 2.5));
    CHECK(c.slope == Approx(0.0).margin(1e-12));
}

TEST_CASE("rate_fit tolerates ten percent multiplicative noise", "[explab][rate_fit]") {
    auto rng = make_stream(5, 0);
    std::vector<double> Ns, v;
    for (int k = 6; k <= 16; ++k) {
        const double n = std::ldexp(1.0, k);
        Ns.push_back(n);
        v.push_back(std::pow(n, -0.5) * (1.0 + 0.1 * (2.0 * uniform01(rng) - 1.0)));
    }
    CHECK(rate_fit(Ns, v).slope == Approx(-0.5).margin(0.05));
}

TEST_CASE("rate_fit rejects short or non-positive input", "[explab][rate_fit]") {
    CHECK_THROWS(rate_fit({1, 2, 4}, {1, 1, 1}));
    CHECK_THROWS(rate_fit({1, 2, 4, 8}, {1, 0, 1, 1}));
    CHECK_THROWS(rate_fit({1, 2, 4, 8}, {1, -1, 1, 1}));
}

TEST_CASE("config parsing", "[explab][config]") {
    const Config c = Config::parse("# header\np = 3   # trailing\nN = 8, 16,32\nH = 0.25\n", "test");
    CHECK(c.get_int("p", 0) == 3);
    CHECK(c.get_double("H", 0) == 0.25);
    CHECK(c.get_ints("N", {}) == std::vector<long long>{8, 16, 32});
    CHECK(c.get_int("missing", 7) == 7);
    CHECK_THROWS_AS(c.require_known({"p", "N"}), ConfigError);
    CHECK_NOTHROW(c.require_known({"p", "N", "H"}));

    CHECK_THROWS_AS(Config::parse("p = 1\np = 2\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("p\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("= 3\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("p = x\n").get_int("p", 0), ConfigError);
    CHECK_THROWS_AS(validate_schedule({8, 8, 16}, "N"), ConfigError);
    CHECK_THROWS_AS(validate_schedule({16, 8}, "N"), ConfigError);
    CHECK_THROWS_AS(Config::parse("seed = -1\n").get_seed(), ConfigError);
    CHECK(Config::parse("seed = 18446744073709551615\n").get_seed().value() == 18446744073709551615ull);
}

TEST_CASE("experiments reject parameters outside their regimes", "[explab][config]") {
    const RunOptions opt{1, false};
    CHECK_THROWS_AS(run_experiment("joint-clt", Config::parse("H0 = 0.8\nN = 8,16,32,64\nmc_N = none\n"), opt), ConfigError);
    CHECK_THROWS_AS(run_experiment("central-noncentral", Config::parse("H = 0.7\n"), opt), ConfigError);
    CHECK_THROWS_AS(run_experiment("central-noncentral", Config::parse("q = 2\n"), opt), ConfigError);
    CHECK_THROWS_AS(run_experiment("infinite-chaos", Config::parse("p = 2\nH = 0.8\n"), opt), ConfigError);
    CHECK_THROWS_AS(run_experiment("sde", Config::parse("drift = cubic\n"), opt), ConfigError);
    CHECK_THROWS_AS(run_experiment("hurst", Config::parse("typo = 1\n"), opt), ConfigError);
    CHECK_THROWS_AS(run_experiment("no-such", Config::parse(""), opt), ConfigError);
}

TEST_CASE("joint CLT exact cross moments", "[explab][joint_clt]") {
    // Identity Gram, N = 4: E X Y = 2·N^{q(1−H)−1}·N^{−1/2}·N = 4.
    const GramPtr id = CovarianceModel({0.5, 0.5}).increment_gram(4);
    CHECK(joint_clt_exact_cross(id, 2, 1, 2, 0.5) == Approx(4.0).epsilon(1e-14));
    CHECK(joint_clt_exact_cross(id, 2, 1, 3, 0.5) == 0.0);
    CHECK(joint_clt_expected_slope(2, 0.3, 0.9) == Approx(-0.3));
}

TEST_CASE("central-noncentral a3 against a four-fold loop", "[explab][central_noncentral]") {
    const double H = 0.8;
    const int N = 3, q = 3;
    double a3 = 0.0, a1 = 0.0;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            for (int k = 0; k < N; ++k)
                for (int l = 0; l < N; ++l) {
                    a3 += std::pow(rho(H, i - k), q - 2) * rho(H, i - j) * rho(H, i - j) * rho(H, k - l) * rho(H, k - l);
                    a1 += std::pow(rho(H, i - k), q - 1) * rho(H, i - j) * rho(H, k - l) * rho(H, j - l);
                }
    const CrossDerivativeMoment e = central_noncentral_exact(q, H, N);
    CHECK(e.a3 == Approx(a3).epsilon(1e-13));
    CHECK(e.a1 == Approx(a1).epsilon(1e-13));
    CHECK(central_noncentral_expected_slope(3, 0.78) == Approx(-0.32));
}

TEST_CASE("infinite chaos closed forms", "[explab][infinite_chaos]") {
    CHECK(infinite_chaos_T(0, 2, 0.5, 4) == Approx(0.25).epsilon(1e-15));
    // H = 1/2: only ρ(0) survives, E V_N Y = √e·N^{−1/2}.
    CHECK(infinite_chaos_cross(3, 0.5, 16) == Approx(std::sqrt(std::exp(1.0)) / 4.0).epsilon(1e-15));
    const auto [M, tail] = exponential_truncation(1e-12);
    CHECK(tail < 1e-12);
    CHECK(exponential_truncation(1e-6).first < M);
}

TEST_CASE("counter-example moments", "[explab][counterexample]") {
    const CounterexampleMoments a = counterexample_exact(2, 0.3, 64), b = counterexample_exact(2, 0.3, 256);
    CHECK(a.corr == Approx(std::sqrt(a.E_Y2 / (a.E_Y2 + a.E_R2))));
    CHECK(b.E_R2 < a.E_R2);
    CHECK(b.corr > a.corr);
    CHECK(b.corr > 0.9);
}

TEST_CASE("SDE derivative accumulation and envelope", "[explab][sde]") {
    const auto dW = brownian_increments(9, 0, 128, 1.5);
    const SdePath zero = sde_path(Drift::Tanh, 0.0, 0.3, 1.5, dW);
    CHECK(zero.bound == 1.5);
    CHECK(zero.D0 == 1.0);

    // Constant b′ = 1: D_{a_j} = e^{λ(t − a_j)} on the grid, so the bound equals the grid envelope.
    const SdePath lin = sde_path(Drift::Linear, -1.3, 0.0, 1.5, dW);
    CHECK(lin.bound == Approx(sde_envelope_grid(-1.3, 1.0, 1.5, 128)).epsilon(1e-13));
    CHECK(lin.D0 == Approx(std::exp(-1.3 * 1.5)).epsilon(1e-13));

    CHECK(sde_envelope(0.0, 1.0, 2.0) == 2.0);
    CHECK(sde_envelope(1e-9, 1.0, 2.0) == Approx(2.0).margin(1e-6));
    CHECK(sde_envelope(-1e8, 1.0, 2.0) < 1e-6);
    for (double l : {-3.0, -0.1, 0.01, 0.7, 2.0})
        CHECK(sde_envelope(l, 1.0, 2.0) == Approx(sde_envelope_series(l, 1.0, 2.0)).epsilon(1e-13));
    // Pathwise sides of the envelope for a drift with 0 < b′ ≤ 1.
    CHECK(sde_path(Drift::Tanh, 2.0, 0.0, 1.5, dW).bound <= sde_envelope_grid(2.0, 1.0, 1.5, 128));
    CHECK(sde_path(Drift::Tanh, -2.0, 0.0, 1.5, dW).bound >= sde_envelope_grid(-2.0, 1.0, 1.5, 128));
}

TEST_CASE("SDE doubling test rejects an unstable grid", "[explab][sde]") {
    // λ·dt = −2.5 puts Euler–Maruyama outside its stability region for the linear drift.
    const Config c = Config::parse("drift = linear\nlambda = -40, 0\nsteps = 16\nreplicas = 8\nstrong_paths = 16\n");
    CHECK_THROWS_AS(run_experiment("sde", c, {3, false}), StepSizeError);
}

TEST_CASE("Hurst estimator moments", "[explab][hurst]") {
    // H = 1/2: increments are iid, Var S = N^{-2}·2/N.
    CHECK(hurst_var_S(0.5, 64) == Approx(2.0 / std::pow(64.0, 3)).epsilon(1e-14));
    const auto [bias, var] = hurst_half_moments(1024);
    CHECK(bias > 0.0);
    CHECK(var == Approx(2.0 / 1024 / std::pow(2.0 * std::log(1024.0), 2)).epsilon(2e-3));
}

TEST_CASE("runs are deterministic in the seed", "[explab][determinism]") {
    const Config c = Config::parse("lambda = -1, 0, 1\nsteps = 32\nreplicas = 64\nstrong_paths = 16\nprojections = 8\n");
    const std::string a = run_experiment("sde", c, {42, false}).table.to_csv();
    const std::string b = run_experiment("sde", c, {42, false}).table.to_csv();
    const std::string d = run_experiment("sde", c, {43, false}).table.to_csv();
    CHECK(a == b);
    CHECK(a != d);
    CHECK(derive_seed(1, 2) != derive_seed(2, 1));
}

TEST_CASE("manifest writing", "[explab][report]") {
    const Config c = Config::parse("p = 2\nH = 0.3\nN = 8, 16, 32\nmc_N = 16\nreplicas = 40\nprojections = 4\n");
    const RunManifest m = run_experiment("counterexample", c, {5, true});
    const auto dir = std::filesystem::temp_directory_path() / "chaoslab_manifest_test";
    std::filesystem::remove_all(dir);
    m.write(dir);
    CHECK(std::filesystem::exists(dir / "results.csv"));
    CHECK(std::filesystem::exists(dir / "manifest.json"));
    std::ifstream f(dir / "samples.bin", std::ios::binary);
    REQUIRE(f);
    std::uint64_t n = 0, d = 0;
    f.read(reinterpret_cast<char*>(&n), 8);
    f.read(reinterpret_cast<char*>(&d), 8);
    CHECK(n == 40);
    CHECK(d == 2);
    CHECK(std::filesystem::file_size(dir / "samples.bin") == 16 + 8 * n * d);
    const auto j = m.to_json();
    CHECK(j["experiment"] == "counterexample");
    CHECK(j["seed"] == 5);
    CHECK_FALSE(j["config"].contains("seed"));
    std::filesystem::remove_all(dir);
}
