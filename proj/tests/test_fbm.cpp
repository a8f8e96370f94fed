#include <catch_amalgamated.hpp>

#include <numbers>

#include "chaoslab/chaos.hpp"
#include "chaoslab/fbm.hpp"

using namespace chaoslab;
using Catch::Approx;

namespace {

double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= x.size();
    my /= y.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

// Sample covariance of columns a and b with its standard error.
std::pair<double, double> sample_cov(const PathMatrix& X, std::size_t a, const PathMatrix& Y, std::size_t b) {
    const std::size_t n = X.rows;
    double s = 0, s2 = 0;
    for (std::size_t r = 0; r < n; ++r) {
        const double v = X(r, a) * Y(r, b);
        s += v;
        s2 += v * v;
    }
    const double m = s / n;
    return {m, std::sqrt((s2 / n - m * m) / n)};
}

}  // namespace

TEST_CASE("rho examples and symmetry") {
    for (double H : {0.1, 0.3, 0.5, 0.75, 0.9}) {
        CHECK(rho(H, 0) == 1.0);
        for (long v : {1L, 2L, 7L, 63L, 64L, 65L, 1000L}) CHECK(rho(H, v) == rho(H, -v));
    }
    for (long v : {1L, 2L, 5L, 100L}) CHECK(std::abs(rho(0.5, v)) <= 1e-15);
    CHECK(rho(0.75, 1) == Approx(std::sqrt(2.0) - 1.0).epsilon(1e-14));
    // The large-lag branch agrees with the direct formula near the switch.
    for (double H : {0.2, 0.8}) {
        const double a = 64.0, h2 = 2 * H;
        const double direct = 0.5 * (std::pow(a + 1, h2) + std::pow(a - 1, h2) - 2 * std::pow(a, h2));
        CHECK(rho(H, 64) == Approx(direct).epsilon(1e-9));
    }
    CHECK_THROWS_AS(rho(0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(rho(1.0, 1), std::invalid_argument);
}

TEST_CASE("rho decays like v^{2H-2}") {
    for (double H : {0.2, 0.3, 0.6, 0.75, 0.9}) {
        std::vector<double> x, y;
        for (long v = 32; v <= 4096; v *= 2) {
            x.push_back(std::log2(static_cast<double>(v)));
            y.push_back(std::log2(std::abs(rho(H, v))));
        }
        CHECK(std::abs(ols_slope(x, y) - (2 * H - 2)) <= 0.05);
        const double C = std::abs(H * (2 * H - 1));
        for (long v = 32; v <= 4096; v *= 2)
            CHECK(std::abs(rho(H, v)) <= 1.01 * C * std::pow(static_cast<double>(v), 2 * H - 2));
    }
}

TEST_CASE("increment Gram is PSD") {
    for (double H : {0.05, 0.3, 0.5, 0.7, 0.95})
        for (int N : {1, 2, 17, 300, 2048}) {
            const auto g = increment_gram(H, N);
            CHECK(g->min_eigenvalue() >= -kPsdTolerance);
        }
}

TEST_CASE("sample_fgn: H=0.5 is white, H=0.75 lag-1 matches, deterministic") {
    const std::size_t count = 4000;
    const int N = 64;
    const auto W = sample_fgn(0.5, N, count, 11);
    double s = 0;
    for (std::size_t r = 0; r < count; ++r)
        for (int k = 0; k + 1 < N; ++k) s += W(r, k) * W(r, k + 1);
    CHECK(std::abs(s / (count * (N - 1))) <= 4.0 / std::sqrt(static_cast<double>(count * N)));

    const auto X = sample_fgn(0.75, 256, 10000, 12);
    // Every row contributes a lag-1 estimate; rows are independent.
    std::vector<double> est(X.rows);
    for (std::size_t r = 0; r < X.rows; ++r) {
        double a = 0;
        for (int k = 0; k + 1 < 256; ++k) a += X(r, k) * X(r, k + 1);
        est[r] = a / 255.0;
    }
    double m = 0, m2 = 0;
    for (double e : est) {
        m += e;
        m2 += e * e;
    }
    m /= est.size();
    const double se = std::sqrt((m2 / est.size() - m * m) / est.size());
    CHECK(std::abs(m - rho(0.75, 1)) <= 4 * se);

    const auto A = sample_fgn(0.3, 33, 50, 99), B = sample_fgn(0.3, 33, 50, 99);
    CHECK(A.data == B.data);
    const auto C = sample_fgn(0.3, 33, 50, 99, 1);
    CHECK(A.data == C.data);
    CHECK(sample_fgn(0.3, 33, 50, 100).data != A.data);
}

TEST_CASE("sample_fgn covariance matrix matches the Toeplitz target") {
    for (double H : {0.2, 0.85}) {
        const int N = 6;
        const auto X = sample_fgn(H, N, 40000, 5);
        for (int i = 0; i < N; ++i)
            for (int j = i; j < N; ++j) {
                const auto [c, se] = sample_cov(X, i, X, j);
                CHECK(std::abs(c - rho(H, i - j)) <= 4.5 * se);
            }
    }
}

TEST_CASE("moving-average constant matches the Gamma-function closed form") {
    for (double H : {0.1, 0.3, 0.5, 0.6, 0.9}) {
        const double closed = std::tgamma(H + 0.5) * std::tgamma(H + 0.5) /
                              (std::tgamma(2 * H + 1) * std::sin(std::numbers::pi * H));
        CHECK(moving_average_constant(H) == Approx(1.0 / std::sqrt(closed)).epsilon(1e-10));
    }
    CHECK(moving_average_constant(0.5) == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cross-covariance model reproduces quadrature at every lag") {
    for (auto [Hi, Hj] : {std::pair{0.3, 0.9}, std::pair{0.7, 0.4}, std::pair{0.55, 0.6}}) {
        const CrossCovariance c(Hi, Hj);
        for (long v : {-7L, -3L, -2L, -1L, 0L, 1L, 2L, 3L, 7L, 20L})
            CHECK(c(v) == Approx(cross_increment_covariance_quadrature(Hi, Hj, v)).epsilon(1e-7).margin(1e-10));
        // Sides swap under exchanging the two families.
        const CrossCovariance r(Hj, Hi);
        CHECK(r.positive_side() == Approx(c.negative_side()).epsilon(1e-8));
    }
    for (double H : {0.3, 0.8}) {
        const CrossCovariance same(H, H);
        for (long v : {-3L, 0L, 5L}) CHECK(same(v) == rho(H, v));
        CHECK(cross_increment_covariance_quadrature(H, H, 3) == Approx(rho(H, 3)).epsilon(1e-8));
    }
}

TEST_CASE("correlated sampler: exact discretisation and Monte Carlo") {
    const int N = 16;
    const CorrelatedFgnSampler s({0.3, 0.9}, N);
    const CovarianceModel model({0.3, 0.9});
    // Marginal variance within 1% and cross-covariance within the discretisation error of the model.
    for (std::size_t f = 0; f < 2; ++f)
        for (int k : {0, 7, N - 1}) CHECK(std::abs(s.discretized_covariance(f, f, k, k) - 1.0) <= 0.01);
    double worst = 0.0;
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            for (int k = 0; k < N; k += 3)
                for (int l = 0; l < N; l += 5)
                    worst = std::max(worst, std::abs(s.discretized_covariance(i, j, k, l) - model.covariance(i, j, k - l)));
    CHECK(worst <= 0.02);

    // Per side of the lag axis the cross-covariance is a fixed multiple of ρ_{0.6}.
    for (int sign : {1, -1}) {
        std::vector<double> ratio;
        for (int v = 1; v <= 7; ++v) {
            const int k = sign > 0 ? v + 4 : 4, l = sign > 0 ? 4 : v + 4;
            ratio.push_back(s.discretized_covariance(0, 1, k, l) / rho(0.6, k - l));
        }
        const auto [lo, hi] = std::minmax_element(ratio.begin(), ratio.end());
        CHECK((*hi - *lo) <= 0.05 * std::abs(*lo));
    }

    const auto paths = s.sample(20000, 3);
    REQUIRE(paths.size() == 2);
    for (auto [i, j, k, l] : {std::array{0, 0, 0, 0}, std::array{1, 1, 5, 5}, std::array{0, 1, 3, 3},
                              std::array{0, 1, 6, 2}, std::array{0, 1, 2, 6}, std::array{1, 1, 9, 1}}) {
        const auto [c, se] = sample_cov(paths[i], k, paths[j], l);
        CHECK(std::abs(c - s.discretized_covariance(i, j, k, l)) <= 4.5 * se);
    }
    CHECK(s.sample(30, 7)[1].data == s.sample(30, 7, 1)[1].data);

    const CorrelatedFgnSampler same({0.6, 0.6}, 8);
    for (int k = 0; k < 8; ++k)
        CHECK(same.discretized_covariance(0, 1, k, 2) == Approx(same.discretized_covariance(0, 0, k, 2)).epsilon(1e-14));

    CorrelatedFgnSampler::Options coarse;
    coarse.subdivisions = 1;
    coarse.variance_tolerance = 1e-4;
    CHECK_THROWS_AS(CorrelatedFgnSampler({0.1}, 4, coarse), std::runtime_error);
}

TEST_CASE("Breuer-Major kernel second moments") {
    for (int p = 1; p <= 4; ++p) {
        CHECK(second_moment(breuer_major_kernel(0.3, 1, p)) == Approx(factorial(p)));
        CHECK(second_moment(breuer_major_kernel(0.5, 37, p)) == Approx(factorial(p)).epsilon(1e-12));
    }
    // Isometry against a direct double sum.
    const int N = 20;
    const double H = 0.7;
    double direct = 0;
    for (int k = 0; k < N; ++k)
        for (int l = 0; l < N; ++l) direct += std::pow(rho(H, k - l), 3);
    CHECK(second_moment(breuer_major_kernel(H, N, 3)) == Approx(6.0 * direct / N).epsilon(1e-12));
    const auto g = hermite_variation_kernel(0.8, N, 2);
    double dg = 0;
    for (int k = 0; k < N; ++k)
        for (int l = 0; l < N; ++l) dg += std::pow(rho(0.8, k - l), 2);
    CHECK(second_moment(g) == Approx(2.0 * std::pow(N, 2 * (2 * 0.2 - 1)) * dg).epsilon(1e-12));
}

TEST_CASE("breuer_major_sigma2 against brute-force lag sums") {
    CHECK(breuer_major_sigma2(2, 0.5).value == Approx(2.0).epsilon(1e-12));
    CHECK(breuer_major_sigma2(3, 0.5).value == Approx(6.0).epsilon(1e-12));
    for (auto [p, H] : {std::pair{2, 0.3}, std::pair{2, 0.7}, std::pair{3, 0.6}, std::pair{4, 0.2}}) {
        const auto c = breuer_major_sigma2(p, H);
        CHECK(c.error <= 1e-8);
        // Direct sum to 2·10⁶ plus the integral of the leading tail term.
        const long V = 2000000;
        CompensatedSum s;
        for (long v = 1; v <= V; ++v) s.add(ipow(rho(H, v), p));
        const double e = (2 * H - 2) * p, lead = std::pow(H * (2 * H - 1), p);
        const double tail = lead * std::pow(V + 0.5, e + 1) / -(e + 1);
        const double brute = factorial(p) * (1 + 2 * (s.value() + tail));
        CHECK(std::abs(c.value - brute) <= 1e-7);
    }
    CHECK_THROWS_AS(breuer_major_sigma2(2, 0.8), std::domain_error);
}

TEST_CASE("E V_N^2 converges monotonically to sigma2") {
    const double s2 = breuer_major_sigma2(2, 0.3).value;
    double prev_gap = 1e9;
    for (int N = 16; N <= 8192; N *= 2) {
        const double gap = std::abs(second_moment(breuer_major_kernel(0.3, N, 2)) - s2);
        CHECK(gap < prev_gap);
        prev_gap = gap;
    }
    CHECK(prev_gap <= 0.01 * s2);
}
