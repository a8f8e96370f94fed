#include <catch_amalgamated.hpp>

#include "chaoslab/distance.hpp"

using namespace chaoslab;
using Catch::Approx;

namespace {

std::vector<double> normals(std::size_t n, std::uint64_t seed, double shift = 0.0) {
    auto rng = make_stream(seed, 0);
    std::vector<double> v(n);
    for (auto& x : v) x = standard_normal(rng) + shift;
    return v;
}

EmpiricalSample gaussian_sample(std::size_t n, std::size_t d, std::uint64_t seed) {
    return EmpiricalSample(n, d, normals(n * d, seed));
}

// Exact one-dimensional W₁ between equal-size samples by sorting, written independently of the library.
double sorted_l1(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s / a.size();
}

}  // namespace

TEST_CASE("EmpiricalSample validation") {
    CHECK_THROWS_AS(EmpiricalSample(1, 1, {0.0}), std::invalid_argument);
    CHECK_THROWS_AS(EmpiricalSample(2, 2, {0.0, 1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(EmpiricalSample(2, 1, {0.0, NAN}), std::invalid_argument);
    const EmpiricalSample s(3, 2, {1, 2, 3, 4, 5, 6});
    CHECK(s(2, 1) == 6.0);
    CHECK(s.project({0.0, 1.0}) == std::vector<double>{2, 4, 6});
    CHECK(s.rows(1, 3)(0, 0) == 3.0);
}

TEST_CASE("w1_1d examples") {
    const auto a = normals(1000, 1);
    CHECK(w1_1d(a, a) == 0.0);
    auto b = a;
    for (auto& x : b) x += 0.37;
    CHECK(w1_1d(a, b) == Approx(0.37).epsilon(1e-12));
    CHECK(w1_1d(normals(100000, 2), normals(100000, 3, 0.5)) == Approx(0.5).margin(0.02));
    CHECK_THROWS_AS(w1_1d(a, normals(999, 5)), std::invalid_argument);
}

TEST_CASE("w1_1d unequal sizes uses quantile functions") {
    // Two-point against one-point: quantile L¹ is the mean absolute deviation from the single value.
    CHECK(w1_1d(std::vector<double>{0.0, 2.0}, std::vector<double>{1.0}, true) == Approx(1.0));
    // Repeating every atom k times leaves the law unchanged.
    const auto a = normals(50, 6), c = normals(50, 7);
    std::vector<double> a3;
    for (double x : a)
        for (int k = 0; k < 3; ++k) a3.push_back(x);
    CHECK(w1_1d(a3, c, true) == Approx(w1_1d(a, c)).epsilon(1e-12));
}

TEST_CASE("w1_1d metric properties") {
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto a = normals(300, 3 * s + 10), b = normals(300, 3 * s + 11, 0.2), c = normals(300, 3 * s + 12, -0.4);
        CHECK(w1_1d(a, b) == Approx(w1_1d(b, a)).epsilon(1e-14));
        CHECK(w1_1d(a, c) <= w1_1d(a, b) + w1_1d(b, c) + 1e-12);
        CHECK(w1_1d(a, b) == Approx(sorted_l1(a, b)).epsilon(1e-13));
        for (double lambda : {-2.5, 0.3}) {
            auto la = a, lb = b;
            for (auto& x : la) x *= lambda;
            for (auto& x : lb) x *= lambda;
            CHECK(w1_1d(la, lb) == Approx(std::abs(lambda) * w1_1d(a, b)).epsilon(1e-12));
        }
    }
}

TEST_CASE("w1_sliced examples") {
    const auto a = gaussian_sample(500, 3, 8);
    CHECK(w1_sliced(a, a, 64, 1) == 0.0);

    const EmpiricalSample a2 = a.rows(0, 500);
    const auto two = gaussian_sample(400, 2, 9);
    std::vector<double> shifted = two.values();
    for (std::size_t i = 0; i < 400; ++i) shifted[2 * i] += 1.25;
    const EmpiricalSample b(400, 2, shifted);
    // Axis mode with one projection uses the x axis only.
    CHECK(w1_sliced(two, b, 1, 0, SliceMode::Axis) == Approx(1.25).epsilon(1e-12));
    CHECK(w1_sliced(two, b, 2, 0, SliceMode::Axis) == Approx(0.625).epsilon(1e-12));

    // d = 1 with axis projection reduces to w1_1d.
    const auto x = EmpiricalSample::column(normals(300, 1)), y = EmpiricalSample::column(normals(300, 2));
    CHECK(w1_sliced(x, y, 1, 0, SliceMode::Axis) == Approx(w1_1d(x, y)).epsilon(1e-14));
    CHECK(w1_sliced(x, y, 5, 0) == Approx(w1_1d(x, y)).epsilon(1e-12));

    CHECK(w1_sliced(a, a2, 16, 42) == w1_sliced(a, a2, 16, 42));
    CHECK_THROWS_AS(w1_sliced(a, two, 4, 0), std::invalid_argument);
}

TEST_CASE("sliced self-distance decays like n^{-1/2}") {
    std::vector<double> lx, ly;
    for (std::size_t n : {1000u, 10000u, 100000u}) {
        double m = 0;
        for (std::uint64_t r = 0; r < 4; ++r)
            m += w1_sliced(gaussian_sample(n, 2, 100 + r), gaussian_sample(n, 2, 200 + r), 32, r);
        lx.push_back(std::log(static_cast<double>(n)));
        ly.push_back(std::log(m / 4));
    }
    const double slope = (ly[2] - ly[0]) / (lx[2] - lx[0]);
    CHECK(slope == Approx(-0.5).margin(0.1));
}

TEST_CASE("sliced W1 is rotation invariant up to Monte Carlo error") {
    const auto a = gaussian_sample(4000, 2, 31);
    std::vector<double> bv = gaussian_sample(4000, 2, 32).values();
    for (std::size_t i = 0; i < 4000; ++i) bv[2 * i] = 0.6 * bv[2 * i] + 0.4;
    const EmpiricalSample b(4000, 2, bv);
    auto rotate = [](const EmpiricalSample& s, double th) {
        std::vector<double> v(s.n() * 2);
        for (std::size_t i = 0; i < s.n(); ++i) {
            v[2 * i] = std::cos(th) * s(i, 0) - std::sin(th) * s(i, 1);
            v[2 * i + 1] = std::sin(th) * s(i, 0) + std::cos(th) * s(i, 1);
        }
        return EmpiricalSample(s.n(), 2, v);
    };
    const double base = w1_sliced(a, b, 256, 5);
    for (double th : {0.4, 1.3, 2.9}) CHECK(w1_sliced(rotate(a, th), rotate(b, th), 256, 5) == Approx(base).epsilon(0.05));
}

TEST_CASE("independence_gap") {
    const std::size_t n = 10000;
    {
        const auto joint = gaussian_sample(n, 2, 50);
        const GapReport r = independence_gap(joint, 1, 128, 7);
        CHECK(r.permutation_seed == 7);
        CHECK(r.gap <= 2.0 * r.baseline);
    }
    {
        const auto x = normals(n, 51);
        std::vector<double> v(2 * n);
        for (std::size_t i = 0; i < n; ++i) {
            v[2 * i] = x[i];
            v[2 * i + 1] = x[i] * x[i] - 1.0;
        }
        const GapReport r = independence_gap(EmpiricalSample(n, 2, v), 1, 128, 7);
        CHECK(r.gap > 5.0 * r.baseline);
    }
    CHECK_THROWS_AS(independence_gap(gaussian_sample(11, 2, 1), 1, 4, 0), std::invalid_argument);
    CHECK_THROWS_AS(independence_gap(gaussian_sample(10, 2, 1), 2, 4, 0), std::invalid_argument);
    const auto j = gaussian_sample(200, 3, 3);
    CHECK(independence_gap(j, 2, 8, 9).gap == independence_gap(j, 2, 8, 9).gap);
}

TEST_CASE("independence_gap is invariant under per-coordinate affine maps") {
    const std::size_t n = 2000;
    const auto x = normals(n, 61);
    std::vector<double> v(2 * n), w(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        v[2 * i] = x[i];
        v[2 * i + 1] = x[i] * x[i] - 1.0;
        w[2 * i] = 0.01 * x[i] + 3.0;
        w[2 * i + 1] = 40.0 * v[2 * i + 1] - 2.0;
    }
    const GapReport a = independence_gap(EmpiricalSample(n, 2, v), 1, 32, 4);
    const GapReport b = independence_gap(EmpiricalSample(n, 2, w), 1, 32, 4);
    CHECK(b.gap == Approx(a.gap).epsilon(1e-9));
    CHECK(b.baseline == Approx(a.baseline).epsilon(1e-9));

    const EmpiricalSample s = standardize_columns(EmpiricalSample(n, 2, w));
    double m = 0.0, q = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        m += s(i, 1);
        q += s(i, 1) * s(i, 1);
    }
    CHECK(std::abs(m / n) <= 1e-12);
    CHECK(q / n == Approx(1.0).epsilon(1e-12));
}
