#include <catch_amalgamated.hpp>

#include "chaoslab/fbm.hpp"
#include "chaoslab/gram.hpp"
#include "test_support.hpp"

using namespace chaoslab;
using Catch::Approx;

namespace {

GramPtr random_gram(std::mt19937_64& rng, int n, int rank) {
    Eigen::MatrixXd E(n, rank);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < rank; ++j) E(i, j) = testing::unit_noise(rng);
    return GramMatrix::dense(E * E.transpose());
}

RankOneSum random_sum(std::mt19937_64& rng, const GramPtr& g, int order) {
    std::vector<double> w;
    std::vector<int> atoms;
    for (int i = 0; i < g->size(); ++i) {
        w.push_back(testing::unit_noise(rng));
        atoms.push_back(i);
    }
    return RankOneSum(g, order, w, atoms);
}

}  // namespace

TEST_CASE("gram_contract_inner: hand examples") {
    auto g1 = GramMatrix::dense(Eigen::MatrixXd::Ones(1, 1));
    RankOneSum f(g1, 1, {1.0}, {0});
    CHECK(gram_contract_norm2(f, f, 1) == Approx(1.0));

    // f_N, N=2, p=2 on ρ_{0.5} (identity): ‖f ⊗₁ f‖² = ¼·Σ_i 1 = ½.
    const RankOneSum fN = breuer_major_kernel(0.5, 2, 2);
    CHECK(gram_contract_norm2(fN, fN, 1) == Approx(0.5).margin(1e-14));
}

TEST_CASE("gram path equals dense embedding (random 3-atom sums)") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 10; ++trial) {
        const auto g = random_gram(rng, 3, 3);
        const Eigen::MatrixXd E = g->embedding();
        for (int p = 1; p <= 3; ++p)
            for (int q = 1; q <= 3; ++q) {
                const RankOneSum f = random_sum(rng, g, p), h = random_sum(rng, g, q);
                const RankOneSum f2 = random_sum(rng, g, p), h2 = random_sum(rng, g, q);
                const auto F = f.embed(E), H = h.embed(E), F2 = f2.embed(E), H2 = h2.embed(E);
                for (int r = 0; r <= std::min(p, q); ++r) {
                    const double dense = inner(contract(F, H, r), contract(F2, H2, r));
                    CHECK(std::abs(gram_contract_inner(f, h, f2, h2, r) - dense) <= 1e-10);
                    const double dsym = inner(symmetrize(contract(F, H, r)), symmetrize(contract(F2, H2, r)));
                    CHECK(std::abs(gram_sym_contract_inner(f, h, f2, h2, r) - dsym) <= 1e-10);
                }
            }
    }
}

TEST_CASE("Toeplitz fast path equals generic path and dense embedding") {
    const int N = 9;
    const CovarianceModel model({0.3, 0.8});
    const GramPtr g = model.increment_gram(N);
    REQUIRE(g->is_block_toeplitz());
    const Eigen::MatrixXd E = g->embedding();
    auto generic = [&](const RankOneSum& u) {
        std::vector<double> w(u.terms());
        std::vector<int> a(u.terms());
        for (std::size_t k = 0; k < u.terms(); ++k) {
            w[k] = u.weight(k);
            a[k] = u.atom(k);
        }
        std::reverse(w.begin(), w.end());
        std::reverse(a.begin(), a.end());  // same sum, no longer detected as uniform
        return RankOneSum(u.gram(), u.order(), w, a);
    };
    for (int p = 1; p <= 3; ++p)
        for (int q = 1; q <= 3; ++q) {
            const RankOneSum f = breuer_major_kernel(g, 0, p), h = hermite_variation_kernel(g, 1, 0.8, q);
            REQUIRE(f.uniform_family_index());
            const RankOneSum fg = generic(f), hg = generic(h);
            REQUIRE_FALSE(fg.uniform_family_index());
            const auto F = f.embed(E), Hd = h.embed(E);
            for (int r = 0; r <= std::min(p, q); ++r) {
                const double fast = gram_sym_contract_norm2(f, h, r);
                const double slow = gram_sym_contract_norm2(fg, hg, r);
                const double dense = symmetrize(contract(F, Hd, r)).norm_squared();
                CHECK(fast == Approx(slow).epsilon(1e-10).margin(1e-12));
                CHECK(fast == Approx(dense).epsilon(1e-8).margin(1e-10));
                CHECK(gram_contract_norm2(f, h, r) == Approx(gram_contract_norm2(fg, hg, r)).epsilon(1e-10).margin(1e-12));
            }
            if (p == q) CHECK(gram_inner(f, h) == Approx(gram_inner(fg, hg)).epsilon(1e-12));
        }
}

TEST_CASE("k4_sum regrouping equals enumeration for every missing-edge pattern") {
    const int n = 12;
    std::vector<Toeplitz> syms;
    std::mt19937_64 rng(4);
    for (int s = 0; s < 6; ++s) {
        std::vector<double> v(2 * n - 1);
        for (auto& x : v) x = testing::unit_noise(rng);
        syms.emplace_back(n, v);
    }
    for (int mask = 0; mask < 63; ++mask) {
        K4Edges e;
        for (int s = 0; s < 6; ++s)
            if (mask & (1 << s)) e[s] = syms[s];
        CHECK(k4_sum(n, e) == Approx(k4_sum_bruteforce(n, e)).epsilon(1e-11).margin(1e-9));
    }
}

TEST_CASE("GramMatrix validation") {
    Eigen::MatrixXd bad(2, 2);
    bad << 1.0, 2.0, 2.0, 1.0;
    CHECK_THROWS_AS(GramMatrix::dense(bad), std::domain_error);
    Eigen::MatrixXd asym(2, 2);
    asym << 1.0, 0.1, 0.2, 1.0;
    CHECK_THROWS_AS(GramMatrix::dense(asym), std::invalid_argument);
    Eigen::MatrixXd slightly(2, 2);
    slightly << 1.0, 1.0 + 1e-6, 1.0 + 1e-6, 1.0;
    const auto w = GramMatrix::dense(slightly);
    CHECK(w->psd_warning());
    for (double H : {0.1, 0.3, 0.5, 0.75, 0.95}) {
        const auto g = increment_gram(H, 512);
        CHECK_FALSE(g->psd_warning());
        CHECK(g->min_eigenvalue() >= -kPsdTolerance);
    }
    auto g1 = increment_gram(0.3, 4), g2 = increment_gram(0.3, 4);
    const RankOneSum a = breuer_major_kernel(g1, 0, 2), b = breuer_major_kernel(g2, 0, 2);
    CHECK_THROWS_AS(gram_contract_norm2(a, b, 1), std::invalid_argument);
}
