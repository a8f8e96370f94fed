#pragma once

#include <array>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "chaoslab/common.hpp"

namespace chaoslab {

/// n×n Toeplitz matrix T(x, y) = t(x − y), lags −(n−1)..(n−1).
class Toeplitz {
public:
    Toeplitz() = default;
    Toeplitz(int n, std::vector<double> symbol) : n_(n), sym_(std::move(symbol)) {
        if (n < 1 || sym_.size() != static_cast<std::size_t>(2 * n - 1))
            throw std::invalid_argument("Toeplitz: symbol must have 2n-1 entries");
    }
    static Toeplitz from_function(int n, const std::function<double(long)>& t) {
        std::vector<double> s(2 * n - 1);
        for (int d = -(n - 1); d <= n - 1; ++d) s[d + n - 1] = t(d);
        return {n, std::move(s)};
    }
    static Toeplitz ones(int n) { return {n, std::vector<double>(2 * n - 1, 1.0)}; }

    int n() const { return n_; }
    double lag(int d) const { return sym_[d + n_ - 1]; }
    double operator()(int x, int y) const { return sym_[x - y + n_ - 1]; }
    const std::vector<double>& symbol() const { return sym_; }

    Toeplitz transposed() const { return {n_, std::vector<double>(sym_.rbegin(), sym_.rend())}; }
    Toeplitz power(int e) const {
        std::vector<double> s(sym_.size());
        for (std::size_t i = 0; i < s.size(); ++i) s[i] = ipow(sym_[i], e);
        return {n_, std::move(s)};
    }
    Toeplitz hadamard(const Toeplitz& o) const {
        std::vector<double> s(sym_.size());
        for (std::size_t i = 0; i < s.size(); ++i) s[i] = sym_[i] * o.sym_[i];
        return {n_, std::move(s)};
    }
    /// Σ over all (x, y) of T(x, y).
    double total() const {
        CompensatedSum s;
        for (int d = -(n_ - 1); d <= n_ - 1; ++d) s.add((n_ - std::abs(d)) * lag(d));
        return s.value();
    }

private:
    int n_ = 0;
    std::vector<double> sym_;
};

/// Edges of the complete graph on vertices {0,1,2,3}, ordered 01,02,03,12,13,23.
/// An empty edge means the all-ones matrix.
using K4Edges = std::array<std::optional<Toeplitz>, 6>;

namespace detail {

inline int edge_slot(int a, int b) {
    if (a > b) std::swap(a, b);
    static constexpr int slot[4][4] = {{-1, 0, 1, 2}, {0, -1, 3, 4}, {1, 3, -1, 5}, {2, 4, 5, -1}};
    return slot[a][b];
}

/// Matrix M with M(x_a, x_b) equal to the weight of edge {a, b}.
inline Toeplitz oriented(const K4Edges& e, int a, int b, int n) {
    const auto& t = e[edge_slot(a, b)];
    if (!t) return Toeplitz::ones(n);
    return a < b ? *t : t->transposed();
}

}  // namespace detail

/// Σ_{x0..x3 ∈ [0,n)} Π_{u<v} E_uv(x_u − x_v), by direct enumeration. Reference oracle.
inline double k4_sum_bruteforce(int n, const K4Edges& e) {
    std::array<Toeplitz, 6> m;
    for (int s = 0; s < 6; ++s) m[s] = e[s] ? *e[s] : Toeplitz::ones(n);
    CompensatedSum total;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            const double ab = m[0](a, b);
            for (int c = 0; c < n; ++c) {
                const double abc = ab * m[1](a, c) * m[3](b, c);
                double row = 0.0;
                for (int d = 0; d < n; ++d) row += m[2](a, d) * m[4](b, d) * m[5](c, d);
                total.add(abc * row);
            }
        }
    return total.value();
}

/// Same sum in O(n²) when at least one edge is absent.
/// With edge {u,v} absent and {x,y} the remaining vertices, the sum equals
/// Σ_{x,y} W(x,y)·(A·B)(x,y)·(C·D)(x,y), whose Toeplitz products are walked diagonal by diagonal.
/// A full K4 falls back to enumeration for n ≤ max_bruteforce_n.
inline double k4_sum(int n, const K4Edges& e, int max_bruteforce_n = 160) {
    int missing = -1;
    for (int s = 0; s < 6 && missing < 0; ++s)
        if (!e[s]) missing = s;
    if (missing < 0) {
        if (n > max_bruteforce_n) throw std::domain_error("k4_sum: complete graph too large for enumeration");
        return k4_sum_bruteforce(n, e);
    }
    static constexpr int ends[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
    const int u = ends[missing][0], v = ends[missing][1];
    int others[2], k = 0;
    for (int w = 0; w < 4; ++w)
        if (w != u && w != v) others[k++] = w;
    const int x = others[0], y = others[1];
    const Toeplitz W = detail::oriented(e, x, y, n);
    const Toeplitz A = detail::oriented(e, x, u, n), B = detail::oriented(e, u, y, n);
    const Toeplitz C = detail::oriented(e, x, v, n), D = detail::oriented(e, v, y, n);

    auto start = [n](const Toeplitz& L, const Toeplitz& R, int px, int py) {
        double s = 0.0;
        for (int w = 0; w < n; ++w) s += L.lag(px - w) * R.lag(w - py);
        return s;
    };
    CompensatedSum total;
    for (int d = -(n - 1); d <= n - 1; ++d) {
        int px = d >= 0 ? d : 0, py = d >= 0 ? 0 : -d;
        double p = start(A, B, px, py), q = start(C, D, px, py);
        const double w = W.lag(d);
        double diag = 0.0;
        for (;;) {
            diag += p * q;
            if (px + 1 >= n || py + 1 >= n) break;
            p += A.lag(px + 1) * B.lag(-1 - py) - A.lag(px + 1 - n) * B.lag(n - 1 - py);
            q += C.lag(px + 1) * D.lag(-1 - py) - C.lag(px + 1 - n) * D.lag(n - 1 - py);
            ++px;
            ++py;
        }
        total.add(w * diag);
    }
    return total.value();
}

}  // namespace chaoslab
