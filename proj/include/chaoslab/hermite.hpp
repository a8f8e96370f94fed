#pragma once

#include <stdexcept>
#include <vector>

namespace chaoslab {

/// Coefficient rows of H_n = He_n / n! for n ≤ max_degree, built from (n+1)H_{n+1} = xH_n − H_{n−1}.
class HermiteTable {
public:
    explicit HermiteTable(int max_degree) : rows_(max_degree + 1) {
        if (max_degree < 0) throw std::invalid_argument("HermiteTable: negative degree");
        rows_[0] = {1.0};
        if (max_degree >= 1) rows_[1] = {0.0, 1.0};
        for (int n = 1; n < max_degree; ++n) {
            std::vector<double> next(n + 2, 0.0);
            for (int k = 0; k <= n; ++k) next[k + 1] += rows_[n][k] / (n + 1);
            for (int k = 0; k < n; ++k) next[k] -= rows_[n - 1][k] / (n + 1);
            rows_[n + 1] = std::move(next);
        }
    }

    int max_degree() const { return static_cast<int>(rows_.size()) - 1; }
    const std::vector<double>& coefficients(int n) const { return rows_.at(n); }

    double evaluate(int n, double x) const {
        const auto& c = rows_.at(n);
        double v = 0.0;
        for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * x + *it;
        return v;
    }

private:
    std::vector<std::vector<double>> rows_;
};

/// H_0..H_n at x by the three-term recurrence.
inline std::vector<double> hermite_all(int n, double x) {
    std::vector<double> h(n + 1);
    h[0] = 1.0;
    if (n >= 1) h[1] = x;
    for (int k = 1; k < n; ++k) h[k + 1] = (x * h[k] - h[k - 1]) / (k + 1);
    return h;
}

/// H_n(x) with H_0 = 1, H_1 = x, H_2 = (x² − 1)/2.
inline double hermite(int n, double x) {
    if (n < 0) throw std::invalid_argument("hermite: negative degree");
    if (n <= 20) {
        static const HermiteTable table(20);
        return table.evaluate(n, x);
    }
    return hermite_all(n, x)[n];
}

}  // namespace chaoslab
