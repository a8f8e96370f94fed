#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "chaoslab/common.hpp"
#include "chaoslab/distance.hpp"

namespace chaoslab::explab {

struct RateFit {
    double slope;
    double stderr_;
};

/// Least-squares slope of log2(value) against log2(N), with its standard error.
inline RateFit rate_fit(const std::vector<double>& Ns, const std::vector<double>& values) {
    if (Ns.size() != values.size()) throw std::invalid_argument("rate_fit: N and value counts differ");
    if (Ns.size() < 4) throw std::invalid_argument("rate_fit: need at least 4 points");
    const std::size_t n = Ns.size();
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(Ns[i] > 0.0)) throw std::invalid_argument("rate_fit: N must be positive");
        if (!(values[i] > 0.0) || !std::isfinite(values[i])) throw std::invalid_argument("rate_fit: values must be positive");
        x[i] = std::log2(Ns[i]);
        y[i] = std::log2(values[i]);
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0.0) throw std::invalid_argument("rate_fit: N values must not all coincide");
    const double slope = sxy / sxx;
    double ssr = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - my - slope * (x[i] - mx);
        ssr += r * r;
    }
    return {slope, std::sqrt(ssr / (n - 2) / sxx)};
}

/// Numeric table written as results.csv; NaN marks cells not computed for that row.
class ResultsTable {
public:
    explicit ResultsTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    void add_row(std::vector<double> row) {
        if (row.size() != columns_.size()) throw std::logic_error("ResultsTable: row width mismatch");
        rows_.push_back(std::move(row));
    }

    const std::vector<std::string>& columns() const { return columns_; }
    const std::vector<std::vector<double>>& rows() const { return rows_; }

    std::size_t column_index(const std::string& name) const {
        for (std::size_t i = 0; i < columns_.size(); ++i)
            if (columns_[i] == name) return i;
        throw std::out_of_range("ResultsTable: no column '" + name + "'");
    }

    std::vector<double> column(const std::string& name) const {
        const std::size_t c = column_index(name);
        std::vector<double> out;
        for (const auto& r : rows_) out.push_back(r[c]);
        return out;
    }

    std::string to_csv() const {
        std::string out;
        for (std::size_t i = 0; i < columns_.size(); ++i) out += (i ? "," : "") + columns_[i];
        out += "\n";
        char buf[64];
        for (const auto& r : rows_) {
            for (std::size_t i = 0; i < r.size(); ++i) {
                std::snprintf(buf, sizeof buf, "%.17g", r[i]);
                if (i) out += ",";
                out += buf;
            }
            out += "\n";
        }
        return out;
    }

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<double>> rows_;
};

struct SlopeCheck {
    std::string quantity;
    RateFit fit;
    double expected;
    double tolerance;
    bool within() const { return std::abs(fit.slope - expected) <= tolerance; }
};

struct NamedCheck {
    std::string name;
    bool passed;
    double value;
    double threshold;
};

struct RunManifest {
    std::string experiment;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> config;
    ResultsTable table{{}};
    std::vector<SlopeCheck> slopes;
    std::vector<NamedCheck> checks;
    std::vector<std::string> notes;
    std::optional<EmpiricalSample> samples;

    const SlopeCheck& slope(const std::string& quantity) const {
        for (const auto& s : slopes)
            if (s.quantity == quantity) return s;
        throw std::out_of_range("RunManifest: no slope for '" + quantity + "'");
    }

    const NamedCheck& check(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return c;
        throw std::out_of_range("RunManifest: no check '" + name + "'");
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["experiment"] = experiment;
        j["version"] = kVersion;
        j["seed"] = seed;
        j["config"] = config;
        j["columns"] = table.columns();
        j["rows"] = table.rows().size();
        auto& sl = j["slopes"] = nlohmann::ordered_json::array();
        for (const auto& s : slopes)
            sl.push_back({{"quantity", s.quantity},
                          {"slope", s.fit.slope},
                          {"stderr", s.fit.stderr_},
                          {"expected", s.expected},
                          {"tolerance", s.tolerance},
                          {"within", s.within()}});
        auto& ch = j["checks"] = nlohmann::ordered_json::array();
        for (const auto& c : checks)
            ch.push_back({{"name", c.name}, {"passed", c.passed}, {"value", c.value}, {"threshold", c.threshold}});
        j["notes"] = notes;
        return j;
    }

    /// Writes results.csv, manifest.json and, when samples are attached, samples.bin.
    void write(const std::filesystem::path& dir) const {
        std::filesystem::create_directories(dir);
        {
            std::ofstream f(dir / "results.csv", std::ios::binary);
            f << table.to_csv();
            if (!f) throw std::runtime_error("cannot write results.csv");
        }
        {
            std::ofstream f(dir / "manifest.json", std::ios::binary);
            f << to_json().dump(2) << "\n";
            if (!f) throw std::runtime_error("cannot write manifest.json");
        }
        if (samples) write_samples(dir / "samples.bin", *samples);
    }

    /// Header: uint64 n, uint64 d; then n·d doubles row-major, all little-endian.
    static void write_samples(const std::filesystem::path& path, const EmpiricalSample& s) {
        std::ofstream f(path, std::ios::binary);
        auto put_u64 = [&](std::uint64_t v) {
            unsigned char b[8];
            for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
            f.write(reinterpret_cast<const char*>(b), 8);
        };
        put_u64(s.n());
        put_u64(s.d());
        for (double x : s.values()) {
            std::uint64_t bits;
            std::memcpy(&bits, &x, 8);
            put_u64(bits);
        }
        if (!f) throw std::runtime_error("cannot write samples.bin");
    }
};

/// Compact rendering for labels and notes (%.4g).
inline std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

/// Mean and standard error of a sample, reduced in index order.
struct MeanSe {
    double mean;
    double se;
};

inline MeanSe mean_se(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    CompensatedSum s;
    for (double x : v) s.add(x);
    const double m = s.value() / n;
    CompensatedSum q;
    for (double x : v) q.add((x - m) * (x - m));
    return {m, v.size() > 1 ? std::sqrt(q.value() / (n - 1) / n) : 0.0};
}

inline double correlation(const std::vector<double>& a, const std::vector<double>& b) {
    const double ma = mean_se(a).mean, mb = mean_se(b).mean;
    CompensatedSum sab, saa, sbb;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab.add((a[i] - ma) * (b[i] - mb));
        saa.add((a[i] - ma) * (a[i] - ma));
        sbb.add((b[i] - mb) * (b[i] - mb));
    }
    return sab.value() / std::sqrt(saa.value() * sbb.value());
}

inline double excess_kurtosis(const std::vector<double>& v) {
    const double m = mean_se(v).mean;
    CompensatedSum s2, s4;
    for (double x : v) {
        const double d = (x - m) * (x - m);
        s2.add(d);
        s4.add(d * d);
    }
    const double n = static_cast<double>(v.size()), m2 = s2.value() / n;
    return s4.value() / n / (m2 * m2) - 3.0;
}

/// Two-column sample from paired vectors.
inline EmpiricalSample pair_sample(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> v(2 * a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        v[2 * i] = a[i];
        v[2 * i + 1] = b[i];
    }
    return EmpiricalSample(a.size(), 2, std::move(v));
}

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace chaoslab::explab
