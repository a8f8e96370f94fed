#pragma once

#include <cstdint>
#include <set>
#include <string>

#include "chaoslab/explab/config.hpp"
#include "chaoslab/explab/report.hpp"

namespace chaoslab::explab {

struct RunOptions {
    std::uint64_t seed = 0;
    /// Validate every exact column against its brute-force oracle before the schedule runs.
    bool self_check = false;
};

/// An oracle disagreed with the production path.
class SelfCheckError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Stream seed for one sub-task; splitmix64 finalizer over (seed, tag).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (tag + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Keys accepted by every experiment.
inline std::set<std::string> with_common_keys(std::set<std::string> keys) {
    keys.insert({"seed", "workers", "slope_tolerance"});
    return keys;
}

inline unsigned workers_of(const Config& c) {
    const long long w = c.get_int("workers", 0);
    require(w >= 0 && w <= 1024, "workers must lie in [0, 1024]");
    return static_cast<unsigned>(w);
}

inline double slope_tolerance_of(const Config& c) {
    const double t = c.get_double("slope_tolerance", 0.15);
    require(t > 0.0, "slope_tolerance must be positive");
    return t;
}

/// Records an oracle comparison; in self-check mode a failure aborts the run.
inline void record_oracle(RunManifest& m, const RunOptions& opt, const std::string& name, double error,
                          double tolerance) {
    const bool ok = error <= tolerance;
    m.checks.push_back({name, ok, error, tolerance});
    if (opt.self_check && !ok)
        throw SelfCheckError("self-check '" + name + "' failed: error " + fmt(error) + " > " +
                             fmt(tolerance));
}

inline void start_manifest(RunManifest& m, const std::string& experiment, const Config& c, const RunOptions& opt) {
    m.experiment = experiment;
    m.seed = opt.seed;
    m.config = c.entries();
    m.config.erase("seed");
}

}  // namespace chaoslab::explab
