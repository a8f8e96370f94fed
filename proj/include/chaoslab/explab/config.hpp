#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace chaoslab::explab {

/// Raised for malformed files, unknown keys, bad values and parameters outside an experiment's region.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Plain-text `key = value` settings; `#` starts a comment, lists are comma separated.
class Config {
public:
    Config() = default;

    static Config parse(const std::string& text, const std::string& origin = "<string>") {
        Config c;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
            const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
            if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
            if (value.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty value for '" + key + "'");
            if (c.values_.count(key)) throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
            c.values_[key] = value;
        }
        return c;
    }

    static Config load(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw ConfigError("cannot open config file '" + path + "'");
        std::stringstream ss;
        ss << f.rdbuf();
        return parse(ss.str(), path);
    }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) > 0; }
    const std::map<std::string, std::string>& entries() const { return values_; }

    void require_known(const std::set<std::string>& allowed) const {
        for (const auto& [k, v] : values_)
            if (!allowed.count(k)) throw ConfigError("unknown config key '" + k + "'");
    }

    std::string get_string(const std::string& key, const std::string& def) const {
        auto it = values_.find(key);
        return it == values_.end() ? def : it->second;
    }

    double get_double(const std::string& key, double def) const {
        auto it = values_.find(key);
        return it == values_.end() ? def : to_double(key, it->second);
    }

    long long get_int(const std::string& key, long long def) const {
        auto it = values_.find(key);
        return it == values_.end() ? def : to_int(key, it->second);
    }

    std::vector<double> get_doubles(const std::string& key, const std::vector<double>& def) const {
        auto it = values_.find(key);
        if (it == values_.end()) return def;
        std::vector<double> out;
        for (const auto& item : split(it->second)) out.push_back(to_double(key, item));
        return out;
    }

    std::vector<long long> get_ints(const std::string& key, const std::vector<long long>& def) const {
        auto it = values_.find(key);
        if (it == values_.end()) return def;
        std::vector<long long> out;
        for (const auto& item : split(it->second)) out.push_back(to_int(key, item));
        return out;
    }

    std::optional<std::uint64_t> get_seed() const {
        auto it = values_.find("seed");
        if (it == values_.end()) return std::nullopt;
        std::uint64_t v = 0;
        const auto& s = it->second;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError("seed: expected an unsigned 64-bit integer");
        return v;
    }

private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    static std::vector<std::string> split(const std::string& s) {
        std::vector<std::string> out;
        std::string item;
        std::istringstream in(s);
        while (std::getline(in, item, ',')) out.push_back(trim(item));
        if (!s.empty() && s.back() == ',') out.push_back("");
        return out;
    }

    static double to_double(const std::string& key, const std::string& s) {
        double v = 0.0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || ec != std::errc() || p != s.data() + s.size())
            throw ConfigError(key + ": '" + s + "' is not a number");
        return v;
    }

    static long long to_int(const std::string& key, const std::string& s) {
        long long v = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || ec != std::errc() || p != s.data() + s.size())
            throw ConfigError(key + ": '" + s + "' is not an integer");
        return v;
    }

    std::map<std::string, std::string> values_;
};

/// N schedule: strictly increasing, every entry ≥ lo.
inline std::vector<int> validate_schedule(const std::vector<long long>& Ns, const std::string& key, int lo = 1,
                                          bool allow_empty = false) {
    if (Ns.empty() && !allow_empty) throw ConfigError(key + ": schedule must not be empty");
    std::vector<int> out;
    for (std::size_t i = 0; i < Ns.size(); ++i) {
        if (Ns[i] < lo || Ns[i] > (1LL << 30)) throw ConfigError(key + ": entries must lie in [" + std::to_string(lo) + ", 2^30]");
        if (i > 0 && Ns[i] <= Ns[i - 1]) throw ConfigError(key + ": schedule must be strictly increasing");
        out.push_back(static_cast<int>(Ns[i]));
    }
    return out;
}

inline void require(bool ok, const std::string& message) {
    if (!ok) throw ConfigError(message);
}

}  // namespace chaoslab::explab
