#pragma once

#include <functional>
#include <map>
#include <string>

#include "chaoslab/explab/central_noncentral.hpp"
#include "chaoslab/explab/counterexample.hpp"
#include "chaoslab/explab/hurst.hpp"
#include "chaoslab/explab/infinite_chaos.hpp"
#include "chaoslab/explab/joint_clt.hpp"
#include "chaoslab/explab/sde.hpp"

namespace chaoslab::explab {

using Runner = std::function<RunManifest(const Config&, const RunOptions&)>;

inline const std::map<std::string, Runner>& experiments() {
    static const std::map<std::string, Runner> table{
        {"joint-clt", run_joint_clt},
        {"infinite-chaos", run_infinite_chaos},
        {"central-noncentral", run_central_noncentral},
        {"counterexample", run_counterexample},
        {"sde", run_sde},
        {"hurst", run_hurst},
    };
    return table;
}

inline RunManifest run_experiment(const std::string& name, const Config& cfg, const RunOptions& opt) {
    const auto it = experiments().find(name);
    if (it == experiments().end()) throw ConfigError("unknown experiment '" + name + "'");
    return it->second(cfg, opt);
}

}  // namespace chaoslab::explab
