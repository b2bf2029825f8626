#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "mpmab/env.hpp"
#include "mpmab/validator.hpp"

namespace mpmab {

using json = nlohmann::json;

/// Doubles are written in shortest round-trip form, so loading a saved
/// instance reproduces every mean bit for bit.
inline json instance_to_json(const MpmabInstance& inst) {
    return json{{"M", inst.num_players},
                {"K", inst.num_arms},
                {"epsilon", inst.epsilon},
                {"means", inst.means},
                {"family", to_string(inst.family)},
                {"seed", inst.seed},
                {"target_subpar", inst.target_subpar}};
}

inline MpmabInstance instance_from_json(const json& j) {
    const std::string family = j.value("family", std::string("bernoulli"));
    if (family != "bernoulli") throw std::invalid_argument("unsupported reward family: " + family);
    MpmabInstance inst(j.at("M").get<int>(), j.at("K").get<int>(), j.at("epsilon").get<double>(),
                       j.at("means").get<std::vector<double>>());
    inst.family = RewardFamily::Bernoulli;
    inst.seed = j.value("seed", std::uint64_t{0});
    inst.target_subpar = j.value("target_subpar", -1);
    return inst;
}

inline void save_instance(const std::string& path, const MpmabInstance& inst) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << instance_to_json(inst).dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline MpmabInstance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    return instance_from_json(json::parse(in));
}

inline json report_to_json(const ConcCheckReport& r) {
    json j{{"estimate", r.estimate},
           {"direction", to_string(r.direction)},
           {"arm", r.arm + 1},
           {"k", r.k},
           {"delta", r.delta},
           {"episodes", r.episodes},
           {"stopped", r.stopped},
           {"violations", r.violations},
           {"rate", r.rate},
           {"bound", r.delta + r.slack},
           {"slack_3sigma", r.slack},
           {"count_range_failures", r.count_range_failures},
           {"insufficient_n", r.insufficient_n},
           {"verdict", r.pass ? "pass" : "fail"}};
    if (r.player >= 0) j["player"] = r.player + 1;
    return j;
}

/// FNV-1a over a byte string; stable across platforms and builds.
inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace mpmab
