#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpmab/env.hpp"
#include "mpmab/io.hpp"
#include "mpmab/metrics.hpp"
#include "mpmab/parallel.hpp"
#include "mpmab/policies.hpp"
#include "mpmab/protocol.hpp"
#include "mpmab/schedule.hpp"
#include "mpmab/validator.hpp"

namespace mpmab {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Settings for the concentration-check grid run by `validate`.
struct ValidateConfig {
    int num_players = 5;
    int num_arms = 3;
    double epsilon = 0.1;
    Round horizon = 2000;
    int v_subpar = 1;
    std::vector<std::int64_t> ks{1, 50, 200};
    std::vector<double> deltas{0.1, 0.05};
    std::int64_t episodes = 2000;
    PlayerId ind_player = 0;  // 0-based internally
};

struct ExperimentConfig {
    int num_players = 20;
    int num_arms = 10;
    double epsilon = 0.15;
    Round horizon = 50000;
    ScheduleKind schedule = ScheduleKind::Concurrent;
    double subset_q = 0.5;
    std::string schedule_file;
    std::vector<int> v_values{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    int instances_per_v = 30;
    std::vector<Algorithm> algorithms{Algorithm::RobustAggTs, Algorithm::RobustAggUcb, Algorithm::IndTs,
                                      Algorithm::IndUcb};
    std::string constants = "experiment";  // or "analysis"
    TieBreak tie_break = TieBreak::LowestIndex;
    bool ucb_global_time = false;
    std::uint64_t seed = 0;
    int checkpoints = 100;
    std::string out_dir = "out";
    unsigned workers = 1;
    ValidateConfig validate;

    ConstantsPreset preset_constants() const {
        if (constants == "experiment") return ConstantsPreset::experiment();
        if (constants == "analysis") return ConstantsPreset::analysis();
        throw ConfigError("unknown constants preset: " + constants);
    }

    void check() const {
        if (num_players <= 0 || num_arms <= 0) throw ConfigError("M and K must be positive");
        if (horizon < 1) throw ConfigError("T must be positive");
        if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0,1]");
        if (instances_per_v <= 0) throw ConfigError("instances_per_v must be positive");
        if (checkpoints <= 0) throw ConfigError("checkpoints must be positive");
        if (algorithms.empty()) throw ConfigError("no algorithms selected");
        for (int v : v_values)
            if (v < 0 || v > num_arms - 1) throw ConfigError("v values must lie in [0, K-1]");
        if (schedule == ScheduleKind::RandomSubset && !(subset_q >= 0.0 && subset_q <= 1.0))
            throw ConfigError("subset_q must lie in [0,1]");
        if (schedule == ScheduleKind::FromFile && schedule_file.empty())
            throw ConfigError("schedule kind 'file' needs schedule_file");
        if (workers == 0) throw ConfigError("workers must be positive");
        preset_constants();
    }
};

/// paper: the full benchmark grid. smoke: a minimal end-to-end run.
/// analysis: paper grid with the constants under which the bounds are proved.
inline ExperimentConfig preset_config(const std::string& name) {
    ExperimentConfig c;
    if (name == "paper") return c;
    if (name == "analysis") {
        c.constants = "analysis";
        return c;
    }
    if (name == "smoke") {
        c.num_players = 2;
        c.num_arms = 2;
        c.horizon = 100;
        c.v_values = {1};
        c.instances_per_v = 1;
        c.algorithms = {Algorithm::RobustAggTs};
        c.validate.episodes = 200;
        c.validate.horizon = 300;
        return c;
    }
    throw ConfigError("unknown preset: " + name);
}

// ---------------------------------------------------------------------------
// JSON config
// ---------------------------------------------------------------------------

inline json config_to_json(const ExperimentConfig& c) {
    json algs = json::array();
    for (auto a : c.algorithms) algs.push_back(to_string(a));
    return json{{"M", c.num_players},
                {"K", c.num_arms},
                {"epsilon", c.epsilon},
                {"T", c.horizon},
                {"schedule", to_string(c.schedule)},
                {"subset_q", c.subset_q},
                {"schedule_file", c.schedule_file},
                {"v_values", c.v_values},
                {"instances_per_v", c.instances_per_v},
                {"algorithms", algs},
                {"constants", c.constants},
                {"tie_break", to_string(c.tie_break)},
                {"ucb_global_time", c.ucb_global_time},
                {"seed", c.seed},
                {"checkpoints", c.checkpoints},
                {"validate",
                 {{"M", c.validate.num_players},
                  {"K", c.validate.num_arms},
                  {"epsilon", c.validate.epsilon},
                  {"T", c.validate.horizon},
                  {"v", c.validate.v_subpar},
                  {"ks", c.validate.ks},
                  {"deltas", c.validate.deltas},
                  {"episodes", c.validate.episodes},
                  {"ind_player", c.validate.ind_player + 1}}}};
}

/// Overlays keys present in `j` onto `base`. Unknown keys are rejected.
inline ExperimentConfig config_from_json(const json& j, ExperimentConfig base = {}) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    static const std::vector<std::string> known{
        "M",         "K",          "epsilon",   "T",     "schedule",        "subset_q", "schedule_file",
        "v_values",  "instances_per_v", "algorithms", "constants", "tie_break", "ucb_global_time", "seed",
        "checkpoints", "out_dir",  "workers",   "validate", "preset"};
    for (const auto& [key, _] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end()) throw ConfigError("unknown config key: " + key);
    try {
        ExperimentConfig c = j.contains("preset") ? preset_config(j.at("preset").get<std::string>()) : std::move(base);
        if (j.contains("M")) c.num_players = j.at("M").get<int>();
        if (j.contains("K")) c.num_arms = j.at("K").get<int>();
        if (j.contains("epsilon")) c.epsilon = j.at("epsilon").get<double>();
        if (j.contains("T")) c.horizon = j.at("T").get<Round>();
        if (j.contains("schedule")) c.schedule = parse_schedule_kind(j.at("schedule").get<std::string>());
        if (j.contains("subset_q")) c.subset_q = j.at("subset_q").get<double>();
        if (j.contains("schedule_file")) c.schedule_file = j.at("schedule_file").get<std::string>();
        if (j.contains("v_values")) c.v_values = j.at("v_values").get<std::vector<int>>();
        if (j.contains("instances_per_v")) c.instances_per_v = j.at("instances_per_v").get<int>();
        if (j.contains("algorithms")) {
            c.algorithms.clear();
            for (const auto& a : j.at("algorithms")) c.algorithms.push_back(parse_algorithm(a.get<std::string>()));
        }
        if (j.contains("constants")) c.constants = j.at("constants").get<std::string>();
        if (j.contains("tie_break")) c.tie_break = parse_tie_break(j.at("tie_break").get<std::string>());
        if (j.contains("ucb_global_time")) c.ucb_global_time = j.at("ucb_global_time").get<bool>();
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("checkpoints")) c.checkpoints = j.at("checkpoints").get<int>();
        if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
        if (j.contains("workers")) c.workers = j.at("workers").get<unsigned>();
        if (j.contains("validate")) {
            const auto& v = j.at("validate");
            auto& cv = c.validate;
            if (v.contains("M")) cv.num_players = v.at("M").get<int>();
            if (v.contains("K")) cv.num_arms = v.at("K").get<int>();
            if (v.contains("epsilon")) cv.epsilon = v.at("epsilon").get<double>();
            if (v.contains("T")) cv.horizon = v.at("T").get<Round>();
            if (v.contains("v")) cv.v_subpar = v.at("v").get<int>();
            if (v.contains("ks")) cv.ks = v.at("ks").get<std::vector<std::int64_t>>();
            if (v.contains("deltas")) cv.deltas = v.at("deltas").get<std::vector<double>>();
            if (v.contains("episodes")) cv.episodes = v.at("episodes").get<std::int64_t>();
            if (v.contains("ind_player")) cv.ind_player = v.at("ind_player").get<int>() - 1;
        }
        return c;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

inline std::uint64_t config_hash(const ExperimentConfig& c) { return fnv1a64(config_to_json(c).dump()); }

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

inline int algorithm_id(Algorithm a) { return static_cast<int>(a); }

inline std::uint64_t instance_seed(std::uint64_t master, int v, int index) {
    return hash_words(substream_seed(master, StreamTag::Instance), v, index);
}

inline std::uint64_t schedule_seed(std::uint64_t master, int v, int index) {
    return hash_words(substream_seed(master, StreamTag::Schedule), v, index);
}

inline std::uint64_t run_seed(std::uint64_t master, int v, int index, Algorithm a) {
    return hash_words(substream_seed(master, StreamTag::Episode), v, index, algorithm_id(a));
}

struct RunJob {
    std::int64_t run_id;
    int v;
    int instance_index;
    Algorithm algorithm;
    std::uint64_t instance_seed;
    std::uint64_t schedule_seed;
    std::uint64_t run_seed;
};

inline std::vector<RunJob> plan_jobs(const ExperimentConfig& c) {
    std::vector<RunJob> jobs;
    std::int64_t id = 0;
    for (int v : c.v_values)
        for (int idx = 0; idx < c.instances_per_v; ++idx)
            for (auto a : c.algorithms)
                jobs.push_back({id++, v, idx, a, instance_seed(c.seed, v, idx), schedule_seed(c.seed, v, idx),
                                run_seed(c.seed, v, idx, a)});
    return jobs;
}

inline PolicyConfig policy_config(const ExperimentConfig& c, Algorithm a) {
    const auto k = c.preset_constants();
    PolicyConfig p;
    p.algorithm = a;
    p.num_players = c.num_players;
    p.num_arms = c.num_arms;
    p.horizon = c.horizon;
    p.epsilon = c.epsilon;
    p.c1 = k.c1;
    p.c2 = k.c2;
    p.ucb_width = k.ucb_width;
    p.tie_break = c.tie_break;
    p.ucb_global_time = c.ucb_global_time;
    return p;
}

inline Schedule build_schedule(const ExperimentConfig& c, std::uint64_t seed) {
    if (c.schedule == ScheduleKind::FromFile) {
        std::ifstream in(c.schedule_file);
        if (!in) throw ConfigError("cannot read schedule file " + c.schedule_file);
        return read_schedule(in, c.num_players);
    }
    return make_schedule(c.schedule, c.num_players, c.horizon, seed, c.subset_q);
}

struct SweepResult {
    std::vector<RunJob> jobs;
    std::vector<RunRecord> records;                     // indexed by run_id
    std::map<std::pair<int, int>, MpmabInstance> instances;  // (v, index)
};

/// Runs every (v, instance, algorithm) job. Results are keyed by run_id, so
/// the output does not depend on `workers`.
inline SweepResult run_sweep(const ExperimentConfig& c) {
    c.check();
    SweepResult out;
    out.jobs = plan_jobs(c);

    for (int v : c.v_values)
        for (int idx = 0; idx < c.instances_per_v; ++idx)
            out.instances.emplace(std::pair{v, idx},
                                  generate_instance(c.num_players, c.num_arms, c.epsilon, v, instance_seed(c.seed, v, idx)));

    std::optional<Schedule> shared;
    if (c.schedule == ScheduleKind::Concurrent || c.schedule == ScheduleKind::Sequential ||
        c.schedule == ScheduleKind::FromFile)
        shared = build_schedule(c, 0);
    const auto checkpoints = default_checkpoints(shared ? shared->horizon() : c.horizon, c.checkpoints);

    out.records.resize(out.jobs.size());
    parallel_for(out.jobs.size(), c.workers, [&](std::size_t n) {
        const auto& job = out.jobs[n];
        const auto& inst = out.instances.at({job.v, job.instance_index});
        std::optional<Schedule> own;
        if (!shared) own = build_schedule(c, job.schedule_seed);
        const Schedule& schedule = shared ? *shared : *own;
        auto policy = make_policy(policy_config(c, job.algorithm));
        const auto trace = run_episode(inst, schedule, *policy, job.run_seed);
        const auto gaps = compute_gaps(inst);
        const CategoryTable cats(gaps, subpar_set(gaps, categorization_alpha(inst.epsilon)));

        RunRecord& rec = out.records[n];
        rec.run_id = job.run_id;
        rec.algorithm = to_string(job.algorithm);
        rec.instance_seed = job.instance_seed;
        rec.schedule_kind = to_string(c.schedule);
        rec.v_subpar = job.v;
        rec.total_activations = schedule.total_activations();
        rec.summary = summarize_run(trace, gaps, cats, checkpoints);
    });
    return out;
}

/// Writes summary.csv, instances/*.json, config.json and manifest.json.
inline void write_sweep(const ExperimentConfig& c, const SweepResult& r) {
    namespace fs = std::filesystem;
    const fs::path dir(c.out_dir);
    fs::create_directories(dir / "instances");

    auto open = [](const fs::path& p) {
        std::ofstream f(p, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + p.string());
        return f;
    };

    {
        auto f = open(dir / "summary.csv");
        write_summary_csv(f, r.records);
        if (!f) throw std::runtime_error("write failed: summary.csv");
    }
    for (const auto& [key, inst] : r.instances) {
        auto f = open(dir / "instances" / ("v" + std::to_string(key.first) + "_i" + std::to_string(key.second) + ".json"));
        f << instance_to_json(inst).dump(2) << '\n';
    }
    {
        auto cfg = config_to_json(c);
        cfg["config_hash"] = config_hash(c);
        auto f = open(dir / "config.json");
        f << cfg.dump(2) << '\n';
    }
    {
        json runs = json::array();
        for (const auto& job : r.jobs)
            runs.push_back({{"run_id", job.run_id},
                            {"algorithm", to_string(job.algorithm)},
                            {"v", job.v},
                            {"instance_index", job.instance_index},
                            {"instance_seed", job.instance_seed},
                            {"schedule_seed", job.schedule_seed},
                            {"run_seed", job.run_seed}});
        auto f = open(dir / "manifest.json");
        f << json{{"master_seed", c.seed}, {"config_hash", config_hash(c)}, {"runs", runs}}.dump(2) << '\n';
    }
}

/// Instances only, as `gen-instances` writes them.
inline std::map<std::pair<int, int>, MpmabInstance> generate_instances(const ExperimentConfig& c) {
    c.check();
    std::map<std::pair<int, int>, MpmabInstance> out;
    for (int v : c.v_values)
        for (int idx = 0; idx < c.instances_per_v; ++idx)
            out.emplace(std::pair{v, idx},
                        generate_instance(c.num_players, c.num_arms, c.epsilon, v, instance_seed(c.seed, v, idx)));
    return out;
}

struct ValidateResult {
    MpmabInstance instance;
    std::vector<ConcCheckReport> reports;
    bool all_pass() const {
        return std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.pass; });
    }
};

/// Concentration checks under uniform-random exploration on a concurrent
/// schedule: aggregate bounds for every arm, individual bounds for one player.
inline ValidateResult run_validation(const ValidateConfig& v, std::uint64_t master, unsigned workers) {
    if (v.episodes <= 0) throw ConfigError("validate.episodes must be positive");
    if (v.ind_player < 0 || v.ind_player >= v.num_players) throw ConfigError("validate.ind_player out of range");
    ValidateResult out;
    out.instance = generate_instance(v.num_players, v.num_arms, v.epsilon, v.v_subpar,
                                     hash_words(substream_seed(master, StreamTag::Instance), 0xa11));
    const auto schedule = make_schedule(ScheduleKind::Concurrent, v.num_players, v.horizon, 0);
    PolicyConfig pc;
    pc.algorithm = Algorithm::UniformRandom;
    pc.num_players = v.num_players;
    pc.num_arms = v.num_arms;
    pc.horizon = v.horizon;
    pc.epsilon = v.epsilon;
    const auto policy = make_policy(pc);

    ConcGrid grid;
    for (ArmId j = 0; j < v.num_arms; ++j) grid.arms.push_back(j);
    grid.ks = v.ks;
    grid.deltas = v.deltas;
    const auto episode_seed = substream_seed(master, StreamTag::Episode);
    out.reports = check_agg_concentration_grid(out.instance, schedule, *policy, grid, v.episodes, episode_seed, workers);

    ConcGrid ind = grid;
    ind.ks.clear();
    for (auto k : v.ks)
        if (k <= v.horizon) ind.ks.push_back(k);
    if (!ind.ks.empty()) {
        auto r = check_ind_concentration_grid(out.instance, schedule, *policy, v.ind_player, ind, v.episodes,
                                              hash_words(episode_seed, 0x1d), workers);
        out.reports.insert(out.reports.end(), r.begin(), r.end());
    }
    return out;
}

}  // namespace mpmab
