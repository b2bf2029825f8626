// Command-line driver: benchmark sweeps, concentration validation and
// instance generation.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mpmab/experiment.hpp"
#include "mpmab/io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<unsigned> workers;
    std::optional<std::string> preset;
};

void add_common(CLI::App& cmd, CommonFlags& f) {
    cmd.add_option("--config", f.config_path, "JSON config file")->check(CLI::ExistingFile);
    cmd.add_option("--seed", f.seed, "master seed (u64)");
    cmd.add_option("--out", f.out, "output directory");
    cmd.add_option("--workers", f.workers, "worker threads")->check(CLI::PositiveNumber);
    cmd.add_option("--preset", f.preset, "paper | smoke | analysis")
        ->check(CLI::IsMember({"paper", "smoke", "analysis"}));
}

/// Preset, then config file, then flags; later sources win.
mpmab::ExperimentConfig resolve(const CommonFlags& f) {
    mpmab::ExperimentConfig c = mpmab::preset_config(f.preset.value_or("paper"));
    if (!f.config_path.empty()) {
        std::ifstream in(f.config_path);
        mpmab::json j;
        try {
            j = mpmab::json::parse(in);
        } catch (const mpmab::json::exception& e) {
            throw mpmab::ConfigError(std::string("cannot parse config: ") + e.what());
        }
        if (f.preset) j.erase("preset");
        c = mpmab::config_from_json(j, c);
    }
    if (f.seed) c.seed = *f.seed;
    if (f.out) c.out_dir = *f.out;
    if (f.workers) c.workers = *f.workers;
    return c;
}

int cmd_run(const CommonFlags& f) {
    const auto c = resolve(f);
    const auto result = mpmab::run_sweep(c);
    mpmab::write_sweep(c, result);
    std::cerr << "wrote " << result.records.size() << " runs to " << c.out_dir << '\n';
    return kExitOk;
}

int cmd_validate(const CommonFlags& f) {
    const auto c = resolve(f);
    const auto result = mpmab::run_validation(c.validate, c.seed, c.workers);
    mpmab::json arr = mpmab::json::array();
    for (const auto& r : result.reports) arr.push_back(mpmab::report_to_json(r));
    std::cout << arr.dump(2) << '\n';
    if (f.out) {
        std::filesystem::create_directories(*f.out);
        std::ofstream out(std::filesystem::path(*f.out) / "validate.json");
        out << arr.dump(2) << '\n';
    }
    for (const auto& r : result.reports)
        if (r.insufficient_n)
            std::cerr << "warning: insufficient N for delta=" << r.delta << " (3-sigma slack " << r.slack
                      << " exceeds delta)\n";
    return result.all_pass() ? kExitOk : kExitCheckFailed;
}

int cmd_gen_instances(const CommonFlags& f) {
    const auto c = resolve(f);
    const auto instances = mpmab::generate_instances(c);
    const std::filesystem::path dir = std::filesystem::path(c.out_dir) / "instances";
    std::filesystem::create_directories(dir);
    for (const auto& [key, inst] : instances)
        mpmab::save_instance(
            (dir / ("v" + std::to_string(key.first) + "_i" + std::to_string(key.second) + ".json")).string(), inst);
    std::cerr << "wrote " << instances.size() << " instances to " << dir.string() << '\n';
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-task bandit benchmark and concentration validator"};
    app.require_subcommand(1);

    CommonFlags run_flags, validate_flags, gen_flags;
    auto* run = app.add_subcommand("run", "run the benchmark sweep and write summary.csv");
    add_common(*run, run_flags);
    auto* validate = app.add_subcommand("validate", "Monte-Carlo check of the concentration bounds");
    add_common(*validate, validate_flags);
    auto* gen = app.add_subcommand("gen-instances", "generate and save problem instances");
    add_common(*gen, gen_flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (run->parsed()) return cmd_run(run_flags);
        if (validate->parsed()) return cmd_validate(validate_flags);
        if (gen->parsed()) return cmd_gen_instances(gen_flags);
    } catch (const mpmab::ConfigError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const mpmab::InfeasibleParameters& e) {
        std::cerr << "infeasible parameters: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitCheckFailed;
    }
    return kExitUsage;
}
