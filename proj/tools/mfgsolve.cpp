// mfgsolve: run particle mean-field-game experiments from a JSON config or a
// built-in preset.
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mfg/experiment.hpp"

namespace {

struct Overrides {
    std::optional<std::string> output_dir;
    std::optional<long> max_iter;
    std::optional<double> tol;
    std::optional<int> threads;
    std::vector<int> slices;
};

void apply(const Overrides& o, mfg::ExperimentConfig& c)
{
    if (o.output_dir) c.output_dir = *o.output_dir;
    if (o.max_iter) c.solver.max_iter = *o.max_iter;
    if (o.tol) c.solver.tol = *o.tol;
    if (o.threads) c.solver.threads = *o.threads;
    if (!o.slices.empty()) c.density_slices = o.slices;
}

int run_solve(const std::string& source, const Overrides& o, bool quiet)
{
    mfg::ExperimentConfig config = mfg::resolve_config(source);
    apply(o, config);
    // Re-validate after overrides.
    config = mfg::parse_config(mfg::to_json(config));
    const auto outcome = mfg::run_experiment(config, quiet ? nullptr : &std::cerr);
    std::cout << outcome.metrics.dump(2) << '\n';
    if (outcome.exit_code == mfg::kExitDiverged) {
        std::cerr << "error: iteration diverged: " << outcome.result.message << '\n';
    }
    return outcome.exit_code;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Spectral particle solver for nonlocal mean-field games"};
    app.require_subcommand(1);

    std::string source;
    Overrides overrides;
    bool quiet = false;

    auto* solve = app.add_subcommand("solve", "Solve an experiment and write its artifacts");
    solve->add_option("config", source, "Config file or preset name")->required();
    solve->add_option("--output-dir", overrides.output_dir, "Artifact directory (overrides config)");
    solve->add_option("--max-iter", overrides.max_iter, "Iteration cap (overrides config)");
    solve->add_option("--tol", overrides.tol, "Step-norm tolerance (overrides config)");
    solve->add_option("--threads", overrides.threads, "Worker threads (overrides config)");
    solve->add_option("--density-slices", overrides.slices, "Time indices for density snapshots, e.g. 0,10,20")
        ->delimiter(',');
    solve->add_flag("-q,--quiet", quiet, "Suppress progress output");

    auto* info = app.add_subcommand("kernel-info", "Print spectral data of the configured kernel as JSON");
    info->add_option("config", source, "Config file or preset name")->required();

    auto* list = app.add_subcommand("presets", "List built-in experiments");
    bool verbose = false;
    list->add_flag("-v,--verbose", verbose, "Print full preset configurations");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*solve) return run_solve(source, overrides, quiet);
        if (*info) {
            std::cout << mfg::kernel_info(mfg::resolve_config(source)).dump(2) << '\n';
            return mfg::kExitOk;
        }
        if (verbose) {
            nlohmann::json all = nlohmann::json::array();
            for (const auto& name : mfg::preset_names()) all.push_back(mfg::to_json(mfg::preset(name)));
            std::cout << all.dump(2) << '\n';
        } else {
            for (const auto& row : mfg::preset_table()) {
                std::cout << row["name"].get<std::string>() << "  d=" << row["dimension"] << "  sigma=" << row["sigma"]
                          << "  mu=" << row["mu"] << "  N=" << row["N"] << "  Q=" << row["Q"] << "  r=" << row["r"]
                          << "  lambda=" << row["lambda"] << '\n';
            }
        }
        return mfg::kExitOk;
    } catch (const mfg::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return mfg::kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return mfg::kExitConfig;
    }
}
