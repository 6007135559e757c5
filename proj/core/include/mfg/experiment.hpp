#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mfg/pdhg.hpp"
#include "mfg/problem.hpp"

namespace mfg {

/// Invalid experiment configuration; `path()` names the offending field,
/// e.g. "kernel.sigma".
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string path, const std::string& what)
        : std::runtime_error(path.empty() ? what : path + ": " + what), path_(std::move(path))
    {
    }
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// Selection of M or U: a named formula, a constant, or a trigonometric
/// polynomial in the experiment's basis family.
struct FieldSpec {
    enum class Kind { preset, constant, trig };
    Kind kind = Kind::preset;
    std::string preset = "paper-1d";
    double constant = 0.0;
    std::vector<double> coefficients;
};

struct KernelConfig {
    std::string type = "gaussian";  // gaussian | custom-coefficients
    double sigma = 0.2;
    double mu = 0.5;
    std::vector<std::vector<double>> matrix;  // custom-coefficients only
    std::optional<double> epsilon;            // unset: automatic policy
};

struct ExperimentConfig {
    std::string name;
    int dimension = 1;
    KernelConfig kernel;
    int r = 8;
    int steps = 20;      // N
    int particles = 50;  // Q per axis
    SolverConfig solver;
    FieldSpec initial_density;
    FieldSpec terminal_cost;
    std::string output_dir = "out";
    int bins = 100;
    std::vector<int> density_slices;  // empty: 0, N/2, N
    std::uint64_t seed = 0;           // reserved, runs are deterministic
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& file);
nlohmann::json to_json(const ExperimentConfig& config);

std::vector<std::string> preset_names();
bool is_preset(std::string_view name);
/// Built-in experiment; throws ConfigError for an unknown name.
ExperimentConfig preset(std::string_view name);
/// Name, dimension, sigma, mu, N, Q, r, lambda, omega, theta per preset.
nlohmann::json preset_table();

/// Resolves a preset name or reads a config file.
ExperimentConfig resolve_config(const std::string& preset_or_path);

ScalarField make_density(const FieldSpec& spec, int dimension, const std::string& path);
ScalarField make_terminal_cost(const FieldSpec& spec, int dimension, const std::string& path);

struct Experiment {
    MFGProblem problem;
    DiscreteMeasure measure;
    double a_squared = 0.0;
    std::vector<std::string> warnings;
};

/// Builds kernel, problem and measure. Config problems raise ConfigError.
Experiment build_experiment(const ExperimentConfig& config);

/// Basis size, eigenvalues or blocks, min eigenvalue, epsilon, A^2 and the
/// omega * lambda check.
nlohmann::json kernel_info(const ExperimentConfig& config);

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitDiverged = 2;

struct RunOutcome {
    int exit_code = kExitOk;
    SolveResult result;
    nlohmann::json metrics;
};

/// Solves and writes trajectories.csv, density_t{i}.csv, diagnostics.jsonl
/// and metrics.json into config.output_dir. Progress goes to `log` if given.
RunOutcome run_experiment(const ExperimentConfig& config, std::ostream* log = nullptr);

}  // namespace mfg
