#include "mfg/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <set>

#include <Eigen/Eigenvalues>

#include "mfg/postprocess.hpp"

namespace mfg {

namespace {

using nlohmann::json;
using std::numbers::pi;

std::string join(const std::string& base, const std::string& key)
{
    return base.empty() ? key : base + "." + key;
}

void reject_unknown(const json& j, const std::string& path, std::initializer_list<const char*> allowed)
{
    for (const auto& [key, value] : j.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
        if (!known) throw ConfigError(join(path, key), "unknown field");
    }
}

const json* find(const json& j, const char* key)
{
    const auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

double read_real(const json& j, const std::string& path)
{
    if (!j.is_number()) throw ConfigError(path, "expected a number");
    return j.get<double>();
}

long read_integer(const json& j, const std::string& path)
{
    if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
    return j.get<long>();
}

int read_int(const json& j, const std::string& path)
{
    const long v = read_integer(j, path);
    if (v < -2147483647L || v > 2147483647L) throw ConfigError(path, "integer out of range");
    return static_cast<int>(v);
}

std::vector<double> read_reals(const json& j, const std::string& path)
{
    if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(read_real(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

FieldSpec read_field(const json& j, const std::string& path)
{
    FieldSpec f;
    if (j.is_string()) {
        f.kind = FieldSpec::Kind::preset;
        f.preset = j.get<std::string>();
        return f;
    }
    if (j.is_number()) {
        f.kind = FieldSpec::Kind::constant;
        f.constant = j.get<double>();
        return f;
    }
    if (!j.is_object()) throw ConfigError(path, "expected a preset name, a number or an object");
    reject_unknown(j, path, {"preset", "constant", "trig"});
    if (j.size() != 1) throw ConfigError(path, "specify exactly one of preset, constant, trig");
    if (const json* v = find(j, "preset")) {
        if (!v->is_string()) throw ConfigError(join(path, "preset"), "expected a string");
        f.kind = FieldSpec::Kind::preset;
        f.preset = v->get<std::string>();
    } else if (const json* c = find(j, "constant")) {
        f.kind = FieldSpec::Kind::constant;
        f.constant = read_real(*c, join(path, "constant"));
    } else {
        f.kind = FieldSpec::Kind::trig;
        f.coefficients = read_reals(j["trig"], join(path, "trig"));
    }
    return f;
}

json field_to_json(const FieldSpec& f)
{
    switch (f.kind) {
    case FieldSpec::Kind::preset: return f.preset;
    case FieldSpec::Kind::constant: return json{{"constant", f.constant}};
    case FieldSpec::Kind::trig: return json{{"trig", f.coefficients}};
    }
    return nullptr;
}

void validate_config(const ExperimentConfig& c)
{
    if (c.dimension != 1 && c.dimension != 2) throw ConfigError("dimension", "must be 1 or 2");
    if (c.r < (c.dimension == 1 ? 1 : 2)) {
        throw ConfigError("r", c.dimension == 1 ? "must be >= 1" : "must be >= 2 in two dimensions");
    }
    if (c.steps < 1) throw ConfigError("N", "must be >= 1");
    if (c.particles < 1) throw ConfigError("Q", "must be >= 1");
    if (c.bins < 2) throw ConfigError("output.bins", "must be >= 2");
    for (std::size_t i = 0; i < c.density_slices.size(); ++i) {
        if (c.density_slices[i] < 0 || c.density_slices[i] > c.steps) {
            throw ConfigError("output.density_slices[" + std::to_string(i) + "]", "outside [0, N]");
        }
    }
    try {
        c.solver.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("solver", e.what());
    }
    if (c.kernel.type == "gaussian") {
        if (!(c.kernel.sigma > 0.0) || !std::isfinite(c.kernel.sigma)) throw ConfigError("kernel.sigma", "must be > 0");
        if (!(c.kernel.mu > 0.0) || !std::isfinite(c.kernel.mu)) throw ConfigError("kernel.mu", "must be > 0");
    } else if (c.kernel.type == "custom-coefficients") {
        if (c.kernel.matrix.empty()) throw ConfigError("kernel.matrix", "required for custom-coefficients");
    } else {
        throw ConfigError("kernel.type", "expected gaussian or custom-coefficients, got '" + c.kernel.type + "'");
    }
    if (c.kernel.epsilon && !(*c.kernel.epsilon >= 0.0)) throw ConfigError("kernel.epsilon", "must be >= 0");
}

BasisSet basis_for(int dimension, int r)
{
    return dimension == 1 ? BasisSet::one_dimensional(r) : BasisSet::tensor(r);
}

// Trig polynomial on the smallest basis of the right family with exactly
// coefficients.size() functions.
ScalarField trig_field(const std::vector<double>& coefficients, int dimension, const std::string& path)
{
    const int m = static_cast<int>(coefficients.size());
    if (m == 0) throw ConfigError(path, "empty coefficient list");
    if (dimension == 1) return trig_polynomial(BasisSet::one_dimensional(m), coefficients);
    for (int s = 2; s * (s - 1) / 2 <= m; ++s) {
        if (s * (s - 1) / 2 == m) return trig_polynomial(BasisSet::tensor(s), coefficients);
    }
    throw ConfigError(path, "two-dimensional coefficient count must be r(r-1)/2 for some r");
}

void check_preset_dimension(const FieldSpec& spec, int dimension, const std::string& path)
{
    const bool ok = (spec.preset == "paper-1d" && dimension == 1) || (spec.preset == "paper-2d" && dimension == 2);
    if (!ok) {
        throw ConfigError(path, "unknown preset '" + spec.preset + "' for dimension " + std::to_string(dimension) +
                                    " (expected paper-" + std::to_string(dimension) + "d)");
    }
}

SpectralKernel build_kernel(const ExperimentConfig& c, std::vector<std::string>& warnings)
{
    const BasisSet basis = basis_for(c.dimension, c.r);
    if (c.kernel.type == "gaussian") {
        const GaussianKernelSpec spec{c.kernel.sigma, c.kernel.mu, c.dimension};
        SpectralKernel k = c.dimension == 1 ? gaussian_spectral_1d(spec, c.r) : gaussian_spectral_2d(spec, c.r);
        if (c.kernel.epsilon && *c.kernel.epsilon > 0.0) k = regularize(k, *c.kernel.epsilon);
        return k;
    }

    const int n = basis.size();
    const auto& rows = c.kernel.matrix;
    if (static_cast<int>(rows.size()) != n) {
        throw ConfigError("kernel.matrix", "expected " + std::to_string(n) + " rows for the basis, got " +
                                               std::to_string(rows.size()));
    }
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(rows[i].size()) != n) {
            throw ConfigError("kernel.matrix[" + std::to_string(i) + "]", "expected " + std::to_string(n) + " entries");
        }
        for (int j = 0; j < n; ++j) m(i, j) = rows[i][j];
    }
    double min_eig = 0.0;
    try {
        min_eig = psd_check(m);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("kernel.matrix", e.what());
    }
    if (min_eig < -kSingularEigenvalue) {
        throw ConfigError("kernel.matrix", "not positive semidefinite (min eigenvalue " + format_real(min_eig) + ")");
    }
    SpectralKernel k = SpectralKernel::dense(basis, m);
    if (!c.kernel.epsilon) return with_default_regularization(k);
    if (*c.kernel.epsilon > 0.0) return regularize(k, *c.kernel.epsilon);
    if (min_eig < kSingularEigenvalue) {
        warnings.push_back("epsilon = 0 on a singular coefficient matrix (min eigenvalue " + format_real(min_eig) +
                           "); J does not exist and the solver cannot run");
    }
    return k;
}

ExperimentConfig paper_preset(std::string name, int dimension, double sigma, double mu)
{
    ExperimentConfig c;
    c.name = name;
    c.dimension = dimension;
    c.kernel.sigma = sigma;
    c.kernel.mu = mu;
    c.r = 8;
    c.steps = 20;
    c.particles = dimension == 1 ? 50 : 20;
    c.solver.lambda = dimension == 1 ? 3.0 : 1.0;
    c.solver.omega = 1.0 / 12.0;
    c.solver.theta = 1.0;
    c.solver.max_iter = dimension == 1 ? 100000 : 50000;
    c.solver.tol = dimension == 1 ? 1e-8 : 1e-5;
    c.initial_density.preset = c.terminal_cost.preset = dimension == 1 ? "paper-1d" : "paper-2d";
    c.output_dir = std::move(name);
    c.bins = dimension == 1 ? 100 : 50;
    return c;
}

const std::vector<ExperimentConfig>& presets()
{
    static const std::vector<ExperimentConfig> all = {
        paper_preset("paper-1d-a", 1, 0.2, 0.5), paper_preset("paper-1d-b", 1, 0.2, 1.5),
        paper_preset("paper-1d-c", 1, 0.8, 0.5), paper_preset("paper-2d-a", 2, 0.1, 0.75),
        paper_preset("paper-2d-b", 2, 0.1, 0.5), paper_preset("paper-2d-c", 2, 1.0, 0.5),
    };
    return all;
}

std::vector<int> slices_for(const ExperimentConfig& c)
{
    std::vector<int> s = c.density_slices;
    if (s.empty()) s = {0, c.steps / 2, c.steps};
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
}

json record_to_json(const IterationRecord& r)
{
    return json{{"iter", r.iteration},
                {"saddle_value", r.saddle_value},
                {"residual", r.residual},
                {"a_step", r.a_step},
                {"x_step", r.x_step}};
}

std::ofstream open_output(const std::filesystem::path& p)
{
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    return out;
}

}  // namespace

ExperimentConfig parse_config(const json& j)
{
    if (!j.is_object()) throw ConfigError("", "configuration must be a JSON object");
    reject_unknown(j, "",
                   {"name", "preset", "dimension", "kernel", "r", "N", "Q", "solver", "initial_density",
                    "terminal_cost", "output", "seed"});

    ExperimentConfig c;
    if (const json* p = find(j, "preset")) {
        if (!p->is_string()) throw ConfigError("preset", "expected a string");
        c = preset(p->get<std::string>());
    } else {
        // Without a base preset, start from the reference setup of the requested dimension.
        const json* d = find(j, "dimension");
        c = preset(d && read_int(*d, "dimension") == 2 ? "paper-2d-b" : "paper-1d-a");
        c.name.clear();
        c.output_dir = "out";
    }
    if (const json* v = find(j, "name")) {
        if (!v->is_string()) throw ConfigError("name", "expected a string");
        c.name = v->get<std::string>();
    }
    if (const json* v = find(j, "dimension")) c.dimension = read_int(*v, "dimension");
    if (const json* v = find(j, "r")) c.r = read_int(*v, "r");
    if (const json* v = find(j, "N")) c.steps = read_int(*v, "N");
    if (const json* v = find(j, "Q")) c.particles = read_int(*v, "Q");
    if (const json* v = find(j, "seed")) {
        if (!v->is_number_unsigned() && !v->is_number_integer()) throw ConfigError("seed", "expected an integer");
        c.seed = v->get<std::uint64_t>();
    }

    if (const json* k = find(j, "kernel")) {
        if (!k->is_object()) throw ConfigError("kernel", "expected an object");
        reject_unknown(*k, "kernel", {"type", "sigma", "mu", "matrix", "epsilon"});
        if (const json* v = find(*k, "type")) {
            if (!v->is_string()) throw ConfigError("kernel.type", "expected a string");
            c.kernel.type = v->get<std::string>();
        }
        if (const json* v = find(*k, "sigma")) c.kernel.sigma = read_real(*v, "kernel.sigma");
        if (const json* v = find(*k, "mu")) c.kernel.mu = read_real(*v, "kernel.mu");
        if (const json* v = find(*k, "epsilon")) {
            if (v->is_null()) {
                c.kernel.epsilon.reset();
            } else {
                c.kernel.epsilon = read_real(*v, "kernel.epsilon");
            }
        }
        if (const json* v = find(*k, "matrix")) {
            if (!v->is_array()) throw ConfigError("kernel.matrix", "expected an array of rows");
            c.kernel.matrix.clear();
            for (std::size_t i = 0; i < v->size(); ++i) {
                c.kernel.matrix.push_back(read_reals((*v)[i], "kernel.matrix[" + std::to_string(i) + "]"));
            }
        }
    }

    if (const json* s = find(j, "solver")) {
        if (!s->is_object()) throw ConfigError("solver", "expected an object");
        reject_unknown(*s, "solver",
                       {"lambda", "omega", "theta", "max_iter", "tol", "record_every", "threads", "divergence_bound"});
        if (const json* v = find(*s, "lambda")) c.solver.lambda = read_real(*v, "solver.lambda");
        if (const json* v = find(*s, "omega")) c.solver.omega = read_real(*v, "solver.omega");
        if (const json* v = find(*s, "theta")) c.solver.theta = read_real(*v, "solver.theta");
        if (const json* v = find(*s, "max_iter")) c.solver.max_iter = read_integer(*v, "solver.max_iter");
        if (const json* v = find(*s, "tol")) c.solver.tol = read_real(*v, "solver.tol");
        if (const json* v = find(*s, "record_every")) c.solver.record_every = read_integer(*v, "solver.record_every");
        if (const json* v = find(*s, "threads")) c.solver.threads = read_int(*v, "solver.threads");
        if (const json* v = find(*s, "divergence_bound")) {
            c.solver.divergence_bound = read_real(*v, "solver.divergence_bound");
        }
    }

    if (const json* v = find(j, "initial_density")) c.initial_density = read_field(*v, "initial_density");
    if (const json* v = find(j, "terminal_cost")) c.terminal_cost = read_field(*v, "terminal_cost");

    if (const json* o = find(j, "output")) {
        if (!o->is_object()) throw ConfigError("output", "expected an object");
        reject_unknown(*o, "output", {"dir", "bins", "density_slices"});
        if (const json* v = find(*o, "dir")) {
            if (!v->is_string()) throw ConfigError("output.dir", "expected a string");
            c.output_dir = v->get<std::string>();
        }
        if (const json* v = find(*o, "bins")) c.bins = read_int(*v, "output.bins");
        if (const json* v = find(*o, "density_slices")) {
            if (!v->is_array()) throw ConfigError("output.density_slices", "expected an array of integers");
            c.density_slices.clear();
            for (std::size_t i = 0; i < v->size(); ++i) {
                c.density_slices.push_back(read_int((*v)[i], "output.density_slices[" + std::to_string(i) + "]"));
            }
        }
    }

    validate_config(c);
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& file)
{
    std::ifstream in(file);
    if (!in) throw ConfigError("", "cannot open config file " + file.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("", file.string() + ": " + e.what());
    }
    return parse_config(j);
}

json to_json(const ExperimentConfig& c)
{
    json kernel{{"type", c.kernel.type}};
    if (c.kernel.type == "gaussian") {
        kernel["sigma"] = c.kernel.sigma;
        kernel["mu"] = c.kernel.mu;
    } else {
        kernel["matrix"] = c.kernel.matrix;
    }
    if (c.kernel.epsilon) kernel["epsilon"] = *c.kernel.epsilon;
    json j{{"name", c.name},
           {"dimension", c.dimension},
           {"kernel", kernel},
           {"r", c.r},
           {"N", c.steps},
           {"Q", c.particles},
           {"solver",
            {{"lambda", c.solver.lambda},
             {"omega", c.solver.omega},
             {"theta", c.solver.theta},
             {"max_iter", c.solver.max_iter},
             {"tol", c.solver.tol},
             {"record_every", c.solver.record_every},
             {"threads", c.solver.threads},
             {"divergence_bound", c.solver.divergence_bound}}},
           {"initial_density", field_to_json(c.initial_density)},
           {"terminal_cost", field_to_json(c.terminal_cost)},
           {"output", {{"dir", c.output_dir}, {"bins", c.bins}, {"density_slices", c.density_slices}}},
           {"seed", c.seed}};
    return j;
}

std::vector<std::string> preset_names()
{
    std::vector<std::string> names;
    for (const auto& p : presets()) names.push_back(p.name);
    return names;
}

bool is_preset(std::string_view name)
{
    const auto& all = presets();
    return std::any_of(all.begin(), all.end(), [&](const ExperimentConfig& c) { return c.name == name; });
}

ExperimentConfig preset(std::string_view name)
{
    for (const auto& p : presets()) {
        if (p.name == name) return p;
    }
    throw ConfigError("preset", "unknown preset '" + std::string(name) + "'");
}

json preset_table()
{
    json table = json::array();
    for (const auto& p : presets()) {
        table.push_back({{"name", p.name},
                         {"dimension", p.dimension},
                         {"sigma", p.kernel.sigma},
                         {"mu", p.kernel.mu},
                         {"N", p.steps},
                         {"Q", p.particles},
                         {"r", p.r},
                         {"lambda", p.solver.lambda},
                         {"omega", p.solver.omega},
                         {"theta", p.solver.theta}});
    }
    return table;
}

ExperimentConfig resolve_config(const std::string& preset_or_path)
{
    if (is_preset(preset_or_path)) return preset(preset_or_path);
    return load_config(preset_or_path);
}

ScalarField make_density(const FieldSpec& spec, int dimension, const std::string& path)
{
    switch (spec.kind) {
    case FieldSpec::Kind::constant: return constant_field(spec.constant);
    case FieldSpec::Kind::trig: return trig_field(spec.coefficients, dimension, join(path, "trig"));
    case FieldSpec::Kind::preset: break;
    }
    check_preset_dimension(spec, dimension, path);
    if (dimension == 1) {
        return {[](std::span<const double> x) {
                    const double s = std::sin(pi * x[0]);
                    return 1.0 / 6.0 + 5.0 / 3.0 * s * s;
                },
                [](std::span<const double> x, std::span<double> g) {
                    g[0] = 5.0 * pi / 3.0 * std::sin(2.0 * pi * x[0]);
                }};
    }
    return {[](std::span<const double> x) {
                return 1.0 + 0.5 * std::cos(pi + 2.0 * pi * (x[0] - x[1])) +
                       0.5 * std::sin(pi / 2.0 + 2.0 * pi * (x[0] + x[1]));
            },
            [](std::span<const double> x, std::span<double> g) {
                const double diff = -pi * std::sin(pi + 2.0 * pi * (x[0] - x[1]));
                const double sum = pi * std::cos(pi / 2.0 + 2.0 * pi * (x[0] + x[1]));
                g[0] = diff + sum;
                g[1] = -diff + sum;
            }};
}

ScalarField make_terminal_cost(const FieldSpec& spec, int dimension, const std::string& path)
{
    switch (spec.kind) {
    case FieldSpec::Kind::constant: return constant_field(spec.constant);
    case FieldSpec::Kind::trig: return trig_field(spec.coefficients, dimension, join(path, "trig"));
    case FieldSpec::Kind::preset: break;
    }
    check_preset_dimension(spec, dimension, path);
    if (dimension == 1) {
        return {[](std::span<const double> x) { return 1.0 + std::sin(4.0 * pi * x[0] + pi / 2.0); },
                [](std::span<const double> x, std::span<double> g) {
                    g[0] = 4.0 * pi * std::cos(4.0 * pi * x[0] + pi / 2.0);
                }};
    }
    return {[](std::span<const double> x) {
                return 1.5 + 0.5 * (std::cos(6.0 * pi * x[0]) + std::cos(2.0 * pi * x[1]));
            },
            [](std::span<const double> x, std::span<double> g) {
                g[0] = -3.0 * pi * std::sin(6.0 * pi * x[0]);
                g[1] = -pi * std::sin(2.0 * pi * x[1]);
            }};
}

Experiment build_experiment(const ExperimentConfig& config)
{
    validate_config(config);
    std::vector<std::string> warnings;
    SpectralKernel kernel = build_kernel(config, warnings);
    ScalarField m = make_density(config.initial_density, config.dimension, "initial_density");
    ScalarField u = make_terminal_cost(config.terminal_cost, config.dimension, "terminal_cost");

    DiscreteMeasure measure;
    try {
        measure = discretize_measure(m.value, config.particles, config.dimension);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("initial_density", e.what());
    }
    Experiment e{MFGProblem{std::move(kernel), std::move(m), std::move(u), config.steps}, std::move(measure), 0.0,
                 std::move(warnings)};
    e.a_squared = step_size_bound(e.measure, e.problem.basis(), e.problem.dt());
    const StepCheck check = check_steps(config.solver, e.a_squared);
    if (!check.ok) {
        e.warnings.push_back("omega * lambda = " + format_real(check.product) + " >= 1 / A^2 = " +
                             format_real(check.limit) + "; the iteration may not converge");
    }
    return e;
}

json kernel_info(const ExperimentConfig& config)
{
    const Experiment e = build_experiment(config);
    const SpectralKernel& k = e.problem.kernel;
    json eig = json::array();
    json blocks = json::array();
    if (k.form() == KernelForm::diagonal) {
        for (const auto& b : k.blocks()) eig.push_back(b.k(0, 0));
    } else {
        const Eigen::MatrixXd km = k.k_matrix();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (km + km.transpose()), Eigen::EigenvaluesOnly);
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) eig.push_back(es.eigenvalues()(i));
        if (k.form() == KernelForm::block2x2) {
            for (const auto& b : k.blocks()) {
                json rows = json::array();
                for (Eigen::Index i = 0; i < b.k.rows(); ++i) {
                    json row = json::array();
                    for (Eigen::Index j = 0; j < b.k.cols(); ++j) row.push_back(b.k(i, j));
                    rows.push_back(row);
                }
                blocks.push_back({{"offset", b.offset + 1}, {"k", rows}});
            }
        }
    }
    const StepCheck check = check_steps(config.solver, e.a_squared);
    json info{{"dimension", config.dimension},
              {"basis_size", k.size()},
              {"form", std::string(to_string(k.form()))},
              {"eigenvalues", eig},
              {"min_eigenvalue", k.min_eigenvalue()},
              {"epsilon", k.epsilon()},
              {"invertible", k.invertible()},
              {"a_squared", e.a_squared},
              {"step_check",
               {{"omega_lambda", check.product},
                {"limit", std::isfinite(check.limit) ? json(check.limit) : json(nullptr)},
                {"ok", check.ok}}},
              {"warnings", e.warnings}};
    if (!blocks.empty()) info["blocks"] = blocks;
    return info;
}

RunOutcome run_experiment(const ExperimentConfig& config, std::ostream* log)
{
    const Experiment e = build_experiment(config);
    if (!e.problem.kernel.invertible()) {
        throw ConfigError("kernel.epsilon", "coefficient matrix is singular; set epsilon > 0 or leave it unset");
    }
    if (log) {
        for (const auto& w : e.warnings) *log << "warning: " << w << '\n';
    }

    const std::filesystem::path dir(config.output_dir);
    std::filesystem::create_directories(dir);

    RunOutcome out;
    {
        std::ofstream diag = open_output(dir / "diagnostics.jsonl");
        out.result = solve(e.problem, e.measure, config.solver, [&](const IterationRecord& r) {
            diag << record_to_json(r).dump() << '\n';
            if (log) {
                *log << "iter " << r.iteration << "  residual " << format_real(r.residual) << "  step "
                     << format_real(std::max(r.a_step, r.x_step)) << '\n';
            }
        });
    }
    const SolverState& s = out.result.state;

    {
        std::ofstream csv = open_output(dir / "trajectories.csv");
        write_trajectories_csv(csv, s.x);
    }
    double final_hist_max = 0.0;
    for (int i : slices_for(config)) {
        const DensitySnapshot snap = density_histogram(s.x, e.measure, i, config.bins);
        std::ofstream csv = open_output(dir / ("density_t" + std::to_string(i) + ".csv"));
        write_density_csv(csv, snap);
    }
    final_hist_max = density_histogram(s.x, e.measure, config.steps, config.bins).max();

    const auto& last = out.result.diagnostics.records.back();
    const StepCheck check = check_steps(config.solver, e.a_squared);
    json metrics{{"name", config.name},
                 {"status", std::string(to_string(out.result.status))},
                 {"iterations", s.iteration},
                 {"residual", last.residual},
                 {"a_step", last.a_step},
                 {"x_step", last.x_step},
                 {"saddle_value", last.saddle_value},
                 {"final_histogram_max", final_hist_max},
                 {"a_squared", e.a_squared},
                 {"omega_lambda", check.product},
                 {"step_check_ok", check.ok},
                 {"warnings", e.warnings}};
    metrics["straightness"] = config.steps >= 2 ? json(straightness_metric(s.x).max) : json(nullptr);
    try {
        metrics["symmetry_defect"] = symmetry_defect(s.x, e.measure);
    } catch (const std::invalid_argument&) {
        metrics["symmetry_defect"] = nullptr;
    }
    if (!out.result.message.empty()) metrics["message"] = out.result.message;
    {
        std::ofstream mj = open_output(dir / "metrics.json");
        mj << metrics.dump(2) << '\n';
    }
    out.metrics = std::move(metrics);
    out.exit_code = out.result.status == SolveStatus::diverged ? kExitDiverged : kExitOk;
    return out;
}

}  // namespace mfg
