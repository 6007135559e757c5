#include "mfg/pdhg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "detail.hpp"
#include "parallel.hpp"

namespace mfg {

namespace {

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b)
{
    double m = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a[j] - b[j]));
    return m;
}

void check_state(const SolverState& state, const BasisSet& basis, const DiscreteMeasure& measure)
{
    const auto& x = state.x;
    if (x.particles() != measure.size() || x.dimension() != measure.dimension ||
        x.dimension() != basis.dimension()) {
        throw std::invalid_argument("solver state does not match the measure or basis");
    }
    if (state.z.particles() != x.particles() || state.z.steps() != x.steps() ||
        state.z.dimension() != x.dimension()) {
        throw std::invalid_argument("extrapolated trajectories have a different shape from x");
    }
    if (state.a.rows() != basis.size() || state.a.cols() != x.steps()) {
        throw std::invalid_argument("coefficient path shape does not match basis size x N");
    }
}

// Jacobi gradient step on every particle row; returns false on divergence.
bool step_x_into(const Trajectories& x, const CoefficientPath& a_new, const MFGProblem& problem,
                 const DiscreteMeasure& measure, double omega, int threads, double bound, Trajectories& out)
{
    const BasisSet& basis = problem.basis();
    const int r = basis.size();
    const int d = x.dimension();
    const int n = x.steps();
    const double h = problem.dt();
    if (out.particles() != x.particles() || out.steps() != n || out.dimension() != d) {
        out = Trajectories(x.particles(), n, d);
    }

    std::vector<char> row_ok(x.particles(), 1);
    (void)threads;
    MFG_PARALLEL_FOR(threads)
    for (int p = 0; p < x.particles(); ++p) {
        thread_local std::vector<double> grads;
        thread_local std::vector<double> gu;
        grads.resize(static_cast<std::size_t>(r) * d);
        gu.resize(d);
        const double step = omega * measure.weights[p];
        char fine = 1;

        const auto y = x.at(p, 0);
        std::copy(y.begin(), y.end(), out.at(p, 0).begin());
        for (int i = 1; i <= n; ++i) {
            const auto xi = x.at(p, i);
            const auto prev = x.at(p, i - 1);
            basis.grad_all(xi, grads);
            if (i == n) problem.terminal_cost.gradient(xi, gu);
            auto dst = out.at(p, i);
            for (int axis = 0; axis < d; ++axis) {
                double g = (xi[axis] - prev[axis]) / h;
                if (i < n) {
                    g += (xi[axis] - x(p, i + 1, axis)) / h;
                } else {
                    g += gu[axis];
                }
                double coupling = 0.0;
                for (int k = 0; k < r; ++k) coupling += a_new(k, i - 1) * grads[static_cast<std::size_t>(k) * d + axis];
                g += h * coupling;
                const double v = xi[axis] - step * g;
                dst[axis] = v;
                if (!std::isfinite(v) || std::abs(v) > bound) fine = 0;
            }
        }
        row_ok[p] = fine;
    }
    return std::all_of(row_ok.begin(), row_ok.end(), [](char f) { return f != 0; });
}

void step_z_into(const Trajectories& x_new, const Trajectories& x_old, double theta, int threads, Trajectories& out)
{
    if (out.particles() != x_new.particles() || out.steps() != x_new.steps() ||
        out.dimension() != x_new.dimension()) {
        out = Trajectories(x_new.particles(), x_new.steps(), x_new.dimension());
    }
    const std::size_t row = static_cast<std::size_t>(x_new.steps() + 1) * x_new.dimension();
    const std::size_t pinned = x_new.dimension();
    (void)threads;
    MFG_PARALLEL_FOR(threads)
    for (int p = 0; p < x_new.particles(); ++p) {
        const auto xn = x_new.row(p);
        const auto xo = x_old.row(p);
        auto z = out.row(p);
        for (std::size_t j = 0; j < pinned; ++j) z[j] = xn[j];
        for (std::size_t j = pinned; j < row; ++j) z[j] = xn[j] + theta * (xn[j] - xo[j]);
    }
}

}  // namespace

void SolverConfig::validate() const
{
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be >= 0");
    if (!(omega > 0.0) || !std::isfinite(omega)) throw std::invalid_argument("omega must be > 0");
    if (!(theta >= 0.0 && theta <= 1.0)) throw std::invalid_argument("theta must lie in [0, 1]");
    if (max_iter < 0) throw std::invalid_argument("max_iter must be >= 0");
    if (!(tol >= 0.0)) throw std::invalid_argument("tol must be >= 0");
    if (record_every < 0) throw std::invalid_argument("record_every must be >= 0");
    if (threads < 1) throw std::invalid_argument("threads must be >= 1");
    if (!(divergence_bound > 0.0)) throw std::invalid_argument("divergence_bound must be > 0");
}

std::string_view to_string(SolveStatus status) noexcept
{
    switch (status) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iterations: return "max_iterations";
    case SolveStatus::diverged: return "diverged";
    }
    return "unknown";
}

SolverState initial_state(const MFGProblem& problem, const DiscreteMeasure& measure)
{
    problem.validate();
    if (measure.dimension != problem.dimension()) {
        throw std::invalid_argument("measure dimension does not match the kernel basis");
    }
    SolverState s;
    s.a = CoefficientPath::Zero(problem.basis().size(), problem.steps);
    s.x = stationary_trajectories(measure, problem.steps);
    s.z = s.x;
    return s;
}

double step_size_bound(const DiscreteMeasure& measure, const BasisSet& basis, double dt)
{
    double lip = 0.0;
    for (int k = 1; k <= basis.size(); ++k) {
        const double l = basis.lipschitz(k);
        lip += l * l;
    }
    double c2 = 0.0;
    for (double c : measure.weights) c2 += c * c;
    return dt * dt * lip * c2;
}

StepCheck check_steps(const SolverConfig& config, double a_squared)
{
    StepCheck check;
    check.product = config.omega * config.lambda;
    if (!(a_squared > 0.0)) {
        check.limit = std::numeric_limits<double>::infinity();
        check.ok = true;
        return check;
    }
    check.limit = 1.0 / a_squared;
    check.ok = check.product < check.limit;
    return check;
}

ProximalA::ProximalA(const SpectralKernel& kernel, double lambda_dt) : size_(kernel.size()), lambda_dt_(lambda_dt)
{
    if (!(lambda_dt >= 0.0)) throw std::invalid_argument("lambda * h must be >= 0");
    if (!kernel.invertible()) {
        throw std::invalid_argument("kernel coefficient matrix is singular; J = K^-1 is required");
    }
    for (const auto& b : kernel.blocks()) {
        Block out;
        out.offset = b.offset;
        out.size = static_cast<int>(b.j.rows());
        if (out.size == 1) {
            out.scale = 1.0 + lambda_dt * b.j(0, 0);
            if (out.scale == 0.0) throw std::logic_error("singular proximal system");
        } else {
            const Eigen::MatrixXd m =
                lambda_dt * b.j + Eigen::MatrixXd::Identity(out.size, out.size);
            Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
            if (!lu.isInvertible()) throw std::logic_error("singular proximal system");
            out.inverse = lu.inverse();
        }
        blocks_.push_back(std::move(out));
    }
}

void ProximalA::apply(const CoefficientPath& a, const CoefficientPath& q, CoefficientPath& out, int threads) const
{
    if (a.rows() != size_ || q.rows() != size_ || a.cols() != q.cols()) {
        throw std::invalid_argument("proximal step: coefficient and moment shapes differ");
    }
    out.resize(a.rows(), a.cols());
    const auto cols = static_cast<int>(a.cols());
    (void)threads;
    MFG_PARALLEL_FOR(threads)
    for (int i = 0; i < cols; ++i) {
        for (const auto& b : blocks_) {
            if (b.size == 1) {
                out(b.offset, i) = (a(b.offset, i) + lambda_dt_ * q(b.offset, i)) / b.scale;
            } else {
                const Eigen::VectorXd rhs =
                    a.col(i).segment(b.offset, b.size) + lambda_dt_ * q.col(i).segment(b.offset, b.size);
                out.col(i).segment(b.offset, b.size).noalias() = b.inverse * rhs;
            }
        }
    }
}

CoefficientPath step_a(const SolverState& state, const SpectralKernel& kernel, const DiscreteMeasure& measure,
                       double dt, double lambda, int threads)
{
    check_state(state, kernel.basis(), measure);
    const ProximalA prox(kernel, lambda * dt);
    const CoefficientPath q = moment_vector(state.z, measure, kernel.basis(), threads);
    CoefficientPath out;
    prox.apply(state.a, q, out, threads);
    return out;
}

Trajectories step_x(const SolverState& state, const CoefficientPath& a_new, const MFGProblem& problem,
                    const DiscreteMeasure& measure, double omega, int threads, double divergence_bound)
{
    check_state(state, problem.basis(), measure);
    if (a_new.rows() != state.a.rows() || a_new.cols() != state.a.cols()) {
        throw std::invalid_argument("updated coefficient path has the wrong shape");
    }
    Trajectories out;
    if (!step_x_into(state.x, a_new, problem, measure, omega, threads, divergence_bound, out)) {
        throw DivergenceError("trajectory update produced non-finite or runaway positions", state.iteration);
    }
    return out;
}

Trajectories step_z(const Trajectories& x_new, const Trajectories& x_old, double theta, int threads)
{
    if (x_new.particles() != x_old.particles() || x_new.steps() != x_old.steps() ||
        x_new.dimension() != x_old.dimension()) {
        throw std::invalid_argument("step_z: trajectory shapes differ");
    }
    Trajectories z;
    step_z_into(x_new, x_old, theta, threads, z);
    return z;
}

double fixed_point_residual(const CoefficientPath& a, const Trajectories& x, const SpectralKernel& kernel,
                            const DiscreteMeasure& measure, int threads)
{
    const CoefficientPath p = moment_vector(x, measure, kernel.basis(), threads);
    if (a.rows() != p.rows() || a.cols() != p.cols()) {
        throw std::invalid_argument("coefficient path shape does not match the moment vector");
    }
    return (a - kernel.apply_k(p)).cwiseAbs().maxCoeff();
}

PdhgSolver::PdhgSolver(const MFGProblem& problem, const DiscreteMeasure& measure, SolverConfig config)
    : problem_(problem),
      measure_(measure),
      config_(config),
      prox_(problem.kernel, config.lambda * problem.dt())
{
    config_.validate();
    problem_.validate();
    if (measure_.dimension != problem_.dimension()) {
        throw std::invalid_argument("measure dimension does not match the kernel basis");
    }
}

SolverState PdhgSolver::initial_state() const { return mfg::initial_state(problem_, measure_); }

PdhgSolver::StepNorms PdhgSolver::iterate(SolverState& state)
{
    const BasisSet& basis = problem_.basis();
    detail::moment_into(state.z, measure_, basis, q_, config_.threads);
    prox_.apply(state.a, q_, a_next_, config_.threads);
    if (!step_x_into(state.x, a_next_, problem_, measure_, config_.omega, config_.threads,
                     config_.divergence_bound, x_next_)) {
        throw DivergenceError("trajectory update produced non-finite or runaway positions at iteration " +
                                  std::to_string(state.iteration + 1),
                              state.iteration + 1);
    }
    step_z_into(x_next_, state.x, config_.theta, config_.threads, z_next_);

    StepNorms norms;
    norms.a_step = (a_next_ - state.a).cwiseAbs().maxCoeff();
    norms.x_step = max_abs_diff(x_next_.data(), state.x.data());

    std::swap(state.a, a_next_);
    std::swap(state.x, x_next_);
    std::swap(state.z, z_next_);
    ++state.iteration;
    return norms;
}

IterationRecord PdhgSolver::record(const SolverState& state, const StepNorms& norms) const
{
    IterationRecord rec;
    rec.iteration = state.iteration;
    rec.saddle_value = saddle_value(state.a, state.x, problem_, measure_);
    rec.residual = fixed_point_residual(state.a, state.x, problem_.kernel, measure_, config_.threads);
    rec.a_step = norms.a_step;
    rec.x_step = norms.x_step;
    return rec;
}

SolveResult PdhgSolver::run(const RecordSink& sink)
{
    SolveResult result;
    result.state = initial_state();
    auto& state = result.state;
    auto emit = [&](const StepNorms& norms) {
        result.diagnostics.records.push_back(record(state, norms));
        if (sink) sink(result.diagnostics.records.back());
    };

    StepNorms last;
    // No step has been taken yet; tol = inf stops before the first iteration.
    double last_step = std::numeric_limits<double>::max();
    while (true) {
        if (last_step < config_.tol) {
            result.status = SolveStatus::converged;
            break;
        }
        if (state.iteration >= config_.max_iter) {
            result.status = SolveStatus::max_iterations;
            break;
        }
        try {
            last = iterate(state);
        } catch (const DivergenceError& e) {
            result.status = SolveStatus::diverged;
            result.message = e.what();
            break;
        }
        last_step = std::max(last.a_step, last.x_step);
        if (config_.record_every > 0 && state.iteration % config_.record_every == 0) emit(last);
    }
    const auto& recs = result.diagnostics.records;
    if (recs.empty() || recs.back().iteration != state.iteration) emit(last);
    return result;
}

SolveResult solve(const MFGProblem& problem, const DiscreteMeasure& measure, const SolverConfig& config,
                  const RecordSink& sink)
{
    PdhgSolver solver(problem, measure, config);
    return solver.run(sink);
}

}  // namespace mfg
