#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mfg/kernel.hpp"
#include "mfg/problem.hpp"

namespace mfg {

/// Step parameters of the primal-dual iteration. `lambda` is the proximal
/// step for the coefficient path, `omega` the gradient step for the
/// trajectories and `theta` the extrapolation weight.
struct SolverConfig {
    double lambda = 3.0;
    double omega = 1.0 / 12.0;
    double theta = 1.0;
    long max_iter = 20000;
    double tol = 1e-8;
    long record_every = 100;  // 0 records only the final iterate
    int threads = 1;
    double divergence_bound = 1e6;

    void validate() const;
};

struct SolverState {
    CoefficientPath a;  // r x N
    Trajectories x;     // slice 0 pinned to the particle positions
    Trajectories z;     // extrapolated trajectories
    long iteration = 0;
};

/// a = 0, x and z stationary at the particle positions.
SolverState initial_state(const MFGProblem& problem, const DiscreteMeasure& measure);

struct IterationRecord {
    long iteration = 0;
    double saddle_value = 0.0;
    double residual = 0.0;  // sup |a - K p(x)|
    double a_step = 0.0;    // sup |a^{v+1} - a^v|
    double x_step = 0.0;    // sup |x^{v+1} - x^v|
};

struct Diagnostics {
    std::vector<IterationRecord> records;
};

enum class SolveStatus { converged, max_iterations, diverged };

std::string_view to_string(SolveStatus status) noexcept;

struct SolveResult {
    SolverState state;
    Diagnostics diagnostics;
    SolveStatus status = SolveStatus::max_iterations;
    std::string message;
};

/// A^2 = h^2 sum_k Lip(psi_k)^2 sum_b c_b^2, the bilinear-coupling estimate
/// behind the step restriction omega * lambda < 1 / A^2.
double step_size_bound(const DiscreteMeasure& measure, const BasisSet& basis, double dt);

struct StepCheck {
    bool ok = true;
    double product = 0.0;  // omega * lambda
    double limit = 0.0;    // 1 / A^2, infinite when A^2 == 0
};

/// Flags omega * lambda >= 1 / A^2. Advisory only: the coupling is not
/// bilinear, so the bound is a heuristic.
StepCheck check_steps(const SolverConfig& config, double a_squared);

/// Precomputed (lambda h J + Id)^{-1}, applied blockwise and independently
/// per time slice.
class ProximalA {
public:
    ProximalA(const SpectralKernel& kernel, double lambda_dt);

    /// out_i = (lambda h J + Id)^{-1} (a_i + lambda h q_i) for every column i.
    void apply(const CoefficientPath& a, const CoefficientPath& q, CoefficientPath& out, int threads = 1) const;

private:
    struct Block {
        int offset = 0;
        int size = 1;
        double scale = 1.0;     // 1x1 blocks: divide by (1 + lambda h J)
        Eigen::MatrixXd inverse;  // larger blocks
    };
    std::vector<Block> blocks_;
    int size_ = 0;
    double lambda_dt_ = 0.0;
};

/// Step 1: proximal update of the coefficient path against the moments of z.
CoefficientPath step_a(const SolverState& state, const SpectralKernel& kernel, const DiscreteMeasure& measure,
                       double dt, double lambda, int threads = 1);

/// Step 2: one gradient step on the trajectories, every neighbor term taken
/// at x^v. Throws DivergenceError on non-finite or runaway positions.
Trajectories step_x(const SolverState& state, const CoefficientPath& a_new, const MFGProblem& problem,
                    const DiscreteMeasure& measure, double omega, int threads = 1,
                    double divergence_bound = 1e6);

/// Step 3: z = x_new + theta (x_new - x_old).
Trajectories step_z(const Trajectories& x_new, const Trajectories& x_old, double theta, int threads = 1);

/// sup over (k, i) of |a_{k,i} - (K p)_{k,i}| with p the moment vector of x.
double fixed_point_residual(const CoefficientPath& a, const Trajectories& x, const SpectralKernel& kernel,
                            const DiscreteMeasure& measure, int threads = 1);

using RecordSink = std::function<void(const IterationRecord&)>;

/// Owns the precomputed proximal operator and scratch buffers so repeated
/// iterations do not allocate.
class PdhgSolver {
public:
    PdhgSolver(const MFGProblem& problem, const DiscreteMeasure& measure, SolverConfig config);

    SolverState initial_state() const;

    struct StepNorms {
        double a_step = 0.0;
        double x_step = 0.0;
    };

    /// One full iteration (steps 1-3). On DivergenceError the state is left
    /// at its last finite value.
    StepNorms iterate(SolverState& state);

    IterationRecord record(const SolverState& state, const StepNorms& norms) const;

    /// Iterates from the initial state until the larger step norm drops
    /// below tol, max_iter is reached, or the iteration diverges.
    SolveResult run(const RecordSink& sink = {});

    const SolverConfig& config() const noexcept { return config_; }

private:
    const MFGProblem& problem_;
    const DiscreteMeasure& measure_;
    SolverConfig config_;
    ProximalA prox_;
    CoefficientPath q_;
    CoefficientPath a_next_;
    Trajectories x_next_;
    Trajectories z_next_;
};

SolveResult solve(const MFGProblem& problem, const DiscreteMeasure& measure, const SolverConfig& config,
                  const RecordSink& sink = {});

}  // namespace mfg
