#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mfg/basis.hpp"
#include "mfg/kernel.hpp"

namespace mfg {

/// A real function on the torus with its gradient. Positions may be given on
/// the universal cover; implementations must be 1-periodic in each axis.
struct ScalarField {
    std::function<double(std::span<const double>)> value;
    std::function<void(std::span<const double>, std::span<double>)> gradient;
};

ScalarField constant_field(double c);

/// sum_j coefficients[j] * psi_j(x) for the functions of `basis`.
ScalarField trig_polynomial(BasisSet basis, std::vector<double> coefficients);

/// Weighted particle cloud sum_a c_a delta_{y_a}.
struct DiscreteMeasure {
    int dimension = 1;
    std::vector<double> points;   // size() * dimension, particle major
    std::vector<double> weights;  // nonnegative, summing to 1

    int size() const noexcept { return static_cast<int>(weights.size()); }
    std::span<const double> point(int particle) const
    {
        return std::span(points).subspan(static_cast<std::size_t>(particle) * dimension, dimension);
    }
};

/// Samples the density on y_a = a / (Q + 1), a = 1..Q (per axis in 2D, giving
/// Q^2 particles) and normalizes the values into weights.
DiscreteMeasure discretize_measure(const std::function<double(std::span<const double>)>& density, int q,
                                   int dimension);

/// Particle paths x_{a,i}, i = 0..N, stored on the universal cover.
class Trajectories {
public:
    Trajectories() = default;
    Trajectories(int particles, int steps, int dimension);

    int particles() const noexcept { return particles_; }
    int steps() const noexcept { return steps_; }
    int dimension() const noexcept { return dimension_; }

    std::span<double> at(int particle, int i)
    {
        return std::span(data_).subspan(offset(particle, i), dimension_);
    }
    std::span<const double> at(int particle, int i) const
    {
        return std::span(data_).subspan(offset(particle, i), dimension_);
    }
    double& operator()(int particle, int i, int axis) { return data_[offset(particle, i) + axis]; }
    double operator()(int particle, int i, int axis) const { return data_[offset(particle, i) + axis]; }

    /// All (N + 1) * d coordinates of one particle.
    std::span<double> row(int particle) { return std::span(data_).subspan(offset(particle, 0), row_size()); }
    std::span<const double> row(int particle) const
    {
        return std::span(data_).subspan(offset(particle, 0), row_size());
    }

    std::vector<double>& data() noexcept { return data_; }
    const std::vector<double>& data() const noexcept { return data_; }

    friend bool operator==(const Trajectories&, const Trajectories&) = default;

private:
    std::size_t row_size() const noexcept { return static_cast<std::size_t>(steps_ + 1) * dimension_; }
    std::size_t offset(int particle, int i) const noexcept
    {
        return static_cast<std::size_t>(particle) * row_size() + static_cast<std::size_t>(i) * dimension_;
    }

    int particles_ = 0;
    int steps_ = 0;
    int dimension_ = 1;
    std::vector<double> data_;
};

/// x_{a,i} = y_a for every i.
Trajectories stationary_trajectories(const DiscreteMeasure& measure, int steps);

/// Coefficient path a_{k,i}: row k - 1, column i - 1 for i = 1..N.
using CoefficientPath = Eigen::MatrixXd;

/// First-order nonlocal MFG on [0, 1] with L(x, v) = |v|^2 / 2.
struct MFGProblem {
    SpectralKernel kernel;
    ScalarField initial_density;
    ScalarField terminal_cost;
    int steps = 20;

    int dimension() const noexcept { return kernel.basis().dimension(); }
    const BasisSet& basis() const noexcept { return kernel.basis(); }
    double dt() const noexcept { return 1.0 / steps; }

    void validate() const;
};

/// h/2 sum_i a_i^T J a_i.
double quadratic_term(const CoefficientPath& a, const SpectralKernel& kernel, double dt);

/// Inner expression of the discrete saddle problem:
///   h/2 sum_i a_i^T J a_i - sum_a c_a sum_i |x_{a,i} - x_{a,i-1}|^2 / (2h)
///   - h sum_{a,i,k} c_a a_{k,i} psi_k(x_{a,i}) - sum_a c_a U(x_{a,N}).
double saddle_value(const CoefficientPath& a, const Trajectories& x, const MFGProblem& problem,
                    const DiscreteMeasure& measure);

/// p_{k,i} = sum_a c_a psi_k(x_{a,i}), i = 1..N. Each column is reduced in
/// particle order, so the result does not depend on `threads`.
CoefficientPath moment_vector(const Trajectories& x, const DiscreteMeasure& measure, const BasisSet& basis,
                              int threads = 1);

/// Thrown when an iteration produces non-finite or runaway values.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, long iteration)
        : std::runtime_error(what), iteration_(iteration)
    {
    }
    long iteration() const noexcept { return iteration_; }

private:
    long iteration_;
};

/// Gradient descent for the single-trajectory discrete action. Each step
/// starts from `step` and halves it until the action decreases.
struct InnerSolverConfig {
    double step = 1.0 / 12.0;
    int max_steps = 5000;
    double tol = 1e-10;
};

/// min over {x_i}, x_0 = x0, of h sum_i [|x_i - x_{i-1}|^2 / (2h^2) + sum_k a_{k,i} psi_k(x_i)] + U(x_N),
/// starting from the stationary path. Returns the best value reached.
double discrete_value_at(std::span<const double> x0, const CoefficientPath& a, const MFGProblem& problem,
                         const InnerSolverConfig& config = {});

/// sum_a c_a discrete_value_at(y_a).
double discrete_G(const CoefficientPath& a, const MFGProblem& problem, const DiscreteMeasure& measure,
                  const InnerSolverConfig& config = {});

}  // namespace mfg
