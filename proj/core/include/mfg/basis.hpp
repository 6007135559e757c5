#pragma once

#include <array>
#include <span>
#include <vector>

namespace mfg {

// One-dimensional real trigonometric system on the unit torus, numbered
// from 1:
//   phi_1(x)    = 1
//   phi_{2n}(x)   = sqrt(2) sin(2 pi n x)
//   phi_{2n+1}(x) = sqrt(2) cos(2 pi n x)
// The system is L2-orthonormal on [0, 1).
double trig_value(int k, double x);
double trig_derivative(int k, double x);

/// Frequency n of phi_k, i.e. floor(k / 2).
constexpr int trig_frequency(int k) noexcept { return k / 2; }

/// Exact Lipschitz constant of phi_k: 2 sqrt(2) pi floor(k / 2).
double trig_lipschitz(int k);

/// Sup-norm of phi_k: 1 for the constant, sqrt(2) otherwise.
double trig_sup(int k);

/// 1-based factor indices of a basis function. 1D functions use {k, 0};
/// tensor functions phi_{k,k'}(x1, x2) = phi_k(x1) phi_k'(x2) use {k, k'}.
using BasisIndex = std::array<int, 2>;

/// All (k, k') with k, k' >= 1 and k + k' <= r, in lexicographic order.
/// Throws std::invalid_argument for r < 2.
std::vector<BasisIndex> tensor_indices(int r);

/// An ordered, immutable set of trigonometric basis functions in one or two
/// dimensions. Functions are addressed by their 1-based position in the set.
class BasisSet {
public:
    /// phi_1, ..., phi_r on the circle.
    static BasisSet one_dimensional(int r);

    /// Tensor functions phi_{k,k'} with k + k' <= r, lexicographic.
    static BasisSet tensor(int r);

    /// Arbitrary selection of factor indices. For dimension 1 the second
    /// entry of every index must be 0.
    static BasisSet from_factors(int dimension, std::vector<BasisIndex> factors);

    int dimension() const noexcept { return dimension_; }
    int size() const noexcept { return static_cast<int>(factors_.size()); }

    /// Largest 1D factor index used by any function.
    int max_factor() const noexcept { return max_factor_; }

    const BasisIndex& factors(int index) const;
    const std::vector<BasisIndex>& all_factors() const noexcept { return factors_; }

    /// Per-axis frequencies floor(k/2) of a function (second entry 0 in 1D).
    std::array<int, 2> frequencies(int index) const;

    double eval(int index, std::span<const double> x) const;
    void grad(int index, std::span<const double> x, std::span<double> out) const;
    double lipschitz(int index) const;

    // Batched evaluation of every function at one point. `values` holds
    // size() entries; `grads` holds size() * dimension() entries, function
    // major.
    void eval_all(std::span<const double> x, std::span<double> values) const;
    void grad_all(std::span<const double> x, std::span<double> grads) const;

    friend bool operator==(const BasisSet&, const BasisSet&) = default;

private:
    BasisSet(int dimension, std::vector<BasisIndex> factors);

    void check_index(int index) const;
    void check_point(std::span<const double> x) const;

    int dimension_ = 1;
    int max_factor_ = 1;
    std::vector<BasisIndex> factors_;
};

}  // namespace mfg
