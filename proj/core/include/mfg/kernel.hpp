#pragma once

#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mfg/basis.hpp"

namespace mfg {

/// Storage layout of a coefficient matrix. All three are block diagonal:
/// `diagonal` has 1x1 blocks, `block2x2` has 1x1 and 2x2 blocks (one per
/// frequency of a translation-invariant kernel), `dense` is a single block.
enum class KernelForm { diagonal, block2x2, dense };

std::string_view to_string(KernelForm form) noexcept;

/// Periodic Gaussian interaction kernel
///   K(x, y) = prod_i mu / sqrt(2 pi s^2) sum_k exp(-(x_i - y_i - k)^2 / (2 s^2)),  s = sigma / 2.
struct GaussianKernelSpec {
    double sigma = 0.2;
    double mu = 0.5;
    int dimension = 1;

    void validate() const;
};

/// Coefficient matrix K of an interaction kernel in a trigonometric basis,
///   K(x, y) = sum_ij k_ij psi_i(x) psi_j(y),
/// together with its inverse J. Immutable after construction.
class SpectralKernel {
public:
    struct Block {
        int offset = 0;     // 0-based position of the block's first function
        Eigen::MatrixXd k;  // coefficient block
        Eigen::MatrixXd j;  // inverse block; empty when k is singular
    };

    /// Diagonal K; J is formed by reciprocals.
    static SpectralKernel diagonal(BasisSet basis, std::span<const double> entries);

    /// Diagonal K with caller-supplied inverse entries (used when the
    /// reciprocal would lose precision, e.g. underflowed Gaussian tails).
    static SpectralKernel diagonal(BasisSet basis, std::span<const double> entries,
                                   std::span<const double> inverse_entries);

    /// Block-diagonal K from consecutive 1x1 / 2x2 blocks covering the basis.
    static SpectralKernel block_diagonal(BasisSet basis, std::vector<Eigen::MatrixXd> blocks);

    /// Full coefficient matrix.
    static SpectralKernel dense(BasisSet basis, Eigen::MatrixXd k);

    const BasisSet& basis() const noexcept { return basis_; }
    KernelForm form() const noexcept { return form_; }
    int size() const noexcept { return basis_.size(); }
    double epsilon() const noexcept { return epsilon_; }
    bool invertible() const noexcept { return invertible_; }
    const std::vector<Block>& blocks() const noexcept { return blocks_; }

    Eigen::MatrixXd k_matrix() const;
    /// Throws std::logic_error when K is singular.
    Eigen::MatrixXd j_matrix() const;

    /// K * columns, blockwise.
    Eigen::MatrixXd apply_k(const Eigen::MatrixXd& columns) const;
    /// J * columns, blockwise. Throws when K is singular.
    Eigen::MatrixXd apply_j(const Eigen::MatrixXd& columns) const;

    /// Smallest eigenvalue of the symmetric part of K.
    double min_eigenvalue() const;

private:
    SpectralKernel(BasisSet basis, KernelForm form, std::vector<Block> blocks, double epsilon);

    friend SpectralKernel regularize(const SpectralKernel& kernel, double eps);

    BasisSet basis_;
    KernelForm form_;
    std::vector<Block> blocks_;
    double epsilon_ = 0.0;
    bool invertible_ = false;
};

/// K entries mu exp(-(pi sigma floor(k/2))^2 / 2), k = 1..r; analytic J.
SpectralKernel gaussian_spectral_1d(const GaussianKernelSpec& spec, int r);

/// Tensor basis with k + k' <= r; entries
/// mu^2 exp(-pi^2 sigma^2 (floor(k/2)^2 + floor(k'/2)^2) / 2).
SpectralKernel gaussian_spectral_2d(const GaussianKernelSpec& spec, int r);

/// Direct evaluation of the periodized Gaussian by image summation.
double kernel_eval_direct(const GaussianKernelSpec& spec, std::span<const double> x, std::span<const double> y);

using KernelFunction = std::function<double(std::span<const double>, std::span<const double>)>;

/// Coefficients k_ij = int int K(x, y) psi_i(x) psi_j(y) dx dy by tensor
/// trapezoid quadrature with `grid` nodes per axis. Cost is grid^(2d)
/// kernel evaluations. Requires grid >= 4 * basis.max_factor().
Eigen::MatrixXd fourier_coefficients(const KernelFunction& kernel, const BasisSet& basis, int grid);

/// Rectangular Fejer (Cesaro) average at frequency cutoff r: each
/// coefficient is scaled by prod (1 - n / (r + 1)) over the per-axis
/// frequencies n of both row and column functions.
Eigen::MatrixXd fejer_average(const Eigen::MatrixXd& coefficients, const BasisSet& basis, int r);

/// Smallest eigenvalue of a symmetric matrix. Throws std::invalid_argument
/// if max |A - A^T| exceeds 1e-12.
double psd_check(const Eigen::MatrixXd& coefficients);

/// Per-frequency moments int eta(y) cos(2 pi n y) dy and int eta(y) sin(2 pi n y) dy,
/// n = 0..max_frequency, by trapezoid quadrature on `grid` nodes.
struct EtaMoments {
    std::vector<double> cos;
    std::vector<double> sin;
};
EtaMoments eta_moments(const std::function<double(double)>& eta, int max_frequency, int grid);

/// 1D translation-invariant kernel K(x, y) = eta(x - y) from its cosine and
/// sine moments. Frequency n >= 1 contributes the block
///   [ C  S ]
///   [-S  C ]
/// on (phi_{2n}, phi_{2n+1}); frequency 0 contributes C_0 on phi_1.
/// Frequencies with C^2 + S^2 < 1e-14 are dropped from the basis. The
/// result is `diagonal` when every sine moment vanishes.
SpectralKernel translation_invariant_blocks(std::span<const double> eta_cos, std::span<const double> eta_sin);

/// K + eps * Id with J recomputed; the form is preserved.
SpectralKernel regularize(const SpectralKernel& kernel, double eps);

/// Eigenvalue floor below which a general coefficient matrix is
/// regularized, and the shift applied in that case.
inline constexpr double kSingularEigenvalue = 1e-10;
inline constexpr double kDefaultRegularization = 1e-6;

/// Regularizes with kDefaultRegularization when min_eigenvalue() falls below
/// kSingularEigenvalue; otherwise returns the kernel unchanged.
SpectralKernel with_default_regularization(const SpectralKernel& kernel);

}  // namespace mfg
