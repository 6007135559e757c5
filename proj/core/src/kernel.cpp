#include "mfg/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mfg {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDegenerateDeterminant = 1e-14;
constexpr double kAsymmetryTolerance = 1e-12;

// Inverse of a coefficient block, or an empty matrix when it is singular.
Eigen::MatrixXd invert_block(const Eigen::MatrixXd& k)
{
    if (k.rows() == 1) {
        const double inv = 1.0 / k(0, 0);
        if (k(0, 0) == 0.0 || !std::isfinite(inv)) return {};
        return Eigen::MatrixXd::Constant(1, 1, inv);
    }
    if (k.rows() == 2) {
        const double det = k(0, 0) * k(1, 1) - k(0, 1) * k(1, 0);
        if (det == 0.0 || !std::isfinite(1.0 / det)) return {};
        Eigen::MatrixXd j(2, 2);
        j << k(1, 1), -k(0, 1), -k(1, 0), k(0, 0);
        return j / det;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(k);
    if (!lu.isInvertible()) return {};
    return lu.inverse();
}

int total_size(const std::vector<SpectralKernel::Block>& blocks)
{
    int n = 0;
    for (const auto& b : blocks) n += static_cast<int>(b.k.rows());
    return n;
}

double sum_images(double d, double s)
{
    // Reduce to |d| <= 1/2 so the central image dominates.
    d -= std::round(d);
    const double inv = 1.0 / (2.0 * s * s);
    double sum = std::exp(-d * d * inv);
    for (int n = 1;; ++n) {
        const double a = d - n;
        const double b = d + n;
        const double term = std::exp(-a * a * inv) + std::exp(-b * b * inv);
        sum += term;
        if (n >= 3 && term < 1e-14 * sum) break;
    }
    return sum;
}

// Quadrature nodes of the uniform periodic grid, grid^d points, row major.
std::vector<double> grid_nodes(int dimension, int grid)
{
    const double h = 1.0 / grid;
    std::vector<double> nodes;
    if (dimension == 1) {
        nodes.resize(grid);
        for (int g = 0; g < grid; ++g) nodes[g] = g * h;
    } else {
        nodes.resize(static_cast<std::size_t>(grid) * grid * 2);
        for (int g0 = 0; g0 < grid; ++g0) {
            for (int g1 = 0; g1 < grid; ++g1) {
                const std::size_t p = static_cast<std::size_t>(g0) * grid + g1;
                nodes[2 * p] = g0 * h;
                nodes[2 * p + 1] = g1 * h;
            }
        }
    }
    return nodes;
}

}  // namespace

std::string_view to_string(KernelForm form) noexcept
{
    switch (form) {
    case KernelForm::diagonal: return "diagonal";
    case KernelForm::block2x2: return "block2x2";
    case KernelForm::dense: return "dense";
    }
    return "unknown";
}

void GaussianKernelSpec::validate() const
{
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("gaussian sigma must be > 0");
    if (!(mu > 0.0) || !std::isfinite(mu)) throw std::invalid_argument("gaussian mu must be > 0");
    if (dimension != 1 && dimension != 2) throw std::invalid_argument("gaussian dimension must be 1 or 2");
}

SpectralKernel::SpectralKernel(BasisSet basis, KernelForm form, std::vector<Block> blocks, double epsilon)
    : basis_(std::move(basis)), form_(form), blocks_(std::move(blocks)), epsilon_(epsilon)
{
    if (total_size(blocks_) != basis_.size()) {
        throw std::invalid_argument("coefficient blocks cover " + std::to_string(total_size(blocks_)) +
                                    " functions, basis has " + std::to_string(basis_.size()));
    }
    invertible_ = true;
    int offset = 0;
    for (auto& b : blocks_) {
        if (b.k.rows() != b.k.cols()) throw std::invalid_argument("coefficient blocks must be square");
        if (!b.k.allFinite()) throw std::invalid_argument("coefficient matrix has non-finite entries");
        b.offset = offset;
        offset += static_cast<int>(b.k.rows());
        if (b.j.size() == 0) b.j = invert_block(b.k);
        if (b.j.size() == 0) invertible_ = false;
    }
}

SpectralKernel SpectralKernel::diagonal(BasisSet basis, std::span<const double> entries)
{
    std::vector<Block> blocks;
    blocks.reserve(entries.size());
    for (double e : entries) blocks.push_back({0, Eigen::MatrixXd::Constant(1, 1, e), {}});
    return SpectralKernel(std::move(basis), KernelForm::diagonal, std::move(blocks), 0.0);
}

SpectralKernel SpectralKernel::diagonal(BasisSet basis, std::span<const double> entries,
                                        std::span<const double> inverse_entries)
{
    if (entries.size() != inverse_entries.size()) throw std::invalid_argument("diagonal K and J sizes differ");
    std::vector<Block> blocks;
    blocks.reserve(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        blocks.push_back({0, Eigen::MatrixXd::Constant(1, 1, entries[i]),
                          Eigen::MatrixXd::Constant(1, 1, inverse_entries[i])});
    }
    return SpectralKernel(std::move(basis), KernelForm::diagonal, std::move(blocks), 0.0);
}

SpectralKernel SpectralKernel::block_diagonal(BasisSet basis, std::vector<Eigen::MatrixXd> blocks)
{
    std::vector<Block> out;
    out.reserve(blocks.size());
    bool all_scalar = true;
    for (auto& b : blocks) {
        if (b.rows() != b.cols() || b.rows() < 1 || b.rows() > 2) {
            throw std::invalid_argument("block2x2 kernels take 1x1 or 2x2 blocks");
        }
        all_scalar = all_scalar && b.rows() == 1;
        out.push_back({0, std::move(b), {}});
    }
    const KernelForm form = all_scalar ? KernelForm::diagonal : KernelForm::block2x2;
    return SpectralKernel(std::move(basis), form, std::move(out), 0.0);
}

SpectralKernel SpectralKernel::dense(BasisSet basis, Eigen::MatrixXd k)
{
    std::vector<Block> blocks;
    blocks.push_back({0, std::move(k), {}});
    return SpectralKernel(std::move(basis), KernelForm::dense, std::move(blocks), 0.0);
}

Eigen::MatrixXd SpectralKernel::k_matrix() const
{
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(size(), size());
    for (const auto& b : blocks_) m.block(b.offset, b.offset, b.k.rows(), b.k.cols()) = b.k;
    return m;
}

Eigen::MatrixXd SpectralKernel::j_matrix() const
{
    if (!invertible_) throw std::logic_error("kernel coefficient matrix is singular; regularize it first");
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(size(), size());
    for (const auto& b : blocks_) m.block(b.offset, b.offset, b.j.rows(), b.j.cols()) = b.j;
    return m;
}

Eigen::MatrixXd SpectralKernel::apply_k(const Eigen::MatrixXd& columns) const
{
    if (columns.rows() != size()) throw std::invalid_argument("apply_k: row count does not match basis size");
    Eigen::MatrixXd out(columns.rows(), columns.cols());
    for (const auto& b : blocks_) {
        const auto n = b.k.rows();
        out.middleRows(b.offset, n).noalias() = b.k * columns.middleRows(b.offset, n);
    }
    return out;
}

Eigen::MatrixXd SpectralKernel::apply_j(const Eigen::MatrixXd& columns) const
{
    if (!invertible_) throw std::logic_error("kernel coefficient matrix is singular; regularize it first");
    if (columns.rows() != size()) throw std::invalid_argument("apply_j: row count does not match basis size");
    Eigen::MatrixXd out(columns.rows(), columns.cols());
    for (const auto& b : blocks_) {
        const auto n = b.j.rows();
        out.middleRows(b.offset, n).noalias() = b.j * columns.middleRows(b.offset, n);
    }
    return out;
}

double SpectralKernel::min_eigenvalue() const
{
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& b : blocks_) {
        if (b.k.rows() == 1) {
            lo = std::min(lo, b.k(0, 0));
            continue;
        }
        const Eigen::MatrixXd sym = 0.5 * (b.k + b.k.transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
        lo = std::min(lo, es.eigenvalues().minCoeff());
    }
    return lo;
}

SpectralKernel gaussian_spectral_1d(const GaussianKernelSpec& spec, int r)
{
    spec.validate();
    if (spec.dimension != 1) throw std::invalid_argument("gaussian_spectral_1d needs a 1D spec");
    if (r < 1) throw std::invalid_argument("basis size must be >= 1");
    std::vector<double> k(r), j(r);
    for (int i = 1; i <= r; ++i) {
        const double t = kPi * spec.sigma * trig_frequency(i);
        const double e = 0.5 * t * t;
        k[i - 1] = spec.mu * std::exp(-e);
        j[i - 1] = std::exp(e) / spec.mu;
    }
    return SpectralKernel::diagonal(BasisSet::one_dimensional(r), k, j);
}

SpectralKernel gaussian_spectral_2d(const GaussianKernelSpec& spec, int r)
{
    spec.validate();
    if (spec.dimension != 2) throw std::invalid_argument("gaussian_spectral_2d needs a 2D spec");
    BasisSet basis = BasisSet::tensor(r);
    const double mu2 = spec.mu * spec.mu;
    const double c = kPi * kPi * spec.sigma * spec.sigma / 2.0;
    std::vector<double> k, j;
    k.reserve(basis.size());
    j.reserve(basis.size());
    for (const auto& f : basis.all_factors()) {
        const double n0 = trig_frequency(f[0]);
        const double n1 = trig_frequency(f[1]);
        const double e = c * (n0 * n0 + n1 * n1);
        k.push_back(mu2 * std::exp(-e));
        j.push_back(std::exp(e) / mu2);
    }
    return SpectralKernel::diagonal(std::move(basis), k, j);
}

double kernel_eval_direct(const GaussianKernelSpec& spec, std::span<const double> x, std::span<const double> y)
{
    spec.validate();
    if (static_cast<int>(x.size()) != spec.dimension || static_cast<int>(y.size()) != spec.dimension) {
        throw std::invalid_argument("kernel_eval_direct: point dimension mismatch");
    }
    const double s = spec.sigma / 2.0;
    const double norm = spec.mu / std::sqrt(2.0 * kPi * s * s);
    double value = 1.0;
    for (int i = 0; i < spec.dimension; ++i) value *= norm * sum_images(x[i] - y[i], s);
    return value;
}

Eigen::MatrixXd fourier_coefficients(const KernelFunction& kernel, const BasisSet& basis, int grid)
{
    if (grid < 4 * basis.max_factor()) {
        throw std::invalid_argument("quadrature grid " + std::to_string(grid) + " is coarser than 4 * " +
                                    std::to_string(basis.max_factor()));
    }
    const int d = basis.dimension();
    const std::vector<double> nodes = grid_nodes(d, grid);
    const Eigen::Index n = static_cast<Eigen::Index>(nodes.size()) / d;
    const int r = basis.size();

    Eigen::MatrixXd phi(n, r);
    std::vector<double> values(r);
    for (Eigen::Index p = 0; p < n; ++p) {
        basis.eval_all(std::span(nodes).subspan(p * d, d), values);
        for (int j = 0; j < r; ++j) phi(p, j) = values[j];
    }

    Eigen::MatrixXd kmat(n, n);
    for (Eigen::Index p = 0; p < n; ++p) {
        const auto xp = std::span(nodes).subspan(p * d, d);
        for (Eigen::Index q = 0; q < n; ++q) kmat(p, q) = kernel(xp, std::span(nodes).subspan(q * d, d));
    }

    const double w = 1.0 / static_cast<double>(n);
    Eigen::MatrixXd out = phi.transpose() * (kmat * phi);
    return out * (w * w);
}

Eigen::MatrixXd fejer_average(const Eigen::MatrixXd& coefficients, const BasisSet& basis, int r)
{
    if (r < 0) throw std::invalid_argument("Fejer cutoff must be >= 0");
    if (coefficients.rows() != basis.size() || coefficients.cols() != basis.size()) {
        throw std::invalid_argument("coefficient matrix shape does not match basis size");
    }
    Eigen::VectorXd w(basis.size());
    for (int i = 1; i <= basis.size(); ++i) {
        const auto freq = basis.frequencies(i);
        double weight = 1.0;
        for (int axis = 0; axis < basis.dimension(); ++axis) {
            if (freq[axis] > r) {
                throw std::invalid_argument("basis function " + std::to_string(i) + " has frequency " +
                                            std::to_string(freq[axis]) + " above the Fejer cutoff " +
                                            std::to_string(r));
            }
            weight *= 1.0 - static_cast<double>(freq[axis]) / (r + 1);
        }
        w(i - 1) = weight;
    }
    return w.asDiagonal() * coefficients * w.asDiagonal();
}

double psd_check(const Eigen::MatrixXd& coefficients)
{
    if (coefficients.rows() != coefficients.cols() || coefficients.rows() == 0) {
        throw std::invalid_argument("psd_check needs a non-empty square matrix");
    }
    const double asym = (coefficients - coefficients.transpose()).cwiseAbs().maxCoeff();
    if (asym > kAsymmetryTolerance) {
        throw std::invalid_argument("matrix is not symmetric (max asymmetry " + std::to_string(asym) + ")");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(coefficients, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

EtaMoments eta_moments(const std::function<double(double)>& eta, int max_frequency, int grid)
{
    if (max_frequency < 0) throw std::invalid_argument("max_frequency must be >= 0");
    if (grid < 4 * std::max(1, max_frequency)) throw std::invalid_argument("quadrature grid too coarse");
    std::vector<double> samples(grid);
    for (int g = 0; g < grid; ++g) samples[g] = eta(static_cast<double>(g) / grid);
    EtaMoments m;
    m.cos.assign(max_frequency + 1, 0.0);
    m.sin.assign(max_frequency + 1, 0.0);
    for (int n = 0; n <= max_frequency; ++n) {
        double c = 0.0, s = 0.0;
        for (int g = 0; g < grid; ++g) {
            const double arg = 2.0 * kPi * n * static_cast<double>(g) / grid;
            c += samples[g] * std::cos(arg);
            s += samples[g] * std::sin(arg);
        }
        m.cos[n] = c / grid;
        m.sin[n] = n == 0 ? 0.0 : s / grid;
    }
    return m;
}

SpectralKernel translation_invariant_blocks(std::span<const double> eta_cos, std::span<const double> eta_sin)
{
    if (eta_cos.size() != eta_sin.size() || eta_cos.empty()) {
        throw std::invalid_argument("eta_cos and eta_sin must be non-empty and of equal length");
    }
    std::vector<BasisIndex> factors;
    std::vector<Eigen::MatrixXd> blocks;
    for (std::size_t n = 0; n < eta_cos.size(); ++n) {
        const double c = eta_cos[n];
        const double s = n == 0 ? 0.0 : eta_sin[n];
        if (c * c + s * s < kDegenerateDeterminant) continue;
        if (n == 0) {
            factors.push_back({1, 0});
            blocks.push_back(Eigen::MatrixXd::Constant(1, 1, c));
            continue;
        }
        const int k = 2 * static_cast<int>(n);
        factors.push_back({k, 0});
        factors.push_back({k + 1, 0});
        if (s != 0.0) {
            Eigen::MatrixXd b(2, 2);
            b << c, s, -s, c;
            blocks.push_back(std::move(b));
        } else {
            blocks.push_back(Eigen::MatrixXd::Constant(1, 1, c));
            blocks.push_back(Eigen::MatrixXd::Constant(1, 1, c));
        }
    }
    if (factors.empty()) throw std::invalid_argument("every frequency is degenerate: empty basis");
    return SpectralKernel::block_diagonal(BasisSet::from_factors(1, std::move(factors)), std::move(blocks));
}

SpectralKernel regularize(const SpectralKernel& kernel, double eps)
{
    if (!(eps >= 0.0) || !std::isfinite(eps)) throw std::invalid_argument("regularization must be >= 0");
    if (eps == 0.0) return kernel;
    std::vector<SpectralKernel::Block> blocks = kernel.blocks_;
    for (auto& b : blocks) {
        b.k.diagonal().array() += eps;
        b.j.resize(0, 0);
    }
    return SpectralKernel(kernel.basis_, kernel.form_, std::move(blocks), kernel.epsilon_ + eps);
}

SpectralKernel with_default_regularization(const SpectralKernel& kernel)
{
    if (kernel.min_eigenvalue() < kSingularEigenvalue) return regularize(kernel, kDefaultRegularization);
    return kernel;
}

}  // namespace mfg
