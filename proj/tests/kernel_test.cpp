#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "mfg/kernel.hpp"

namespace {

using mfg::BasisSet;
using mfg::GaussianKernelSpec;
using mfg::KernelForm;
using mfg::SpectralKernel;
using std::numbers::pi;

double identity_defect(const SpectralKernel& k)
{
    return (k.k_matrix() * k.j_matrix() - Eigen::MatrixXd::Identity(k.size(), k.size())).norm();
}

Eigen::MatrixXd random_gram(std::mt19937_64& rng, int n, int rank)
{
    std::normal_distribution<double> g;
    Eigen::MatrixXd m(rank, n);
    for (int i = 0; i < rank; ++i) {
        for (int j = 0; j < n; ++j) m(i, j) = g(rng);
    }
    return m.transpose() * m;
}

TEST(GaussianSpectral1d, Entries)
{
    const auto k = mfg::gaussian_spectral_1d({0.2, 0.5, 1}, 8);
    EXPECT_EQ(k.form(), KernelForm::diagonal);
    ASSERT_EQ(k.size(), 8);
    const auto km = k.k_matrix();
    EXPECT_DOUBLE_EQ(km(0, 0), 0.5);
    EXPECT_NEAR(km(1, 1), 0.410434358707769969, 1e-15);
    EXPECT_DOUBLE_EQ(km(2, 2), km(1, 1));
    EXPECT_NEAR(km(7, 7), 0.5 * std::exp(-0.5 * std::pow(0.2 * pi * 4, 2)), 1e-16);
    EXPECT_DOUBLE_EQ(k.epsilon(), 0.0);
}

TEST(GaussianSpectral1d, FlatSpreadFirstNonconstant)
{
    const auto k = mfg::gaussian_spectral_1d({0.8, 0.5, 1}, 8);
    EXPECT_NEAR(k.k_matrix()(1, 1), 0.0212495281426812722, 1e-16);
}

TEST(GaussianSpectral1d, InvalidParameters)
{
    EXPECT_THROW(mfg::gaussian_spectral_1d({0.0, 0.5, 1}, 8), std::invalid_argument);
    EXPECT_THROW(mfg::gaussian_spectral_1d({0.2, -1.0, 1}, 8), std::invalid_argument);
    EXPECT_THROW(mfg::gaussian_spectral_1d({0.2, 0.5, 1}, 0), std::invalid_argument);
}

TEST(GaussianSpectral2d, Entries)
{
    const auto k = mfg::gaussian_spectral_2d({0.1, 0.5, 2}, 8);
    EXPECT_EQ(k.form(), KernelForm::diagonal);
    ASSERT_EQ(k.size(), 28);
    EXPECT_DOUBLE_EQ(k.k_matrix()(0, 0), 0.25);

    const auto k1 = mfg::gaussian_spectral_2d({1.0, 0.5, 2}, 3);  // (1,1), (1,2), (2,1)
    EXPECT_NEAR(k1.k_matrix()(1, 1), 0.00179797083895659, 1e-16);
    EXPECT_DOUBLE_EQ(k1.k_matrix()(1, 1), k1.k_matrix()(2, 2));
}

TEST(GaussianSpectral, MonotoneDecay)
{
    const auto k = mfg::gaussian_spectral_1d({0.3, 1.2, 1}, 21);
    const auto& b = k.basis();
    const auto km = k.k_matrix();
    for (int i = 1; i <= k.size(); ++i) {
        for (int j = 1; j <= k.size(); ++j) {
            if (b.frequencies(i)[0] < b.frequencies(j)[0]) EXPECT_GE(km(i - 1, i - 1), km(j - 1, j - 1));
        }
    }
}

TEST(GaussianSpectral, InverseContract)
{
    EXPECT_LT(identity_defect(mfg::gaussian_spectral_1d({0.2, 0.5, 1}, 8)), 1e-10);
    EXPECT_LT(identity_defect(mfg::gaussian_spectral_2d({0.1, 0.75, 2}, 8)), 1e-10);
    // Underflowing tail entries keep an exact analytic inverse.
    const auto wide = mfg::gaussian_spectral_1d({1.0, 0.5, 1}, 8);
    const auto j = wide.j_matrix();
    EXPECT_NEAR(j(7, 7) * wide.k_matrix()(7, 7), 1.0, 1e-12);
}

TEST(KernelDirect, PointValues)
{
    const GaussianKernelSpec narrow{0.2, 0.5, 1};
    const double x[1] = {0.3};
    EXPECT_NEAR(mfg::kernel_eval_direct(narrow, x, x), 1.99471140200716339, 1e-14);

    const GaussianKernelSpec wide{0.8, 0.5, 1};
    const double a[1] = {0.3}, b[1] = {0.0};
    EXPECT_NEAR(mfg::kernel_eval_direct(wide, a, b), 0.486864430148173713, 1e-14);
}

TEST(KernelDirect, SymmetryPeriodicityAndProduct)
{
    const GaussianKernelSpec s1{0.35, 0.7, 1};
    const GaussianKernelSpec s2{0.35, 0.7, 2};
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 100; ++t) {
        const double x[2] = {u(rng), u(rng)}, y[2] = {u(rng), u(rng)};
        const double x1[2] = {x[0] + 1.0, x[1] - 2.0};
        EXPECT_NEAR(mfg::kernel_eval_direct(s2, x, y), mfg::kernel_eval_direct(s2, y, x), 1e-13);
        EXPECT_NEAR(mfg::kernel_eval_direct(s2, x, y), mfg::kernel_eval_direct(s2, x1, y), 1e-12);
        const double prod = mfg::kernel_eval_direct(s1, std::span(x, 1), std::span(y, 1)) *
                            mfg::kernel_eval_direct(s1, std::span(x + 1, 1), std::span(y + 1, 1));
        EXPECT_NEAR(mfg::kernel_eval_direct(s2, x, y), prod, 1e-12);
    }
}

TEST(KernelDirect, SpectralConsistency)
{
    for (double sigma : {0.2, 0.5, 1.0}) {
        const GaussianKernelSpec spec{sigma, 0.5, 1};
        const auto k = mfg::gaussian_spectral_1d(spec, 40);
        const auto km = k.k_matrix();
        double worst = 0.0;
        for (int i = 0; i < 64; ++i) {
            for (int j = 0; j < 64; ++j) {
                const double x = i / 64.0, y = j / 64.0;
                double series = 0.0;
                for (int m = 1; m <= 40; ++m) series += km(m - 1, m - 1) * mfg::trig_value(m, x) * mfg::trig_value(m, y);
                const double px[1] = {x}, py[1] = {y};
                worst = std::max(worst, std::abs(series - mfg::kernel_eval_direct(spec, px, py)));
            }
        }
        EXPECT_LT(worst, 1e-8) << "sigma " << sigma;
    }
}

TEST(FourierCoefficients, ConstantKernel)
{
    const auto basis = BasisSet::one_dimensional(3);
    const auto c = mfg::fourier_coefficients([](auto, auto) { return 1.0; }, basis, 16);
    Eigen::MatrixXd expect = Eigen::MatrixXd::Zero(3, 3);
    expect(0, 0) = 1.0;
    EXPECT_LT((c - expect).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(FourierCoefficients, CosineKernel)
{
    const auto basis = BasisSet::one_dimensional(5);
    const auto c = mfg::fourier_coefficients(
        [](std::span<const double> x, std::span<const double> y) { return 2.0 * std::cos(2 * pi * (x[0] - y[0])); },
        basis, 32);
    Eigen::MatrixXd expect = Eigen::MatrixXd::Zero(5, 5);
    expect(1, 1) = expect(2, 2) = 1.0;
    EXPECT_LT((c - expect).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(FourierCoefficients, GridTooCoarse)
{
    const auto basis = BasisSet::one_dimensional(8);
    EXPECT_THROW(mfg::fourier_coefficients([](auto, auto) { return 1.0; }, basis, 15), std::invalid_argument);
}

TEST(FourierCoefficients, TensorGaussianMatchesAnalytic)
{
    const GaussianKernelSpec spec{0.5, 0.5, 2};
    const auto analytic = mfg::gaussian_spectral_2d(spec, 5);
    const auto c = mfg::fourier_coefficients(
        [&](std::span<const double> x, std::span<const double> y) { return mfg::kernel_eval_direct(spec, x, y); },
        analytic.basis(), 24);
    EXPECT_LT((c - analytic.k_matrix()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Fejer, FrequencyWeights)
{
    const int r = 4;
    const auto basis = BasisSet::one_dimensional(2 * r + 1);
    const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(basis.size(), basis.size());
    const auto f = mfg::fejer_average(ones, basis, r);
    EXPECT_DOUBLE_EQ(f(0, 0), 1.0);
    EXPECT_NEAR(f(2 * r, 0), 1.0 / (r + 1), 1e-15);
    EXPECT_NEAR(f(1, 1), (1.0 - 1.0 / (r + 1)) * (1.0 - 1.0 / (r + 1)), 1e-15);
    EXPECT_THROW(mfg::fejer_average(ones, basis, r - 1), std::invalid_argument);
}

TEST(Fejer, TensorWeightsMultiplyAcrossAxes)
{
    const auto basis = BasisSet::from_factors(2, {{1, 1}, {3, 4}});
    const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(2, 2);
    const auto f = mfg::fejer_average(ones, basis, 3);
    const double w = (1.0 - 1.0 / 4.0) * (1.0 - 2.0 / 4.0);
    EXPECT_NEAR(f(1, 0), w, 1e-15);
    EXPECT_NEAR(f(1, 1), w * w, 1e-15);
}

TEST(Fejer, PreservesPositiveSemidefiniteness)
{
    std::mt19937_64 rng(42);
    const auto b1 = BasisSet::one_dimensional(9);
    const auto b2 = BasisSet::tensor(6);
    for (int t = 0; t < 20; ++t) {
        for (const auto* b : {&b1, &b2}) {
            const auto g = random_gram(rng, b->size(), 1 + t % b->size());
            EXPECT_GE(mfg::psd_check(mfg::fejer_average(g, *b, 4)), -1e-10);
        }
    }
}

TEST(PsdCheck, Examples)
{
    EXPECT_NEAR(mfg::psd_check(Eigen::MatrixXd::Identity(4, 4)), 1.0, 1e-15);
    EXPECT_NEAR(mfg::psd_check(Eigen::Vector2d(1.0, -0.1).asDiagonal().toDenseMatrix()), -0.1, 1e-15);
    const auto g = mfg::gaussian_spectral_1d({0.2, 0.5, 1}, 8);
    EXPECT_NEAR(mfg::psd_check(g.k_matrix()), g.k_matrix().diagonal().minCoeff(), 1e-15);
    Eigen::Matrix2d asym;
    asym << 1.0, 0.5, 0.4, 1.0;
    EXPECT_THROW(mfg::psd_check(asym), std::invalid_argument);
}

TEST(TranslationInvariant, SymmetricProfileIsDiagonal)
{
    const double c[3] = {1.0, 0.4, 0.1}, s[3] = {0.0, 0.0, 0.0};
    const auto k = mfg::translation_invariant_blocks(c, s);
    EXPECT_EQ(k.form(), KernelForm::diagonal);
    EXPECT_EQ(k.size(), 5);
}

TEST(TranslationInvariant, BlockInverse)
{
    const double c[2] = {1.0, 0.3}, s[2] = {0.0, 0.4};
    const auto k = mfg::translation_invariant_blocks(c, s);
    EXPECT_EQ(k.form(), KernelForm::block2x2);
    ASSERT_EQ(k.blocks().size(), 2u);
    Eigen::Matrix2d expect;
    expect << 0.3, -0.4, 0.4, 0.3;
    expect /= 0.25;
    EXPECT_LT((k.blocks()[1].j - expect).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT(identity_defect(k), 1e-10);
}

TEST(TranslationInvariant, DegenerateFrequencyDropped)
{
    const double c[3] = {1.0, 0.0, 0.2}, s[3] = {0.0, 0.0, 0.1};
    const auto k = mfg::translation_invariant_blocks(c, s);
    ASSERT_EQ(k.size(), 3);
    EXPECT_EQ(k.basis().factors(2)[0], 4);
    EXPECT_EQ(k.basis().factors(3)[0], 5);

    const double z[2] = {0.0, 0.0};
    EXPECT_THROW(mfg::translation_invariant_blocks(z, z), std::invalid_argument);
}

TEST(TranslationInvariant, MatchesQuadratureOfShiftedProfile)
{
    // eta(d) = 1 + 0.3 cos 2 pi d + 0.4 sin 2 pi d + 0.2 cos 4 pi d
    const auto eta = [](double d) {
        return 1.0 + 0.3 * std::cos(2 * pi * d) + 0.4 * std::sin(2 * pi * d) + 0.2 * std::cos(4 * pi * d);
    };
    const auto m = mfg::eta_moments(eta, 2, 64);
    const auto k = mfg::translation_invariant_blocks(m.cos, m.sin);
    ASSERT_EQ(k.size(), 5);
    const auto quad = mfg::fourier_coefficients(
        [&](std::span<const double> x, std::span<const double> y) { return eta(x[0] - y[0]); }, k.basis(), 64);
    EXPECT_LT((quad - k.k_matrix()).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Regularize, Examples)
{
    const double e[3] = {1.0, 0.0, 1.0};
    const auto singular = SpectralKernel::diagonal(BasisSet::one_dimensional(3), e);
    EXPECT_FALSE(singular.invertible());
    EXPECT_THROW(singular.j_matrix(), std::logic_error);

    const auto same = mfg::regularize(singular, 0.0);
    EXPECT_EQ(same.k_matrix(), singular.k_matrix());

    const auto reg = mfg::regularize(singular, 1e-6);
    EXPECT_TRUE(reg.invertible());
    EXPECT_EQ(reg.form(), KernelForm::diagonal);
    EXPECT_DOUBLE_EQ(reg.k_matrix()(1, 1), 1e-6);
    EXPECT_DOUBLE_EQ(reg.k_matrix()(0, 0), 1.0 + 1e-6);
    EXPECT_DOUBLE_EQ(reg.epsilon(), 1e-6);
    EXPECT_LT(identity_defect(reg), 1e-10);
}

TEST(Regularize, DenseSingularGetsShifted)
{
    std::mt19937_64 rng(9);
    const auto basis = BasisSet::one_dimensional(6);
    const auto g = random_gram(rng, 6, 3);  // rank 3
    const auto k = SpectralKernel::dense(basis, g);
    EXPECT_FALSE(k.invertible());
    const auto reg = mfg::with_default_regularization(k);
    EXPECT_DOUBLE_EQ(reg.epsilon(), mfg::kDefaultRegularization);
    EXPECT_GE(reg.min_eigenvalue(), mfg::kDefaultRegularization - 1e-12);
    EXPECT_EQ(reg.form(), KernelForm::dense);

    const auto spd = SpectralKernel::dense(basis, g + Eigen::MatrixXd::Identity(6, 6));
    EXPECT_DOUBLE_EQ(mfg::with_default_regularization(spd).epsilon(), 0.0);
    EXPECT_LT(identity_defect(spd), 1e-10);
}

TEST(SpectralKernel, ApplyMatchesMatrices)
{
    const double c[3] = {1.0, 0.3, 0.2}, s[3] = {0.0, 0.4, -0.1};
    const auto k = mfg::translation_invariant_blocks(c, s);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    Eigen::MatrixXd cols(k.size(), 7);
    for (Eigen::Index i = 0; i < cols.size(); ++i) cols.data()[i] = g(rng);
    EXPECT_LT((k.apply_k(cols) - k.k_matrix() * cols).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT((k.apply_j(cols) - k.j_matrix() * cols).cwiseAbs().maxCoeff(), 1e-12);
}

}  // namespace
