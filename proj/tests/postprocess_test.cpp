#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include <gtest/gtest.h>

#include "mfg/postprocess.hpp"

namespace {

using mfg::DiscreteMeasure;
using mfg::Trajectories;

DiscreteMeasure uniform(int q, int dim = 1)
{
    return mfg::discretize_measure([](auto) { return 1.0; }, q, dim);
}

TEST(DensityHistogram, SingleParticle)
{
    DiscreteMeasure one{1, {0.3}, {1.0}};
    const auto x = mfg::stationary_trajectories(one, 2);
    const auto h = mfg::density_histogram(x, one, 1, 10);
    EXPECT_DOUBLE_EQ(h.values[3], 10.0);
    EXPECT_DOUBLE_EQ(h.max(), 10.0);
    EXPECT_NEAR(h.mass(), 1.0, 1e-15);
}

TEST(DensityHistogram, UniformIsFlat)
{
    const auto m = uniform(20);
    const auto h = mfg::density_histogram(mfg::stationary_trajectories(m, 1), m, 0, 5);
    for (double v : h.values) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(DensityHistogram, TwoWeightedParticles)
{
    DiscreteMeasure two{1, {0.1, 0.9}, {0.3, 0.7}};
    const auto h = mfg::density_histogram(mfg::stationary_trajectories(two, 1), two, 0, 2);
    EXPECT_NEAR(h.values[0], 0.6, 1e-15);
    EXPECT_NEAR(h.values[1], 1.4, 1e-15);
}

TEST(DensityHistogram, WrapsLiftedPositions)
{
    DiscreteMeasure one{1, {0.3}, {1.0}};
    Trajectories x = mfg::stationary_trajectories(one, 2);
    x(0, 2, 0) = -0.75;  // 0.25 on the torus
    const auto h = mfg::density_histogram(x, one, 2, 4);
    EXPECT_DOUBLE_EQ(h.values[1], 4.0);
    EXPECT_THROW(mfg::density_histogram(x, one, 2, 1), std::invalid_argument);
    EXPECT_THROW(mfg::density_histogram(x, one, 3, 4), std::out_of_range);
}

TEST(DensityHistogram, MassAndReflectionEquivariance)
{
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-2.0, 3.0);
    for (int dim : {1, 2}) {
        const auto m = mfg::discretize_measure(
            [](std::span<const double> y) { return 0.2 + y[0] * y[0]; }, 7, dim);
        Trajectories x = mfg::stationary_trajectories(m, 3);
        for (double& v : x.data()) v = u(rng);
        Trajectories mirrored = x;
        for (double& v : mirrored.data()) v = 1.0 - v;
        const int bins = 8;
        const auto h = mfg::density_histogram(x, m, 2, bins);
        const auto hr = mfg::density_histogram(mirrored, m, 2, bins);
        EXPECT_NEAR(h.mass(), 1.0, 1e-9);
        for (int b = 0; b < bins; ++b) {
            if (dim == 1) {
                EXPECT_NEAR(hr.values[b], h.values[bins - 1 - b], 1e-12);
                continue;
            }
            for (int c = 0; c < bins; ++c) {
                EXPECT_NEAR(hr.values[b * bins + c], h.values[(bins - 1 - b) * bins + (bins - 1 - c)], 1e-12);
            }
        }
    }
}

TEST(Straightness, Examples)
{
    Trajectories lin(1, 4, 1);
    for (int i = 0; i <= 4; ++i) lin(0, i, 0) = 0.2 + 0.3 * i;
    EXPECT_NEAR(mfg::straightness_metric(lin).max, 0.0, 1e-15);

    Trajectories par(1, 2, 1);
    for (int i = 0; i <= 2; ++i) par(0, i, 0) = (i / 2.0) * (1 - i / 2.0);
    EXPECT_DOUBLE_EQ(mfg::straightness_metric(par).max, 0.25);

    const auto m = uniform(3);
    EXPECT_EQ(mfg::straightness_metric(mfg::stationary_trajectories(m, 5)).max, 0.0);
    EXPECT_THROW(mfg::straightness_metric(mfg::stationary_trajectories(m, 1)), std::invalid_argument);
}

TEST(Straightness, ShiftInvariantPerParticle)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto m = uniform(4, 2);
    Trajectories x = mfg::stationary_trajectories(m, 6);
    for (double& v : x.data()) v = u(rng);
    const auto base = mfg::straightness_metric(x);
    for (double& v : x.row(2)) v += 5.0;
    const auto shifted = mfg::straightness_metric(x);
    for (int p = 0; p < x.particles(); ++p) EXPECT_NEAR(base.per_particle[p], shifted.per_particle[p], 1e-12);
}

TEST(SymmetryDefect, Examples)
{
    const auto m = uniform(6);
    EXPECT_NEAR(mfg::symmetry_defect(mfg::stationary_trajectories(m, 3), m), 0.0, 1e-15);

    DiscreteMeasure centre{1, {0.5}, {1.0}};
    EXPECT_EQ(mfg::symmetry_defect(mfg::stationary_trajectories(centre, 2), centre), 0.0);

    // Two equal-weight particles at 0.3 and 0.6: mirror images 0.7 and 0.4.
    const auto pair = uniform(2);
    Trajectories x = mfg::stationary_trajectories(pair, 1);
    x(0, 1, 0) = 0.3;
    x(1, 1, 0) = 0.6;
    EXPECT_NEAR(mfg::symmetry_defect(x, pair), 0.1, 1e-12);
}

TEST(SymmetryDefect, AsymmetricGridRejected)
{
    DiscreteMeasure m{1, {0.2, 0.3}, {0.5, 0.5}};
    EXPECT_THROW(mfg::symmetry_defect(mfg::stationary_trajectories(m, 2), m), std::invalid_argument);
}

TEST(SymmetryDefect, MirroredTwoDimensionalCloud)
{
    const auto m = uniform(4, 2);
    Trajectories x = mfg::stationary_trajectories(m, 2);
    // Move every particle toward the centre; symmetric motion keeps zero defect.
    for (int p = 0; p < m.size(); ++p) {
        for (int a = 0; a < 2; ++a) x(p, 2, a) = 0.5 + 0.5 * (m.point(p)[a] - 0.5) + 1.0;
    }
    EXPECT_NEAR(mfg::symmetry_defect(x, m), 0.0, 1e-14);
}

TEST(FormatReal, RoundTrips)
{
    EXPECT_EQ(mfg::format_real(0.1), "0.10000000000000001");
    EXPECT_EQ(mfg::format_real(1.0), "1");
    EXPECT_EQ(mfg::format_real(-2.5e-20), "-2.4999999999999999e-20");
    for (double v : {0.3, 1.0 / 3.0, 6.02e23, -1e-300}) EXPECT_EQ(std::stod(mfg::format_real(v)), v);
}

TEST(CsvWriters, Layout)
{
    DiscreteMeasure two{1, {0.25, 0.75}, {0.5, 0.5}};
    const auto x = mfg::stationary_trajectories(two, 2);
    std::ostringstream t;
    mfg::write_trajectories_csv(t, x);
    EXPECT_EQ(t.str(), "t,particle,x\n0,0,0.25\n0.5,0,0.25\n1,0,0.25\n0,1,0.75\n0.5,1,0.75\n1,1,0.75\n");

    std::ostringstream d;
    mfg::write_density_csv(d, mfg::density_histogram(x, two, 0, 2));
    EXPECT_EQ(d.str(), "x,density\n0.25,1\n0.75,1\n");

    const auto m2 = uniform(1, 2);
    std::ostringstream d2;
    mfg::write_density_csv(d2, mfg::density_histogram(mfg::stationary_trajectories(m2, 1), m2, 1, 2));
    EXPECT_EQ(d2.str(), "x1,x2,density\n0.25,0.25,0\n0.25,0.75,0\n0.75,0.25,0\n0.75,0.75,4\n");
    std::ostringstream t2;
    mfg::write_trajectories_csv(t2, mfg::stationary_trajectories(m2, 1));
    EXPECT_EQ(t2.str(), "t,particle,x1,x2\n0,0,0.5,0.5\n1,0,0.5,0.5\n");
}

}  // namespace
