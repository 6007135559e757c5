#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mfg/problem.hpp"

namespace mfg {

/// Histogram estimate of the pushed-forward density at one time slice.
/// Values are stored row major over B^d bins (first axis slowest) and
/// integrate to 1.
struct DensitySnapshot {
    int time_index = 0;
    int bins = 0;
    int dimension = 1;
    std::vector<double> values;

    double bin_width() const noexcept { return 1.0 / bins; }
    double bin_volume() const noexcept { return dimension == 1 ? bin_width() : bin_width() * bin_width(); }
    double center(int bin) const noexcept { return (bin + 0.5) * bin_width(); }
    double mass() const noexcept;
    double max() const noexcept;
};

/// Wraps positions into [0, 1)^d and accumulates weight / bin volume.
DensitySnapshot density_histogram(const Trajectories& x, const DiscreteMeasure& measure, int time_index,
                                  int bins);

struct Straightness {
    std::vector<double> per_particle;
    double max = 0.0;
};

/// Per particle, max over i of |x_i - ((1 - s_i) x_0 + s_i x_N)| on the lift.
Straightness straightness_metric(const Trajectories& x);

/// Max over time slices of a weight-aware greedy matching distance between
/// the wrapped particle cloud and its mirror image under x -> 1 - x. The
/// initial positions must themselves be mirror symmetric.
double symmetry_defect(const Trajectories& x, const DiscreteMeasure& measure);

/// Shortest distance between two points on the torus.
double torus_distance(std::span<const double> p, std::span<const double> q);

/// Shortest round-trip decimal form with 17 significant digits.
std::string format_real(double v);

/// Columns t, particle, x (or x1, x2); one row per particle and time, particle
/// major. Coordinates are on the lift.
void write_trajectories_csv(std::ostream& out, const Trajectories& x);

/// Columns x, density (or x1, x2, density) at bin centers.
void write_density_csv(std::ostream& out, const DensitySnapshot& snapshot);

}  // namespace mfg
