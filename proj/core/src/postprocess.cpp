#include "mfg/postprocess.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <tuple>

namespace mfg {

namespace {

double wrap(double v) { return v - std::floor(v); }

int bin_of(double v, int bins) { return std::min(bins - 1, static_cast<int>(wrap(v) * bins)); }

}  // namespace

double DensitySnapshot::mass() const noexcept
{
    return std::accumulate(values.begin(), values.end(), 0.0) * bin_volume();
}

double DensitySnapshot::max() const noexcept
{
    return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
}

DensitySnapshot density_histogram(const Trajectories& x, const DiscreteMeasure& measure, int time_index, int bins)
{
    if (bins < 2) throw std::invalid_argument("histogram needs at least 2 bins per axis");
    if (time_index < 0 || time_index > x.steps()) throw std::out_of_range("time index outside [0, N]");
    if (x.particles() != measure.size()) throw std::invalid_argument("trajectories do not match the measure");

    DensitySnapshot s;
    s.time_index = time_index;
    s.bins = bins;
    s.dimension = x.dimension();
    s.values.assign(s.dimension == 1 ? bins : static_cast<std::size_t>(bins) * bins, 0.0);
    const double inv_volume = 1.0 / s.bin_volume();
    for (int p = 0; p < x.particles(); ++p) {
        const auto pos = x.at(p, time_index);
        std::size_t b = bin_of(pos[0], bins);
        if (s.dimension == 2) b = b * bins + bin_of(pos[1], bins);
        s.values[b] += measure.weights[p] * inv_volume;
    }
    return s;
}

Straightness straightness_metric(const Trajectories& x)
{
    const int n = x.steps();
    if (n < 2) throw std::invalid_argument("straightness needs N >= 2");
    Straightness out;
    out.per_particle.assign(x.particles(), 0.0);
    for (int p = 0; p < x.particles(); ++p) {
        const auto start = x.at(p, 0);
        const auto end = x.at(p, n);
        double worst = 0.0;
        for (int i = 1; i < n; ++i) {
            const double s = static_cast<double>(i) / n;
            const auto xi = x.at(p, i);
            double d2 = 0.0;
            for (int axis = 0; axis < x.dimension(); ++axis) {
                const double chord = start[axis] + s * (end[axis] - start[axis]);
                d2 += (xi[axis] - chord) * (xi[axis] - chord);
            }
            worst = std::max(worst, std::sqrt(d2));
        }
        out.per_particle[p] = worst;
        out.max = std::max(out.max, worst);
    }
    return out;
}

double torus_distance(std::span<const double> p, std::span<const double> q)
{
    double d2 = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
        double d = std::abs(wrap(p[j]) - wrap(q[j]));
        d = std::min(d, 1.0 - d);
        d2 += d * d;
    }
    return std::sqrt(d2);
}

double symmetry_defect(const Trajectories& x, const DiscreteMeasure& measure)
{
    const int n = measure.size();
    const int d = measure.dimension;
    if (x.particles() != n || x.dimension() != d) throw std::invalid_argument("trajectories do not match the measure");

    std::vector<double> mirror(d);
    for (int p = 0; p < n; ++p) {
        const auto y = measure.point(p);
        for (int j = 0; j < d; ++j) mirror[j] = 1.0 - y[j];
        bool found = false;
        for (int q = 0; q < n && !found; ++q) found = torus_distance(mirror, measure.point(q)) < 1e-12;
        if (!found) throw std::invalid_argument("particle grid is not symmetric under x -> 1 - x");
    }

    struct Pair {
        double cost;
        int from;
        int to;
    };
    std::vector<Pair> pairs;
    pairs.reserve(static_cast<std::size_t>(n) * n);
    std::vector<double> reflected(static_cast<std::size_t>(n) * d);
    std::vector<char> used_from(n), used_to(n);

    double defect = 0.0;
    for (int i = 0; i <= x.steps(); ++i) {
        for (int p = 0; p < n; ++p) {
            for (int j = 0; j < d; ++j) reflected[static_cast<std::size_t>(p) * d + j] = 1.0 - x(p, i, j);
        }
        pairs.clear();
        for (int p = 0; p < n; ++p) {
            for (int q = 0; q < n; ++q) {
                const std::span<const double> rq(reflected.data() + static_cast<std::size_t>(q) * d, d);
                const double cost =
                    torus_distance(x.at(p, i), rq) + std::abs(measure.weights[p] - measure.weights[q]);
                pairs.push_back({cost, p, q});
            }
        }
        std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
            return std::tie(a.cost, a.from, a.to) < std::tie(b.cost, b.from, b.to);
        });
        std::fill(used_from.begin(), used_from.end(), 0);
        std::fill(used_to.begin(), used_to.end(), 0);
        int matched = 0;
        double slice = 0.0;
        for (const auto& pr : pairs) {
            if (used_from[pr.from] || used_to[pr.to]) continue;
            used_from[pr.from] = used_to[pr.to] = 1;
            slice = std::max(slice, pr.cost);
            if (++matched == n) break;
        }
        defect = std::max(defect, slice);
    }
    return defect;
}

std::string format_real(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

void write_trajectories_csv(std::ostream& out, const Trajectories& x)
{
    out << (x.dimension() == 1 ? "t,particle,x\n" : "t,particle,x1,x2\n");
    const int n = x.steps();
    for (int p = 0; p < x.particles(); ++p) {
        for (int i = 0; i <= n; ++i) {
            out << format_real(static_cast<double>(i) / n) << ',' << p;
            for (double c : x.at(p, i)) out << ',' << format_real(c);
            out << '\n';
        }
    }
}

void write_density_csv(std::ostream& out, const DensitySnapshot& s)
{
    if (s.dimension == 1) {
        out << "x,density\n";
        for (int b = 0; b < s.bins; ++b) out << format_real(s.center(b)) << ',' << format_real(s.values[b]) << '\n';
        return;
    }
    out << "x1,x2,density\n";
    for (int b0 = 0; b0 < s.bins; ++b0) {
        for (int b1 = 0; b1 < s.bins; ++b1) {
            out << format_real(s.center(b0)) << ',' << format_real(s.center(b1)) << ','
                << format_real(s.values[static_cast<std::size_t>(b0) * s.bins + b1]) << '\n';
        }
    }
}

}  // namespace mfg
