#include "mfg/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "detail.hpp"
#include "parallel.hpp"

namespace mfg {

ScalarField constant_field(double c)
{
    return {[c](std::span<const double>) { return c; },
            [](std::span<const double>, std::span<double> g) { std::fill(g.begin(), g.end(), 0.0); }};
}

ScalarField trig_polynomial(BasisSet basis, std::vector<double> coefficients)
{
    if (static_cast<int>(coefficients.size()) != basis.size()) {
        throw std::invalid_argument("trigonometric polynomial has " + std::to_string(coefficients.size()) +
                                    " coefficients for " + std::to_string(basis.size()) + " basis functions");
    }
    struct Poly {
        BasisSet basis;
        std::vector<double> coef;
    };
    auto p = std::make_shared<const Poly>(Poly{std::move(basis), std::move(coefficients)});
    ScalarField f;
    f.value = [p](std::span<const double> x) {
        double v = 0.0;
        for (int j = 1; j <= p->basis.size(); ++j) v += p->coef[j - 1] * p->basis.eval(j, x);
        return v;
    };
    f.gradient = [p](std::span<const double> x, std::span<double> g) {
        const int d = p->basis.dimension();
        std::fill(g.begin(), g.end(), 0.0);
        std::vector<double> gj(d);
        for (int j = 1; j <= p->basis.size(); ++j) {
            p->basis.grad(j, x, gj);
            for (int axis = 0; axis < d; ++axis) g[axis] += p->coef[j - 1] * gj[axis];
        }
    };
    return f;
}

DiscreteMeasure discretize_measure(const std::function<double(std::span<const double>)>& density, int q,
                                   int dimension)
{
    if (q < 1) throw std::invalid_argument("particle count Q must be >= 1");
    if (dimension != 1 && dimension != 2) throw std::invalid_argument("dimension must be 1 or 2");

    DiscreteMeasure m;
    m.dimension = dimension;
    const double h = 1.0 / (q + 1);
    if (dimension == 1) {
        for (int a = 1; a <= q; ++a) m.points.push_back(a * h);
    } else {
        for (int a = 1; a <= q; ++a) {
            for (int b = 1; b <= q; ++b) {
                m.points.push_back(a * h);
                m.points.push_back(b * h);
            }
        }
    }
    const int n = static_cast<int>(m.points.size()) / dimension;
    m.weights.resize(n);
    double total = 0.0;
    for (int p = 0; p < n; ++p) {
        const double v = density(m.point(p));
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument("initial density is negative or non-finite at particle " +
                                        std::to_string(p));
        }
        m.weights[p] = v;
        total += v;
    }
    if (!(total > 0.0)) throw std::invalid_argument("degenerate measure: initial density vanishes on the grid");
    for (double& w : m.weights) w /= total;
    return m;
}

Trajectories::Trajectories(int particles, int steps, int dimension)
    : particles_(particles), steps_(steps), dimension_(dimension)
{
    if (particles < 1 || steps < 1 || (dimension != 1 && dimension != 2)) {
        throw std::invalid_argument("invalid trajectory shape");
    }
    data_.assign(static_cast<std::size_t>(particles) * (steps + 1) * dimension, 0.0);
}

Trajectories stationary_trajectories(const DiscreteMeasure& measure, int steps)
{
    Trajectories x(measure.size(), steps, measure.dimension);
    for (int p = 0; p < measure.size(); ++p) {
        const auto y = measure.point(p);
        for (int i = 0; i <= steps; ++i) std::copy(y.begin(), y.end(), x.at(p, i).begin());
    }
    return x;
}

void MFGProblem::validate() const
{
    if (steps < 1) throw std::invalid_argument("number of time steps N must be >= 1");
    if (!initial_density.value) throw std::invalid_argument("initial density is not set");
    if (!terminal_cost.value || !terminal_cost.gradient) throw std::invalid_argument("terminal cost is not set");
}

namespace {

void check_shapes(const CoefficientPath& a, const Trajectories& x, const BasisSet& basis,
                  const DiscreteMeasure& measure)
{
    if (a.rows() != basis.size() || a.cols() != x.steps()) {
        throw std::invalid_argument("coefficient path is " + std::to_string(a.rows()) + "x" +
                                    std::to_string(a.cols()) + ", expected " + std::to_string(basis.size()) +
                                    "x" + std::to_string(x.steps()));
    }
    if (x.particles() != measure.size() || x.dimension() != measure.dimension ||
        x.dimension() != basis.dimension()) {
        throw std::invalid_argument("trajectories do not match the measure or basis");
    }
}

double squared_distance(std::span<const double> p, std::span<const double> q)
{
    double s = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) s += (p[j] - q[j]) * (p[j] - q[j]);
    return s;
}

}  // namespace

double quadratic_term(const CoefficientPath& a, const SpectralKernel& kernel, double dt)
{
    return 0.5 * dt * a.cwiseProduct(kernel.apply_j(a)).sum();
}

double saddle_value(const CoefficientPath& a, const Trajectories& x, const MFGProblem& problem,
                    const DiscreteMeasure& measure)
{
    const BasisSet& basis = problem.basis();
    check_shapes(a, x, basis, measure);
    const double h = problem.dt();
    const int n = x.steps();

    double kinetic = 0.0;
    double coupling = 0.0;
    double terminal = 0.0;
    std::vector<double> values(basis.size());
    for (int p = 0; p < measure.size(); ++p) {
        const double c = measure.weights[p];
        double kin = 0.0;
        double coup = 0.0;
        for (int i = 1; i <= n; ++i) {
            kin += squared_distance(x.at(p, i), x.at(p, i - 1));
            basis.eval_all(x.at(p, i), values);
            for (int k = 0; k < basis.size(); ++k) coup += a(k, i - 1) * values[k];
        }
        kinetic += c * kin / (2.0 * h);
        coupling += c * h * coup;
        terminal += c * problem.terminal_cost.value(x.at(p, n));
    }
    return quadratic_term(a, problem.kernel, h) - kinetic - coupling - terminal;
}

void detail::moment_into(const Trajectories& x, const DiscreteMeasure& measure, const BasisSet& basis,
                         CoefficientPath& out, int threads)
{
    if (x.particles() != measure.size() || x.dimension() != basis.dimension()) {
        throw std::invalid_argument("trajectories do not match the measure or basis");
    }
    const int r = basis.size();
    const int n = x.steps();
    out.setZero(r, n);
    (void)threads;
    MFG_PARALLEL_FOR(threads)
    for (int i = 1; i <= n; ++i) {
        thread_local std::vector<double> values;
        values.resize(r);
        auto col = out.col(i - 1);
        for (int q = 0; q < measure.size(); ++q) {
            basis.eval_all(x.at(q, i), values);
            const double c = measure.weights[q];
            for (int k = 0; k < r; ++k) col(k) += c * values[k];
        }
    }
}

CoefficientPath moment_vector(const Trajectories& x, const DiscreteMeasure& measure, const BasisSet& basis,
                              int threads)
{
    CoefficientPath p;
    detail::moment_into(x, measure, basis, p, threads);
    return p;
}

namespace {

// Single-trajectory discrete action with gradient, path variables x_1..x_N.
struct PathAction {
    const CoefficientPath& a;
    const MFGProblem& problem;
    std::span<const double> x0;

    double value(const std::vector<double>& x) const
    {
        const BasisSet& basis = problem.basis();
        const int d = basis.dimension();
        const int n = problem.steps;
        const double h = problem.dt();
        std::vector<double> values(basis.size());
        double f = 0.0;
        for (int i = 1; i <= n; ++i) {
            std::span<const double> xi(x.data() + (i - 1) * d, d);
            std::span<const double> prev = i == 1 ? x0 : std::span<const double>(x.data() + (i - 2) * d, d);
            f += squared_distance(xi, prev) / (2.0 * h);
            basis.eval_all(xi, values);
            double run = 0.0;
            for (int k = 0; k < basis.size(); ++k) run += a(k, i - 1) * values[k];
            f += h * run;
        }
        f += problem.terminal_cost.value(std::span<const double>(x.data() + (n - 1) * d, d));
        return f;
    }

    void gradient(const std::vector<double>& x, std::vector<double>& g) const
    {
        const BasisSet& basis = problem.basis();
        const int d = basis.dimension();
        const int n = problem.steps;
        const double h = problem.dt();
        std::vector<double> grads(static_cast<std::size_t>(basis.size()) * d);
        std::vector<double> gu(d);
        auto coord = [&](int i, int axis) { return i == 0 ? x0[axis] : x[(i - 1) * d + axis]; };
        for (int i = 1; i <= n; ++i) {
            basis.grad_all(std::span<const double>(x.data() + (i - 1) * d, d), grads);
            for (int axis = 0; axis < d; ++axis) {
                double gi = (coord(i, axis) - coord(i - 1, axis)) / h;
                if (i < n) gi -= (coord(i + 1, axis) - coord(i, axis)) / h;
                double ga = 0.0;
                for (int k = 0; k < basis.size(); ++k) ga += a(k, i - 1) * grads[k * d + axis];
                g[(i - 1) * d + axis] = gi + h * ga;
            }
        }
        problem.terminal_cost.gradient(std::span<const double>(x.data() + (n - 1) * d, d), gu);
        for (int axis = 0; axis < d; ++axis) g[(n - 1) * d + axis] += gu[axis];
    }
};

}  // namespace

double discrete_value_at(std::span<const double> x0, const CoefficientPath& a, const MFGProblem& problem,
                         const InnerSolverConfig& config)
{
    problem.validate();
    const int d = problem.dimension();
    const int n = problem.steps;
    if (static_cast<int>(x0.size()) != d) throw std::invalid_argument("starting point dimension mismatch");
    if (a.rows() != problem.basis().size() || a.cols() != n) {
        throw std::invalid_argument("coefficient path shape does not match the problem");
    }
    if (!(config.step > 0.0)) throw std::invalid_argument("inner solver step must be > 0");

    PathAction action{a, problem, x0};
    std::vector<double> x(static_cast<std::size_t>(n) * d);
    for (int i = 0; i < n; ++i) std::copy(x0.begin(), x0.end(), x.begin() + i * d);
    std::vector<double> g(x.size()), trial(x.size());

    double f = action.value(x);
    for (int it = 0; it < config.max_steps; ++it) {
        action.gradient(x, g);
        double t = config.step;
        double ft = std::numeric_limits<double>::infinity();
        double move = 0.0;
        for (int halvings = 0; halvings < 60; ++halvings, t *= 0.5) {
            move = 0.0;
            for (std::size_t j = 0; j < x.size(); ++j) {
                trial[j] = x[j] - t * g[j];
                move = std::max(move, std::abs(t * g[j]));
            }
            ft = action.value(trial);
            if (!std::isfinite(ft)) throw DivergenceError("discrete_value_at: non-finite action", it);
            if (ft <= f) break;
        }
        if (!(ft <= f)) break;
        x.swap(trial);
        f = ft;
        if (move < config.tol) break;
    }
    return f;
}

double discrete_G(const CoefficientPath& a, const MFGProblem& problem, const DiscreteMeasure& measure,
                  const InnerSolverConfig& config)
{
    double g = 0.0;
    for (int p = 0; p < measure.size(); ++p) {
        g += measure.weights[p] * discrete_value_at(measure.point(p), a, problem, config);
    }
    return g;
}

}  // namespace mfg
