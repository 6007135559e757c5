#include "mfg/basis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mfg {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kPi = std::numbers::pi;

void require_factor(int k)
{
    if (k < 1) {
        throw std::out_of_range("trigonometric basis index must be >= 1, got " + std::to_string(k));
    }
}

// Values and derivatives of phi_1..phi_kmax at one coordinate, 1-based.
struct FactorTable {
    std::vector<double> value;
    std::vector<double> derivative;

    void fill(int kmax, double x, bool with_derivative)
    {
        value.resize(kmax + 1);
        if (with_derivative) derivative.resize(kmax + 1);
        value[1] = 1.0;
        if (with_derivative) derivative[1] = 0.0;
        for (int n = 1; 2 * n <= kmax; ++n) {
            const double w = 2.0 * kPi * n;
            const double s = std::sin(w * x);
            const double c = std::cos(w * x);
            value[2 * n] = kSqrt2 * s;
            if (with_derivative) derivative[2 * n] = kSqrt2 * w * c;
            if (2 * n + 1 <= kmax) {
                value[2 * n + 1] = kSqrt2 * c;
                if (with_derivative) derivative[2 * n + 1] = -kSqrt2 * w * s;
            }
        }
    }
};

}  // namespace

double trig_value(int k, double x)
{
    require_factor(k);
    if (k == 1) return 1.0;
    const double w = 2.0 * kPi * trig_frequency(k);
    return (k % 2 == 0) ? kSqrt2 * std::sin(w * x) : kSqrt2 * std::cos(w * x);
}

double trig_derivative(int k, double x)
{
    require_factor(k);
    if (k == 1) return 0.0;
    const double w = 2.0 * kPi * trig_frequency(k);
    return (k % 2 == 0) ? kSqrt2 * w * std::cos(w * x) : -kSqrt2 * w * std::sin(w * x);
}

double trig_lipschitz(int k)
{
    require_factor(k);
    return 2.0 * kSqrt2 * kPi * trig_frequency(k);
}

double trig_sup(int k)
{
    require_factor(k);
    return k == 1 ? 1.0 : kSqrt2;
}

std::vector<BasisIndex> tensor_indices(int r)
{
    if (r < 2) {
        throw std::invalid_argument("tensor basis truncation must be >= 2, got " + std::to_string(r));
    }
    std::vector<BasisIndex> out;
    out.reserve(static_cast<std::size_t>(r) * (r - 1) / 2);
    for (int k = 1; k < r; ++k) {
        for (int kp = 1; k + kp <= r; ++kp) out.push_back({k, kp});
    }
    return out;
}

BasisSet::BasisSet(int dimension, std::vector<BasisIndex> factors)
    : dimension_(dimension), factors_(std::move(factors))
{
    if (dimension_ != 1 && dimension_ != 2) {
        throw std::invalid_argument("basis dimension must be 1 or 2");
    }
    if (factors_.empty()) throw std::invalid_argument("basis must contain at least one function");
    max_factor_ = 1;
    for (const auto& f : factors_) {
        require_factor(f[0]);
        if (dimension_ == 1) {
            if (f[1] != 0) throw std::invalid_argument("1D basis indices must have a zero second factor");
        } else {
            require_factor(f[1]);
        }
        max_factor_ = std::max({max_factor_, f[0], f[1]});
    }
}

BasisSet BasisSet::one_dimensional(int r)
{
    if (r < 1) throw std::invalid_argument("basis size must be >= 1, got " + std::to_string(r));
    std::vector<BasisIndex> f;
    f.reserve(r);
    for (int k = 1; k <= r; ++k) f.push_back({k, 0});
    return BasisSet(1, std::move(f));
}

BasisSet BasisSet::tensor(int r) { return BasisSet(2, tensor_indices(r)); }

BasisSet BasisSet::from_factors(int dimension, std::vector<BasisIndex> factors)
{
    return BasisSet(dimension, std::move(factors));
}

void BasisSet::check_index(int index) const
{
    if (index < 1 || index > size()) {
        throw std::out_of_range("basis index " + std::to_string(index) + " outside [1, " +
                                std::to_string(size()) + "]");
    }
}

void BasisSet::check_point(std::span<const double> x) const
{
    if (static_cast<int>(x.size()) != dimension_) {
        throw std::invalid_argument("point has " + std::to_string(x.size()) + " coordinates, basis is " +
                                    std::to_string(dimension_) + "D");
    }
}

const BasisIndex& BasisSet::factors(int index) const
{
    check_index(index);
    return factors_[index - 1];
}

std::array<int, 2> BasisSet::frequencies(int index) const
{
    const auto& f = factors(index);
    return {trig_frequency(f[0]), dimension_ == 2 ? trig_frequency(f[1]) : 0};
}

double BasisSet::eval(int index, std::span<const double> x) const
{
    check_index(index);
    check_point(x);
    const auto& f = factors_[index - 1];
    double v = trig_value(f[0], x[0]);
    if (dimension_ == 2) v *= trig_value(f[1], x[1]);
    return v;
}

void BasisSet::grad(int index, std::span<const double> x, std::span<double> out) const
{
    check_index(index);
    check_point(x);
    if (static_cast<int>(out.size()) != dimension_) throw std::invalid_argument("gradient buffer size mismatch");
    const auto& f = factors_[index - 1];
    if (dimension_ == 1) {
        out[0] = trig_derivative(f[0], x[0]);
        return;
    }
    const double v0 = trig_value(f[0], x[0]);
    const double v1 = trig_value(f[1], x[1]);
    out[0] = trig_derivative(f[0], x[0]) * v1;
    out[1] = v0 * trig_derivative(f[1], x[1]);
}

double BasisSet::lipschitz(int index) const
{
    const auto& f = factors(index);
    if (dimension_ == 1) return trig_lipschitz(f[0]);
    // Product rule: |grad(f g)| <= sqrt(L_f^2 S_g^2 + S_f^2 L_g^2).
    const double l0 = trig_lipschitz(f[0]) * trig_sup(f[1]);
    const double l1 = trig_sup(f[0]) * trig_lipschitz(f[1]);
    return std::sqrt(l0 * l0 + l1 * l1);
}

void BasisSet::eval_all(std::span<const double> x, std::span<double> values) const
{
    if (static_cast<int>(values.size()) != size()) throw std::invalid_argument("value buffer size mismatch");
    check_point(x);
    thread_local FactorTable t0;
    thread_local FactorTable t1;
    t0.fill(max_factor_, x[0], false);
    if (dimension_ == 2) t1.fill(max_factor_, x[1], false);
    for (std::size_t j = 0; j < factors_.size(); ++j) {
        const auto& f = factors_[j];
        values[j] = dimension_ == 1 ? t0.value[f[0]] : t0.value[f[0]] * t1.value[f[1]];
    }
}

void BasisSet::grad_all(std::span<const double> x, std::span<double> grads) const
{
    if (static_cast<int>(grads.size()) != size() * dimension_) {
        throw std::invalid_argument("gradient buffer size mismatch");
    }
    check_point(x);
    thread_local FactorTable t0;
    thread_local FactorTable t1;
    t0.fill(max_factor_, x[0], true);
    if (dimension_ == 1) {
        for (std::size_t j = 0; j < factors_.size(); ++j) grads[j] = t0.derivative[factors_[j][0]];
        return;
    }
    t1.fill(max_factor_, x[1], true);
    for (std::size_t j = 0; j < factors_.size(); ++j) {
        const auto& f = factors_[j];
        grads[2 * j] = t0.derivative[f[0]] * t1.value[f[1]];
        grads[2 * j + 1] = t0.value[f[0]] * t1.derivative[f[1]];
    }
}

}  // namespace mfg
