#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace shiftlab {

// Continuous piecewise-linear function given by its values at strictly increasing
// breakpoints. Linear between consecutive breakpoints and zero outside
// [front(), back()]. Densities and conditionals live on [0, 1]; the bare hat
// function lives on its own support and is translated by callers.
class PiecewiseLinearFn {
public:
    PiecewiseLinearFn(std::vector<double> breakpoints, std::vector<double> values);

    static PiecewiseLinearFn constant(double value, double lo = 0.0, double hi = 1.0);

    double operator()(double x) const;

    std::span<const double> breakpoints() const noexcept { return xs_; }
    std::span<const double> values() const noexcept { return ys_; }
    std::size_t size() const noexcept { return xs_.size(); }
    double front() const noexcept { return xs_.front(); }
    double back() const noexcept { return xs_.back(); }

    PiecewiseLinearFn translated(double shift) const;
    PiecewiseLinearFn scaled(double factor) const;

    // alpha * f + beta * g on the union of breakpoints (zero extension outside each domain).
    static PiecewiseLinearFn combine(double alpha, const PiecewiseLinearFn& f, double beta,
                                     const PiecewiseLinearFn& g);

    friend bool operator==(const PiecewiseLinearFn&, const PiecewiseLinearFn&) = default;

private:
    std::vector<double> xs_;
    std::vector<double> ys_;
};

// Sorted union of breakpoints of all functions restricted to [a, b], with a and b included.
std::vector<double> merged_breakpoints(std::span<const PiecewiseLinearFn* const> fns, double a, double b);

// The hat function phi_K on its support [-1/(2K), 1/(2K)]: odd, 1-Lipschitz,
// minimum -1/(4K) at -1/(4K) and maximum 1/(4K) at 1/(4K).
PiecewiseLinearFn hat_function(int K);

// 1 + sum_j coeff[j] * scale * phi_K(x - (j + 1/2)/K) on [0, 1], K = coeff.size().
// Breakpoints at multiples of 1/(4K).
PiecewiseLinearFn hat_perturbation(std::span<const int> coeff, double base, double scale);

// Exact integral over [a, b] (closed-form trapezoid on each piece).
// Requires front() <= a <= b <= back().
double integrate(const PiecewiseLinearFn& f, double a, double b);
double integrate(const PiecewiseLinearFn& f);

// Exact integral of |f| over [a, b], splitting pieces at sign changes.
double integrate_abs(const PiecewiseLinearFn& f, double a, double b);

// Exact integral of w*g over [a, b]; the product is quadratic on each merged piece.
double integrate_product(const PiecewiseLinearFn& w, const PiecewiseLinearFn& g, double a, double b);

// Exact integral of w*|g| over [a, b].
double integrate_product_abs(const PiecewiseLinearFn& w, const PiecewiseLinearFn& g, double a, double b);

struct LipschitzCertificate {
    double constant = 0.0;  // max |slope| over pieces
};

LipschitzCertificate lipschitz_constant(const PiecewiseLinearFn& f);

}  // namespace shiftlab
