#pragma once

#include <vector>

#include "shiftlab/piecewise_linear.hpp"
#include "shiftlab/rng.hpp"

namespace shiftlab {

// Probability density on [0, 1] with continuous piecewise-linear shape.
// Construction validates: domain exactly [0, 1], values >= 0 at every breakpoint
// (sufficient for piecewise-linear), and mass within kMassTolerance of 1.
class Density {
public:
    static constexpr double kMassTolerance = 1e-12;

    explicit Density(PiecewiseLinearFn shape);

    static Density uniform();

    // 2 - tau on [0, 1/2), tau on [1/2, 1]; the jump is replaced by a linear ramp of
    // width kStepRamp centred on 1/2, which keeps mass exact and moves overlap by < 1e-9.
    static constexpr double kStepRamp = 1e-9;
    static Density step(double left_level, double right_level);

    const PiecewiseLinearFn& shape() const noexcept { return shape_; }
    double total_mass() const noexcept { return mass_; }
    double operator()(double x) const { return shape_(x); }

    // Exact inverse CDF; u in [0, 1].
    double inverse_cdf(double u) const;

    double cdf(double x) const;

private:
    PiecewiseLinearFn shape_;
    double mass_;
    std::vector<double> cumulative_;  // mass to the left of each breakpoint
};

// (1/2) * integral |p - q|, computed exactly.
double tv_distance(const Density& p, const Density& q);

// 1 - TV.
double overlap(const Density& p, const Density& q);

// Integral of p log(p/q) by per-piece adaptive Simpson. Returns +infinity when p
// puts mass where q vanishes.
double kl_divergence(const Density& p, const Density& q);

double sample(const Density& p, Rng& rng);

}  // namespace shiftlab
