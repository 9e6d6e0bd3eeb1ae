#include "shiftlab/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "shiftlab/errors.hpp"

namespace shiftlab {

Density::Density(PiecewiseLinearFn shape) : shape_(std::move(shape)), mass_(0.0) {
    if (shape_.front() != 0.0 || shape_.back() != 1.0) {
        throw InvalidParameter("density must be supported on exactly [0, 1]");
    }
    for (double y : shape_.values()) {
        if (y < 0.0) throw InvalidParameter("density is negative at a breakpoint");
    }
    const auto xs = shape_.breakpoints();
    const auto ys = shape_.values();
    cumulative_.resize(xs.size());
    cumulative_[0] = 0.0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        cumulative_[i + 1] = cumulative_[i] + 0.5 * (xs[i + 1] - xs[i]) * (ys[i] + ys[i + 1]);
    }
    mass_ = cumulative_.back();
    if (std::abs(mass_ - 1.0) > kMassTolerance) {
        throw InvalidParameter("density mass is " + std::to_string(mass_) + ", expected 1");
    }
}

Density Density::uniform() { return Density(PiecewiseLinearFn::constant(1.0)); }

Density Density::step(double left_level, double right_level) {
    const double h = 0.5 * kStepRamp;
    return Density(PiecewiseLinearFn({0.0, 0.5 - h, 0.5 + h, 1.0},
                                     {left_level, left_level, right_level, right_level}));
}

double Density::cdf(double x) const {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return mass_;
    const auto xs = shape_.breakpoints();
    const auto ys = shape_.values();
    const std::size_t i = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin()) - 1;
    const double fx = shape_(x);
    return cumulative_[i] + 0.5 * (x - xs[i]) * (ys[i] + fx);
}

double Density::inverse_cdf(double u) const {
    const auto xs = shape_.breakpoints();
    const auto ys = shape_.values();
    const double target = std::clamp(u, 0.0, 1.0) * mass_;
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    std::size_t i = it == cumulative_.begin() ? 0 : static_cast<std::size_t>(it - cumulative_.begin()) - 1;
    // Land on a piece with positive mass; roundoff at the top end can push past the last one.
    const std::size_t last = xs.size() - 2;
    if (i > last) i = last;
    while (i > 0 && cumulative_[i + 1] <= cumulative_[i]) --i;

    const double width = xs[i + 1] - xs[i];
    const double r = std::max(0.0, target - cumulative_[i]);
    // Mass up to fraction t of the piece: a t^2 + b t with a = (y1 - y0) w / 2, b = y0 w.
    const double a = 0.5 * (ys[i + 1] - ys[i]) * width;
    const double b = ys[i] * width;
    const double disc = std::max(0.0, b * b + 4.0 * a * r);
    const double denom = b + std::sqrt(disc);
    double t = denom > 0.0 ? 2.0 * r / denom : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::min(1.0, xs[i] + t * width);
}

double tv_distance(const Density& p, const Density& q) {
    const auto diff = PiecewiseLinearFn::combine(1.0, p.shape(), -1.0, q.shape());
    return std::clamp(0.5 * integrate_abs(diff, 0.0, 1.0), 0.0, 1.0);
}

double overlap(const Density& p, const Density& q) { return 1.0 - tv_distance(p, q); }

namespace {

struct LinearPiece {
    double x0, x1, p0, p1, q0, q1;

    double p(double x) const { return p0 + (p1 - p0) * (x - x0) / (x1 - x0); }
    double q(double x) const { return q0 + (q1 - q0) * (x - x0) / (x1 - x0); }

    double integrand(double x) const {
        const double px = p(x);
        if (px <= 0.0) return 0.0;
        return px * std::log(px / q(x));
    }
};

constexpr double kKlTolerance = 1e-10;
constexpr int kKlMaxDepth = 40;

double adaptive_simpson(const LinearPiece& piece, double a, double b, double fa, double fm, double fb,
                        double whole, double eps, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = piece.integrand(lm);
    const double frm = piece.integrand(rm);
    const double left = (m - a) * (fa + 4.0 * flm + fm) / 6.0;
    const double right = (b - m) * (fm + 4.0 * frm + fb) / 6.0;
    const double delta = left + right - whole;
    if (depth >= kKlMaxDepth || std::abs(delta) <= 15.0 * eps) return left + right + delta / 15.0;
    return adaptive_simpson(piece, a, m, fa, flm, fm, left, 0.5 * eps, depth + 1) +
           adaptive_simpson(piece, m, b, fm, frm, fb, right, 0.5 * eps, depth + 1);
}

}  // namespace

double kl_divergence(const Density& p, const Density& q) {
    const PiecewiseLinearFn* fns[] = {&p.shape(), &q.shape()};
    const std::vector<double> xs = merged_breakpoints(fns, 0.0, 1.0);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        const LinearPiece piece{xs[i], xs[i + 1], p(xs[i]), p(xs[i + 1]), q(xs[i]), q(xs[i + 1])};
        if ((piece.p0 > 0.0 && piece.q0 <= 0.0) || (piece.p1 > 0.0 && piece.q1 <= 0.0)) {
            return std::numeric_limits<double>::infinity();
        }
        if (piece.p0 <= 0.0 && piece.p1 <= 0.0) continue;
        const double fa = piece.integrand(piece.x0);
        const double fb = piece.integrand(piece.x1);
        const double fm = piece.integrand(0.5 * (piece.x0 + piece.x1));
        const double whole = (piece.x1 - piece.x0) * (fa + 4.0 * fm + fb) / 6.0;
        total += adaptive_simpson(piece, piece.x0, piece.x1, fa, fm, fb, whole, kKlTolerance, 0);
    }
    return std::max(0.0, total);
}

double sample(const Density& p, Rng& rng) { return p.inverse_cdf(rng.uniform()); }

}  // namespace shiftlab
