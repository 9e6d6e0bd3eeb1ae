#include "shiftlab/piecewise_linear.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "shiftlab/errors.hpp"

namespace shiftlab {

namespace {

struct PieceValues {
    double left;
    double right;
};

// Values of f at the ends of [x0, x1], where [x0, x1] lies inside one piece of f
// or entirely outside its domain.
PieceValues piece_values(const PiecewiseLinearFn& f, double x0, double x1) {
    const double mid = 0.5 * (x0 + x1);
    if (mid < f.front() || mid > f.back()) return {0.0, 0.0};
    return {f(x0), f(x1)};
}

double simpson(double width, double f0, double fm, double f1) {
    return width * (f0 + 4.0 * fm + f1) / 6.0;
}

void check_range(double a, double b) {
    if (!(a <= b)) {
        throw InvalidParameter("integration range is empty or reversed: [" + std::to_string(a) + ", " +
                               std::to_string(b) + "]");
    }
}

}  // namespace

PiecewiseLinearFn::PiecewiseLinearFn(std::vector<double> breakpoints, std::vector<double> values)
    : xs_(std::move(breakpoints)), ys_(std::move(values)) {
    if (xs_.size() < 2) throw InvalidParameter("piecewise-linear function needs at least two breakpoints");
    if (xs_.size() != ys_.size()) throw InvalidParameter("breakpoint and value counts differ");
    for (std::size_t i = 0; i + 1 < xs_.size(); ++i) {
        if (!(xs_[i] < xs_[i + 1])) throw InvalidParameter("breakpoints must be strictly increasing");
    }
    for (double y : ys_) {
        if (!std::isfinite(y)) throw InvalidParameter("function values must be finite");
    }
}

PiecewiseLinearFn PiecewiseLinearFn::constant(double value, double lo, double hi) {
    return PiecewiseLinearFn({lo, hi}, {value, value});
}

double PiecewiseLinearFn::operator()(double x) const {
    if (x < xs_.front() || x > xs_.back()) return 0.0;
    auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    if (it == xs_.end()) return ys_.back();
    const std::size_t i = static_cast<std::size_t>(it - xs_.begin()) - 1;
    if (x == xs_[i]) return ys_[i];
    const double t = (x - xs_[i]) / (xs_[i + 1] - xs_[i]);
    return ys_[i] + t * (ys_[i + 1] - ys_[i]);
}

PiecewiseLinearFn PiecewiseLinearFn::translated(double shift) const {
    std::vector<double> xs(xs_);
    for (double& x : xs) x += shift;
    return PiecewiseLinearFn(std::move(xs), ys_);
}

PiecewiseLinearFn PiecewiseLinearFn::scaled(double factor) const {
    std::vector<double> ys(ys_);
    for (double& y : ys) y *= factor;
    return PiecewiseLinearFn(xs_, std::move(ys));
}

PiecewiseLinearFn PiecewiseLinearFn::combine(double alpha, const PiecewiseLinearFn& f, double beta,
                                             const PiecewiseLinearFn& g) {
    if (f.front() != g.front() || f.back() != g.back()) {
        throw InvalidParameter("combine requires functions on the same domain");
    }
    const PiecewiseLinearFn* fns[] = {&f, &g};
    std::vector<double> xs = merged_breakpoints(fns, f.front(), f.back());
    std::vector<double> ys(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = alpha * f(xs[i]) + beta * g(xs[i]);
    return PiecewiseLinearFn(std::move(xs), std::move(ys));
}

std::vector<double> merged_breakpoints(std::span<const PiecewiseLinearFn* const> fns, double a, double b) {
    std::vector<double> xs{a, b};
    for (const PiecewiseLinearFn* f : fns) {
        for (double x : f->breakpoints()) {
            if (x > a && x < b) xs.push_back(x);
        }
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    return xs;
}

PiecewiseLinearFn hat_function(int K) {
    if (K < 1) throw InvalidParameter("hat function needs K >= 1, got " + std::to_string(K));
    const double q = 1.0 / (4.0 * K);
    const double h = 1.0 / (2.0 * K);
    return PiecewiseLinearFn({-h, -q, 0.0, q, h}, {0.0, -q, 0.0, q, 0.0});
}

PiecewiseLinearFn hat_perturbation(std::span<const int> coeff, double base, double scale) {
    const int K = static_cast<int>(coeff.size());
    if (K < 1) throw InvalidParameter("hat perturbation needs at least one bin");
    const double peak = scale / (4.0 * K);
    const int n = 4 * K;
    std::vector<double> xs(static_cast<std::size_t>(n) + 1);
    std::vector<double> ys(xs.size());
    for (int i = 0; i <= n; ++i) {
        xs[static_cast<std::size_t>(i)] = static_cast<double>(i) / n;
        double y = base;
        if (i < n) {
            const int c = coeff[static_cast<std::size_t>(i / 4)];
            if (i % 4 == 1) y = base - c * peak;
            if (i % 4 == 3) y = base + c * peak;
        }
        ys[static_cast<std::size_t>(i)] = y;
    }
    xs.back() = 1.0;
    return PiecewiseLinearFn(std::move(xs), std::move(ys));
}

double integrate(const PiecewiseLinearFn& f, double a, double b) {
    check_range(a, b);
    const PiecewiseLinearFn* fns[] = {&f};
    const std::vector<double> xs = merged_breakpoints(fns, a, b);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        const auto [y0, y1] = piece_values(f, xs[i], xs[i + 1]);
        total += 0.5 * (xs[i + 1] - xs[i]) * (y0 + y1);
    }
    return total;
}

double integrate(const PiecewiseLinearFn& f) { return integrate(f, f.front(), f.back()); }

double integrate_abs(const PiecewiseLinearFn& f, double a, double b) {
    check_range(a, b);
    const PiecewiseLinearFn* fns[] = {&f};
    const std::vector<double> xs = merged_breakpoints(fns, a, b);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        const double w = xs[i + 1] - xs[i];
        const auto [y0, y1] = piece_values(f, xs[i], xs[i + 1]);
        if ((y0 < 0.0 && y1 > 0.0) || (y0 > 0.0 && y1 < 0.0)) {
            total += 0.5 * w * (y0 * y0 + y1 * y1) / (std::abs(y0) + std::abs(y1));
        } else {
            total += 0.5 * w * std::abs(y0 + y1);
        }
    }
    return total;
}

double integrate_product(const PiecewiseLinearFn& w, const PiecewiseLinearFn& g, double a, double b) {
    check_range(a, b);
    const PiecewiseLinearFn* fns[] = {&w, &g};
    const std::vector<double> xs = merged_breakpoints(fns, a, b);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        const auto [w0, w1] = piece_values(w, xs[i], xs[i + 1]);
        const auto [g0, g1] = piece_values(g, xs[i], xs[i + 1]);
        total += simpson(xs[i + 1] - xs[i], w0 * g0, 0.25 * (w0 + w1) * (g0 + g1), w1 * g1);
    }
    return total;
}

double integrate_product_abs(const PiecewiseLinearFn& w, const PiecewiseLinearFn& g, double a, double b) {
    check_range(a, b);
    const PiecewiseLinearFn* fns[] = {&w, &g};
    const std::vector<double> xs = merged_breakpoints(fns, a, b);
    double total = 0.0;
    auto signed_piece = [](double width, double w0, double w1, double g0, double g1) {
        return simpson(width, w0 * g0, 0.25 * (w0 + w1) * (g0 + g1), w1 * g1);
    };
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        const double x0 = xs[i];
        const double x1 = xs[i + 1];
        const auto [w0, w1] = piece_values(w, x0, x1);
        const auto [g0, g1] = piece_values(g, x0, x1);
        if ((g0 < 0.0 && g1 > 0.0) || (g0 > 0.0 && g1 < 0.0)) {
            const double t = g0 / (g0 - g1);
            const double r = x0 + t * (x1 - x0);
            const double wr = w0 + t * (w1 - w0);
            total += std::abs(signed_piece(r - x0, w0, wr, g0, 0.0));
            total += std::abs(signed_piece(x1 - r, wr, w1, 0.0, g1));
        } else {
            total += std::abs(signed_piece(x1 - x0, w0, w1, g0, g1));
        }
    }
    return total;
}

LipschitzCertificate lipschitz_constant(const PiecewiseLinearFn& f) {
    const auto xs = f.breakpoints();
    const auto ys = f.values();
    double best = 0.0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        best = std::max(best, std::abs((ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])));
    }
    return {best};
}

}  // namespace shiftlab
