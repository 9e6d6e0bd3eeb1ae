#include "shiftlab/risk.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "shiftlab/errors.hpp"

namespace shiftlab {

double risk(const PiecewiseConstantClassifier& f, const ShiftInstance& instance) {
    const auto xs = f.breakpoints();
    const auto labels = f.labels();
    double total = 0.0;
    if (instance.kind() == Scenario::LabelShift) {
        // Predicting -1 errs on the +1 class and vice versa; each class has test mass 1/2.
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const Density& wrong = labels[i] < 0 ? instance.p_maj() : instance.p_min();
            total += 0.5 * integrate(wrong.shape(), xs[i], xs[i + 1]);
        }
    } else {
        const PiecewiseLinearFn& w = instance.test_marginal();
        const PiecewiseLinearFn& eta = instance.eta();
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const double positive = integrate_product(w, eta, xs[i], xs[i + 1]);
            total += labels[i] < 0 ? positive : integrate(w, xs[i], xs[i + 1]) - positive;
        }
    }
    return std::clamp(total, 0.0, 1.0);
}

namespace {

constexpr double kRootMerge = 1e-14;

// +1 where g > 0, -1 elsewhere, with cells split at the sign changes of g.
PiecewiseConstantClassifier sign_classifier(const PiecewiseLinearFn& g) {
    const auto xs = g.breakpoints();
    const auto ys = g.values();
    std::vector<double> cuts{xs.front()};
    std::vector<int> labels;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        const double x0 = xs[i], x1 = xs[i + 1], y0 = ys[i], y1 = ys[i + 1];
        if ((y0 < 0.0 && y1 > 0.0) || (y0 > 0.0 && y1 < 0.0)) {
            const double r = x0 + (x1 - x0) * y0 / (y0 - y1);
            if (r - x0 > kRootMerge && x1 - r > kRootMerge) {
                labels.push_back(y0 > 0.0 ? 1 : -1);
                cuts.push_back(r);
                labels.push_back(y1 > 0.0 ? 1 : -1);
                cuts.push_back(x1);
                continue;
            }
        }
        labels.push_back(0.5 * (y0 + y1) > 0.0 ? 1 : -1);
        cuts.push_back(x1);
    }
    return PiecewiseConstantClassifier(std::move(cuts), std::move(labels)).simplified();
}

}  // namespace

BayesSolution bayes_risk(const ShiftInstance& instance) {
    if (instance.kind() == Scenario::LabelShift) {
        const auto diff = PiecewiseLinearFn::combine(1.0, instance.p_maj().shape(), -1.0, instance.p_min().shape());
        // (1/2) * integral of min(P_1, P_-1) = (1/2) * (2 - integral |P_1 - P_-1|) / 2.
        const double abs_diff = integrate_abs(diff, 0.0, 1.0);
        const double value = 0.25 * (instance.p_maj().total_mass() + instance.p_min().total_mass() - abs_diff);
        return {sign_classifier(diff), std::clamp(value, 0.0, 1.0)};
    }
    const PiecewiseLinearFn& w = instance.test_marginal();
    const PiecewiseLinearFn centred =
        PiecewiseLinearFn::combine(1.0, instance.eta(), -0.5, PiecewiseLinearFn::constant(1.0));
    // min(eta, 1 - eta) = 1/2 - |eta - 1/2|.
    const double value = 0.5 * integrate(w, 0.0, 1.0) - integrate_product_abs(w, centred, 0.0, 1.0);
    return {sign_classifier(centred), std::clamp(value, 0.0, 1.0)};
}

RiskReport excess_risk(const PiecewiseConstantClassifier& f, const ShiftInstance& instance, double bayes) {
    RiskReport report;
    report.risk = risk(f, instance);
    report.bayes_risk = bayes;
    report.excess_risk = report.risk - report.bayes_risk;
    if (report.excess_risk < -kExcessFloor) {
        throw ConsistencyError("negative excess risk " + std::to_string(report.excess_risk));
    }
    return report;
}

RiskReport excess_risk(const PiecewiseConstantClassifier& f, const ShiftInstance& instance) {
    return excess_risk(f, instance, bayes_risk(instance).risk);
}

std::vector<double> bin_test_mass(const ShiftInstance& instance, int K) {
    if (K < 1) throw InvalidParameter("number of bins must be >= 1");
    std::vector<double> mass(static_cast<std::size_t>(K));
    for (int j = 0; j < K; ++j) {
        const double lo = static_cast<double>(j) / K;
        const double hi = j + 1 == K ? 1.0 : static_cast<double>(j + 1) / K;
        mass[static_cast<std::size_t>(j)] = integrate(instance.test_marginal(), lo, hi);
    }
    return mass;
}

std::vector<double> per_interval_excess(const PiecewiseConstantClassifier& f, const ShiftInstance& instance,
                                        int K) {
    if (instance.kind() != Scenario::GroupShift) {
        throw WrongScenario("per-interval excess risk is defined for group-shift instances");
    }
    if (K < 1) throw InvalidParameter("number of bins must be >= 1");
    const PiecewiseLinearFn& w = instance.test_marginal();
    const auto cuts = f.breakpoints();
    std::vector<double> out(static_cast<std::size_t>(K));
    for (int j = 0; j < K; ++j) {
        const double lo = static_cast<double>(j) / K;
        const double hi = j + 1 == K ? 1.0 : static_cast<double>(j + 1) / K;
        // Every classifier cut must sit on a bin edge, so f is constant on [lo, hi).
        for (double c : cuts) {
            if (c > lo && c < hi) {
                throw InvalidParameter("classifier is not constant on bin " + std::to_string(j));
            }
        }
        const int label = f(0.5 * (lo + hi));
        const double mass = integrate(w, lo, hi);
        if (mass <= 0.0) {
            out[static_cast<std::size_t>(j)] = 0.0;
            continue;
        }
        const double q_plus = integrate_product(w, instance.eta(), lo, hi) / mass;
        const double q_minus = 1.0 - q_plus;
        const double err = label > 0 ? q_minus : q_plus;
        out[static_cast<std::size_t>(j)] = std::max(0.0, err - std::min(q_plus, q_minus));
    }
    return out;
}

double lower_bound_label_shift(std::size_t n_min) {
    if (n_min == 0) throw InvalidParameter("n_min must be >= 1");
    return 1.0 / (600.0 * std::cbrt(static_cast<double>(n_min)));
}

GroupShiftBound lower_bound_group_shift(std::size_t n_min, std::size_t n_maj, double tau) {
    if (n_min == 0) throw InvalidParameter("n_min must be >= 1");
    if (n_maj < n_min) throw InvalidParameter("n_maj must be >= n_min");
    if (!(tau >= 0.0 && tau <= 1.0)) throw InvalidParameter("tau must lie in [0, 1]");
    const double nmin = static_cast<double>(n_min);
    const double nmaj = static_cast<double>(n_maj);
    const double effective = nmin * (2.0 - tau) + nmaj * tau;
    const double rho = nmaj / nmin;
    return {1.0 / (200.0 * std::cbrt(effective)), 1.0 / (200.0 * std::cbrt(nmin) * std::cbrt(rho * tau + 2.0))};
}

double intermediate_lower_bound_label_shift(std::size_t n_min, int K) {
    if (n_min == 0) throw InvalidParameter("n_min must be >= 1");
    if (K < 1) throw InvalidParameter("K must be >= 1");
    const double k = K;
    return std::exp(-static_cast<double>(n_min) / (3.0 * k * k * k)) / (288.0 * k);
}

std::size_t ceil_cube_root(std::size_t n) {
    if (n <= 1) return n;
    auto k = static_cast<std::size_t>(std::llround(std::cbrt(static_cast<double>(n))));
    while (k * k * k < n) ++k;
    while (k > 1 && (k - 1) * (k - 1) * (k - 1) >= n) --k;
    return k;
}

}  // namespace shiftlab
