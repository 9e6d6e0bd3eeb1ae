#include "shiftlab/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "shiftlab/errors.hpp"

namespace shiftlab {

PiecewiseConstantClassifier::PiecewiseConstantClassifier(std::vector<double> breakpoints, std::vector<int> labels)
    : xs_(std::move(breakpoints)), labels_(std::move(labels)) {
    if (xs_.size() < 2 || labels_.size() + 1 != xs_.size()) {
        throw InvalidParameter("classifier needs one label per cell");
    }
    if (xs_.front() != 0.0 || xs_.back() != 1.0) throw InvalidParameter("classifier must cover [0, 1]");
    for (std::size_t i = 0; i + 1 < xs_.size(); ++i) {
        if (!(xs_[i] < xs_[i + 1])) throw InvalidParameter("classifier breakpoints must increase");
    }
    for (int l : labels_) {
        if (l != 1 && l != -1) throw InvalidParameter("classifier labels must be -1 or +1");
    }
}

PiecewiseConstantClassifier PiecewiseConstantClassifier::constant(int label) {
    return PiecewiseConstantClassifier({0.0, 1.0}, {label});
}

PiecewiseConstantClassifier PiecewiseConstantClassifier::from_bins(std::span<const int> labels) {
    const std::size_t K = labels.size();
    if (K == 0) throw InvalidParameter("need at least one bin");
    std::vector<double> xs(K + 1);
    for (std::size_t j = 0; j <= K; ++j) xs[j] = static_cast<double>(j) / static_cast<double>(K);
    xs.back() = 1.0;
    return PiecewiseConstantClassifier(std::move(xs), std::vector<int>(labels.begin(), labels.end()));
}

int PiecewiseConstantClassifier::operator()(double x) const {
    auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    std::size_t cell = it == xs_.begin() ? 0 : static_cast<std::size_t>(it - xs_.begin()) - 1;
    return labels_[std::min(cell, labels_.size() - 1)];
}

PiecewiseConstantClassifier PiecewiseConstantClassifier::flipped() const {
    std::vector<int> labels(labels_);
    for (int& l : labels) l = -l;
    return PiecewiseConstantClassifier(xs_, std::move(labels));
}

PiecewiseConstantClassifier PiecewiseConstantClassifier::simplified() const {
    std::vector<double> xs{xs_.front()};
    std::vector<int> labels{labels_.front()};
    for (std::size_t i = 1; i < labels_.size(); ++i) {
        if (labels_[i] != labels.back()) {
            xs.push_back(xs_[i]);
            labels.push_back(labels_[i]);
        }
    }
    xs.push_back(xs_.back());
    return PiecewiseConstantClassifier(std::move(xs), std::move(labels));
}

std::size_t bin_index(double x, int K) {
    const double scaled = std::floor(x * K);
    if (scaled <= 0.0) return 0;
    return std::min(static_cast<std::size_t>(scaled), static_cast<std::size_t>(K) - 1);
}

namespace {

void check_bins(int K) {
    if (K < 1) throw InvalidParameter("number of bins must be >= 1, got " + std::to_string(K));
}

PiecewiseConstantClassifier weighted_vote(const Dataset& data, int K, double minority_weight) {
    std::vector<double> plus(static_cast<std::size_t>(K), 0.0);
    std::vector<double> minus(static_cast<std::size_t>(K), 0.0);
    for (const Sample& s : data.samples) {
        const double w = s.group == Group::Minority ? minority_weight : 1.0;
        (s.y > 0 ? plus : minus)[bin_index(s.x, K)] += w;
    }
    std::vector<int> labels(static_cast<std::size_t>(K));
    for (std::size_t j = 0; j < labels.size(); ++j) labels[j] = plus[j] > minus[j] ? 1 : -1;
    return PiecewiseConstantClassifier::from_bins(labels);
}

}  // namespace

PiecewiseConstantClassifier majority_vote_binning(const Dataset& data, int K) {
    check_bins(K);
    std::vector<long> margin(static_cast<std::size_t>(K), 0);
    for (const Sample& s : data.samples) margin[bin_index(s.x, K)] += s.y;
    std::vector<int> labels(static_cast<std::size_t>(K));
    for (std::size_t j = 0; j < labels.size(); ++j) labels[j] = margin[j] > 0 ? 1 : -1;
    return PiecewiseConstantClassifier::from_bins(labels);
}

PiecewiseConstantClassifier fit_undersampled_binning(const Dataset& data, int K, Rng& rng) {
    check_bins(K);
    if (data.n_min == 0) throw InsufficientData("undersampled binning needs at least one minority sample");
    return majority_vote_binning(undersample(data, rng), K);
}

PiecewiseConstantClassifier fit_full_binning(const Dataset& data, int K) {
    check_bins(K);
    if (data.samples.empty()) throw InsufficientData("full binning needs a nonempty dataset");
    return majority_vote_binning(data, K);
}

PiecewiseConstantClassifier fit_weighted_binning(const Dataset& data, int K) {
    check_bins(K);
    if (data.n_min == 0) throw InsufficientData("weighted binning needs at least one minority sample");
    const double rho = static_cast<double>(data.n_maj) / static_cast<double>(data.n_min);
    return weighted_vote(data, K, rho);
}

HistogramPluginFit histogram_plugin_from_balanced(const Dataset& balanced, int K) {
    check_bins(K);
    if (balanced.n_min == 0) throw InsufficientData("histogram plug-in needs at least one minority sample");
    for (const Sample& s : balanced.samples) {
        const int expected = s.group == Group::Majority ? 1 : -1;
        if (s.y != expected) throw WrongScenario("histogram plug-in applies to label-shift data only");
    }
    std::vector<std::size_t> n1(static_cast<std::size_t>(K), 0);
    std::vector<std::size_t> nm1(static_cast<std::size_t>(K), 0);
    for (const Sample& s : balanced.samples) ++(s.y > 0 ? n1 : nm1)[bin_index(s.x, K)];

    HistogramDensityPair hist;
    hist.K = K;
    hist.p1_hat.resize(n1.size());
    hist.pm1_hat.resize(n1.size());
    const double per_class = static_cast<double>(balanced.n_min);
    std::vector<int> labels(n1.size());
    for (std::size_t j = 0; j < n1.size(); ++j) {
        hist.p1_hat[j] = static_cast<double>(n1[j]) / per_class * K;
        hist.pm1_hat[j] = static_cast<double>(nm1[j]) / per_class * K;
        const double denom = hist.p1_hat[j] + hist.pm1_hat[j];
        // An empty bin leaves eta_hat undefined and falls through to -1.
        labels[j] = denom > 0.0 && hist.p1_hat[j] / denom > 0.5 ? 1 : -1;
    }
    return {std::move(hist), PiecewiseConstantClassifier::from_bins(labels)};
}

HistogramPluginFit fit_histogram_plugin(const Dataset& data, int K, Rng& rng) {
    check_bins(K);
    for (const Sample& s : data.samples) {
        const int expected = s.group == Group::Majority ? 1 : -1;
        if (s.y != expected) throw WrongScenario("histogram plug-in applies to label-shift data only");
    }
    if (data.n_min == 0) throw InsufficientData("histogram plug-in needs at least one minority sample");
    return histogram_plugin_from_balanced(undersample(data, rng), K);
}

double FamilyPosterior::direction(std::size_t bin) const {
    const std::vector<double>& t = tables.at(bin);
    if (kind == Scenario::GroupShift) return t[1] - t[0];
    // Marginal means taken as (mass at +1) - (mass at -1) so a symmetric table gives exactly 0.
    double v1_plus = 0.0, v1_minus = 0.0, vm1_plus = 0.0, vm1_minus = 0.0;
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            const double q = t[static_cast<std::size_t>(3 * a + b)];
            if (a == 2) v1_plus += q;
            if (a == 0) v1_minus += q;
            if (b == 2) vm1_plus += q;
            if (b == 0) vm1_minus += q;
        }
    }
    return (v1_plus - v1_minus) - (vm1_plus - vm1_minus);
}

FamilyPosterior compute_family_posterior(const Dataset& data, int family_K, Scenario kind) {
    check_bins(family_K);
    const auto K = static_cast<std::size_t>(family_K);
    const PiecewiseLinearFn hat = hat_function(family_K);

    // Sufficient statistics per bin: sums of log(1 + phi) and log(1 - phi), split by
    // which coordinate of the index the sample informs.
    struct Stats {
        double first_plus = 0.0, first_minus = 0.0;
        double second_plus = 0.0, second_minus = 0.0;
    };
    std::vector<Stats> stats(K);
    for (const Sample& s : data.samples) {
        const std::size_t j = bin_index(s.x, family_K);
        const double center = (static_cast<double>(j) + 0.5) / family_K;
        const double phi = hat(s.x - center);
        Stats& st = stats[j];
        if (kind == Scenario::LabelShift) {
            if (s.group == Group::Majority) {
                st.first_plus += std::log1p(phi);
                st.first_minus += std::log1p(-phi);
            } else {
                st.second_plus += std::log1p(phi);
                st.second_minus += std::log1p(-phi);
            }
        } else {
            st.first_plus += std::log1p(s.y * phi);
            st.first_minus += std::log1p(-s.y * phi);
        }
    }

    FamilyPosterior post;
    post.kind = kind;
    post.K = family_K;
    post.tables.resize(K);
    for (std::size_t j = 0; j < K; ++j) {
        std::vector<double> logs;
        const Stats& st = stats[j];
        if (kind == Scenario::LabelShift) {
            logs.resize(9);
            const double first[3] = {st.first_minus, 0.0, st.first_plus};
            const double second[3] = {st.second_minus, 0.0, st.second_plus};
            for (int a = 0; a < 3; ++a) {
                for (int b = 0; b < 3; ++b) logs[static_cast<std::size_t>(3 * a + b)] = first[a] + second[b];
            }
        } else {
            logs = {st.first_minus, st.first_plus};
        }
        const double top = *std::max_element(logs.begin(), logs.end());
        double total = 0.0;
        for (double& l : logs) {
            l = std::exp(l - top);
            total += l;
        }
        for (double& l : logs) l /= total;
        post.tables[j] = std::move(logs);
    }
    return post;
}

PiecewiseConstantClassifier posterior_oracle_classifier(const FamilyPosterior& post) {
    check_bins(post.K);
    const auto K = static_cast<std::size_t>(post.K);
    std::vector<double> xs(2 * K + 1);
    for (std::size_t i = 0; i <= 2 * K; ++i) xs[i] = static_cast<double>(i) / static_cast<double>(2 * K);
    xs.back() = 1.0;
    std::vector<int> labels(2 * K);
    for (std::size_t j = 0; j < K; ++j) {
        const double d = post.direction(j);
        // phi < 0 on the left half of the bin and > 0 on the right half.
        labels[2 * j] = d < 0.0 ? 1 : -1;
        labels[2 * j + 1] = d > 0.0 ? 1 : -1;
    }
    return PiecewiseConstantClassifier(std::move(xs), std::move(labels));
}

namespace {
constexpr std::array<EstimatorKind, 5> kAllEstimators = {
    EstimatorKind::UndersampledBinning, EstimatorKind::FullBinning, EstimatorKind::WeightedBinning,
    EstimatorKind::HistogramPlugin, EstimatorKind::PosteriorOracle};
}

std::string_view to_string(EstimatorKind e) noexcept {
    switch (e) {
        case EstimatorKind::UndersampledBinning: return "undersampled_binning";
        case EstimatorKind::FullBinning: return "full_binning";
        case EstimatorKind::WeightedBinning: return "weighted_binning";
        case EstimatorKind::HistogramPlugin: return "histogram_plugin";
        case EstimatorKind::PosteriorOracle: return "posterior_oracle";
    }
    return "unknown";
}

EstimatorKind estimator_from_string(std::string_view name) {
    for (EstimatorKind e : kAllEstimators) {
        if (to_string(e) == name) return e;
    }
    throw InvalidParameter("unknown estimator '" + std::string(name) + "'");
}

std::span<const EstimatorKind> all_estimators() noexcept { return kAllEstimators; }

}  // namespace shiftlab
