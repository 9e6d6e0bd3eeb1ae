#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "shiftlab/instances.hpp"
#include "shiftlab/rng.hpp"

namespace shiftlab {

// Label function on [0, 1]: cell i is [breakpoints[i], breakpoints[i+1]), the last
// cell is closed at 1.
class PiecewiseConstantClassifier {
public:
    PiecewiseConstantClassifier(std::vector<double> breakpoints, std::vector<int> labels);

    static PiecewiseConstantClassifier constant(int label);
    // One cell per bin [j/K, (j+1)/K).
    static PiecewiseConstantClassifier from_bins(std::span<const int> labels);

    int operator()(double x) const;

    std::span<const double> breakpoints() const noexcept { return xs_; }
    std::span<const int> labels() const noexcept { return labels_; }
    std::size_t cells() const noexcept { return labels_.size(); }

    PiecewiseConstantClassifier flipped() const;
    // Adjacent cells with the same label fused.
    PiecewiseConstantClassifier simplified() const;

    friend bool operator==(const PiecewiseConstantClassifier&, const PiecewiseConstantClassifier&) = default;

private:
    std::vector<double> xs_;
    std::vector<int> labels_;
};

// Half-open bins [j/K, (j+1)/K), with x = 1 assigned to the last bin.
std::size_t bin_index(double x, int K);

// Per-bin vote of an already balanced (or any) dataset: +1 iff strictly more +1 labels.
PiecewiseConstantClassifier majority_vote_binning(const Dataset& data, int K);

PiecewiseConstantClassifier fit_undersampled_binning(const Dataset& data, int K, Rng& rng);
PiecewiseConstantClassifier fit_full_binning(const Dataset& data, int K);
// Minority samples weighted by rho = n_maj / n_min, majority samples by 1.
PiecewiseConstantClassifier fit_weighted_binning(const Dataset& data, int K);

// Per-bin class-conditional histograms of a balanced label-shift set, normalized to
// integrate to 1: value_j = (n_{y,j} / n_min) * K.
struct HistogramDensityPair {
    int K = 0;
    std::vector<double> p1_hat;
    std::vector<double> pm1_hat;
};

struct HistogramPluginFit {
    HistogramDensityPair densities;
    PiecewiseConstantClassifier classifier;
};

// Plug-in rule eta_hat = p1_hat / (p1_hat + pm1_hat) > 1/2 on an undersampled label-shift set.
HistogramPluginFit histogram_plugin_from_balanced(const Dataset& balanced, int K);
HistogramPluginFit fit_histogram_plugin(const Dataset& data, int K, Rng& rng);

// Exact posterior over a hard family given the data. It factorizes over bins; each
// table is indexed by posterior_cell(...).
//   label shift: 9 cells, (v1_j, vm1_j) in {-1,0,1}^2, cell = 3 * (v1_j + 1) + (vm1_j + 1)
//   group shift: 2 cells, v_j in {-1, 1}, cell = (v_j + 1) / 2
struct FamilyPosterior {
    Scenario kind = Scenario::LabelShift;
    int K = 0;
    std::vector<std::vector<double>> tables;

    // E[v1_j - vm1_j | S] for label shift, E[v_j | S] for group shift.
    double direction(std::size_t bin) const;
};

FamilyPosterior compute_family_posterior(const Dataset& data, int family_K, Scenario kind);

// Pointwise-optimal classifier against the posterior mixture of the family; cells are
// half bins, sign(0) resolves to -1.
PiecewiseConstantClassifier posterior_oracle_classifier(const FamilyPosterior& post);

enum class EstimatorKind { UndersampledBinning, FullBinning, WeightedBinning, HistogramPlugin, PosteriorOracle };

std::string_view to_string(EstimatorKind e) noexcept;
// Throws InvalidParameter for unknown names.
EstimatorKind estimator_from_string(std::string_view name);
std::span<const EstimatorKind> all_estimators() noexcept;

}  // namespace shiftlab
