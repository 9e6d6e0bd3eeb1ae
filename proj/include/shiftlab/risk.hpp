#pragma once

#include <cstddef>
#include <vector>

#include "shiftlab/estimators.hpp"
#include "shiftlab/instances.hpp"

namespace shiftlab {

// Test risk under the balanced mixture (P_maj + P_min) / 2, computed exactly.
double risk(const PiecewiseConstantClassifier& f, const ShiftInstance& instance);

struct BayesSolution {
    PiecewiseConstantClassifier classifier;
    double risk;
};

// Label shift: sign(P_1 - P_-1); group shift: sign(eta - 1/2). Ties go to -1.
// The risk is integrated from min{...} directly, not from the classifier.
BayesSolution bayes_risk(const ShiftInstance& instance);

struct RiskReport {
    double risk = 0.0;
    double bayes_risk = 0.0;
    double excess_risk = 0.0;
};

// Throws ConsistencyError if risk falls below the Bayes risk by more than kExcessFloor.
inline constexpr double kExcessFloor = 1e-12;
RiskReport excess_risk(const PiecewiseConstantClassifier& f, const ShiftInstance& instance);
RiskReport excess_risk(const PiecewiseConstantClassifier& f, const ShiftInstance& instance, double bayes);

// Group shift: R_j = q_{j,-A_j} - min{q_{j,1}, q_{j,-1}} for each bin I_j, where
// q_{j,1} = P_test(y = 1 | x in I_j) and q_{j,-1} = 1 - q_{j,1}. f must be constant on bins.
std::vector<double> per_interval_excess(const PiecewiseConstantClassifier& f, const ShiftInstance& instance,
                                        int K);
// P_test(I_j) for each bin.
std::vector<double> bin_test_mass(const ShiftInstance& instance, int K);

// Minimax lower bounds.
double lower_bound_label_shift(std::size_t n_min);

struct GroupShiftBound {
    double value;      // 1 / (200 (n_min (2 - tau) + n_maj tau)^{1/3})
    double secondary;  // 1 / (200 n_min^{1/3} (rho tau + 2)^{1/3})
};
GroupShiftBound lower_bound_group_shift(std::size_t n_min, std::size_t n_maj, double tau);

// (1 / (288 K)) exp(-n_min / (3 K^3)), the bound before K is optimized.
double intermediate_lower_bound_label_shift(std::size_t n_min, int K);

// Smallest integer k with k^3 >= n.
std::size_t ceil_cube_root(std::size_t n);

}  // namespace shiftlab
