#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "shiftlab/estimators.hpp"
#include "shiftlab/instances.hpp"

namespace shiftlab {

enum class IndexMode { Fresh, Fixed };

struct BinRule {
    enum class Kind { CeilCubeRoot, Fixed } kind = Kind::CeilCubeRoot;
    double multiplier = 1.0;  // c in K = ceil(c * ceil(n_min^{1/3}))
    int fixed_bins = 0;

    int bins_for(std::size_t n_min) const;
};

// Arms of the minority/majority addition sweep.
enum class SweepArm { AddMinority, AddMajority, AddBoth };
std::string_view to_string(SweepArm arm) noexcept;
SweepArm sweep_arm_from_string(std::string_view name);

struct SweepPlan {
    std::size_t base_n_min = 0;
    std::size_t base_n_maj = 0;
    std::vector<std::size_t> factors;  // multiplicative steps, typically starting at 1
    std::vector<SweepArm> arms;
};

struct ExperimentConfig {
    Scenario scenario = Scenario::LabelShift;
    int family_K = 1;
    double tau = 0.0;  // group shift only
    std::vector<std::size_t> n_min_grid;
    double rho = 4.0;
    std::vector<std::size_t> n_maj_grid;  // overrides rho when nonempty; same length as n_min_grid
    std::vector<EstimatorKind> estimators{EstimatorKind::UndersampledBinning};
    std::size_t replications = 100;
    BinRule bin_rule;
    std::uint64_t seed = 0;
    IndexMode index_mode = IndexMode::Fresh;
    std::optional<FamilyIndex> fixed_index;  // drawn from the seed when absent in fixed mode
    std::optional<SweepPlan> sweep;

    // Throws ConfigError listing every violation.
    void validate() const;
    std::size_t n_maj_for(std::size_t position) const;
};

struct TrialRecord {
    Scenario scenario = Scenario::LabelShift;
    EstimatorKind estimator = EstimatorKind::UndersampledBinning;
    std::size_t n_min = 0;
    std::size_t n_maj = 0;
    std::optional<double> tau;
    int K_bins = 0;
    std::size_t replication_id = 0;
    std::uint64_t seed_used = 0;
    double risk = 0.0;
    double bayes_risk = 0.0;
    double excess_risk = 0.0;
    double wall_time_seconds = 0.0;
};

struct RunOptions {
    unsigned threads = 1;
    bool record_timing = false;  // wall times are not reproducible; off keeps output deterministic
};

// One record per (n_min, estimator, replication), sorted by (n_min position,
// replication, estimator position). All estimators in a (n_min, replication) cell see
// the same instance and dataset.
std::vector<TrialRecord> run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

struct SweepArmResult {
    SweepArm arm;
    std::vector<TrialRecord> records;
};

std::vector<SweepArmResult> minority_majority_sweep(const ExperimentConfig& cfg, const RunOptions& opts = {});

struct CellSummary {
    Scenario scenario;
    EstimatorKind estimator;
    std::size_t n_min;
    std::size_t n_maj;
    std::optional<double> tau;
    int K_bins;
    std::size_t count;
    double mean_excess;
    double se_excess;  // standard error of the mean (sample sd / sqrt(count))
    double mean_risk;
};

// Aggregates records per (scenario, estimator, n_min, n_maj, tau, K_bins) in first-seen order.
std::vector<CellSummary> summarize(const std::vector<TrialRecord>& records);

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::size_t n_points = 0;
};

// OLS of log(y) on log(x). Throws RateUndefined for < 3 distinct x or a nonpositive y.
RateFit fit_log_log(const std::vector<double>& x, const std::vector<double>& y);

struct GroupBy {
    bool scenario = true;
    bool estimator = true;
    bool tau = true;
    bool n_maj = false;
};

struct RateGroup {
    std::string key;
    Scenario scenario = Scenario::LabelShift;  // of the first record in the group
    std::optional<double> tau;
    std::vector<std::size_t> n_min;   // ascending
    std::vector<double> mean_excess;  // per n_min
    std::vector<double> mean_n_maj;   // per n_min
    std::optional<RateFit> fit;
    std::string error;  // set when the fit is undefined
};

// Mean excess risk per n_min within each group, then a log-log fit per group.
std::vector<RateGroup> fit_rate(const std::vector<TrialRecord>& records, const GroupBy& group_by = {});

struct VerificationEntry {
    std::string check;
    std::string parameter;
    std::string expected_text;  // exact constant, e.g. "1/(8K^2)" evaluated as a fraction
    double expected = 0.0;
    double measured = 0.0;
    double delta = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct VerificationReport {
    std::vector<VerificationEntry> entries;
    bool all_pass() const;
    double max_abs_delta() const;
};

struct VerifyOptions {
    // Multiplies every tolerance; a negative value forces failures (used to exercise the failure path).
    double tolerance_scale = 1.0;
};

VerificationReport verify_lemmas(int K_max, const VerifyOptions& opts = {});

}  // namespace shiftlab
