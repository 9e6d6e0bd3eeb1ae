#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "shiftlab/harness.hpp"

namespace shiftlab::cli {

inline constexpr const char* kToolVersion = "0.3.1";

// records.csv columns, in order.
inline constexpr const char* kCsvHeader =
    "scenario,estimator,n_min,n_maj,tau,K_bins,replication_id,seed_used,risk,bayes_risk,excess_risk,"
    "wall_time_seconds";

// Parses and validates a JSON experiment config; fills defaults. Throws ConfigError
// naming every violation.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

// %.17g, which round-trips every double.
std::string format_real(double value);

std::string records_to_csv(const std::vector<TrialRecord>& records);

// Throws std::runtime_error naming the missing column or the offending row.
std::vector<TrialRecord> records_from_csv(const std::string& text);

// Per-cell means and standard errors, rate fits and bound-curve values.
nlohmann::json summary_json(const std::vector<TrialRecord>& records);

// Minimax lower bound evaluated on a group's n_min grid.
std::vector<double> bound_curve(const RateGroup& group);

struct RunArgs {
    std::filesystem::path config;
    std::filesystem::path out_dir;
    unsigned threads = 1;
    std::optional<std::uint64_t> seed;
    bool record_timing = false;
};

// Each returns a process exit status and writes messages to out/err.
int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err);
int cmd_sweep(const RunArgs& args, std::ostream& out, std::ostream& err);
int cmd_verify(int k_max, double tolerance_scale, std::ostream& out, std::ostream& err);
int cmd_rates(const std::filesystem::path& records, const GroupBy& group_by,
              const std::optional<std::filesystem::path>& out_file, std::ostream& out, std::ostream& err);

// Writes all files via temp-file-and-rename; on any failure no target is left half-written
// and the temp files are removed.
void write_files_atomically(const std::filesystem::path& dir,
                            const std::vector<std::pair<std::string, std::string>>& files);

}  // namespace shiftlab::cli
