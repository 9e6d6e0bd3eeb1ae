#include <gtest/gtest.h>

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "shiftlab/cli.hpp"
#include "shiftlab/errors.hpp"
#include "shiftlab/risk.hpp"

using namespace shiftlab;
using namespace shiftlab::cli;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = fs::temp_directory_path() /
                ("shiftlab_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

std::string config_error(const std::string& text) {
    try {
        parse_config_text(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

const char* kSixtyCells = R"({
  "scenario": "label_shift", "family_K": 2, "n_min_grid": [8, 16, 32],
  "estimators": ["undersampled_binning", "full_binning"], "replications": 10, "seed": 7
})";

}  // namespace

TEST(ParseConfig, MinimalConfigGetsDefaults) {
    const auto cfg = parse_config_text(R"({"scenario":"label_shift","family_K":4,"n_min_grid":[10,20],"seed":3})");
    EXPECT_EQ(cfg.scenario, Scenario::LabelShift);
    EXPECT_EQ(cfg.family_K, 4);
    EXPECT_EQ(cfg.seed, 3u);
    EXPECT_EQ(cfg.replications, 100u);
    EXPECT_EQ(cfg.bin_rule.kind, BinRule::Kind::CeilCubeRoot);
    EXPECT_EQ(cfg.bin_rule.multiplier, 1.0);
    EXPECT_EQ(cfg.index_mode, IndexMode::Fresh);
    EXPECT_EQ(cfg.estimators, std::vector<EstimatorKind>{EstimatorKind::UndersampledBinning});
}

TEST(ParseConfig, FullConfigRoundTrips) {
    const auto cfg = parse_config_text(R"({
      "scenario":"group_shift","tau":0.25,"family_K":3,"n_min_grid":[5,9],"n_maj_grid":[10,9],
      "estimators":["weighted_binning","posterior_oracle"],"replications":4,"seed":18446744073709551615,
      "bin_rule":{"type":"fixed","K":6},"index_mode":"fixed","index":{"v":[1,-1,1]}})");
    EXPECT_EQ(cfg.seed, 18446744073709551615ull);
    EXPECT_EQ(cfg.bin_rule.fixed_bins, 6);
    ASSERT_TRUE(cfg.fixed_index.has_value());
    const auto again = parse_config_text(config_to_json(cfg).dump());
    EXPECT_EQ(config_to_json(again), config_to_json(cfg));
}

TEST(ParseConfig, TauForLabelShiftIsAnError) {
    EXPECT_NE(config_error(R"({"scenario":"label_shift","tau":0.5,"family_K":1,"n_min_grid":[4],"seed":1})")
                  .find("tau"),
              std::string::npos);
}

TEST(ParseConfig, ZeroReplicationsIsAnError) {
    EXPECT_NE(config_error(R"({"scenario":"label_shift","family_K":1,"n_min_grid":[4],"seed":1,"replications":0})")
                  .find("replications"),
              std::string::npos);
}

TEST(ParseConfig, ViolationsAreAggregated) {
    const std::string msg = config_error(
        R"({"scenario":"group_shift","family_K":0,"n_min_grid":[4],"estimators":["knn"],"colour":1,
            "rho":2,"n_maj_grid":[8]})");
    for (const char* needle : {"knn", "colour", "seed", "tau", "family_K", "rho or n_maj_grid"}) {
        EXPECT_NE(msg.find(needle), std::string::npos) << needle << " missing from:\n" << msg;
    }
    EXPECT_NE(config_error("not json").find("JSON"), std::string::npos);
    EXPECT_THROW(parse_config("/nonexistent/config.json"), ConfigError);
}

TEST(Csv, FormatAndRoundTrip) {
    TrialRecord r;
    r.scenario = Scenario::GroupShift;
    r.n_min = 3;
    r.n_maj = 12;
    r.tau = 0.1;
    r.K_bins = 2;
    r.seed_used = 18446744073709551615ull;
    r.risk = 1.0 / 3;
    r.bayes_risk = 0.2;
    r.excess_risk = r.risk - r.bayes_risk;
    TrialRecord l = r;
    l.scenario = Scenario::LabelShift;
    l.tau.reset();
    const std::string csv = records_to_csv({r, l});
    EXPECT_EQ(csv.substr(0, csv.find('\n')), kCsvHeader);
    EXPECT_NE(csv.find(",0.10000000000000001,"), std::string::npos);
    EXPECT_NE(csv.find("label_shift,undersampled_binning,3,12,,2,"), std::string::npos);
    const auto back = records_from_csv(csv);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].risk, r.risk);
    EXPECT_EQ(back[0].tau, r.tau);
    EXPECT_EQ(back[0].seed_used, r.seed_used);
    EXPECT_FALSE(back[1].tau.has_value());
    EXPECT_EQ(records_to_csv(back), csv);
}

TEST(Csv, ErrorsNameColumnOrRow) {
    try {
        records_from_csv("scenario,estimator\nlabel_shift,full_binning\n");
        FAIL();
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("n_min"), std::string::npos);
    }
    std::string csv = std::string(kCsvHeader) + "\n" +
                      "label_shift,full_binning,4,8,,2,0,1,0.5,0.4,0.1,0\n" +
                      "label_shift,full_binning,4,8,,2,1,1,oops,0.4,0.1,0\n";
    try {
        records_from_csv(csv);
        FAIL();
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos) << e.what();
    }
}

TEST(CmdRun, WritesBundleWithOneLinePerRecord) {
    TempDir dir;
    write_file(dir.path() / "cfg.json", kSixtyCells);
    std::ostringstream out, err;
    RunArgs args{dir.path() / "cfg.json", dir.path() / "out", 1, std::nullopt, false};
    ASSERT_EQ(cmd_run(args, out, err), 0) << err.str();
    const std::string csv = read_file(dir.path() / "out" / "records.csv");
    EXPECT_EQ(count_lines(csv), 61u);
    const auto manifest = nlohmann::json::parse(read_file(dir.path() / "out" / "manifest.json"));
    EXPECT_EQ(manifest["version"], kToolVersion);
    EXPECT_EQ(manifest["seed"], 7u);
    EXPECT_EQ(manifest["config"]["replications"], 10u);

    // summary means agree with the CSV rows
    const auto summary = nlohmann::json::parse(read_file(dir.path() / "out" / "summary.json"));
    const auto recs = records_from_csv(csv);
    const auto cells = summarize(recs);
    ASSERT_EQ(summary["cells"].size(), cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        EXPECT_NEAR(summary["cells"][i]["mean_excess_risk"].get<double>(), cells[i].mean_excess, 1e-12);
        EXPECT_NEAR(summary["cells"][i]["se_excess_risk"].get<double>(), cells[i].se_excess, 1e-12);
    }
    for (const auto& e : fs::directory_iterator(dir.path() / "out")) {
        EXPECT_NE(e.path().filename().string().front(), '.') << "leftover temp file";
    }
}

TEST(CmdRun, ByteIdenticalAcrossThreadCounts) {
    TempDir dir;
    write_file(dir.path() / "cfg.json", kSixtyCells);
    std::ostringstream out, err;
    ASSERT_EQ(cmd_run({dir.path() / "cfg.json", dir.path() / "a", 1, std::nullopt, false}, out, err), 0);
    ASSERT_EQ(cmd_run({dir.path() / "cfg.json", dir.path() / "b", 8, std::nullopt, false}, out, err), 0);
    EXPECT_EQ(read_file(dir.path() / "a" / "records.csv"), read_file(dir.path() / "b" / "records.csv"));
    EXPECT_EQ(read_file(dir.path() / "a" / "summary.json"), read_file(dir.path() / "b" / "summary.json"));
}

TEST(CmdRun, RerunReplacesOutputsAndSeedOverrides) {
    TempDir dir;
    write_file(dir.path() / "cfg.json", kSixtyCells);
    std::ostringstream out, err;
    const fs::path dest = dir.path() / "out";
    ASSERT_EQ(cmd_run({dir.path() / "cfg.json", dest, 1, std::nullopt, false}, out, err), 0);
    const std::string first = read_file(dest / "records.csv");
    ASSERT_EQ(cmd_run({dir.path() / "cfg.json", dest, 1, 99u, false}, out, err), 0);
    const std::string second = read_file(dest / "records.csv");
    EXPECT_NE(first, second);
    EXPECT_EQ(count_lines(second), 61u);
    EXPECT_EQ(nlohmann::json::parse(read_file(dest / "manifest.json"))["seed"], 99u);
}

TEST(CmdRun, FailuresReturnNonzero) {
    TempDir dir;
    write_file(dir.path() / "cfg.json", kSixtyCells);
    write_file(dir.path() / "blocker", "x");
    std::ostringstream out, err;
    EXPECT_NE(cmd_run({dir.path() / "cfg.json", dir.path() / "blocker" / "out", 1, std::nullopt, false}, out, err),
              0);
    EXPECT_FALSE(err.str().empty());
    write_file(dir.path() / "bad.json", R"({"scenario":"label_shift"})");
    std::ostringstream err2;
    EXPECT_NE(cmd_run({dir.path() / "bad.json", dir.path() / "o", 1, std::nullopt, false}, out, err2), 0);
    EXPECT_NE(err2.str().find("family_K"), std::string::npos);
}

TEST(AtomicWrite, FailureLeavesNoTempFiles) {
    TempDir dir;
    fs::create_directories(dir.path() / "b.txt" / "occupied");
    EXPECT_ANY_THROW(write_files_atomically(dir.path(), {{"a.txt", "A"}, {"b.txt", "B"}}));
    for (const auto& e : fs::directory_iterator(dir.path())) {
        EXPECT_NE(e.path().filename().string().front(), '.') << e.path();
    }
}

TEST(CmdVerify, PassesAndListsConstants) {
    std::ostringstream out, err;
    EXPECT_EQ(cmd_verify(16, 1.0, out, err), 0);
    for (const char* needle : {"1/(8K^2)", "1/(3K^3)", "8/9", "PASS"}) {
        EXPECT_NE(out.str().find(needle), std::string::npos) << needle;
    }
    EXPECT_EQ(out.str().find("FAIL"), std::string::npos);
}

TEST(CmdVerify, CorruptedToleranceExitsOne) {
    std::ostringstream out, err;
    EXPECT_EQ(cmd_verify(4, -1.0, out, err), 1);
    EXPECT_NE(err.str().find("delta"), std::string::npos);
}

TEST(CmdRates, ExactPowerLawAndBoundCurve) {
    TempDir dir;
    std::vector<TrialRecord> recs;
    for (std::size_t n : {125, 1000, 8000}) {
        TrialRecord r;
        r.n_min = n;
        r.n_maj = 4 * n;
        r.excess_risk = std::pow(static_cast<double>(n), -1.0 / 3);
        r.risk = 0.5;
        r.bayes_risk = 0.5 - r.excess_risk;
        recs.push_back(r);
    }
    write_file(dir.path() / "records.csv", records_to_csv(recs));
    std::ostringstream out, err;
    ASSERT_EQ(cmd_rates(dir.path() / "records.csv", GroupBy{}, dir.path() / "rates.json", out, err), 0) << err.str();
    EXPECT_NE(out.str().find("slope=-0.333333"), std::string::npos) << out.str();
    EXPECT_NE(out.str().find(format_real(1.0 / 6000)), std::string::npos) << out.str();
    const auto j = nlohmann::json::parse(read_file(dir.path() / "rates.json"));
    EXPECT_EQ(j[0]["lower_bound"][1].get<double>(), 1.0 / 6000);
}

TEST(CmdRates, MissingColumnIsNamed) {
    TempDir dir;
    write_file(dir.path() / "records.csv",
               "scenario,estimator,n_min,n_maj,tau,K_bins,replication_id,seed_used,risk,bayes_risk,"
               "wall_time_seconds\n");
    std::ostringstream out, err;
    EXPECT_NE(cmd_rates(dir.path() / "records.csv", GroupBy{}, std::nullopt, out, err), 0);
    EXPECT_NE(err.str().find("excess_risk"), std::string::npos);
}

TEST(BoundCurve, GroupShiftUsesMajorityCount) {
    RateGroup g;
    g.scenario = Scenario::GroupShift;
    g.tau = 0.5;
    g.n_min = {100};
    g.mean_n_maj = {1000};
    g.mean_excess = {0.1};
    EXPECT_EQ(bound_curve(g)[0], lower_bound_group_shift(100, 1000, 0.5).value);
}

TEST(CmdSweep, WritesOneFilePerArm) {
    TempDir dir;
    write_file(dir.path() / "cfg.json", R"({"scenario":"group_shift","tau":0,"family_K":2,"seed":5,
        "replications":3,"sweep":{"n_min":4,"n_maj":8,"factors":[1,2]}})");
    std::ostringstream out, err;
    ASSERT_EQ(cmd_sweep({dir.path() / "cfg.json", dir.path() / "out", 2, std::nullopt, false}, out, err), 0)
        << err.str();
    for (const char* arm : {"add_minority", "add_majority", "add_both"}) {
        const auto csv = read_file(dir.path() / "out" / ("records_" + std::string(arm) + ".csv"));
        EXPECT_EQ(count_lines(csv), 7u) << arm;
    }
}
