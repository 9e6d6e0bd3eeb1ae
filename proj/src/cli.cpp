#include "shiftlab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "shiftlab/errors.hpp"
#include "shiftlab/risk.hpp"

namespace shiftlab::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string> kKnownKeys = {"scenario",  "family_K",     "tau",        "n_min_grid", "rho",
                                          "n_maj_grid", "estimators",  "replications", "bin_rule",  "seed",
                                          "index_mode", "index",       "sweep"};

std::vector<std::size_t> count_list(const json& j, const std::string& key, std::vector<std::string>& problems) {
    std::vector<std::size_t> out;
    if (!j.is_array()) {
        problems.push_back(key + " must be an array of positive integers");
        return out;
    }
    for (const auto& v : j) {
        if (!v.is_number_unsigned()) {
            problems.push_back(key + " entries must be nonnegative integers");
            continue;
        }
        out.push_back(v.get<std::size_t>());
    }
    return out;
}

std::vector<int> int_list(const json& j, const std::string& key, std::vector<std::string>& problems) {
    std::vector<int> out;
    if (!j.is_array()) {
        problems.push_back(key + " must be an array of integers");
        return out;
    }
    for (const auto& v : j) {
        if (!v.is_number_integer()) {
            problems.push_back(key + " entries must be integers");
            continue;
        }
        out.push_back(v.get<int>());
    }
    return out;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("invalid configuration:\n  - not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("invalid configuration:\n  - top level must be an object");

    ExperimentConfig cfg;
    std::vector<std::string> problems;
    for (const auto& [key, _] : j.items()) {
        if (!kKnownKeys.count(key)) problems.push_back("unknown key '" + key + "'");
    }
    for (const char* required : {"scenario", "family_K", "seed"}) {
        if (!j.contains(required)) problems.push_back(std::string("missing required key '") + required + "'");
    }
    if (!j.contains("n_min_grid") && !j.contains("sweep")) problems.push_back("missing required key 'n_min_grid'");

    if (j.contains("scenario")) {
        try {
            cfg.scenario = scenario_from_string(j["scenario"].get<std::string>());
        } catch (const std::exception&) {
            problems.push_back("scenario must be 'label_shift' or 'group_shift'");
        }
    }
    if (j.contains("family_K")) {
        if (j["family_K"].is_number_integer()) cfg.family_K = j["family_K"].get<int>();
        else problems.push_back("family_K must be an integer");
    }
    if (j.contains("tau")) {
        if (cfg.scenario == Scenario::LabelShift) problems.push_back("tau is only allowed for group_shift");
        else if (j["tau"].is_number()) cfg.tau = j["tau"].get<double>();
        else problems.push_back("tau must be a number");
    } else if (cfg.scenario == Scenario::GroupShift) {
        problems.push_back("group_shift requires 'tau'");
    }
    if (j.contains("n_min_grid")) cfg.n_min_grid = count_list(j["n_min_grid"], "n_min_grid", problems);
    if (j.contains("rho") && j.contains("n_maj_grid")) problems.push_back("give either rho or n_maj_grid, not both");
    if (j.contains("rho")) {
        if (j["rho"].is_number()) cfg.rho = j["rho"].get<double>();
        else problems.push_back("rho must be a number");
    }
    if (j.contains("n_maj_grid")) cfg.n_maj_grid = count_list(j["n_maj_grid"], "n_maj_grid", problems);
    if (j.contains("estimators")) {
        cfg.estimators.clear();
        if (!j["estimators"].is_array()) problems.push_back("estimators must be an array of names");
        else {
            for (const auto& name : j["estimators"]) {
                try {
                    cfg.estimators.push_back(estimator_from_string(name.get<std::string>()));
                } catch (const std::exception&) {
                    problems.push_back("unknown estimator " + name.dump());
                }
            }
        }
    }
    if (j.contains("replications")) {
        if (j["replications"].is_number_unsigned()) cfg.replications = j["replications"].get<std::size_t>();
        else problems.push_back("replications must be a nonnegative integer");
    }
    if (j.contains("bin_rule")) {
        const json& b = j["bin_rule"];
        const std::string type = b.value("type", std::string("ceil_cuberoot"));
        if (type == "ceil_cuberoot") {
            cfg.bin_rule.kind = BinRule::Kind::CeilCubeRoot;
            if (b.contains("c")) {
                if (b["c"].is_number()) cfg.bin_rule.multiplier = b["c"].get<double>();
                else problems.push_back("bin_rule.c must be a number");
            }
        } else if (type == "fixed") {
            cfg.bin_rule.kind = BinRule::Kind::Fixed;
            if (b.contains("K") && b["K"].is_number_integer()) cfg.bin_rule.fixed_bins = b["K"].get<int>();
            else problems.push_back("bin_rule of type 'fixed' requires integer K");
        } else {
            problems.push_back("bin_rule.type must be 'ceil_cuberoot' or 'fixed'");
        }
    }
    if (j.contains("seed")) {
        if (j["seed"].is_number_unsigned()) cfg.seed = j["seed"].get<std::uint64_t>();
        else problems.push_back("seed must be a nonnegative 64-bit integer");
    }
    if (j.contains("index_mode")) {
        const std::string mode = j["index_mode"].is_string() ? j["index_mode"].get<std::string>() : "";
        if (mode == "fresh") cfg.index_mode = IndexMode::Fresh;
        else if (mode == "fixed") cfg.index_mode = IndexMode::Fixed;
        else problems.push_back("index_mode must be 'fresh' or 'fixed'");
    }
    if (j.contains("index")) {
        if (cfg.index_mode != IndexMode::Fixed) problems.push_back("index requires index_mode 'fixed'");
        const json& idx = j["index"];
        if (cfg.scenario == Scenario::LabelShift) {
            if (idx.contains("v1") && idx.contains("vm1")) {
                cfg.fixed_index = LabelShiftIndex{int_list(idx["v1"], "index.v1", problems),
                                                  int_list(idx["vm1"], "index.vm1", problems)};
            } else {
                problems.push_back("label_shift index needs 'v1' and 'vm1'");
            }
        } else {
            if (idx.contains("v")) cfg.fixed_index = GroupShiftIndex{int_list(idx["v"], "index.v", problems), cfg.tau};
            else problems.push_back("group_shift index needs 'v'");
        }
    }
    if (j.contains("sweep")) {
        const json& s = j["sweep"];
        SweepPlan plan;
        if (s.contains("n_min") && s["n_min"].is_number_unsigned()) plan.base_n_min = s["n_min"].get<std::size_t>();
        else problems.push_back("sweep.n_min must be a positive integer");
        if (s.contains("n_maj") && s["n_maj"].is_number_unsigned()) plan.base_n_maj = s["n_maj"].get<std::size_t>();
        else problems.push_back("sweep.n_maj must be a positive integer");
        if (s.contains("factors")) plan.factors = count_list(s["factors"], "sweep.factors", problems);
        else problems.push_back("sweep.factors is required");
        if (s.contains("arms") && s["arms"].is_array()) {
            for (const auto& a : s["arms"]) {
                try {
                    plan.arms.push_back(sweep_arm_from_string(a.get<std::string>()));
                } catch (const std::exception&) {
                    problems.push_back("unknown sweep arm " + a.dump());
                }
            }
        } else {
            plan.arms = {SweepArm::AddMinority, SweepArm::AddMajority, SweepArm::AddBoth};
        }
        cfg.sweep = plan;
    }

    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        std::istringstream lines(e.what());
        std::string line;
        std::getline(lines, line);  // header
        while (std::getline(lines, line)) {
            const auto pos = line.find("- ");
            const std::string p = pos == std::string::npos ? line : line.substr(pos + 2);
            if (std::find(problems.begin(), problems.end(), p) == problems.end()) problems.push_back(p);
        }
    }
    if (!problems.empty()) {
        std::ostringstream msg;
        msg << "invalid configuration:";
        for (const auto& p : problems) msg << "\n  - " << p;
        throw ConfigError(msg.str());
    }
    return cfg;
}

ExperimentConfig parse_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("invalid configuration:\n  - cannot open '" + path.string() + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config_text(text.str());
}

json config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["scenario"] = std::string(to_string(cfg.scenario));
    j["family_K"] = cfg.family_K;
    if (cfg.scenario == Scenario::GroupShift) j["tau"] = cfg.tau;
    j["n_min_grid"] = cfg.n_min_grid;
    if (cfg.n_maj_grid.empty()) j["rho"] = cfg.rho;
    else j["n_maj_grid"] = cfg.n_maj_grid;
    json est = json::array();
    for (EstimatorKind e : cfg.estimators) est.push_back(std::string(to_string(e)));
    j["estimators"] = est;
    j["replications"] = cfg.replications;
    if (cfg.bin_rule.kind == BinRule::Kind::CeilCubeRoot) {
        j["bin_rule"] = {{"type", "ceil_cuberoot"}, {"c", cfg.bin_rule.multiplier}};
    } else {
        j["bin_rule"] = {{"type", "fixed"}, {"K", cfg.bin_rule.fixed_bins}};
    }
    j["seed"] = cfg.seed;
    j["index_mode"] = cfg.index_mode == IndexMode::Fresh ? "fresh" : "fixed";
    if (cfg.fixed_index) {
        if (const auto* ls = std::get_if<LabelShiftIndex>(&*cfg.fixed_index)) {
            j["index"] = {{"v1", ls->v1}, {"vm1", ls->vm1}};
        } else {
            j["index"] = {{"v", std::get<GroupShiftIndex>(*cfg.fixed_index).v}};
        }
    }
    if (cfg.sweep) {
        json arms = json::array();
        for (SweepArm a : cfg.sweep->arms) arms.push_back(std::string(to_string(a)));
        j["sweep"] = {{"n_min", cfg.sweep->base_n_min},
                      {"n_maj", cfg.sweep->base_n_maj},
                      {"factors", cfg.sweep->factors},
                      {"arms", arms}};
    }
    return j;
}

std::string format_real(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

std::string records_to_csv(const std::vector<TrialRecord>& records) {
    std::string out = kCsvHeader;
    out += '\n';
    for (const TrialRecord& r : records) {
        out += to_string(r.scenario);
        out += ',';
        out += to_string(r.estimator);
        out += ',' + std::to_string(r.n_min) + ',' + std::to_string(r.n_maj) + ',';
        if (r.tau) out += format_real(*r.tau);
        out += ',' + std::to_string(r.K_bins) + ',' + std::to_string(r.replication_id) + ',' +
               std::to_string(r.seed_used) + ',' + format_real(r.risk) + ',' + format_real(r.bayes_risk) + ',' +
               format_real(r.excess_risk) + ',' + format_real(r.wall_time_seconds) + '\n';
    }
    return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace

std::vector<TrialRecord> records_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("records CSV is empty");
    const std::vector<std::string> header = split_csv_line(line);
    std::map<std::string, std::size_t> column;
    for (std::size_t i = 0; i < header.size(); ++i) column[header[i]] = i;
    for (const std::string& name : split_csv_line(kCsvHeader)) {
        if (!column.count(name)) throw std::runtime_error("records CSV is missing column '" + name + "'");
    }

    std::vector<TrialRecord> records;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> f = split_csv_line(line);
        auto field = [&](const char* name) -> const std::string& {
            const std::size_t idx = column.at(name);
            if (idx >= f.size()) {
                throw std::runtime_error("records CSV row " + std::to_string(row) + ": missing field '" + name + "'");
            }
            return f[idx];
        };
        try {
            TrialRecord r;
            r.scenario = scenario_from_string(field("scenario"));
            r.estimator = estimator_from_string(field("estimator"));
            std::size_t used = 0;
            auto to_count = [&](const char* name) {
                const std::string& s = field(name);
                const unsigned long long v = std::stoull(s, &used);
                if (used != s.size() || (!s.empty() && s[0] == '-')) throw std::invalid_argument(name);
                return static_cast<std::size_t>(v);
            };
            auto to_real = [&](const char* name) {
                const std::string& s = field(name);
                const double v = std::stod(s, &used);
                if (used != s.size()) throw std::invalid_argument(name);
                return v;
            };
            r.n_min = to_count("n_min");
            r.n_maj = to_count("n_maj");
            if (!field("tau").empty()) r.tau = to_real("tau");
            r.K_bins = static_cast<int>(to_count("K_bins"));
            r.replication_id = to_count("replication_id");
            r.seed_used = static_cast<std::uint64_t>(to_count("seed_used"));
            r.risk = to_real("risk");
            r.bayes_risk = to_real("bayes_risk");
            r.excess_risk = to_real("excess_risk");
            r.wall_time_seconds = to_real("wall_time_seconds");
            records.push_back(r);
        } catch (const std::runtime_error& e) {
            if (std::string(e.what()).rfind("records CSV row", 0) == 0) throw;
            throw std::runtime_error("records CSV row " + std::to_string(row) + " is malformed: " + e.what());
        } catch (const std::exception& e) {
            throw std::runtime_error("records CSV row " + std::to_string(row) + " is malformed (" + e.what() + ")");
        }
    }
    return records;
}

std::vector<double> bound_curve(const RateGroup& group) {
    std::vector<double> out;
    for (std::size_t i = 0; i < group.n_min.size(); ++i) {
        if (group.scenario == Scenario::LabelShift) {
            out.push_back(lower_bound_label_shift(group.n_min[i]));
        } else {
            const auto n_maj = static_cast<std::size_t>(std::llround(group.mean_n_maj[i]));
            out.push_back(lower_bound_group_shift(group.n_min[i], std::max(n_maj, group.n_min[i]),
                                                  group.tau.value_or(0.0))
                              .value);
        }
    }
    return out;
}

namespace {

json rate_groups_json(const std::vector<RateGroup>& groups) {
    json arr = json::array();
    for (const RateGroup& g : groups) {
        json jg;
        jg["group"] = g.key;
        jg["n_min"] = g.n_min;
        jg["mean_excess_risk"] = g.mean_excess;
        jg["lower_bound"] = bound_curve(g);
        if (g.fit) {
            jg["fit"] = {{"slope", g.fit->slope},
                         {"intercept", g.fit->intercept},
                         {"r_squared", g.fit->r_squared},
                         {"n_points", g.fit->n_points}};
        } else {
            jg["fit"] = nullptr;
            jg["error"] = g.error;
        }
        arr.push_back(jg);
    }
    return arr;
}

}  // namespace

json summary_json(const std::vector<TrialRecord>& records) {
    json cells = json::array();
    for (const CellSummary& c : summarize(records)) {
        json jc;
        jc["scenario"] = std::string(to_string(c.scenario));
        jc["estimator"] = std::string(to_string(c.estimator));
        jc["n_min"] = c.n_min;
        jc["n_maj"] = c.n_maj;
        jc["tau"] = c.tau ? json(*c.tau) : json(nullptr);
        jc["K_bins"] = c.K_bins;
        jc["replications"] = c.count;
        jc["mean_excess_risk"] = c.mean_excess;
        jc["se_excess_risk"] = c.se_excess;
        jc["mean_risk"] = c.mean_risk;
        cells.push_back(jc);
    }
    json j;
    j["record_count"] = records.size();
    j["cells"] = cells;
    j["rates"] = rate_groups_json(fit_rate(records));
    return j;
}

void write_files_atomically(const fs::path& dir, const std::vector<std::pair<std::string, std::string>>& files) {
    fs::create_directories(dir);
    std::vector<fs::path> temps;
    auto cleanup = [&] {
        std::error_code ec;
        for (const auto& t : temps) fs::remove(t, ec);
    };
    try {
        for (const auto& [name, content] : files) {
            const fs::path tmp = dir / ("." + name + ".tmp");
            temps.push_back(tmp);
            std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
            if (!os) throw std::runtime_error("cannot write '" + tmp.string() + "'");
            os << content;
            os.close();
            if (!os) throw std::runtime_error("failed writing '" + tmp.string() + "'");
        }
        for (std::size_t i = 0; i < files.size(); ++i) fs::rename(temps[i], dir / files[i].first);
    } catch (...) {
        cleanup();
        throw;
    }
}

namespace {

json manifest_json(const ExperimentConfig& cfg, const RunArgs& args, const std::string& command) {
    json m;
    m["tool"] = "shiftlab";
    m["version"] = kToolVersion;
    m["command"] = command;
    m["seed"] = cfg.seed;
    m["threads"] = args.threads;
    m["record_timing"] = args.record_timing;
    m["config"] = config_to_json(cfg);
    return m;
}

ExperimentConfig load_for_run(const RunArgs& args) {
    ExperimentConfig cfg = parse_config(args.config);
    if (args.seed) cfg.seed = *args.seed;
    return cfg;
}

}  // namespace

int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err) {
    try {
        const ExperimentConfig cfg = load_for_run(args);
        const auto records = run_experiment(cfg, {args.threads, args.record_timing});
        write_files_atomically(args.out_dir, {{"records.csv", records_to_csv(records)},
                                              {"summary.json", summary_json(records).dump(2) + "\n"},
                                              {"manifest.json", manifest_json(cfg, args, "run").dump(2) + "\n"}});
        out << "wrote " << records.size() << " records to " << (args.out_dir / "records.csv").string() << "\n";
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_sweep(const RunArgs& args, std::ostream& out, std::ostream& err) {
    try {
        const ExperimentConfig cfg = load_for_run(args);
        const auto arms = minority_majority_sweep(cfg, {args.threads, args.record_timing});
        std::vector<std::pair<std::string, std::string>> files;
        json summary;
        for (const SweepArmResult& arm : arms) {
            const std::string name(to_string(arm.arm));
            files.emplace_back("records_" + name + ".csv", records_to_csv(arm.records));
            summary[name] = summary_json(arm.records);
        }
        files.emplace_back("summary.json", summary.dump(2) + "\n");
        files.emplace_back("manifest.json", manifest_json(cfg, args, "sweep").dump(2) + "\n");
        write_files_atomically(args.out_dir, files);
        for (const SweepArmResult& arm : arms) {
            out << to_string(arm.arm) << ":\n";
            for (const CellSummary& c : summarize(arm.records)) {
                out << "  " << std::setw(14) << to_string(c.estimator).substr(0, 14) << " n_min=" << c.n_min
                    << " n_maj=" << c.n_maj << " mean_excess=" << format_real(c.mean_excess)
                    << " se=" << format_real(c.se_excess) << "\n";
            }
        }
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_verify(int k_max, double tolerance_scale, std::ostream& out, std::ostream& err) {
    try {
        const VerificationReport report = verify_lemmas(k_max, {tolerance_scale});
        out << std::left << std::setw(26) << "check" << std::setw(10) << "param" << std::setw(28) << "expected"
            << std::setw(26) << "measured" << std::setw(12) << "delta"
            << "status\n";
        for (const auto& e : report.entries) {
            std::ostringstream delta;
            delta << std::scientific << std::setprecision(2) << e.delta;
            out << std::setw(26) << e.check << std::setw(10) << e.parameter << std::setw(28) << e.expected_text
                << std::setw(26) << format_real(e.measured) << std::setw(12) << delta.str()
                << (e.pass ? "PASS" : "FAIL") << "\n";
        }
        out << "max |delta| = " << report.max_abs_delta() << "\n";
        if (!report.all_pass()) {
            err << "verification failed:\n";
            for (const auto& e : report.entries) {
                if (!e.pass) {
                    err << "  " << e.check << " " << e.parameter << ": delta " << e.delta << " exceeds tolerance "
                        << e.tolerance << "\n";
                }
            }
            return 1;
        }
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_rates(const fs::path& records_path, const GroupBy& group_by, const std::optional<fs::path>& out_file,
              std::ostream& out, std::ostream& err) {
    try {
        std::ifstream in(records_path, std::ios::binary);
        if (!in) throw std::runtime_error("cannot open '" + records_path.string() + "'");
        std::ostringstream text;
        text << in.rdbuf();
        const auto records = records_from_csv(text.str());
        const auto groups = fit_rate(records, group_by);
        for (const RateGroup& g : groups) {
            out << g.key << "\n";
            if (g.fit) {
                out << std::fixed << std::setprecision(6) << "  slope=" << g.fit->slope
                    << " intercept=" << g.fit->intercept << " r_squared=" << g.fit->r_squared
                    << " points=" << g.fit->n_points << "\n";
                out.unsetf(std::ios::floatfield);
            } else {
                out << "  rate undefined: " << g.error << "\n";
            }
            const std::vector<double> bound = bound_curve(g);
            out << "  n_min  mean_excess_risk  lower_bound\n";
            for (std::size_t i = 0; i < g.n_min.size(); ++i) {
                out << "  " << g.n_min[i] << "  " << format_real(g.mean_excess[i]) << "  " << format_real(bound[i])
                    << "\n";
            }
        }
        if (out_file) {
            write_files_atomically(out_file->parent_path().empty() ? fs::path(".") : out_file->parent_path(),
                                   {{out_file->filename().string(), rate_groups_json(groups).dump(2) + "\n"}});
        }
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace shiftlab::cli
