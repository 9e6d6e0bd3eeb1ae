#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "shiftlab/cli.hpp"

namespace {

// "scenario,estimator,tau" style list of grouping fields.
shiftlab::GroupBy parse_group_by(const std::string& spec) {
    shiftlab::GroupBy g{false, false, false, false};
    std::stringstream ss(spec);
    std::string field;
    while (std::getline(ss, field, ',')) {
        if (field == "scenario") g.scenario = true;
        else if (field == "estimator") g.estimator = true;
        else if (field == "tau") g.tau = true;
        else if (field == "n_maj") g.n_maj = true;
        else if (!field.empty()) throw CLI::ValidationError("--by", "unknown grouping field '" + field + "'");
    }
    return g;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulate classifiers under label and group shift and compare with minimax lower bounds"};
    app.set_version_flag("--version", std::string(shiftlab::cli::kToolVersion));
    app.require_subcommand(1);

    shiftlab::cli::RunArgs run_args;
    std::optional<std::uint64_t> seed;
    auto add_run_options = [&](CLI::App* sub) {
        sub->add_option("--config", run_args.config, "JSON experiment config")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", run_args.out_dir, "output directory")->required();
        sub->add_option("--threads", run_args.threads, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--seed", seed, "override the config seed");
        sub->add_flag("--record-timing", run_args.record_timing, "record wall times (breaks byte reproducibility)");
    };

    CLI::App* run = app.add_subcommand("run", "run an experiment grid");
    add_run_options(run);
    CLI::App* sweep = app.add_subcommand("sweep", "run the minority/majority addition sweep");
    add_run_options(sweep);

    int k_max = 16;
    double tolerance_scale = 1.0;
    CLI::App* verify = app.add_subcommand("verify", "check the closed-form constants of the hard-instance construction");
    verify->add_option("--kmax", k_max, "largest K to check")->check(CLI::PositiveNumber);
    verify->add_option("--tolerance-scale", tolerance_scale)->group("");

    std::string records;
    std::string by = "scenario,estimator,tau";
    std::optional<std::string> rates_out;
    CLI::App* rates = app.add_subcommand("rates", "fit log-log rates to a records file");
    rates->add_option("--records", records, "records.csv")->required()->check(CLI::ExistingFile);
    rates->add_option("--by", by, "comma-separated grouping fields");
    rates->add_option("--out", rates_out, "write fits as JSON");

    CLI11_PARSE(app, argc, argv);
    run_args.seed = seed;

    if (run->parsed()) return shiftlab::cli::cmd_run(run_args, std::cout, std::cerr);
    if (sweep->parsed()) return shiftlab::cli::cmd_sweep(run_args, std::cout, std::cerr);
    if (verify->parsed()) return shiftlab::cli::cmd_verify(k_max, tolerance_scale, std::cout, std::cerr);
    shiftlab::GroupBy group_by;
    try {
        group_by = parse_group_by(by);
    } catch (const CLI::Error& e) {
        return app.exit(e);
    }
    std::optional<std::filesystem::path> out_file;
    if (rates_out) out_file = *rates_out;
    return shiftlab::cli::cmd_rates(records, group_by, out_file, std::cout, std::cerr);
}
