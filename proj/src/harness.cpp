#include "shiftlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>
#include <tuple>

#include "shiftlab/errors.hpp"
#include "shiftlab/risk.hpp"

namespace shiftlab {

int BinRule::bins_for(std::size_t n_min) const {
    if (kind == Kind::Fixed) return fixed_bins;
    const double k = std::ceil(multiplier * static_cast<double>(ceil_cube_root(std::max<std::size_t>(n_min, 1))));
    return std::max(1, static_cast<int>(k));
}

std::string_view to_string(SweepArm arm) noexcept {
    switch (arm) {
        case SweepArm::AddMinority: return "add_minority";
        case SweepArm::AddMajority: return "add_majority";
        case SweepArm::AddBoth: return "add_both";
    }
    return "unknown";
}

SweepArm sweep_arm_from_string(std::string_view name) {
    for (SweepArm arm : {SweepArm::AddMinority, SweepArm::AddMajority, SweepArm::AddBoth}) {
        if (to_string(arm) == name) return arm;
    }
    throw InvalidParameter("unknown sweep arm '" + std::string(name) + "'");
}

std::size_t ExperimentConfig::n_maj_for(std::size_t position) const {
    const std::size_t n_min = n_min_grid.at(position);
    if (!n_maj_grid.empty()) return n_maj_grid.at(position);
    const auto scaled = static_cast<std::size_t>(std::llround(rho * static_cast<double>(n_min)));
    return std::max(n_min, scaled);
}

void ExperimentConfig::validate() const {
    std::vector<std::string> problems;
    if (family_K < 1) problems.push_back("family_K must be >= 1");
    if (scenario == Scenario::GroupShift && !(tau >= 0.0 && tau <= 1.0)) problems.push_back("tau must lie in [0, 1]");
    if (n_min_grid.empty() && !sweep) problems.push_back("n_min_grid must be nonempty");
    for (std::size_t n : n_min_grid) {
        if (n == 0) problems.push_back("n_min_grid entries must be >= 1");
    }
    if (!n_maj_grid.empty()) {
        if (n_maj_grid.size() != n_min_grid.size()) problems.push_back("n_maj_grid must match n_min_grid in length");
        for (std::size_t i = 0; i < std::min(n_maj_grid.size(), n_min_grid.size()); ++i) {
            if (n_maj_grid[i] < n_min_grid[i]) problems.push_back("n_maj_grid entries must be >= matching n_min");
        }
    } else if (!(rho > 0.0) || !std::isfinite(rho)) {
        problems.push_back("rho must be a positive number");
    }
    if (estimators.empty()) problems.push_back("estimators must be nonempty");
    for (EstimatorKind e : estimators) {
        if (e == EstimatorKind::HistogramPlugin && scenario != Scenario::LabelShift) {
            problems.push_back("histogram_plugin applies to label_shift only");
        }
    }
    if (replications < 1) problems.push_back("replications must be >= 1");
    if (bin_rule.kind == BinRule::Kind::CeilCubeRoot && !(bin_rule.multiplier > 0.0)) {
        problems.push_back("bin_rule multiplier c must be > 0");
    }
    if (bin_rule.kind == BinRule::Kind::Fixed && bin_rule.fixed_bins < 1) problems.push_back("bin_rule K must be >= 1");
    if (fixed_index) {
        const bool is_label = std::holds_alternative<LabelShiftIndex>(*fixed_index);
        if (is_label != (scenario == Scenario::LabelShift)) problems.push_back("index does not match scenario");
        try {
            std::visit([&](const auto& idx) {
                idx.validate();
                if (idx.bins() != family_K) problems.push_back("index length must equal family_K");
            }, *fixed_index);
        } catch (const std::exception& e) {
            problems.push_back(e.what());
        }
    }
    if (sweep) {
        if (sweep->base_n_min < 1) problems.push_back("sweep.n_min must be >= 1");
        if (sweep->base_n_maj < sweep->base_n_min) problems.push_back("sweep.n_maj must be >= sweep.n_min");
        if (sweep->factors.empty()) problems.push_back("sweep.factors must be nonempty");
        for (std::size_t f : sweep->factors) {
            if (f < 1) problems.push_back("sweep.factors entries must be >= 1");
        }
        if (sweep->arms.empty()) problems.push_back("sweep.arms must be nonempty");
    }
    if (!problems.empty()) {
        std::ostringstream msg;
        msg << "invalid configuration:";
        for (const auto& p : problems) msg << "\n  - " << p;
        throw ConfigError(msg.str());
    }
}

namespace {

struct GridPoint {
    std::size_t n_min;
    std::size_t n_maj;
};

// Runs f(task) for task in [0, n) on up to `threads` workers; rethrows the first failure.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& f) {
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            try {
                f(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(n);
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
}

PiecewiseConstantClassifier fit_estimator(EstimatorKind kind, const Dataset& data, int K, int family_K,
                                          Scenario scenario, Rng& rng) {
    switch (kind) {
        case EstimatorKind::UndersampledBinning: return fit_undersampled_binning(data, K, rng);
        case EstimatorKind::FullBinning: return fit_full_binning(data, K);
        case EstimatorKind::WeightedBinning: return fit_weighted_binning(data, K);
        case EstimatorKind::HistogramPlugin: return fit_histogram_plugin(data, K, rng).classifier;
        case EstimatorKind::PosteriorOracle:
            return posterior_oracle_classifier(compute_family_posterior(data, family_K, scenario));
    }
    throw InvalidParameter("unhandled estimator");
}

std::vector<TrialRecord> run_grid(const ExperimentConfig& cfg, const std::vector<GridPoint>& grid,
                                  std::uint64_t stream_tag, const RunOptions& opts) {
    std::optional<FamilyIndex> fixed = cfg.fixed_index;
    if (cfg.index_mode == IndexMode::Fixed && !fixed) {
        Rng index_rng(derive_seed(cfg.seed, {0xF1ED, stream_tag}));
        fixed = random_index(cfg.scenario, cfg.family_K, cfg.tau, index_rng);
    }
    std::optional<ShiftInstance> fixed_instance;
    std::optional<double> fixed_bayes;
    if (cfg.index_mode == IndexMode::Fixed) {
        fixed_instance = make_hard_instance(*fixed);
        fixed_bayes = bayes_risk(*fixed_instance).risk;
    }

    const std::size_t reps = cfg.replications;
    const std::size_t tasks = grid.size() * reps;
    std::vector<std::vector<TrialRecord>> per_task(tasks);
    const std::optional<double> tau =
        cfg.scenario == Scenario::GroupShift ? std::optional<double>(cfg.tau) : std::nullopt;

    parallel_for(tasks, opts.threads, [&](std::size_t task) {
        const std::size_t point = task / reps;
        const std::size_t rep = task % reps;
        const GridPoint& g = grid[point];
        const std::uint64_t cell_seed = derive_seed(cfg.seed, {stream_tag, point, rep});
        Rng rng(cell_seed);

        std::optional<ShiftInstance> fresh;
        double bayes = 0.0;
        if (cfg.index_mode == IndexMode::Fresh) {
            fresh = make_hard_instance(random_index(cfg.scenario, cfg.family_K, cfg.tau, rng));
            bayes = bayes_risk(*fresh).risk;
        } else {
            bayes = *fixed_bayes;
        }
        const ShiftInstance& instance = fresh ? *fresh : *fixed_instance;
        const Dataset data = draw_dataset(instance, g.n_maj, g.n_min, rng);
        const int K = cfg.bin_rule.bins_for(g.n_min);

        auto& out = per_task[task];
        out.reserve(cfg.estimators.size());
        for (EstimatorKind e : cfg.estimators) {
            const auto start = std::chrono::steady_clock::now();
            Rng fit_rng(derive_seed(cell_seed, {static_cast<std::uint64_t>(e)}));
            const PiecewiseConstantClassifier f = fit_estimator(e, data, K, cfg.family_K, cfg.scenario, fit_rng);
            const RiskReport report = excess_risk(f, instance, bayes);
            TrialRecord rec;
            rec.scenario = cfg.scenario;
            rec.estimator = e;
            rec.n_min = g.n_min;
            rec.n_maj = g.n_maj;
            rec.tau = tau;
            rec.K_bins = e == EstimatorKind::PosteriorOracle ? cfg.family_K : K;
            rec.replication_id = rep;
            rec.seed_used = cell_seed;
            rec.risk = report.risk;
            rec.bayes_risk = report.bayes_risk;
            rec.excess_risk = report.excess_risk;
            if (opts.record_timing) {
                rec.wall_time_seconds =
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            }
            out.push_back(rec);
        }
    });

    std::vector<TrialRecord> records;
    records.reserve(tasks * cfg.estimators.size());
    for (auto& chunk : per_task) records.insert(records.end(), chunk.begin(), chunk.end());
    return records;
}

}  // namespace

std::vector<TrialRecord> run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
    cfg.validate();
    if (cfg.n_min_grid.empty()) throw ConfigError("invalid configuration:\n  - n_min_grid must be nonempty");
    std::vector<GridPoint> grid;
    for (std::size_t i = 0; i < cfg.n_min_grid.size(); ++i) grid.push_back({cfg.n_min_grid[i], cfg.n_maj_for(i)});
    return run_grid(cfg, grid, 0, opts);
}

std::vector<SweepArmResult> minority_majority_sweep(const ExperimentConfig& cfg, const RunOptions& opts) {
    cfg.validate();
    if (!cfg.sweep) throw ConfigError("invalid configuration:\n  - sweep section is required");
    const SweepPlan& plan = *cfg.sweep;
    std::vector<SweepArmResult> out;
    for (SweepArm arm : plan.arms) {
        std::vector<GridPoint> grid;
        for (std::size_t f : plan.factors) {
            GridPoint g{plan.base_n_min, plan.base_n_maj};
            if (arm == SweepArm::AddMinority || arm == SweepArm::AddBoth) g.n_min *= f;
            if (arm == SweepArm::AddMajority || arm == SweepArm::AddBoth) g.n_maj *= f;
            if (g.n_maj < g.n_min) g.n_maj = g.n_min;
            grid.push_back(g);
        }
        out.push_back({arm, run_grid(cfg, grid, 1 + static_cast<std::uint64_t>(arm), opts)});
    }
    return out;
}

std::vector<CellSummary> summarize(const std::vector<TrialRecord>& records) {
    using Key = std::tuple<int, int, std::size_t, std::size_t, double, bool, int>;
    std::vector<Key> order;
    std::map<Key, std::vector<const TrialRecord*>> groups;
    for (const TrialRecord& r : records) {
        const Key key{static_cast<int>(r.scenario), static_cast<int>(r.estimator), r.n_min, r.n_maj,
                      r.tau.value_or(0.0), r.tau.has_value(), r.K_bins};
        auto [it, inserted] = groups.try_emplace(key);
        if (inserted) order.push_back(key);
        it->second.push_back(&r);
    }
    std::vector<CellSummary> out;
    for (const Key& key : order) {
        const auto& rows = groups[key];
        const TrialRecord& first = *rows.front();
        double sum = 0.0, sum_risk = 0.0;
        for (const TrialRecord* r : rows) {
            sum += r->excess_risk;
            sum_risk += r->risk;
        }
        const double n = static_cast<double>(rows.size());
        const double mean = sum / n;
        double ss = 0.0;
        for (const TrialRecord* r : rows) ss += (r->excess_risk - mean) * (r->excess_risk - mean);
        const double se = rows.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
        out.push_back({first.scenario, first.estimator, first.n_min, first.n_maj, first.tau, first.K_bins,
                       rows.size(), mean, se, sum_risk / n});
    }
    return out;
}

RateFit fit_log_log(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw RateUndefined("x and y lengths differ");
    std::vector<double> sorted_x(x);
    std::sort(sorted_x.begin(), sorted_x.end());
    if (std::unique(sorted_x.begin(), sorted_x.end()) - sorted_x.begin() < 3) {
        throw RateUndefined("need at least 3 distinct n_min values");
    }
    std::vector<double> lx(x.size()), ly(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0)) throw RateUndefined("n_min must be positive");
        if (!(y[i] > 0.0)) {
            std::ostringstream msg;
            msg << "mean excess risk " << y[i] << " at n_min=" << x[i] << " is not positive";
            throw RateUndefined(msg.str());
        }
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    RateFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
        ss_res += r * r;
    }
    fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
    fit.n_points = x.size();
    return fit;
}

namespace {

std::string format_tau(const std::optional<double>& tau) {
    if (!tau) return "";
    std::ostringstream os;
    os.precision(17);
    os << *tau;
    return os.str();
}

}  // namespace

std::vector<RateGroup> fit_rate(const std::vector<TrialRecord>& records, const GroupBy& group_by) {
    std::vector<std::string> order;
    std::map<std::string, std::map<std::size_t, std::vector<const TrialRecord*>>> groups;
    for (const TrialRecord& r : records) {
        std::ostringstream key;
        const char* sep = "";
        if (group_by.scenario) { key << sep << "scenario=" << to_string(r.scenario); sep = ","; }
        if (group_by.estimator) { key << sep << "estimator=" << to_string(r.estimator); sep = ","; }
        if (group_by.tau) { key << sep << "tau=" << format_tau(r.tau); sep = ","; }
        if (group_by.n_maj) { key << sep << "n_maj=" << r.n_maj; sep = ","; }
        const std::string k = key.str().empty() ? "all" : key.str();
        auto [it, inserted] = groups.try_emplace(k);
        if (inserted) order.push_back(k);
        it->second[r.n_min].push_back(&r);
    }
    std::vector<RateGroup> out;
    for (const std::string& k : order) {
        RateGroup g;
        g.key = k;
        const TrialRecord& first = *groups[k].begin()->second.front();
        g.scenario = first.scenario;
        g.tau = first.tau;
        std::vector<double> xs;
        for (const auto& [n_min, rows] : groups[k]) {
            double sum = 0.0, maj = 0.0;
            for (const TrialRecord* r : rows) {
                sum += r->excess_risk;
                maj += static_cast<double>(r->n_maj);
            }
            g.n_min.push_back(n_min);
            g.mean_excess.push_back(sum / static_cast<double>(rows.size()));
            g.mean_n_maj.push_back(maj / static_cast<double>(rows.size()));
            xs.push_back(static_cast<double>(n_min));
        }
        try {
            g.fit = fit_log_log(xs, g.mean_excess);
        } catch (const RateUndefined& e) {
            g.error = e.what();
        }
        out.push_back(std::move(g));
    }
    return out;
}

bool VerificationReport::all_pass() const {
    return std::all_of(entries.begin(), entries.end(), [](const VerificationEntry& e) { return e.pass; });
}

double VerificationReport::max_abs_delta() const {
    double m = 0.0;
    for (const auto& e : entries) m = std::max(m, std::abs(e.delta));
    return m;
}

VerificationReport verify_lemmas(int K_max, const VerifyOptions& opts) {
    if (K_max < 1) throw InvalidParameter("K_max must be >= 1");
    VerificationReport report;
    auto add_equality = [&](std::string check, std::string param, std::string expected_text, double expected,
                            double measured, double tol) {
        VerificationEntry e{std::move(check), std::move(param), std::move(expected_text), expected, measured,
                            measured - expected, tol * opts.tolerance_scale, false};
        e.pass = std::abs(e.delta) <= e.tolerance;
        report.entries.push_back(std::move(e));
    };
    // For bounds the delta is the amount by which [0, bound] is violated.
    auto add_bound = [&](std::string check, std::string param, std::string expected_text, double bound,
                         double measured, double tol) {
        const double violation = std::max({0.0, measured - bound, -measured});
        VerificationEntry e{std::move(check), std::move(param), std::move(expected_text), bound, measured,
                            violation, tol * opts.tolerance_scale, false};
        e.pass = violation <= e.tolerance;
        report.entries.push_back(std::move(e));
    };

    for (int K = 1; K <= K_max; ++K) {
        const std::string param = "K=" + std::to_string(K);
        const double k = K;
        const PiecewiseLinearFn hat = hat_function(K);
        add_equality("hat_abs_integral", param, "1/(8K^2) = 1/" + std::to_string(8 * K * K), 1.0 / (8.0 * k * k),
                     integrate_abs(hat, hat.front(), hat.back()), 1e-12);

        std::vector<int> plus(static_cast<std::size_t>(K), 0), minus(static_cast<std::size_t>(K), 0);
        plus[0] = 1;
        minus[0] = -1;
        const Density up(hat_perturbation(plus, 1.0, 1.0));
        const Density down(hat_perturbation(minus, 1.0, 1.0));
        const std::string kl_text = "<= 1/(3K^3) = 1/" + std::to_string(3 * K * K * K);
        add_bound("kl_plus_minus", param, kl_text, 1.0 / (3.0 * k * k * k), kl_divergence(up, down), 1e-12);
        add_bound("kl_minus_plus", param, kl_text, 1.0 / (3.0 * k * k * k), kl_divergence(down, up), 1e-12);

        // Per-bin Bayes risk is additive over bins, so averaging over constant index
        // vectors gives the family average exactly.
        double family = 0.0;
        for (int a = -1; a <= 1; ++a) {
            for (int b = -1; b <= 1; ++b) {
                LabelShiftIndex idx{std::vector<int>(static_cast<std::size_t>(K), a),
                                    std::vector<int>(static_cast<std::size_t>(K), b)};
                family += bayes_risk(make_label_shift_hard(idx)).risk;
            }
        }
        family /= 9.0;
        add_equality("family_bayes_risk", param, "(1/2)(1 - 1/(18K))", 0.5 * (1.0 - 1.0 / (18.0 * k)), family,
                     1e-12);
    }

    {
        long numerator = 0;
        long denominator = 0;
        for (int a = -1; a <= 1; ++a) {
            for (int b = -1; b <= 1; ++b) {
                numerator += std::abs(a - b);
                ++denominator;
            }
        }
        const long g = std::gcd(numerator, denominator);
        const bool exact = numerator / g == 8 && denominator / g == 9;
        VerificationEntry e{"trit_abs_difference_mean", "rational", "8/9", 8.0 / 9.0,
                            static_cast<double>(numerator) / static_cast<double>(denominator),
                            exact ? 0.0 : 1.0, 0.0, false};
        e.pass = exact && opts.tolerance_scale >= 0.0;
        report.entries.push_back(std::move(e));
    }

    for (int i = 0; i <= 10; ++i) {
        const double tau = i / 10.0;
        std::ostringstream param;
        param << "tau=" << tau;
        const double measured = overlap(Density::step(2.0 - tau, tau), Density::step(tau, 2.0 - tau));
        add_equality("step_overlap", param.str(), "tau", tau, measured, 1e-9);
    }
    return report;
}

}  // namespace shiftlab
