#include "isac/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "isac/errors.hpp"
#include "isac/ofdm.hpp"
#include "isac/rng.hpp"

namespace isac {

namespace {

void run_trials(int total, int workers, const std::function<void(int)>& body) {
    if (workers <= 1) {
        for (int t = 0; t < total; ++t) body(t);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        while (true) {
            const int t = next.fetch_add(1);
            if (t >= total) break;
            try {
                body(t);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

int resolved_workers(const ExperimentConfig& config) {
    return config.workers > 0 ? config.workers : default_worker_count();
}

ReportRow make_row(int k, std::string series, long errors, long total, long trials,
                   long degenerate) {
    ReportRow row;
    row.k = k;
    row.series = std::move(series);
    row.errors = errors;
    row.total = total;
    row.trials = trials;
    row.degenerate = degenerate;
    row.error_prob = total > 0 ? static_cast<double>(errors) / static_cast<double>(total) : 0.0;
    const WilsonInterval ci = wilson_interval(errors, total);
    row.ci_low = ci.low;
    row.ci_high = ci.high;
    return row;
}

std::string format_power(double p) {
    std::ostringstream out;
    out << "p=" << p;
    return out.str();
}

std::string serialize_scenario(const Scenario& scenario) {
    std::ostringstream out;
    out.precision(17);
    out << "bs=";
    for (std::size_t m = 0; m < scenario.bs.size(); ++m) {
        if (m) out << ";";
        out << scenario.bs[m].x << " " << scenario.bs[m].y;
    }
    out << " targets=";
    for (std::size_t k = 0; k < scenario.targets.size(); ++k) {
        if (k) out << ";";
        out << scenario.targets[k].x << " " << scenario.targets[k].y;
    }
    return out.str();
}

/// Error events for one trial: min-cost match of estimates to truth, then
/// count matched pairs farther apart than r.
long count_error_events(const std::vector<Point>& estimates,
                        const std::vector<Point>& truth, double r) {
    const int k_count = static_cast<int>(truth.size());
    Eigen::MatrixXd cost(k_count, k_count);
    for (int i = 0; i < k_count; ++i) {
        for (int j = 0; j < k_count; ++j) {
            const double d = distance(estimates[i], truth[j]);
            cost(i, j) = d * d;
        }
    }
    const HungarianResult match = hungarian_assign(cost);
    long errors = 0;
    for (int i = 0; i < k_count; ++i) {
        if (distance(estimates[i], truth[match.assignment[i]]) > r) ++errors;
    }
    return errors;
}

std::vector<Point> random_bs(int num_bs, double region_side, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> coord(-region_side / 2.0, region_side / 2.0);
    while (true) {
        std::vector<Point> bs(static_cast<std::size_t>(num_bs));
        for (auto& p : bs) p = {coord(rng), coord(rng)};
        bool ok = true;
        for (std::size_t i = 0; i + 2 < bs.size() && ok; ++i)
            for (std::size_t j = i + 1; j + 1 < bs.size() && ok; ++j)
                for (std::size_t l = j + 1; l < bs.size() && ok; ++l)
                    if (collinear(bs[i], bs[j], bs[l])) ok = false;
        if (ok) return bs;
    }
}

void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw ConfigError("cannot write " + tmp);
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

} // namespace

std::string to_string(ExperimentKind kind) {
    switch (kind) {
    case ExperimentKind::RangeError: return "range-error";
    case ExperimentKind::LocalizationError: return "localization-error";
    case ExperimentKind::Theorem1: return "theorem1";
    case ExperimentKind::Theorem2: return "theorem2";
    case ExperimentKind::Lemma1: return "lemma1";
    }
    return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
    if (name == "range-error") return ExperimentKind::RangeError;
    if (name == "localization-error") return ExperimentKind::LocalizationError;
    if (name == "theorem1") return ExperimentKind::Theorem1;
    if (name == "theorem2") return ExperimentKind::Theorem2;
    if (name == "lemma1") return ExperimentKind::Lemma1;
    throw ConfigError("unknown experiment kind: " + name);
}

void ExperimentConfig::validate() const {
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (region_side <= 0.0) throw ConfigError("region_side must be positive");
    if (num_bs < 3) throw ConfigError("num_bs must be >= 3");
    if (k_values.empty()) throw ConfigError("k_values must be non-empty");
    for (int k : k_values)
        if (k < 1) throw ConfigError("every K must be >= 1");
    if (!bs_coords.empty() && static_cast<int>(bs_coords.size()) != num_bs)
        throw ConfigError("bs_coords must match num_bs when given");
    if (kind == ExperimentKind::RangeError && tx_powers.empty())
        throw ConfigError("tx_powers must be non-empty for range-error");
    if (kind == ExperimentKind::LocalizationError && error_radius <= 0.0)
        throw ConfigError("error_radius must be positive for localization-error");
    if (workers < 0) throw ConfigError("workers must be >= 0");
}

WilsonInterval wilson_interval(long errors, long total, double z) {
    if (total <= 0) return {0.0, 1.0};
    const double n = static_cast<double>(total);
    const double phat = static_cast<double>(errors) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = phat + z2 / (2.0 * n);
    const double half = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n));
    WilsonInterval ci{std::max(0.0, (center - half) / denom),
                      std::min(1.0, (center + half) / denom)};
    // exact endpoints under p-hat = 0 or 1; the formula leaves rounding dust
    if (errors == 0) ci.low = 0.0;
    if (errors == total) ci.high = 1.0;
    return ci;
}

std::vector<Point> default_bs_placement(int num_bs, double region_side) {
    std::vector<Point> bs(static_cast<std::size_t>(num_bs));
    const double radius = region_side / 2.0;
    for (int m = 0; m < num_bs; ++m) {
        const double angle = 2.0 * std::numbers::pi * (m + 0.5) / num_bs;
        bs[static_cast<std::size_t>(m)] = {radius * std::cos(angle), radius * std::sin(angle)};
    }
    return bs;
}

Scenario sample_scenario(const std::vector<Point>& bs, int num_targets,
                         double region_side, double min_range_separation,
                         std::mt19937_64& rng, long* rejections) {
    std::uniform_real_distribution<double> coord(-region_side / 2.0, region_side / 2.0);
    Scenario scenario;
    scenario.bs = bs;
    scenario.region_side = region_side;
    while (true) {
        scenario.targets.resize(static_cast<std::size_t>(num_targets));
        for (auto& t : scenario.targets) t = {coord(rng), coord(rng)};
        bool ok = true;
        for (std::size_t m = 0; m < bs.size() && ok; ++m) {
            for (int i = 0; i < num_targets && ok; ++i) {
                const double di = distance(bs[m], scenario.targets[static_cast<std::size_t>(i)]);
                if (di <= min_range_separation) ok = false; // target on top of a BS
                for (int j = i + 1; j < num_targets && ok; ++j) {
                    const double dj =
                        distance(bs[m], scenario.targets[static_cast<std::size_t>(j)]);
                    if (std::abs(di - dj) <= min_range_separation) ok = false;
                }
            }
        }
        if (ok) return scenario;
        if (rejections) ++(*rejections);
    }
}

ExperimentReport run_range_error(const ExperimentConfig& config) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();

    OfdmParams base = config.ofdm;
    const bool random_allocation = base.allocation.empty();
    base.validate();
    if (!random_allocation && static_cast<int>(base.allocation.size()) != config.num_bs)
        throw ConfigError("allocation count must match num_bs");

    const double noise_power =
        config.noiseless
            ? 0.0
            : (base.noise_power > 0.0 ? base.noise_power
                                      : thermal_noise_power(base.bandwidth()));
    SupportRule rule = config.support;
    if (rule.tau_abs == 0.0 && rule.rho == 0.0 && config.noiseless) rule.rho = 1e-6;

    const int n_powers = static_cast<int>(config.tx_powers.size());
    ExperimentReport report;
    report.kind = ExperimentKind::RangeError;
    std::atomic<long> rejections{0};

    struct TrialOut {
        std::vector<char> error; // one flag per power
        bool degenerate = false;
    };

    for (int k : config.k_values) {
        const std::uint64_t k_seed = derive_seed(config.seed, static_cast<std::uint64_t>(k));
        std::vector<TrialOut> outs(static_cast<std::size_t>(config.trials));

        run_trials(config.trials, resolved_workers(config), [&](int trial) {
            TrialOut& out = outs[static_cast<std::size_t>(trial)];
            out.error.assign(static_cast<std::size_t>(n_powers), 0);

            const std::uint64_t trial_seed = derive_seed(k_seed, static_cast<std::uint64_t>(trial));
            long local_rejections = 0;
            auto scn_rng = make_rng(trial_seed, 0);
            const std::vector<Point> bs =
                config.bs_coords.empty()
                    ? random_bs(config.num_bs, config.region_side, scn_rng)
                    : config.bs_coords;
            const Scenario scenario = sample_scenario(bs, k, config.region_side,
                                                      base.tap_width(), scn_rng,
                                                      &local_rejections);
            rejections += local_rejections;
            scenario.validate();
            OfdmParams trial_base = base;
            if (random_allocation)
                trial_base.allocation = make_random_allocation(
                    trial_base.n_subcarriers, config.num_bs, scn_rng);

            std::vector<std::vector<int>> truth(static_cast<std::size_t>(config.num_bs));
            for (int m = 0; m < config.num_bs; ++m) {
                for (int t = 0; t < k; ++t)
                    truth[static_cast<std::size_t>(m)].push_back(
                        delay_tap(scenario.bs_target_distance(m, t), base));
                std::sort(truth[static_cast<std::size_t>(m)].begin(),
                          truth[static_cast<std::size_t>(m)].end());
            }

            for (int pi = 0; pi < n_powers; ++pi) {
                OfdmParams params = trial_base;
                params.tx_power = config.tx_powers[static_cast<std::size_t>(pi)];
                params.noise_power = noise_power;

                // identical re-seed per power so only the power level varies
                auto chan_rng = make_rng(trial_seed, 1);
                const auto taps = build_pair_taps(scenario, params, config.gain, chan_rng);
                std::vector<OfdmSymbol> symbols;
                symbols.reserve(static_cast<std::size_t>(config.num_bs));
                for (int m = 0; m < config.num_bs; ++m)
                    symbols.push_back(make_symbol(params, m, chan_rng));
                const auto received =
                    transmit_through_channel(symbols, taps, params, chan_rng);

                bool error = false;
                for (int m = 0; m < config.num_bs; ++m) {
                    const Observation obs = demodulate(
                        received[static_cast<std::size_t>(m)],
                        symbols[static_cast<std::size_t>(m)], params, m);
                    LassoParams lasso;
                    lasso.lambda = config.noiseless ? 0.0 : -1.0;
                    const LassoResult result = lasso_estimate(obs, lasso);
                    if (!result.converged) out.degenerate = true;
                    if (detect_support(result.h, rule) != truth[static_cast<std::size_t>(m)])
                        error = true;
                }
                out.error[static_cast<std::size_t>(pi)] = error ? 1 : 0;
            }
        });

        for (int pi = 0; pi < n_powers; ++pi) {
            long errors = 0, degenerate = 0;
            for (const TrialOut& out : outs) {
                errors += out.error[static_cast<std::size_t>(pi)];
                if (pi == 0 && out.degenerate) ++degenerate;
            }
            if (pi != 0)
                degenerate = std::count_if(outs.begin(), outs.end(),
                                           [](const TrialOut& o) { return o.degenerate; });
            report.rows.push_back(make_row(
                k, format_power(config.tx_powers[static_cast<std::size_t>(pi)]), errors,
                config.trials, config.trials, degenerate));
        }
    }

    report.rejections = rejections.load();
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

ExperimentReport run_localization_error(const ExperimentConfig& config) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();

    OfdmParams base = config.ofdm;
    if (base.allocation.empty())
        base.allocation = make_contiguous_allocation(base.n_subcarriers, config.num_bs);
    base.validate();

    const double dd = base.range_resolution();
    const double sigma_gauss = config.sigma < 0.0 ? midpoint_sigma(base) : config.sigma;

    ExperimentReport report;
    report.kind = ExperimentKind::LocalizationError;
    std::atomic<long> rejections{0};

    struct TrialOut {
        long errors_mid = 0;
        long errors_gauss = 0;
        bool degenerate = false;
    };

    for (int k : config.k_values) {
        const std::uint64_t k_seed = derive_seed(config.seed, static_cast<std::uint64_t>(k));
        std::vector<TrialOut> outs(static_cast<std::size_t>(config.trials));

        const Eigen::MatrixXd sigma_mid =
            uniform_sigma(config.num_bs, k, midpoint_sigma(base));
        const Eigen::MatrixXd sigma_obj_gauss =
            uniform_sigma(config.num_bs, k, std::max(sigma_gauss, 1e-9));
        const double delta0_mid =
            config.delta0 < 0.0 ? default_delta0(dd, sigma_mid) : config.delta0;
        const double delta0_gauss =
            config.delta0 < 0.0 ? default_delta0(dd, sigma_obj_gauss) : config.delta0;

        run_trials(config.trials, resolved_workers(config), [&](int trial) {
            TrialOut& out = outs[static_cast<std::size_t>(trial)];
            const std::uint64_t trial_seed = derive_seed(k_seed, static_cast<std::uint64_t>(trial));
            long local_rejections = 0;
            auto scn_rng = make_rng(trial_seed, 0);
            const std::vector<Point> bs =
                config.bs_coords.empty()
                    ? random_bs(config.num_bs, config.region_side, scn_rng)
                    : config.bs_coords;
            const Scenario scenario = sample_scenario(bs, k, config.region_side,
                                                      base.tap_width(), scn_rng,
                                                      &local_rejections);
            rejections += local_rejections;

            try {
                const auto sets = midpoint_range_sets(scenario, base);
                const LocalizationResult res =
                    ml_localize(sets, bs, sigma_mid, delta0_mid);
                out.errors_mid =
                    count_error_events(res.coords, scenario.targets, config.error_radius);
            } catch (const EmptyFeasibleSet&) {
                out.errors_mid = k;
                out.degenerate = true;
            }

            auto noise_rng = make_rng(trial_seed, 1);
            bool clamped = false;
            const Eigen::MatrixXd sigma_draw = uniform_sigma(config.num_bs, k, sigma_gauss);
            const auto noisy =
                sample_noisy_ranges(scenario, sigma_draw, noise_rng, &clamped);
            if (clamped) out.degenerate = true;
            try {
                const LocalizationResult res =
                    ml_localize(noisy, bs, sigma_obj_gauss, delta0_gauss);
                out.errors_gauss =
                    count_error_events(res.coords, scenario.targets, config.error_radius);
            } catch (const EmptyFeasibleSet&) {
                out.errors_gauss = k;
                out.degenerate = true;
            }
        });

        long errors_mid = 0, errors_gauss = 0, degenerate = 0;
        for (const TrialOut& out : outs) {
            errors_mid += out.errors_mid;
            errors_gauss += out.errors_gauss;
            if (out.degenerate) ++degenerate;
        }
        const long total = static_cast<long>(k) * config.trials;
        report.rows.push_back(
            make_row(k, "midpoint", errors_mid, total, config.trials, degenerate));
        report.rows.push_back(
            make_row(k, "gaussian", errors_gauss, total, config.trials, degenerate));
    }

    report.rejections = rejections.load();
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

ExperimentReport run_theorem_checks(const ExperimentConfig& config) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();

    ExperimentReport report;
    report.kind = config.kind;

    if (config.kind == ExperimentKind::Lemma1) {
        Scenario symmetric;
        symmetric.bs = {{-1.0, 0.0}, {1.0, 0.0}, {0.0, -1.0}, {0.0, 1.0}};
        symmetric.targets = {{2.0, 3.0}, {-2.0, -3.0}};
        symmetric.region_side = 10.0;
        const int tau_sym =
            detect_ghosts(perfect_range_sets(symmetric), symmetric.bs).tau;

        Scenario perturbed = symmetric;
        perturbed.targets[0].x += 0.1;
        const int tau_pert =
            detect_ghosts(perfect_range_sets(perturbed), perturbed.bs).tau;

        report.rows.push_back(make_row(2, "symmetric", tau_sym > 1 ? 1 : 0, 1, 1, 0));
        report.rows.push_back(make_row(2, "perturbed", tau_pert > 1 ? 1 : 0, 1, 1, 0));
        if (tau_sym <= 1) {
            report.passed = false;
            report.failure_detail =
                "expected a ghost in the symmetric geometry: " + serialize_scenario(symmetric);
        } else if (tau_pert != 1) {
            report.passed = false;
            report.failure_detail =
                "unexpected ghost after perturbation: " + serialize_scenario(perturbed);
        }
        report.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return report;
    }

    std::atomic<long> rejections{0};
    for (int k : config.k_values) {
        const int num_bs =
            config.kind == ExperimentKind::Theorem1 ? 2 * k + 1 : config.num_bs;
        const std::uint64_t k_seed = derive_seed(config.seed, static_cast<std::uint64_t>(k));

        std::vector<char> ghost(static_cast<std::size_t>(config.trials), 0);
        std::vector<std::string> details(static_cast<std::size_t>(config.trials));

        run_trials(config.trials, resolved_workers(config), [&](int trial) {
            const std::uint64_t trial_seed = derive_seed(k_seed, static_cast<std::uint64_t>(trial));
            auto rng = make_rng(trial_seed, 0);
            const std::vector<Point> bs = random_bs(num_bs, config.region_side, rng);
            long local_rejections = 0;
            const Scenario scenario = sample_scenario(bs, k, config.region_side, 1e-9,
                                                      rng, &local_rejections);
            rejections += local_rejections;
            const GhostReport result = detect_ghosts(perfect_range_sets(scenario), bs);
            if (result.tau > 1) {
                ghost[static_cast<std::size_t>(trial)] = 1;
                details[static_cast<std::size_t>(trial)] = serialize_scenario(scenario);
            }
        });

        const long ghosts = std::count(ghost.begin(), ghost.end(), 1);
        report.rows.push_back(make_row(k, "tau>1", ghosts, config.trials, config.trials, 0));
        if (ghosts > 0 && report.passed) {
            report.passed = false;
            const auto first = std::find(ghost.begin(), ghost.end(), 1);
            report.failure_detail =
                "ghost at K=" + std::to_string(k) + ": " +
                details[static_cast<std::size_t>(first - ghost.begin())];
        }
    }

    report.rejections = rejections.load();
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
    switch (config.kind) {
    case ExperimentKind::RangeError: return run_range_error(config);
    case ExperimentKind::LocalizationError: return run_localization_error(config);
    default: return run_theorem_checks(config);
    }
}

void write_report_csv(const ExperimentReport& report, const std::string& path) {
    std::ostringstream out;
    out.precision(17);
    out << "k,series,error_prob,ci_low,ci_high,errors,total,trials,degenerate\n";
    for (const ReportRow& row : report.rows) {
        out << row.k << "," << row.series << "," << row.error_prob << "," << row.ci_low
            << "," << row.ci_high << "," << row.errors << "," << row.total << ","
            << row.trials << "," << row.degenerate << "\n";
    }
    write_text_atomic(path, out.str());
}

void write_plot_data_csv(const ExperimentReport& report, const std::string& path) {
    std::ostringstream out;
    out.precision(17);
    out << "series,x,y\n";
    for (const ReportRow& row : report.rows)
        out << row.series << "," << row.k << "," << row.error_prob << "\n";
    write_text_atomic(path, out.str());
}

int default_worker_count() {
    const char* env = std::getenv("ISAC_WORKERS");
    if (!env) return 1;
    const int value = std::atoi(env);
    return value > 0 ? value : 1;
}

} // namespace isac
