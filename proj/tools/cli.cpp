#include "cli.hpp"

#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "isac/config.hpp"
#include "isac/errors.hpp"
#include "isac/harness.hpp"
#include "isac/localization.hpp"
#include "isac/ofdm.hpp"
#include "isac/ranging.hpp"
#include "isac/rng.hpp"

namespace isac {

namespace {

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string output_dir;
    long seed = -1; // < 0: keep config value
    bool verbose = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool config_required = true) {
    auto* config = cmd->add_option("--config", opts.config_path, "config file path");
    if (config_required) config->required();
    cmd->add_option("--set", opts.overrides, "override as section.key=value (repeatable)");
    cmd->add_option("--output", opts.output_dir, "output directory");
    cmd->add_option("--seed", opts.seed, "seed override");
    cmd->add_flag("--verbose", opts.verbose, "chatty progress output");
}

ConfigFile load_config(const CommonOpts& opts) {
    if (!std::filesystem::exists(opts.config_path))
        throw ConfigError("config file not found: " + opts.config_path);
    ConfigFile config = ConfigFile::parse_file(opts.config_path);
    for (const std::string& o : opts.overrides) config.apply_override(o);
    if (opts.seed >= 0)
        config.apply_override("experiment.seed=" + std::to_string(opts.seed));
    return config;
}

void reject_unknown_keys(const ConfigFile& config) {
    const std::vector<std::string> diags = validate_config(config);
    for (const std::string& d : diags)
        if (d.rfind("unknown", 0) == 0) throw ConfigError(d);
}

std::filesystem::path ensure_output_dir(const CommonOpts& opts) {
    const std::filesystem::path dir =
        opts.output_dir.empty() ? std::filesystem::path(".") : std::filesystem::path(opts.output_dir);
    std::filesystem::create_directories(dir);
    return dir;
}

Scenario loaded_scenario(const ConfigFile& config, bool need_targets) {
    Scenario scn = load_scenario(config);
    if (scn.bs.empty()) throw ConfigError("scenario.bs (or bs_file) is required");
    if (need_targets && scn.targets.empty())
        throw ConfigError("scenario.targets (or targets_file) is required");
    scn.validate();
    return scn;
}

int cmd_validate(const CommonOpts& opts) {
    const std::vector<std::string> diags = validate_config_path(opts.config_path);
    if (diags.empty()) {
        std::cout << "valid\n";
        return kExitOk;
    }
    for (const std::string& d : diags) std::cout << d << "\n";
    return kExitConfig;
}

int cmd_ghosts(const CommonOpts& opts) {
    const ConfigFile config = load_config(opts);
    reject_unknown_keys(config);
    const Scenario scn = loaded_scenario(config, true);

    const GhostReport report = detect_ghosts(perfect_range_sets(scn), scn.bs);
    if (report.ghost_exists())
        std::cout << "ghost detected, tau=" << report.tau << "\n";
    else
        std::cout << "no ghost, tau=" << report.tau << "\n";
    std::cout.precision(12);
    for (std::size_t s = 0; s < report.solutions.size(); ++s) {
        std::cout << "solution " << s + 1 << ":";
        for (const Point& p : report.solutions[s].coords)
            std::cout << " (" << p.x << ", " << p.y << ")";
        std::cout << "\n";
    }
    if (!opts.output_dir.empty())
        write_ghost_report_csv(report, (ensure_output_dir(opts) / "ghosts.csv").string());
    return kExitOk;
}

int cmd_range(const CommonOpts& opts) {
    const ConfigFile config = load_config(opts);
    reject_unknown_keys(config);
    const Scenario scn = loaded_scenario(config, true);
    OfdmParams params = load_ofdm_params(config);
    if (params.allocation.empty())
        params.allocation = make_contiguous_allocation(params.n_subcarriers, scn.num_bs());
    params.validate();
    if (params.noise_power == 0.0 && config.get("ofdm", "noise_power", "auto") == "auto")
        params.noise_power = thermal_noise_power(params.bandwidth());
    const GainConfig gain = load_gain_config(config);
    SupportRule rule = load_support_rule(config);
    if (rule.tau_abs == 0.0 && rule.rho == 0.0 && params.noise_power == 0.0) rule.rho = 1e-6;

    const std::uint64_t seed = opts.seed >= 0 ? static_cast<std::uint64_t>(opts.seed) : 1;
    auto rng = make_rng(seed, 1);
    const auto taps = build_pair_taps(scn, params, gain, rng);
    std::vector<OfdmSymbol> symbols;
    for (int m = 0; m < scn.num_bs(); ++m) symbols.push_back(make_symbol(params, m, rng));
    const auto received = transmit_through_channel(symbols, taps, params, rng);

    std::vector<RangeSet> sets;
    std::cout.precision(12);
    for (int m = 0; m < scn.num_bs(); ++m) {
        const Observation obs =
            demodulate(received[static_cast<std::size_t>(m)],
                       symbols[static_cast<std::size_t>(m)], params, m);
        LassoParams lasso;
        lasso.lambda = params.noise_power == 0.0 ? 0.0 : -1.0;
        const LassoResult result = lasso_estimate(obs, lasso);
        const RangeSet set = extract_range_set(detect_support(result.h, rule), params);
        if (opts.verbose)
            std::cout << "# BS " << m + 1 << ": " << result.iterations
                      << " iterations, kkt " << result.kkt_residual << "\n";
        std::cout << "BS " << m + 1 << " ranges:";
        for (double r : set.ranges) std::cout << " " << r;
        std::cout << "\n";
        sets.push_back(set);
    }
    write_range_sets_csv(sets, (ensure_output_dir(opts) / "ranges.csv").string());
    return kExitOk;
}

int cmd_localize(const CommonOpts& opts, const std::string& ranges_path) {
    const ConfigFile config = load_config(opts);
    reject_unknown_keys(config);
    const Scenario scn = loaded_scenario(config, false);
    const OfdmParams params = load_ofdm_params(config);
    const ExperimentConfig exp = load_experiment_config(config);

    std::vector<RangeSet> sets;
    if (!ranges_path.empty()) {
        sets = read_range_sets_csv(ranges_path);
    } else if (!scn.targets.empty()) {
        sets = midpoint_range_sets(scn, params);
    } else {
        throw ConfigError("localize needs --ranges or scenario targets");
    }
    if (sets.size() != scn.bs.size())
        throw ConfigError("range-set count does not match the BS count");

    const int k_count = sets.front().size();
    const double sigma = exp.sigma < 0.0 ? midpoint_sigma(params) : exp.sigma;
    const Eigen::MatrixXd sigma_mat =
        uniform_sigma(scn.num_bs(), k_count, std::max(sigma, 1e-9));
    const double delta0 = exp.delta0 < 0.0
                              ? default_delta0(params.range_resolution(), sigma_mat)
                              : exp.delta0;

    const LocalizationResult result = ml_localize(sets, scn.bs, sigma_mat, delta0);
    std::cout.precision(12);
    for (std::size_t k = 0; k < result.coords.size(); ++k)
        std::cout << "target " << k + 1 << ": (" << result.coords[k].x << ", "
                  << result.coords[k].y << ")\n";
    std::cout << "objective: " << result.objective << "\n";

    std::ostringstream csv;
    csv.precision(17);
    csv << "target,x,y,residual\n";
    for (std::size_t k = 0; k < result.coords.size(); ++k)
        csv << k + 1 << "," << result.coords[k].x << "," << result.coords[k].y << ","
            << result.per_target_residuals[k] << "\n";
    write_text_atomic((ensure_output_dir(opts) / "locations.csv").string(), csv.str());
    return kExitOk;
}

int cmd_experiment(const CommonOpts& opts, const std::string& kind,
                   long trials) {
    ConfigFile config = opts.config_path.empty() ? ConfigFile{} : load_config(opts);
    if (opts.config_path.empty()) {
        for (const std::string& o : opts.overrides) config.apply_override(o);
        if (opts.seed >= 0)
            config.apply_override("experiment.seed=" + std::to_string(opts.seed));
    }
    if (!kind.empty()) config.apply_override("experiment.kind=" + kind);
    if (trials > 0) config.apply_override("experiment.trials=" + std::to_string(trials));

    const ExperimentConfig exp = load_experiment_config(config);
    ExperimentReport report = run_experiment(exp);
    report.config_echo = serialize_experiment_config(exp);

    const std::filesystem::path dir = ensure_output_dir(opts);
    write_report_csv(report, (dir / "report.csv").string());
    write_plot_data_csv(report, (dir / "plot.csv").string());
    write_text_atomic((dir / "effective.cfg").string(), report.config_echo);

    std::cout.precision(6);
    for (const ReportRow& row : report.rows)
        std::cout << "K=" << row.k << " " << row.series << ": error_prob="
                  << row.error_prob << " [" << row.ci_low << ", " << row.ci_high
                  << "] errors=" << row.errors << "/" << row.total << "\n";
    if (opts.verbose)
        std::cout << "# rejections=" << report.rejections << " wall="
                  << report.wall_seconds << "s\n";
    if (!report.passed) {
        std::cerr << "assertion failed: " << report.failure_detail << "\n";
        return kExitAssertion;
    }
    return kExitOk;
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"two-phase OFDM device-free sensing toolkit"};
    app.require_subcommand(1);

    CommonOpts validate_opts, ghosts_opts, range_opts, localize_opts, experiment_opts;
    std::string ranges_path, experiment_kind;
    long experiment_trials = -1;

    auto* validate = app.add_subcommand("validate", "check a config file");
    add_common(validate, validate_opts);

    auto* ghosts = app.add_subcommand("ghosts", "ghost-target check on one scenario");
    add_common(ghosts, ghosts_opts);

    auto* range = app.add_subcommand("range", "Phase I ranging on one scenario");
    add_common(range, range_opts);

    auto* localize = app.add_subcommand("localize", "Phase II localization");
    add_common(localize, localize_opts);
    localize->add_option("--ranges", ranges_path, "range-set CSV (bs,rank,range_m)");

    auto* experiment = app.add_subcommand("experiment", "Monte Carlo experiment");
    add_common(experiment, experiment_opts, false);
    experiment->add_option("--kind", experiment_kind,
                           "range-error | localization-error | theorem1 | theorem2 | lemma1");
    experiment->add_option("--trials", experiment_trials, "trial count override");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (validate->parsed()) return cmd_validate(validate_opts);
        if (ghosts->parsed()) return cmd_ghosts(ghosts_opts);
        if (range->parsed()) return cmd_range(range_opts);
        if (localize->parsed()) return cmd_localize(localize_opts, ranges_path);
        return cmd_experiment(experiment_opts, experiment_kind, experiment_trials);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitAssertion;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitAssertion;
    }
}

} // namespace isac
