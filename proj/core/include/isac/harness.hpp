#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "isac/localization.hpp"
#include "isac/scenario.hpp"

namespace isac {

enum class ExperimentKind { RangeError, LocalizationError, Theorem1, Theorem2, Lemma1 };

enum class RangeModel { Midpoint, Gaussian };

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& name);

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::LocalizationError;
    int trials = 1000;
    std::uint64_t seed = 1;

    double region_side = 200.0;
    int num_bs = 4;
    std::vector<int> k_values = {2};
    std::vector<Point> bs_coords; // empty: default ring placement

    OfdmParams ofdm;              // allocation may be left empty (contiguous split)
    GainConfig gain;
    SupportRule support;          // both thresholds 0: pick per noise mode

    std::vector<double> tx_powers = {6.0, 8.0}; // range-error series, watts
    bool noiseless = false;

    RangeModel range_model = RangeModel::Midpoint;
    double sigma = -1.0;          // Gaussian range noise; < 0: Delta d / sqrt(3)
    double error_radius = 2.5;    // r, meters
    double delta0 = -1.0;         // < 0: 2 Delta d + 6 sigma

    int workers = 0;              // 0: ISAC_WORKERS env var, else 1

    void validate() const; // throws ConfigError
};

struct ReportRow {
    int k = 0;
    std::string series;   // e.g. "p=6", "midpoint", "gaussian", "symmetric"
    long errors = 0;
    long total = 0;       // error-event denominator
    double error_prob = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    long trials = 0;
    long degenerate = 0;
};

struct ExperimentReport {
    ExperimentKind kind = ExperimentKind::LocalizationError;
    std::vector<ReportRow> rows;
    long rejections = 0;          // resampled target draws
    double wall_seconds = 0.0;    // not part of the serialized report
    std::string config_echo;      // filled by the CLI layer
    std::string failure_detail;   // offending scenario when an assertion fails
    bool passed = true;
};

struct WilsonInterval {
    double low = 0.0;
    double high = 0.0;
};

/// Wilson score interval for errors/total at normal quantile z.
WilsonInterval wilson_interval(long errors, long total, double z = 1.959963984540054);

/// BSs evenly spaced on a ring of radius side/2, offset half a step.
std::vector<Point> default_bs_placement(int num_bs, double region_side);

/// Targets uniform in the square; any target pair whose range difference at
/// some BS is <= min_range_separation is rejected and the whole target set is
/// redrawn. BS positions are kept. Rejections are accumulated in *rejections.
Scenario sample_scenario(const std::vector<Point>& bs, int num_targets,
                         double region_side, double min_range_separation,
                         std::mt19937_64& rng, long* rejections = nullptr);

/// Phase I Monte Carlo: full OFDM synthesis, LASSO, support detection; a trial
/// errs when any BS's detected tap set differs from the true one. One series
/// per transmit power, sharing scenario/channel/noise seeds across powers.
ExperimentReport run_range_error(const ExperimentConfig& config);

/// Phase II Monte Carlo: midpoint and Gaussian range models side by side; an
/// error event is a matched estimate farther than error_radius from its target.
ExperimentReport run_localization_error(const ExperimentConfig& config);

/// Ghost checks: theorem1 (M = 2K+1), theorem2 (fixed M, K sweep), lemma1
/// (constructed symmetric geometry, then perturbed). Any detected ghost in the
/// theorem kinds fails the report and serializes the offending scenario.
ExperimentReport run_theorem_checks(const ExperimentConfig& config);

/// Dispatch on config.kind.
ExperimentReport run_experiment(const ExperimentConfig& config);

/// CSV: k,series,error_prob,ci_low,ci_high,errors,total,trials,degenerate.
void write_report_csv(const ExperimentReport& report, const std::string& path);

/// Plot data CSV: series,x,y (x = K, y = error probability).
void write_plot_data_csv(const ExperimentReport& report, const std::string& path);

/// ISAC_WORKERS env var when set to a positive integer, else 1.
int default_worker_count();

} // namespace isac
