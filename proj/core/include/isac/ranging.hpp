#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "isac/ofdm.hpp"
#include "isac/scenario.hpp"

namespace isac {

/// Per-BS multiset of estimated ranges, addressable by rank g (1-based,
/// D(1) = largest). Ties break by source tap index ascending.
struct RangeSet {
    std::vector<double> ranges;    // descending
    std::vector<int> source_taps;  // aligned with ranges; -1 for external data

    static RangeSet from_values(std::vector<double> values);

    int size() const { return static_cast<int>(ranges.size()); }
    bool empty() const { return ranges.empty(); }

    /// g-th largest range, g in 1..K.
    double at(int rank) const { return ranges.at(static_cast<std::size_t>(rank - 1)); }
};

struct LassoParams {
    double lambda = -1.0; // < 0: universal threshold from estimated noise level
    double tol = 1e-8;    // relative objective change and scaled KKT residual
    int max_iter = 5000;
    bool record_trace = false;
};

struct LassoResult {
    Eigen::VectorXcd h;
    int iterations = 0;
    double kkt_residual = 0.0; // scaled; see kkt check in ranging.cpp
    double objective = 0.0;
    double lambda = 0.0;       // the value actually used
    bool converged = false;
    std::vector<double> trace; // per-iteration objective when requested
};

/// Minimizes 0.5 ||y~ - A h||^2 + lambda ||h||_1 with A = sqrt(p) diag(s~) G~,
/// by monotone FISTA with complex soft-thresholding. Non-convergence is
/// reported through the result, not thrown.
LassoResult lasso_estimate(const Observation& obs, const LassoParams& params = {});

/// Closed-form lambda = 0 estimator (A^H A)^{-1} A^H y~ for the overdetermined case.
Eigen::VectorXcd least_squares_estimate(const Observation& obs);

/// Residual-based noise scale: per-component std of y~ after a least-squares fit.
double estimate_noise_sigma(const Observation& obs);

/// Universal threshold in correlation units: sigma_z sqrt(p |N_m|) sqrt(2 ln L).
double universal_lambda(const Observation& obs, double sigma_z);

struct SupportRule {
    double tau_abs = 0.0;
    double rho = 0.0; // relative to max |h|; both zero keeps every non-zero tap
};

/// Tap indices (1-based) with |h_l| > max(tau_abs, rho * max |h|).
std::vector<int> detect_support(const Eigen::VectorXcd& h, const SupportRule& rule = {});

/// Midpoint of the range bin of tap l: (l-1) c0/(2 N df) + c0/(4 N df).
double range_midpoint(int l, const OfdmParams& params);

/// One range per supported tap, rank-ordered descending.
RangeSet extract_range_set(const std::vector<int>& support, const OfdmParams& params);

/// CSV interchange (bs_id, rank, range_m) so Phase II can run on external ranges.
void write_range_sets_csv(const std::vector<RangeSet>& sets, const std::string& path);
std::vector<RangeSet> read_range_sets_csv(const std::string& path);

} // namespace isac
