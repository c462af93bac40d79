#pragma once

#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "isac/association.hpp"
#include "isac/ranging.hpp"
#include "isac/scenario.hpp"

namespace isac {

struct GaussNewtonParams {
    double tol = 1e-9;      // gradient-norm stopping threshold
    int max_iter = 100;
    int max_backtracks = 30;
};

struct GnResult {
    Point p;
    double objective = 0.0; // sum_m (d_m - ||p - a_m||)^2 / sigma_m^2
    double grad_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// sum_m w_m (d_m - ||p - a_m||)^2.
double localization_objective(std::span<const Point> anchors,
                              std::span<const double> ranges,
                              std::span<const double> weights, Point p);

/// Analytic gradient of localization_objective with respect to p.
Eigen::Vector2d localization_gradient(std::span<const Point> anchors,
                                      std::span<const double> ranges,
                                      std::span<const double> weights, Point p);

/// Damped Gauss-Newton on the weighted range residuals. weights are 1/sigma^2.
/// An iterate that lands on an anchor is perturbed and iteration continues.
GnResult gauss_newton_localize(std::span<const Point> anchors,
                               std::span<const double> ranges,
                               std::span<const double> weights, Point init,
                               const GaussNewtonParams& params = {});

/// Closed-form initializer: least-squares solution of the linear system from
/// differencing squared range equations against the first anchor.
/// Exact for consistent (noiseless) ranges. Throws CollinearAnchors.
Point linear_init(std::span<const Point> anchors, std::span<const double> ranges);

struct HungarianResult {
    std::vector<int> assignment; // row k -> column assignment[k], 0-based
    double cost = 0.0;
};

/// Minimum-cost one-to-one assignment (shortest augmenting path, O(n^3)).
HungarianResult hungarian_assign(const Eigen::MatrixXd& cost);

struct LocalizationResult {
    std::vector<Point> coords;                // one per target
    Association association;                  // M x K rank matrix
    double objective = 0.0;                   // summed weighted squared residual
    std::vector<double> per_target_residuals; // per-target objective contribution
};

/// M x K matrix of a single sigma value.
Eigen::MatrixXd uniform_sigma(int num_bs, int num_targets, double sigma);

/// sigma bridging a tap-midpoint range error uniform on [-dd, dd]: dd/sqrt(3).
double midpoint_sigma(const OfdmParams& params);

/// Default pruning margin 2*dd + 6*max sigma.
double default_delta0(double range_resolution, const Eigen::MatrixXd& sigma);

/// Gaussian range model d~ = d + N(0, sigma^2), rank-sorted per BS. Negative
/// draws clamp to zero; *clamped reports whether any clamp occurred.
std::vector<RangeSet> sample_noisy_ranges(const Scenario& scenario,
                                          const Eigen::MatrixXd& sigma,
                                          std::mt19937_64& rng,
                                          bool* clamped = nullptr);

/// Exact range sets D_m from the true geometry, rank-sorted.
std::vector<RangeSet> perfect_range_sets(const Scenario& scenario);

/// Tap-midpoint range sets: quantize every distance to its bin midpoint.
std::vector<RangeSet> midpoint_range_sets(const Scenario& scenario,
                                          const OfdmParams& params);

/// Joint data association + localization: enumerate the pruned 3-BS
/// association set, localize with BSs 1..3, extend to the remaining BSs by
/// per-BS assignment on range mismatch costs, re-localize with all M BSs, and
/// return the candidate with the smallest overall weighted cost. Candidates
/// are visited in increasing order of their 3-BS cost lower bound, which also
/// decides ties.
/// Throws EmptyFeasibleSet when the pruned set is empty.
LocalizationResult ml_localize(const std::vector<RangeSet>& range_sets,
                               const std::vector<Point>& bs_coords,
                               const Eigen::MatrixXd& sigma, double delta0,
                               const GaussNewtonParams& gn = {});

/// Globally minimal objective over all (K!)^(M-1) associations; each candidate
/// localized per target. Complexity-guarded to K <= 4, M <= 5.
LocalizationResult exhaustive_ml_oracle(const std::vector<RangeSet>& range_sets,
                                        const std::vector<Point>& bs_coords,
                                        const Eigen::MatrixXd& sigma,
                                        const GaussNewtonParams& gn = {});

/// Objective recomputed from coords + association (consistency check).
double recompute_objective(const LocalizationResult& result,
                           const std::vector<RangeSet>& range_sets,
                           const std::vector<Point>& bs_coords,
                           const Eigen::MatrixXd& sigma);

} // namespace isac
