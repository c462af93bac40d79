#pragma once

#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "isac/errors.hpp"
#include "isac/geometry.hpp"

namespace isac {

/// Propagation speed used throughout the range/delay grid (m/s).
constexpr double kSpeedOfLight = 3.0e8;

constexpr double kDefaultCollinearEps = 1e-6;

/// BS and target placement with ground-truth geometry.
struct Scenario {
    std::vector<Point> bs;      // (a_m, b_m)
    std::vector<Point> targets; // (x_k, y_k)
    double region_side = 200.0; // axis-aligned square, meters

    int num_bs() const { return static_cast<int>(bs.size()); }
    int num_targets() const { return static_cast<int>(targets.size()); }

    double bs_target_distance(int m, int k) const { return distance(bs[m], targets[k]); }
    double bs_pair_distance(int m, int u) const { return distance(bs[m], bs[u]); }

    /// M >= 3, K >= 1, no three BSs collinear, all coordinates inside the region.
    void validate(double eps_collinear = kDefaultCollinearEps) const;
};

/// OFDM numerology plus per-BS sub-carrier allocation (0-based indices, sorted).
struct OfdmParams {
    int n_subcarriers = 3300;         // N
    double subcarrier_spacing = 30e3; // Delta f, Hz
    int cp_length = 232;              // Q
    int max_paths = 200;              // L, L < Q
    double tx_power = 6.0;            // p, watts
    double noise_power = 0.0;         // sigma_z^2, watts (per complex sample)
    std::vector<std::vector<int>> allocation; // N_m per BS

    double bandwidth() const { return n_subcarriers * subcarrier_spacing; }
    /// Width of one delay tap in range units: c0 / (2 N df).
    double tap_width() const { return kSpeedOfLight / (2.0 * bandwidth()); }
    /// Worst-case range quantization error Delta d = c0 / (4 N df).
    double range_resolution() const { return kSpeedOfLight / (4.0 * bandwidth()); }

    /// L < Q < N, allocations pairwise disjoint and in range.
    void validate() const;
};

/// Thermal noise floor (-174 dBm/Hz) plus noise figure, integrated over bandwidth B.
double thermal_noise_power(double bandwidth_hz, double noise_figure_db = 9.0);

/// Tap index l such that (l-1)*c0/(2 N df) < d <= l*c0/(2 N df).
/// The right boundary is inclusive. Throws TapOutOfRange for l > L.
int delay_tap(double d, const OfdmParams& params);

using TapVector = Eigen::VectorXcd;

enum class GainModel {
    RadarEquation,  // |h| = beta / d^2  (two-way free space, power ~ 1/d^4)
    FixedAmplitude, // |h| = fixed_amplitude, for controlled-SNR tests
};

struct GainConfig {
    GainModel model = GainModel::RadarEquation;
    double beta = 0.02;           // reflection amplitude at 1 m
    double fixed_amplitude = 1.0;
};

/// Amplitude |h| of a two-way path with legs d_tx and d_rx.
double path_amplitude(const GainConfig& gain, double d_tx, double d_rx);

/// Ground-truth monostatic channels h_{m,m}: one non-zero tap per target,
/// uniform random phase. Throws ResolvabilityViolation if two targets of one
/// BS share a tap.
std::vector<TapVector> build_ground_truth_taps(const Scenario& scenario,
                                               const OfdmParams& params,
                                               const GainConfig& gain,
                                               std::mt19937_64& rng);

/// Full M x M channel matrix including bistatic cross paths (BS u -> target -> BS m).
/// taps[u][m] is h_{u,m}. Cross-path delay quantizes the one-way path sum.
std::vector<std::vector<TapVector>> build_pair_taps(const Scenario& scenario,
                                                    const OfdmParams& params,
                                                    const GainConfig& gain,
                                                    std::mt19937_64& rng);

} // namespace isac
