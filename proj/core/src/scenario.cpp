#include "isac/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace isac {

void Scenario::validate(double eps_collinear) const
{
    const int m = num_bs();
    const int k = num_targets();
    if (m < 3)
        throw ScenarioError("scenario requires M >= 3 BSs, got " + std::to_string(m));
    if (k < 1)
        throw ScenarioError("scenario requires K >= 1 targets, got " + std::to_string(k));

    const double half = region_side / 2.0;
    auto inside = [&](const Point& p) {
        return std::isfinite(p.x) && std::isfinite(p.y) &&
               std::abs(p.x) <= half + 1e-9 && std::abs(p.y) <= half + 1e-9;
    };
    for (const Point& p : bs)
        if (!inside(p))
            throw ScenarioError("BS coordinate outside region");
    for (const Point& p : targets)
        if (!inside(p))
            throw ScenarioError("target coordinate outside region");

    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j)
            for (int l = j + 1; l < m; ++l)
                if (collinear(bs[i], bs[j], bs[l], eps_collinear))
                    throw ScenarioError("BSs " + std::to_string(i + 1) + "," +
                                        std::to_string(j + 1) + "," + std::to_string(l + 1) +
                                        " are collinear");
}

void OfdmParams::validate() const
{
    if (n_subcarriers < 1)
        throw ConfigError("N must be >= 1");
    if (!(max_paths < cp_length))
        throw ConfigError("L must be < Q");
    if (!(cp_length < n_subcarriers))
        throw ConfigError("Q must be < N");
    if (subcarrier_spacing <= 0.0)
        throw ConfigError("sub-carrier spacing must be positive");
    if (tx_power <= 0.0)
        throw ConfigError("transmit power must be positive");
    if (noise_power < 0.0)
        throw ConfigError("noise power must be non-negative");

    std::set<int> seen;
    std::size_t total = 0;
    for (const auto& alloc : allocation) {
        total += alloc.size();
        for (int n : alloc) {
            if (n < 0 || n >= n_subcarriers)
                throw ConfigError("sub-carrier index out of range");
            if (!seen.insert(n).second)
                throw ConfigError("sub-carrier allocations overlap");
        }
    }
    if (total > static_cast<std::size_t>(n_subcarriers))
        throw ConfigError("allocations exceed N sub-carriers");
}

double thermal_noise_power(double bandwidth_hz, double noise_figure_db)
{
    const double dbm = -174.0 + noise_figure_db + 10.0 * std::log10(bandwidth_hz);
    return std::pow(10.0, dbm / 10.0) * 1e-3;
}

namespace {

// Quantize a one-way path-length sum (tx leg + rx leg) to a tap index.
int path_tap(double path_sum, const OfdmParams& params)
{
    const double x = path_sum * params.bandwidth() / kSpeedOfLight;
    int l = static_cast<int>(std::ceil(x - 1e-12));
    if (l < 1)
        l = 1;
    if (l > params.max_paths)
        throw TapOutOfRange("path of " + std::to_string(path_sum) + " m maps to tap " +
                            std::to_string(l) + " > L = " + std::to_string(params.max_paths));
    return l;
}

std::complex<double> random_phase_gain(double amplitude, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
    return std::polar(amplitude, phase(rng));
}

} // namespace

int delay_tap(double d, const OfdmParams& params)
{
    if (!(d > 0.0))
        throw ScenarioError("delay_tap requires d > 0");
    return path_tap(2.0 * d, params);
}

double path_amplitude(const GainConfig& gain, double d_tx, double d_rx)
{
    switch (gain.model) {
    case GainModel::FixedAmplitude:
        return gain.fixed_amplitude;
    case GainModel::RadarEquation:
    default:
        return gain.beta / (d_tx * d_rx);
    }
}

std::vector<TapVector> build_ground_truth_taps(const Scenario& scenario,
                                               const OfdmParams& params,
                                               const GainConfig& gain,
                                               std::mt19937_64& rng)
{
    const int m_count = scenario.num_bs();
    const int k_count = scenario.num_targets();
    std::vector<TapVector> taps(m_count, TapVector::Zero(params.max_paths));
    for (int m = 0; m < m_count; ++m) {
        for (int k = 0; k < k_count; ++k) {
            const double d = scenario.bs_target_distance(m, k);
            const int l = delay_tap(d, params);
            if (taps[m](l - 1) != std::complex<double>(0.0, 0.0))
                throw ResolvabilityViolation("two targets of BS " + std::to_string(m + 1) +
                                             " share tap " + std::to_string(l));
            taps[m](l - 1) = random_phase_gain(path_amplitude(gain, d, d), rng);
        }
    }
    return taps;
}

std::vector<std::vector<TapVector>> build_pair_taps(const Scenario& scenario,
                                                    const OfdmParams& params,
                                                    const GainConfig& gain,
                                                    std::mt19937_64& rng)
{
    const int m_count = scenario.num_bs();
    const int k_count = scenario.num_targets();
    std::vector<std::vector<TapVector>> taps(
        m_count, std::vector<TapVector>(m_count, TapVector::Zero(params.max_paths)));
    for (int u = 0; u < m_count; ++u) {
        for (int m = 0; m < m_count; ++m) {
            for (int k = 0; k < k_count; ++k) {
                const double d_tx = scenario.bs_target_distance(u, k);
                const double d_rx = scenario.bs_target_distance(m, k);
                const int l = path_tap(d_tx + d_rx, params);
                if (u == m && taps[u][m](l - 1) != std::complex<double>(0.0, 0.0))
                    throw ResolvabilityViolation("two targets of BS " + std::to_string(m + 1) +
                                                 " share tap " + std::to_string(l));
                taps[u][m](l - 1) += random_phase_gain(path_amplitude(gain, d_tx, d_rx), rng);
            }
        }
    }
    return taps;
}

} // namespace isac
