#include <benchmark/benchmark.h>

#include "isac/association.hpp"
#include "isac/localization.hpp"
#include "isac/ofdm.hpp"
#include "isac/ranging.hpp"
#include "isac/rng.hpp"

using namespace isac;

namespace {

OfdmParams bench_ofdm(int num_bs) {
    OfdmParams p;
    p.n_subcarriers = 3300;
    p.subcarrier_spacing = 30e3;
    p.cp_length = 232;
    p.max_paths = 200;
    p.tx_power = 6.0;
    p.noise_power = thermal_noise_power(3300 * 30e3);
    p.allocation = make_contiguous_allocation(p.n_subcarriers, num_bs);
    return p;
}

Scenario bench_scenario(int num_targets, double side, std::mt19937_64& rng) {
    Scenario s;
    s.region_side = side;
    std::uniform_real_distribution<double> coord(-side / 2.0, side / 2.0);
    s.bs = {{-side / 3.0, -side / 3.0},
            {side / 3.0, -side / 4.0},
            {side / 4.0, side / 3.0},
            {-side / 3.0, side / 4.0}};
    for (int k = 0; k < num_targets; ++k)
        s.targets.push_back({coord(rng), coord(rng)});
    return s;
}

Observation bench_observation(int num_targets) {
    auto rng = make_rng(77);
    const OfdmParams p = bench_ofdm(4);
    Scenario s;
    for (int attempt = 0;; ++attempt) {
        s = bench_scenario(num_targets, 200.0, rng);
        try {
            s.validate();
            build_ground_truth_taps(s, p, GainConfig{}, rng);
            break;
        } catch (const Error&) {
            continue;
        }
    }
    const auto taps = build_pair_taps(s, p, GainConfig{}, rng);
    std::vector<OfdmSymbol> symbols;
    for (int m = 0; m < 4; ++m) symbols.push_back(make_symbol(p, m, rng));
    const auto received = transmit_through_channel(symbols, taps, p, rng);
    return demodulate(received[0], symbols[0], p, 0);
}

void bm_lasso(benchmark::State& state) {
    const Observation obs = bench_observation(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        const LassoResult res = lasso_estimate(obs);
        benchmark::DoNotOptimize(res.h.data());
    }
}

void bm_ghost_detection(benchmark::State& state) {
    auto rng = make_rng(5);
    Scenario s;
    do {
        s = bench_scenario(static_cast<int>(state.range(0)), 200.0, rng);
    } while ([&] {
        try {
            s.validate();
            return false;
        } catch (const Error&) {
            return true;
        }
    }());
    const auto sets = perfect_range_sets(s);
    for (auto _ : state) {
        const GhostReport report = detect_ghosts(sets, s.bs);
        benchmark::DoNotOptimize(report.tau);
    }
}

void bm_gauss_newton(benchmark::State& state) {
    const std::vector<Point> anchors{{-80.0, -70.0}, {90.0, -60.0}, {20.0, 85.0}, {-60.0, 75.0}};
    const Point truth{12.0, -23.0};
    std::vector<double> ranges;
    for (Point a : anchors) ranges.push_back(distance(a, truth) + 0.3);
    const std::vector<double> weights(4, 1.0 / (0.45 * 0.45));
    for (auto _ : state) {
        const GnResult res =
            gauss_newton_localize(anchors, ranges, weights, {0.0, 0.0});
        benchmark::DoNotOptimize(res.objective);
    }
}

void bm_ml_localize(benchmark::State& state) {
    auto rng = make_rng(9);
    const int k = static_cast<int>(state.range(0));
    Scenario s;
    do {
        s = bench_scenario(k, 200.0, rng);
    } while ([&] {
        try {
            s.validate();
            return false;
        } catch (const Error&) {
            return true;
        }
    }());
    const Eigen::MatrixXd sigma = uniform_sigma(4, k, 0.45);
    auto noise_rng = make_rng(10);
    const auto sets = sample_noisy_ranges(s, sigma, noise_rng);
    const double delta0 = default_delta0(0.0, sigma);
    for (auto _ : state) {
        try {
            const LocalizationResult res = ml_localize(sets, s.bs, sigma, delta0);
            benchmark::DoNotOptimize(res.objective);
        } catch (const EmptyFeasibleSet&) {
            state.SkipWithError("empty feasible set");
            break;
        }
    }
}

} // namespace

BENCHMARK(bm_lasso)->Arg(2)->Arg(5)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_ghost_detection)->Arg(2)->Arg(3)->Arg(4)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_gauss_newton)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_ml_localize)->Arg(3)->Arg(5)->Arg(7)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
