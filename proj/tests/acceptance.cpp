// Acceptance gate: one check per shipped claim, each printing a single
// "criterion N: PASS/FAIL" line. Run all or select one with --criterion N.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "isac/association.hpp"
#include "isac/harness.hpp"
#include "isac/localization.hpp"
#include "isac/ofdm.hpp"
#include "isac/ranging.hpp"
#include "isac/rng.hpp"

using namespace isac;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::vector<RangeSet> perfect_sets(const Scenario& s) {
    return perfect_range_sets(s);
}

bool solution_matches(const GhostSolution& sol, std::vector<Point> expected,
                      double eps = 1e-6) {
    if (sol.coords.size() != expected.size()) return false;
    for (Point p : sol.coords) {
        auto hit = std::find_if(expected.begin(), expected.end(), [&](Point q) {
            return distance(p, q) < eps;
        });
        if (hit == expected.end()) return false;
        expected.erase(hit);
    }
    return true;
}

Scenario example_scenario(std::vector<Point> targets) {
    Scenario s;
    s.region_side = 20.0;
    s.bs = {{0.0, 3.0}, {5.0, 0.0}, {0.0, -4.0}};
    s.targets = std::move(targets);
    return s;
}

Outcome criterion1() {
    const Scenario s = example_scenario({{2.0, -2.0}, {-2.0, 2.0}});
    const GhostReport report = detect_ghosts(perfect_sets(s), s.bs);
    if (report.tau != 2)
        return {false, "tau=" + std::to_string(report.tau) + ", expected 2"};
    bool truth = false, ghost = false;
    for (const auto& sol : report.solutions) {
        truth = truth || solution_matches(sol, {{2.0, -2.0}, {-2.0, 2.0}});
        ghost = ghost || solution_matches(sol, {{-2.0, -2.0}, {2.0, 2.0}});
    }
    if (!truth) return {false, "true solution set missing"};
    if (!ghost) return {false, "ghost solution set missing"};
    return {true, "tau=2 with both solution sets within 1e-6 m"};
}

Outcome criterion2() {
    const Scenario s = example_scenario({{-1.0, 2.0}, {2.0, -1.0}});
    const GhostReport report = detect_ghosts(perfect_sets(s), s.bs);
    if (report.tau != 1)
        return {false, "tau=" + std::to_string(report.tau) + ", expected 1"};
    return {true, "tau=1, unique solution"};
}

Outcome theorem_outcome(const ExperimentReport& report) {
    long ghosts = 0;
    long trials = 0;
    for (const auto& row : report.rows) {
        ghosts += row.errors;
        trials += row.trials;
    }
    if (!report.passed || ghosts != 0)
        return {false, std::to_string(ghosts) + " ghost detections in " +
                           std::to_string(trials) + " trials; " + report.failure_detail};
    return {true, "zero ghosts in " + std::to_string(trials) + " trials"};
}

Outcome criterion3() {
    ExperimentConfig c;
    c.kind = ExperimentKind::Theorem1;
    c.trials = 10000;
    c.seed = 1;
    c.region_side = 200.0;
    c.k_values = {2}; // M = 2K+1 = 5
    return theorem_outcome(run_experiment(c));
}

Outcome criterion4() {
    ExperimentConfig c;
    c.kind = ExperimentKind::Theorem2;
    c.trials = 10000;
    c.seed = 1;
    c.region_side = 200.0;
    c.num_bs = 4;
    c.k_values = {2, 3, 4, 5};
    return theorem_outcome(run_experiment(c));
}

Outcome criterion5() {
    ExperimentConfig c;
    c.kind = ExperimentKind::Lemma1;
    c.trials = 1;
    const ExperimentReport report = run_experiment(c);
    if (report.rows.size() != 2) return {false, "unexpected report shape"};
    if (report.rows[0].errors != 1)
        return {false, "no ghost in the symmetric geometry"};
    if (report.rows[1].errors != 0)
        return {false, "ghost survived the 0.1 m perturbation"};
    return {true, "symmetric geometry ghosts, perturbed geometry does not"};
}

Outcome criterion6() {
    ExperimentConfig c;
    c.kind = ExperimentKind::RangeError;
    c.trials = 100;
    c.seed = 1;
    c.region_side = 200.0;
    c.num_bs = 4;
    c.k_values = {2, 3, 4, 5, 6, 7, 8};
    c.tx_powers = {6.0};
    c.noiseless = true;
    const ExperimentReport report = run_experiment(c);
    long errors = 0, trials = 0;
    for (const auto& row : report.rows) {
        errors += row.errors;
        trials += row.trials;
    }
    if (errors != 0)
        return {false, std::to_string(errors) + " support errors in " +
                           std::to_string(trials) + " noiseless trials"};
    return {true, "exact support in all " + std::to_string(trials) + " trials"};
}

Outcome criterion7() {
    ExperimentConfig c;
    c.kind = ExperimentKind::RangeError;
    c.trials = 1000;
    c.seed = 1;
    c.region_side = 200.0;
    c.num_bs = 4;
    c.k_values = {2, 3, 4, 5, 6, 7, 8};
    c.tx_powers = {6.0, 8.0};
    const ExperimentReport report = run_experiment(c);

    std::ostringstream detail;
    for (int k : c.k_values) {
        double p6 = -1.0, p8 = -1.0;
        for (const auto& row : report.rows) {
            if (row.k != k) continue;
            if (row.series == "p=6") p6 = row.error_prob;
            if (row.series == "p=8") p8 = row.error_prob;
        }
        if (p6 < 0.0 || p8 < 0.0) return {false, "missing series for K"};
        detail << " K=" << k << ": " << p6 << "/" << p8;
        if (p8 > p6)
            return {false, "error probability increased with power at K=" +
                               std::to_string(k) + " (" + std::to_string(p6) + " -> " +
                               std::to_string(p8) + ")"};
        if (k == 4 && p8 >= 0.05)
            return {false, "error probability " + std::to_string(p8) +
                               " at p=8W, K=4 exceeds 0.05"};
    }
    return {true, "monotone in power for every K, K=4 within bound;" + detail.str()};
}

Outcome localization_outcome(const ExperimentConfig& c, double bound) {
    const ExperimentReport report = run_experiment(c);
    for (const auto& row : report.rows) {
        if (row.series != "midpoint") continue;
        std::ostringstream detail;
        detail << "midpoint error probability " << row.error_prob << " ("
               << row.errors << "/" << row.total << ")";
        if (row.error_prob >= bound)
            return {false, detail.str() + " exceeds " + std::to_string(bound)};
        return {true, detail.str()};
    }
    return {false, "midpoint series missing"};
}

Outcome criterion8() {
    ExperimentConfig c;
    c.trials = 1000;
    c.seed = 1;
    c.region_side = 240.0;
    c.num_bs = 4;
    c.k_values = {7};
    c.error_radius = 2.5;
    c.ofdm.n_subcarriers = 3300;    // B = 99 MHz, Delta d = 0.7576 m
    c.ofdm.subcarrier_spacing = 30e3;
    c.ofdm.cp_length = 240;
    c.ofdm.max_paths = 230;         // 240 m square: farthest round trip is tap 225
    return localization_outcome(c, 0.05);
}

Outcome criterion9() {
    ExperimentConfig c;
    c.trials = 1000;
    c.seed = 1;
    c.region_side = 80.0;
    c.num_bs = 4;
    c.k_values = {7};
    c.error_radius = 1.0;
    c.ofdm.n_subcarriers = 4000;    // B = 400 MHz, Delta d = 0.1875 m
    c.ofdm.subcarrier_spacing = 100e3;
    c.ofdm.cp_length = 320;
    c.ofdm.max_paths = 310;         // 80 m square: farthest round trip is tap 302
    return localization_outcome(c, 0.05);
}

Outcome criterion10() {
    const int trials = 200;
    const Eigen::MatrixXd sigma = uniform_sigma(4, 3, 0.45);
    const double delta0 = default_delta0(0.0, sigma);
    const std::vector<Point> bs = default_bs_placement(4, 100.0);
    int assoc_match = 0;
    for (int trial = 0; trial < trials; ++trial) {
        const std::uint64_t trial_seed = derive_seed(10, static_cast<std::uint64_t>(trial));
        auto rng = make_rng(trial_seed, 0);
        const Scenario scenario = sample_scenario(bs, 3, 100.0, 3.0, rng);
        auto noise_rng = make_rng(trial_seed, 1);
        const auto sets = sample_noisy_ranges(scenario, sigma, noise_rng);

        LocalizationResult fast;
        try {
            fast = ml_localize(sets, bs, sigma, delta0);
        } catch (const EmptyFeasibleSet&) {
            fast = ml_localize(sets, bs, sigma, 4.0 * delta0);
        }
        const LocalizationResult oracle = exhaustive_ml_oracle(sets, bs, sigma);
        if (fast.objective < oracle.objective - 1e-9)
            return {false, "trial " + std::to_string(trial) + ": objective " +
                               std::to_string(fast.objective) + " below oracle " +
                               std::to_string(oracle.objective)};
        if (fast.association.g == oracle.association.g) ++assoc_match;
    }
    std::ostringstream detail;
    detail << "objective never below the oracle; identical association in "
           << assoc_match << "/" << trials << " trials";
    if (assoc_match < 190) return {false, detail.str() + " (< 95%)"};
    return {true, detail.str()};
}

Outcome criterion11() {
    // DFT unitarity
    for (int n : {16, 64, 256}) {
        const Eigen::MatrixXcd w = dft_matrix(n);
        const double dev =
            (w * w.adjoint() - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff();
        if (dev >= 1e-10)
            return {false, "DFT unitarity deviation " + std::to_string(dev)};
    }

    // analytic gradient vs central differences
    {
        const std::vector<Point> anchors{{-3.0, 1.0}, {4.0, -2.0}, {0.5, 5.0}, {-1.0, -4.0}};
        const std::vector<double> ranges{5.2, 3.9, 6.1, 2.8};
        const std::vector<double> weights{1.0, 2.5, 0.7, 4.0};
        auto rng = make_rng(2026);
        std::uniform_real_distribution<double> coord(-6.0, 6.0);
        const double step = 1e-6;
        for (int i = 0; i < 200; ++i) {
            const Point p{coord(rng), coord(rng)};
            const Eigen::Vector2d grad = localization_gradient(anchors, ranges, weights, p);
            Eigen::Vector2d fd;
            fd(0) = (localization_objective(anchors, ranges, weights, {p.x + step, p.y}) -
                     localization_objective(anchors, ranges, weights, {p.x - step, p.y})) /
                    (2.0 * step);
            fd(1) = (localization_objective(anchors, ranges, weights, {p.x, p.y + step}) -
                     localization_objective(anchors, ranges, weights, {p.x, p.y - step})) /
                    (2.0 * step);
            const double rel = (grad - fd).norm() / std::max(1.0, fd.norm());
            if (rel >= 1e-5)
                return {false, "gradient mismatch " + std::to_string(rel)};
        }
    }

    // Hungarian vs brute force
    {
        auto rng = make_rng(11);
        std::uniform_real_distribution<double> entry(0.0, 10.0);
        for (int trial = 0; trial < 100; ++trial) {
            const int n = 2 + static_cast<int>(rng() % 5);
            Eigen::MatrixXd cost(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) cost(i, j) = entry(rng);

            std::vector<int> perm(static_cast<std::size_t>(n));
            std::iota(perm.begin(), perm.end(), 0);
            double brute = std::numeric_limits<double>::infinity();
            do {
                double c = 0.0;
                for (int i = 0; i < n; ++i) c += cost(i, perm[static_cast<std::size_t>(i)]);
                brute = std::min(brute, c);
            } while (std::next_permutation(perm.begin(), perm.end()));

            const HungarianResult res = hungarian_assign(cost);
            if (std::abs(res.cost - brute) > 1e-9)
                return {false, "assignment cost " + std::to_string(res.cost) +
                                   " vs brute force " + std::to_string(brute)};
        }
    }

    // LASSO KKT residual at return
    {
        OfdmParams p;
        p.n_subcarriers = 256;
        p.subcarrier_spacing = 120e3;
        p.cp_length = 40;
        p.max_paths = 32;
        p.tx_power = 2.0;
        p.noise_power = 0.02;
        auto rng = make_rng(404);
        p.allocation = make_random_allocation(p.n_subcarriers, 3, rng);
        std::vector<OfdmSymbol> symbols;
        for (int m = 0; m < 3; ++m) symbols.push_back(make_symbol(p, m, rng));
        std::vector<std::vector<TapVector>> taps(
            3, std::vector<TapVector>(3, TapVector::Zero(p.max_paths)));
        taps[0][0](4) = {0.9, 0.1};
        taps[0][0](19) = {-0.2, 0.6};
        const auto received = transmit_through_channel(symbols, taps, p, rng);
        const Observation obs = demodulate(received[0], symbols[0], p, 0);
        LassoParams lp;
        lp.lambda = 1.5;
        const LassoResult res = lasso_estimate(obs, lp);
        if (!res.converged || res.kkt_residual > lp.tol)
            return {false, "KKT residual " + std::to_string(res.kkt_residual) +
                               " above tol"};
    }
    return {true, "unitarity, gradient, assignment, and KKT checks all inside tolerance"};
}

struct Criterion {
    int id;
    Outcome (*run)();
    double time_limit_s;
};

const Criterion kCriteria[] = {
    {1, criterion1, 1.0},       {2, criterion2, 1.0},    {3, criterion3, 300.0},
    {4, criterion4, 1800.0},    {5, criterion5, 1.0},    {6, criterion6, 1800.0},
    {7, criterion7, 1800.0},    {8, criterion8, 1200.0}, {9, criterion9, 1200.0},
    {10, criterion10, 1800.0},  {11, criterion11, 60.0},
};

} // namespace

int main(int argc, char** argv) {
    int selected = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
            selected = std::atoi(argv[++i]);
        } else {
            std::cerr << "usage: " << argv[0] << " [--criterion N]\n";
            return 2;
        }
    }

    int failures = 0;
    for (const Criterion& c : kCriteria) {
        if (selected != 0 && c.id != selected) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = c.run();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (outcome.pass && elapsed > c.time_limit_s) {
            outcome.pass = false;
            outcome.detail += " [exceeded " + std::to_string(c.time_limit_s) + " s budget]";
        }
        std::ostringstream line;
        line.precision(4);
        line << "criterion " << c.id << ": " << (outcome.pass ? "PASS" : "FAIL") << " - "
             << outcome.detail << " [" << std::fixed << elapsed << " s]";
        std::cout << line.str() << std::endl;
        if (!outcome.pass) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
