#include "isac/localization.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "isac/errors.hpp"

namespace isac {

namespace {

double range_objective(std::span<const Point> anchors,
                       std::span<const double> ranges,
                       std::span<const double> weights, Point p) {
    double obj = 0.0;
    for (std::size_t m = 0; m < anchors.size(); ++m) {
        const double r = ranges[m] - distance(p, anchors[m]);
        obj += weights[m] * r * r;
    }
    return obj;
}

} // namespace

double localization_objective(std::span<const Point> anchors,
                              std::span<const double> ranges,
                              std::span<const double> weights, Point p) {
    return range_objective(anchors, ranges, weights, p);
}

Eigen::Vector2d localization_gradient(std::span<const Point> anchors,
                                      std::span<const double> ranges,
                                      std::span<const double> weights, Point p) {
    Eigen::Vector2d grad = Eigen::Vector2d::Zero();
    for (std::size_t m = 0; m < anchors.size(); ++m) {
        const double rho = distance(p, anchors[m]);
        const Eigen::Vector2d u((p.x - anchors[m].x) / rho, (p.y - anchors[m].y) / rho);
        grad += -2.0 * weights[m] * (ranges[m] - rho) * u;
    }
    return grad;
}

GnResult gauss_newton_localize(std::span<const Point> anchors,
                               std::span<const double> ranges,
                               std::span<const double> weights, Point init,
                               const GaussNewtonParams& params) {
    const std::size_t m_count = anchors.size();
    if (m_count < 3 || ranges.size() != m_count || weights.size() != m_count) {
        throw ScenarioError("gauss_newton_localize: need >= 3 consistent anchors/ranges/weights");
    }

    GnResult out;
    out.p = init;
    out.objective = range_objective(anchors, ranges, weights, out.p);

    for (int it = 0; it < params.max_iter; ++it) {
        Eigen::Matrix2d jtj = Eigen::Matrix2d::Zero();
        Eigen::Vector2d jtr = Eigen::Vector2d::Zero();
        for (std::size_t m = 0; m < m_count; ++m) {
            double rho = distance(out.p, anchors[m]);
            if (rho < 1e-12) {
                out.p.x += 1e-9;
                out.p.y += 1e-9;
                rho = distance(out.p, anchors[m]);
            }
            const Eigen::Vector2d u((out.p.x - anchors[m].x) / rho,
                                    (out.p.y - anchors[m].y) / rho);
            const double res = ranges[m] - rho; // d(residual)/dp = -u
            jtj += weights[m] * u * u.transpose();
            jtr += weights[m] * (-u) * res;
        }
        out.grad_norm = 2.0 * jtr.norm();
        if (out.grad_norm <= params.tol) {
            out.converged = true;
            break;
        }

        Eigen::Matrix2d reg = jtj;
        if (std::abs(reg.determinant()) < 1e-14 * std::max(1.0, reg.trace() * reg.trace())) {
            reg += 1e-9 * Eigen::Matrix2d::Identity();
        }
        Eigen::Vector2d step = reg.ldlt().solve(-jtr);

        double scale = 1.0;
        bool improved = false;
        for (int bt = 0; bt <= params.max_backtracks; ++bt) {
            const Point trial{out.p.x + scale * step(0), out.p.y + scale * step(1)};
            const double obj = range_objective(anchors, ranges, weights, trial);
            if (obj < out.objective) {
                out.p = trial;
                out.objective = obj;
                improved = true;
                break;
            }
            scale *= 0.5;
        }
        ++out.iterations;
        if (!improved) {
            break; // stuck at a (numerical) stationary point
        }
    }
    if (!out.converged && out.grad_norm <= params.tol) {
        out.converged = true;
    }
    return out;
}

Point linear_init(std::span<const Point> anchors, std::span<const double> ranges) {
    const std::size_t m_count = anchors.size();
    if (m_count < 3 || ranges.size() != m_count) {
        throw ScenarioError("linear_init: need >= 3 anchors with matching ranges");
    }

    Eigen::MatrixXd a(m_count - 1, 2);
    Eigen::VectorXd b(m_count - 1);
    const double n0 = anchors[0].x * anchors[0].x + anchors[0].y * anchors[0].y;
    for (std::size_t m = 1; m < m_count; ++m) {
        a(m - 1, 0) = 2.0 * (anchors[m].x - anchors[0].x);
        a(m - 1, 1) = 2.0 * (anchors[m].y - anchors[0].y);
        const double nm = anchors[m].x * anchors[m].x + anchors[m].y * anchors[m].y;
        b(m - 1) = ranges[0] * ranges[0] - ranges[m] * ranges[m] + nm - n0;
    }

    const Eigen::Matrix2d normal = a.transpose() * a;
    if (std::abs(normal.determinant()) < 1e-9 * std::max(1.0, normal.trace() * normal.trace())) {
        throw CollinearAnchors("linear_init: anchors are collinear");
    }
    const Eigen::Vector2d p = normal.ldlt().solve(a.transpose() * b);
    return {p(0), p(1)};
}

HungarianResult hungarianAssignImpl(const Eigen::MatrixXd& cost) {
    const int n = static_cast<int>(cost.rows());
    // Jonker-Volgenant style shortest augmenting path with 1-based padding.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = std::numeric_limits<double>::infinity();
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    HungarianResult out;
    out.assignment.assign(n, -1);
    for (int j = 1; j <= n; ++j) {
        if (p[j] != 0) out.assignment[p[j] - 1] = j - 1;
    }
    for (int i = 0; i < n; ++i) {
        out.cost += cost(i, out.assignment[i]);
    }
    return out;
}

HungarianResult hungarian_assign(const Eigen::MatrixXd& cost) {
    if (cost.rows() != cost.cols() || cost.rows() == 0) {
        throw ScenarioError("hungarian_assign: cost matrix must be square and non-empty");
    }
    return hungarianAssignImpl(cost);
}

Eigen::MatrixXd uniform_sigma(int num_bs, int num_targets, double sigma) {
    return Eigen::MatrixXd::Constant(num_bs, num_targets, sigma);
}

double midpoint_sigma(const OfdmParams& params) {
    return params.range_resolution() / std::sqrt(3.0);
}

double default_delta0(double range_resolution, const Eigen::MatrixXd& sigma) {
    return 2.0 * range_resolution + 6.0 * sigma.maxCoeff();
}

std::vector<RangeSet> sample_noisy_ranges(const Scenario& scenario,
                                          const Eigen::MatrixXd& sigma,
                                          std::mt19937_64& rng, bool* clamped) {
    const int m_count = static_cast<int>(scenario.bs.size());
    const int k_count = static_cast<int>(scenario.targets.size());
    if (sigma.rows() != m_count || sigma.cols() != k_count) {
        throw ScenarioError("sample_noisy_ranges: sigma must be M x K");
    }
    if (clamped) *clamped = false;

    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<RangeSet> out;
    out.reserve(m_count);
    for (int m = 0; m < m_count; ++m) {
        std::vector<double> values(k_count);
        for (int k = 0; k < k_count; ++k) {
            double d = scenario.bs_target_distance(m, k) + sigma(m, k) * gauss(rng);
            if (d < 0.0) {
                d = 0.0;
                if (clamped) *clamped = true;
            }
            values[k] = d;
        }
        out.push_back(RangeSet::from_values(values));
    }
    return out;
}

std::vector<RangeSet> perfect_range_sets(const Scenario& scenario) {
    std::vector<RangeSet> out;
    out.reserve(scenario.bs.size());
    for (std::size_t m = 0; m < scenario.bs.size(); ++m) {
        std::vector<double> values(scenario.targets.size());
        for (std::size_t k = 0; k < scenario.targets.size(); ++k) {
            values[k] = scenario.bs_target_distance(static_cast<int>(m), static_cast<int>(k));
        }
        out.push_back(RangeSet::from_values(values));
    }
    return out;
}

std::vector<RangeSet> midpoint_range_sets(const Scenario& scenario,
                                          const OfdmParams& params) {
    std::vector<RangeSet> out;
    out.reserve(scenario.bs.size());
    for (std::size_t m = 0; m < scenario.bs.size(); ++m) {
        std::vector<double> values(scenario.targets.size());
        for (std::size_t k = 0; k < scenario.targets.size(); ++k) {
            const double d = scenario.bs_target_distance(static_cast<int>(m), static_cast<int>(k));
            values[k] = range_midpoint(delay_tap(d, params), params);
        }
        out.push_back(RangeSet::from_values(values));
    }
    return out;
}

namespace {

struct Candidate {
    std::vector<Point> coords;
    Association assoc;
    double objective = 0.0;
    std::vector<double> per_target;
};

// Localize every target for a fully specified association, each with all M BSs.
Candidate localize_for_association(const std::vector<std::vector<int>>& g,
                                   const std::vector<RangeSet>& range_sets,
                                   const std::vector<Point>& bs_coords,
                                   const Eigen::MatrixXd& sigma,
                                   const GaussNewtonParams& gn,
                                   const std::vector<Point>* init = nullptr) {
    const int m_count = static_cast<int>(bs_coords.size());
    const int k_count = static_cast<int>(g[0].size());

    Candidate cand;
    cand.assoc.g = g;
    cand.coords.resize(k_count);
    cand.per_target.resize(k_count);
    for (int k = 0; k < k_count; ++k) {
        std::vector<double> ranges(m_count), weights(m_count);
        for (int m = 0; m < m_count; ++m) {
            ranges[m] = range_sets[m].at(g[m][k]);
            weights[m] = 1.0 / (sigma(m, k) * sigma(m, k));
        }
        Point start;
        if (init) {
            start = (*init)[k];
        } else {
            start = linear_init(bs_coords, ranges);
        }
        const GnResult res = gauss_newton_localize(bs_coords, ranges, weights, start, gn);
        cand.coords[k] = res.p;
        cand.per_target[k] = res.objective;
        cand.objective += res.objective;
    }
    return cand;
}

std::vector<int> identity_row(int k_count) {
    std::vector<int> row(k_count);
    std::iota(row.begin(), row.end(), 1);
    return row;
}

} // namespace

LocalizationResult ml_localize(const std::vector<RangeSet>& range_sets,
                               const std::vector<Point>& bs_coords,
                               const Eigen::MatrixXd& sigma, double delta0,
                               const GaussNewtonParams& gn) {
    const int m_count = static_cast<int>(bs_coords.size());
    if (m_count < 3 || range_sets.size() != bs_coords.size()) {
        throw ScenarioError("ml_localize: need >= 3 BSs with matching range sets");
    }
    const int k_count = range_sets[0].size();
    for (const auto& rs : range_sets) {
        if (rs.size() != k_count) {
            throw ScenarioError("ml_localize: range sets must share a common cardinality");
        }
    }
    if (sigma.rows() != m_count || sigma.cols() != k_count) {
        throw ScenarioError("ml_localize: sigma must be M x K");
    }

    const std::vector<RangeSet> front3(range_sets.begin(), range_sets.begin() + 3);
    const std::vector<Point> bs3(bs_coords.begin(), bs_coords.begin() + 3);
    const std::vector<Assoc3> candidates =
        feasible_associations_3bs(front3, bs3, delta0);
    if (candidates.empty()) {
        throw EmptyFeasibleSet("ml_localize: pruned 3-BS association set is empty");
    }

    struct Fix {
        Point p{0.0, 0.0};
        double obj = std::numeric_limits<double>::infinity();
        bool degenerate = false;
    };

    // Stage-1 fixes depend only on (target, rank triple), so each distinct
    // triple is solved once and shared across every candidate that uses it.
    std::map<std::array<int, 4>, Fix> triple_memo;
    auto triple_fix = [&](int k, int g1, int g2, int g3) -> const Fix& {
        const std::array<int, 4> key{k, g1, g2, g3};
        const auto it = triple_memo.find(key);
        if (it != triple_memo.end()) return it->second;
        Fix fix;
        std::array<double, 3> r3{range_sets[0].at(g1), range_sets[1].at(g2),
                                 range_sets[2].at(g3)};
        std::array<double, 3> w3{};
        for (int m = 0; m < 3; ++m) w3[m] = 1.0 / (sigma(m, k) * sigma(m, k));
        try {
            const Point init = linear_init(bs3, r3);
            const GnResult res = gauss_newton_localize(bs3, r3, w3, init, gn);
            fix.p = res.p;
            fix.obj = res.objective;
        } catch (const CollinearAnchors&) {
            fix.degenerate = true;
        }
        return triple_memo.emplace(key, fix).first->second;
    };

    // Full-M refinements recur across candidates that agree on a target's
    // complete rank vector; memoized the same way.
    std::map<std::vector<int>, Fix> full_memo;

    // The stage-1 objective sum is a lower bound on the candidate's overall
    // cost (the 3-BS terms of the full cost cannot beat the 3-BS optimum), so
    // candidates are evaluated in bound order and the tail is cut off once
    // the bound passes the incumbent.
    const std::size_t n_candidates = candidates.size();
    std::vector<double> bound(n_candidates, 0.0);
    for (std::size_t c = 0; c < n_candidates; ++c) {
        const Assoc3& a3 = candidates[c];
        for (int k = 0; k < k_count; ++k) {
            const Fix& fix = triple_fix(k, a3[0][k], a3[1][k], a3[2][k]);
            if (fix.degenerate) {
                bound[c] = std::numeric_limits<double>::infinity();
                break;
            }
            bound[c] += fix.obj;
        }
    }
    std::vector<std::size_t> order(n_candidates);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return bound[a] < bound[b]; });

    LocalizationResult best;
    double best_obj = std::numeric_limits<double>::infinity();
    bool have_best = false;

    for (const std::size_t c : order) {
        if (bound[c] >= best_obj) break;
        if (!std::isfinite(bound[c])) break; // only degenerate candidates remain
        const Assoc3& a3 = candidates[c];

        std::vector<Point> stage1(static_cast<std::size_t>(k_count));
        for (int k = 0; k < k_count; ++k)
            stage1[static_cast<std::size_t>(k)] =
                triple_fix(k, a3[0][k], a3[1][k], a3[2][k]).p;

        // Extend the association to the remaining BSs, one min-cost rank
        // assignment per BS.
        std::vector<std::vector<int>> g(static_cast<std::size_t>(m_count));
        for (int m = 0; m < 3; ++m) g[static_cast<std::size_t>(m)] = a3[m];
        for (int m = 3; m < m_count; ++m) {
            Eigen::MatrixXd cost(k_count, k_count);
            for (int k = 0; k < k_count; ++k) {
                const double implied =
                    distance(stage1[static_cast<std::size_t>(k)], bs_coords[m]);
                for (int rank = 1; rank <= k_count; ++rank) {
                    const double res = (range_sets[m].at(rank) - implied) / sigma(m, k);
                    cost(k, rank - 1) = res * res;
                }
            }
            const HungarianResult assign = hungarian_assign(cost);
            g[static_cast<std::size_t>(m)].resize(static_cast<std::size_t>(k_count));
            for (int k = 0; k < k_count; ++k)
                g[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)] =
                    assign.assignment[k] + 1;
        }

        // Refine per target with all M BSs from the stage-1 estimate.
        std::vector<Point> coords(static_cast<std::size_t>(k_count));
        std::vector<double> per_target(static_cast<std::size_t>(k_count), 0.0);
        double total = 0.0;
        bool aborted = false;
        for (int k = 0; k < k_count; ++k) {
            std::vector<int> key(static_cast<std::size_t>(m_count + 1));
            key[0] = k;
            for (int m = 0; m < m_count; ++m)
                key[static_cast<std::size_t>(m + 1)] =
                    g[static_cast<std::size_t>(m)][static_cast<std::size_t>(k)];
            const auto it = full_memo.find(key);
            Fix fix;
            if (it != full_memo.end()) {
                fix = it->second;
            } else {
                std::vector<double> ranges(static_cast<std::size_t>(m_count));
                std::vector<double> weights(static_cast<std::size_t>(m_count));
                for (int m = 0; m < m_count; ++m) {
                    ranges[static_cast<std::size_t>(m)] =
                        range_sets[m].at(key[static_cast<std::size_t>(m + 1)]);
                    weights[static_cast<std::size_t>(m)] =
                        1.0 / (sigma(m, k) * sigma(m, k));
                }
                const GnResult res = gauss_newton_localize(
                    bs_coords, ranges, weights, stage1[static_cast<std::size_t>(k)], gn);
                fix.p = res.p;
                fix.obj = res.objective;
                full_memo.emplace(key, fix);
            }
            coords[static_cast<std::size_t>(k)] = fix.p;
            per_target[static_cast<std::size_t>(k)] = fix.obj;
            total += fix.obj;
            if (total >= best_obj) {
                aborted = true;
                break;
            }
        }
        if (aborted) continue;

        best.coords = std::move(coords);
        best.association.g = g;
        best.objective = total;
        best.per_target_residuals = std::move(per_target);
        best_obj = total;
        have_best = true;
    }

    if (!have_best) {
        throw EmptyFeasibleSet("ml_localize: every candidate association was degenerate");
    }
    return best;
}

LocalizationResult exhaustive_ml_oracle(const std::vector<RangeSet>& range_sets,
                                        const std::vector<Point>& bs_coords,
                                        const Eigen::MatrixXd& sigma,
                                        const GaussNewtonParams& gn) {
    const int m_count = static_cast<int>(bs_coords.size());
    if (m_count < 3 || range_sets.size() != bs_coords.size()) {
        throw ScenarioError("exhaustive_ml_oracle: need >= 3 BSs with matching range sets");
    }
    const int k_count = range_sets[0].size();
    if (k_count > 4 || m_count > 5) {
        throw ComplexityGuard("exhaustive_ml_oracle: limited to K <= 4, M <= 5");
    }
    if (sigma.rows() != m_count || sigma.cols() != k_count) {
        throw ScenarioError("exhaustive_ml_oracle: sigma must be M x K");
    }

    std::vector<std::vector<int>> perms;
    std::vector<int> perm = identity_row(k_count);
    do {
        perms.push_back(perm);
    } while (std::next_permutation(perm.begin(), perm.end()));

    LocalizationResult best;
    double best_obj = std::numeric_limits<double>::infinity();
    bool have_best = false;

    std::vector<std::vector<int>> g(m_count);
    g[0] = identity_row(k_count);
    std::vector<std::size_t> idx(m_count, 0);
    while (true) {
        for (int m = 1; m < m_count; ++m) g[m] = perms[idx[m]];
        try {
            const Candidate cand =
                localize_for_association(g, range_sets, bs_coords, sigma, gn);
            if (cand.objective < best_obj) {
                best_obj = cand.objective;
                best.coords = cand.coords;
                best.association = cand.assoc;
                best.objective = cand.objective;
                best.per_target_residuals = cand.per_target;
                have_best = true;
            }
        } catch (const CollinearAnchors&) {
            // skip degenerate geometry for this association
        }

        int m = m_count - 1;
        while (m >= 1 && ++idx[m] == perms.size()) {
            idx[m] = 0;
            --m;
        }
        if (m < 1) break;
    }

    if (!have_best) {
        throw EmptyFeasibleSet("exhaustive_ml_oracle: no non-degenerate association");
    }
    return best;
}

double recompute_objective(const LocalizationResult& result,
                           const std::vector<RangeSet>& range_sets,
                           const std::vector<Point>& bs_coords,
                           const Eigen::MatrixXd& sigma) {
    double obj = 0.0;
    const int m_count = static_cast<int>(bs_coords.size());
    const int k_count = static_cast<int>(result.coords.size());
    for (int m = 0; m < m_count; ++m) {
        for (int k = 0; k < k_count; ++k) {
            const double res =
                (range_sets[m].at(result.association.g[m][k]) -
                 distance(result.coords[k], bs_coords[m])) /
                sigma(m, k);
            obj += res * res;
        }
    }
    return obj;
}

} // namespace isac
