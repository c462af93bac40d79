#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "isac/geometry.hpp"
#include "isac/ranging.hpp"

namespace isac {

/// Rank matrix g(m,k): the range of target k is the g(m,k)-th largest in D_m.
/// Row 0 (BS 1) is always the identity so target indexing is unambiguous;
/// every row is a permutation of 1..K.
struct Association {
    std::vector<std::vector<int>> g; // M rows, K columns, 1-based ranks

    int num_bs() const { return static_cast<int>(g.size()); }
    int num_targets() const { return g.empty() ? 0 : static_cast<int>(g[0].size()); }
    std::string row_string(int m) const;
};

/// Candidate association restricted to BSs 1..3.
using Assoc3 = std::array<std::vector<int>, 3>;

constexpr double kDefaultGeoEps = 1e-6;

/// Intersection point of three circles, if one exists: solves the two
/// linearized difference equations and verifies all three residuals
/// against eps_geo. Throws CollinearAnchors.
std::optional<Point> trilaterate_exact(const std::array<Point, 3>& anchors,
                                       const std::array<double, 3>& ranges,
                                       double eps_geo = kDefaultGeoEps);

/// All rank assignments for BSs 1..3 with row 1 fixed to the identity, rows 2
/// and 3 permutations, and per-target triangle inequalities within margin
/// delta0. Enumeration is lexicographic over (permutation of BS 2,
/// permutation of BS 3).
std::vector<Assoc3> feasible_associations_3bs(const std::vector<RangeSet>& range_sets,
                                              const std::vector<Point>& bs_coords,
                                              double delta0);

struct GhostSolution {
    std::vector<Point> coords; // one per target, ordered by BS-1 rank
    Assoc3 assoc;
};

/// tau = number of distinct feasible localization solutions; ghost targets
/// exist iff tau > 1.
struct GhostReport {
    int tau = 0;
    std::vector<GhostSolution> solutions;

    bool ghost_exists() const { return tau > 1; }
};

/// Ghost-existence check for perfect range sets: enumerate the feasible
/// 3-BS associations, trilaterate every target, and keep the candidates whose
/// implied range sets match D_m for every additional BS. Solutions whose
/// coordinate sets coincide within eps_geo are counted once.
/// Throws NoFeasibleSolution if no candidate survives.
GhostReport detect_ghosts(const std::vector<RangeSet>& range_sets,
                          const std::vector<Point>& bs_coords,
                          double eps_geo = kDefaultGeoEps);

/// CSV dump: solution index, target index, x, y.
void write_ghost_report_csv(const GhostReport& report, const std::string& path);

} // namespace isac
