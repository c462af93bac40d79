#include "isac/association.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace isac {

std::string Association::row_string(int m) const
{
    std::ostringstream ss;
    for (std::size_t k = 0; k < g[static_cast<std::size_t>(m)].size(); ++k) {
        if (k > 0)
            ss << ' ';
        ss << g[static_cast<std::size_t>(m)][k];
    }
    return ss.str();
}

std::optional<Point> trilaterate_exact(const std::array<Point, 3>& anchors,
                                       const std::array<double, 3>& ranges,
                                       double eps_geo)
{
    if (collinear(anchors[0], anchors[1], anchors[2], kDefaultCollinearEps))
        throw CollinearAnchors("trilateration anchors are collinear");

    // Differencing squared circle equations i=1,2 against anchor 0 gives a
    // 2x2 linear system for the candidate point.
    double a[2][2], rhs[2];
    for (int i = 0; i < 2; ++i) {
        const Point& p0 = anchors[0];
        const Point& pi = anchors[static_cast<std::size_t>(i + 1)];
        a[i][0] = 2.0 * (pi.x - p0.x);
        a[i][1] = 2.0 * (pi.y - p0.y);
        rhs[i] = ranges[0] * ranges[0] - ranges[static_cast<std::size_t>(i + 1)] *
                 ranges[static_cast<std::size_t>(i + 1)] +
                 (pi.x * pi.x + pi.y * pi.y) - (p0.x * p0.x + p0.y * p0.y);
    }
    const double det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    Point p{(rhs[0] * a[1][1] - rhs[1] * a[0][1]) / det,
            (a[0][0] * rhs[1] - a[1][0] * rhs[0]) / det};

    for (int i = 0; i < 3; ++i)
        if (std::abs(distance(p, anchors[static_cast<std::size_t>(i)]) -
                     ranges[static_cast<std::size_t>(i)]) > eps_geo)
            return std::nullopt;
    return p;
}

namespace {

// Triangle checks of one (BS pair, target) range pair within margin delta0.
bool ranges_compatible(double d1, double d2, double bs_dist, double delta0)
{
    return std::abs(d1 - d2) <= bs_dist + delta0 && d1 + d2 >= bs_dist - delta0;
}

struct Enumerator {
    const std::vector<RangeSet>& sets;
    double d12, d13, d23;
    double delta0;
    int k_count;
    std::vector<int> perm2, perm3;
    std::vector<bool> used2, used3;
    std::vector<Assoc3> out;

    bool pair12_ok(int k, int g2) const
    {
        return ranges_compatible(sets[0].at(k + 1), sets[1].at(g2), d12, delta0);
    }
    bool pair3_ok(int k, int g3) const
    {
        return ranges_compatible(sets[0].at(k + 1), sets[2].at(g3), d13, delta0) &&
               ranges_compatible(sets[1].at(perm2[static_cast<std::size_t>(k)]),
                                 sets[2].at(g3), d23, delta0);
    }

    void extend3(int k)
    {
        if (k == k_count) {
            Assoc3 assoc;
            assoc[0].resize(static_cast<std::size_t>(k_count));
            for (int i = 0; i < k_count; ++i)
                assoc[0][static_cast<std::size_t>(i)] = i + 1;
            assoc[1] = perm2;
            assoc[2] = perm3;
            out.push_back(std::move(assoc));
            return;
        }
        for (int g3 = 1; g3 <= k_count; ++g3) {
            if (used3[static_cast<std::size_t>(g3)] || !pair3_ok(k, g3))
                continue;
            used3[static_cast<std::size_t>(g3)] = true;
            perm3[static_cast<std::size_t>(k)] = g3;
            extend3(k + 1);
            used3[static_cast<std::size_t>(g3)] = false;
        }
    }

    void extend2(int k)
    {
        if (k == k_count) {
            extend3(0);
            return;
        }
        for (int g2 = 1; g2 <= k_count; ++g2) {
            if (used2[static_cast<std::size_t>(g2)] || !pair12_ok(k, g2))
                continue;
            used2[static_cast<std::size_t>(g2)] = true;
            perm2[static_cast<std::size_t>(k)] = g2;
            extend2(k + 1);
            used2[static_cast<std::size_t>(g2)] = false;
        }
    }
};

} // namespace

std::vector<Assoc3> feasible_associations_3bs(const std::vector<RangeSet>& range_sets,
                                              const std::vector<Point>& bs_coords,
                                              double delta0)
{
    if (range_sets.size() < 3 || bs_coords.size() < 3)
        throw Error("feasible_associations_3bs requires at least 3 BSs");
    const int k_count = range_sets[0].size();
    for (int m = 0; m < 3; ++m)
        if (range_sets[static_cast<std::size_t>(m)].size() != k_count)
            throw Error("range sets for BSs 1..3 must all have K elements");

    Enumerator e{range_sets,
                 distance(bs_coords[0], bs_coords[1]),
                 distance(bs_coords[0], bs_coords[2]),
                 distance(bs_coords[1], bs_coords[2]),
                 delta0,
                 k_count,
                 std::vector<int>(static_cast<std::size_t>(k_count)),
                 std::vector<int>(static_cast<std::size_t>(k_count)),
                 std::vector<bool>(static_cast<std::size_t>(k_count) + 1, false),
                 std::vector<bool>(static_cast<std::size_t>(k_count) + 1, false),
                 {}};
    e.extend2(0);
    return e.out;
}

namespace {

// Multisets of coordinates match element-wise within eps after sorting.
bool same_coordinate_set(const std::vector<Point>& a, const std::vector<Point>& b,
                         double eps)
{
    auto key = [](const Point& p, const Point& q) {
        if (p.x != q.x)
            return p.x < q.x;
        return p.y < q.y;
    };
    std::vector<Point> sa = a, sb = b;
    std::sort(sa.begin(), sa.end(), key);
    std::sort(sb.begin(), sb.end(), key);
    for (std::size_t i = 0; i < sa.size(); ++i)
        if (std::abs(sa[i].x - sb[i].x) > eps || std::abs(sa[i].y - sb[i].y) > eps)
            return false;
    return true;
}

bool range_sets_match(const std::vector<double>& sorted_desc, const RangeSet& set,
                      double eps)
{
    for (int g = 1; g <= set.size(); ++g)
        if (std::abs(sorted_desc[static_cast<std::size_t>(g - 1)] - set.at(g)) > eps)
            return false;
    return true;
}

} // namespace

GhostReport detect_ghosts(const std::vector<RangeSet>& range_sets,
                          const std::vector<Point>& bs_coords, double eps_geo)
{
    const int m_count = static_cast<int>(bs_coords.size());
    if (m_count < 3)
        throw Error("ghost detection requires M >= 3");
    const int k_count = range_sets.at(0).size();
    for (const RangeSet& set : range_sets)
        if (set.size() != k_count)
            throw Error("ghost detection requires |D_m| = K for every BS");

    // The triangle margin absorbs floating-point noise; the inequalities
    // themselves are exact-real in this mode.
    const std::vector<Assoc3> candidates =
        feasible_associations_3bs(range_sets, bs_coords, 1e-9);

    const std::array<Point, 3> anchors{bs_coords[0], bs_coords[1], bs_coords[2]};
    GhostReport report;
    for (const Assoc3& assoc : candidates) {
        std::vector<Point> coords;
        coords.reserve(static_cast<std::size_t>(k_count));
        bool feasible = true;
        for (int k = 0; k < k_count && feasible; ++k) {
            const std::array<double, 3> ranges{
                range_sets[0].at(assoc[0][static_cast<std::size_t>(k)]),
                range_sets[1].at(assoc[1][static_cast<std::size_t>(k)]),
                range_sets[2].at(assoc[2][static_cast<std::size_t>(k)])};
            const std::optional<Point> p = trilaterate_exact(anchors, ranges, eps_geo);
            if (!p)
                feasible = false;
            else
                coords.push_back(*p);
        }
        if (!feasible)
            continue;

        for (int m = 3; m < m_count && feasible; ++m) {
            std::vector<double> implied;
            implied.reserve(coords.size());
            for (const Point& p : coords)
                implied.push_back(distance(p, bs_coords[static_cast<std::size_t>(m)]));
            std::sort(implied.begin(), implied.end(), std::greater<>());
            feasible = range_sets_match(implied, range_sets[static_cast<std::size_t>(m)],
                                        eps_geo);
        }
        if (!feasible)
            continue;

        bool duplicate = false;
        for (const GhostSolution& seen : report.solutions)
            if (same_coordinate_set(seen.coords, coords, eps_geo)) {
                duplicate = true;
                break;
            }
        if (!duplicate)
            report.solutions.push_back(GhostSolution{std::move(coords), assoc});
    }

    report.tau = static_cast<int>(report.solutions.size());
    if (report.tau == 0)
        throw NoFeasibleSolution("no consistent localization solution; input range "
                                 "sets are corrupted for perfect-range mode");
    return report;
}

void write_ghost_report_csv(const GhostReport& report, const std::string& path)
{
    std::ofstream out(path);
    out.precision(std::numeric_limits<double>::max_digits10);
    out << "solution,target,x,y\n";
    for (std::size_t s = 0; s < report.solutions.size(); ++s)
        for (std::size_t k = 0; k < report.solutions[s].coords.size(); ++k) {
            const Point& p = report.solutions[s].coords[k];
            out << s + 1 << ',' << k + 1 << ',' << p.x << ',' << p.y << '\n';
        }
}

} // namespace isac
