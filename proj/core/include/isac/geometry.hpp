#pragma once

#include <cmath>

namespace isac {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

inline double distance(const Point& a, const Point& b)
{
    return std::hypot(a.x - b.x, a.y - b.y);
}

/// Normalized triangle-area test: |cross(ab, ac)| / (|ab| * |ac|) < eps.
/// Coincident points count as collinear.
inline bool collinear(const Point& a, const Point& b, const Point& c, double eps = 1e-6)
{
    const double abx = b.x - a.x, aby = b.y - a.y;
    const double acx = c.x - a.x, acy = c.y - a.y;
    const double nab = std::hypot(abx, aby);
    const double nac = std::hypot(acx, acy);
    if (nab == 0.0 || nac == 0.0)
        return true;
    const double cross = abx * acy - aby * acx;
    return std::abs(cross) < eps * nab * nac;
}

} // namespace isac
