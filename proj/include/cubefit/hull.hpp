#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "core.hpp"

namespace cubefit {

inline double cross2(const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

namespace detail {

// Monotone chain; returns CCW hull (may have < 3 vertices if degenerate).
inline std::vector<Vec2> hull_impl(std::span<const Vec2> pts) {
    std::vector<Vec2> p(pts.begin(), pts.end());
    std::sort(p.begin(), p.end(), [](const Vec2& a, const Vec2& b) {
        return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
    });
    p.erase(std::unique(p.begin(), p.end(), [](const Vec2& a, const Vec2& b) {
                return a.x() == b.x() && a.y() == b.y();
            }),
            p.end());
    size_t n = p.size();
    if (n < 3) return p;
    std::vector<Vec2> h(2 * n);
    size_t k = 0;
    for (size_t i = 0; i < n; ++i) {  // lower hull
        while (k >= 2 && cross2(h[k - 2], h[k - 1], p[i]) <= 0.0) --k;
        h[k++] = p[i];
    }
    for (size_t i = n - 1, t = k + 1; i-- > 0;) {  // upper hull
        while (k >= t && cross2(h[k - 2], h[k - 1], p[i]) <= 0.0) --k;
        h[k++] = p[i];
    }
    h.resize(k - 1);
    return h;
}

// Closest point on the polygon boundary: squared distance, edge index, and
// the parameter t in [0,1] along that edge (t==0/1 means a vertex feature).
struct ClosestFeature {
    double dist2 = 0.0;
    int edge = -1;
    double t = 0.0;
};

inline ClosestFeature closest_feature(const Vec2& p, std::span<const Vec2> poly) {
    ClosestFeature best;
    best.dist2 = std::numeric_limits<double>::infinity();
    size_t n = poly.size();
    for (size_t i = 0; i < n; ++i) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[(i + 1) % n];
        Vec2 ab = b - a;
        double len2 = ab.squaredNorm();
        double t = len2 > 0.0 ? clampd((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
        Vec2 q = a + t * ab;
        double d2 = (p - q).squaredNorm();
        if (d2 < best.dist2) best = {d2, static_cast<int>(i), t};
    }
    return best;
}

inline bool inside_convex(const Vec2& p, std::span<const Vec2> poly) {
    size_t n = poly.size();
    for (size_t i = 0; i < n; ++i) {
        if (cross2(poly[i], poly[(i + 1) % n], p) < 0.0) return false;
    }
    return true;
}

}  // namespace detail

// Convex hull of 2-D points in counter-clockwise order.
inline std::vector<Vec2> convex_hull_2d(std::span<const Vec2> pts) {
    std::vector<Vec2> h = detail::hull_impl(pts);
    if (h.size() < 3)
        throw std::invalid_argument("convex_hull_2d: degenerate hull (fewer than 3 distinct non-collinear points)");
    return h;
}

// Exact Euclidean signed distance to a convex CCW polygon:
// negative inside, zero on the boundary, positive outside.
inline double signed_distance_polygon(const Vec2& p, std::span<const Vec2> poly) {
    if (poly.size() < 3) throw std::invalid_argument("signed_distance_polygon: polygon needs >= 3 vertices");
    detail::ClosestFeature f = detail::closest_feature(p, poly);
    double d = std::sqrt(f.dist2);
    return detail::inside_convex(p, poly) ? -d : d;
}

}  // namespace cubefit
