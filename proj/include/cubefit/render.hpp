#pragma once

#include <array>
#include <climits>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "camera.hpp"
#include "hull.hpp"
#include "mask.hpp"
#include "params.hpp"

namespace cubefit {

namespace parts {
inline constexpr unsigned object = 1, base = 2, moving = 4, all = 7;
}

struct RenderConfig {
    double tau = 1.0;        // edge softness in pixels
    unsigned parts = parts::all;
    double znear = 1e-3;     // near-plane epsilon
    double clamp_band = 20.0;  // fitting path clamps occupancy to 0/1 beyond
                               // clamp_band * tau pixels from the silhouette
                               // boundary (pointwise error < 3e-9)

    void validate() const {
        if (!(tau > 0.0)) throw std::invalid_argument("RenderConfig: tau must be > 0");
        if (!(znear > 0.0)) throw std::invalid_argument("RenderConfig: znear must be > 0");
        if (!(clamp_band > 1.0)) throw std::invalid_argument("RenderConfig: clamp_band must be > 1");
    }
};

namespace detail {

// Convex hull of up to 8 points keeping source indices. Returns the vertex
// count (0 if degenerate, i.e. < 3 strictly convex vertices).
inline int hull8(const Vec2* pts, int npts, Vec2* hull, int* src) {
    int idx[8];
    for (int i = 0; i < npts; ++i) idx[i] = i;
    std::sort(idx, idx + npts, [&](int a, int b) {
        return pts[a].x() < pts[b].x() ||
               (pts[a].x() == pts[b].x() && pts[a].y() < pts[b].y());
    });
    int uniq[8], nu = 0;
    for (int k = 0; k < npts; ++k) {
        if (nu > 0 && pts[idx[k]].x() == pts[uniq[nu - 1]].x() &&
            pts[idx[k]].y() == pts[uniq[nu - 1]].y())
            continue;
        uniq[nu++] = idx[k];
    }
    if (nu < 3) return 0;
    int h[16], k = 0;
    for (int i = 0; i < nu; ++i) {
        while (k >= 2 && cross2(pts[h[k - 2]], pts[h[k - 1]], pts[uniq[i]]) <= 0.0) --k;
        h[k++] = uniq[i];
    }
    for (int i = nu - 2, t = k + 1; i >= 0; --i) {
        while (k >= t && cross2(pts[h[k - 2]], pts[h[k - 1]], pts[uniq[i]]) <= 0.0) --k;
        h[k++] = uniq[i];
    }
    int n = k - 1;
    if (n < 3) return 0;
    for (int i = 0; i < n; ++i) {
        hull[i] = pts[h[i]];
        src[i] = h[i];
    }
    return n;
}

// Projected corner with the Jacobian of its pixel position w.r.t. the 15
// active parameters of the frame.
struct CornerProj {
    Vec2 p;
    double J[2][param::kActive];
};

struct PartGeom {
    CornerProj c[8];
    bool in_front = false;
};

inline PartGeom project_part(const V3<D15>* corners, const CameraIntrinsics& K, double znear) {
    PartGeom g;
    for (int i = 0; i < 8; ++i) {
        const V3<D15>& c = corners[i];
        if (!(c.z.v > znear)) return g;  // in_front stays false
        double iz = 1.0 / c.z.v;
        double x = c.x.v * iz, y = c.y.v * iz;
        g.c[i].p = Vec2(K.fx * x + K.cx, K.fy * y + K.cy);
        for (int k = 0; k < param::kActive; ++k) {
            g.c[i].J[0][k] = K.fx * (c.x.d[k] - x * c.z.d[k]) * iz;
            g.c[i].J[1][k] = K.fy * (c.y.d[k] - y * c.z.d[k]) * iz;
        }
    }
    g.in_front = true;
    return g;
}

// One rasterized band pixel: everything needed to push a d(loss)/d(occupancy)
// coefficient back to the hull vertices.
struct BandPixel {
    int px;         // linear pixel index
    int edge;       // closest hull edge
    double t;       // closest-point parameter on that edge (0/1 = vertex)
    double gx, gy;  // d(sd)/d(closest point) = -sign * unit(p - q)
    double occ;
    double w;       // gradient weight; < 1 when several edges tie for closest,
                    // splitting the kink subgradient evenly (matches central
                    // differences at symmetric ties)
};

// Reusable rasterization buffers for one part. The occupancy image is kept
// full-size but only the touched spans are written/cleared, so repeated
// frames cost O(silhouette area), not O(image area).
struct PartRaster {
    int W = 0, H = 0;
    std::vector<double> occ;
    std::vector<int> span_lo, span_hi;  // touched col span per row
    int y0 = 0, y1 = 0;                 // touched row range
    std::vector<BandPixel> band;
    std::array<Vec2, 8> hull;
    std::array<int, 8> hull_src;
    int hull_n = 0;
    bool valid = false;

    void ensure(int w, int h) {
        if (W != w || H != h) {
            W = w;
            H = h;
            occ.assign(static_cast<size_t>(w) * h, 0.0);
            span_lo.assign(h, 0);
            span_hi.assign(h, 0);
            y0 = y1 = 0;
        }
    }
    void clear_touched() {
        for (int y = y0; y < y1; ++y) {
            double* row = occ.data() + static_cast<size_t>(y) * W;
            for (int x = span_lo[y]; x < span_hi[y]; ++x) row[x] = 0.0;
            span_lo[y] = 0;
            span_hi[y] = 0;
        }
        y0 = y1 = 0;
        band.clear();
        hull_n = 0;
        valid = false;
    }
};

// Row interval of a convex CCW polygon at a given y: the x range where all
// edge half-plane constraints hold. Also used with an inward shift r for the
// erosion interval (exact for convex polygons).
struct EdgeCoef {
    double ax, ay, ex, ey, inv_len2, len;
};

inline bool row_interval(const EdgeCoef* e, int n, double yc, double shift, double& lo, double& hi) {
    lo = -std::numeric_limits<double>::infinity();
    hi = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        double A = -e[i].ey;
        double B = e[i].ex * (yc - e[i].ay) + e[i].ey * e[i].ax - shift * e[i].len;
        if (A > 1e-300) {
            lo = std::max(lo, -B / A);
        } else if (A < -1e-300) {
            hi = std::min(hi, -B / A);
        } else if (B < 0.0) {
            return false;
        }
    }
    return lo <= hi;
}

// Rasterize one part: fills the occupancy spans and band records.
// Occupancy is sigmoid(-sd/tau) clamped to exact 0/1 beyond clamp_band*tau.
inline void raster_part(const Vec2* proj, const CameraIntrinsics& K, const RenderConfig& cfg,
                        PartRaster& R) {
    R.ensure(K.width, K.height);
    R.clear_touched();
    R.hull_n = hull8(proj, 8, R.hull.data(), R.hull_src.data());
    if (R.hull_n < 3) return;
    R.valid = true;

    int n = R.hull_n;
    EdgeCoef ec[8];
    double minx = R.hull[0].x(), maxx = minx, miny = R.hull[0].y(), maxy = miny;
    for (int i = 0; i < n; ++i) {
        const Vec2& a = R.hull[i];
        const Vec2& b = R.hull[(i + 1) % n];
        double ex = b.x() - a.x(), ey = b.y() - a.y();
        double l2 = ex * ex + ey * ey;
        ec[i] = {a.x(), a.y(), ex, ey, 1.0 / l2, std::sqrt(l2)};
        minx = std::min(minx, a.x());
        maxx = std::max(maxx, a.x());
        miny = std::min(miny, a.y());
        maxy = std::max(maxy, a.y());
    }

    double r = cfg.clamp_band * cfg.tau;
    int ys = std::max(0, static_cast<int>(std::ceil(miny - r - 0.5)));
    int ye = std::min(K.height - 1, static_cast<int>(std::floor(maxy + r - 0.5)));
    int xs = std::max(0, static_cast<int>(std::ceil(minx - r - 0.5)));
    int xe = std::min(K.width - 1, static_cast<int>(std::floor(maxx + r - 0.5)));
    if (ys > ye || xs > xe) return;  // fully outside the frame
    R.y0 = ys;
    R.y1 = ye + 1;

    double inv_tau = 1.0 / cfg.tau;
    for (int y = ys; y <= ye; ++y) {
        double yc = y + 0.5;
        double plo, phi, elo, ehi;
        bool row_in = row_interval(ec, n, yc, 0.0, plo, phi);
        bool has_ero = row_in && row_interval(ec, n, yc, r, elo, ehi);
        double* row = R.occ.data() + static_cast<size_t>(y) * K.width;
        R.span_lo[y] = xs;
        R.span_hi[y] = xe + 1;
        for (int x = xs; x <= xe; ++x) {
            double xc = x + 0.5;
            bool inside = row_in && xc >= plo && xc <= phi;
            if (inside && has_ero && xc >= elo && xc <= ehi) {
                row[x] = 1.0;
                continue;
            }
            double best = std::numeric_limits<double>::infinity();
            double ts[8], d2s[8];
            for (int i = 0; i < n; ++i) {
                double dx = xc - ec[i].ax, dy = yc - ec[i].ay;
                double t = (dx * ec[i].ex + dy * ec[i].ey) * ec[i].inv_len2;
                t = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
                double rx = dx - t * ec[i].ex, ry = dy - t * ec[i].ey;
                double d2 = rx * rx + ry * ry;
                ts[i] = t;
                d2s[i] = d2;
                if (d2 < best) best = d2;
            }
            double d = std::sqrt(best);
            double sd = inside ? -d : d;
            if (sd >= r) continue;  // occupancy exactly 0
            if (sd <= -r) {
                row[x] = 1.0;
                continue;
            }
            double o = sigmoid(-sd * inv_tau);
            row[x] = o;
            if (d <= 1e-9) {
                R.band.push_back({y * K.width + x, 0, 0.0, 0.0, 0.0, o, 1.0});
                continue;
            }
            double s = inside ? -1.0 : 1.0;
            double tie = best * (1.0 + 1e-12);
            int k = 0;
            for (int i = 0; i < n; ++i) {
                if (d2s[i] > tie) continue;
                double dx = xc - ec[i].ax, dy = yc - ec[i].ay;
                double rx = dx - ts[i] * ec[i].ex, ry = dy - ts[i] * ec[i].ey;
                R.band.push_back({y * K.width + x, i, ts[i], -s * rx / d, -s * ry / d, o, 1.0});
                ++k;
            }
            if (k > 1) {
                double w = 1.0 / k;
                for (size_t j = R.band.size() - k; j < R.band.size(); ++j) R.band[j].w = w;
            }
        }
    }
}

// Push per-hull-vertex 2-D gradients through the corner Jacobians into the
// 15-slot frame gradient.
inline void scatter_vertex_grads(const PartRaster& R, const PartGeom& g,
                                 const Vec2* vg, double* g15) {
    for (int v = 0; v < R.hull_n; ++v) {
        double gx = vg[v].x(), gy = vg[v].y();
        if (gx == 0.0 && gy == 0.0) continue;
        const CornerProj& c = g.c[R.hull_src[v]];
        for (int k = 0; k < param::kActive; ++k)
            g15[k] += gx * c.J[0][k] + gy * c.J[1][k];
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Public ops
// ---------------------------------------------------------------------------

// Exact soft silhouette of 8 camera-frame corners: per-pixel occupancy
// sigmoid(-sd/tau) with sd the exact signed distance to the convex hull of
// the projected corners. All corners must be in front of the near plane.
inline SoftMask soft_silhouette(std::span<const Vec3> corners, const CameraIntrinsics& K,
                                const RenderConfig& cfg) {
    K.validate();
    cfg.validate();
    if (corners.size() != 8) throw std::invalid_argument("soft_silhouette: want 8 corners");
    for (const Vec3& c : corners)
        if (!(c.z() > cfg.znear))
            throw std::domain_error("soft_silhouette: corner behind near plane");
    std::vector<Vec2> proj = project(K, corners);
    std::vector<Vec2> hull = convex_hull_2d(proj);
    int n = static_cast<int>(hull.size());
    std::vector<detail::EdgeCoef> ec(n);
    for (int i = 0; i < n; ++i) {
        const Vec2& a = hull[i];
        const Vec2& b = hull[(i + 1) % n];
        double ex = b.x() - a.x(), ey = b.y() - a.y();
        double l2 = ex * ex + ey * ey;
        ec[i] = {a.x(), a.y(), ex, ey, 1.0 / l2, std::sqrt(l2)};
    }
    SoftMask m(K.width, K.height);
    double inv_tau = 1.0 / cfg.tau;
    for (int y = 0; y < K.height; ++y) {
        double yc = y + 0.5;
        double plo, phi;
        bool row_in = detail::row_interval(ec.data(), n, yc, 0.0, plo, phi);
        for (int x = 0; x < K.width; ++x) {
            double xc = x + 0.5;
            double best = std::numeric_limits<double>::infinity();
            for (int i = 0; i < n; ++i) {
                double dx = xc - ec[i].ax, dy = yc - ec[i].ay;
                double t = clampd((dx * ec[i].ex + dy * ec[i].ey) * ec[i].inv_len2, 0.0, 1.0);
                double rx = dx - t * ec[i].ex, ry = dy - t * ec[i].ey;
                best = std::min(best, rx * rx + ry * ry);
            }
            double sd = std::sqrt(best);
            if (row_in && xc >= plo && xc <= phi) sd = -sd;
            m.at(y, x) = sigmoid(-sd * inv_tau);
        }
    }
    return m;
}

// Hard binarization of the silhouette: 1 iff the pixel center is strictly
// inside the hull (sd < 0). Used for ground-truth mask generation.
inline SoftMask hard_silhouette(std::span<const Vec3> corners, const CameraIntrinsics& K,
                                double znear = 1e-3) {
    K.validate();
    if (corners.size() != 8) throw std::invalid_argument("hard_silhouette: want 8 corners");
    for (const Vec3& c : corners)
        if (!(c.z() > znear)) throw std::domain_error("hard_silhouette: corner behind near plane");
    std::vector<Vec2> proj = project(K, corners);
    std::vector<Vec2> hull = convex_hull_2d(proj);
    SoftMask m(K.width, K.height);
    size_t n = hull.size();
    for (int y = 0; y < K.height; ++y) {
        for (int x = 0; x < K.width; ++x) {
            Vec2 p(x + 0.5, y + 0.5);
            bool in = true;
            for (size_t i = 0; i < n && in; ++i)
                in = cross2(hull[i], hull[(i + 1) % n], p) > 0.0;
            if (in) m.at(y, x) = 1.0;
        }
    }
    return m;
}

// Per-part masks for frame t of the parameter vector, plus the gradient of
// each requested part's total occupancy w.r.t. the full parameter vector.
// Value and gradient come from the same band-clamped occupancy field, so
// they are finite-difference consistent.
struct RenderWithGrad {
    SoftMask object, base, moving;
    double total_object = 0.0, total_base = 0.0, total_moving = 0.0;
    Eigen::VectorXd grad_object, grad_base, grad_moving;
};

inline RenderWithGrad render_with_grad(const Eigen::VectorXd& params, int edge, int t,
                                       const CameraIntrinsics& K, const RenderConfig& cfg) {
    K.validate();
    cfg.validate();
    V3<D15> corners[16];
    assemble_frame_dual(params, edge, t, corners);
    detail::PartGeom gb = detail::project_part(corners, K, cfg.znear);
    detail::PartGeom gm = detail::project_part(corners + 8, K, cfg.znear);
    if (!gb.in_front || !gm.in_front)
        throw std::domain_error("render_with_grad: corner behind near plane");

    detail::PartRaster rb, rm;
    Vec2 pb[8], pm[8];
    for (int i = 0; i < 8; ++i) {
        pb[i] = gb.c[i].p;
        pm[i] = gm.c[i].p;
    }
    detail::raster_part(pb, K, cfg, rb);
    detail::raster_part(pm, K, cfg, rm);

    int P = static_cast<int>(params.size());
    RenderWithGrad out;
    auto to_mask = [&](const detail::PartRaster& R) {
        SoftMask m(K.width, K.height);
        m.data = R.occ;
        return m;
    };
    if (cfg.parts & parts::base) out.base = to_mask(rb);
    if (cfg.parts & parts::moving) out.moving = to_mask(rm);
    if (cfg.parts & parts::object) {
        SoftMask m(K.width, K.height);
        for (size_t i = 0; i < m.data.size(); ++i)
            m.data[i] = rb.occ[i] + rm.occ[i] - rb.occ[i] * rm.occ[i];
        out.object = m;
    }

    // total occupancies over touched spans
    auto span_sum = [&](const detail::PartRaster& R) {
        double s = 0.0;
        for (int y = R.y0; y < R.y1; ++y) {
            const double* row = R.occ.data() + static_cast<size_t>(y) * R.W;
            for (int x = R.span_lo[y]; x < R.span_hi[y]; ++x) s += row[x];
        }
        return s;
    };
    out.total_base = span_sum(rb);
    out.total_moving = span_sum(rm);
    {
        double s = 0.0;
        int y0 = std::min(rb.y0, rm.y0), y1 = std::max(rb.y1, rm.y1);
        for (int y = y0; y < y1; ++y) {
            int lo = std::min(rb.y0 <= y && y < rb.y1 ? rb.span_lo[y] : INT_MAX,
                              rm.y0 <= y && y < rm.y1 ? rm.span_lo[y] : INT_MAX);
            int hi = std::max(rb.y0 <= y && y < rb.y1 ? rb.span_hi[y] : 0,
                              rm.y0 <= y && y < rm.y1 ? rm.span_hi[y] : 0);
            const double* b = rb.occ.data() + static_cast<size_t>(y) * K.width;
            const double* m = rm.occ.data() + static_cast<size_t>(y) * K.width;
            for (int x = lo; x < hi; ++x) s += b[x] + m[x] - b[x] * m[x];
        }
        out.total_object = s;
    }

    // gradients of the totals via the band pixels
    auto backprop = [&](const detail::PartRaster& R, const detail::PartGeom& g,
                        const detail::PartRaster& other, int mode) {
        Vec2 vg[8];
        for (Vec2& v : vg) v.setZero();
        for (const detail::BandPixel& b : R.band) {
            double coeff = b.w;
            if (mode == 1) coeff *= 1.0 - other.occ[b.px];  // object functional
            double gsd = coeff * (-b.occ * (1.0 - b.occ) / cfg.tau);
            if (gsd == 0.0) continue;
            int va = b.edge, vb = (b.edge + 1) % R.hull_n;
            vg[va] += (1.0 - b.t) * gsd * Vec2(b.gx, b.gy);
            vg[vb] += b.t * gsd * Vec2(b.gx, b.gy);
        }
        double g15[param::kActive] = {};
        detail::scatter_vertex_grads(R, g, vg, g15);
        Eigen::VectorXd grad = Eigen::VectorXd::Zero(P);
        scatter_frame_grad(g15, t, grad);
        return grad;
    };
    out.grad_base = backprop(rb, gb, rm, 0);
    out.grad_moving = backprop(rm, gm, rb, 0);
    out.grad_object = backprop(rb, gb, rm, 1) + backprop(rm, gm, rb, 1);
    return out;
}

}  // namespace cubefit
