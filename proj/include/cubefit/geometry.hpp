#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "core.hpp"
#include "dual.hpp"

namespace cubefit {

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

// Axis-aligned dimensions (dx, dy, dz) of a cuboid in its local frame.
struct Cuboid {
    Vec3 dims{1.0, 1.0, 1.0};

    void validate() const {
        if (!(dims.x() > 0.0 && dims.y() > 0.0 && dims.z() > 0.0))
            throw std::invalid_argument("Cuboid: dims must be positive");
    }
};

// Rigid pose: axis-angle rotation vector and translation, applied last.
struct PoseParams {
    Vec3 rot{0.0, 0.0, 0.0};
    Vec3 trans{0.0, 0.0, 0.0};
};

// Hinge on one of the four base front-face edges.
// offset/extent are fractions of the edge length; the hinge segment spans
// [offset, offset+extent] along the edge.
enum class HingeEdge : int { left = 0, right = 1, top = 2, bottom = 3 };

struct HingeSpec {
    int edge = 0;  // HingeEdge
    double offset = 0.0;
    double extent = 1.0;

    void validate() const {
        if (edge < 0 || edge > 3) throw std::invalid_argument("HingeSpec: invalid edge id");
        if (!(offset >= 0.0 && offset <= 1.0)) throw std::invalid_argument("HingeSpec: offset out of [0,1]");
        if (!(extent > 0.0 && extent <= 1.0)) throw std::invalid_argument("HingeSpec: extent out of (0,1]");
        if (offset + extent > 1.0 + 1e-12) throw std::invalid_argument("HingeSpec: offset+extent > 1");
    }
};

inline const char* hinge_edge_name(int edge) {
    switch (edge) {
        case 0: return "left";
        case 1: return "right";
        case 2: return "top";
        case 3: return "bottom";
    }
    throw std::invalid_argument("hinge_edge_name: invalid edge id");
}

inline int hinge_edge_from_name(const std::string& s) {
    for (int e = 0; e < 4; ++e)
        if (s == hinge_edge_name(e)) return e;
    throw std::invalid_argument("hinge_edge_from_name: unknown edge '" + s + "'");
}

// Full articulated model: base + moving cuboid, hinge, pose, per-frame
// opening angles (radians; serialized as degrees at file boundaries).
struct ArticulatedModel {
    Cuboid base;
    Cuboid moving;
    HingeSpec hinge;
    PoseParams pose;
    std::vector<double> angles;

    void validate() const {
        base.validate();
        moving.validate();
        hinge.validate();
        if (angles.empty()) throw std::invalid_argument("ArticulatedModel: no frames");
    }
};

// Recovered motion: world-space axis (origin point + unit direction) and
// per-frame opening angles in degrees.
struct MotionParams {
    Vec3 origin{0.0, 0.0, 0.0};
    Vec3 direction{0.0, 0.0, 1.0};
    std::vector<double> states_deg;
};

// ---------------------------------------------------------------------------
// Rotations
// ---------------------------------------------------------------------------

template <class T>
struct V3 {
    T x{}, y{}, z{};
    friend V3 operator+(const V3& a, const V3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend V3 operator-(const V3& a, const V3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend V3 operator*(const T& s, const V3& a) { return {s * a.x, s * a.y, s * a.z}; }
};

template <class T>
T dot(const V3<T>& a, const V3<T>& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
template <class T>
V3<T> cross(const V3<T>& a, const V3<T>& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline Vec3 to_vec3(const V3<double>& v) { return Vec3(v.x, v.y, v.z); }
inline V3<double> from_vec3(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

// Rotate v by the rotation-vector w (Rodrigues). Uses sin(t)/t and
// (1-cos t)/t^2 series near zero so it is smooth in w, including w = 0.
template <class T>
V3<T> rotate_by_rotvec(const V3<T>& w, const V3<T>& v) {
    T t2 = dot(w, w);
    T A, B;
    if (value_of(t2) < 1e-12) {
        A = T(1.0) - t2 * T(1.0 / 6.0) + t2 * t2 * T(1.0 / 120.0);
        B = T(0.5) - t2 * T(1.0 / 24.0) + t2 * t2 * T(1.0 / 720.0);
    } else {
        T t = sqrt(t2);
        A = sin(t) / t;
        B = (T(1.0) - cos(t)) / t2;
    }
    V3<T> wv = cross(w, v);
    V3<T> wwv = cross(w, wv);
    return v + A * wv + B * wwv;
}

inline Mat3 axis_angle_to_matrix(const Vec3& w) {
    Mat3 R;
    V3<double> ww = from_vec3(w);
    for (int c = 0; c < 3; ++c) {
        V3<double> e{c == 0 ? 1.0 : 0.0, c == 1 ? 1.0 : 0.0, c == 2 ? 1.0 : 0.0};
        V3<double> r = rotate_by_rotvec(ww, e);
        R(0, c) = r.x;
        R(1, c) = r.y;
        R(2, c) = r.z;
    }
    return R;
}

// Log map, canonical result magnitude in [0, pi].
inline Vec3 matrix_to_axis_angle(const Mat3& R) {
    double c = clampd((R.trace() - 1.0) * 0.5, -1.0, 1.0);
    double theta = std::acos(c);
    Vec3 skew(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
    if (theta < 1e-8) return 0.5 * skew;
    double s = std::sin(theta);
    if (s > 1e-3) return (theta / (2.0 * s)) * skew;
    // Small sine: acos is ill-conditioned, so rebuild the angle from the skew
    // norm (|skew| = 2 sin(theta), computed to absolute precision) before
    // normalizing by it. c < 0 places theta in the upper quadrant.
    double sn = 0.5 * skew.norm();
    if (sn > 1e-11) {
        theta = c < 0.0 ? kPi - std::asin(clampd(sn, 0.0, 1.0)) : std::asin(clampd(sn, 0.0, 1.0));
        return (theta / (2.0 * sn)) * skew;
    }
    // theta at pi to working precision: recover axis from the symmetric part.
    Mat3 S = 0.5 * (R + Mat3::Identity());
    int k = 0;
    S.diagonal().maxCoeff(&k);
    Vec3 axis = S.col(k) / std::sqrt(std::max(S(k, k), 1e-300));
    axis.normalize();
    // fix sign with the skew part (zero exactly at pi; either sign valid there)
    if (axis.dot(skew) < 0.0) axis = -axis;
    return theta * axis;
}

// Wrap an axis-angle vector to magnitude <= pi (equivalent rotation).
inline Vec3 canonicalize_axis_angle(const Vec3& w) {
    double theta = w.norm();
    if (theta <= kPi || theta == 0.0) return w;
    double m = std::fmod(theta, 2.0 * kPi);
    if (m > kPi) m -= 2.0 * kPi;
    return w * (m / theta);
}

// Rotate points about the axis (origin, dir) by angle (radians, right-handed
// about dir). dir must be unit length.
inline std::vector<Vec3> rotate_about_axis(std::span<const Vec3> pts, const Vec3& origin,
                                           const Vec3& dir, double angle) {
    if (std::abs(dir.norm() - 1.0) > 1e-9)
        throw std::invalid_argument("rotate_about_axis: dir must be unit length");
    V3<double> w = from_vec3(dir * angle);
    std::vector<Vec3> out;
    out.reserve(pts.size());
    for (const Vec3& p : pts)
        out.push_back(origin + to_vec3(rotate_by_rotvec(w, from_vec3(p - origin))));
    return out;
}

// ---------------------------------------------------------------------------
// Assembly
// ---------------------------------------------------------------------------
//
// Conventions (camera frame: x right, y down, z forward):
//   - base cuboid centered at its local origin, front face at z = -dz/2
//   - hinge edges on the front face: left  x=-dx/2, right x=+dx/2,
//     top y=-dy/2 (image-up), bottom y=+dy/2
//   - the moving part lies flush outside the front face when the angle is 0,
//     spanning from the hinge segment across the face; its dims are
//     (length along hinge, width across the face, thickness)
//   - hinge direction is chosen so that a positive angle swings the free
//     edge toward the camera (-z)
//
// Corner order: bit i of the index selects +/- along local axis i.

namespace detail {

struct EdgeFrame {
    Vec3 a_unit;    // edge start corner in units of half-dims (x,y,z multipliers)
    Vec3 b_unit;    // edge end corner
    Vec3 across;    // unit vector from the edge across the front face
    double d_sign;  // hinge dir = d_sign * normalize(b - a)
};

inline const EdgeFrame& edge_frame(int edge) {
    static const EdgeFrame frames[4] = {
        {{-1, -1, -1}, {-1, 1, -1}, {1, 0, 0}, 1.0},   // left
        {{1, -1, -1}, {1, 1, -1}, {-1, 0, 0}, -1.0},   // right
        {{-1, -1, -1}, {1, -1, -1}, {0, 1, 0}, -1.0},  // top
        {{-1, 1, -1}, {1, 1, -1}, {0, -1, 0}, 1.0},    // bottom
    };
    if (edge < 0 || edge > 3) throw std::invalid_argument("edge_frame: invalid edge id");
    return frames[edge];
}

// Base corners (bit-order, pose applied). The base does not depend on the
// frame, so callers may assemble it once per parameter vector.
template <class T>
void assemble_base_corners(const V3<T>& rot, const V3<T>& trans, const V3<T>& dims_b,
                           V3<T> out[8]) {
    T hx = dims_b.x * T(0.5), hy = dims_b.y * T(0.5), hz = dims_b.z * T(0.5);
    for (int i = 0; i < 8; ++i) {
        V3<T> c{(i & 1) ? hx : -hx, (i & 2) ? hy : -hy, (i & 4) ? hz : -hz};
        out[i] = trans + rotate_by_rotvec(rot, c);
    }
}

// Moving-part corners for one frame (bit-order, pose applied).
template <class T>
void assemble_moving_corners(const V3<T>& rot, const V3<T>& trans, const V3<T>& dims_b,
                             const V3<T>& dims_m, const T& offset, const T& extent, int edge,
                             const T& alpha, V3<T> out[8]) {
    const EdgeFrame& ef = edge_frame(edge);
    T hx = dims_b.x * T(0.5), hy = dims_b.y * T(0.5), hz = dims_b.z * T(0.5);
    V3<T> a{T(ef.a_unit.x()) * hx, T(ef.a_unit.y()) * hy, T(ef.a_unit.z()) * hz};
    V3<T> b{T(ef.b_unit.x()) * hx, T(ef.b_unit.y()) * hy, T(ef.b_unit.z()) * hz};
    V3<T> ab = b - a;
    T edge_len = sqrt(dot(ab, ab));
    V3<T> e1 = (T(1.0) / edge_len) * ab;               // along edge (a -> b)
    V3<T> w{T(ef.across.x()), T(ef.across.y()), T(ef.across.z())};
    V3<T> n{T(0.0), T(0.0), T(-1.0)};                  // outward (toward camera)

    // door center at the closed state
    V3<T> seg_center = a + (offset + extent * T(0.5)) * ab;
    V3<T> center = seg_center + (dims_m.y * T(0.5)) * w + (dims_m.z * T(0.5)) * n;
    T hl = dims_m.x * T(0.5), hw = dims_m.y * T(0.5), ht = dims_m.z * T(0.5);
    for (int i = 0; i < 8; ++i) {
        T s1 = (i & 1) ? hl : -hl, s2 = (i & 2) ? hw : -hw, s3 = (i & 4) ? ht : -ht;
        out[i] = center + s1 * e1 + s2 * w + s3 * n;
    }

    // swing about the hinge line through a with direction d_sign * e1
    V3<T> wrot = (T(ef.d_sign) * alpha) * e1;
    for (int i = 0; i < 8; ++i) {
        out[i] = a + rotate_by_rotvec(wrot, out[i] - a);
    }

    // rigid pose last
    for (int i = 0; i < 8; ++i) {
        out[i] = trans + rotate_by_rotvec(rot, out[i]);
    }
}

// Assemble the 16 corners (8 base then 8 moving) for one frame.
// Templated over the scalar so the same code serves double and dual paths.
template <class T>
void assemble_corners(const V3<T>& rot, const V3<T>& trans, const V3<T>& dims_b,
                      const V3<T>& dims_m, const T& offset, const T& extent, int edge,
                      const T& alpha, V3<T> out[16]) {
    assemble_base_corners(rot, trans, dims_b, out);
    assemble_moving_corners(rot, trans, dims_b, dims_m, offset, extent, edge, alpha, out + 8);
}

}  // namespace detail

struct AssembledFrame {
    std::array<Vec3, 8> base;
    std::array<Vec3, 8> moving;

    std::array<Vec3, 16> all() const {
        std::array<Vec3, 16> r;
        std::copy(base.begin(), base.end(), r.begin());
        std::copy(moving.begin(), moving.end(), r.begin() + 8);
        return r;
    }
};

// World-space corners at frame t. apply_pose=false assembles in the object
// (canonical) frame, used by evaluation for pose-invariant normalization.
inline AssembledFrame assemble(const ArticulatedModel& m, int t, bool apply_pose = true) {
    m.validate();
    if (t < 0 || t >= static_cast<int>(m.angles.size()))
        throw std::out_of_range("assemble: frame index out of range");
    V3<double> out[16];
    V3<double> rot = apply_pose ? from_vec3(m.pose.rot) : V3<double>{0, 0, 0};
    V3<double> trans = apply_pose ? from_vec3(m.pose.trans) : V3<double>{0, 0, 0};
    detail::assemble_corners<double>(rot, trans, from_vec3(m.base.dims), from_vec3(m.moving.dims),
                                     m.hinge.offset, m.hinge.extent, m.hinge.edge, m.angles[t],
                                     out);
    AssembledFrame f;
    for (int i = 0; i < 8; ++i) f.base[i] = to_vec3(out[i]);
    for (int i = 0; i < 8; ++i) f.moving[i] = to_vec3(out[i + 8]);
    return f;
}

// World-space hinge line (independent of the frame's opening angle).
struct HingeLine {
    Vec3 start, end;  // hinge segment endpoints
    Vec3 dir;         // unit hinge direction (rotation sign convention)
};

inline HingeLine hinge_line(const ArticulatedModel& m) {
    const detail::EdgeFrame& ef = detail::edge_frame(m.hinge.edge);
    Vec3 h = 0.5 * m.base.dims;
    Vec3 a = ef.a_unit.cwiseProduct(h), b = ef.b_unit.cwiseProduct(h);
    Vec3 s0 = a + m.hinge.offset * (b - a);
    Vec3 s1 = a + (m.hinge.offset + m.hinge.extent) * (b - a);
    Mat3 R = axis_angle_to_matrix(m.pose.rot);
    HingeLine hl;
    hl.start = R * s0 + m.pose.trans;
    hl.end = R * s1 + m.pose.trans;
    hl.dir = R * (ef.d_sign * (b - a).normalized());
    return hl;
}

// Motion parameters implied by a model: hinge axis in world space plus the
// per-frame opening angles in degrees.
inline MotionParams derive_motion(const ArticulatedModel& m) {
    HingeLine hl = hinge_line(m);
    MotionParams mp;
    mp.origin = hl.start;
    mp.direction = hl.dir;
    mp.states_deg.reserve(m.angles.size());
    for (double a : m.angles) mp.states_deg.push_back(rad2deg(a));
    return mp;
}

// ---------------------------------------------------------------------------
// Sampling / extents
// ---------------------------------------------------------------------------

// Area-weighted uniform samples on the surfaces of one or more cuboids given
// by their 8 corners (bit-order). Deterministic in the seed.
inline std::vector<Vec3> sample_surface(std::span<const std::array<Vec3, 8>> boxes, int n,
                                        std::uint64_t seed) {
    if (n < 0) throw std::invalid_argument("sample_surface: negative sample count");
    struct Face {
        Vec3 o, u, v;
        double cum;
    };
    std::vector<Face> faces;
    faces.reserve(boxes.size() * 6);
    double total = 0.0;
    for (const auto& c : boxes) {
        for (int k = 0; k < 3; ++k) {
            int du = 1 << ((k + 1) % 3), dv = 1 << ((k + 2) % 3);
            for (int s = 0; s < 2; ++s) {
                int base = s << k;
                Vec3 o = c[base];
                Vec3 u = c[base + du] - o;
                Vec3 v = c[base + dv] - o;
                double area = u.cross(v).norm();
                total += area;
                faces.push_back({o, u, v, total});
            }
        }
    }
    if (total <= 0.0) throw std::invalid_argument("sample_surface: zero-area surface");
    Rng rng(seed);
    std::vector<Vec3> pts;
    pts.reserve(n);
    for (int i = 0; i < n; ++i) {
        double r = rng.uniform() * total;
        auto it = std::lower_bound(faces.begin(), faces.end(), r,
                                   [](const Face& f, double x) { return f.cum < x; });
        if (it == faces.end()) --it;
        pts.push_back(it->o + rng.uniform() * it->u + rng.uniform() * it->v);
    }
    return pts;
}

inline std::vector<Vec3> sample_surface(const std::array<Vec3, 8>& box, int n, std::uint64_t seed) {
    return sample_surface(std::span<const std::array<Vec3, 8>>(&box, 1), n, seed);
}

// Largest axis-aligned bounding-box extent of a point set.
inline double max_dimension(std::span<const Vec3> pts) {
    if (pts.empty()) throw std::invalid_argument("max_dimension: empty point set");
    Vec3 lo = pts[0], hi = pts[0];
    for (const Vec3& p : pts) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    return (hi - lo).maxCoeff();
}

}  // namespace cubefit
