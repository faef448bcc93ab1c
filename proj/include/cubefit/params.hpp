#pragma once

#include <Eigen/Core>
#include <stdexcept>

#include "core.hpp"
#include "dual.hpp"
#include "geometry.hpp"

namespace cubefit {

// Flat optimization vector for a video with N frames:
//   [0..2]   rotation (axis-angle)
//   [3..5]   translation
//   [6..8]   log-dims base
//   [9..11]  log-dims moving
//   [12]     hinge offset (unconstrained; squashed)
//   [13]     hinge extent (unconstrained; squashed)
//   [14..]   per-frame opening angles (radians)
// The hinge edge is categorical and fixed per run (template choice), so it is
// not part of the vector. Dimensions are optimized in log space (always
// positive); offset/extent pass through sigmoids such that extent lies in
// (0,1) and offset + extent <= 1 by construction.
namespace param {
inline constexpr int kRot = 0;
inline constexpr int kTrans = 3;
inline constexpr int kLogDimsBase = 6;
inline constexpr int kLogDimsMoving = 9;
inline constexpr int kOffset = 12;
inline constexpr int kExtent = 13;
inline constexpr int kAlpha = 14;
inline constexpr int kShared = 14;   // leading parameters shared by all frames
inline constexpr int kActive = 15;   // shared + the single frame's angle

inline int size(int n_frames) { return kShared + n_frames; }
inline int n_frames(const Eigen::VectorXd& p) {
    if (p.size() < kShared + 1) throw std::invalid_argument("params: vector too short");
    return static_cast<int>(p.size()) - kShared;
}
}  // namespace param

template <class T>
T sigmoid_t(const T& x) {
    return T(1.0) / (T(1.0) + exp(-x));
}
inline double sigmoid_t(double x) { return sigmoid(x); }

// extent = sigmoid(u_ext); offset = sigmoid(u_off) * (1 - extent)
template <class T>
void squash_hinge(const T& u_off, const T& u_ext, T& offset, T& extent) {
    extent = sigmoid_t(u_ext);
    offset = sigmoid_t(u_off) * (T(1.0) - extent);
}

inline double logit(double y) { return std::log(y / (1.0 - y)); }

// Inverse of squash_hinge with clamping away from the saturated ends.
inline void unsquash_hinge(double offset, double extent, double& u_off, double& u_ext) {
    double e = clampd(extent, 1e-3, 1.0 - 1e-3);
    u_ext = logit(e);
    double f = clampd(offset / (1.0 - e), 1e-3, 1.0 - 1e-3);
    u_off = logit(f);
}

inline Eigen::VectorXd pack_model(const ArticulatedModel& m) {
    m.validate();
    Eigen::VectorXd p(param::size(static_cast<int>(m.angles.size())));
    p.segment<3>(param::kRot) = m.pose.rot;
    p.segment<3>(param::kTrans) = m.pose.trans;
    p.segment<3>(param::kLogDimsBase) = m.base.dims.array().log().matrix();
    p.segment<3>(param::kLogDimsMoving) = m.moving.dims.array().log().matrix();
    unsquash_hinge(m.hinge.offset, m.hinge.extent, p[param::kOffset], p[param::kExtent]);
    for (size_t t = 0; t < m.angles.size(); ++t) p[param::kAlpha + t] = m.angles[t];
    return p;
}

inline ArticulatedModel unpack_model(const Eigen::VectorXd& p, int edge) {
    int n = param::n_frames(p);
    ArticulatedModel m;
    m.pose.rot = p.segment<3>(param::kRot);
    m.pose.trans = p.segment<3>(param::kTrans);
    m.base.dims = p.segment<3>(param::kLogDimsBase).array().exp().matrix();
    m.moving.dims = p.segment<3>(param::kLogDimsMoving).array().exp().matrix();
    m.hinge.edge = edge;
    squash_hinge(p[param::kOffset], p[param::kExtent], m.hinge.offset, m.hinge.extent);
    m.angles.assign(p.data() + param::kAlpha, p.data() + param::kAlpha + n);
    return m;
}

using D15 = Dual<param::kActive>;

// Duals of the 14 shared parameters, built once per parameter vector. Slot i
// of each dual tracks d/d(active param i); slot 14 is reserved for the
// per-frame angle.
struct SharedDuals {
    V3<D15> rot, trans, db, dm;
    D15 offset, extent;

    explicit SharedDuals(const Eigen::VectorXd& p) {
        param::n_frames(p);  // length check
        rot = {D15::var(p[0], 0), D15::var(p[1], 1), D15::var(p[2], 2)};
        trans = {D15::var(p[3], 3), D15::var(p[4], 4), D15::var(p[5], 5)};
        db = {exp(D15::var(p[6], 6)), exp(D15::var(p[7], 7)), exp(D15::var(p[8], 8))};
        dm = {exp(D15::var(p[9], 9)), exp(D15::var(p[10], 10)), exp(D15::var(p[11], 11))};
        squash_hinge(D15::var(p[param::kOffset], 12), D15::var(p[param::kExtent], 13), offset,
                     extent);
    }
};

inline D15 alpha_dual(const Eigen::VectorXd& p, int t) {
    if (t < 0 || t >= param::n_frames(p))
        throw std::out_of_range("alpha_dual: frame out of range");
    return D15::var(p[param::kAlpha + t], 14);
}

// Assemble frame-t corners as duals over the 15 active parameters
// (14 shared + this frame's angle).
inline void assemble_frame_dual(const Eigen::VectorXd& p, int edge, int t, V3<D15> out[16]) {
    SharedDuals s(p);
    detail::assemble_corners<D15>(s.rot, s.trans, s.db, s.dm, s.offset, s.extent, edge,
                                  alpha_dual(p, t), out);
}

// Plain-double assembly from the same parameterization.
inline void assemble_frame_value(const Eigen::VectorXd& p, int edge, int t, V3<double> out[16]) {
    int n = param::n_frames(p);
    if (t < 0 || t >= n) throw std::out_of_range("assemble_frame_value: frame out of range");
    V3<double> rot{p[0], p[1], p[2]}, trans{p[3], p[4], p[5]};
    V3<double> db{std::exp(p[6]), std::exp(p[7]), std::exp(p[8])};
    V3<double> dm{std::exp(p[9]), std::exp(p[10]), std::exp(p[11])};
    double offset, extent;
    squash_hinge(p[param::kOffset], p[param::kExtent], offset, extent);
    detail::assemble_corners<double>(rot, trans, db, dm, offset, extent, edge,
                                     p[param::kAlpha + t], out);
}

// Scatter a 15-slot frame gradient into the full parameter gradient.
inline void scatter_frame_grad(const double g[param::kActive], int t, Eigen::VectorXd& grad) {
    for (int i = 0; i < param::kShared; ++i) grad[i] += g[i];
    grad[param::kAlpha + t] += g[param::kShared];
}

}  // namespace cubefit
