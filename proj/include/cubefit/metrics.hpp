#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "core.hpp"
#include "geometry.hpp"
#include "kdtree.hpp"

namespace cubefit {

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

struct Thresholds {
    double cd = 0.5;
    double rot_deg = 10.0;
    double trans = 0.5;
    double scale = 0.3;
    double origin = 0.5;
    double axis_deg = 10.0;
    double dir_deg = 10.0;
    double state_deg = 10.0;

    void validate() const {
        for (double v : {cd, rot_deg, trans, scale, origin, axis_deg, dir_deg, state_deg})
            if (!(v > 0.0)) throw std::invalid_argument("Thresholds: all thresholds must be > 0");
    }
};

struct FrameMetrics {
    double cd_object = 0.0, cd_moving = 0.0;
    double rot_err_deg = 0.0, trans_err = 0.0, scale_err = 0.0;
    double origin_err = 0.0, axis_err_deg = 0.0, dir_err_deg = 0.0, state_err_deg = 0.0;
};

struct AggregateOptions {
    // Motion accuracies (O/OA/OAD/AccM) additionally require the frame's
    // reconstruction+pose pass. Default on.
    bool condition_motion_on_rp = true;
    // AccRPM composes AccRP with full motion (axis+direction+state) when
    // true, with the state pass alone when false.
    bool accrpm_full_motion = true;
};

struct ErrorStat {
    double mean = 0.0, se = 0.0;
};

struct MetricStats {
    ErrorStat cd_object, cd_moving, rot_deg, trans, scale, origin, axis_deg, dir_deg, state_deg;
};

// All accuracies in percent.
struct AccuracySet {
    double object_cd = 0.0, moving_cd = 0.0, accr = 0.0;
    double rot = 0.0, trans = 0.0, scale = 0.0, accp = 0.0;
    double o = 0.0, oa = 0.0, oad = 0.0, accm = 0.0;
    double accrp = 0.0, rpoa = 0.0, accrpm = 0.0;
};

struct VideoFrames {
    std::string id;
    std::string category;
    std::vector<FrameMetrics> frames;
};

struct GroupReport {
    int n_videos = 0;
    MetricStats errors;
    AccuracySet acc;
};

struct VideoSummary {
    std::string id;
    std::string category;
    FrameMetrics mean;      // per-video mean errors
    AccuracySet acc;        // per-video accuracies (percent of frames)
};

struct BenchReport {
    std::vector<VideoSummary> videos;
    GroupReport dataset;
    std::vector<std::pair<std::string, GroupReport>> categories;  // sorted by name
    Thresholds thresholds;
    AggregateOptions options;
};

// ---------------------------------------------------------------------------
// Rigid alignment
// ---------------------------------------------------------------------------

// Least-squares rigid transform (R, T) minimizing sum |R*src + T - dst|^2
// over exact correspondences (Arun/Kabsch SVD with reflection guard).
inline std::pair<Mat3, Vec3> kabsch(std::span<const Vec3> src, std::span<const Vec3> dst) {
    if (src.size() != dst.size()) throw std::invalid_argument("kabsch: size mismatch");
    size_t n = src.size();
    if (n < 3) throw std::invalid_argument("kabsch: need at least 3 points");
    Vec3 cs = Vec3::Zero(), cd = Vec3::Zero();
    for (size_t i = 0; i < n; ++i) {
        cs += src[i];
        cd += dst[i];
    }
    cs /= static_cast<double>(n);
    cd /= static_cast<double>(n);
    Mat3 H = Mat3::Zero();
    for (size_t i = 0; i < n; ++i) H += (src[i] - cs) * (dst[i] - cd).transpose();
    Eigen::JacobiSVD<Mat3> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Vec3 sv = svd.singularValues();
    if (!(sv(1) > 1e-12 * std::max(sv(0), 1e-300)))
        throw std::runtime_error("kabsch: degenerate (collinear) configuration");
    Mat3 U = svd.matrixU(), V = svd.matrixV();
    Mat3 D = Mat3::Identity();
    if ((V * U.transpose()).determinant() < 0.0) D(2, 2) = -1.0;
    Mat3 R = V * D * U.transpose();
    return {R, cd - R * cs};
}

struct IcpResult {
    Mat3 R = Mat3::Identity();
    Vec3 T = Vec3::Zero();
    double residual = 0.0;            // final mean squared correspondence distance
    std::vector<double> trace;        // residual after each iteration
};

// Point-to-point ICP, centroid-initialized. Inputs are expected to be
// max-dimension normalized by the caller.
inline IcpResult icp_align(std::span<const Vec3> pred, std::span<const Vec3> gt,
                           int max_iter = 100, double tol = 1e-6) {
    if (pred.empty() || gt.empty()) throw std::invalid_argument("icp_align: empty input");
    Vec3 cp = Vec3::Zero(), cg = Vec3::Zero();
    for (const Vec3& p : pred) cp += p;
    for (const Vec3& g : gt) cg += g;
    cp /= static_cast<double>(pred.size());
    cg /= static_cast<double>(gt.size());

    IcpResult r;
    r.T = cg - cp;
    KdTree3 tree(gt);
    std::vector<Vec3> corr(pred.size());
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iter; ++it) {
        for (size_t i = 0; i < pred.size(); ++i) {
            Vec3 q = r.R * pred[i] + r.T;
            corr[i] = gt[tree.nearest(q).second];
        }
        auto [R2, T2] = kabsch(pred, corr);
        r.R = R2;
        r.T = T2;
        double e = 0.0;
        for (size_t i = 0; i < pred.size(); ++i) e += (r.R * pred[i] + r.T - corr[i]).squaredNorm();
        e /= static_cast<double>(pred.size());
        r.trace.push_back(e);
        r.residual = e;
        if (e < 1e-18 || (it > 0 && std::abs(prev - e) <= tol * std::max(prev, 1e-300))) break;
        prev = e;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Chamfer
// ---------------------------------------------------------------------------

namespace detail {
inline double mean_sq_nn(std::span<const Vec3> from, std::span<const Vec3> to) {
    double s = 0.0;
    if (to.size() <= 32) {
        for (const Vec3& p : from) {
            double best = std::numeric_limits<double>::infinity();
            for (const Vec3& q : to) best = std::min(best, (q - p).squaredNorm());
            s += best;
        }
    } else {
        KdTree3 tree(to);
        for (const Vec3& p : from) s += tree.nearest(p).first;
    }
    return s / static_cast<double>(from.size());
}
}  // namespace detail

// Symmetric sum of mean squared nearest-neighbor distances.
inline double chamfer(std::span<const Vec3> a, std::span<const Vec3> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("chamfer: empty point set");
    return detail::mean_sq_nn(a, b) + detail::mean_sq_nn(b, a);
}

// ---------------------------------------------------------------------------
// Reconstruction / pose / motion errors
// ---------------------------------------------------------------------------

struct ReconResult {
    double cd = 0.0;       // chamfer after normalization + ICP
    Mat3 R = Mat3::Identity();
    Vec3 T = Vec3::Zero();
    double pred_maxdim = 0.0, gt_maxdim = 0.0;
};

// Sample both geometries, normalize each cloud by the provided max-dimension,
// align pred->gt with ICP, then chamfer. The same seed drives both samplers
// so identical geometry yields identical clouds.
inline ReconResult reconstruction_error(std::span<const std::array<Vec3, 8>> pred_boxes,
                                        double pred_maxdim,
                                        std::span<const std::array<Vec3, 8>> gt_boxes,
                                        double gt_maxdim, int n_samples, std::uint64_t seed) {
    if (!(pred_maxdim > 0.0 && gt_maxdim > 0.0))
        throw std::invalid_argument("reconstruction_error: non-positive max dimension");
    std::vector<Vec3> ps = sample_surface(pred_boxes, n_samples, seed);
    std::vector<Vec3> gs = sample_surface(gt_boxes, n_samples, seed);
    for (Vec3& p : ps) p /= pred_maxdim;
    for (Vec3& g : gs) g /= gt_maxdim;
    IcpResult icp = icp_align(ps, gs);
    for (Vec3& p : ps) p = icp.R * p + icp.T;
    ReconResult r;
    r.cd = chamfer(ps, gs);
    r.R = icp.R;
    r.T = icp.T;
    r.pred_maxdim = pred_maxdim;
    r.gt_maxdim = gt_maxdim;
    return r;
}

// rot/trans from the ICP alignment transform; scale from the max-dim ratio.
inline void pose_errors(const Mat3& R, const Vec3& T, double pred_maxdim, double gt_maxdim,
                        double& rot_deg, double& trans, double& scale_err) {
    rot_deg = rad2deg(std::acos(clampd((R.trace() - 1.0) * 0.5, -1.0, 1.0)));
    trans = T.norm();
    double r = gt_maxdim / pred_maxdim;
    scale_err = 1.0 - std::min(r, 1.0 / r);
}

// Origin: point-to-line distance to the GT axis. Axis: undirected angle
// (<= 90 deg). Direction: directed angle (<= 180 deg). State: absolute
// difference in degrees, no wrapping.
inline void motion_errors(const MotionParams& pred, const MotionParams& gt, int t,
                          double& origin_err, double& axis_err_deg, double& dir_err_deg,
                          double& state_err_deg) {
    if (std::abs(pred.direction.norm() - 1.0) > 1e-6 || std::abs(gt.direction.norm() - 1.0) > 1e-6)
        throw std::invalid_argument("motion_errors: directions must be unit length");
    if (t < 0 || t >= static_cast<int>(pred.states_deg.size()) ||
        t >= static_cast<int>(gt.states_deg.size()))
        throw std::out_of_range("motion_errors: frame index out of range");
    Vec3 dp = pred.origin - gt.origin;
    origin_err = (dp - dp.dot(gt.direction) * gt.direction).norm();
    double d = pred.direction.dot(gt.direction);
    axis_err_deg = rad2deg(std::acos(clampd(std::abs(d), 0.0, 1.0)));
    dir_err_deg = rad2deg(std::acos(clampd(d, -1.0, 1.0)));
    state_err_deg = std::abs(pred.states_deg[t] - gt.states_deg[t]);
}

// ---------------------------------------------------------------------------
// Frame evaluation
// ---------------------------------------------------------------------------

// Full per-frame metric computation between a predicted and a GT model.
// The prediction's motion axis is mapped through the object-level ICP
// transform (in normalized units) so motion is judged in the GT frame.
inline FrameMetrics frame_eval(const ArticulatedModel& pred, const ArticulatedModel& gt, int t,
                               int n_samples = 10000, std::uint64_t seed = 0) {
    AssembledFrame pw = assemble(pred, t), gw = assemble(gt, t);
    AssembledFrame pc = assemble(pred, t, /*apply_pose=*/false);
    AssembledFrame gc = assemble(gt, t, /*apply_pose=*/false);

    std::array<Vec3, 16> pc_all = pc.all(), gc_all = gc.all();
    double pmax_obj = max_dimension(pc_all);
    double gmax_obj = max_dimension(gc_all);
    double pmax_mov = max_dimension(pc.moving);
    double gmax_mov = max_dimension(gc.moving);

    std::array<std::array<Vec3, 8>, 2> pboxes{pw.base, pw.moving}, gboxes{gw.base, gw.moving};
    ReconResult obj = reconstruction_error(pboxes, pmax_obj, gboxes, gmax_obj, n_samples,
                                           derive_seed(seed, 0x0b1ec7, t));
    std::array<std::array<Vec3, 8>, 1> pmov{pw.moving}, gmov{gw.moving};
    ReconResult mov = reconstruction_error(pmov, pmax_mov, gmov, gmax_mov, n_samples,
                                           derive_seed(seed, 0x30f1e5, t));

    FrameMetrics fm;
    fm.cd_object = obj.cd;
    fm.cd_moving = mov.cd;
    pose_errors(obj.R, obj.T, pmax_obj, gmax_obj, fm.rot_err_deg, fm.trans_err, fm.scale_err);

    MotionParams mp = derive_motion(pred), mg = derive_motion(gt);
    // into normalized object space, then through the ICP alignment
    mp.origin = obj.R * (mp.origin / pmax_obj) + obj.T;
    mp.direction = obj.R * mp.direction;
    mg.origin /= gmax_obj;
    motion_errors(mp, mg, t, fm.origin_err, fm.axis_err_deg, fm.dir_err_deg, fm.state_err_deg);
    return fm;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

namespace detail {

struct FramePass {
    bool obj_cd, mov_cd, accr, rot, trans, scale, accp, o, oa, oad, accm, accrp, rpoa, accrpm;
};

inline FramePass frame_pass(const FrameMetrics& f, const Thresholds& th,
                            const AggregateOptions& opt) {
    FramePass p;
    p.obj_cd = f.cd_object <= th.cd;
    p.mov_cd = f.cd_moving <= th.cd;
    p.accr = p.obj_cd && p.mov_cd;
    p.rot = f.rot_err_deg <= th.rot_deg;
    p.trans = f.trans_err <= th.trans;
    p.scale = f.scale_err <= th.scale;
    p.accp = p.rot && p.trans && p.scale;
    p.accrp = p.accr && p.accp;
    bool o_raw = f.origin_err <= th.origin;
    bool ax = f.axis_err_deg <= th.axis_deg;
    bool di = f.dir_err_deg <= th.dir_deg;
    bool st = f.state_err_deg <= th.state_deg;
    bool cond = !opt.condition_motion_on_rp || p.accrp;
    p.o = o_raw && cond;
    p.oa = p.o && ax;
    p.oad = p.oa && di;
    p.accm = ax && di && st && cond;
    p.rpoa = p.accrp && o_raw && ax;
    p.accrpm = p.accrp && (opt.accrpm_full_motion ? (ax && di && st) : st);
    return p;
}

inline AccuracySet video_accuracy(const std::vector<FrameMetrics>& frames, const Thresholds& th,
                                  const AggregateOptions& opt) {
    double n = static_cast<double>(frames.size());
    AccuracySet a;
    for (const FrameMetrics& f : frames) {
        FramePass p = frame_pass(f, th, opt);
        a.object_cd += p.obj_cd;
        a.moving_cd += p.mov_cd;
        a.accr += p.accr;
        a.rot += p.rot;
        a.trans += p.trans;
        a.scale += p.scale;
        a.accp += p.accp;
        a.o += p.o;
        a.oa += p.oa;
        a.oad += p.oad;
        a.accm += p.accm;
        a.accrp += p.accrp;
        a.rpoa += p.rpoa;
        a.accrpm += p.accrpm;
    }
    double* vals = &a.object_cd;
    for (int i = 0; i < 14; ++i) vals[i] = vals[i] / n * 100.0;
    return a;
}

inline FrameMetrics video_mean(const std::vector<FrameMetrics>& frames) {
    FrameMetrics m;
    double n = static_cast<double>(frames.size());
    for (const FrameMetrics& f : frames) {
        m.cd_object += f.cd_object;
        m.cd_moving += f.cd_moving;
        m.rot_err_deg += f.rot_err_deg;
        m.trans_err += f.trans_err;
        m.scale_err += f.scale_err;
        m.origin_err += f.origin_err;
        m.axis_err_deg += f.axis_err_deg;
        m.dir_err_deg += f.dir_err_deg;
        m.state_err_deg += f.state_err_deg;
    }
    double* vals = &m.cd_object;
    for (int i = 0; i < 9; ++i) vals[i] = vals[i] / n;
    return m;
}

inline ErrorStat mean_se(std::span<const double> xs) {
    ErrorStat s;
    double n = static_cast<double>(xs.size());
    for (double x : xs) s.mean += x;
    s.mean /= n;
    if (xs.size() > 1) {
        double var = 0.0;
        for (double x : xs) var += (x - s.mean) * (x - s.mean);
        var /= (n - 1.0);
        s.se = std::sqrt(var / n);
    }
    return s;
}

inline GroupReport group_report(std::span<const VideoSummary> vids) {
    GroupReport g;
    g.n_videos = static_cast<int>(vids.size());
    std::vector<double> col(vids.size());
    auto stat = [&](auto pick) {
        for (size_t i = 0; i < vids.size(); ++i) col[i] = pick(vids[i].mean);
        return mean_se(col);
    };
    g.errors.cd_object = stat([](const FrameMetrics& m) { return m.cd_object; });
    g.errors.cd_moving = stat([](const FrameMetrics& m) { return m.cd_moving; });
    g.errors.rot_deg = stat([](const FrameMetrics& m) { return m.rot_err_deg; });
    g.errors.trans = stat([](const FrameMetrics& m) { return m.trans_err; });
    g.errors.scale = stat([](const FrameMetrics& m) { return m.scale_err; });
    g.errors.origin = stat([](const FrameMetrics& m) { return m.origin_err; });
    g.errors.axis_deg = stat([](const FrameMetrics& m) { return m.axis_err_deg; });
    g.errors.dir_deg = stat([](const FrameMetrics& m) { return m.dir_err_deg; });
    g.errors.state_deg = stat([](const FrameMetrics& m) { return m.state_err_deg; });
    double n = static_cast<double>(vids.size());
    double* acc = &g.acc.object_cd;
    for (const VideoSummary& v : vids) {
        const double* va = &v.acc.object_cd;
        for (int i = 0; i < 14; ++i) acc[i] += va[i];
    }
    for (int i = 0; i < 14; ++i) acc[i] /= n;
    return g;
}

}  // namespace detail

// Per-frame pass/fail -> per-video fractions -> dataset means; errors as
// mean +- standard error over per-video means.
inline BenchReport aggregate(std::span<const VideoFrames> videos, const Thresholds& th,
                             const AggregateOptions& opt = {}) {
    th.validate();
    if (videos.empty()) throw std::invalid_argument("aggregate: no videos");
    BenchReport rep;
    rep.thresholds = th;
    rep.options = opt;
    for (const VideoFrames& v : videos) {
        if (v.frames.empty()) throw std::invalid_argument("aggregate: video '" + v.id + "' has no frames");
        VideoSummary s;
        s.id = v.id;
        s.category = v.category;
        s.mean = detail::video_mean(v.frames);
        s.acc = detail::video_accuracy(v.frames, th, opt);
        rep.videos.push_back(std::move(s));
    }
    rep.dataset = detail::group_report(rep.videos);
    std::map<std::string, std::vector<VideoSummary>> by_cat;
    for (const VideoSummary& v : rep.videos) by_cat[v.category].push_back(v);
    for (const auto& [cat, vids] : by_cat)
        rep.categories.emplace_back(cat, detail::group_report(vids));
    return rep;
}

}  // namespace cubefit
