#pragma once

#include <array>
#include <climits>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cubefit/mask.hpp"
#include "cubefit/metrics.hpp"
#include "cubefit/params.hpp"
#include "cubefit/render.hpp"

namespace cubefit {

enum class Hand { left = 0, right = 1 };

inline const char* hand_name(Hand h) { return h == Hand::left ? "left" : "right"; }

inline Hand hand_from_name(const std::string& s) {
    if (s == "left") return Hand::left;
    if (s == "right") return Hand::right;
    throw std::invalid_argument("unknown hand: " + s);
}

// Per-frame human cues: wrist positions for both hands and the mean person
// depth, all in camera coordinates.
struct HumanObservation {
    std::vector<Vec3> left, right;
    std::vector<double> mean_z;

    const std::vector<Vec3>& hand(Hand h) const { return h == Hand::left ? left : right; }

    void validate(int n_frames) const {
        if (static_cast<int>(left.size()) != n_frames ||
            static_cast<int>(right.size()) != n_frames ||
            static_cast<int>(mean_z.size()) != n_frames)
            throw std::invalid_argument("human observation: arrays must match frame count");
    }
};

// One observed video: camera, per-frame binary part masks, human cues.
struct VideoObservation {
    CameraIntrinsics cam;
    std::vector<SoftMask> object_mask, base_mask, moving_mask;  // one per frame
    HumanObservation human;

    int frames() const { return static_cast<int>(object_mask.size()); }

    void validate() const {
        cam.validate();
        int n = frames();
        if (n == 0) throw std::invalid_argument("video observation: no frames");
        if (base_mask.size() != object_mask.size() || moving_mask.size() != object_mask.size())
            throw std::invalid_argument("video observation: mask sequences must match length");
        for (int t = 0; t < n; ++t) {
            for (const SoftMask* m : {&object_mask[t], &base_mask[t], &moving_mask[t]})
                if (m->width != cam.width || m->height != cam.height)
                    throw std::invalid_argument("video observation: mask size != camera size");
        }
        human.validate(n);
    }
};

struct LossConfig {
    double w_sil = 1.0, w_dice = 1.0, w_over = 1.0, w_depth = 1.0, w_contact = 1.0;
    double eps_pen = 0.01;      // allowed inter-part penetration (metres)
    double lambda_depth = 0.1;  // depth agreement slack (metres)

    void validate() const {
        for (double w : {w_sil, w_dice, w_over, w_depth, w_contact})
            if (!(w >= 0.0)) throw std::invalid_argument("loss config: weights must be >= 0");
        if (!(eps_pen >= 0.0) || !(lambda_depth >= 0.0))
            throw std::invalid_argument("loss config: slacks must be >= 0");
    }
};

struct LossBreakdown {
    double sil = 0.0, dice = 0.0, over = 0.0, depth = 0.0, contact = 0.0;
    double total = 0.0;
};

// ---------------------------------------------------------------------------
// Mask-sequence losses
// ---------------------------------------------------------------------------

// Mean per-frame sum of squared per-pixel differences.
inline double loss_sil(const std::vector<SoftMask>& gt, const std::vector<SoftMask>& pred) {
    if (gt.empty() || gt.size() != pred.size())
        throw std::invalid_argument("loss_sil: sequences must be non-empty and equal length");
    double s = 0.0;
    for (size_t i = 0; i < gt.size(); ++i) {
        check_same_shape(gt[i], pred[i], "loss_sil");
        for (size_t j = 0; j < gt[i].data.size(); ++j) {
            double d = pred[i].data[j] - gt[i].data[j];
            s += d * d;
        }
    }
    return s / static_cast<double>(gt.size());
}

// Soft intersection-over-union; 1 when both masks are identically zero.
inline double soft_iou(const SoftMask& a, const SoftMask& b) {
    check_same_shape(a, b, "soft_iou");
    double inter = 0.0, uni = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        double x = a.data[i], y = b.data[i];
        inter += x * y;
        uni += x + y - x * y;
    }
    return uni == 0.0 ? 1.0 : inter / uni;
}

// Mean per-frame soft-IoU complement.
inline double loss_dice(const std::vector<SoftMask>& gt, const std::vector<SoftMask>& pred) {
    if (gt.empty() || gt.size() != pred.size())
        throw std::invalid_argument("loss_dice: sequences must be non-empty and equal length");
    double s = 0.0;
    for (size_t i = 0; i < gt.size(); ++i) s += 1.0 - soft_iou(gt[i], pred[i]);
    return s / static_cast<double>(gt.size());
}

// ---------------------------------------------------------------------------
// Separating-axis penetration depth
// ---------------------------------------------------------------------------

namespace detail {

// Minimum overlap over the 15 separating-axis candidates of two oriented
// boxes given by bit-ordered corners; 0 if any axis separates them.
// argmin (if given) receives the fixed axis slot (0-14), or -1 if separated.
template <class T>
T sat_depth(const V3<T>* A, const V3<T>* B, int* argmin = nullptr) {
    V3<T> ea[3], eb[3];
    for (int k = 0; k < 3; ++k) {
        ea[k] = A[1 << k] - A[0];
        eb[k] = B[1 << k] - B[0];
    }
    T best(0.0);
    int best_axis = -1;
    auto test_axis = [&](const V3<T>& axis_raw, int slot) -> bool {
        T n2 = dot(axis_raw, axis_raw);
        if (!(value_of(n2) > 1e-24)) return true;  // degenerate axis, skip
        V3<T> axis = (T(1.0) / sqrt(n2)) * axis_raw;
        T amin = dot(axis, A[0]), amax = amin;
        T bmin = dot(axis, B[0]), bmax = bmin;
        for (int i = 1; i < 8; ++i) {
            T pa = dot(axis, A[i]);
            amin = min(amin, pa);
            amax = max(amax, pa);
            T pb = dot(axis, B[i]);
            bmin = min(bmin, pb);
            bmax = max(bmax, pb);
        }
        T ov = min(amax, bmax) - max(amin, bmin);
        if (!(value_of(ov) > 0.0)) return false;  // separated
        if (best_axis < 0 || value_of(ov) < value_of(best)) {
            best = ov;
            best_axis = slot;
        }
        return true;
    };
    for (int k = 0; k < 3; ++k)
        if (!test_axis(ea[k], k)) {
            if (argmin) *argmin = -1;
            return T(0.0);
        }
    for (int k = 0; k < 3; ++k)
        if (!test_axis(eb[k], 3 + k)) {
            if (argmin) *argmin = -1;
            return T(0.0);
        }
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (!test_axis(cross(ea[i], eb[j]), 6 + 3 * i + j)) {
                if (argmin) *argmin = -1;
                return T(0.0);
            }
    if (argmin) *argmin = best_axis;
    return best;
}

}  // namespace detail

// Penetration depth between two posed cuboids (bit-ordered world corners).
inline double penetration_depth(const std::array<Vec3, 8>& a, const std::array<Vec3, 8>& b) {
    V3<double> A[8], B[8];
    for (int i = 0; i < 8; ++i) {
        A[i] = from_vec3(a[i]);
        B[i] = from_vec3(b[i]);
    }
    return detail::sat_depth<double>(A, B);
}

// ---------------------------------------------------------------------------
// Model-level regularizers
// ---------------------------------------------------------------------------

// Mean squared hinged penetration between base and moving parts.
inline double loss_overlap(const ArticulatedModel& m, const LossConfig& cfg = {}) {
    m.validate();
    cfg.validate();
    int n = static_cast<int>(m.angles.size());
    double s = 0.0;
    for (int t = 0; t < n; ++t) {
        AssembledFrame f = assemble(m, t);
        double e = penetration_depth(f.base, f.moving) - cfg.eps_pen;
        if (e > 0.0) s += e * e;
    }
    return s / static_cast<double>(n);
}

// Surface-area-weighted mean depth of the object at frame t.
inline double object_mean_depth(const ArticulatedModel& m, int t) {
    AssembledFrame f = assemble(m, t);
    const Vec3& db = m.base.dims;
    const Vec3& dm = m.moving.dims;
    double ab = 2.0 * (db.x() * db.y() + db.y() * db.z() + db.z() * db.x());
    double am = 2.0 * (dm.x() * dm.y() + dm.y() * dm.z() + dm.z() * dm.x());
    double zb = m.pose.trans.z();  // base centre
    double zm = 0.0;
    for (const Vec3& c : f.moving) zm += c.z();
    zm /= 8.0;
    return (ab * zb + am * zm) / (ab + am);
}

// Mean hinged disagreement between object depth and the person's mean depth.
inline double loss_depth(const ArticulatedModel& m, const HumanObservation& human,
                         const LossConfig& cfg = {}) {
    m.validate();
    cfg.validate();
    int n = static_cast<int>(m.angles.size());
    human.validate(n);
    double s = 0.0;
    for (int t = 0; t < n; ++t) {
        double e = std::abs(object_mean_depth(m, t) - human.mean_z[t]) - cfg.lambda_depth;
        if (e > 0.0) s += e;
    }
    return s / static_cast<double>(n);
}

namespace detail {

struct ContactFit {
    Mat3 R = Mat3::Identity();
    Vec3 T = Vec3::Zero();
    bool fallback = false;
};

// Best rigid map from the moving-part centroid track onto the wrist track.
// Falls back to pure translation when the tracks are too degenerate for a
// well-posed rotation (short or collinear).
inline ContactFit contact_solve(std::span<const Vec3> v, std::span<const Vec3> h) {
    ContactFit cf;
    try {
        auto [R, T] = kabsch(v, h);
        cf.R = R;
        cf.T = T;
    } catch (const std::exception&) {
        Vec3 cv = Vec3::Zero(), ch = Vec3::Zero();
        for (const Vec3& p : v) cv += p;
        for (const Vec3& p : h) ch += p;
        size_t n = v.size();
        cf.T = ch / static_cast<double>(n) - cv / static_cast<double>(n);
        cf.fallback = true;
    }
    return cf;
}

}  // namespace detail

// Total squared residual of the best rigid map from the moving-part centroid
// trajectory onto the chosen wrist trajectory.
inline double loss_contact(const ArticulatedModel& m, const HumanObservation& human, Hand hand) {
    m.validate();
    int n = static_cast<int>(m.angles.size());
    human.validate(n);
    std::vector<Vec3> v(n);
    for (int t = 0; t < n; ++t) {
        AssembledFrame f = assemble(m, t);
        Vec3 c = Vec3::Zero();
        for (const Vec3& p : f.moving) c += p;
        v[t] = c / 8.0;
    }
    const std::vector<Vec3>& h = human.hand(hand);
    detail::ContactFit cf = detail::contact_solve(v, h);
    double s = 0.0;
    for (int t = 0; t < n; ++t) s += (cf.R * v[t] + cf.T - h[t]).squaredNorm();
    return s;
}

// ---------------------------------------------------------------------------
// Fused video objective
// ---------------------------------------------------------------------------

// Evaluates the full objective (and its analytic gradient) for one video.
// Owns binarized mask copies and reusable raster buffers, so one instance
// serves one optimization run; instances are independent across threads.
//
// A frame whose corners fall behind the near plane (or whose silhouette
// degenerates) contributes a fixed 1e4 penalty to the silhouette component
// with zero image gradient; the 3-D terms are still evaluated.
class ObjectiveEngine {
public:
    struct Result {
        LossBreakdown loss;
        bool has_grad = false;
        Eigen::VectorXd g_sil, g_dice, g_over, g_depth, g_contact, g_total;
        // One branch word per frame plus one contact word: hull corner sets,
        // active separating axis and hinge states. Finite-difference probes
        // compare these to detect crossing a non-smooth boundary.
        std::vector<std::uint64_t> signature;
        int invalid_frames = 0;
    };

    ObjectiveEngine(const VideoObservation& video, const LossConfig& lcfg = {},
                    const RenderConfig& rcfg = {})
        : cam_(video.cam), lcfg_(lcfg), rcfg_(rcfg), human_(video.human) {
        video.validate();
        lcfg.validate();
        rcfg.validate();
        n_ = video.frames();
        w_ = cam_.width;
        h_ = cam_.height;
        size_t wh = static_cast<size_t>(w_) * h_;
        gt_obj_.resize(wh * n_);
        gt_base_.resize(wh * n_);
        gt_mov_.resize(wh * n_);
        tot_obj_.resize(n_);
        tot_base_.resize(n_);
        tot_mov_.resize(n_);
        for (int t = 0; t < n_; ++t) {
            binarize(video.object_mask[t], gt_obj_.data() + wh * t, tot_obj_[t]);
            binarize(video.base_mask[t], gt_base_.data() + wh * t, tot_base_[t]);
            binarize(video.moving_mask[t], gt_mov_.data() + wh * t, tot_mov_[t]);
        }
    }

    int frames() const { return n_; }
    const LossConfig& loss_config() const { return lcfg_; }
    const RenderConfig& render_config() const { return rcfg_; }

    Result eval(const Eigen::VectorXd& params, int edge, Hand hand, bool want_grad) {
        if (param::n_frames(params) != n_)
            throw std::invalid_argument("objective: parameter frame count != video frame count");
        HingeSpec{edge, 0.0, 1.0}.validate();  // edge range check
        const int P = static_cast<int>(params.size());
        Result r;
        r.signature.assign(n_ + 1, 0);
        if (want_grad) {
            r.has_grad = true;
            for (Eigen::VectorXd* g : {&r.g_sil, &r.g_dice, &r.g_over, &r.g_depth, &r.g_contact})
                *g = Eigen::VectorXd::Zero(P);
        }

        // shared (frame-independent) quantities
        ArticulatedModel shape = unpack_model(params, edge);
        V3<double> rot_v = from_vec3(shape.pose.rot), trans_v = from_vec3(shape.pose.trans);
        V3<double> db_v = from_vec3(shape.base.dims), dm_v = from_vec3(shape.moving.dims);
        double ab_v = 2.0 * (db_v.x * db_v.y + db_v.y * db_v.z + db_v.z * db_v.x);
        double am_v = 2.0 * (dm_v.x * dm_v.y + dm_v.y * dm_v.z + dm_v.z * dm_v.x);

        SharedDuals sd(params);
        V3<D15> cb[8];
        detail::PartGeom gb;
        D15 ab_d, am_d;
        if (want_grad) {
            detail::assemble_base_corners<D15>(sd.rot, sd.trans, sd.db, cb);
            gb = detail::project_part(cb, cam_, rcfg_.znear);
            ab_d = (sd.db.x * sd.db.y + sd.db.y * sd.db.z + sd.db.z * sd.db.x) * D15(2.0);
            am_d = (sd.dm.x * sd.dm.y + sd.dm.y * sd.dm.z + sd.dm.z * sd.dm.x) * D15(2.0);
        } else {
            V3<double> vb8[8];
            detail::assemble_base_corners<double>(rot_v, trans_v, db_v, vb8);
            gb = project_values(vb8);
        }
        bool base_ok = gb.in_front;
        if (base_ok) {
            Vec2 pb[8];
            for (int i = 0; i < 8; ++i) pb[i] = gb.c[i].p;
            detail::raster_part(pb, cam_, rcfg_, rb_);
            base_ok = rb_.valid;
        }

        double sil_sum = 0.0, dice_sum = 0.0, over_sum = 0.0, depth_sum = 0.0;
        std::vector<Vec3> vc(n_);
        std::vector<std::array<double, 45>> jv;  // d(centroid)/d(active) per frame
        if (want_grad) jv.resize(n_);

        V3<D15> cm[8];
        V3<double> vb[8], vm[8];
        if (want_grad)
            for (int i = 0; i < 8; ++i) vb[i] = {cb[i].x.v, cb[i].y.v, cb[i].z.v};
        else
            detail::assemble_base_corners<double>(rot_v, trans_v, db_v, vb);

        for (int t = 0; t < n_; ++t) {
            std::uint64_t sig = 0;
            detail::PartGeom gm;
            if (want_grad) {
                detail::assemble_moving_corners<D15>(sd.rot, sd.trans, sd.db, sd.dm, sd.offset,
                                                     sd.extent, edge, alpha_dual(params, t), cm);
                for (int i = 0; i < 8; ++i) vm[i] = {cm[i].x.v, cm[i].y.v, cm[i].z.v};
                gm = detail::project_part(cm, cam_, rcfg_.znear);
            } else {
                detail::assemble_moving_corners<double>(rot_v, trans_v, db_v, dm_v,
                                                        shape.hinge.offset, shape.hinge.extent,
                                                        edge, params[param::kAlpha + t], vm);
                gm = project_values(vm);
            }

            // penetration; the active axis only marks a branch while the term
            // contributes — below the slack the loss is identically zero on
            // both sides of an axis (or contact) switch
            int axis_id = -1;
            double pd = detail::sat_depth<double>(vb, vm, &axis_id);
            if (pd > lcfg_.eps_pen) {
                sig |= static_cast<std::uint64_t>(axis_id + 1) << 17;
                sig |= 1ull << 22;
                double e = pd - lcfg_.eps_pen;
                over_sum += e * e;
                if (want_grad) {
                    D15 pdd = detail::sat_depth<D15>(cb, cm);
                    D15 term = (pdd - D15(lcfg_.eps_pen)) * (pdd - D15(lcfg_.eps_pen));
                    double g15[param::kActive];
                    for (int k = 0; k < param::kActive; ++k)
                        g15[k] = term.d[k] / static_cast<double>(n_);
                    scatter_frame_grad(g15, t, r.g_over);
                }
            }

            // depth agreement
            double zm_v = 0.0;
            for (int i = 0; i < 8; ++i) zm_v += vm[i].z;
            zm_v /= 8.0;
            double zbar_v = (ab_v * trans_v.z + am_v * zm_v) / (ab_v + am_v);
            double delta_v = zbar_v - human_.mean_z[t];
            if (std::abs(delta_v) > lcfg_.lambda_depth) {
                sig |= 1ull << 23;
                if (delta_v > 0.0) sig |= 1ull << 24;
                depth_sum += std::abs(delta_v) - lcfg_.lambda_depth;
                if (want_grad) {
                    D15 zm_d(0.0);
                    for (int i = 0; i < 8; ++i) zm_d = zm_d + cm[i].z;
                    zm_d = zm_d * D15(0.125);
                    D15 zbar = (ab_d * D15::var(params[5], 5) + am_d * zm_d) / (ab_d + am_d);
                    double sgn = delta_v > 0.0 ? 1.0 : -1.0;
                    double g15[param::kActive];
                    for (int k = 0; k < param::kActive; ++k)
                        g15[k] = sgn * zbar.d[k] / static_cast<double>(n_);
                    scatter_frame_grad(g15, t, r.g_depth);
                }
            }

            // contact prep
            Vec3 c = Vec3::Zero();
            for (int i = 0; i < 8; ++i) c += to_vec3(vm[i]);
            vc[t] = c / 8.0;
            if (want_grad) {
                for (int k = 0; k < param::kActive; ++k) {
                    double sx = 0.0, sy = 0.0, sz = 0.0;
                    for (int i = 0; i < 8; ++i) {
                        sx += cm[i].x.d[k];
                        sy += cm[i].y.d[k];
                        sz += cm[i].z.d[k];
                    }
                    jv[t][0 * param::kActive + k] = sx / 8.0;
                    jv[t][1 * param::kActive + k] = sy / 8.0;
                    jv[t][2 * param::kActive + k] = sz / 8.0;
                }
            }

            // image terms
            bool ok = base_ok && gm.in_front;
            if (ok) {
                Vec2 pm[8];
                for (int i = 0; i < 8; ++i) pm[i] = gm.c[i].p;
                detail::raster_part(pm, cam_, rcfg_, rm_);
                ok = rm_.valid;
            }
            if (!ok) {
                sil_sum += 1e4 * static_cast<double>(n_);  // 1e4 per frame after the 1/N
                ++r.invalid_frames;
                r.signature[t] = sig;
                continue;
            }
            sig |= 1ull << 16;
            for (int v = 0; v < rb_.hull_n; ++v) sig |= 1ull << rb_.hull_src[v];
            for (int v = 0; v < rm_.hull_n; ++v) sig |= 1ull << (8 + rm_.hull_src[v]);

            ImageVals iv = image_values(t);
            sil_sum += iv.sil;
            dice_sum += iv.dice;

            if (want_grad) {
                band_pass(rb_, gb, rm_, gt_base_.data() + wh() * t, t, iv.i_b, iv.u_b, iv.i_o,
                          iv.u_o, r);
                band_pass(rm_, gm, rb_, gt_mov_.data() + wh() * t, t, iv.i_m, iv.u_m, iv.i_o,
                          iv.u_o, r);
            }
            r.signature[t] = sig;
        }

        // contact
        const std::vector<Vec3>& hpts = human_.hand(hand);
        detail::ContactFit cf = detail::contact_solve(vc, hpts);
        double contact = 0.0;
        for (int t = 0; t < n_; ++t) {
            Vec3 res = cf.R * vc[t] + cf.T - hpts[t];
            contact += res.squaredNorm();
            if (want_grad) {
                Vec3 g3 = 2.0 * (cf.R.transpose() * res);
                double g15[param::kActive];
                for (int k = 0; k < param::kActive; ++k)
                    g15[k] = g3.x() * jv[t][k] + g3.y() * jv[t][param::kActive + k] +
                             g3.z() * jv[t][2 * param::kActive + k];
                scatter_frame_grad(g15, t, r.g_contact);
            }
        }
        r.signature[n_] = cf.fallback ? 1 : 0;

        double inv_n = 1.0 / static_cast<double>(n_);
        r.loss.sil = sil_sum * inv_n;
        r.loss.dice = dice_sum * inv_n;
        r.loss.over = over_sum * inv_n;
        r.loss.depth = depth_sum * inv_n;
        r.loss.contact = contact;
        r.loss.total = lcfg_.w_sil * r.loss.sil + lcfg_.w_dice * r.loss.dice +
                       lcfg_.w_over * r.loss.over + lcfg_.w_depth * r.loss.depth +
                       lcfg_.w_contact * r.loss.contact;
        if (want_grad)
            r.g_total = lcfg_.w_sil * r.g_sil + lcfg_.w_dice * r.g_dice + lcfg_.w_over * r.g_over +
                        lcfg_.w_depth * r.g_depth + lcfg_.w_contact * r.g_contact;
        return r;
    }

    // Value-only evaluation of an explicit model (no squashing round-trip, so
    // boundary hinge values like extent = 1 are handled exactly).
    LossBreakdown eval_model(const ArticulatedModel& m, Hand hand) {
        m.validate();
        if (static_cast<int>(m.angles.size()) != n_)
            throw std::invalid_argument("objective: model frame count != video frame count");
        V3<double> rot_v = from_vec3(m.pose.rot), trans_v = from_vec3(m.pose.trans);
        V3<double> db_v = from_vec3(m.base.dims), dm_v = from_vec3(m.moving.dims);
        double ab_v = 2.0 * (db_v.x * db_v.y + db_v.y * db_v.z + db_v.z * db_v.x);
        double am_v = 2.0 * (dm_v.x * dm_v.y + dm_v.y * dm_v.z + dm_v.z * dm_v.x);

        V3<double> vb[8], vm[8];
        detail::assemble_base_corners<double>(rot_v, trans_v, db_v, vb);
        detail::PartGeom gb = project_values(vb);
        bool base_ok = gb.in_front;
        if (base_ok) {
            Vec2 pb[8];
            for (int i = 0; i < 8; ++i) pb[i] = gb.c[i].p;
            detail::raster_part(pb, cam_, rcfg_, rb_);
            base_ok = rb_.valid;
        }

        double sil_sum = 0.0, dice_sum = 0.0, over_sum = 0.0, depth_sum = 0.0;
        std::vector<Vec3> vc(n_);
        for (int t = 0; t < n_; ++t) {
            detail::assemble_moving_corners<double>(rot_v, trans_v, db_v, dm_v, m.hinge.offset,
                                                    m.hinge.extent, m.hinge.edge, m.angles[t], vm);
            double pd = detail::sat_depth<double>(vb, vm);
            if (pd > lcfg_.eps_pen) {
                double e = pd - lcfg_.eps_pen;
                over_sum += e * e;
            }
            double zm_v = 0.0;
            for (int i = 0; i < 8; ++i) zm_v += vm[i].z;
            zm_v /= 8.0;
            double zbar = (ab_v * trans_v.z + am_v * zm_v) / (ab_v + am_v);
            double e = std::abs(zbar - human_.mean_z[t]) - lcfg_.lambda_depth;
            if (e > 0.0) depth_sum += e;
            Vec3 c = Vec3::Zero();
            for (int i = 0; i < 8; ++i) c += to_vec3(vm[i]);
            vc[t] = c / 8.0;

            detail::PartGeom gm = project_values(vm);
            bool ok = base_ok && gm.in_front;
            if (ok) {
                Vec2 pm[8];
                for (int i = 0; i < 8; ++i) pm[i] = gm.c[i].p;
                detail::raster_part(pm, cam_, rcfg_, rm_);
                ok = rm_.valid;
            }
            if (!ok) {
                sil_sum += 1e4 * static_cast<double>(n_);
                continue;
            }
            ImageVals iv = image_values(t);
            sil_sum += iv.sil;
            dice_sum += iv.dice;
        }

        const std::vector<Vec3>& hpts = human_.hand(hand);
        detail::ContactFit cf = detail::contact_solve(vc, hpts);
        double contact = 0.0;
        for (int t = 0; t < n_; ++t) contact += (cf.R * vc[t] + cf.T - hpts[t]).squaredNorm();

        double inv_n = 1.0 / static_cast<double>(n_);
        LossBreakdown b;
        b.sil = sil_sum * inv_n;
        b.dice = dice_sum * inv_n;
        b.over = over_sum * inv_n;
        b.depth = depth_sum * inv_n;
        b.contact = contact;
        b.total = lcfg_.w_sil * b.sil + lcfg_.w_dice * b.dice + lcfg_.w_over * b.over +
                  lcfg_.w_depth * b.depth + lcfg_.w_contact * b.contact;
        return b;
    }

private:
    struct ImageVals {
        double sil = 0.0, dice = 0.0;
        double i_b = 0.0, u_b = 0.0, i_m = 0.0, u_m = 0.0, i_o = 0.0, u_o = 0.0;
    };

    size_t wh() const { return static_cast<size_t>(w_) * h_; }

    static void binarize(const SoftMask& m, std::uint8_t* out, double& total) {
        total = 0.0;
        for (size_t i = 0; i < m.data.size(); ++i) {
            out[i] = m.data[i] > 0.5 ? 1 : 0;
            total += out[i];
        }
    }

    // Value-only projection (same thresholds as the dual path, zero Jacobians).
    detail::PartGeom project_values(const V3<double>* c) const {
        detail::PartGeom g;
        for (int i = 0; i < 8; ++i) {
            if (!(c[i].z > rcfg_.znear)) return g;
            double iz = 1.0 / c[i].z;
            g.c[i].p = Vec2(cam_.fx * c[i].x * iz + cam_.cx, cam_.fy * c[i].y * iz + cam_.cy);
        }
        g.in_front = true;
        return g;
    }

    // Pixel sums for frame t over the union of both parts' touched spans:
    // squared silhouette error (with closed-form credit for ground-truth
    // pixels outside the spans, where occupancy is exactly zero) and the
    // per-part soft intersection/union tallies.
    ImageVals image_values(int t) const {
        const std::uint8_t* gtb = gt_base_.data() + wh() * t;
        const std::uint8_t* gtm = gt_mov_.data() + wh() * t;
        const std::uint8_t* gto = gt_obj_.data() + wh() * t;
        double sb = 0.0, sm = 0.0, so = 0.0;
        double ib = 0.0, im = 0.0, io = 0.0, ub = 0.0, um = 0.0, uo = 0.0;
        double gbs = 0.0, gms = 0.0, gos = 0.0;
        int y0 = std::min(rb_.y0, rm_.y0), y1 = std::max(rb_.y1, rm_.y1);
        for (int y = y0; y < y1; ++y) {
            int lo = std::min(rb_.y0 <= y && y < rb_.y1 ? rb_.span_lo[y] : INT_MAX,
                              rm_.y0 <= y && y < rm_.y1 ? rm_.span_lo[y] : INT_MAX);
            int hi = std::max(rb_.y0 <= y && y < rb_.y1 ? rb_.span_hi[y] : 0,
                              rm_.y0 <= y && y < rm_.y1 ? rm_.span_hi[y] : 0);
            const double* brow = rb_.occ.data() + static_cast<size_t>(y) * w_;
            const double* mrow = rm_.occ.data() + static_cast<size_t>(y) * w_;
            size_t off = static_cast<size_t>(y) * w_;
            for (int x = lo; x < hi; ++x) {
                double ob = brow[x], om = mrow[x];
                double o = ob + om - ob * om;
                double gb = gtb[off + x], gm = gtm[off + x], go = gto[off + x];
                double db = ob - gb, dm = om - gm, dob = o - go;
                sb += db * db;
                sm += dm * dm;
                so += dob * dob;
                ib += ob * gb;
                im += om * gm;
                io += o * go;
                ub += ob - ob * gb;
                um += om - om * gm;
                uo += o - o * go;
                gbs += gb;
                gms += gm;
                gos += go;
            }
        }
        ImageVals iv;
        iv.sil = sb + (tot_base_[t] - gbs) + sm + (tot_mov_[t] - gms) + so + (tot_obj_[t] - gos);
        iv.i_b = ib;
        iv.u_b = tot_base_[t] + ub;
        iv.i_m = im;
        iv.u_m = tot_mov_[t] + um;
        iv.i_o = io;
        iv.u_o = tot_obj_[t] + uo;
        auto dice_term = [](double i, double u) { return u > 0.0 ? 1.0 - i / u : 0.0; };
        iv.dice = dice_term(iv.i_b, iv.u_b) + dice_term(iv.i_m, iv.u_m) +
                  dice_term(iv.i_o, iv.u_o);
        return iv;
    }

    // Backpropagate the frame's silhouette and dice terms through one part's
    // band pixels into the parameter gradients.
    void band_pass(const detail::PartRaster& R, const detail::PartGeom& G,
                   const detail::PartRaster& other, const std::uint8_t* gtp, int t, double i_p,
                   double u_p, double i_o, double u_o, Result& r) const {
        const std::uint8_t* gto = gt_obj_.data() + wh() * t;
        double kp = u_p > 0.0 ? 1.0 / (u_p * u_p) : 0.0;
        double ko = u_o > 0.0 ? 1.0 / (u_o * u_o) : 0.0;
        double inv_tau = 1.0 / rcfg_.tau;
        Vec2 vgs[8], vgd[8];
        for (int i = 0; i < 8; ++i) {
            vgs[i].setZero();
            vgd[i].setZero();
        }
        for (const detail::BandPixel& bp : R.band) {
            double oo = other.occ[bp.px];
            double gp = gtp[bp.px], go = gto[bp.px];
            double o = bp.occ + oo - bp.occ * oo;
            double chain = 1.0 - oo;  // d(object occ)/d(part occ)
            double cs = 2.0 * (bp.occ - gp) + 2.0 * (o - go) * chain;
            double cd = -(gp * u_p - i_p * (1.0 - gp)) * kp -
                        (go * u_o - i_o * (1.0 - go)) * ko * chain;
            double dods = -bp.w * bp.occ * (1.0 - bp.occ) * inv_tau;
            Vec2 dir(bp.gx, bp.gy);
            int va = bp.edge, vb = (bp.edge + 1) % R.hull_n;
            double wa = 1.0 - bp.t, wb = bp.t;
            vgs[va] += wa * cs * dods * dir;
            vgs[vb] += wb * cs * dods * dir;
            vgd[va] += wa * cd * dods * dir;
            vgd[vb] += wb * cd * dods * dir;
        }
        double g15s[param::kActive] = {}, g15d[param::kActive] = {};
        detail::scatter_vertex_grads(R, G, vgs, g15s);
        detail::scatter_vertex_grads(R, G, vgd, g15d);
        double inv_n = 1.0 / static_cast<double>(n_);
        for (int k = 0; k < param::kActive; ++k) {
            g15s[k] *= inv_n;
            g15d[k] *= inv_n;
        }
        scatter_frame_grad(g15s, t, r.g_sil);
        scatter_frame_grad(g15d, t, r.g_dice);
    }

    CameraIntrinsics cam_;
    LossConfig lcfg_;
    RenderConfig rcfg_;
    HumanObservation human_;
    int n_ = 0, w_ = 0, h_ = 0;
    std::vector<std::uint8_t> gt_obj_, gt_base_, gt_mov_;
    std::vector<double> tot_obj_, tot_base_, tot_mov_;
    detail::PartRaster rb_, rm_;
};

// Full objective of an explicit model against one observed video.
inline LossBreakdown loss_total(const ArticulatedModel& m, const VideoObservation& video,
                                Hand hand, const LossConfig& lcfg = {},
                                const RenderConfig& rcfg = {}) {
    ObjectiveEngine eng(video, lcfg, rcfg);
    return eng.eval_model(m, hand);
}

}  // namespace cubefit
