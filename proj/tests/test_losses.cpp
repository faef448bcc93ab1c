#include <array>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "cubefit/objective.hpp"
#include "cubefit/render.hpp"

namespace cubefit {
namespace {

CameraIntrinsics test_cam() {
    CameraIntrinsics K;
    K.fx = K.fy = 64.0;
    K.cx = K.cy = 32.0;
    K.width = K.height = 64;
    return K;
}

SoftMask mask2x2(double a, double b, double c, double d) {
    SoftMask m(2, 2);
    m.data = {a, b, c, d};
    return m;
}

// ---------------------------------------------------------------------------
// silhouette / dice losses
// ---------------------------------------------------------------------------

TEST(LossSil, PinnedValues) {
    std::vector<SoftMask> gt{mask2x2(1, 1, 1, 1)};
    std::vector<SoftMask> pred{mask2x2(0, 0, 0, 0)};
    EXPECT_DOUBLE_EQ(loss_sil(gt, pred), 4.0);

    // mean over frames: (4 + 0) / 2
    gt.push_back(mask2x2(1, 0, 0, 0));
    pred.push_back(mask2x2(1, 0, 0, 0));
    EXPECT_DOUBLE_EQ(loss_sil(gt, pred), 2.0);

    std::vector<SoftMask> soft{mask2x2(0.5, 0.0, 0.0, 0.0)};
    std::vector<SoftMask> softp{mask2x2(0.25, 0.0, 0.0, 0.0)};
    EXPECT_DOUBLE_EQ(loss_sil(soft, softp), 0.0625);
}

TEST(LossSil, Validation) {
    std::vector<SoftMask> gt{mask2x2(0, 0, 0, 0)};
    std::vector<SoftMask> pred;
    EXPECT_THROW(loss_sil(gt, pred), std::invalid_argument);
    EXPECT_THROW(loss_sil(pred, pred), std::invalid_argument);
    pred.push_back(SoftMask(3, 3));
    EXPECT_THROW(loss_sil(gt, pred), std::invalid_argument);
}

TEST(SoftIou, PinnedValues) {
    SoftMask a = mask2x2(1, 1, 0, 0);
    EXPECT_DOUBLE_EQ(soft_iou(a, a), 1.0);
    SoftMask b = mask2x2(0, 0, 1, 1);
    EXPECT_DOUBLE_EQ(soft_iou(a, b), 0.0);
    // single active pixel at 0.5 each: inter 0.25, union 0.75
    SoftMask h = mask2x2(0.5, 0, 0, 0);
    EXPECT_NEAR(soft_iou(h, h), 1.0 / 3.0, 1e-15);
    // both empty counts as perfect agreement
    SoftMask z = mask2x2(0, 0, 0, 0);
    EXPECT_DOUBLE_EQ(soft_iou(z, z), 1.0);
    EXPECT_THROW(soft_iou(a, SoftMask(3, 2)), std::invalid_argument);
}

TEST(LossDice, MeanComplementOfIou) {
    std::vector<SoftMask> gt{mask2x2(1, 1, 0, 0), mask2x2(1, 0, 0, 0)};
    std::vector<SoftMask> pred{mask2x2(1, 1, 0, 0), mask2x2(0, 1, 0, 0)};
    // frame 0: iou 1 -> 0; frame 1: iou 0 -> 1; mean 0.5
    EXPECT_DOUBLE_EQ(loss_dice(gt, pred), 0.5);
    EXPECT_THROW(loss_dice(gt, std::vector<SoftMask>{}), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// penetration depth (separating axes)
// ---------------------------------------------------------------------------

std::array<Vec3, 8> make_box(const Vec3& center, const Vec3& dims, const Vec3& rotvec) {
    Mat3 R = axis_angle_to_matrix(rotvec);
    std::array<Vec3, 8> c;
    for (int i = 0; i < 8; ++i) {
        Vec3 local(((i & 1) ? 0.5 : -0.5) * dims.x(), ((i & 2) ? 0.5 : -0.5) * dims.y(),
                   ((i & 4) ? 0.5 : -0.5) * dims.z());
        c[i] = center + R * local;
    }
    return c;
}

TEST(Penetration, UnitCubesPinned) {
    std::array<Vec3, 8> a = make_box(Vec3::Zero(), Vec3(1, 1, 1), Vec3::Zero());
    EXPECT_DOUBLE_EQ(penetration_depth(a, a), 1.0);  // coincident
    std::array<Vec3, 8> far = make_box(Vec3(2, 0, 0), Vec3(1, 1, 1), Vec3::Zero());
    EXPECT_DOUBLE_EQ(penetration_depth(a, far), 0.0);
    std::array<Vec3, 8> half = make_box(Vec3(0.5, 0, 0), Vec3(1, 1, 1), Vec3::Zero());
    EXPECT_DOUBLE_EQ(penetration_depth(a, half), 0.5);
    std::array<Vec3, 8> touch = make_box(Vec3(1.0, 0, 0), Vec3(1, 1, 1), Vec3::Zero());
    EXPECT_DOUBLE_EQ(penetration_depth(a, touch), 0.0);  // tangency separates
    std::array<Vec3, 8> corner = make_box(Vec3(0.75, 0.75, 0), Vec3(1, 1, 1), Vec3::Zero());
    EXPECT_DOUBLE_EQ(penetration_depth(a, corner), 0.25);
    // 45-degree twin: every candidate axis sees overlap >= 1
    std::array<Vec3, 8> spun = make_box(Vec3::Zero(), Vec3(1, 1, 1), Vec3(0, 0, kPi / 4));
    EXPECT_NEAR(penetration_depth(a, spun), 1.0, 1e-12);
}

TEST(Penetration, ArgminSlot) {
    V3<double> A[8], B[8];
    std::array<Vec3, 8> a = make_box(Vec3::Zero(), Vec3(1, 1, 1), Vec3::Zero());
    std::array<Vec3, 8> b = make_box(Vec3(0.9, 0, 0), Vec3(1, 1, 1), Vec3::Zero());
    for (int i = 0; i < 8; ++i) {
        A[i] = from_vec3(a[i]);
        B[i] = from_vec3(b[i]);
    }
    int axis = -2;
    EXPECT_NEAR(detail::sat_depth<double>(A, B, &axis), 0.1, 1e-12);
    EXPECT_EQ(axis, 0);  // A's x edge wins the tie against B's by order
    std::array<Vec3, 8> off = make_box(Vec3(3, 0, 0), Vec3(1, 1, 1), Vec3::Zero());
    for (int i = 0; i < 8; ++i) B[i] = from_vec3(off[i]);
    EXPECT_DOUBLE_EQ(detail::sat_depth<double>(A, B, &axis), 0.0);
    EXPECT_EQ(axis, -1);
}

// Sampling oracle: SAT says disjoint iff no sampled point lies in both boxes.
bool point_in_box(const Vec3& p, const Vec3& center, const Vec3& dims, const Vec3& rotvec) {
    Vec3 local = axis_angle_to_matrix(rotvec).transpose() * (p - center);
    return std::abs(local.x()) <= 0.5 * dims.x() && std::abs(local.y()) <= 0.5 * dims.y() &&
           std::abs(local.z()) <= 0.5 * dims.z();
}

TEST(Penetration, RandomPairsAgreeWithSamplingOracle) {
    Rng rng(41);
    int intersecting = 0, disjoint = 0;
    for (int trial = 0; trial < 60; ++trial) {
        Vec3 ca(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
        Vec3 cb(rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2));
        Vec3 da(rng.uniform(0.4, 1.0), rng.uniform(0.4, 1.0), rng.uniform(0.4, 1.0));
        Vec3 db(rng.uniform(0.4, 1.0), rng.uniform(0.4, 1.0), rng.uniform(0.4, 1.0));
        Vec3 ra = rng.unit_vector() * rng.uniform(0, kPi);
        Vec3 rb = rng.unit_vector() * rng.uniform(0, kPi);
        std::array<Vec3, 8> A = make_box(ca, da, ra);
        std::array<Vec3, 8> B = make_box(cb, db, rb);
        double pd = penetration_depth(A, B);
        EXPECT_NEAR(penetration_depth(B, A), pd, 1e-12);  // symmetric
        // sample B's volume and test membership in A
        bool common = false;
        const int g = 12;
        for (int i = 0; i < g && !common; ++i)
            for (int j = 0; j < g && !common; ++j)
                for (int k = 0; k < g && !common; ++k) {
                    Vec3 local((i + 0.5) / g - 0.5, (j + 0.5) / g - 0.5, (k + 0.5) / g - 0.5);
                    Vec3 p = cb + axis_angle_to_matrix(rb) * local.cwiseProduct(db);
                    if (point_in_box(p, ca, da, ra)) common = true;
                }
        if (pd > 0.05) {
            EXPECT_TRUE(common) << "SAT depth " << pd << " but no common sample";
            ++intersecting;
        } else if (pd == 0.0) {
            EXPECT_FALSE(common) << "SAT separated but boxes share a point";
            ++disjoint;
        }
    }
    EXPECT_GT(intersecting, 5);  // the case mix actually exercises both sides
    EXPECT_GT(disjoint, 5);
}

// ---------------------------------------------------------------------------
// model-level regularizers
// ---------------------------------------------------------------------------

ArticulatedModel door_model(double angle, int n_frames = 1) {
    ArticulatedModel m;
    m.base.dims = Vec3(0.8, 1.0, 0.4);
    m.moving.dims = Vec3(1.0, 0.7, 0.05);
    m.hinge = HingeSpec{0, 0.0, 1.0};
    m.pose.trans = Vec3(0.0, 0.0, 2.0);
    m.angles.assign(n_frames, angle);
    return m;
}

TEST(LossOverlap, ZeroWhenFlush) {
    // closed door touches the front face with zero interpenetration
    EXPECT_DOUBLE_EQ(loss_overlap(door_model(0.0)), 0.0);
    EXPECT_DOUBLE_EQ(loss_overlap(door_model(deg2rad(45.0))), 0.0);
    EXPECT_DOUBLE_EQ(loss_overlap(door_model(deg2rad(90.0))), 0.0);
}

TEST(LossOverlap, PenalizesHingedPenetration) {
    // swinging "through" the base presses the door into it
    ArticulatedModel m = door_model(deg2rad(-30.0));
    AssembledFrame f = assemble(m, 0);
    double pd = penetration_depth(f.base, f.moving);
    ASSERT_GT(pd, 0.01);
    LossConfig cfg;
    double e = pd - cfg.eps_pen;
    EXPECT_NEAR(loss_overlap(m, cfg), e * e, 1e-12);
    // slack below eps_pen is free
    LossConfig loose;
    loose.eps_pen = pd + 0.1;
    EXPECT_DOUBLE_EQ(loss_overlap(m, loose), 0.0);
    // mean over frames: duplicating the frame leaves the loss unchanged
    ArticulatedModel two = door_model(deg2rad(-30.0), 2);
    EXPECT_NEAR(loss_overlap(two, cfg), e * e, 1e-12);
}

TEST(ObjectDepth, AreaWeightedPinned) {
    ArticulatedModel m;
    m.base.dims = Vec3(1, 1, 1);
    m.moving.dims = Vec3(1, 1, 1);
    m.hinge = HingeSpec{0, 0.0, 1.0};
    m.pose.trans = Vec3(0.0, 0.0, 2.0);
    m.angles = {0.0};
    // both parts have area 6; base centre z=2, door centre z=1 -> mean 1.5
    EXPECT_NEAR(object_mean_depth(m, 0), 1.5, 1e-12);
    // thin door contributes per its area: areas 6 and 2*(1+0.01+0.01)
    m.moving.dims = Vec3(1, 1, 0.01);
    double am = 2.0 * (1 * 1 + 1 * 0.01 + 0.01 * 1);
    double zm = 2.0 - 0.5 - 0.005;
    EXPECT_NEAR(object_mean_depth(m, 0), (6.0 * 2.0 + am * zm) / (6.0 + am), 1e-12);
}

TEST(LossDepth, HingedAgreement) {
    ArticulatedModel m = door_model(0.0, 2);
    HumanObservation h;
    double z = object_mean_depth(m, 0);
    h.left.assign(2, Vec3::Zero());
    h.right.assign(2, Vec3::Zero());
    h.mean_z = {z, z};
    EXPECT_DOUBLE_EQ(loss_depth(m, h), 0.0);
    h.mean_z = {z + 0.05, z - 0.05};  // inside the lambda_depth slack
    EXPECT_DOUBLE_EQ(loss_depth(m, h), 0.0);
    h.mean_z = {z + 0.3, z};  // frame 0 pays 0.3 - 0.1, frame 1 free
    EXPECT_NEAR(loss_depth(m, h), 0.1, 1e-12);
    h.mean_z = {z + 0.3, z - 0.4};
    EXPECT_NEAR(loss_depth(m, h), 0.25, 1e-12);
    h.mean_z.pop_back();
    EXPECT_THROW(loss_depth(m, h), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// contact
// ---------------------------------------------------------------------------

std::vector<Vec3> moving_centroids(const ArticulatedModel& m) {
    std::vector<Vec3> c(m.angles.size());
    for (size_t t = 0; t < m.angles.size(); ++t) {
        AssembledFrame f = assemble(m, static_cast<int>(t));
        Vec3 s = Vec3::Zero();
        for (const Vec3& p : f.moving) s += p;
        c[t] = s / 8.0;
    }
    return c;
}

TEST(LossContact, ZeroUnderExactRigidMap) {
    ArticulatedModel m = door_model(0.0, 5);
    for (int t = 0; t < 5; ++t) m.angles[t] = deg2rad(20.0 * t);
    std::vector<Vec3> c = moving_centroids(m);
    Mat3 R = axis_angle_to_matrix(Vec3(0.3, -0.2, 0.5));
    Vec3 T(0.4, -0.1, 0.2);
    HumanObservation h;
    h.mean_z.assign(5, 2.0);
    h.right.assign(5, Vec3::Zero());
    for (const Vec3& p : c) h.left.push_back(R * p + T);
    EXPECT_LT(loss_contact(m, h, Hand::left), 1e-18);
    // the other hand's track does not fit
    EXPECT_GT(loss_contact(m, h, Hand::right), 1e-3);
}

TEST(LossContact, TranslationFallbackForDegenerateTracks) {
    // constant angle: the centroid track is a single repeated point, which
    // kabsch rejects; the translation fallback still fits it exactly
    ArticulatedModel m = door_model(deg2rad(30.0), 4);
    std::vector<Vec3> c = moving_centroids(m);
    HumanObservation h;
    h.mean_z.assign(4, 2.0);
    h.right.assign(4, Vec3::Zero());
    Vec3 T(0.2, 0.1, -0.3);
    for (const Vec3& p : c) h.left.push_back(p + T);
    EXPECT_LT(loss_contact(m, h, Hand::left), 1e-20);
    detail::ContactFit cf = detail::contact_solve(c, h.left);
    EXPECT_TRUE(cf.fallback);
    EXPECT_LT((cf.T - T).norm(), 1e-12);
}

TEST(LossContact, SumsOverFramesWithoutNormalizing) {
    ArticulatedModel m = door_model(0.0, 3);
    m.angles = {0.0, deg2rad(30.0), deg2rad(60.0)};
    std::vector<Vec3> c = moving_centroids(m);
    Rng rng(61);
    HumanObservation h3;
    h3.mean_z.assign(3, 2.0);
    h3.right.assign(3, Vec3::Zero());
    for (const Vec3& p : c)
        h3.left.push_back(p + 0.05 * Vec3(rng.normal(), rng.normal(), rng.normal()));
    double l3 = loss_contact(m, h3, Hand::left);
    ASSERT_GT(l3, 0.0);
    // duplicating every frame preserves the optimal fit and doubles the sum
    ArticulatedModel m6 = m;
    m6.angles = {m.angles[0], m.angles[0], m.angles[1], m.angles[1], m.angles[2], m.angles[2]};
    HumanObservation h6;
    h6.mean_z.assign(6, 2.0);
    h6.right.assign(6, Vec3::Zero());
    for (int t = 0; t < 3; ++t) {
        h6.left.push_back(h3.left[t]);
        h6.left.push_back(h3.left[t]);
    }
    EXPECT_NEAR(loss_contact(m6, h6, Hand::left), 2.0 * l3, 1e-9);
}

// ---------------------------------------------------------------------------
// fused engine
// ---------------------------------------------------------------------------

VideoObservation observe(const ArticulatedModel& gt, const CameraIntrinsics& K) {
    VideoObservation v;
    v.cam = K;
    int n = static_cast<int>(gt.angles.size());
    for (int t = 0; t < n; ++t) {
        AssembledFrame f = assemble(gt, t);
        SoftMask base = hard_silhouette(f.base, K);
        SoftMask moving = hard_silhouette(f.moving, K);
        SoftMask object = base;
        for (size_t i = 0; i < object.data.size(); ++i)
            object.data[i] = std::max(object.data[i], moving.data[i]);
        v.object_mask.push_back(object);
        v.base_mask.push_back(base);
        v.moving_mask.push_back(moving);
        Vec3 c = Vec3::Zero();
        for (const Vec3& p : f.moving) c += p;
        v.human.left.push_back(c / 8.0);
        v.human.right.push_back(c / 8.0 + Vec3(0.5, 0.2, 0.0));
        v.human.mean_z.push_back(object_mean_depth(gt, t));
    }
    return v;
}

TEST(Engine, MatchesStandaloneLosses) {
    CameraIntrinsics K = test_cam();
    ArticulatedModel gt = door_model(0.0, 3);
    gt.angles = {deg2rad(5.0), deg2rad(40.0), deg2rad(80.0)};
    VideoObservation video = observe(gt, K);

    ArticulatedModel probe = gt;  // nearby, not equal
    probe.pose.trans += Vec3(0.03, -0.02, 0.05);
    probe.angles = {deg2rad(10.0), deg2rad(35.0), deg2rad(70.0)};
    probe.hinge.offset = 0.1;
    probe.hinge.extent = 0.8;

    ObjectiveEngine eng(video);
    LossBreakdown b = eng.eval_model(probe, Hand::left);

    // reference: render each part with the exact silhouette op
    RenderConfig rcfg;
    std::vector<SoftMask> pb, pm, po, gb, gm, go;
    for (int t = 0; t < 3; ++t) {
        AssembledFrame f = assemble(probe, t);
        pb.push_back(soft_silhouette(f.base, K, rcfg));
        pm.push_back(soft_silhouette(f.moving, K, rcfg));
        po.push_back(soft_union(pb.back(), pm.back()));
        gb.push_back(video.base_mask[t]);
        gm.push_back(video.moving_mask[t]);
        go.push_back(video.object_mask[t]);
    }
    double ref_sil = loss_sil(gb, pb) + loss_sil(gm, pm) + loss_sil(go, po);
    double ref_dice = loss_dice(gb, pb) + loss_dice(gm, pm) + loss_dice(go, po);
    EXPECT_NEAR(b.sil, ref_sil, 1e-3);    // band clamp error < 3e-9/pixel
    EXPECT_NEAR(b.dice, ref_dice, 1e-6);
    EXPECT_NEAR(b.over, loss_overlap(probe), 1e-12);
    EXPECT_NEAR(b.depth, loss_depth(probe, video.human), 1e-12);
    EXPECT_NEAR(b.contact, loss_contact(probe, video.human, Hand::left), 1e-12);
    LossConfig lc;
    EXPECT_NEAR(b.total,
                lc.w_sil * b.sil + lc.w_dice * b.dice + lc.w_over * b.over +
                    lc.w_depth * b.depth + lc.w_contact * b.contact,
                1e-12);
    // loss_total is the one-shot wrapper for the same evaluation
    LossBreakdown w = loss_total(probe, video, Hand::left);
    EXPECT_DOUBLE_EQ(w.total, b.total);
}

TEST(Engine, EvalAgreesWithEvalModel) {
    CameraIntrinsics K = test_cam();
    ArticulatedModel gt = door_model(0.0, 2);
    gt.angles = {deg2rad(10.0), deg2rad(60.0)};
    VideoObservation video = observe(gt, K);
    ArticulatedModel probe = gt;
    probe.hinge.offset = 0.15;
    probe.hinge.extent = 0.7;  // away from the squash boundaries
    probe.pose.rot = Vec3(0.05, -0.1, 0.02);
    ObjectiveEngine eng(video);
    Eigen::VectorXd p = pack_model(probe);
    ObjectiveEngine::Result r = eng.eval(p, probe.hinge.edge, Hand::left, false);
    LossBreakdown b = eng.eval_model(unpack_model(p, probe.hinge.edge), Hand::left);
    EXPECT_NEAR(r.loss.total, b.total, 1e-9);
    EXPECT_NEAR(r.loss.sil, b.sil, 1e-9);
    EXPECT_NEAR(r.loss.dice, b.dice, 1e-12);
    EXPECT_NEAR(r.loss.contact, b.contact, 1e-12);
    EXPECT_FALSE(r.has_grad);
    EXPECT_EQ(r.invalid_frames, 0);
    ASSERT_EQ(r.signature.size(), 3u);  // one per frame + contact word
    EXPECT_TRUE(r.signature[0] & (1ull << 16));  // frames rendered fine

    ObjectiveEngine::Result rg = eng.eval(p, probe.hinge.edge, Hand::left, true);
    EXPECT_TRUE(rg.has_grad);
    EXPECT_DOUBLE_EQ(rg.loss.total, r.loss.total);  // grads don't change values
    EXPECT_EQ(rg.signature, r.signature);
    EXPECT_GT(rg.g_total.norm(), 0.0);
    Eigen::VectorXd sum = rg.g_sil + rg.g_dice + rg.g_over + rg.g_depth + rg.g_contact;
    EXPECT_LT((rg.g_total - sum).norm(), 1e-12);
}

TEST(Engine, InvalidFramePenalty) {
    CameraIntrinsics K = test_cam();
    ArticulatedModel gt;
    gt.base.dims = Vec3(0.4, 0.4, 0.2);
    gt.moving.dims = Vec3(0.4, 0.5, 0.03);
    gt.hinge = HingeSpec{0, 0.0, 1.0};
    gt.pose.trans = Vec3(0.0, 0.0, 0.42);
    gt.angles = {0.0, 0.0};
    VideoObservation video = observe(gt, K);

    // frame 1 swings the door past the near plane
    ArticulatedModel probe = gt;
    probe.angles = {0.0, deg2rad(95.0)};
    AssembledFrame f = assemble(probe, 1);
    double zmin = 1e9;
    for (const Vec3& c : f.moving) zmin = std::min(zmin, c.z());
    ASSERT_LT(zmin, 1e-3);  // scenario sanity

    ObjectiveEngine eng(video);
    Eigen::VectorXd p = pack_model(probe);
    ObjectiveEngine::Result r = eng.eval(p, 0, Hand::left, true);
    EXPECT_EQ(r.invalid_frames, 1);
    EXPECT_GT(r.loss.sil, 1e4);        // 1e4 penalty lands after the 1/N
    EXPECT_LT(r.loss.sil, 1.1e4);
    EXPECT_TRUE(r.signature[0] & (1ull << 16));
    EXPECT_FALSE(r.signature[1] & (1ull << 16));
    // the invalid frame contributes no image gradient for its angle
    EXPECT_EQ(r.g_sil[param::kAlpha + 1], 0.0);
    EXPECT_EQ(r.g_dice[param::kAlpha + 1], 0.0);
    // but its 3-D terms still do
    EXPECT_NE(r.g_contact[param::kAlpha + 1], 0.0);
}

TEST(Engine, Validation) {
    CameraIntrinsics K = test_cam();
    VideoObservation empty;
    empty.cam = K;
    EXPECT_THROW(ObjectiveEngine{empty}, std::invalid_argument);

    ArticulatedModel gt = door_model(0.0, 2);
    VideoObservation video = observe(gt, K);
    VideoObservation bad = video;
    bad.base_mask.pop_back();
    EXPECT_THROW(ObjectiveEngine{bad}, std::invalid_argument);
    bad = video;
    bad.moving_mask[0] = SoftMask(4, 4);
    EXPECT_THROW(ObjectiveEngine{bad}, std::invalid_argument);
    bad = video;
    bad.human.mean_z.pop_back();
    EXPECT_THROW(ObjectiveEngine{bad}, std::invalid_argument);

    ObjectiveEngine eng(video);
    ArticulatedModel wrong = gt;
    wrong.angles.push_back(0.0);
    EXPECT_THROW(eng.eval_model(wrong, Hand::left), std::invalid_argument);
    Eigen::VectorXd p = pack_model(gt);
    EXPECT_THROW(eng.eval(p, 9, Hand::left, false), std::invalid_argument);
    Eigen::VectorXd small = p.head(param::kShared + 1);
    EXPECT_THROW(eng.eval(small, 0, Hand::left, false), std::invalid_argument);
}

TEST(Engine, HandNames) {
    EXPECT_STREQ(hand_name(Hand::left), "left");
    EXPECT_STREQ(hand_name(Hand::right), "right");
    EXPECT_EQ(hand_from_name("left"), Hand::left);
    EXPECT_EQ(hand_from_name("right"), Hand::right);
    EXPECT_THROW(hand_from_name("both"), std::invalid_argument);
}

TEST(Engine, LossConfigValidation) {
    LossConfig c;
    EXPECT_NO_THROW(c.validate());
    c.w_dice = -1.0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = LossConfig{};
    c.eps_pen = -0.1;
    EXPECT_THROW(c.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace cubefit
