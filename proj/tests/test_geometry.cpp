#include <array>
#include <cmath>
#include <set>
#include <vector>

#include <Eigen/Geometry>
#include <gtest/gtest.h>

#include "cubefit/core.hpp"
#include "cubefit/geometry.hpp"

namespace cubefit {
namespace {

// ---------------------------------------------------------------------------
// core
// ---------------------------------------------------------------------------

TEST(Core, AngleConversions) {
    EXPECT_DOUBLE_EQ(deg2rad(180.0), kPi);
    EXPECT_DOUBLE_EQ(rad2deg(kPi / 2.0), 90.0);
    EXPECT_NEAR(rad2deg(deg2rad(37.25)), 37.25, 1e-12);
}

TEST(Core, SigmoidValues) {
    EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
    EXPECT_NEAR(sigmoid(1.0), 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
    EXPECT_NEAR(sigmoid(-1.0) + sigmoid(1.0), 1.0, 1e-15);
    // stable at extreme inputs (naive exp would overflow)
    EXPECT_DOUBLE_EQ(sigmoid(1000.0), 1.0);
    EXPECT_DOUBLE_EQ(sigmoid(-1000.0), 0.0);
}

TEST(Core, Clamp) {
    EXPECT_DOUBLE_EQ(clampd(5.0, 0.0, 1.0), 1.0);
    EXPECT_DOUBLE_EQ(clampd(-5.0, 0.0, 1.0), 0.0);
    EXPECT_DOUBLE_EQ(clampd(0.25, 0.0, 1.0), 0.25);
}

TEST(Core, RngDeterministicAndInRange) {
    Rng a(1234), b(1234), c(1235);
    bool any_diff = false;
    for (int i = 0; i < 1000; ++i) {
        double x = a.uniform();
        EXPECT_EQ(x, b.uniform());
        EXPECT_GE(x, 0.0);
        EXPECT_LT(x, 1.0);
        if (x != c.uniform()) any_diff = true;
    }
    EXPECT_TRUE(any_diff);
}

TEST(Core, RngUniformIntInclusive) {
    Rng rng(7);
    std::set<int> seen;
    for (int i = 0; i < 400; ++i) {
        int v = rng.uniform_int(2, 5);
        EXPECT_GE(v, 2);
        EXPECT_LE(v, 5);
        seen.insert(v);
    }
    EXPECT_EQ(seen.size(), 4u);  // all of 2,3,4,5 reached
    EXPECT_EQ(rng.uniform_int(3, 3), 3);
    EXPECT_THROW(rng.uniform_int(4, 3), std::invalid_argument);
}

TEST(Core, RngNormalMoments) {
    Rng rng(42);
    double sum = 0.0, sq = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        double x = rng.normal(2.0, 3.0);
        sum += x;
        sq += x * x;
    }
    double mean = sum / n;
    double var = sq / n - mean * mean;
    EXPECT_NEAR(mean, 2.0, 0.1);
    EXPECT_NEAR(var, 9.0, 0.4);
}

TEST(Core, RngUnitVector) {
    Rng rng(9);
    for (int i = 0; i < 50; ++i) EXPECT_NEAR(rng.unit_vector().norm(), 1.0, 1e-12);
}

TEST(Core, DeriveSeedSeparatesStreams) {
    EXPECT_NE(derive_seed(1, 2, 3), derive_seed(1, 2, 4));
    EXPECT_NE(derive_seed(1, 2, 3), derive_seed(1, 3, 3));
    EXPECT_NE(derive_seed(1, 2, 3), derive_seed(2, 2, 3));
    EXPECT_EQ(derive_seed(1, 2, 3), derive_seed(1, 2, 3));
}

// ---------------------------------------------------------------------------
// rotations
// ---------------------------------------------------------------------------

TEST(Rotation, QuarterTurnAboutZ) {
    V3<double> w{0.0, 0.0, kPi / 2.0};
    V3<double> v{1.0, 0.0, 0.0};
    V3<double> r = rotate_by_rotvec(w, v);
    EXPECT_NEAR(r.x, 0.0, 1e-15);
    EXPECT_NEAR(r.y, 1.0, 1e-15);
    EXPECT_NEAR(r.z, 0.0, 1e-15);
}

TEST(Rotation, ZeroVectorIsIdentity) {
    V3<double> r = rotate_by_rotvec(V3<double>{0, 0, 0}, V3<double>{0.3, -0.7, 1.1});
    EXPECT_DOUBLE_EQ(r.x, 0.3);
    EXPECT_DOUBLE_EQ(r.y, -0.7);
    EXPECT_DOUBLE_EQ(r.z, 1.1);
}

TEST(Rotation, MatchesEigenAngleAxis) {
    Rng rng(11);
    for (int i = 0; i < 100; ++i) {
        Vec3 axis = rng.unit_vector();
        double angle = rng.uniform(-kPi, kPi);
        Vec3 w = axis * angle;
        Mat3 expected = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
        Mat3 got = axis_angle_to_matrix(w);
        EXPECT_LT((got - expected).norm(), 1e-12) << "i=" << i;

        Vec3 p(rng.normal(), rng.normal(), rng.normal());
        V3<double> r = rotate_by_rotvec(from_vec3(w), from_vec3(p));
        EXPECT_LT((to_vec3(r) - expected * p).norm(), 1e-12);
    }
}

TEST(Rotation, SmallAngleSeriesIsAccurate) {
    Rng rng(12);
    for (double mag : {1e-9, 1e-7, 1e-6, 9.9e-7}) {
        Vec3 axis = rng.unit_vector();
        Vec3 w = axis * mag;
        Mat3 expected = Eigen::AngleAxisd(mag, axis).toRotationMatrix();
        EXPECT_LT((axis_angle_to_matrix(w) - expected).norm(), 1e-14);
    }
}

TEST(Rotation, LogMapRoundTrip) {
    Rng rng(13);
    for (int i = 0; i < 200; ++i) {
        Vec3 w = rng.unit_vector() * rng.uniform(0.0, kPi - 1e-6);
        Vec3 back = matrix_to_axis_angle(axis_angle_to_matrix(w));
        EXPECT_LT((back - w).norm(), 1e-7) << "w=" << w.transpose();
    }
    EXPECT_LT(matrix_to_axis_angle(Mat3::Identity()).norm(), 1e-15);
}

TEST(Rotation, LogMapNearPi) {
    Rng rng(14);
    for (int i = 0; i < 50; ++i) {
        Vec3 axis = rng.unit_vector();
        double angle = kPi - rng.uniform(0.0, 1e-4);
        Mat3 R = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
        Vec3 w = matrix_to_axis_angle(R);
        // the recovered rotation must match even if the axis sign flips
        EXPECT_LT((axis_angle_to_matrix(w) - R).norm(), 1e-6);
        EXPECT_LE(w.norm(), kPi + 1e-12);
    }
}

TEST(Rotation, CanonicalizeWrapsLargeAngles) {
    Vec3 w(0.0, 0.0, 1.5 * kPi);
    Vec3 c = canonicalize_axis_angle(w);
    EXPECT_NEAR(c.z(), -0.5 * kPi, 1e-12);
    EXPECT_LT((axis_angle_to_matrix(c) - axis_angle_to_matrix(w)).norm(), 1e-12);
    // already-canonical input is untouched
    Vec3 small(0.1, -0.2, 0.3);
    EXPECT_EQ(canonicalize_axis_angle(small), small);
}

TEST(Rotation, RotateAboutAxis) {
    std::vector<Vec3> pts{Vec3(1.0, 0.0, 0.0)};
    std::vector<Vec3> out =
        rotate_about_axis(pts, Vec3::Zero(), Vec3(0.0, 0.0, 1.0), kPi / 2.0);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_LT((out[0] - Vec3(0.0, 1.0, 0.0)).norm(), 1e-14);

    // offset origin: rotating the origin itself is a fixed point
    std::vector<Vec3> fixed{Vec3(2.0, 3.0, 4.0)};
    out = rotate_about_axis(fixed, Vec3(2.0, 3.0, 4.0), Vec3(0.0, 1.0, 0.0), 1.234);
    EXPECT_LT((out[0] - fixed[0]).norm(), 1e-14);

    EXPECT_THROW(rotate_about_axis(pts, Vec3::Zero(), Vec3(0.0, 0.0, 2.0), 0.1),
                 std::invalid_argument);
}

// ---------------------------------------------------------------------------
// hinge naming / validation
// ---------------------------------------------------------------------------

TEST(Hinge, EdgeNames) {
    EXPECT_STREQ(hinge_edge_name(0), "left");
    EXPECT_STREQ(hinge_edge_name(1), "right");
    EXPECT_STREQ(hinge_edge_name(2), "top");
    EXPECT_STREQ(hinge_edge_name(3), "bottom");
    for (int e = 0; e < 4; ++e) EXPECT_EQ(hinge_edge_from_name(hinge_edge_name(e)), e);
    EXPECT_THROW(hinge_edge_name(4), std::invalid_argument);
    EXPECT_THROW(hinge_edge_from_name("diagonal"), std::invalid_argument);
}

TEST(Hinge, SpecValidation) {
    HingeSpec ok{0, 0.25, 0.5};
    EXPECT_NO_THROW(ok.validate());
    EXPECT_THROW((HingeSpec{4, 0.0, 1.0}.validate()), std::invalid_argument);
    EXPECT_THROW((HingeSpec{0, -0.1, 0.5}.validate()), std::invalid_argument);
    EXPECT_THROW((HingeSpec{0, 0.0, 0.0}.validate()), std::invalid_argument);
    EXPECT_THROW((HingeSpec{0, 0.6, 0.5}.validate()), std::invalid_argument);
}

TEST(Hinge, ModelValidation) {
    ArticulatedModel m;
    m.angles = {0.0};
    EXPECT_NO_THROW(m.validate());
    m.angles.clear();
    EXPECT_THROW(m.validate(), std::invalid_argument);
    m.angles = {0.0};
    m.base.dims = Vec3(1.0, 0.0, 1.0);
    EXPECT_THROW(m.validate(), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// assembly
// ---------------------------------------------------------------------------

ArticulatedModel simple_model(int edge, double angle) {
    ArticulatedModel m;
    m.base.dims = Vec3(1.0, 1.2, 0.4);
    m.moving.dims = Vec3(edge < 2 ? 1.2 : 1.0, 0.8, 0.1);
    m.hinge = HingeSpec{edge, 0.0, 1.0};
    m.angles = {angle};
    return m;
}

TEST(Assembly, BaseCornerOrder) {
    ArticulatedModel m = simple_model(0, 0.0);
    AssembledFrame f = assemble(m, 0);
    // bit i of the corner index selects +/- along axis i
    for (int i = 0; i < 8; ++i) {
        EXPECT_DOUBLE_EQ(f.base[i].x(), (i & 1) ? 0.5 : -0.5);
        EXPECT_DOUBLE_EQ(f.base[i].y(), (i & 2) ? 0.6 : -0.6);
        EXPECT_DOUBLE_EQ(f.base[i].z(), (i & 4) ? 0.2 : -0.2);
    }
}

TEST(Assembly, ClosedMovingPartFlushOnFrontFace) {
    // left edge, full extent: door spans the front face from x=-0.5 with
    // width 0.8 across, thickness 0.1 toward the camera
    ArticulatedModel m = simple_model(0, 0.0);
    AssembledFrame f = assemble(m, 0);
    Vec3 lo = f.moving[0], hi = f.moving[0];
    for (const Vec3& c : f.moving) {
        lo = lo.cwiseMin(c);
        hi = hi.cwiseMax(c);
    }
    EXPECT_NEAR(lo.x(), -0.5, 1e-12);
    EXPECT_NEAR(hi.x(), 0.3, 1e-12);
    EXPECT_NEAR(lo.y(), -0.6, 1e-12);
    EXPECT_NEAR(hi.y(), 0.6, 1e-12);
    EXPECT_NEAR(lo.z(), -0.3, 1e-12);
    EXPECT_NEAR(hi.z(), -0.2, 1e-12);  // flush against the front face
}

TEST(Assembly, PartialHingeSegment) {
    ArticulatedModel m = simple_model(0, 0.0);
    m.moving.dims = Vec3(0.6, 0.8, 0.1);
    m.hinge = HingeSpec{0, 0.25, 0.5};  // middle half of the left edge
    AssembledFrame f = assemble(m, 0);
    double ylo = 1e9, yhi = -1e9;
    for (const Vec3& c : f.moving) {
        ylo = std::min(ylo, c.y());
        yhi = std::max(yhi, c.y());
    }
    // edge runs y in [-0.6, 0.6]; segment [0.25, 0.75] of it is [-0.3, 0.3]
    EXPECT_NEAR(ylo, -0.3, 1e-12);
    EXPECT_NEAR(yhi, 0.3, 1e-12);
}

TEST(Assembly, PositiveAngleSwingsTowardCamera) {
    for (int edge = 0; edge < 4; ++edge) {
        ArticulatedModel closed = simple_model(edge, 0.0);
        ArticulatedModel open = simple_model(edge, deg2rad(60.0));
        auto min_z = [](const AssembledFrame& f) {
            double z = 1e9;
            for (const Vec3& c : f.moving) z = std::min(z, c.z());
            return z;
        };
        EXPECT_LT(min_z(assemble(open, 0)), min_z(assemble(closed, 0)) - 0.1)
            << "edge " << edge;
    }
}

TEST(Assembly, SwingMatchesRotationAboutHingeLine) {
    // opening the door must equal rotating the closed door about the hinge
    // axis reported by hinge_line, for every edge
    for (int edge = 0; edge < 4; ++edge) {
        ArticulatedModel m = simple_model(edge, 0.0);
        m.hinge.offset = 0.1;
        m.hinge.extent = 0.7;
        m.moving.dims = Vec3(0.7 * (edge < 2 ? 1.2 : 1.0), 0.5, 0.08);
        double alpha = deg2rad(47.0);

        AssembledFrame closed = assemble(m, 0);
        HingeLine hl = hinge_line(m);
        std::vector<Vec3> pts(closed.moving.begin(), closed.moving.end());
        std::vector<Vec3> swung = rotate_about_axis(pts, hl.start, hl.dir, alpha);

        m.angles[0] = alpha;
        AssembledFrame open = assemble(m, 0);
        for (int i = 0; i < 8; ++i)
            EXPECT_LT((open.moving[i] - swung[i]).norm(), 1e-12) << "edge " << edge;
    }
}

TEST(Assembly, PoseAppliedLast) {
    ArticulatedModel m = simple_model(1, deg2rad(30.0));
    m.pose.rot = Vec3(0.2, -0.4, 0.1);
    m.pose.trans = Vec3(0.3, -0.2, 2.5);
    AssembledFrame world = assemble(m, 0, true);
    AssembledFrame local = assemble(m, 0, false);
    Mat3 R = axis_angle_to_matrix(m.pose.rot);
    for (int i = 0; i < 8; ++i) {
        EXPECT_LT((world.base[i] - (R * local.base[i] + m.pose.trans)).norm(), 1e-12);
        EXPECT_LT((world.moving[i] - (R * local.moving[i] + m.pose.trans)).norm(), 1e-12);
    }
}

TEST(Assembly, FrameIndexChecked) {
    ArticulatedModel m = simple_model(0, 0.0);
    EXPECT_THROW(assemble(m, 1), std::out_of_range);
    EXPECT_THROW(assemble(m, -1), std::out_of_range);
}

TEST(Assembly, EdgeFrameTable) {
    // left: vertical edge at x=-dx/2, across points +x, dir follows a->b
    const detail::EdgeFrame& left = detail::edge_frame(0);
    EXPECT_EQ(left.a_unit, Vec3(-1, -1, -1));
    EXPECT_EQ(left.b_unit, Vec3(-1, 1, -1));
    EXPECT_EQ(left.across, Vec3(1, 0, 0));
    EXPECT_DOUBLE_EQ(left.d_sign, 1.0);
    const detail::EdgeFrame& right = detail::edge_frame(1);
    EXPECT_EQ(right.across, Vec3(-1, 0, 0));
    EXPECT_DOUBLE_EQ(right.d_sign, -1.0);
    const detail::EdgeFrame& top = detail::edge_frame(2);
    EXPECT_EQ(top.across, Vec3(0, 1, 0));
    EXPECT_DOUBLE_EQ(top.d_sign, -1.0);
    const detail::EdgeFrame& bottom = detail::edge_frame(3);
    EXPECT_EQ(bottom.across, Vec3(0, -1, 0));
    EXPECT_DOUBLE_EQ(bottom.d_sign, 1.0);
    EXPECT_THROW(detail::edge_frame(4), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// motion
// ---------------------------------------------------------------------------

TEST(Motion, DeriveMotionStatesInDegrees) {
    ArticulatedModel m = simple_model(0, 0.0);
    m.angles = {0.0, deg2rad(45.0), deg2rad(90.0)};
    MotionParams mp = derive_motion(m);
    ASSERT_EQ(mp.states_deg.size(), 3u);
    EXPECT_NEAR(mp.states_deg[0], 0.0, 1e-12);
    EXPECT_NEAR(mp.states_deg[1], 45.0, 1e-12);
    EXPECT_NEAR(mp.states_deg[2], 90.0, 1e-12);
    EXPECT_NEAR(mp.direction.norm(), 1.0, 1e-12);
}

TEST(Motion, HingeLineRespectsOffsetAndPose) {
    ArticulatedModel m = simple_model(0, 0.0);
    m.hinge.offset = 0.25;
    m.hinge.extent = 0.5;
    HingeLine hl = hinge_line(m);
    // left edge runs from (-0.5,-0.6,-0.2) to (-0.5,0.6,-0.2)
    EXPECT_LT((hl.start - Vec3(-0.5, -0.3, -0.2)).norm(), 1e-12);
    EXPECT_LT((hl.end - Vec3(-0.5, 0.3, -0.2)).norm(), 1e-12);
    EXPECT_LT((hl.dir - Vec3(0.0, 1.0, 0.0)).norm(), 1e-12);

    m.pose.rot = Vec3(0.0, 0.0, kPi / 2.0);
    m.pose.trans = Vec3(1.0, 2.0, 3.0);
    hl = hinge_line(m);
    Mat3 R = axis_angle_to_matrix(m.pose.rot);
    EXPECT_LT((hl.start - (R * Vec3(-0.5, -0.3, -0.2) + m.pose.trans)).norm(), 1e-12);
    EXPECT_LT((hl.dir - R * Vec3(0.0, 1.0, 0.0)).norm(), 1e-12);
}

// ---------------------------------------------------------------------------
// surface sampling / extents
// ---------------------------------------------------------------------------

std::array<Vec3, 8> unit_box_corners(const Vec3& dims) {
    std::array<Vec3, 8> c;
    for (int i = 0; i < 8; ++i)
        c[i] = Vec3(((i & 1) ? 0.5 : -0.5) * dims.x(), ((i & 2) ? 0.5 : -0.5) * dims.y(),
                    ((i & 4) ? 0.5 : -0.5) * dims.z());
    return c;
}

double box_surface_distance(const Vec3& p, const Vec3& dims) {
    Vec3 q = p.cwiseAbs() - 0.5 * dims;
    double outside = q.cwiseMax(0.0).norm();
    double inside = q.maxCoeff();
    return outside > 0.0 ? outside : std::abs(inside);
}

TEST(Sampling, PointsLieOnSurface) {
    Vec3 dims(0.8, 1.3, 0.4);
    std::vector<Vec3> pts = sample_surface(unit_box_corners(dims), 500, 77);
    ASSERT_EQ(pts.size(), 500u);
    for (const Vec3& p : pts) EXPECT_LT(box_surface_distance(p, dims), 1e-12);
}

TEST(Sampling, DeterministicInSeed) {
    std::array<Vec3, 8> box = unit_box_corners(Vec3(1, 1, 1));
    std::vector<Vec3> a = sample_surface(box, 64, 5);
    std::vector<Vec3> b = sample_surface(box, 64, 5);
    std::vector<Vec3> c = sample_surface(box, 64, 6);
    ASSERT_EQ(a.size(), b.size());
    bool all_eq = true, any_ne = false;
    for (size_t i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) all_eq = false;
        if (a[i] != c[i]) any_ne = true;
    }
    EXPECT_TRUE(all_eq);
    EXPECT_TRUE(any_ne);
}

TEST(Sampling, AreaWeighted) {
    // slab: the two z faces hold 1*1 each, the four side faces 0.02 each;
    // expect ~96% of samples on the big faces
    Vec3 dims(1.0, 1.0, 0.02);
    std::vector<Vec3> pts = sample_surface(unit_box_corners(dims), 4000, 123);
    int big = 0;
    for (const Vec3& p : pts)
        if (std::abs(std::abs(p.z()) - 0.01) < 1e-9) ++big;
    double frac = static_cast<double>(big) / pts.size();
    EXPECT_NEAR(frac, 1.0 / 1.04, 0.02);
}

TEST(Sampling, MultipleBoxes) {
    std::array<Vec3, 8> a = unit_box_corners(Vec3(1, 1, 1));
    std::array<Vec3, 8> b = a;
    for (Vec3& c : b) c += Vec3(5.0, 0.0, 0.0);
    std::vector<std::array<Vec3, 8>> boxes{a, b};
    std::vector<Vec3> pts = sample_surface(boxes, 1000, 3);
    int near_b = 0;
    for (const Vec3& p : pts)
        if (p.x() > 2.5) ++near_b;
    EXPECT_NEAR(near_b / 1000.0, 0.5, 0.07);  // equal areas, equal share
}

TEST(Sampling, Validation) {
    std::array<Vec3, 8> box = unit_box_corners(Vec3(1, 1, 1));
    EXPECT_THROW(sample_surface(box, -1, 0), std::invalid_argument);
    EXPECT_TRUE(sample_surface(box, 0, 0).empty());
}

TEST(Sampling, MaxDimension) {
    std::vector<Vec3> pts{Vec3(0, 0, 0), Vec3(1, 2, 0.5), Vec3(-1, 0, 0)};
    EXPECT_DOUBLE_EQ(max_dimension(pts), 2.0);
    EXPECT_THROW(max_dimension(std::vector<Vec3>{}), std::invalid_argument);
}

}  // namespace
}  // namespace cubefit
