#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cubefit/objective.hpp"
#include "cubefit/render.hpp"

namespace cubefit {

enum class TrajectoryShape { open, open_close };

inline const char* trajectory_name(TrajectoryShape s) {
    return s == TrajectoryShape::open ? "open" : "open-close";
}

inline TrajectoryShape trajectory_from_name(const std::string& s) {
    if (s == "open") return TrajectoryShape::open;
    if (s == "open-close") return TrajectoryShape::open_close;
    throw std::invalid_argument("unknown trajectory shape: " + s);
}

// Opening-angle track (radians): linear ramp 0 -> max, or a symmetric
// open-close ramp 0 -> max -> 0. The first frame is always closed.
inline std::vector<double> gen_trajectory(int n, double max_angle, TrajectoryShape shape) {
    if (n < 2) throw std::invalid_argument("gen_trajectory: need at least 2 frames");
    if (!(max_angle > 0.0 && max_angle <= deg2rad(170.0)))
        throw std::invalid_argument("gen_trajectory: max angle out of (0, 170] degrees");
    std::vector<double> a(n);
    if (shape == TrajectoryShape::open) {
        for (int t = 0; t < n; ++t)
            a[t] = max_angle * static_cast<double>(t) / static_cast<double>(n - 1);
    } else {
        double half = static_cast<double>(n - 1) / 2.0;
        for (int t = 0; t < n; ++t)
            a[t] = max_angle * (1.0 - std::abs(static_cast<double>(t) - half) / half);
    }
    return a;
}

struct Range {
    double lo = 0.0, hi = 0.0;

    void validate(const char* what) const {
        if (!(lo <= hi)) throw std::invalid_argument(std::string("range ") + what + ": lo > hi");
    }
    double draw(Rng& rng) const { return rng.uniform(lo, hi); }
};

// Recipe for one random scene. Category presets fill the ranges; every draw
// is taken from `seed` in a fixed order, so a spec generates one exact scene.
struct SceneSpec {
    std::uint64_t seed = 0;
    std::string category = "door";
    CameraIntrinsics cam;
    int frames = 3;
    TrajectoryShape shape = TrajectoryShape::open;
    Range base_x{0.8, 1.0}, base_y{1.7, 2.0}, base_z{0.10, 0.18};
    Range thickness{0.03, 0.07};
    std::vector<int> edges{0, 1};                                // hinge edge choices
    std::vector<std::pair<double, double>> modes{{0.0, 1.0}};    // (offset, extent) choices
    Range depth{2.4, 3.6};
    Range off_x{-0.3, 0.3}, off_y{-0.2, 0.2};
    double max_rot_deg = 25.0;
    Range max_angle_deg{45.0, 90.0};
    double hand_noise_sigma = 0.02;

    void validate() const {
        cam.validate();
        if (frames < 2) throw std::invalid_argument("scene spec: need at least 2 frames");
        base_x.validate("base_x");
        base_y.validate("base_y");
        base_z.validate("base_z");
        thickness.validate("thickness");
        depth.validate("depth");
        off_x.validate("off_x");
        off_y.validate("off_y");
        max_angle_deg.validate("max_angle_deg");
        if (!(depth.lo > 0.0)) throw std::invalid_argument("scene spec: depth must be positive");
        if (edges.empty() || modes.empty())
            throw std::invalid_argument("scene spec: no hinge choices");
        for (int e : edges)
            if (e < 0 || e > 3) throw std::invalid_argument("scene spec: invalid hinge edge");
        for (auto [o, e] : modes) HingeSpec{0, o, e}.validate();
        if (!(max_rot_deg >= 0.0) || !(hand_noise_sigma >= 0.0))
            throw std::invalid_argument("scene spec: negative rotation or noise bound");
        if (!(max_angle_deg.lo > 0.0 && max_angle_deg.hi <= 170.0))
            throw std::invalid_argument("scene spec: max angle out of (0, 170] degrees");
    }
};

inline const std::vector<std::string>& scene_categories() {
    static const std::vector<std::string> cats{"door", "microwave", "laptop", "fridge"};
    return cats;
}

// Category presets: dims and depth tuned so every part projects to a usable
// silhouette (roughly 30-100 px) in the default camera.
inline SceneSpec category_spec(const std::string& category, std::uint64_t seed, int frames = 3,
                               TrajectoryShape shape = TrajectoryShape::open) {
    SceneSpec s;
    s.seed = seed;
    s.category = category;
    s.frames = frames;
    s.shape = shape;
    if (category == "door") {
        // tall, thin; hinged on a vertical edge
        s.base_x = {0.8, 1.0};
        s.base_y = {1.7, 2.0};
        s.base_z = {0.10, 0.18};
        s.edges = {0, 1};
        s.depth = {2.4, 3.6};
    } else if (category == "microwave") {
        // squat box; side- or drop-door
        s.base_x = {0.50, 0.65};
        s.base_y = {0.30, 0.40};
        s.base_z = {0.35, 0.45};
        s.edges = {0, 3};
        s.depth = {1.4, 2.2};
        s.off_x = {-0.25, 0.25};
        s.off_y = {-0.2, 0.2};
    } else if (category == "laptop") {
        // thin base, thin lid
        s.base_x = {0.33, 0.40};
        s.base_y = {0.25, 0.30};
        s.base_z = {0.04, 0.07};
        s.edges = {3, 2};
        s.depth = {0.9, 1.4};
        s.off_x = {-0.15, 0.15};
        s.off_y = {-0.1, 0.1};
    } else if (category == "fridge") {
        // tall, deep; occasionally a half-width door
        s.base_x = {0.6, 0.8};
        s.base_y = {1.5, 1.8};
        s.base_z = {0.6, 0.8};
        s.edges = {0, 1};
        s.modes = {{0.0, 1.0}, {0.0, 0.5}, {0.5, 0.5}};
        s.depth = {2.4, 3.4};
    } else {
        throw std::invalid_argument("unknown scene category: " + category);
    }
    return s;
}

// One generated video: observation (consumed by fitting) plus ground truth.
struct VideoSample {
    std::string id;
    std::string category;
    std::uint64_t seed = 0;
    VideoObservation video;
    ArticulatedModel gt_model;
    MotionParams gt_motion;
    Hand gt_hand = Hand::left;  // which synthesized hand drives the part

    void validate() const {
        video.validate();
        gt_model.validate();
        if (static_cast<int>(gt_model.angles.size()) != video.frames())
            throw std::invalid_argument("video sample: annotation frame count mismatch");
    }
};

namespace detail {

inline bool corners_in_frame(const ArticulatedModel& m, const CameraIntrinsics& K) {
    int n = static_cast<int>(m.angles.size());
    for (int t = 0; t < n; ++t) {
        AssembledFrame f = assemble(m, t);
        for (const std::array<Vec3, 8>* part : {&f.base, &f.moving}) {
            for (const Vec3& c : *part) {
                if (!(c.z() > 0.1)) return false;
                Vec2 p = project(K, c);
                if (!(p.x() >= 1.0 && p.x() <= K.width - 1.0 && p.y() >= 1.0 &&
                      p.y() <= K.height - 1.0))
                    return false;
            }
        }
    }
    return true;
}

}  // namespace detail

// Generate one scene. Pose is resampled until the whole object stays in
// frame every frame (at most 100 attempts). Masks are hard-binarized
// renders of the ground-truth geometry; the object mask is the pixel union.
inline VideoSample gen_scene(const SceneSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    int n = spec.frames;

    ArticulatedModel m;
    m.base.dims = Vec3(spec.base_x.draw(rng), spec.base_y.draw(rng), spec.base_z.draw(rng));
    double thick = spec.thickness.draw(rng);
    int edge = spec.edges[static_cast<size_t>(
        rng.uniform_int(0, static_cast<int>(spec.edges.size()) - 1))];
    auto [h_off, h_ext] = spec.modes[static_cast<size_t>(
        rng.uniform_int(0, static_cast<int>(spec.modes.size()) - 1))];
    m.hinge = {edge, h_off, h_ext};
    // door spans its hinge segment along the edge and the full face across it
    double edge_len = (edge == 2 || edge == 3) ? m.base.dims.x() : m.base.dims.y();
    double across_len = (edge == 2 || edge == 3) ? m.base.dims.y() : m.base.dims.x();
    m.moving.dims = Vec3(h_ext * edge_len, across_len, thick);
    m.angles = gen_trajectory(n, deg2rad(spec.max_angle_deg.draw(rng)), spec.shape);

    bool placed = false;
    for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
        Vec3 axis = rng.unit_vector();
        m.pose.rot = rng.uniform(0.0, deg2rad(spec.max_rot_deg)) * axis;
        m.pose.trans =
            Vec3(spec.off_x.draw(rng), spec.off_y.draw(rng), spec.depth.draw(rng));
        placed = detail::corners_in_frame(m, spec.cam);
    }
    if (!placed)
        throw std::runtime_error("gen_scene: could not place object in frame after 100 attempts");

    VideoSample s;
    s.category = spec.category;
    s.seed = spec.seed;
    s.gt_model = m;
    s.gt_motion = derive_motion(m);
    s.video.cam = spec.cam;
    for (int t = 0; t < n; ++t) {
        AssembledFrame f = assemble(m, t);
        SoftMask base = hard_silhouette(f.base, spec.cam);
        SoftMask moving = hard_silhouette(f.moving, spec.cam);
        SoftMask object = base;
        for (size_t i = 0; i < object.data.size(); ++i)
            object.data[i] = std::max(object.data[i], moving.data[i]);
        s.video.base_mask.push_back(std::move(base));
        s.video.moving_mask.push_back(std::move(moving));
        s.video.object_mask.push_back(std::move(object));
    }

    // human cues: the driving hand follows the moving-part centroid at a
    // fixed offset, the idle hand rests near the base centre
    s.gt_hand = rng.uniform_int(0, 1) == 0 ? Hand::left : Hand::right;
    Vec3 grip(rng.uniform(-0.15, 0.15), rng.uniform(-0.15, 0.15), rng.uniform(-0.1, 0.1));
    Vec3 rest = m.pose.trans + Vec3(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3),
                                    rng.uniform(-0.3, 0.3));
    for (int t = 0; t < n; ++t) {
        AssembledFrame f = assemble(m, t);
        Vec3 c = Vec3::Zero();
        for (const Vec3& p : f.moving) c += p;
        c /= 8.0;
        Vec3 noise_drive(rng.normal() * spec.hand_noise_sigma,
                         rng.normal() * spec.hand_noise_sigma,
                         rng.normal() * spec.hand_noise_sigma);
        Vec3 noise_idle(rng.normal() * spec.hand_noise_sigma,
                        rng.normal() * spec.hand_noise_sigma,
                        rng.normal() * spec.hand_noise_sigma);
        Vec3 drive = c + grip + noise_drive;
        Vec3 idle = rest + noise_idle;
        s.video.human.left.push_back(s.gt_hand == Hand::left ? drive : idle);
        s.video.human.right.push_back(s.gt_hand == Hand::right ? drive : idle);
        s.video.human.mean_z.push_back(object_mean_depth(m, t) + rng.uniform(-0.05, 0.05));
    }
    s.validate();
    return s;
}

}  // namespace cubefit
