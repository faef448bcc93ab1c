#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "cubefit/objective.hpp"
#include "cubefit/params.hpp"

namespace cubefit {

// One of the 12 starting configurations: a hinge edge plus an attachment
// mode (full edge, or half from either end). The stored model has no frames;
// optimize_run sizes the angle track to the video.
struct Template {
    int id = 0;
    ArticulatedModel model;  // angles left empty
};

// Base depth used to place the initial model when nothing else is known.
inline constexpr double kDefaultBaseDepth = 2.5;

// The 12 templates: base cuboid centered on the principal axis at the given
// depth, sized so its projection spans ~40% of the image width; the moving
// part covers its hinge segment with a thin slab.
inline std::vector<Template> make_templates(const CameraIntrinsics& K,
                                            double base_depth = kDefaultBaseDepth) {
    K.validate();
    if (!(base_depth > 0.0)) throw std::invalid_argument("make_templates: depth must be > 0");
    double s = 0.4 * K.width * base_depth / K.fx;
    const double modes[3][2] = {{0.0, 1.0}, {0.0, 0.5}, {0.5, 0.5}};
    std::vector<Template> out;
    out.reserve(12);
    for (int edge = 0; edge < 4; ++edge) {
        for (int mode = 0; mode < 3; ++mode) {
            Template t;
            t.id = edge * 3 + mode;
            ArticulatedModel& m = t.model;
            m.base.dims = Vec3(s, s, s);
            m.moving.dims = Vec3(modes[mode][1] * s, s, 0.05 * s);
            m.hinge = {edge, modes[mode][0], modes[mode][1]};
            m.pose.rot = Vec3::Zero();
            m.pose.trans = Vec3(0.0, 0.0, base_depth);
            out.push_back(std::move(t));
        }
    }
    return out;
}

struct FitConfig {
    int iterations = 500;
    double lr = 0.05;
    double decay_factor = 10.0;  // lr divisor in the last (1 - decay_frac)
    double decay_frac = 0.75;
    double beta1 = 0.9, beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;

    void validate() const {
        if (iterations <= 0) throw std::invalid_argument("fit config: iterations must be > 0");
        if (!(lr > 0.0) || !(decay_factor > 0.0))
            throw std::invalid_argument("fit config: lr and decay factor must be > 0");
        if (!(decay_frac >= 0.0 && decay_frac <= 1.0))
            throw std::invalid_argument("fit config: decay fraction out of [0,1]");
        if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
            throw std::invalid_argument("fit config: betas out of [0,1)");
        if (!(adam_eps > 0.0)) throw std::invalid_argument("fit config: adam eps must be > 0");
    }
};

inline double lr_at(const FitConfig& cfg, int iter) {
    cfg.validate();
    if (iter < 0 || iter >= cfg.iterations) throw std::out_of_range("lr_at: iteration out of range");
    return iter < cfg.decay_frac * cfg.iterations ? cfg.lr : cfg.lr / cfg.decay_factor;
}

struct RunResult {
    int template_id = -1;
    Hand hand = Hand::left;
    bool ok = false;
    ArticulatedModel model;
    LossBreakdown loss;
    std::vector<double> trace;  // total loss per iteration, plus the final value
};

// One Adam descent from a template. Runs are deterministic; a run whose loss
// turns non-finite is marked failed and ignored by selection.
inline RunResult optimize_run(ObjectiveEngine& eng, const Template& tpl, Hand hand,
                              const FitConfig& cfg) {
    cfg.validate();
    tpl.model.hinge.validate();
    int n = eng.frames();
    RunResult r;
    r.template_id = tpl.id;
    r.hand = hand;
    ArticulatedModel m0 = tpl.model;
    m0.angles.assign(n, 0.0);
    Eigen::VectorXd p = pack_model(m0);
    const int P = static_cast<int>(p.size());
    Eigen::VectorXd mom = Eigen::VectorXd::Zero(P), vel = Eigen::VectorXd::Zero(P);
    int edge = tpl.model.hinge.edge;
    r.trace.reserve(cfg.iterations + 1);
    // The closed state sits behind a shallow loss rim: a part that must open
    // wide first sweeps regions the target masks never cover, so plain descent
    // from 0 stalls at the wall. Twice per run (before the polish window) any
    // angle still pinned there is relocated past the rim and its Adam state
    // reset; frames that truly belong closed just slide back in a few steps.
    const double kick_at = deg2rad(45.0), kick_below = deg2rad(5.0);
    const int kicks[2] = {cfg.iterations / 3, 2 * cfg.iterations / 3};
    for (int iter = 0; iter < cfg.iterations; ++iter) {
        if (iter == kicks[0] || iter == kicks[1]) {
            for (int t = 0; t < n; ++t) {
                int k = param::kAlpha + t;
                if (p[k] < kick_below) {
                    p[k] = kick_at;
                    mom[k] = 0.0;
                    vel[k] = 0.0;
                }
            }
        }
        ObjectiveEngine::Result res = eng.eval(p, edge, hand, true);
        if (!std::isfinite(res.loss.total)) return r;  // ok stays false
        r.trace.push_back(res.loss.total);
        double lr = lr_at(cfg, iter);
        double c1 = 1.0 - std::pow(cfg.beta1, iter + 1);
        double c2 = 1.0 - std::pow(cfg.beta2, iter + 1);
        mom = cfg.beta1 * mom + (1.0 - cfg.beta1) * res.g_total;
        vel = cfg.beta2 * vel.array() + (1.0 - cfg.beta2) * res.g_total.array().square();
        p.array() -= lr * (mom.array() / c1) / ((vel.array() / c2).sqrt() + cfg.adam_eps);
        // Angles mean "opened this far from closed", so the search stays in
        // [0, pi]. Without the bound, a part swung the other way renders a
        // near-identical silhouette under weak perspective and wins with a
        // mirrored state track. The bound is reflective (position and
        // momentum): frames pulled outward bounce back with their speed,
        // which repeatedly kicks them over the shallow rim that guards the
        // open-state basin instead of leaving them pinned at the wall.
        for (int t = 0; t < n; ++t) {
            double& a = p[param::kAlpha + t];
            if (a < 0.0 || a > kPi) {
                a = a < 0.0 ? -a : 2.0 * kPi - a;
                a = clampd(a, 0.0, kPi);
                mom[param::kAlpha + t] = -mom[param::kAlpha + t];
            }
        }
    }
    ObjectiveEngine::Result fin = eng.eval(p, edge, hand, false);
    if (!std::isfinite(fin.loss.total)) return r;
    r.trace.push_back(fin.loss.total);
    r.model = unpack_model(p, edge);
    r.loss = fin.loss;
    r.ok = true;
    return r;
}

// Lowest total loss wins; exact ties go to the lowest template id, then the
// left hand, so the outcome never depends on run order.
inline size_t select_best(const std::vector<RunResult>& runs) {
    ptrdiff_t best = -1;
    auto key = [](const RunResult& r) {
        return std::make_tuple(r.loss.total, r.template_id, r.hand == Hand::left ? 0 : 1);
    };
    for (size_t i = 0; i < runs.size(); ++i) {
        if (!runs[i].ok) continue;
        if (best < 0 || key(runs[i]) < key(runs[best])) best = static_cast<ptrdiff_t>(i);
    }
    if (best < 0) throw std::runtime_error("fit: all optimization runs failed");
    return static_cast<size_t>(best);
}

struct FitResult {
    ArticulatedModel model;
    int template_id = -1;
    Hand hand = Hand::left;
    LossBreakdown loss;
    std::vector<double> trace;  // winning run
};

// All 24 (template, hand) runs in order, reduced with select_best.
// run_subset (optional) keeps runs whose id = template_id * 2 + hand is
// listed — intended for tests, not a tuning knob.
inline FitResult fit_video(const VideoObservation& video, const FitConfig& cfg = {},
                           const LossConfig& lcfg = {}, const RenderConfig& rcfg = {},
                           const std::vector<int>* run_subset = nullptr) {
    ObjectiveEngine eng(video, lcfg, rcfg);
    std::vector<Template> tpls = make_templates(video.cam);
    std::vector<RunResult> runs;
    for (const Template& t : tpls) {
        for (Hand hand : {Hand::left, Hand::right}) {
            int rid = t.id * 2 + (hand == Hand::left ? 0 : 1);
            if (run_subset && std::find(run_subset->begin(), run_subset->end(), rid) ==
                                  run_subset->end())
                continue;
            runs.push_back(optimize_run(eng, t, hand, cfg));
        }
    }
    if (runs.empty()) throw std::invalid_argument("fit_video: empty run subset");
    const RunResult& w = runs[select_best(runs)];
    return {w.model, w.template_id, w.hand, w.loss, w.trace};
}

// Unoptimized baseline: a uniformly chosen template and hand, with the
// initial model randomly perturbed (rotation +-30 deg per component,
// translation +-20% of the initial depth, dims scaled by U[0.5,2], angles
// U[0,90] deg). Draw order is fixed for reproducibility.
inline FitResult cube_rand(const VideoObservation& video, std::uint64_t seed,
                           const LossConfig& lcfg = {}, const RenderConfig& rcfg = {},
                           double base_depth = kDefaultBaseDepth) {
    video.validate();
    Rng rng(seed);
    std::vector<Template> tpls = make_templates(video.cam, base_depth);
    int tid = rng.uniform_int(0, 11);
    Hand hand = rng.uniform_int(0, 1) == 0 ? Hand::left : Hand::right;
    ArticulatedModel m = tpls[tid].model;
    int n = video.frames();
    double rot_lim = deg2rad(30.0);
    for (int k = 0; k < 3; ++k) m.pose.rot[k] += rng.uniform(-rot_lim, rot_lim);
    for (int k = 0; k < 3; ++k)
        m.pose.trans[k] += rng.uniform(-0.2 * base_depth, 0.2 * base_depth);
    for (int k = 0; k < 3; ++k) m.base.dims[k] *= rng.uniform(0.5, 2.0);
    for (int k = 0; k < 3; ++k) m.moving.dims[k] *= rng.uniform(0.5, 2.0);
    m.angles.resize(n);
    for (int t = 0; t < n; ++t) m.angles[t] = rng.uniform(0.0, kPi / 2.0);
    FitResult r;
    r.model = m;
    r.template_id = tid;
    r.hand = hand;
    ObjectiveEngine eng(video, lcfg, rcfg);
    r.loss = eng.eval_model(m, hand);
    r.trace = {r.loss.total};
    return r;
}

// ---------------------------------------------------------------------------
// FitResult JSON (angles in degrees at the file boundary)
// ---------------------------------------------------------------------------

inline nlohmann::json loss_to_json(const LossBreakdown& l) {
    return {{"sil", l.sil},   {"dice", l.dice},       {"over", l.over},
            {"depth", l.depth}, {"contact", l.contact}, {"total", l.total}};
}

inline LossBreakdown loss_from_json(const nlohmann::json& j) {
    LossBreakdown l;
    l.sil = j.at("sil").get<double>();
    l.dice = j.at("dice").get<double>();
    l.over = j.at("over").get<double>();
    l.depth = j.at("depth").get<double>();
    l.contact = j.at("contact").get<double>();
    l.total = j.at("total").get<double>();
    return l;
}

inline nlohmann::json model_to_json(const ArticulatedModel& m) {
    auto vec = [](const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); };
    std::vector<double> deg(m.angles.size());
    for (size_t i = 0; i < m.angles.size(); ++i) deg[i] = rad2deg(m.angles[i]);
    return {{"rotation", vec(m.pose.rot)},
            {"translation", vec(m.pose.trans)},
            {"base_dims", vec(m.base.dims)},
            {"moving_dims", vec(m.moving.dims)},
            {"hinge",
             {{"edge", hinge_edge_name(m.hinge.edge)},
              {"offset", m.hinge.offset},
              {"extent", m.hinge.extent}}},
            {"angles_deg", deg}};
}

inline ArticulatedModel model_from_json(const nlohmann::json& j) {
    auto vec = [&](const char* key) {
        const auto& a = j.at(key);
        if (!a.is_array() || a.size() != 3)
            throw std::invalid_argument(std::string("model json: '") + key + "' must be [x,y,z]");
        return Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
    };
    ArticulatedModel m;
    m.pose.rot = vec("rotation");
    m.pose.trans = vec("translation");
    m.base.dims = vec("base_dims");
    m.moving.dims = vec("moving_dims");
    const auto& h = j.at("hinge");
    m.hinge.edge = hinge_edge_from_name(h.at("edge").get<std::string>());
    m.hinge.offset = h.at("offset").get<double>();
    m.hinge.extent = h.at("extent").get<double>();
    for (const auto& a : j.at("angles_deg")) m.angles.push_back(deg2rad(a.get<double>()));
    m.validate();
    return m;
}

inline nlohmann::json fit_result_to_json(const FitResult& r) {
    MotionParams mp = derive_motion(r.model);
    auto vec = [](const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); };
    return {{"template", r.template_id},
            {"hand", hand_name(r.hand)},
            {"model", model_to_json(r.model)},
            {"loss", loss_to_json(r.loss)},
            {"motion",
             {{"origin", vec(mp.origin)},
              {"direction", vec(mp.direction)},
              {"states_deg", mp.states_deg}}},
            {"trace", r.trace}};
}

inline FitResult fit_result_from_json(const nlohmann::json& j) {
    FitResult r;
    r.template_id = j.at("template").get<int>();
    r.hand = hand_from_name(j.at("hand").get<std::string>());
    r.model = model_from_json(j.at("model"));
    r.loss = loss_from_json(j.at("loss"));
    if (j.contains("trace")) r.trace = j.at("trace").get<std::vector<double>>();
    return r;
}

}  // namespace cubefit
