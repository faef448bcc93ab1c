#pragma once

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cubefit/dataset.hpp"
#include "cubefit/fitter.hpp"
#include "cubefit/metrics.hpp"
#include "cubefit/report.hpp"
#include "cubefit/synth.hpp"

namespace cubefit {

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

enum class Method { cubeopt, cuberand };

inline const char* method_name(Method m) {
    return m == Method::cubeopt ? "cubeopt" : "cuberand";
}

inline Method method_from_name(const std::string& s) {
    if (s == "cubeopt") return Method::cubeopt;
    if (s == "cuberand") return Method::cuberand;
    throw std::invalid_argument("unknown method '" + s + "' (want cubeopt|cuberand)");
}

struct SynthConfig {
    int scenes = 20;
    int frames = 30;
    std::string trajectory = "open";
    double hand_noise_sigma = 0.02;
    std::vector<std::string> categories = scene_categories();
    CameraIntrinsics cam;

    void validate() const {
        if (scenes <= 0) throw std::invalid_argument("synth config: scenes must be > 0");
        if (frames < 2) throw std::invalid_argument("synth config: frames must be >= 2");
        if (!(hand_noise_sigma >= 0.0))
            throw std::invalid_argument("synth config: hand_noise_sigma must be >= 0");
        trajectory_from_name(trajectory);
        if (categories.empty()) throw std::invalid_argument("synth config: no categories");
        std::vector<std::string> known = scene_categories();
        for (const std::string& c : categories)
            if (std::find(known.begin(), known.end(), c) == known.end())
                throw std::invalid_argument("synth config: unknown category '" + c + "'");
        cam.validate();
    }
};

struct RunConfig {
    std::uint64_t seed = 0;
    int jobs = 0;  // 0 = one worker per hardware thread
    Method method = Method::cubeopt;
    std::string dataset_dir = "dataset";
    std::string results_dir = "results";
    std::string out_dir = "out";
    bool sweep = false;
    bool debug_masks = false;
    SynthConfig synth;
    FitConfig fit;
    LossConfig loss;
    RenderConfig render;
    Thresholds thresholds;
    AggregateOptions agg;

    void validate() const {
        if (jobs < 0) throw std::invalid_argument("config: jobs must be >= 0");
        if (dataset_dir.empty() || results_dir.empty() || out_dir.empty())
            throw std::invalid_argument("config: directories must be non-empty");
        synth.validate();
        fit.validate();
        loss.validate();
        render.validate();
        thresholds.validate();
    }
};

// ---------------------------------------------------------------------------
// Config serialization (partial files overlay the defaults; unknown keys are
// ignored so configs stay forward-compatible)
// ---------------------------------------------------------------------------

inline nlohmann::json config_to_json(const RunConfig& c) {
    return {{"seed", c.seed},
            {"jobs", c.jobs},
            {"method", method_name(c.method)},
            {"dataset_dir", c.dataset_dir},
            {"results_dir", c.results_dir},
            {"out_dir", c.out_dir},
            {"sweep", c.sweep},
            {"debug_masks", c.debug_masks},
            {"synth",
             {{"scenes", c.synth.scenes},
              {"frames", c.synth.frames},
              {"trajectory", c.synth.trajectory},
              {"hand_noise_sigma", c.synth.hand_noise_sigma},
              {"categories", c.synth.categories},
              {"camera", camera_to_json(c.synth.cam)}}},
            {"fit",
             {{"iterations", c.fit.iterations},
              {"lr", c.fit.lr},
              {"decay_factor", c.fit.decay_factor},
              {"decay_frac", c.fit.decay_frac},
              {"beta1", c.fit.beta1},
              {"beta2", c.fit.beta2},
              {"adam_eps", c.fit.adam_eps}}},
            {"loss",
             {{"w_sil", c.loss.w_sil},
              {"w_dice", c.loss.w_dice},
              {"w_over", c.loss.w_over},
              {"w_depth", c.loss.w_depth},
              {"w_contact", c.loss.w_contact},
              {"eps_pen", c.loss.eps_pen},
              {"lambda_depth", c.loss.lambda_depth}}},
            {"render",
             {{"tau", c.render.tau},
              {"znear", c.render.znear},
              {"clamp_band", c.render.clamp_band}}},
            {"thresholds", thresholds_to_json(c.thresholds)},
            {"aggregate",
             {{"condition_motion_on_rp", c.agg.condition_motion_on_rp},
              {"accrpm_full_motion", c.agg.accrpm_full_motion}}}};
}

inline RunConfig config_from_json(const nlohmann::json& j) {
    RunConfig c;
    c.seed = j.value("seed", c.seed);
    c.jobs = j.value("jobs", c.jobs);
    if (j.contains("method")) c.method = method_from_name(j.at("method").get<std::string>());
    c.dataset_dir = j.value("dataset_dir", c.dataset_dir);
    c.results_dir = j.value("results_dir", c.results_dir);
    c.out_dir = j.value("out_dir", c.out_dir);
    c.sweep = j.value("sweep", c.sweep);
    c.debug_masks = j.value("debug_masks", c.debug_masks);
    if (j.contains("synth")) {
        const nlohmann::json& s = j.at("synth");
        c.synth.scenes = s.value("scenes", c.synth.scenes);
        c.synth.frames = s.value("frames", c.synth.frames);
        c.synth.trajectory = s.value("trajectory", c.synth.trajectory);
        c.synth.hand_noise_sigma = s.value("hand_noise_sigma", c.synth.hand_noise_sigma);
        if (s.contains("categories"))
            c.synth.categories = s.at("categories").get<std::vector<std::string>>();
        if (s.contains("camera")) c.synth.cam = camera_from_json(s.at("camera"));
    }
    if (j.contains("fit")) {
        const nlohmann::json& f = j.at("fit");
        c.fit.iterations = f.value("iterations", c.fit.iterations);
        c.fit.lr = f.value("lr", c.fit.lr);
        c.fit.decay_factor = f.value("decay_factor", c.fit.decay_factor);
        c.fit.decay_frac = f.value("decay_frac", c.fit.decay_frac);
        c.fit.beta1 = f.value("beta1", c.fit.beta1);
        c.fit.beta2 = f.value("beta2", c.fit.beta2);
        c.fit.adam_eps = f.value("adam_eps", c.fit.adam_eps);
    }
    if (j.contains("loss")) {
        const nlohmann::json& l = j.at("loss");
        c.loss.w_sil = l.value("w_sil", c.loss.w_sil);
        c.loss.w_dice = l.value("w_dice", c.loss.w_dice);
        c.loss.w_over = l.value("w_over", c.loss.w_over);
        c.loss.w_depth = l.value("w_depth", c.loss.w_depth);
        c.loss.w_contact = l.value("w_contact", c.loss.w_contact);
        c.loss.eps_pen = l.value("eps_pen", c.loss.eps_pen);
        c.loss.lambda_depth = l.value("lambda_depth", c.loss.lambda_depth);
    }
    if (j.contains("render")) {
        const nlohmann::json& r = j.at("render");
        c.render.tau = r.value("tau", c.render.tau);
        c.render.znear = r.value("znear", c.render.znear);
        c.render.clamp_band = r.value("clamp_band", c.render.clamp_band);
    }
    if (j.contains("thresholds")) c.thresholds = thresholds_from_json(j.at("thresholds"));
    if (j.contains("aggregate")) {
        const nlohmann::json& a = j.at("aggregate");
        c.agg.condition_motion_on_rp =
            a.value("condition_motion_on_rp", c.agg.condition_motion_on_rp);
        c.agg.accrpm_full_motion = a.value("accrpm_full_motion", c.agg.accrpm_full_motion);
    }
    c.validate();
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    return config_from_json(detail::parse_json_file(path));
}

// ---------------------------------------------------------------------------
// Work pool: tasks are independent and write disjoint slots, so results do
// not depend on the worker count or scheduling order.
// ---------------------------------------------------------------------------

inline int resolve_jobs(int jobs) {
    if (jobs > 0) return jobs;
    unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

inline void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
    jobs = std::min(resolve_jobs(jobs), std::max(n, 1));
    if (jobs <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::mutex mtx;
    std::exception_ptr err;
    auto worker = [&] {
        for (;;) {
            int i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(mtx);
                if (!err) err = std::current_exception();
            }
        }
    };
    std::vector<std::thread> threads;
    threads.reserve(jobs);
    for (int t = 0; t < jobs; ++t) threads.emplace_back(worker);
    for (std::thread& t : threads) t.join();
    if (err) std::rethrow_exception(err);
}

// ---------------------------------------------------------------------------
// synth: generate a dataset
// ---------------------------------------------------------------------------

inline std::vector<VideoSample> synth_samples(const RunConfig& cfg) {
    cfg.synth.validate();
    TrajectoryShape shape = trajectory_from_name(cfg.synth.trajectory);
    int n = cfg.synth.scenes;
    std::vector<VideoSample> samples(n);
    parallel_for(n, cfg.jobs, [&](int i) {
        const std::string& cat = cfg.synth.categories[i % cfg.synth.categories.size()];
        SceneSpec sp = category_spec(cat, derive_seed(cfg.seed, 0x5ce2e, i), cfg.synth.frames,
                                     shape);
        sp.cam = cfg.synth.cam;
        sp.hand_noise_sigma = cfg.synth.hand_noise_sigma;
        try {
            samples[i] = gen_scene(sp);
        } catch (const std::exception& e) {
            throw std::runtime_error("scene " + std::to_string(i) + ": " + e.what());
        }
    });
    return samples;
}

inline int cmd_synth(const RunConfig& cfg) {
    cfg.validate();
    std::vector<VideoSample> samples = synth_samples(cfg);
    write_dataset(samples, cfg.dataset_dir);
    std::printf("synth: wrote %zu videos to %s\n", samples.size(), cfg.dataset_dir.c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// fit: one result file per video
// ---------------------------------------------------------------------------

inline void write_debug_masks(const std::filesystem::path& dir, const ArticulatedModel& m,
                              const CameraIntrinsics& cam) {
    std::filesystem::create_directories(dir);
    char name[32];
    for (size_t t = 0; t < m.angles.size(); ++t) {
        AssembledFrame f = assemble(m, static_cast<int>(t));
        SoftMask base = hard_silhouette(f.base, cam);
        SoftMask moving = hard_silhouette(f.moving, cam);
        SoftMask object = base;
        for (size_t i = 0; i < object.data.size(); ++i)
            object.data[i] = std::max(object.data[i], moving.data[i]);
        std::snprintf(name, sizeof(name), "object_%04zu.png", t);
        write_mask_png(dir / name, object);
        std::snprintf(name, sizeof(name), "base_%04zu.png", t);
        write_mask_png(dir / name, base);
        std::snprintf(name, sizeof(name), "moving_%04zu.png", t);
        write_mask_png(dir / name, moving);
    }
}

inline int cmd_fit(const RunConfig& cfg) {
    cfg.validate();
    std::vector<VideoSample> samples = read_dataset(cfg.dataset_dir);
    std::filesystem::create_directories(cfg.results_dir);
    int nv = static_cast<int>(samples.size());
    std::vector<FitResult> best(nv);
    std::vector<std::string> errs(nv);
    std::vector<char> ok(nv, 0);

    if (cfg.method == Method::cubeopt) {
        const int runs_per = 24;
        struct Slot {
            bool ok = false;
            FitResult fr;
            std::string err;
        };
        std::vector<Slot> slots(static_cast<size_t>(nv) * runs_per);
        parallel_for(nv * runs_per, cfg.jobs, [&](int k) {
            int v = k / runs_per;
            std::vector<int> sub{k % runs_per};
            try {
                slots[k].fr = fit_video(samples[v].video, cfg.fit, cfg.loss, cfg.render, &sub);
                slots[k].ok = true;
            } catch (const std::exception& e) {
                slots[k].err = e.what();
            }
        });
        for (int v = 0; v < nv; ++v) {
            int pick = -1;
            for (int r = 0; r < runs_per; ++r) {
                const Slot& s = slots[static_cast<size_t>(v) * runs_per + r];
                if (!s.ok) {
                    if (errs[v].empty()) errs[v] = s.err;
                    continue;
                }
                auto key = [](const FitResult& f) {
                    return std::make_tuple(f.loss.total, f.template_id,
                                           f.hand == Hand::left ? 0 : 1);
                };
                if (pick < 0 || key(s.fr) < key(slots[static_cast<size_t>(v) * runs_per + pick].fr))
                    pick = r;
            }
            if (pick >= 0) {
                best[v] = slots[static_cast<size_t>(v) * runs_per + pick].fr;
                ok[v] = 1;
            } else if (errs[v].empty()) {
                errs[v] = "all runs failed";
            }
        }
    } else {
        parallel_for(nv, cfg.jobs, [&](int v) {
            try {
                best[v] = cube_rand(samples[v].video, derive_seed(cfg.seed, 0xc27a4d, v),
                                    cfg.loss, cfg.render);
                ok[v] = 1;
            } catch (const std::exception& e) {
                errs[v] = e.what();
            }
        });
    }

    int failures = 0;
    for (int v = 0; v < nv; ++v) {
        if (!ok[v]) {
            ++failures;
            std::fprintf(stderr, "fit %s failed: %s\n", samples[v].id.c_str(), errs[v].c_str());
            continue;
        }
        nlohmann::json j = fit_result_to_json(best[v]);
        j["method"] = method_name(cfg.method);
        j["video"] = samples[v].id;
        detail::write_file_atomic(std::filesystem::path(cfg.results_dir) / (samples[v].id + ".json"),
                                  j.dump(2) + "\n");
        std::printf("fit %s: loss=%.6f template=%d hand=%s\n", samples[v].id.c_str(),
                    best[v].loss.total, best[v].template_id, hand_name(best[v].hand));
        if (cfg.debug_masks) {
            try {
                write_debug_masks(std::filesystem::path(cfg.results_dir) / (samples[v].id + "_debug"),
                                  best[v].model, samples[v].video.cam);
            } catch (const std::exception& e) {
                std::fprintf(stderr, "debug masks %s: %s\n", samples[v].id.c_str(), e.what());
            }
        }
    }
    return failures > 0 ? 1 : 0;
}

// ---------------------------------------------------------------------------
// eval: metrics against ground truth
// ---------------------------------------------------------------------------

inline std::vector<FitResult> read_fit_results(const std::vector<VideoSample>& samples,
                                               const std::filesystem::path& dir) {
    std::vector<FitResult> out;
    out.reserve(samples.size());
    for (const VideoSample& s : samples) {
        std::filesystem::path p = dir / (s.id + ".json");
        if (!std::filesystem::exists(p))
            throw std::runtime_error("missing fit result: " + p.string());
        try {
            out.push_back(fit_result_from_json(detail::parse_json_file(p)));
        } catch (const std::exception& e) {
            throw std::runtime_error(p.string() + ": " + e.what());
        }
        if (out.back().model.angles.size() != static_cast<size_t>(s.video.frames()))
            throw std::runtime_error(p.string() + ": frame count does not match video " + s.id);
    }
    return out;
}

inline std::vector<VideoFrames> eval_frames(const std::vector<VideoSample>& samples,
                                            const std::vector<FitResult>& fits,
                                            std::uint64_t seed, int jobs) {
    if (samples.size() != fits.size())
        throw std::invalid_argument("eval_frames: sample/result count mismatch");
    int nv = static_cast<int>(samples.size());
    std::vector<VideoFrames> vf(nv);
    parallel_for(nv, jobs, [&](int v) {
        VideoFrames f;
        f.id = samples[v].id;
        f.category = samples[v].category;
        int n = samples[v].video.frames();
        f.frames.resize(n);
        std::uint64_t s = derive_seed(seed, 0xe7a1, v);
        for (int t = 0; t < n; ++t)
            f.frames[t] = frame_eval(fits[v].model, samples[v].gt_model, t, 10000, s);
        vf[v] = std::move(f);
    });
    return vf;
}

struct MethodEval {
    std::string name;
    std::vector<VideoFrames> frames;
};

inline void write_reports(const std::filesystem::path& out_dir,
                          const std::vector<MethodEval>& evals, const Thresholds& th,
                          const AggregateOptions& opt, bool sweep) {
    std::filesystem::create_directories(out_dir);
    std::vector<std::pair<std::string, GroupReport>> rows;
    for (const MethodEval& e : evals) {
        BenchReport rep = aggregate(e.frames, th, opt);
        rows.emplace_back(e.name, rep.dataset);
        nlohmann::json j = report_to_json(rep);
        j["method"] = e.name;
        detail::write_file_atomic(out_dir / ("report_" + e.name + ".json"), j.dump(2) + "\n");
    }
    detail::write_file_atomic(out_dir / "table1.csv", table1_csv(rows));
    detail::write_file_atomic(out_dir / "table2.csv", table2_csv(rows, th));
    detail::write_file_atomic(out_dir / "schema.json", report_schema(th).dump(2) + "\n");
    if (sweep) {
        std::vector<Thresholds> levels = sweep_levels();
        std::vector<std::pair<std::string, std::vector<GroupReport>>> srows;
        for (const MethodEval& e : evals) {
            std::vector<GroupReport> groups;
            for (const Thresholds& lv : levels) groups.push_back(aggregate(e.frames, lv, opt).dataset);
            srows.emplace_back(e.name, std::move(groups));
        }
        detail::write_file_atomic(out_dir / "sweep.csv", sweep_csv(srows));
    }
}

inline int cmd_eval(const RunConfig& cfg) {
    cfg.validate();
    std::vector<VideoSample> samples = read_dataset(cfg.dataset_dir);
    std::vector<FitResult> fits = read_fit_results(samples, cfg.results_dir);
    std::vector<MethodEval> evals;
    evals.push_back({method_name(cfg.method), eval_frames(samples, fits, cfg.seed, cfg.jobs)});
    write_reports(cfg.out_dir, evals, cfg.thresholds, cfg.agg, cfg.sweep);
    std::printf("eval: wrote report for %zu videos to %s\n", samples.size(), cfg.out_dir.c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// bench: synth -> fit both methods -> comparative report
// ---------------------------------------------------------------------------

inline int cmd_bench(const RunConfig& cfg) {
    cfg.validate();
    std::filesystem::path out = cfg.out_dir;
    RunConfig c = cfg;
    c.dataset_dir = (out / "dataset").string();
    cmd_synth(c);
    std::vector<VideoSample> samples = read_dataset(c.dataset_dir);
    std::vector<MethodEval> evals;
    for (Method m : {Method::cubeopt, Method::cuberand}) {
        RunConfig cm = c;
        cm.method = m;
        cm.results_dir = (out / "results" / method_name(m)).string();
        if (cmd_fit(cm) != 0)
            throw std::runtime_error(std::string("bench: fit failed for method ") + method_name(m));
        std::vector<FitResult> fits = read_fit_results(samples, cm.results_dir);
        evals.push_back({method_name(m), eval_frames(samples, fits, c.seed, c.jobs)});
    }
    write_reports(out, evals, cfg.thresholds, cfg.agg, cfg.sweep);
    std::printf("bench: wrote comparative report to %s\n", out.string().c_str());
    return 0;
}

}  // namespace cubefit
