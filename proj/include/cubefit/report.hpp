#pragma once

#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cubefit/metrics.hpp"

namespace cubefit {

inline std::string fmt_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

inline std::string fmt_err(const ErrorStat& e) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%.4f ± %.4f", e.mean, e.se);
    return buf;
}

inline std::string fmt_acc(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", v);
    return buf;
}

namespace detail {
inline std::string join_csv(const std::vector<std::string>& cells) {
    std::string s;
    for (size_t i = 0; i < cells.size(); ++i) {
        if (i) s += ',';
        s += cells[i];
    }
    s += '\n';
    return s;
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Error table (mean +- standard error per method)
// ---------------------------------------------------------------------------

inline std::vector<std::string> table1_columns() {
    return {"Method",      "CD (Object)", "CD (Moving)", "Rotation", "Translation",
            "Scale",       "Origin",      "Axis",        "Direction", "State"};
}

inline std::string table1_csv(const std::vector<std::pair<std::string, GroupReport>>& rows) {
    std::string out = detail::join_csv(table1_columns());
    for (const auto& [method, g] : rows) {
        const MetricStats& e = g.errors;
        out += detail::join_csv({method, fmt_err(e.cd_object), fmt_err(e.cd_moving),
                                 fmt_err(e.rot_deg), fmt_err(e.trans), fmt_err(e.scale),
                                 fmt_err(e.origin), fmt_err(e.axis_deg), fmt_err(e.dir_deg),
                                 fmt_err(e.state_deg)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Accuracy table (percent per method; thresholds surface in the header)
// ---------------------------------------------------------------------------

inline std::vector<std::string> table2_columns(const Thresholds& th) {
    return {"Method",
            "Object@" + fmt_num(th.cd),
            "Moving@" + fmt_num(th.cd),
            "AccR",
            "Rot@" + fmt_num(th.rot_deg),
            "Trans@" + fmt_num(th.trans),
            "Scale@" + fmt_num(th.scale),
            "AccP",
            "O@" + fmt_num(th.origin),
            "OA@" + fmt_num(th.axis_deg),
            "OAD@" + fmt_num(th.dir_deg),
            "AccM@" + fmt_num(th.state_deg),
            "AccRP",
            "RPOA",
            "AccRPM"};
}

inline std::string table2_csv(const std::vector<std::pair<std::string, GroupReport>>& rows,
                              const Thresholds& th) {
    std::string out = detail::join_csv(table2_columns(th));
    for (const auto& [method, g] : rows) {
        const AccuracySet& a = g.acc;
        out += detail::join_csv({method, fmt_acc(a.object_cd), fmt_acc(a.moving_cd),
                                 fmt_acc(a.accr), fmt_acc(a.rot), fmt_acc(a.trans),
                                 fmt_acc(a.scale), fmt_acc(a.accp), fmt_acc(a.o), fmt_acc(a.oa),
                                 fmt_acc(a.oad), fmt_acc(a.accm), fmt_acc(a.accrp),
                                 fmt_acc(a.rpoa), fmt_acc(a.accrpm)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Threshold sweep (joint relaxation across the threshold families)
// ---------------------------------------------------------------------------

// Five joint levels: distance thresholds (CD, origin, translation), scale,
// and all angle thresholds move together from strictest to loosest.
inline std::vector<Thresholds> sweep_levels() {
    const double dist[5] = {0.25, 0.5, 1.0, 1.5, 2.0};
    const double scale[5] = {0.2, 0.3, 0.4, 0.5, 0.6};
    const double ang[5] = {5.0, 10.0, 15.0, 20.0, 25.0};
    std::vector<Thresholds> out(5);
    for (int i = 0; i < 5; ++i) {
        out[i].cd = dist[i];
        out[i].origin = dist[i];
        out[i].trans = dist[i];
        out[i].scale = scale[i];
        out[i].rot_deg = ang[i];
        out[i].axis_deg = ang[i];
        out[i].dir_deg = ang[i];
        out[i].state_deg = ang[i];
    }
    return out;
}

inline std::vector<std::string> sweep_columns() {
    return {"Method", "CD",   "Origin", "Trans", "Scale", "Angle",
            "AccR",   "AccP", "AccM",   "AccRP", "AccRPM"};
}

// One row per (method, level); `levels[i]` aggregated per method in order.
inline std::string sweep_csv(
    const std::vector<std::pair<std::string, std::vector<GroupReport>>>& rows) {
    std::vector<Thresholds> lv = sweep_levels();
    std::string out = detail::join_csv(sweep_columns());
    for (const auto& [method, groups] : rows) {
        if (groups.size() != lv.size())
            throw std::invalid_argument("sweep_csv: expected one group per level");
        for (size_t i = 0; i < lv.size(); ++i) {
            const AccuracySet& a = groups[i].acc;
            out += detail::join_csv({method, fmt_num(lv[i].cd), fmt_num(lv[i].origin),
                                     fmt_num(lv[i].trans), fmt_num(lv[i].scale),
                                     fmt_num(lv[i].rot_deg), fmt_acc(a.accr), fmt_acc(a.accp),
                                     fmt_acc(a.accm), fmt_acc(a.accrp), fmt_acc(a.accrpm)});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON detail + schema
// ---------------------------------------------------------------------------

inline nlohmann::json thresholds_to_json(const Thresholds& t) {
    return {{"cd", t.cd},           {"rot_deg", t.rot_deg},   {"trans", t.trans},
            {"scale", t.scale},     {"origin", t.origin},     {"axis_deg", t.axis_deg},
            {"dir_deg", t.dir_deg}, {"state_deg", t.state_deg}};
}

inline Thresholds thresholds_from_json(const nlohmann::json& j) {
    Thresholds t;
    t.cd = j.at("cd").get<double>();
    t.rot_deg = j.at("rot_deg").get<double>();
    t.trans = j.at("trans").get<double>();
    t.scale = j.at("scale").get<double>();
    t.origin = j.at("origin").get<double>();
    t.axis_deg = j.at("axis_deg").get<double>();
    t.dir_deg = j.at("dir_deg").get<double>();
    t.state_deg = j.at("state_deg").get<double>();
    t.validate();
    return t;
}

inline nlohmann::json error_stat_to_json(const ErrorStat& e) {
    return {{"mean", e.mean}, {"se", e.se}};
}

inline nlohmann::json metric_stats_to_json(const MetricStats& m) {
    return {{"cd_object", error_stat_to_json(m.cd_object)},
            {"cd_moving", error_stat_to_json(m.cd_moving)},
            {"rot_deg", error_stat_to_json(m.rot_deg)},
            {"trans", error_stat_to_json(m.trans)},
            {"scale", error_stat_to_json(m.scale)},
            {"origin", error_stat_to_json(m.origin)},
            {"axis_deg", error_stat_to_json(m.axis_deg)},
            {"dir_deg", error_stat_to_json(m.dir_deg)},
            {"state_deg", error_stat_to_json(m.state_deg)}};
}

inline nlohmann::json accuracy_to_json(const AccuracySet& a) {
    return {{"object_cd", a.object_cd}, {"moving_cd", a.moving_cd}, {"accr", a.accr},
            {"rot", a.rot},             {"trans", a.trans},         {"scale", a.scale},
            {"accp", a.accp},           {"o", a.o},                 {"oa", a.oa},
            {"oad", a.oad},             {"accm", a.accm},           {"accrp", a.accrp},
            {"rpoa", a.rpoa},           {"accrpm", a.accrpm}};
}

inline nlohmann::json frame_metrics_to_json(const FrameMetrics& f) {
    return {{"cd_object", f.cd_object},     {"cd_moving", f.cd_moving},
            {"rot_err_deg", f.rot_err_deg}, {"trans_err", f.trans_err},
            {"scale_err", f.scale_err},     {"origin_err", f.origin_err},
            {"axis_err_deg", f.axis_err_deg}, {"dir_err_deg", f.dir_err_deg},
            {"state_err_deg", f.state_err_deg}};
}

inline nlohmann::json group_to_json(const GroupReport& g) {
    return {{"n_videos", g.n_videos},
            {"errors", metric_stats_to_json(g.errors)},
            {"accuracies", accuracy_to_json(g.acc)}};
}

inline nlohmann::json report_to_json(const BenchReport& r) {
    nlohmann::json vids = nlohmann::json::array();
    for (const VideoSummary& v : r.videos)
        vids.push_back({{"id", v.id},
                        {"category", v.category},
                        {"mean_errors", frame_metrics_to_json(v.mean)},
                        {"accuracies", accuracy_to_json(v.acc)}});
    nlohmann::json cats = nlohmann::json::object();
    for (const auto& [name, g] : r.categories) cats[name] = group_to_json(g);
    return {{"thresholds", thresholds_to_json(r.thresholds)},
            {"conditioned_motion", r.options.condition_motion_on_rp},
            {"accrpm_full_motion", r.options.accrpm_full_motion},
            {"dataset", group_to_json(r.dataset)},
            {"categories", cats},
            {"videos", vids}};
}

// Column schema written next to every CSV so downstream readers can detect
// format drift.
inline nlohmann::json report_schema(const Thresholds& th) {
    return {{"schema_version", 1},
            {"table1", {{"columns", table1_columns()}, {"cell", "mean ± se"}}},
            {"table2", {{"columns", table2_columns(th)}, {"cell", "percent"}}},
            {"sweep", {{"columns", sweep_columns()}, {"cell", "percent"}}}};
}

}  // namespace cubefit
