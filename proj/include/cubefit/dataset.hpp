#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <png.h>

#include "cubefit/fitter.hpp"
#include "cubefit/synth.hpp"

namespace cubefit {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Atomic file helpers (write-temp-then-rename)
// ---------------------------------------------------------------------------

namespace detail {

inline void write_file_atomic(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return s;
}

inline nlohmann::json parse_json_file(const fs::path& path) {
    std::string text = read_file(path);
    try {
        return nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

struct PngCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    std::FILE* fp = nullptr;
    bool writing = false;
    ~PngCloser() {
        if (png) {
            if (writing)
                png_destroy_write_struct(&png, info ? &info : nullptr);
            else
                png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        }
        if (fp) std::fclose(fp);
    }
};

}  // namespace detail

// 8-bit grayscale PNG, written atomically.
inline void write_gray_png(const fs::path& path, int width, int height,
                           const std::uint8_t* data) {
    fs::path tmp = path;
    tmp += ".tmp";
    detail::PngCloser c;
    c.writing = true;
    c.fp = std::fopen(tmp.c_str(), "wb");
    if (!c.fp) throw std::runtime_error("cannot open for writing: " + tmp.string());
    c.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!c.png) throw std::runtime_error("png writer allocation failed");
    c.info = png_create_info_struct(c.png);
    if (!c.info) throw std::runtime_error("png writer allocation failed");
    if (setjmp(png_jmpbuf(c.png))) throw std::runtime_error("png write failed: " + tmp.string());
    png_init_io(c.png, c.fp);
    png_set_IHDR(c.png, c.info, width, height, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(c.png, c.info);
    for (int y = 0; y < height; ++y)
        png_write_row(c.png, const_cast<png_bytep>(data + static_cast<size_t>(y) * width));
    png_write_end(c.png, nullptr);
    std::fclose(c.fp);
    c.fp = nullptr;
    fs::rename(tmp, path);
}

inline std::vector<std::uint8_t> read_gray_png(const fs::path& path, int& width, int& height) {
    detail::PngCloser c;
    c.fp = std::fopen(path.c_str(), "rb");
    if (!c.fp) throw std::runtime_error("cannot open: " + path.string());
    c.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!c.png) throw std::runtime_error("png reader allocation failed");
    c.info = png_create_info_struct(c.png);
    if (!c.info) throw std::runtime_error("png reader allocation failed");
    if (setjmp(png_jmpbuf(c.png)))
        throw std::runtime_error("png read failed (corrupt or truncated): " + path.string());
    png_init_io(c.png, c.fp);
    png_read_info(c.png, c.info);
    if (png_get_color_type(c.png, c.info) != PNG_COLOR_TYPE_GRAY ||
        png_get_bit_depth(c.png, c.info) != 8)
        throw std::runtime_error("expected 8-bit grayscale png: " + path.string());
    width = static_cast<int>(png_get_image_width(c.png, c.info));
    height = static_cast<int>(png_get_image_height(c.png, c.info));
    std::vector<std::uint8_t> data(static_cast<size_t>(width) * height);
    for (int y = 0; y < height; ++y)
        png_read_row(c.png, data.data() + static_cast<size_t>(y) * width, nullptr);
    png_read_end(c.png, nullptr);
    return data;
}

inline void write_mask_png(const fs::path& path, const SoftMask& m) {
    std::vector<std::uint8_t> bytes(m.data.size());
    for (size_t i = 0; i < m.data.size(); ++i) bytes[i] = m.data[i] > 0.5 ? 255 : 0;
    write_gray_png(path, m.width, m.height, bytes.data());
}

inline SoftMask read_mask_png(const fs::path& path) {
    int w = 0, h = 0;
    std::vector<std::uint8_t> bytes = read_gray_png(path, w, h);
    SoftMask m(w, h);
    for (size_t i = 0; i < bytes.size(); ++i) m.data[i] = bytes[i] >= 128 ? 1.0 : 0.0;
    return m;
}

// ---------------------------------------------------------------------------
// JSON pieces
// ---------------------------------------------------------------------------

inline nlohmann::json camera_to_json(const CameraIntrinsics& k) {
    return {{"fx", k.fx}, {"fy", k.fy},       {"cx", k.cx},
            {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

inline CameraIntrinsics camera_from_json(const nlohmann::json& j) {
    CameraIntrinsics k;
    k.fx = j.at("fx").get<double>();
    k.fy = j.at("fy").get<double>();
    k.cx = j.at("cx").get<double>();
    k.cy = j.at("cy").get<double>();
    k.width = j.at("width").get<int>();
    k.height = j.at("height").get<int>();
    k.validate();
    return k;
}

inline nlohmann::json human_to_json(const HumanObservation& h) {
    auto track = [](const std::vector<Vec3>& v) {
        nlohmann::json a = nlohmann::json::array();
        for (const Vec3& p : v) a.push_back({p.x(), p.y(), p.z()});
        return a;
    };
    return {{"left", track(h.left)}, {"right", track(h.right)}, {"mean_z", h.mean_z}};
}

inline HumanObservation human_from_json(const nlohmann::json& j) {
    auto track = [](const nlohmann::json& a, const char* key) {
        std::vector<Vec3> v;
        for (const auto& p : a) {
            if (!p.is_array() || p.size() != 3)
                throw std::invalid_argument(std::string("human json: '") + key +
                                            "' entries must be [x,y,z]");
            v.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
        }
        return v;
    };
    HumanObservation h;
    h.left = track(j.at("left"), "left");
    h.right = track(j.at("right"), "right");
    h.mean_z = j.at("mean_z").get<std::vector<double>>();
    return h;
}

inline nlohmann::json motion_to_json(const MotionParams& m) {
    return {{"origin", {m.origin.x(), m.origin.y(), m.origin.z()}},
            {"direction", {m.direction.x(), m.direction.y(), m.direction.z()}},
            {"states_deg", m.states_deg}};
}

inline MotionParams motion_from_json(const nlohmann::json& j) {
    auto vec = [&](const char* key) {
        const auto& a = j.at(key);
        if (!a.is_array() || a.size() != 3)
            throw std::invalid_argument(std::string("motion json: '") + key +
                                        "' must be [x,y,z]");
        return Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
    };
    MotionParams m;
    m.origin = vec("origin");
    m.direction = vec("direction");
    m.states_deg = j.at("states_deg").get<std::vector<double>>();
    return m;
}

// ---------------------------------------------------------------------------
// Video sample directories
// ---------------------------------------------------------------------------

namespace detail {
inline std::string frame_name(const char* stem, int t) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s_%04d.png", stem, t);
    return buf;
}
}  // namespace detail

inline void write_video(const fs::path& dir, const VideoSample& s) {
    s.validate();
    fs::create_directories(dir / "masks");
    detail::write_file_atomic(dir / "camera.json", camera_to_json(s.video.cam).dump(2) + "\n");
    detail::write_file_atomic(dir / "human.json", human_to_json(s.video.human).dump(2) + "\n");
    nlohmann::json gt{{"model", model_to_json(s.gt_model)},
                      {"motion", motion_to_json(s.gt_motion)}};
    detail::write_file_atomic(dir / "gt.json", gt.dump(2) + "\n");
    nlohmann::json meta{{"category", s.category},
                        {"frames", s.video.frames()},
                        {"seed", s.seed},
                        {"hand", hand_name(s.gt_hand)}};
    detail::write_file_atomic(dir / "meta.json", meta.dump(2) + "\n");
    for (int t = 0; t < s.video.frames(); ++t) {
        write_mask_png(dir / "masks" / detail::frame_name("object", t), s.video.object_mask[t]);
        write_mask_png(dir / "masks" / detail::frame_name("base", t), s.video.base_mask[t]);
        write_mask_png(dir / "masks" / detail::frame_name("moving", t), s.video.moving_mask[t]);
    }
}

inline VideoSample read_video(const fs::path& dir) {
    if (!fs::exists(dir)) throw std::runtime_error("missing video directory: " + dir.string());
    for (const char* f : {"camera.json", "human.json", "gt.json", "meta.json"})
        if (!fs::exists(dir / f))
            throw std::runtime_error("missing " + std::string(f) + " in " + dir.string());
    VideoSample s;
    s.id = dir.filename().string();
    try {
        s.video.cam = camera_from_json(detail::parse_json_file(dir / "camera.json"));
    } catch (const std::exception& e) {
        throw std::runtime_error((dir / "camera.json").string() + ": " + e.what());
    }
    try {
        s.video.human = human_from_json(detail::parse_json_file(dir / "human.json"));
    } catch (const std::exception& e) {
        throw std::runtime_error((dir / "human.json").string() + ": " + e.what());
    }
    try {
        nlohmann::json gt = detail::parse_json_file(dir / "gt.json");
        s.gt_model = model_from_json(gt.at("model"));
        s.gt_motion = motion_from_json(gt.at("motion"));
    } catch (const std::exception& e) {
        throw std::runtime_error((dir / "gt.json").string() + ": " + e.what());
    }
    int n = 0;
    try {
        nlohmann::json meta = detail::parse_json_file(dir / "meta.json");
        s.category = meta.at("category").get<std::string>();
        n = meta.at("frames").get<int>();
        s.seed = meta.at("seed").get<std::uint64_t>();
        if (meta.contains("hand")) s.gt_hand = hand_from_name(meta.at("hand").get<std::string>());
    } catch (const std::exception& e) {
        throw std::runtime_error((dir / "meta.json").string() + ": " + e.what());
    }
    for (int t = 0; t < n; ++t) {
        try {
            s.video.object_mask.push_back(read_mask_png(dir / "masks" / detail::frame_name("object", t)));
            s.video.base_mask.push_back(read_mask_png(dir / "masks" / detail::frame_name("base", t)));
            s.video.moving_mask.push_back(read_mask_png(dir / "masks" / detail::frame_name("moving", t)));
        } catch (const std::exception& e) {
            throw std::runtime_error("frame " + std::to_string(t) + ": " + e.what());
        }
    }
    s.validate();
    return s;
}

// ---------------------------------------------------------------------------
// Datasets (directory of video dirs + manifest)
// ---------------------------------------------------------------------------

inline std::string video_dir_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "video_%04d", index);
    return buf;
}

inline void write_dataset(const std::vector<VideoSample>& samples, const fs::path& dir) {
    fs::create_directories(dir);
    nlohmann::json names = nlohmann::json::array();
    for (size_t i = 0; i < samples.size(); ++i) {
        VideoSample s = samples[i];
        if (s.id.empty()) s.id = video_dir_name(static_cast<int>(i));
        write_video(dir / s.id, s);
        names.push_back(s.id);
    }
    nlohmann::json manifest{{"count", samples.size()}, {"videos", names}};
    detail::write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

inline std::vector<std::string> read_manifest(const fs::path& dir) {
    fs::path mf = dir / "manifest.json";
    if (!fs::exists(mf)) throw std::runtime_error("missing manifest.json in " + dir.string());
    nlohmann::json j = detail::parse_json_file(mf);
    std::vector<std::string> names;
    try {
        names = j.at("videos").get<std::vector<std::string>>();
    } catch (const std::exception& e) {
        throw std::runtime_error(mf.string() + ": " + e.what());
    }
    return names;
}

inline std::vector<VideoSample> read_dataset(const fs::path& dir) {
    std::vector<VideoSample> out;
    for (const std::string& name : read_manifest(dir)) out.push_back(read_video(dir / name));
    return out;
}

}  // namespace cubefit
