#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "core.hpp"

namespace cubefit {

// Pinhole intrinsics; pixel coordinates follow image convention
// (u right, v down), principal point (cx, cy).
struct CameraIntrinsics {
    double fx = 110.0, fy = 110.0;
    double cx = 64.0, cy = 64.0;
    int width = 128, height = 128;

    void validate() const {
        if (!(fx > 0.0 && fy > 0.0)) throw std::invalid_argument("CameraIntrinsics: focal lengths must be positive");
        if (width <= 0 || height <= 0) throw std::invalid_argument("CameraIntrinsics: non-positive image size");
    }
};

// Perspective projection of camera-frame points. Points must be in front of
// the camera (z > 0); callers that can see behind-camera geometry check first.
inline Vec2 project(const CameraIntrinsics& K, const Vec3& p) {
    if (!(p.z() > 0.0)) throw std::domain_error("project: point not in front of camera");
    return Vec2(K.fx * p.x() / p.z() + K.cx, K.fy * p.y() / p.z() + K.cy);
}

inline std::vector<Vec2> project(const CameraIntrinsics& K, std::span<const Vec3> pts) {
    std::vector<Vec2> out;
    out.reserve(pts.size());
    for (const Vec3& p : pts) out.push_back(project(K, p));
    return out;
}

}  // namespace cubefit
