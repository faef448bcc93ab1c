#pragma once

#include <stdexcept>
#include <vector>

#include "core.hpp"

namespace cubefit {

// Dense occupancy image, row-major, values in [0,1].
struct SoftMask {
    int width = 0, height = 0;
    std::vector<double> data;  // data[row * width + col]

    SoftMask() = default;
    SoftMask(int w, int h, double fill = 0.0) : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {
        if (w <= 0 || h <= 0) throw std::invalid_argument("SoftMask: non-positive size");
    }

    double& at(int row, int col) { return data[static_cast<size_t>(row) * width + col]; }
    double at(int row, int col) const { return data[static_cast<size_t>(row) * width + col]; }
    size_t size() const { return data.size(); }
};

inline void check_same_shape(const SoftMask& a, const SoftMask& b, const char* what) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument(std::string(what) + ": mask shapes differ");
}

// Probabilistic union: at least one part covers the pixel.
inline SoftMask soft_union(const SoftMask& a, const SoftMask& b) {
    check_same_shape(a, b, "soft_union");
    SoftMask r(a.width, a.height);
    for (size_t i = 0; i < a.data.size(); ++i)
        r.data[i] = a.data[i] + b.data[i] - a.data[i] * b.data[i];
    return r;
}

}  // namespace cubefit
