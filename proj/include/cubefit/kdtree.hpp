#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "core.hpp"

namespace cubefit {

// Exact nearest-neighbor kd-tree over 3-D points (median split, leaf buckets).
class KdTree3 {
public:
    explicit KdTree3(std::span<const Vec3> pts) : pts_(pts.begin(), pts.end()) {
        if (pts_.empty()) throw std::invalid_argument("KdTree3: empty point set");
        order_.resize(pts_.size());
        std::iota(order_.begin(), order_.end(), 0);
        nodes_.reserve(pts_.size() / kLeaf * 2 + 2);
        root_ = build(0, static_cast<int>(pts_.size()));
    }

    // (squared distance, point index)
    std::pair<double, int> nearest(const Vec3& q) const {
        double best = std::numeric_limits<double>::infinity();
        int best_i = -1;
        search(root_, q, best, best_i);
        return {best, best_i};
    }

private:
    static constexpr int kLeaf = 8;
    struct Node {
        double split = 0.0;
        int axis = -1;   // -1 for leaf
        int lo = 0, hi = 0;  // leaf: range in order_
        int left = -1, right = -1;
    };

    int build(int lo, int hi) {
        Node n;
        if (hi - lo <= kLeaf) {
            n.axis = -1;
            n.lo = lo;
            n.hi = hi;
            nodes_.push_back(n);
            return static_cast<int>(nodes_.size()) - 1;
        }
        Vec3 mn = pts_[order_[lo]], mx = mn;
        for (int i = lo; i < hi; ++i) {
            mn = mn.cwiseMin(pts_[order_[i]]);
            mx = mx.cwiseMax(pts_[order_[i]]);
        }
        int axis = 0;
        (mx - mn).maxCoeff(&axis);
        int mid = (lo + hi) / 2;
        std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                         [&](int a, int b) { return pts_[a][axis] < pts_[b][axis]; });
        n.axis = axis;
        n.split = pts_[order_[mid]][axis];
        int self = static_cast<int>(nodes_.size());
        nodes_.push_back(n);
        int l = build(lo, mid);
        int r = build(mid, hi);
        nodes_[self].left = l;
        nodes_[self].right = r;
        return self;
    }

    void search(int ni, const Vec3& q, double& best, int& best_i) const {
        const Node& n = nodes_[ni];
        if (n.axis < 0) {
            for (int i = n.lo; i < n.hi; ++i) {
                double d = (pts_[order_[i]] - q).squaredNorm();
                if (d < best) {
                    best = d;
                    best_i = order_[i];
                }
            }
            return;
        }
        double diff = q[n.axis] - n.split;
        int first = diff < 0.0 ? n.left : n.right;
        int second = diff < 0.0 ? n.right : n.left;
        search(first, q, best, best_i);
        if (diff * diff < best) search(second, q, best, best_i);
    }

    std::vector<Vec3> pts_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
    int root_ = 0;
};

}  // namespace cubefit
