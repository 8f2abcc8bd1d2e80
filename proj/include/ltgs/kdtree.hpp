#pragma once

#include "ltgs/types.hpp"

namespace ltgs {

// Median-split kd-tree over 3D points; supports nearest-neighbor and k-NN
// queries. Points are copied at build time.
class KdTree3 {
public:
    explicit KdTree3(std::vector<Vec3> points);

    struct Hit {
        std::size_t index;
        double distance;
    };

    Hit nearest(const Vec3& q) const;
    std::vector<Hit> knn(const Vec3& q, int k) const;  // sorted by distance
    std::size_t size() const { return points_.size(); }
    const Vec3& point(std::size_t i) const { return points_[i]; }

private:
    struct Node {
        int axis = -1;      // -1 marks a leaf
        double split = 0;
        int left = -1, right = -1;
        std::size_t begin = 0, end = 0;  // leaf range into order_
    };

    void build(int node, std::size_t begin, std::size_t end, int depth);
    template <typename Visit>
    void search(int node, const Vec3& q, double& worst, const Visit& visit) const;

    std::vector<Vec3> points_;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
};

}  // namespace ltgs
