#include "ltgs/kdtree.hpp"

#include <algorithm>
#include <queue>

namespace ltgs {

namespace {
constexpr std::size_t kLeafSize = 16;
}

KdTree3::KdTree3(std::vector<Vec3> points) : points_(std::move(points)) {
    if (points_.empty()) throw std::invalid_argument("KdTree3: empty point set");
    order_.resize(points_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    nodes_.emplace_back();
    build(0, 0, points_.size(), 0);
}

void KdTree3::build(int node, std::size_t begin, std::size_t end, int depth) {
    if (end - begin <= kLeafSize) {
        nodes_[node].axis = -1;
        nodes_[node].begin = begin;
        nodes_[node].end = end;
        return;
    }
    // Split along the widest axis of the range's bounding box.
    Vec3 lo = points_[order_[begin]], hi = lo;
    for (std::size_t i = begin; i < end; ++i) {
        lo = lo.cwiseMin(points_[order_[i]]);
        hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis;
    (hi - lo).maxCoeff(&axis);
    const std::size_t mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::size_t a, std::size_t b) {
                         return points_[a][axis] < points_[b][axis];
                     });
    nodes_[node].axis = axis;
    nodes_[node].split = points_[order_[mid]][axis];
    const int left = int(nodes_.size());
    nodes_.emplace_back();
    nodes_.emplace_back();
    nodes_[node].left = left;
    nodes_[node].right = left + 1;
    build(left, begin, mid, depth + 1);
    build(left + 1, mid, end, depth + 1);
}

template <typename Visit>
void KdTree3::search(int node, const Vec3& q, double& worst, const Visit& visit) const {
    const Node& n = nodes_[node];
    if (n.axis < 0) {
        for (std::size_t i = n.begin; i < n.end; ++i) visit(order_[i]);
        return;
    }
    const double d = q[n.axis] - n.split;
    const int near = d < 0 ? n.left : n.right;
    const int far = d < 0 ? n.right : n.left;
    search(near, q, worst, visit);
    if (d * d < worst) search(far, q, worst, visit);
}

KdTree3::Hit KdTree3::nearest(const Vec3& q) const {
    Hit best{0, std::numeric_limits<double>::infinity()};
    double worst = best.distance;
    search(0, q, worst, [&](std::size_t i) {
        const double d2 = (points_[i] - q).squaredNorm();
        if (d2 < worst || (d2 == worst && i < best.index)) {
            worst = d2;
            best = {i, d2};
        }
    });
    best.distance = std::sqrt(best.distance);
    return best;
}

std::vector<KdTree3::Hit> KdTree3::knn(const Vec3& q, int k) const {
    using Entry = std::pair<double, std::size_t>;  // (squared distance, index)
    std::priority_queue<Entry> heap;
    double worst = std::numeric_limits<double>::infinity();
    search(0, q, worst, [&](std::size_t i) {
        const double d2 = (points_[i] - q).squaredNorm();
        if (int(heap.size()) < k) {
            heap.emplace(d2, i);
        } else if (d2 < heap.top().first) {
            heap.pop();
            heap.emplace(d2, i);
        }
        if (int(heap.size()) == k) worst = heap.top().first;
    });
    std::vector<Hit> out;
    out.reserve(heap.size());
    while (!heap.empty()) {
        out.push_back({heap.top().second, std::sqrt(heap.top().first)});
        heap.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
}

}  // namespace ltgs
