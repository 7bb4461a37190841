#include "fuseforge/graph/kdtree.hpp"

#include <algorithm>
#include <cmath>

#include "fuseforge/core/errors.hpp"

namespace fuseforge {

namespace {

// Ordering used by both the tree and the brute-force reference: distance
// ascending, ties by smaller point index.
struct Candidate {
    double dist;
    size_t index;
    bool operator<(const Candidate& o) const {
        return dist < o.dist || (dist == o.dist && index < o.index);
    }
};

}  // namespace

KdTree::KdTree(std::vector<Eigen::Vector3d> points) : points_(std::move(points)) {
    if (points_.empty()) return;
    std::vector<size_t> idx(points_.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    nodes_.reserve(points_.size());
    root_ = build(idx, 0, idx.size(), 0);
}

int32_t KdTree::build(std::vector<size_t>& idx, size_t begin, size_t end, int depth) {
    if (begin >= end) return -1;
    const int axis = depth % 3;
    const size_t mid = begin + (end - begin) / 2;
    std::nth_element(idx.begin() + begin, idx.begin() + mid, idx.begin() + end,
                     [&](size_t a, size_t b) {
                         const double ca = points_[a][axis];
                         const double cb = points_[b][axis];
                         return ca < cb || (ca == cb && a < b);
                     });
    const int32_t node_id = int32_t(nodes_.size());
    nodes_.push_back({idx[mid], axis, -1, -1});
    const int32_t left = build(idx, begin, mid, depth + 1);
    const int32_t right = build(idx, mid + 1, end, depth + 1);
    nodes_[size_t(node_id)].left = left;
    nodes_[size_t(node_id)].right = right;
    return node_id;
}

std::vector<std::pair<size_t, double>> KdTree::knn(const Eigen::Vector3d& query, size_t k) const {
    if (empty()) {
        throw Error("KdTree::knn: empty tree");
    }
    if (k == 0) return {};

    // Bounded max-heap of the best k candidates seen so far.
    std::vector<Candidate> heap;
    heap.reserve(k + 1);
    auto worse = [](const Candidate& a, const Candidate& b) { return a < b; };

    auto visit = [&](auto&& self, int32_t node_id) -> void {
        if (node_id < 0) return;
        const Node& node = nodes_[size_t(node_id)];
        const Eigen::Vector3d& p = points_[node.point];
        const double d = (p - query).norm();
        heap.push_back({d, node.point});
        std::push_heap(heap.begin(), heap.end(), worse);
        if (heap.size() > k) {
            std::pop_heap(heap.begin(), heap.end(), worse);
            heap.pop_back();
        }

        const double delta = query[node.axis] - p[node.axis];
        const int32_t near = delta < 0.0 ? node.left : node.right;
        const int32_t away = delta < 0.0 ? node.right : node.left;
        self(self, near);
        // The far side can still hold a winner when the splitting plane is
        // within the current worst distance, or a tie that wins on index.
        if (heap.size() < k || std::abs(delta) <= heap.front().dist) {
            self(self, away);
        }
    };
    visit(visit, root_);

    std::sort(heap.begin(), heap.end());
    std::vector<std::pair<size_t, double>> out;
    out.reserve(heap.size());
    for (const Candidate& c : heap) out.emplace_back(c.index, c.dist);
    return out;
}

std::vector<std::pair<size_t, double>> brute_force_knn(const std::vector<Eigen::Vector3d>& points,
                                                       const Eigen::Vector3d& query, size_t k) {
    std::vector<Candidate> all;
    all.reserve(points.size());
    for (size_t i = 0; i < points.size(); ++i) {
        all.push_back({(points[i] - query).norm(), i});
    }
    std::sort(all.begin(), all.end());
    if (all.size() > k) all.resize(k);
    std::vector<std::pair<size_t, double>> out;
    out.reserve(all.size());
    for (const Candidate& c : all) out.emplace_back(c.index, c.dist);
    return out;
}

}  // namespace fuseforge
