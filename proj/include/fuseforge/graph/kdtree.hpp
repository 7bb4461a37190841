#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace fuseforge {

/// Static KD-tree over 3-vectors. Axes cycle x, y, z by depth; each split
/// takes the median of the subrange. Queries are exact: knn matches a
/// brute-force scan as a set, with distance ties broken by smaller point
/// index.
class KdTree {
public:
    KdTree() = default;
    explicit KdTree(std::vector<Eigen::Vector3d> points);

    size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }
    const Eigen::Vector3d& point(size_t i) const { return points_[i]; }

    /// k nearest neighbors of query, sorted by ascending distance (ties by
    /// index). Returns min(k, n) pairs of (point index, distance).
    std::vector<std::pair<size_t, double>> knn(const Eigen::Vector3d& query, size_t k) const;

private:
    struct Node {
        size_t point = 0;   // index into points_
        int axis = 0;
        int32_t left = -1;
        int32_t right = -1;
    };

    int32_t build(std::vector<size_t>& idx, size_t begin, size_t end, int depth);

    std::vector<Eigen::Vector3d> points_;
    std::vector<Node> nodes_;
    int32_t root_ = -1;
};

/// Brute-force reference with the same ordering contract as KdTree::knn.
std::vector<std::pair<size_t, double>> brute_force_knn(const std::vector<Eigen::Vector3d>& points,
                                                       const Eigen::Vector3d& query, size_t k);

}  // namespace fuseforge
