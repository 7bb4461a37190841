#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "fuseforge/core/dual_quaternion.hpp"
#include "fuseforge/core/rigid_transform.hpp"
#include "fuseforge/graph/kdtree.hpp"
#include "fuseforge/surface/mesh.hpp"

namespace fuseforge {

struct GraphNode {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();  // canonical coords, meters
    double radius = 0.0;                                 // influence extent, meters
    DualQuaternion dq;                                   // current local transform
};

/// Embedded deformation graph: sampled nodes, K nearest-neighbor edges, and a
/// KD-tree over node positions for influence queries.
struct DeformationGraph {
    std::vector<GraphNode> nodes;
    std::vector<std::vector<size_t>> edges;  // per node, K distinct neighbor indices
    size_t K = 4;
    KdTree node_tree;
};

/// Samples node_count positions without replacement from the mesh vertices
/// with a seeded generator, sets all dqs to identity, wires K nearest-neighbor
/// edges, and sets each radius to 1.5x the distance to the node's K-th
/// nearest node.
DeformationGraph build_graph(const TriangleMesh& mesh, size_t node_count, size_t K, uint32_t seed);

/// Gaussian influence of a node at x: exp(-|v_i - x|^2 / (2 w_i^2)).
double node_weight(const GraphNode& node, const Eigen::Vector3d& x);

/// Influencing nodes of a query point: the K nearest nodes with their
/// node_weight values normalized to sum 1.
struct NodeInfluence {
    std::vector<size_t> indices;
    std::vector<double> weights;  // normalized
};
NodeInfluence influencing_nodes(const DeformationGraph& graph, const Eigen::Vector3d& x);

/// Blends the K nearest node transforms via DQLB and applies the resulting
/// rigid transform: rotation+translation on the point, rotation only on the
/// normal (renormalized).
std::pair<Eigen::Vector3d, Eigen::Vector3d> warp_point(const DeformationGraph& graph,
                                                       const Eigen::Vector3d& x,
                                                       const Eigen::Vector3d& normal);

/// warp_point applied to every vertex/normal; faces and colors unchanged.
TriangleMesh warp_mesh(const DeformationGraph& graph, const TriangleMesh& mesh);

/// Text round-trip: node lines "x y z radius | 8 dq scalars", then edge lines
/// "i: j j j j".
void save_graph(const DeformationGraph& graph, std::ostream& out);
DeformationGraph load_graph(std::istream& in);

}  // namespace fuseforge
