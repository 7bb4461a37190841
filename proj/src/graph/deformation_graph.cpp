#include "fuseforge/graph/deformation_graph.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "fuseforge/core/errors.hpp"

namespace fuseforge {

DeformationGraph build_graph(const TriangleMesh& mesh, size_t node_count, size_t K,
                             uint32_t seed) {
    if (mesh.vertices.size() < node_count) {
        throw Error("build_graph: mesh has fewer vertices than requested nodes");
    }
    if (node_count <= K) {
        throw Error("build_graph: node count must exceed K");
    }

    // Partial Fisher-Yates with an explicit generator so the sample is the
    // same on every platform.
    std::vector<size_t> idx(mesh.vertices.size());
    std::iota(idx.begin(), idx.end(), size_t(0));
    std::mt19937 rng(seed);
    for (size_t i = 0; i < node_count; ++i) {
        const size_t j = i + rng() % (idx.size() - i);
        std::swap(idx[i], idx[j]);
    }

    DeformationGraph graph;
    graph.K = K;
    graph.nodes.resize(node_count);
    std::vector<Eigen::Vector3d> positions(node_count);
    for (size_t i = 0; i < node_count; ++i) {
        graph.nodes[i].position = mesh.vertices[idx[i]];
        positions[i] = graph.nodes[i].position;
    }
    graph.node_tree = KdTree(std::move(positions));

    graph.edges.resize(node_count);
    for (size_t i = 0; i < node_count; ++i) {
        // Ask for K+1 and drop the node itself.
        const auto nn = graph.node_tree.knn(graph.nodes[i].position, K + 1);
        double kth_dist = 0.0;
        for (const auto& [j, dist] : nn) {
            if (j == i) continue;
            if (graph.edges[i].size() == K) break;
            graph.edges[i].push_back(j);
            kth_dist = dist;
        }
        graph.nodes[i].radius = 1.5 * kth_dist;
        if (graph.nodes[i].radius <= 0.0) {
            throw Error("build_graph: coincident node positions give a zero radius");
        }
    }
    return graph;
}

double node_weight(const GraphNode& node, const Eigen::Vector3d& x) {
    const double d2 = (node.position - x).squaredNorm();
    return std::exp(-d2 / (2.0 * node.radius * node.radius));
}

NodeInfluence influencing_nodes(const DeformationGraph& graph, const Eigen::Vector3d& x) {
    if (graph.nodes.empty()) {
        throw Error("influencing_nodes: empty graph");
    }
    const auto nn = graph.node_tree.knn(x, graph.K);
    NodeInfluence inf;
    inf.indices.reserve(nn.size());
    inf.weights.reserve(nn.size());
    double sum = 0.0;
    for (const auto& [i, dist] : nn) {
        (void)dist;
        inf.indices.push_back(i);
        const double w = node_weight(graph.nodes[i], x);
        inf.weights.push_back(w);
        sum += w;
    }
    if (sum <= 0.0) {
        // All weights underflowed; fall back to a uniform blend of the same
        // neighbor set so far-away points still warp continuously.
        const double u = 1.0 / double(inf.weights.size());
        for (double& w : inf.weights) w = u;
    } else {
        for (double& w : inf.weights) w /= sum;
    }
    return inf;
}

std::pair<Eigen::Vector3d, Eigen::Vector3d> warp_point(const DeformationGraph& graph,
                                                       const Eigen::Vector3d& x,
                                                       const Eigen::Vector3d& normal) {
    const NodeInfluence inf = influencing_nodes(graph, x);
    std::vector<DualQuaternion> dqs;
    dqs.reserve(inf.indices.size());
    for (size_t i : inf.indices) dqs.push_back(graph.nodes[i].dq);
    const RigidTransform t = dq_to_transform(dqlb(inf.weights, dqs));
    Eigen::Vector3d n = t.rotation * normal;
    const double len = n.norm();
    if (len > 1e-15) n /= len;
    return {t.apply(x), n};
}

TriangleMesh warp_mesh(const DeformationGraph& graph, const TriangleMesh& mesh) {
    TriangleMesh out = mesh;
    for (size_t i = 0; i < mesh.vertices.size(); ++i) {
        const Eigen::Vector3d n =
            i < mesh.normals.size() ? mesh.normals[i] : Eigen::Vector3d::UnitZ();
        auto [p, wn] = warp_point(graph, mesh.vertices[i], n);
        out.vertices[i] = p;
        if (i < out.normals.size()) out.normals[i] = wn;
    }
    return out;
}

void save_graph(const DeformationGraph& graph, std::ostream& out) {
    out.precision(17);
    out << graph.nodes.size() << " " << graph.K << "\n";
    for (const GraphNode& n : graph.nodes) {
        out << n.position.x() << " " << n.position.y() << " " << n.position.z() << " " << n.radius
            << " | " << n.dq.real.w() << " " << n.dq.real.x() << " " << n.dq.real.y() << " "
            << n.dq.real.z() << " " << n.dq.dual.w() << " " << n.dq.dual.x() << " "
            << n.dq.dual.y() << " " << n.dq.dual.z() << "\n";
    }
    for (size_t i = 0; i < graph.edges.size(); ++i) {
        out << i << ":";
        for (size_t j : graph.edges[i]) out << " " << j;
        out << "\n";
    }
}

DeformationGraph load_graph(std::istream& in) {
    DeformationGraph graph;
    size_t n = 0;
    if (!(in >> n >> graph.K)) {
        throw IoError("load_graph: malformed header");
    }
    graph.nodes.resize(n);
    std::vector<Eigen::Vector3d> positions(n);
    for (size_t i = 0; i < n; ++i) {
        GraphNode& node = graph.nodes[i];
        char bar = 0;
        double rw, rx, ry, rz, dw, dx, dy, dz;
        if (!(in >> node.position.x() >> node.position.y() >> node.position.z() >> node.radius >>
              bar >> rw >> rx >> ry >> rz >> dw >> dx >> dy >> dz) ||
            bar != '|') {
            throw IoError("load_graph: malformed node line " + std::to_string(i));
        }
        node.dq.real = Eigen::Quaterniond(rw, rx, ry, rz);
        node.dq.dual = Eigen::Quaterniond(dw, dx, dy, dz);
        positions[i] = node.position;
    }
    graph.edges.resize(n);
    in >> std::ws;
    for (size_t i = 0; i < n; ++i) {
        std::string line;
        if (!std::getline(in, line)) {
            throw IoError("load_graph: missing edge line " + std::to_string(i));
        }
        std::istringstream ls(line);
        size_t row = 0;
        char colon = 0;
        if (!(ls >> row >> colon) || colon != ':' || row != i) {
            throw IoError("load_graph: malformed edge line " + std::to_string(i));
        }
        size_t j = 0;
        while (ls >> j) graph.edges[i].push_back(j);
    }
    graph.node_tree = KdTree(std::move(positions));
    return graph;
}

}  // namespace fuseforge
