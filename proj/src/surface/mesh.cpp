#include "fuseforge/surface/mesh.hpp"

#include <Eigen/Geometry>

namespace fuseforge {

void TriangleMesh::recompute_vertex_normals() {
    normals.assign(vertices.size(), Eigen::Vector3d::Zero());
    for (const auto& f : faces) {
        const Eigen::Vector3d n =
            (vertices[f[1]] - vertices[f[0]]).cross(vertices[f[2]] - vertices[f[0]]);
        for (uint32_t vi : f) normals[vi] += n;
    }
    for (auto& n : normals) {
        const double len = n.norm();
        n = len > 1e-12 ? Eigen::Vector3d(n / len) : Eigen::Vector3d::UnitZ();
    }
}

}  // namespace fuseforge
