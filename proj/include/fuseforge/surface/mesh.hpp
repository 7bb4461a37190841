#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>

#include "fuseforge/image/image.hpp"

namespace fuseforge {

/// Indexed triangle surface with per-vertex normals and optional colors.
struct TriangleMesh {
    std::vector<Eigen::Vector3d> vertices;
    std::vector<Eigen::Vector3d> normals;
    std::vector<Rgb8> colors;  // empty or one entry per vertex
    std::vector<std::array<uint32_t, 3>> faces;

    bool has_colors() const { return !colors.empty(); }

    /// Recomputes per-vertex normals as the normalized sum of incident face
    /// normals (area weighted by the cross product magnitude).
    void recompute_vertex_normals();
};

}  // namespace fuseforge
