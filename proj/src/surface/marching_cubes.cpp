#include "fuseforge/surface/marching_cubes.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>
#include <unordered_map>
#include <vector>

namespace fuseforge {

namespace {

constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                               {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
constexpr int kEdgeEnds[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                                  {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};

// Edge identified by the global index of its lower corner voxel plus the axis
// it runs along.
struct EdgeKey {
    int32_t x, y, z;
    int8_t axis;
    bool operator==(const EdgeKey&) const = default;
};

struct EdgeKeyHasher {
    size_t operator()(const EdgeKey& k) const {
        uint64_t h = uint64_t(uint32_t(k.x)) * 73856093ull;
        h ^= uint64_t(uint32_t(k.y)) * 19349669ull;
        h ^= uint64_t(uint32_t(k.z)) * 83492791ull;
        h ^= uint64_t(uint8_t(k.axis)) * 2654435761ull;
        return size_t(h);
    }
};

inline Eigen::Vector3d lerp_color(const Rgb8& a, const Rgb8& b, double t) {
    return {a.r + t * (double(b.r) - a.r), a.g + t * (double(b.g) - a.g),
            a.b + t * (double(b.b) - a.b)};
}

}  // namespace

TriangleMesh marching_cubes(const HashedTsdfVolume& volume) {
    TriangleMesh mesh;
    std::unordered_map<EdgeKey, uint32_t, EdgeKeyHasher> edge_vertices;
    std::vector<Eigen::Vector3d> vertex_colors;

    // Deterministic cube order: blocks sorted by coordinate, voxels z-y-x.
    std::vector<BlockCoord> coords;
    coords.reserve(volume.block_count());
    for (const auto& kv : volume.blocks()) coords.push_back(kv.first);
    std::sort(coords.begin(), coords.end(), [](const BlockCoord& a, const BlockCoord& b) {
        return std::tie(a.z, a.y, a.x) < std::tie(b.z, b.y, b.x);
    });

    const int bs = VoxelBlock::kSize;
    for (const BlockCoord& bc : coords) {
        for (int lz = 0; lz < bs; ++lz) {
            for (int ly = 0; ly < bs; ++ly) {
                for (int lx = 0; lx < bs; ++lx) {
                    const Eigen::Vector3i base(bc.x * bs + lx, bc.y * bs + ly, bc.z * bs + lz);

                    double value[8];
                    const Voxel* corner_voxel[8];
                    bool complete = true;
                    int cube_index = 0;
                    for (int c = 0; c < 8; ++c) {
                        const Eigen::Vector3i gi = base + Eigen::Vector3i(kCorner[c][0],
                                                                          kCorner[c][1],
                                                                          kCorner[c][2]);
                        const Voxel* vox = volume.voxel_at(gi);
                        if (vox == nullptr || vox->weight <= 0.0f) {
                            complete = false;
                            break;
                        }
                        corner_voxel[c] = vox;
                        value[c] = vox->tsdf;
                        if (value[c] < 0.0) cube_index |= (1 << c);
                    }
                    if (!complete || mc::kEdgeTable[cube_index] == 0) continue;

                    uint32_t edge_vertex[12];
                    for (int e = 0; e < 12; ++e) {
                        if (!(mc::kEdgeTable[cube_index] & (1 << e))) continue;
                        const int c0 = kEdgeEnds[e][0];
                        const int c1 = kEdgeEnds[e][1];
                        Eigen::Vector3i g0 = base + Eigen::Vector3i(kCorner[c0][0], kCorner[c0][1],
                                                                    kCorner[c0][2]);
                        Eigen::Vector3i g1 = base + Eigen::Vector3i(kCorner[c1][0], kCorner[c1][1],
                                                                    kCorner[c1][2]);
                        double v0 = value[c0];
                        double v1 = value[c1];
                        const Voxel* vox0 = corner_voxel[c0];
                        const Voxel* vox1 = corner_voxel[c1];
                        // Key by the lexicographically smaller endpoint.
                        if (std::tie(g1.x(), g1.y(), g1.z()) < std::tie(g0.x(), g0.y(), g0.z())) {
                            std::swap(g0, g1);
                            std::swap(v0, v1);
                            std::swap(vox0, vox1);
                        }
                        int axis = 0;
                        for (int a = 0; a < 3; ++a) {
                            if (g0[a] != g1[a]) axis = a;
                        }
                        const EdgeKey key{g0.x(), g0.y(), g0.z(), int8_t(axis)};
                        auto it = edge_vertices.find(key);
                        if (it != edge_vertices.end()) {
                            edge_vertex[e] = it->second;
                            continue;
                        }
                        const double denom = v0 - v1;
                        double t = std::abs(denom) < 1e-12 ? 0.5 : v0 / denom;
                        t = std::clamp(t, 0.0, 1.0);
                        const Eigen::Vector3d p0 = volume.voxel_center(g0);
                        const Eigen::Vector3d p1 = volume.voxel_center(g1);
                        const uint32_t idx = uint32_t(mesh.vertices.size());
                        mesh.vertices.push_back(p0 + t * (p1 - p0));
                        vertex_colors.push_back(lerp_color(vox0->color, vox1->color, t));
                        edge_vertices.emplace(key, idx);
                        edge_vertex[e] = idx;
                    }

                    for (int i = 0; mc::kTriTable[cube_index][i] != -1; i += 3) {
                        const uint32_t a = edge_vertex[mc::kTriTable[cube_index][i]];
                        const uint32_t b = edge_vertex[mc::kTriTable[cube_index][i + 1]];
                        const uint32_t c = edge_vertex[mc::kTriTable[cube_index][i + 2]];
                        if (a == b || b == c || a == c) continue;  // degenerate sliver
                        // Flipped so face normals point toward positive tsdf.
                        mesh.faces.push_back({a, c, b});
                    }
                }
            }
        }
    }

    // Normals from the field gradient, face-normal fallback near the
    // volume boundary where the gradient stencil is incomplete.
    mesh.normals.assign(mesh.vertices.size(), Eigen::Vector3d::Zero());
    std::vector<Eigen::Vector3d> face_accum(mesh.vertices.size(), Eigen::Vector3d::Zero());
    for (const auto& f : mesh.faces) {
        const Eigen::Vector3d n = (mesh.vertices[f[1]] - mesh.vertices[f[0]])
                                      .cross(mesh.vertices[f[2]] - mesh.vertices[f[0]]);
        for (uint32_t vi : f) face_accum[vi] += n;
    }
    for (size_t i = 0; i < mesh.vertices.size(); ++i) {
        const auto grad = volume.sample_gradient(mesh.vertices[i]);
        Eigen::Vector3d n = grad ? *grad : face_accum[i];
        const double len = n.norm();
        mesh.normals[i] = len > 1e-12 ? Eigen::Vector3d(n / len) : Eigen::Vector3d::UnitZ();
    }

    mesh.colors.resize(mesh.vertices.size());
    for (size_t i = 0; i < vertex_colors.size(); ++i) {
        const Eigen::Vector3d& c = vertex_colors[i];
        mesh.colors[i] = {uint8_t(std::lround(std::clamp(c.x(), 0.0, 255.0))),
                          uint8_t(std::lround(std::clamp(c.y(), 0.0, 255.0))),
                          uint8_t(std::lround(std::clamp(c.z(), 0.0, 255.0)))};
    }
    return mesh;
}

}  // namespace fuseforge
