#pragma once

#include "fuseforge/surface/mesh.hpp"
#include "fuseforge/volume/tsdf_volume.hpp"

namespace fuseforge {

namespace mc {
// Standard 256-case lookup tables (Lorensen & Cline layout).
extern const int kEdgeTable[256];
extern const int kTriTable[256][16];
}  // namespace mc

/// Extracts the zero level set as an indexed triangle mesh. Cubes span 2x2x2
/// observed-voxel neighborhoods (corner = voxel center); cubes with any
/// unobserved corner are skipped. Vertices on shared cube edges are welded
/// through an edge-keyed map, normals come from the tsdf gradient and colors
/// from the voxel colors.
TriangleMesh marching_cubes(const HashedTsdfVolume& volume);

}  // namespace fuseforge
