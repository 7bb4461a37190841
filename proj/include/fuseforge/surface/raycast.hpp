#pragma once

#include "fuseforge/core/intrinsics.hpp"
#include "fuseforge/core/rigid_transform.hpp"
#include "fuseforge/image/image.hpp"
#include "fuseforge/surface/mesh.hpp"
#include "fuseforge/volume/tsdf_volume.hpp"

namespace fuseforge {

/// Synthesized view of the model: per-pixel depth (camera z, 0 = miss),
/// world-frame normals and colors, plus the pose/intrinsics it was rendered
/// with.
struct RenderedView {
    DepthImage depth;
    NormalMap normals;  // world frame
    ColorImage color;
    RigidTransform pose;  // camera-to-world
    PinholeIntrinsics intrinsics;
};

/// Backward raycast of the TSDF volume: march each pixel ray from near to
/// far, locate the + to - zero crossing, refine it by linear interpolation of
/// the two bracketing samples. Normals come from the field gradient.
RenderedView raycast_volume(const HashedTsdfVolume& volume, const RigidTransform& pose,
                            const PinholeIntrinsics& intr, double near, double far);

/// Exact nearest-hit mesh raycast; depth is the hit's camera z, normals and
/// colors are barycentrically interpolated from the hit triangle.
RenderedView raycast_mesh(const TriangleMesh& mesh, const RigidTransform& pose,
                          const PinholeIntrinsics& intr);

}  // namespace fuseforge
