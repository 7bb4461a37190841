#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "fuseforge/core/intrinsics.hpp"
#include "fuseforge/core/rigid_transform.hpp"
#include "fuseforge/image/image.hpp"
#include "fuseforge/surface/mesh.hpp"

namespace fuseforge {

/// Regular grid in the xy plane centered at the origin, rows*cols vertices,
/// 2(rows-1)(cols-1) triangles, all normals +z. extent is the larger side
/// length in meters.
TriangleMesh generate_synthetic_plane(int rows, int cols, double extent);

enum class DeformationKind { Sinusoid, Bend, Fold, Twist };

/// Deterministic analytic vertex displacement; normals recomputed from the
/// deformed faces. The seed only matters for kinds with a random phase
/// (currently none; kept for interface stability).
TriangleMesh apply_synthetic_deformation(const TriangleMesh& mesh, DeformationKind kind,
                                         double amplitude, uint32_t seed = 0);

/// Signed distance of an analytic shape at a world point.
using SignedDistance = std::function<double(const Eigen::Vector3d&)>;

SignedDistance sphere_sdf(const Eigen::Vector3d& center, double radius);
/// Plane n.x = d with unit normal n; signed distance n.x - d.
SignedDistance plane_sdf(const Eigen::Vector3d& normal, double d);

/// Sphere-traced depth of the SDF union, exact to 1e-6 along each ray.
/// Returns camera-z depth, 0 = miss.
DepthImage render_synthetic_scene(const std::vector<SignedDistance>& shapes,
                                  const RigidTransform& pose, const PinholeIntrinsics& intr,
                                  double max_range = 10.0);

/// Shaded color render of the same scene (Lambert against the view ray),
/// used to give the photometric term texture. Normals from SDF central
/// differences.
ColorImage render_synthetic_color(const std::vector<SignedDistance>& shapes,
                                  const RigidTransform& pose, const PinholeIntrinsics& intr,
                                  double max_range = 10.0);

}  // namespace fuseforge
