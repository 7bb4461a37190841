#pragma once

// Shared synthetic-scene utilities for the tracking and pipeline tests.

#include <random>
#include <vector>

#include "fuseforge/image/filters.hpp"
#include "fuseforge/image/pyramid.hpp"
#include "fuseforge/io/synthetic.hpp"
#include "fuseforge/surface/raycast.hpp"

namespace fuseforge::testutil {

inline std::vector<SignedDistance> sphere_plane_scene() {
    // The backdrop is tilted so that no rigid motion leaves every surface
    // invariant: an axis-aligned backdrop plus a sphere on the optical axis
    // would be blind to rotations about the viewing axis.
    const Eigen::Vector3d backdrop_n = Eigen::Vector3d(0.25, 0.15, -1.0).normalized();
    return {sphere_sdf({0.2, -0.1, 2.0}, 0.5),
            plane_sdf(backdrop_n, 3.0 * backdrop_n.z()),  // passes through (0, 0, 3)
            plane_sdf({0.0, -1.0, 0.0}, -0.8)};            // floor at y = 0.8
}

/// Renders the analytic scene into a full RenderedView (depth, world
/// normals, shaded color) at the given pose.
inline RenderedView analytic_view(const std::vector<SignedDistance>& shapes,
                                  const RigidTransform& pose, const PinholeIntrinsics& intr) {
    RenderedView view;
    view.depth = render_synthetic_scene(shapes, pose, intr);
    view.color = render_synthetic_color(shapes, pose, intr);
    view.pose = pose;
    view.intrinsics = intr;
    const NormalMap cam_normals = compute_normals(view.depth, intr, 2);
    view.normals = NormalMap(intr.width, intr.height, Eigen::Vector3f::Zero());
    const Eigen::Matrix3f r = pose.rotation.cast<float>();
    for (int y = 0; y < intr.height; ++y) {
        for (int x = 0; x < intr.width; ++x) {
            const Eigen::Vector3f n = cam_normals.at(x, y);
            if (normal_valid(n)) view.normals.at(x, y) = r * n;
        }
    }
    return view;
}

inline FramePyramid analytic_pyramid(const std::vector<SignedDistance>& shapes,
                                     const RigidTransform& pose, const PinholeIntrinsics& intr,
                                     int levels) {
    const DepthImage depth = render_synthetic_scene(shapes, pose, intr);
    const ColorImage color = render_synthetic_color(shapes, pose, intr);
    return build_pyramid(depth, color, intr, levels);
}

inline RigidTransform random_perturbation(std::mt19937& rng, double max_angle_rad,
                                          double max_translation) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> ua(0.0, max_angle_rad);
    std::uniform_real_distribution<double> ut(0.0, max_translation);
    const Eigen::Vector3d axis = Eigen::Vector3d(u(rng), u(rng), u(rng)).normalized();
    const Eigen::Vector3d dir = Eigen::Vector3d(u(rng), u(rng), u(rng)).normalized();
    RigidTransform t;
    t.rotation = Eigen::AngleAxisd(ua(rng), axis).toRotationMatrix();
    t.translation = ut(rng) * dir;
    return t;
}

inline double rotation_angle_deg(const Eigen::Matrix3d& r) {
    const double c = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
    return std::acos(c) * 180.0 / 3.14159265358979323846;
}

}  // namespace fuseforge::testutil
