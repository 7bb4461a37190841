#include "fuseforge/io/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fuseforge/core/errors.hpp"
#include "fuseforge/core/parallel.hpp"

namespace fuseforge {

TriangleMesh generate_synthetic_plane(int rows, int cols, double extent) {
    if (rows < 2 || cols < 2) {
        throw Error("generate_synthetic_plane: rows and cols must be >= 2");
    }
    const double span = extent / double(std::max(rows, cols) - 1);
    TriangleMesh mesh;
    mesh.vertices.reserve(size_t(rows) * size_t(cols));
    mesh.normals.assign(size_t(rows) * size_t(cols), Eigen::Vector3d::UnitZ());

    const double x0 = -0.5 * span * double(cols - 1);
    const double y0 = -0.5 * span * double(rows - 1);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            mesh.vertices.emplace_back(x0 + span * c, y0 + span * r, 0.0);
        }
    }
    for (int r = 0; r + 1 < rows; ++r) {
        for (int c = 0; c + 1 < cols; ++c) {
            const uint32_t a = uint32_t(r * cols + c);
            const uint32_t b = a + 1;
            const uint32_t d = uint32_t((r + 1) * cols + c);
            const uint32_t e = d + 1;
            mesh.faces.push_back({a, b, e});
            mesh.faces.push_back({a, e, d});
        }
    }
    return mesh;
}

TriangleMesh apply_synthetic_deformation(const TriangleMesh& mesh, DeformationKind kind,
                                         double amplitude, uint32_t seed) {
    (void)seed;
    if (!std::isfinite(amplitude)) {
        throw Error("apply_synthetic_deformation: amplitude must be finite");
    }
    double min_x = 0.0, max_x = 0.0;
    for (const auto& v : mesh.vertices) {
        min_x = std::min(min_x, v.x());
        max_x = std::max(max_x, v.x());
    }
    const double extent = std::max(max_x - min_x, 1e-9);

    TriangleMesh out = mesh;
    for (auto& v : out.vertices) {
        const double s = (v.x() - min_x) / extent;  // 0..1 across the sheet
        switch (kind) {
            case DeformationKind::Sinusoid:
                v.z() += amplitude * std::sin(2.0 * std::numbers::pi * s);
                break;
            case DeformationKind::Bend: {
                // Circular-arc bend about the y axis, curvature set by
                // amplitude; arc length along x preserved.
                const double k = amplitude;
                if (std::abs(k) > 1e-12) {
                    const double radius = 1.0 / k;
                    const double theta = v.x() * k;
                    v.z() += radius * (1.0 - std::cos(theta)) ;
                    v.x() = radius * std::sin(theta);
                }
                break;
            }
            case DeformationKind::Fold: {
                // Crease at the sheet midline; the far half rotates up.
                const double mid = 0.5 * (min_x + max_x);
                if (v.x() > mid) {
                    const double angle = amplitude;
                    const double dx = v.x() - mid;
                    v.x() = mid + dx * std::cos(angle) - v.z() * std::sin(angle);
                    v.z() = dx * std::sin(angle) + v.z() * std::cos(angle);
                }
                break;
            }
            case DeformationKind::Twist: {
                const double angle = amplitude * s;
                const double y = v.y(), z = v.z();
                v.y() = y * std::cos(angle) - z * std::sin(angle);
                v.z() = y * std::sin(angle) + z * std::cos(angle);
                break;
            }
        }
    }
    out.recompute_vertex_normals();
    return out;
}

SignedDistance sphere_sdf(const Eigen::Vector3d& center, double radius) {
    return [center, radius](const Eigen::Vector3d& p) { return (p - center).norm() - radius; };
}

SignedDistance plane_sdf(const Eigen::Vector3d& normal, double d) {
    const Eigen::Vector3d n = normal.normalized();
    return [n, d](const Eigen::Vector3d& p) { return n.dot(p) - d; };
}

namespace {

double scene_sdf(const std::vector<SignedDistance>& shapes, const Eigen::Vector3d& p) {
    double best = std::numeric_limits<double>::infinity();
    for (const SignedDistance& s : shapes) best = std::min(best, s(p));
    return best;
}

// Sphere trace one ray; returns camera z of the hit, 0 on miss. dir has
// dir.z = 1 so t equals camera z.
double trace_ray(const std::vector<SignedDistance>& shapes, const RigidTransform& pose,
                 const Eigen::Vector3d& dir, double max_range) {
    const double dir_norm = dir.norm();
    double t = 1e-4;
    for (int i = 0; i < 256 && t < max_range; ++i) {
        const Eigen::Vector3d p = pose.apply(dir * t);
        const double d = scene_sdf(shapes, p);
        if (d < 1e-6 * dir_norm) {
            // Bisect the last step for a tight surface point.
            double lo = std::max(1e-4, t - std::abs(d) / dir_norm - 1e-3);
            double hi = t + 1e-3;
            for (int k = 0; k < 60; ++k) {
                const double mid = 0.5 * (lo + hi);
                if (scene_sdf(shapes, pose.apply(dir * mid)) > 0.0) lo = mid;
                else hi = mid;
            }
            return 0.5 * (lo + hi);
        }
        t += std::max(d / dir_norm, 1e-6);
    }
    return 0.0;
}

}  // namespace

DepthImage render_synthetic_scene(const std::vector<SignedDistance>& shapes,
                                  const RigidTransform& pose, const PinholeIntrinsics& intr,
                                  double max_range) {
    if (shapes.empty()) throw Error("render_synthetic_scene: no shapes");
    DepthImage depth(intr.width, intr.height, 0.0f);
    parallel_for_rows(0, intr.height, [&](int y0, int y1) {
        for (int y = y0; y < y1; ++y) {
            for (int x = 0; x < intr.width; ++x) {
                const Eigen::Vector3d dir((x - intr.cx) / intr.fx, (y - intr.cy) / intr.fy, 1.0);
                const double z = trace_ray(shapes, pose, dir, max_range);
                depth.at(x, y) = float(z);
            }
        }
    });
    return depth;
}

ColorImage render_synthetic_color(const std::vector<SignedDistance>& shapes,
                                  const RigidTransform& pose, const PinholeIntrinsics& intr,
                                  double max_range) {
    if (shapes.empty()) throw Error("render_synthetic_color: no shapes");
    ColorImage color(intr.width, intr.height, {0, 0, 0});
    parallel_for_rows(0, intr.height, [&](int y0, int y1) {
        for (int y = y0; y < y1; ++y) {
            for (int x = 0; x < intr.width; ++x) {
                const Eigen::Vector3d dir((x - intr.cx) / intr.fx, (y - intr.cy) / intr.fy, 1.0);
                const double z = trace_ray(shapes, pose, dir, max_range);
                if (z <= 0.0) continue;
                const Eigen::Vector3d p = pose.apply(dir * z);
                const double h = 1e-4;
                Eigen::Vector3d n(scene_sdf(shapes, p + h * Eigen::Vector3d::UnitX()) -
                                      scene_sdf(shapes, p - h * Eigen::Vector3d::UnitX()),
                                  scene_sdf(shapes, p + h * Eigen::Vector3d::UnitY()) -
                                      scene_sdf(shapes, p - h * Eigen::Vector3d::UnitY()),
                                  scene_sdf(shapes, p + h * Eigen::Vector3d::UnitZ()) -
                                      scene_sdf(shapes, p - h * Eigen::Vector3d::UnitZ()));
                n.normalize();
                // Fixed world-space light keeps surface color independent of
                // the camera pose, so brightness constancy holds across views.
                const Eigen::Vector3d light = Eigen::Vector3d(-0.3, -0.5, -0.8).normalized();
                const double lambert = std::clamp(n.dot(light), 0.0, 1.0);
                // Smooth non-repeating pattern gives the photometric term
                // gradient signal; incommensurate frequencies avoid nearby
                // self-similar alignments.
                const double stripes = 0.5 + 0.17 * std::sin(9.0 * p.x() + 2.5 * p.y()) +
                                       0.17 * std::sin(6.5 * p.y() - 2.0 * p.x()) +
                                       0.16 * std::sin(11.5 * p.x() - 4.0 * p.y());
                const double v = 255.0 * std::clamp(0.15 + 0.85 * lambert * stripes, 0.0, 1.0);
                const uint8_t g = uint8_t(std::lround(v));
                color.at(x, y) = {g, g, g};
            }
        }
    });
    return color;
}

}  // namespace fuseforge
