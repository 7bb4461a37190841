#include "fuseforge/surface/raycast.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "fuseforge/core/parallel.hpp"

namespace fuseforge {

RenderedView raycast_volume(const HashedTsdfVolume& volume, const RigidTransform& pose,
                            const PinholeIntrinsics& intr, double near, double far) {
    RenderedView view;
    view.depth = DepthImage(intr.width, intr.height, 0.0f);
    view.normals = NormalMap(intr.width, intr.height, Eigen::Vector3f::Zero());
    view.color = ColorImage(intr.width, intr.height);
    view.pose = pose;
    view.intrinsics = intr;

    const double step = 0.5 * volume.config().truncation;

    parallel_for_rows(0, intr.height, [&](int y0, int y1) {
        for (int y = y0; y < y1; ++y) {
            for (int x = 0; x < intr.width; ++x) {
                const Eigen::Vector3d dir((x - intr.cx) / intr.fx, (y - intr.cy) / intr.fy, 1.0);
                bool have_prev = false;
                double prev_z = 0.0, prev_f = 0.0;
                for (double z = near; z <= far; z += step) {
                    const Eigen::Vector3d p = pose.apply(dir * z);
                    const auto f = volume.sample_tsdf(p);
                    if (!f) {
                        have_prev = false;
                        continue;
                    }
                    if (have_prev && prev_f > 0.0 && *f <= 0.0) {
                        const double t = prev_f / (prev_f - *f);
                        const double z_hit = prev_z + t * (z - prev_z);
                        const Eigen::Vector3d hit = pose.apply(dir * z_hit);
                        view.depth.at(x, y) = float(z_hit);
                        if (const auto g = volume.sample_gradient(hit)) {
                            view.normals.at(x, y) = g->cast<float>();
                        }
                        if (const auto c = volume.sample_color(hit)) {
                            view.color.at(x, y) = {
                                uint8_t(std::lround(std::clamp(c->x(), 0.0, 255.0))),
                                uint8_t(std::lround(std::clamp(c->y(), 0.0, 255.0))),
                                uint8_t(std::lround(std::clamp(c->z(), 0.0, 255.0)))};
                        } else {
                            // Interpolation needs a full neighborhood; fall
                            // back to the containing voxel at band edges.
                            const double vs = volume.config().voxel_size;
                            const Eigen::Vector3i vi(int(std::floor(hit.x() / vs)),
                                                     int(std::floor(hit.y() / vs)),
                                                     int(std::floor(hit.z() / vs)));
                            const Voxel* vox = volume.voxel_at(vi);
                            if (vox != nullptr && vox->weight > 0.0f) {
                                view.color.at(x, y) = vox->color;
                            }
                        }
                        break;
                    }
                    have_prev = true;
                    prev_z = z;
                    prev_f = *f;
                }
            }
        }
    });
    return view;
}

namespace {

struct HitRecord {
    float z = std::numeric_limits<float>::infinity();
    int32_t tri = -1;
    float u = 0.0f, v = 0.0f;
};

}  // namespace

RenderedView raycast_mesh(const TriangleMesh& mesh, const RigidTransform& pose,
                          const PinholeIntrinsics& intr) {
    RenderedView view;
    view.depth = DepthImage(intr.width, intr.height, 0.0f);
    view.normals = NormalMap(intr.width, intr.height, Eigen::Vector3f::Zero());
    view.color = ColorImage(intr.width, intr.height);
    view.pose = pose;
    view.intrinsics = intr;
    if (mesh.faces.empty()) return view;

    const RigidTransform world_to_cam = pose.inverse();
    std::vector<Eigen::Vector3d> cam(mesh.vertices.size());
    for (size_t i = 0; i < mesh.vertices.size(); ++i) {
        cam[i] = world_to_cam.apply(mesh.vertices[i]);
    }

    Image<HitRecord> hits(intr.width, intr.height);

    // Bin triangles to their projected pixel footprint, then run an exact
    // ray-triangle test per covered pixel, keeping the nearest hit.
    for (size_t ti = 0; ti < mesh.faces.size(); ++ti) {
        const auto& f = mesh.faces[ti];
        const Eigen::Vector3d& a = cam[f[0]];
        const Eigen::Vector3d& b = cam[f[1]];
        const Eigen::Vector3d& c = cam[f[2]];
        if (a.z() <= 1e-9 || b.z() <= 1e-9 || c.z() <= 1e-9) continue;

        auto px = [&](const Eigen::Vector3d& p) {
            return Eigen::Vector2d(intr.fx * p.x() / p.z() + intr.cx,
                                   intr.fy * p.y() / p.z() + intr.cy);
        };
        const Eigen::Vector2d pa = px(a), pb = px(b), pc = px(c);
        const int x0 = std::max(0, int(std::floor(std::min({pa.x(), pb.x(), pc.x()}))));
        const int x1 = std::min(intr.width - 1, int(std::ceil(std::max({pa.x(), pb.x(), pc.x()}))));
        const int y0 = std::max(0, int(std::floor(std::min({pa.y(), pb.y(), pc.y()}))));
        const int y1 =
            std::min(intr.height - 1, int(std::ceil(std::max({pa.y(), pb.y(), pc.y()}))));

        const Eigen::Vector3d e1 = b - a;
        const Eigen::Vector3d e2 = c - a;
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                // Ray parameterized so t equals camera z.
                const Eigen::Vector3d dir((x - intr.cx) / intr.fx, (y - intr.cy) / intr.fy, 1.0);
                const Eigen::Vector3d pvec = dir.cross(e2);
                const double det = e1.dot(pvec);
                if (std::abs(det) < 1e-14) continue;
                const double inv_det = 1.0 / det;
                const Eigen::Vector3d tvec = -a;
                const double u = tvec.dot(pvec) * inv_det;
                if (u < 0.0 || u > 1.0) continue;
                const Eigen::Vector3d qvec = tvec.cross(e1);
                const double v = dir.dot(qvec) * inv_det;
                if (v < 0.0 || u + v > 1.0) continue;
                const double t = e2.dot(qvec) * inv_det;
                if (t <= 1e-9) continue;
                HitRecord& rec = hits.at(x, y);
                if (t < rec.z) {
                    rec = {float(t), int32_t(ti), float(u), float(v)};
                }
            }
        }
    }

    const bool has_colors = mesh.has_colors();
    for (int y = 0; y < intr.height; ++y) {
        for (int x = 0; x < intr.width; ++x) {
            const HitRecord& rec = hits.at(x, y);
            if (rec.tri < 0) continue;
            const auto& f = mesh.faces[size_t(rec.tri)];
            const double u = rec.u, v = rec.v, w = 1.0 - u - v;
            view.depth.at(x, y) = rec.z;
            Eigen::Vector3d n = w * mesh.normals[f[0]] + u * mesh.normals[f[1]] +
                                v * mesh.normals[f[2]];
            const double len = n.norm();
            if (len > 1e-12) view.normals.at(x, y) = (n / len).cast<float>();
            if (has_colors) {
                auto ch = [&](auto get) {
                    return uint8_t(std::lround(w * get(mesh.colors[f[0]]) +
                                               u * get(mesh.colors[f[1]]) +
                                               v * get(mesh.colors[f[2]])));
                };
                view.color.at(x, y) = {ch([](const Rgb8& c) { return double(c.r); }),
                                       ch([](const Rgb8& c) { return double(c.g); }),
                                       ch([](const Rgb8& c) { return double(c.b); })};
            }
        }
    }
    return view;
}

}  // namespace fuseforge
