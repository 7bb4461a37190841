#include "fuseforge/tracking/tracker.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>

#include "fuseforge/core/errors.hpp"
#include "fuseforge/core/interpolation.hpp"
#include "fuseforge/image/filters.hpp"

namespace fuseforge {

double robust_weight(RobustKernel kernel, double residual, double param) {
    if (param <= 0.0) {
        throw Error("robust_weight: kernel parameter must be positive");
    }
    const double r = std::abs(residual);
    switch (kernel) {
        case RobustKernel::Huber:
            return r <= param ? 1.0 : param / r;
        case RobustKernel::Tukey: {
            if (r > param) return 0.0;
            const double u = 1.0 - (r / param) * (r / param);
            return u * u;
        }
    }
    return 1.0;
}

std::vector<Correspondence> find_correspondences(const FrameLevel& live,
                                                 const RenderedView& predicted,
                                                 const RigidTransform& guess,
                                                 const TrackerConfig& cfg) {
    std::vector<Correspondence> corrs;
    corrs.reserve(size_t(live.depth.width()) * size_t(live.depth.height()) / 4);

    const RigidTransform pred_world_to_cam = predicted.pose.inverse();
    const double cos_reject = std::cos(cfg.angle_reject_deg * std::numbers::pi / 180.0);

    for (int y = 0; y < live.depth.height(); ++y) {
        for (int x = 0; x < live.depth.width(); ++x) {
            const float d = live.depth.at(x, y);
            if (d <= 0.0f) continue;
            const Eigen::Vector3f n_live = live.normals.at(x, y);
            if (!normal_valid(n_live)) continue;

            const Eigen::Vector3d q_world =
                guess.apply(backproject(live.intrinsics, {double(x), double(y)}, d));
            const Eigen::Vector3d q_pred_cam = pred_world_to_cam.apply(q_world);
            if (q_pred_cam.z() <= 0.0) continue;
            const Eigen::Vector2d px = project(predicted.intrinsics, q_pred_cam);
            const int u = int(std::lround(px.x()));
            const int v = int(std::lround(px.y()));
            if (!predicted.depth.in_bounds(u, v)) continue;

            const float pd = predicted.depth.at(u, v);
            if (pd <= 0.0f) continue;
            const Eigen::Vector3f n_pred = predicted.normals.at(u, v);
            if (!normal_valid(n_pred)) continue;

            const Eigen::Vector3d p_world = predicted.pose.apply(
                backproject(predicted.intrinsics, {double(u), double(v)}, pd));

            if ((q_world - p_world).norm() > cfg.dist_reject) continue;
            const Eigen::Vector3d n_live_world = guess.rotation * n_live.cast<double>();
            const Eigen::Vector3d n_target = n_pred.cast<double>();
            if (n_live_world.dot(n_target) < cos_reject) continue;

            const double residual = n_target.dot(q_world - p_world);
            corrs.push_back({q_world, p_world, n_target,
                             robust_weight(RobustKernel::Huber, residual, cfg.huber_delta)});
        }
    }
    return corrs;
}

NormalEquations6 build_geometric_system(const std::vector<Correspondence>& corrs) {
    if (corrs.empty()) {
        throw Error("build_geometric_system: empty correspondence list");
    }
    NormalEquations6 sys;
    for (const Correspondence& c : corrs) {
        const Eigen::Vector3d cross = c.source_point.cross(c.target_normal);
        Eigen::Matrix<double, 6, 1> j;
        j << cross, c.target_normal;
        const double residual = c.target_normal.dot(c.source_point - c.target_point);
        sys.A.noalias() += c.robust_weight * j * j.transpose();
        sys.b.noalias() += c.robust_weight * j * residual;
    }
    return sys;
}

namespace {

inline bool bilinear_sample(const IntensityImage& img, double x, double y, double* out) {
    const int x0 = int(std::floor(x));
    const int y0 = int(std::floor(y));
    if (x0 < 0 || y0 < 0 || x0 + 1 >= img.width() || y0 + 1 >= img.height()) return false;
    const double fx = x - x0;
    const double fy = y - y0;
    *out = bilerp(img.at(x0, y0), img.at(x0 + 1, y0), img.at(x0, y0 + 1), img.at(x0 + 1, y0 + 1),
                  fx, fy);
    return true;
}

inline bool bilinear_sample(const Image<Eigen::Vector2f>& img, double x, double y,
                            Eigen::Vector2d* out) {
    const int x0 = int(std::floor(x));
    const int y0 = int(std::floor(y));
    if (x0 < 0 || y0 < 0 || x0 + 1 >= img.width() || y0 + 1 >= img.height()) return false;
    const double fx = x - x0;
    const double fy = y - y0;
    for (int k = 0; k < 2; ++k) {
        (*out)[k] = bilerp(img.at(x0, y0)[k], img.at(x0 + 1, y0)[k], img.at(x0, y0 + 1)[k],
                           img.at(x0 + 1, y0 + 1)[k], fx, fy);
    }
    return true;
}

}  // namespace

NormalEquations6 build_photometric_system(const FrameLevel& live,
                                          const IntensityImage& predicted_intensity,
                                          const Image<Eigen::Vector2f>& predicted_gradient,
                                          const RenderedView& predicted,
                                          const RigidTransform& guess) {
    NormalEquations6 sys;
    const RigidTransform world_to_pred = predicted.pose.inverse();
    const PinholeIntrinsics& intr = predicted.intrinsics;

    for (int y = 0; y < live.depth.height(); ++y) {
        for (int x = 0; x < live.depth.width(); ++x) {
            const float d = live.depth.at(x, y);
            if (d <= 0.0f) continue;
            const Eigen::Vector3d p_world =
                guess.apply(backproject(live.intrinsics, {double(x), double(y)}, d));
            const Eigen::Vector3d p_cam = world_to_pred.apply(p_world);
            if (p_cam.z() <= 0.0) continue;
            const double u = intr.fx * p_cam.x() / p_cam.z() + intr.cx;
            const double v = intr.fy * p_cam.y() / p_cam.z() + intr.cy;

            double warped_intensity;
            Eigen::Vector2d grad;
            if (!bilinear_sample(predicted_intensity, u, v, &warped_intensity)) continue;
            if (!bilinear_sample(predicted_gradient, u, v, &grad)) continue;

            // The rendered intensity is meaningless where no surface was hit;
            // require valid predicted depth across the bilinear patch so
            // background edges contribute no fake gradients.
            const int u0 = int(std::floor(u));
            const int v0 = int(std::floor(v));
            if (predicted.depth.in_bounds(u0 + 1, v0 + 1) && predicted.depth.in_bounds(u0, v0) &&
                (predicted.depth.at(u0, v0) <= 0.0f || predicted.depth.at(u0 + 1, v0) <= 0.0f ||
                 predicted.depth.at(u0, v0 + 1) <= 0.0f ||
                 predicted.depth.at(u0 + 1, v0 + 1) <= 0.0f)) {
                continue;
            }

            const double residual = warped_intensity - double(live.intensity.at(x, y));

            // d(pixel)/d(camera point), projection derivative with K folded in.
            const double z = p_cam.z();
            Eigen::Matrix<double, 2, 3> dpi;
            dpi << intr.fx / z, 0.0, -intr.fx * p_cam.x() / (z * z),
                   0.0, intr.fy / z, -intr.fy * p_cam.y() / (z * z);

            // d(camera point)/d(twist) for a left-composed world increment.
            Eigen::Matrix<double, 3, 6> dp;
            dp.leftCols<3>() = world_to_pred.rotation * (-skew(p_world));
            dp.rightCols<3>() = world_to_pred.rotation;

            const Eigen::Matrix<double, 1, 6> j = grad.transpose() * dpi * dp;
            sys.A.noalias() += j.transpose() * j;
            sys.b.noalias() += j.transpose() * residual;
        }
    }
    return sys;
}

TwistVector solve_step(const NormalEquations6& sys, double damping) {
    Eigen::Matrix<double, 6, 6> a = sys.A;
    a.diagonal().array() += damping;
    Eigen::LDLT<Eigen::Matrix<double, 6, 6>> ldlt(a);
    if (ldlt.info() != Eigen::Success) {
        throw DegenerateGeometryError("solve_step: factorization failed");
    }
    const auto d = ldlt.vectorD();
    const double dmax = d.maxCoeff();
    if (dmax <= 0.0 || d.minCoeff() < 1e-12 * dmax) {
        throw DegenerateGeometryError("solve_step: system is singular or indefinite");
    }
    return ldlt.solve(-sys.b);
}

TrackResult track_frame(const FramePyramid& live, const ModelViewSource& model,
                        const RigidTransform& prev_pose, const TrackerConfig& cfg) {
    TrackResult result;
    result.pose = prev_pose;
    const int levels = int(live.levels.size());

    for (int level = levels - 1; level >= 0; --level) {
        const FrameLevel& frame = live.levels[size_t(level)];
        const bool use_photo = cfg.lambda_photo > 0.0;

        const int iters_index =
            std::min(levels - 1 - level, int(cfg.iters_coarse_to_fine.size()) - 1);
        const int iters = cfg.iters_coarse_to_fine.empty()
                              ? 5
                              : cfg.iters_coarse_to_fine[size_t(std::max(0, iters_index))];
        const size_t min_corrs = size_t(std::max(1, cfg.min_correspondences >> (2 * level)));

        LevelStats stats;
        stats.level = level;
        double prev_mean_residual = std::numeric_limits<double>::infinity();
        double damping = 0.0;

        for (int it = 0; it < iters; ++it) {
            // Re-render the model view so both data terms linearize at the
            // current estimate rather than the pose that entered the level.
            const RenderedView predicted = model(result.pose, frame.intrinsics);
            IntensityImage pred_intensity;
            Image<Eigen::Vector2f> pred_gradient;
            if (use_photo) {
                pred_intensity = intensity_from_rgb(predicted.color);
                pred_gradient = image_gradient(pred_intensity);
            }

            const auto corrs = find_correspondences(frame, predicted, result.pose, cfg);
            if (corrs.size() < min_corrs) {
                if (level == 0) {
                    throw TrackingFailureError("track_frame: too few correspondences (" +
                                               std::to_string(corrs.size()) + ")");
                }
                break;
            }

            double residual_sum = 0.0;
            for (const auto& c : corrs) {
                residual_sum += std::abs(c.target_normal.dot(c.source_point - c.target_point));
            }
            const double mean_residual = residual_sum / double(corrs.size());

            NormalEquations6 sys = build_geometric_system(corrs);
            if (use_photo) {
                NormalEquations6 pho = build_photometric_system(frame, pred_intensity,
                                                                pred_gradient, predicted,
                                                                result.pose);
                sys.A += cfg.lambda_photo * pho.A;
                sys.b += cfg.lambda_photo * pho.b;
            }

            // LM fallback: damp after a diverging Gauss-Newton step.
            if (mean_residual > prev_mean_residual && damping == 0.0) {
                damping = cfg.lm_tau * sys.A.diagonal().maxCoeff();
            }
            prev_mean_residual = mean_residual;

            TwistVector h;
            try {
                h = solve_step(sys, damping);
            } catch (const DegenerateGeometryError&) {
                damping = std::max(damping, cfg.lm_tau * sys.A.diagonal().maxCoeff());
                h = solve_step(sys, damping);
            }

            result.pose = twist_to_transform(h, TwistMode::SmallAngle).compose(result.pose);
            stats.iterations = it + 1;
            stats.correspondences = corrs.size();
            stats.mean_abs_residual = mean_residual;
            if (h.norm() < cfg.step_tol) break;
        }
        result.stats.push_back(stats);
    }

    if (result.stats.empty() || result.stats.back().correspondences == 0) {
        throw TrackingFailureError("track_frame: no usable correspondences at the finest level");
    }
    return result;
}

TrackResult track_frame(const FramePyramid& live, const HashedTsdfVolume& volume,
                        const RigidTransform& prev_pose, const TrackerConfig& cfg) {
    ModelViewSource source = [&volume, &cfg](const RigidTransform& pose,
                                             const PinholeIntrinsics& intr) {
        return raycast_volume(volume, pose, intr, cfg.depth_near, cfg.depth_far);
    };
    return track_frame(live, source, prev_pose, cfg);
}

}  // namespace fuseforge
