#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fuseforge/core/intrinsics.hpp"
#include "fuseforge/core/rigid_transform.hpp"
#include "fuseforge/core/twist.hpp"
#include "fuseforge/image/pyramid.hpp"
#include "fuseforge/surface/raycast.hpp"
#include "fuseforge/volume/tsdf_volume.hpp"

namespace fuseforge {

/// One projective point pairing. source_point is the live point with the
/// current pose estimate already applied (world frame), paired with the
/// predicted model point and normal at its projection.
struct Correspondence {
    Eigen::Vector3d source_point;   // world, current estimate applied
    Eigen::Vector3d target_point;   // world, from the predicted view
    Eigen::Vector3d target_normal;  // unit, world
    double robust_weight = 1.0;
};

/// Accumulated 6x6 normal equations; solving A x = -b reduces the residual.
struct NormalEquations6 {
    Eigen::Matrix<double, 6, 6> A = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> b = Eigen::Matrix<double, 6, 1>::Zero();

    NormalEquations6& operator+=(const NormalEquations6& other) {
        A += other.A;
        b += other.b;
        return *this;
    }
};

enum class RobustKernel { Huber, Tukey };

/// Huber: 1 for |r| <= delta, delta/|r| beyond. Tukey: (1-(r/lambda)^2)^2
/// inside the band, 0 beyond.
double robust_weight(RobustKernel kernel, double residual, double param);

struct TrackerConfig {
    double lambda_photo = 0.1;
    std::vector<int> iters_coarse_to_fine = {10, 5, 4};
    double dist_reject = 0.10;            // meters
    double angle_reject_deg = 20.0;       // degrees; converted at use
    double huber_delta = 0.05;            // meters
    double lm_tau = 1e-3;
    int min_correspondences = 500;        // at level 0; scaled by 1/4^level
    double depth_near = 0.1;              // raycast range, meters
    double depth_far = 8.0;
    double step_tol = 1e-6;
};

struct LevelStats {
    int level = 0;
    int iterations = 0;
    size_t correspondences = 0;
    double mean_abs_residual = 0.0;
};

struct TrackResult {
    RigidTransform pose;
    std::vector<LevelStats> stats;
};

/// Projective data association between a live pyramid level and a predicted
/// view, with distance and normal-angle rejection gates. Row-major pixel
/// order; robust weights from the Huber kernel on the point-to-plane
/// residual.
std::vector<Correspondence> find_correspondences(const FrameLevel& live,
                                                 const RenderedView& predicted,
                                                 const RigidTransform& guess,
                                                 const TrackerConfig& cfg);

/// Point-to-plane normal equations: A = sum w [c;n][c;n]^T with c = q x n,
/// b = sum w [c;n] ((q-p).n).
NormalEquations6 build_geometric_system(const std::vector<Correspondence>& corrs);

/// Photometric term as J^T J / J^T r accumulated per valid live pixel. The
/// residual compares the predicted intensity, bilinearly sampled at the
/// warped pixel, against the live intensity.
NormalEquations6 build_photometric_system(const FrameLevel& live,
                                          const IntensityImage& predicted_intensity,
                                          const Image<Eigen::Vector2f>& predicted_gradient,
                                          const RenderedView& predicted,
                                          const RigidTransform& guess);

/// Solves (A + damping*I) h = -b via symmetric factorization. Throws
/// DegenerateGeometryError when the damped matrix is not positive definite.
TwistVector solve_step(const NormalEquations6& sys, double damping);

/// Renders a predicted view of the model at a given pose/intrinsics.
using ModelViewSource =
    std::function<RenderedView(const RigidTransform&, const PinholeIntrinsics&)>;

/// Coarse-to-fine frame-to-model pose estimation. Renders the model once per
/// level at the current estimate, then iterates associate / assemble / solve
/// with left-composed small-angle updates.
TrackResult track_frame(const FramePyramid& live, const ModelViewSource& model,
                        const RigidTransform& prev_pose, const TrackerConfig& cfg);

/// Convenience wrapper rendering from a TSDF volume.
TrackResult track_frame(const FramePyramid& live, const HashedTsdfVolume& volume,
                        const RigidTransform& prev_pose, const TrackerConfig& cfg);

}  // namespace fuseforge
