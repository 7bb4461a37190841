// End-to-end acceptance checks. Prints one pass/fail line per criterion and
// exits nonzero when any of them fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fuseforge/core/dual_quaternion.hpp"
#include "fuseforge/core/interpolation.hpp"
#include "fuseforge/graph/kdtree.hpp"
#include "fuseforge/image/filters.hpp"
#include "fuseforge/image/pyramid.hpp"
#include "fuseforge/io/png_io.hpp"
#include "fuseforge/io/synthetic.hpp"
#include "fuseforge/io/trajectory.hpp"
#include "fuseforge/io/tum_dataset.hpp"
#include "fuseforge/nonrigid/warp_solver.hpp"
#include "fuseforge/surface/marching_cubes.hpp"
#include "fuseforge/surface/raycast.hpp"
#include "fuseforge/tracking/tracker.hpp"
#include "fuseforge/volume/tsdf_volume.hpp"
#include "scene_helpers.hpp"

using namespace fuseforge;
using namespace fuseforge::testutil;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

RigidTransform look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                       const Eigen::Vector3d& up) {
    RigidTransform t;
    const Eigen::Vector3d z = (target - eye).normalized();
    const Eigen::Vector3d x = up.cross(z).normalized();
    const Eigen::Vector3d y = z.cross(x);
    t.rotation.col(0) = x;
    t.rotation.col(1) = y;
    t.rotation.col(2) = z;
    t.translation = eye;
    return t;
}

PinholeIntrinsics small_intrinsics() { return {130.0, 130.0, 79.5, 59.5, 160, 120}; }

// ---------------------------------------------------------------------------
// Criterion 1: full rigid pipeline on a TUM-layout dataset.

void write_synthetic_sequence(const fs::path& root, int frames, const PinholeIntrinsics& intr) {
    fs::create_directories(root / "depth");
    fs::create_directories(root / "rgb");
    const std::vector<SignedDistance> scene = {sphere_sdf({0.0, 0.0, 1.6}, 0.4),
                                               plane_sdf({0.0, 0.0, -1.0}, -2.5),
                                               plane_sdf({0.0, -1.0, 0.0}, -0.8),
                                               plane_sdf({-1.0, 0.0, 0.0}, -1.0)};
    std::ofstream dlist(root / "depth.txt");
    std::ofstream clist(root / "rgb.txt");
    std::ofstream gt(root / "groundtruth.txt");
    dlist.precision(6);
    clist.precision(6);
    gt.precision(6);
    dlist << std::fixed;
    clist << std::fixed;
    gt << std::fixed;
    for (int i = 0; i < frames; ++i) {
        RigidTransform pose;
        pose.translation = {0.12 * std::sin(2.0 * M_PI * i / 48.0),
                            0.08 * std::sin(2.0 * M_PI * i / 64.0),
                            0.05 * std::sin(2.0 * M_PI * i / 40.0)};
        const DepthImage depth = render_synthetic_scene(scene, pose, intr);
        const ColorImage color = render_synthetic_color(scene, pose, intr);
        char dname[32], cname[32];
        std::snprintf(dname, sizeof(dname), "depth/%04d.png", i);
        std::snprintf(cname, sizeof(cname), "rgb/%04d.png", i);
        write_depth_png((root / dname).string(), depth);
        write_color_png((root / cname).string(), color);
        const double ts = 1000.0 + i / 30.0;
        dlist << ts << " " << dname << "\n";
        clist << ts << " " << cname << "\n";
        gt << ts << " " << pose.translation.x() << " " << pose.translation.y() << " "
           << pose.translation.z() << " 0 0 0 1\n";
    }
}

Outcome criterion1() {
    const auto t0 = std::chrono::steady_clock::now();
    std::string source;
    std::string root;
    PinholeIntrinsics intr{525.0, 525.0, 319.5, 239.5, 640, 480};
    size_t frame_limit = 200;

    if (const char* env = std::getenv("FUSEFORGE_TUM_FR2_XYZ"); env && fs::exists(env)) {
        root = env;
        source = "fr2-xyz (env)";
    } else if (fs::exists("data/rgbd_dataset_freiburg2_xyz")) {
        root = "data/rgbd_dataset_freiburg2_xyz";
        source = "fr2-xyz (local)";
    } else {
        const fs::path synth = fs::temp_directory_path() / "fuseforge_acceptance_seq";
        intr = small_intrinsics();
        frame_limit = 60;
        if (!fs::exists(synth / "depth.txt")) {
            write_synthetic_sequence(synth, int(frame_limit), intr);
        }
        root = synth.string();
        source = "synthetic fallback (fr2-xyz not found)";
    }

    const TumDataset dataset = load_tum_dataset(root);
    if (dataset.frames.empty() || dataset.ground_truth.empty()) {
        return {false, "dataset at " + root + " has no associated frames"};
    }
    frame_limit = std::min(frame_limit, dataset.frames.size());

    HashedTsdfVolume volume({0.01, 0.04, 128.0f, 1u << 20});
    TrackerConfig cfg;
    Trajectory estimated;
    RigidTransform pose;
    for (size_t i = 0; i < frame_limit; ++i) {
        const auto& frame = dataset.frames[i];
        DepthImage depth = read_depth_png(frame.depth_path);
        const ColorImage color = read_color_png(frame.color_path);
        depth = bilateral_filter(depth, 2.0, 0.05, 3);
        const FramePyramid pyramid = build_pyramid(depth, color, intr, 3);
        if (i > 0) {
            try {
                pose = track_frame(pyramid, volume, pose, cfg).pose;
            } catch (const TrackingFailureError& e) {
                return {false, "tracking failed at frame " + std::to_string(i) + ": " + e.what()};
            }
        }
        volume.integrate_frame(depth, color, pose, intr, &pyramid.levels[0].normals);
        estimated.push_back({frame.timestamp, pose});
    }

    const double ate = evaluate_ate_rmse(estimated, dataset.ground_truth, true);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = ate <= 0.15 && secs <= 600.0;
    return {pass, source + ", " + std::to_string(frame_limit) + " frames, ate_rmse " + fmt(ate) +
                      " m (limit 0.15), " + fmt(secs) + " s (limit 600)"};
}

// ---------------------------------------------------------------------------
// Criterion 2: pose recovery from random perturbations.

Outcome criterion2() {
    const PinholeIntrinsics intr = small_intrinsics();
    const auto shapes = sphere_plane_scene();

    RigidTransform pose_true;
    pose_true.rotation = Eigen::AngleAxisd(0.04, Eigen::Vector3d::UnitY()).toRotationMatrix();
    pose_true.translation = {0.03, -0.02, 0.05};

    const FramePyramid live = analytic_pyramid(shapes, pose_true, intr, 3);
    ModelViewSource model = [&shapes](const RigidTransform& pose,
                                      const PinholeIntrinsics& level_intr) {
        return analytic_view(shapes, pose, level_intr);
    };

    TrackerConfig cfg;
    cfg.min_correspondences = 300;
    cfg.iters_coarse_to_fine = {12, 12, 12};
    std::mt19937 rng(53);
    int recovered = 0;
    double worst_trans = 0.0, worst_rot = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const RigidTransform guess =
            random_perturbation(rng, 5.0 * M_PI / 180.0, 0.05).compose(pose_true);
        try {
            const TrackResult result = track_frame(live, model, guess, cfg);
            const RigidTransform err = result.pose.inverse().compose(pose_true);
            const double dt = err.translation.norm();
            const double dr = rotation_angle_deg(err.rotation);
            worst_trans = std::max(worst_trans, dt);
            worst_rot = std::max(worst_rot, dr);
            if (dt < 1e-3 && dr < 0.1) ++recovered;
        } catch (const TrackingFailureError&) {
        }
    }
    return {recovered >= 19, std::to_string(recovered) +
                                 "/20 recovered (need 19), worst trans " + fmt(worst_trans) +
                                 " m, worst rot " + fmt(worst_rot) + " deg"};
}

// ---------------------------------------------------------------------------
// Criterion 3: analytic jacobians against central finite differences.

double photometric_residual(const PinholeIntrinsics& intr, int px, int py, double depth,
                            const IntensityImage& pred_intensity, const RigidTransform& pred_pose,
                            const RigidTransform& guess, double live_intensity) {
    const Eigen::Vector3d p_world =
        guess.apply(backproject(intr, {double(px), double(py)}, depth));
    const Eigen::Vector3d p_cam = pred_pose.inverse().apply(p_world);
    const double u = intr.fx * p_cam.x() / p_cam.z() + intr.cx;
    const double v = intr.fy * p_cam.y() / p_cam.z() + intr.cy;
    const int x0 = int(std::floor(u));
    const int y0 = int(std::floor(v));
    const double warped =
        bilerp(pred_intensity.at(x0, y0), pred_intensity.at(x0 + 1, y0),
               pred_intensity.at(x0, y0 + 1), pred_intensity.at(x0 + 1, y0 + 1), u - x0, v - y0);
    return warped - live_intensity;
}

Outcome criterion3() {
    // Photometric rows: one live pixel per trial isolates a single jacobian
    // row; the linear intensity makes bilinear sampling exact.
    std::mt19937 rng(47);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const PinholeIntrinsics intr{150.0, 150.0, 19.5, 14.5, 40, 30};

    int photo_rows = 0;
    double photo_worst = 0.0;
    for (int trial = 0; trial < 5000 && photo_rows < 1000; ++trial) {
        // Coefficients on a 2^-12 grid keep every intensity value exactly
        // representable in float, so the finite differences below are free of
        // storage quantization noise.
        const double quantum = 1.0 / 4096.0;
        const double a = quantum * std::round(8.0 * u(rng));
        const double b = quantum * std::round(8.0 * u(rng));
        const double c = quantum * (1638.0 + std::round(200.0 * u(rng)));
        IntensityImage pred_intensity(intr.width, intr.height);
        Image<Eigen::Vector2f> pred_gradient(intr.width, intr.height, {float(a), float(b)});
        for (int y = 0; y < intr.height; ++y)
            for (int x = 0; x < intr.width; ++x) pred_intensity.at(x, y) = float(a * x + b * y + c);

        RenderedView predicted;
        predicted.pose = random_perturbation(rng, 0.3, 0.2);
        predicted.intrinsics = intr;
        const RigidTransform guess =
            random_perturbation(rng, 0.02, 0.01).compose(predicted.pose);
        const int px = 10 + int(15.0 * std::abs(u(rng)));
        const int py = 8 + int(10.0 * std::abs(u(rng)));
        const double depth = 1.2 + 0.5 * std::abs(u(rng));

        FrameLevel live;
        live.depth = DepthImage(intr.width, intr.height, 0.0f);
        live.depth.at(px, py) = float(depth);
        live.intensity = IntensityImage(intr.width, intr.height, 0.3f);
        live.normals = NormalMap(intr.width, intr.height, Eigen::Vector3f::Zero());
        live.intrinsics = intr;

        NormalEquations6 sys;
        try {
            sys = build_photometric_system(live, pred_intensity, pred_gradient, predicted, guess);
        } catch (const Error&) {
            continue;
        }
        const double r0 = photometric_residual(intr, px, py, depth, pred_intensity,
                                               predicted.pose, guess, 0.3);
        if (std::abs(r0) < 1e-4 || sys.b.norm() == 0.0) continue;
        const Eigen::Matrix<double, 6, 1> j_analytic = sys.b / r0;

        Eigen::Matrix<double, 6, 1> j_fd;
        const double eps = 1e-6;
        for (int k = 0; k < 6; ++k) {
            TwistVector xi = TwistVector::Zero();
            xi[k] = eps;
            const RigidTransform plus = twist_to_transform(xi, TwistMode::Exact).compose(guess);
            xi[k] = -eps;
            const RigidTransform minus = twist_to_transform(xi, TwistMode::Exact).compose(guess);
            j_fd[k] = (photometric_residual(intr, px, py, depth, pred_intensity, predicted.pose,
                                            plus, 0.3) -
                       photometric_residual(intr, px, py, depth, pred_intensity, predicted.pose,
                                            minus, 0.3)) /
                      (2.0 * eps);
        }
        if (j_fd.norm() == 0.0) continue;
        photo_worst = std::max(photo_worst, (j_fd - j_analytic).norm() / j_fd.norm());
        ++photo_rows;
    }

    // Non-rigid data rows over randomly deformed graph states.
    const TriangleMesh plane = generate_synthetic_plane(21, 13, 1.0);
    const TriangleMesh target =
        apply_synthetic_deformation(plane, DeformationKind::Sinusoid, 0.02, 0);
    int warp_rows = 0;
    double warp_worst = 0.0;
    std::uniform_real_distribution<double> uu(-1.0, 1.0);
    for (uint32_t seed = 1; seed <= 6 && warp_rows < 1000; ++seed) {
        DeformationGraph g = build_graph(plane, 20, 4, seed);
        std::mt19937 grng(seed * 31);
        for (auto& node : g.nodes) {
            RigidTransform t;
            const Eigen::Vector3d axis =
                Eigen::Vector3d(uu(grng), uu(grng), uu(grng)).normalized();
            t.rotation = Eigen::AngleAxisd(0.05 * uu(grng), axis).toRotationMatrix();
            t.translation = 0.02 * Eigen::Vector3d(uu(grng), uu(grng), uu(grng));
            node.dq = dq_from_transform(t);
        }
        NonRigidConfig cfg;
        const TriangleMesh warped = warp_mesh(g, plane);
        const auto corrs = associate_by_index(plane, warped, target, g, cfg);
        SparseBlockMatrix j;
        Eigen::VectorXd r;
        build_data_term(corrs, g, &j, &r);

        size_t row_index = 0;
        const double eps = 1e-6;
        for (const auto& c : corrs) {
            if (c.robust_weight <= 0.0) continue;
            const double s = std::sqrt(c.robust_weight);
            Eigen::VectorXd fd_row(6 * c.node_indices.size());
            Eigen::VectorXd an_row(6 * c.node_indices.size());
            for (const auto& block : j.rows[row_index]) {
                const size_t pos = size_t(std::find(c.node_indices.begin(), c.node_indices.end(),
                                                    block.node) -
                                          c.node_indices.begin());
                const double w = c.node_weights[pos];
                for (int k = 0; k < 6; ++k) {
                    TwistVector xi = TwistVector::Zero();
                    xi[k] = eps;
                    const RigidTransform plus = twist_to_transform(xi, TwistMode::Exact);
                    xi[k] = -eps;
                    const RigidTransform minus = twist_to_transform(xi, TwistMode::Exact);
                    auto residual = [&](const RigidTransform& inc) {
                        const Eigen::Vector3d v =
                            c.warped_point + w * (inc.apply(c.warped_point) - c.warped_point);
                        return s * c.normal.dot(v - c.target_point);
                    };
                    fd_row[long(6 * pos) + k] = (residual(plus) - residual(minus)) / (2.0 * eps);
                    an_row[long(6 * pos) + k] = block.values[k];
                }
            }
            if (fd_row.norm() > 0.0) {
                warp_worst = std::max(warp_worst, (fd_row - an_row).norm() / fd_row.norm());
                ++warp_rows;
            }
            ++row_index;
        }
    }

    const bool pass = photo_rows >= 1000 && warp_rows >= 1000 && photo_worst < 1e-4 &&
                      warp_worst < 1e-4;
    return {pass, "photometric " + std::to_string(photo_rows) + " rows worst " +
                      fmt(photo_worst) + ", nonrigid " + std::to_string(warp_rows) +
                      " rows worst " + fmt(warp_worst) + " (limits 1e-4, need 1000 rows each)"};
}

// ---------------------------------------------------------------------------
// Criterion 4: surface fidelity of a fused sphere and a raycast plane.

bool mesh_is_closed(const TriangleMesh& mesh) {
    std::map<std::pair<uint32_t, uint32_t>, int> edges;
    for (const auto& f : mesh.faces) {
        for (int k = 0; k < 3; ++k) {
            ++edges[{f[size_t(k)], f[size_t((k + 1) % 3)]}];
        }
    }
    for (const auto& [e, count] : edges) {
        if (count != 1) return false;
        const auto rev = edges.find({e.second, e.first});
        if (rev == edges.end() || rev->second != 1) return false;
    }
    return true;
}

Outcome criterion4() {
    const PinholeIntrinsics intr{140.0, 140.0, 79.5, 59.5, 160, 120};
    const Eigen::Vector3d center(0.0, 0.0, 0.0);
    const double radius = 0.5;
    const std::vector<SignedDistance> sphere = {sphere_sdf(center, radius)};

    HashedTsdfVolume volume({0.01, 0.04, 128.0f, 1u << 20});
    std::vector<RigidTransform> views;
    for (int i = 0; i < 16; ++i) {
        const double a = 2.0 * M_PI * i / 16.0;
        views.push_back(look_at(center + 1.6 * Eigen::Vector3d(std::sin(a), 0.0, -std::cos(a)),
                                center, Eigen::Vector3d::UnitY()));
        views.push_back(look_at(center + 1.6 * Eigen::Vector3d(0.0, std::sin(a), -std::cos(a)),
                                center, Eigen::Vector3d::UnitX()));
    }
    for (const auto& pose : views) {
        const DepthImage depth = render_synthetic_scene(sphere, pose, intr);
        const ColorImage color = render_synthetic_color(sphere, pose, intr);
        const NormalMap normals = compute_normals(depth, intr, 2);
        volume.integrate_frame(depth, color, pose, intr, &normals);
    }

    const TriangleMesh mesh = marching_cubes(volume);
    double max_radial = 0.0;
    for (const auto& v : mesh.vertices) {
        max_radial = std::max(max_radial, std::abs((v - center).norm() - radius));
    }
    const bool closed = !mesh.vertices.empty() && mesh_is_closed(mesh);

    // Fused plane raycast accuracy.
    HashedTsdfVolume plane_volume({0.01, 0.04, 128.0f, 1u << 20});
    const std::vector<SignedDistance> plane = {plane_sdf({0.0, 0.0, -1.0}, -1.0)};
    const RigidTransform identity = RigidTransform::identity();
    for (int i = 0; i < 5; ++i) {
        const DepthImage depth = render_synthetic_scene(plane, identity, intr);
        const ColorImage color = render_synthetic_color(plane, identity, intr);
        const NormalMap normals = compute_normals(depth, intr, 2);
        plane_volume.integrate_frame(depth, color, identity, intr, &normals);
    }
    const RenderedView view = raycast_volume(plane_volume, identity, intr, 0.3, 2.0);
    int hits = 0, within = 0, checked = 0;
    for (int y = 12; y < intr.height - 12; ++y) {
        for (int x = 16; x < intr.width - 16; ++x) {
            ++checked;
            const float d = view.depth.at(x, y);
            if (d <= 0.0f) continue;
            ++hits;
            if (std::abs(double(d) - 1.0) <= 0.005) ++within;
        }
    }
    const bool plane_ok = hits > 0 && hits == within && hits >= int(0.9 * checked);

    const bool pass = max_radial < 0.01 && closed && plane_ok;
    return {pass, "sphere max radial error " + fmt(max_radial) + " m (limit 0.01), closed " +
                      (closed ? "yes" : "no") + ", plane raycast " + std::to_string(within) + "/" +
                      std::to_string(hits) + " hits within 0.005 m over " +
                      std::to_string(checked) + " px"};
}

// ---------------------------------------------------------------------------
// Criterion 5: non-rigid registration suite.

Outcome criterion5() {
    const TriangleMesh plane = generate_synthetic_plane(21, 13, 1.0);
    struct Case {
        const char* name;
        DeformationKind kind;
        double amplitude;
    };
    const Case cases[] = {{"sinusoid", DeformationKind::Sinusoid, 0.03},
                          {"bend", DeformationKind::Bend, 0.3},
                          {"fold", DeformationKind::Fold, 0.15}};

    bool pass = true;
    std::string detail;
    for (const Case& c : cases) {
        const TriangleMesh target = apply_synthetic_deformation(plane, c.kind, c.amplitude, 0);
        double init_max = 0.0;
        for (size_t i = 0; i < plane.vertices.size(); ++i) {
            init_max = std::max(init_max, (plane.vertices[i] - target.vertices[i]).norm());
        }
        // Dense graph and light regularization: exact synthetic
        // correspondences need little smoothing, and heavier phi trades
        // index-wise accuracy for rigidity by letting the surface slide
        // tangentially.
        const DeformationGraph graph = build_graph(plane, 273, 4, 17);
        NonRigidConfig cfg;
        cfg.max_iters = 50;
        cfg.phi = 1e-5;
        double final_max = -1.0;
        bool monotone = true;
        try {
            const WarpSolveResult result = solve_warp_field(graph, plane, target, cfg);
            const TriangleMesh warped = warp_mesh(result.graph, plane);
            final_max = 0.0;
            for (size_t i = 0; i < warped.vertices.size(); ++i) {
                final_max = std::max(final_max, (warped.vertices[i] - target.vertices[i]).norm());
            }
            for (size_t i = 1; i < result.trace.size(); ++i) {
                if (result.trace[i].e_total > result.trace[i - 1].e_total + 1e-15) {
                    monotone = false;
                }
            }
        } catch (const Error&) {
        }
        const bool ok = final_max >= 0.0 && final_max <= 0.1 * init_max &&
                        final_max <= 2.4e-2 && monotone;
        pass = pass && ok;
        if (!detail.empty()) detail += "; ";
        detail += std::string(c.name) + " " + fmt(init_max) + " -> " +
                  (final_max < 0.0 ? "diverged" : fmt(final_max)) + " m" +
                  (monotone ? "" : " (energy not monotone)");
    }
    return {pass, detail + " (need 90% reduction, <= 2.4e-2 m, monotone energy)"};
}

// ---------------------------------------------------------------------------
// Criterion 6: oracle equivalences.

Outcome criterion6() {
    // Exact knn against brute force on 100 random instances.
    bool knn_ok = true;
    for (uint32_t seed = 0; seed < 100 && knn_ok; ++seed) {
        std::mt19937 rng(seed);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::vector<Eigen::Vector3d> pts;
        for (int i = 0; i < 200; ++i) pts.push_back({u(rng), u(rng), u(rng)});
        const KdTree tree(pts);
        for (int q = 0; q < 5; ++q) {
            const Eigen::Vector3d query(u(rng), u(rng), u(rng));
            const auto got = tree.knn(query, 4);
            const auto want = brute_force_knn(pts, query, 4);
            for (size_t i = 0; i < want.size(); ++i) {
                if (got[i].first != want[i].first) knn_ok = false;
            }
        }
    }

    // Sparse against dense normal equations, up to 20 nodes.
    const TriangleMesh plane = generate_synthetic_plane(21, 13, 1.0);
    const TriangleMesh target =
        apply_synthetic_deformation(plane, DeformationKind::Sinusoid, 0.02, 0);
    double jtj_err = 0.0;
    for (uint32_t seed = 1; seed <= 3; ++seed) {
        DeformationGraph g = build_graph(plane, 18, 4, seed);
        std::mt19937 rng(seed * 13);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (auto& node : g.nodes) {
            RigidTransform t;
            t.rotation =
                Eigen::AngleAxisd(0.05 * u(rng),
                                  Eigen::Vector3d(u(rng), u(rng), u(rng)).normalized())
                    .toRotationMatrix();
            t.translation = 0.02 * Eigen::Vector3d(u(rng), u(rng), u(rng));
            node.dq = dq_from_transform(t);
        }
        NonRigidConfig cfg;
        const TriangleMesh warped = warp_mesh(g, plane);
        const auto corrs = associate_by_index(plane, warped, target, g, cfg);
        SparseBlockMatrix jd, jr;
        Eigen::VectorXd rd, rr;
        build_data_term(corrs, g, &jd, &rd);
        build_reg_term(g, cfg.phi, &jr, &rr);
        const long n = long(6 * g.nodes.size());
        Eigen::VectorXd jtr = Eigen::VectorXd::Zero(n);
        std::vector<Eigen::Triplet<double>> trip;
        jd.accumulate_normal_equations(rd, &trip, &jtr);
        jr.accumulate_normal_equations(rr, &trip, &jtr);
        Eigen::SparseMatrix<double> jtj(n, n);
        jtj.setFromTriplets(trip.begin(), trip.end());
        const Eigen::MatrixXd dd = jd.to_dense();
        const Eigen::MatrixXd dr = jr.to_dense();
        jtj_err = std::max(jtj_err, (Eigen::MatrixXd(jtj) -
                                     (dd.transpose() * dd + dr.transpose() * dr))
                                        .norm());
        jtj_err = std::max(jtj_err,
                           (jtr - (dd.transpose() * rd + dr.transpose() * rr)).norm());
    }

    // Trajectory metrics against a direct evaluation.
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Trajectory ref, est;
    for (int i = 0; i < 25; ++i) {
        TrajectorySample s;
        s.timestamp = 10.0 + 0.1 * i;
        s.pose.rotation =
            Eigen::AngleAxisd(0.3 * u(rng), Eigen::Vector3d(u(rng), u(rng), u(rng)).normalized())
                .toRotationMatrix();
        s.pose.translation = {u(rng), u(rng), u(rng)};
        ref.push_back(s);
        s.pose.translation += 0.01 * Eigen::Vector3d(u(rng), u(rng), u(rng));
        est.push_back(s);
    }
    double sum = 0.0;
    for (size_t i = 0; i < ref.size(); ++i) {
        sum += (est[i].pose.translation - ref[i].pose.translation).squaredNorm();
    }
    const double ate_err =
        std::abs(evaluate_ate_rmse(est, ref, false) - std::sqrt(sum / double(ref.size())));
    const RpeResult rpe = evaluate_rpe(est, ref, 1);
    double rpe_sum = 0.0;
    double rpe_err = 0.0;
    for (size_t i = 0; i + 1 < ref.size(); ++i) {
        const RigidTransform er = est[i].pose.inverse().compose(est[i + 1].pose);
        const RigidTransform rr = ref[i].pose.inverse().compose(ref[i + 1].pose);
        const double e = er.inverse().compose(rr).translation.norm();
        rpe_err = std::max(rpe_err, std::abs(rpe.errors[i] - e));
        rpe_sum += e * e;
    }
    rpe_err = std::max(rpe_err,
                       std::abs(rpe.rmse - std::sqrt(rpe_sum / double(rpe.errors.size()))));

    // Geometric normal equations against a dense stacked jacobian.
    std::vector<Correspondence> corrs;
    for (int i = 0; i < 500; ++i) {
        Correspondence c;
        c.source_point = {u(rng), u(rng), 2.0 + u(rng)};
        c.target_point = c.source_point + 0.01 * Eigen::Vector3d(u(rng), u(rng), u(rng));
        c.target_normal = Eigen::Vector3d(u(rng), u(rng), u(rng)).normalized();
        c.robust_weight = 0.5 + 0.5 * std::abs(u(rng));
        corrs.push_back(c);
    }
    const NormalEquations6 sys = build_geometric_system(corrs);
    Eigen::MatrixXd jg(corrs.size(), 6);
    Eigen::VectorXd rg(corrs.size());
    for (size_t i = 0; i < corrs.size(); ++i) {
        const auto& c = corrs[i];
        const double s = std::sqrt(c.robust_weight);
        jg.block<1, 3>(long(i), 0) = s * c.source_point.cross(c.target_normal).transpose();
        jg.block<1, 3>(long(i), 3) = s * c.target_normal.transpose();
        rg[long(i)] = s * c.target_normal.dot(c.source_point - c.target_point);
    }
    const double geo_err = std::max((sys.A - jg.transpose() * jg).norm(),
                                    (sys.b - jg.transpose() * rg).norm());

    const bool pass = knn_ok && jtj_err < 1e-9 && ate_err < 1e-12 && rpe_err < 1e-12 &&
                      geo_err < 1e-9;
    return {pass, std::string("knn ") + (knn_ok ? "exact" : "MISMATCH") + ", jtj err " +
                      fmt(jtj_err) + " (1e-9), ate err " + fmt(ate_err) + " rpe err " +
                      fmt(rpe_err) + " (1e-12), geometric err " + fmt(geo_err) + " (1e-9)"};
}

// ---------------------------------------------------------------------------
// Criterion 7: invariant suites.

Outcome criterion7() {
    std::vector<std::string> failures;

    // Dual-quaternion blending invariants.
    {
        RigidTransform t;
        t.rotation = Eigen::AngleAxisd(0.9, Eigen::Vector3d(1, 2, 3).normalized())
                         .toRotationMatrix();
        t.translation = {0.2, -0.4, 0.6};
        const DualQuaternion q = dq_from_transform(t);
        const double w[] = {1.0};
        const DualQuaternion single = dqlb({w, 1}, {&q, 1});
        if ((dq_to_transform(single).rotation - t.rotation).norm() > 1e-12 ||
            (dq_to_transform(single).translation - t.translation).norm() > 1e-12) {
            failures.push_back("dqlb single blend");
        }
        DualQuaternion neg = q;
        neg.real.coeffs() *= -1.0;
        neg.dual.coeffs() *= -1.0;
        const double w2[] = {0.5, 0.5};
        const DualQuaternion dqs2[] = {q, neg};
        const DualQuaternion anti = dqlb({w2, 2}, {dqs2, 2});
        if ((dq_to_transform(anti).rotation - t.rotation).norm() > 1e-12) {
            failures.push_back("dqlb antipodal handling");
        }
        if (std::abs(anti.real.norm() - 1.0) > 1e-12 ||
            std::abs(anti.real.coeffs().dot(anti.dual.coeffs())) > 1e-12) {
            failures.push_back("dqlb normalization");
        }
    }

    // Robust kernel boundary values.
    if (robust_weight(RobustKernel::Huber, 0.05, 0.05) != 1.0 ||
        std::abs(robust_weight(RobustKernel::Huber, 0.1, 0.05) - 0.5) > 1e-12 ||
        robust_weight(RobustKernel::Tukey, 0.05, 0.05) != 0.0 ||
        std::abs(robust_weight(RobustKernel::Tukey, 0.025, 0.05) - 0.5625) > 1e-12) {
        failures.push_back("robust kernel boundaries");
    }

    // Fusion weight saturation at the configured cap.
    {
        HashedTsdfVolume volume({0.01, 0.04, 8.0f, 1u << 16});
        const PinholeIntrinsics intr{100.0, 100.0, 15.5, 11.5, 32, 24};
        const DepthImage depth(intr.width, intr.height, 1.0f);
        const ColorImage color(intr.width, intr.height, {100, 100, 100});
        const RigidTransform identity = RigidTransform::identity();
        for (int i = 0; i < 20; ++i) volume.integrate_frame(depth, color, identity, intr);
        float max_w = 0.0f;
        for (const auto& [coord, block] : volume.blocks()) {
            for (const auto& v : block.voxels) max_w = std::max(max_w, v.weight);
        }
        if (max_w != 8.0f) failures.push_back("weight saturation");
    }

    // Association gates.
    {
        const PinholeIntrinsics intr{200.0, 200.0, 79.5, 59.5, 160, 120};
        TrackerConfig cfg;
        RenderedView predicted;
        predicted.depth = DepthImage(intr.width, intr.height, 1.0f);
        predicted.normals = NormalMap(intr.width, intr.height, {0.0f, 0.0f, -1.0f});
        predicted.color = ColorImage(intr.width, intr.height);
        predicted.pose = RigidTransform::identity();
        predicted.intrinsics = intr;
        auto frame_at = [&](float z) {
            FrameLevel f;
            f.depth = DepthImage(intr.width, intr.height, z);
            f.intensity = IntensityImage(intr.width, intr.height, 0.5f);
            f.normals = compute_normals(f.depth, intr, 2);
            f.intrinsics = intr;
            return f;
        };
        if (find_correspondences(frame_at(1.05f), predicted, RigidTransform::identity(), cfg)
                .empty() ||
            !find_correspondences(frame_at(1.12f), predicted, RigidTransform::identity(), cfg)
                 .empty()) {
            failures.push_back("distance gate");
        }
        RenderedView tilted = predicted;
        const Eigen::Matrix3f r =
            Eigen::AngleAxisf(float(30.0 * M_PI / 180.0), Eigen::Vector3f::UnitX())
                .toRotationMatrix();
        for (auto& n : tilted.normals.data()) n = r * n;
        if (!find_correspondences(frame_at(1.0f), tilted, RigidTransform::identity(), cfg)
                 .empty()) {
            failures.push_back("normal angle gate");
        }
    }

    // Pyramid halving.
    {
        const PinholeIntrinsics intr = small_intrinsics();
        const DepthImage depth(intr.width, intr.height, 1.0f);
        const ColorImage color(intr.width, intr.height, {90, 120, 150});
        const FramePyramid pyr = build_pyramid(depth, color, intr, 3);
        bool ok = pyr.levels.size() == 3;
        for (size_t l = 1; ok && l < pyr.levels.size(); ++l) {
            const auto& fine = pyr.levels[l - 1].intrinsics;
            const auto& coarse = pyr.levels[l].intrinsics;
            ok = coarse.width == fine.width / 2 && coarse.height == fine.height / 2 &&
                 std::abs(coarse.fx - 0.5 * fine.fx) < 1e-12;
        }
        if (!ok) failures.push_back("pyramid halving");
    }

    // Seeded determinism of sampling, solving, and fusion.
    {
        const TriangleMesh plane = generate_synthetic_plane(21, 13, 1.0);
        const DeformationGraph a = build_graph(plane, 40, 4, 23);
        const DeformationGraph b = build_graph(plane, 40, 4, 23);
        bool same = a.nodes.size() == b.nodes.size();
        for (size_t i = 0; same && i < a.nodes.size(); ++i) {
            same = (a.nodes[i].position - b.nodes[i].position).norm() == 0.0 &&
                   a.edges[i] == b.edges[i];
        }
        if (!same) failures.push_back("graph sampling determinism");

        const TriangleMesh target =
            apply_synthetic_deformation(plane, DeformationKind::Sinusoid, 0.03, 0);
        NonRigidConfig cfg;
        const WarpSolveResult r1 = solve_warp_field(a, plane, target, cfg);
        const WarpSolveResult r2 = solve_warp_field(a, plane, target, cfg);
        bool solver_same = r1.trace.size() == r2.trace.size();
        for (size_t i = 0; solver_same && i < r1.trace.size(); ++i) {
            solver_same = r1.trace[i].e_total == r2.trace[i].e_total;
        }
        for (size_t i = 0; solver_same && i < r1.graph.nodes.size(); ++i) {
            solver_same = (r1.graph.nodes[i].dq.real.coeffs() ==
                           r2.graph.nodes[i].dq.real.coeffs()) &&
                          (r1.graph.nodes[i].dq.dual.coeffs() ==
                           r2.graph.nodes[i].dq.dual.coeffs());
        }
        if (!solver_same) failures.push_back("solver determinism");

        const PinholeIntrinsics intr{100.0, 100.0, 15.5, 11.5, 32, 24};
        const std::vector<SignedDistance> scene = {sphere_sdf({0.0, 0.0, 1.0}, 0.3)};
        const DepthImage depth = render_synthetic_scene(scene, RigidTransform::identity(), intr);
        const ColorImage color = render_synthetic_color(scene, RigidTransform::identity(), intr);
        HashedTsdfVolume v1({0.01, 0.04, 128.0f, 1u << 16});
        HashedTsdfVolume v2({0.01, 0.04, 128.0f, 1u << 16});
        v1.integrate_frame(depth, color, RigidTransform::identity(), intr);
        v2.integrate_frame(depth, color, RigidTransform::identity(), intr);
        bool fuse_same = v1.block_count() == v2.block_count();
        for (const auto& [coord, block] : v1.blocks()) {
            if (!fuse_same) break;
            const auto it = v2.blocks().find(coord);
            if (it == v2.blocks().end()) {
                fuse_same = false;
                break;
            }
            for (int k = 0; k < VoxelBlock::kVoxels; ++k) {
                if (block.voxels[size_t(k)].tsdf != it->second.voxels[size_t(k)].tsdf ||
                    block.voxels[size_t(k)].weight != it->second.voxels[size_t(k)].weight) {
                    fuse_same = false;
                }
            }
        }
        if (!fuse_same) failures.push_back("fusion determinism");
    }

    if (failures.empty()) {
        return {true, "dqlb, kernels, weight cap, gates, pyramid, determinism all hold"};
    }
    std::string detail = "failed:";
    for (const auto& f : failures) detail += " " + f + ";";
    return {false, detail};
}

}  // namespace

int main() {
    Outcome outcomes[7];
    outcomes[0] = criterion1();
    outcomes[1] = criterion2();
    outcomes[2] = criterion3();
    outcomes[3] = criterion4();
    outcomes[4] = criterion5();
    outcomes[5] = criterion6();
    outcomes[6] = criterion7();

    bool all_pass = true;
    for (int i = 0; i < 7; ++i) {
        std::printf("criterion %d: %s - %s\n", i + 1, outcomes[i].pass ? "PASS" : "FAIL",
                    outcomes[i].detail.c_str());
        all_pass = all_pass && outcomes[i].pass;
    }
    return all_pass ? 0 : 1;
}
