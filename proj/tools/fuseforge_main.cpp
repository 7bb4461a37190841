#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fuseforge/core/errors.hpp"
#include "fuseforge/graph/deformation_graph.hpp"
#include "fuseforge/image/filters.hpp"
#include "fuseforge/image/pyramid.hpp"
#include "fuseforge/io/config.hpp"
#include "fuseforge/io/ply.hpp"
#include "fuseforge/io/png_io.hpp"
#include "fuseforge/io/trajectory.hpp"
#include "fuseforge/io/tum_dataset.hpp"
#include "fuseforge/nonrigid/warp_solver.hpp"
#include "fuseforge/surface/marching_cubes.hpp"
#include "fuseforge/tracking/tracker.hpp"
#include "fuseforge/volume/tsdf_volume.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_manifest(const fs::path& out_dir, const json& manifest) {
    std::ofstream f(out_dir / "manifest.json");
    f << manifest.dump(2) << "\n";
}

fuseforge::PinholeIntrinsics intrinsics_from_config(
    const std::map<std::string, std::string>& cfg) {
    fuseforge::PinholeIntrinsics intr;
    intr.fx = fuseforge::config_double(cfg, "fx", 525.0);
    intr.fy = fuseforge::config_double(cfg, "fy", 525.0);
    intr.cx = fuseforge::config_double(cfg, "cx", 319.5);
    intr.cy = fuseforge::config_double(cfg, "cy", 239.5);
    intr.width = fuseforge::config_int(cfg, "width", 640);
    intr.height = fuseforge::config_int(cfg, "height", 480);
    return intr;
}

struct RigidArgs {
    std::string dataset;
    std::string config_path;
    std::string out;
    int max_frames = -1;
    int levels = 3;
    double lambda_photo = -1.0;  // <0 means "use config/default"
    bool continue_on_failure = false;
};

int run_rigid(const RigidArgs& args) {
    std::map<std::string, std::string> cfg;
    if (!args.config_path.empty()) cfg = fuseforge::read_config_file(args.config_path);

    const fuseforge::TumDataset dataset = fuseforge::load_tum_dataset(args.dataset);
    if (dataset.frames.empty()) {
        std::cerr << "no frames associated in " << args.dataset << "\n";
        return 2;
    }

    fs::create_directories(args.out);
    const fuseforge::PinholeIntrinsics intr = intrinsics_from_config(cfg);

    fuseforge::TsdfConfig tsdf_cfg;
    tsdf_cfg.voxel_size = fuseforge::config_double(cfg, "voxel_size", tsdf_cfg.voxel_size);
    tsdf_cfg.truncation = fuseforge::config_double(cfg, "truncation", 4.0 * tsdf_cfg.voxel_size);
    tsdf_cfg.max_weight =
        float(fuseforge::config_double(cfg, "max_weight", double(tsdf_cfg.max_weight)));
    fuseforge::HashedTsdfVolume volume(tsdf_cfg);

    fuseforge::TrackerConfig track_cfg;
    track_cfg.lambda_photo = args.lambda_photo >= 0.0
                                 ? args.lambda_photo
                                 : fuseforge::config_double(cfg, "lambda_photo",
                                                            track_cfg.lambda_photo);
    track_cfg.huber_delta = fuseforge::config_double(cfg, "huber_delta", track_cfg.huber_delta);
    track_cfg.min_correspondences =
        fuseforge::config_int(cfg, "min_correspondences", track_cfg.min_correspondences);
    const double depth_scale = fuseforge::config_double(cfg, "depth_scale", 5000.0);
    const double sigma_spatial = fuseforge::config_double(cfg, "bilateral_sigma_spatial", 2.0);
    const double sigma_range = fuseforge::config_double(cfg, "bilateral_sigma_range", 0.05);
    const int bilateral_radius = fuseforge::config_int(cfg, "bilateral_radius", 3);

    size_t frame_limit = dataset.frames.size();
    if (args.max_frames >= 0) frame_limit = std::min(frame_limit, size_t(args.max_frames));

    fuseforge::Trajectory estimated;
    std::ofstream stats(fs::path(args.out) / "frame_stats.csv");
    stats << "frame,timestamp,tracked,correspondences,mean_abs_residual,ms\n";

    fuseforge::RigidTransform pose;
    bool tracking_ok = true;
    for (size_t i = 0; i < frame_limit; ++i) {
        const auto& frame = dataset.frames[i];
        const auto t0 = std::chrono::steady_clock::now();

        fuseforge::DepthImage depth = fuseforge::read_depth_png(frame.depth_path, depth_scale);
        fuseforge::ColorImage color = fuseforge::read_color_png(frame.color_path);
        depth = fuseforge::bilateral_filter(depth, sigma_spatial, sigma_range, bilateral_radius);
        const fuseforge::FramePyramid pyramid =
            fuseforge::build_pyramid(depth, color, intr, args.levels);

        size_t corrs = 0;
        double residual = 0.0;
        bool tracked = true;
        if (i > 0) {
            try {
                const fuseforge::TrackResult result =
                    fuseforge::track_frame(pyramid, volume, pose, track_cfg);
                pose = result.pose;
                if (!result.stats.empty()) {
                    corrs = result.stats.back().correspondences;
                    residual = result.stats.back().mean_abs_residual;
                }
            } catch (const fuseforge::TrackingFailureError& e) {
                tracked = false;
                tracking_ok = false;
                std::cerr << "frame " << i << ": " << e.what() << "\n";
                if (!args.continue_on_failure) return 1;
            }
        }
        if (tracked) {
            volume.integrate_frame(depth, color, pose, intr, &pyramid.levels[0].normals);
        }
        estimated.push_back({frame.timestamp, pose});

        const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
        stats << i << "," << frame.timestamp << "," << (tracked ? 1 : 0) << "," << corrs << ","
              << residual << "," << ms << "\n";
    }

    fuseforge::write_trajectory_tum(estimated, (fs::path(args.out) / "trajectory.txt").string());
    const fuseforge::TriangleMesh mesh = fuseforge::marching_cubes(volume);
    fuseforge::export_ply(mesh, (fs::path(args.out) / "mesh.ply").string());

    write_manifest(args.out, {{"command", "rigid"},
                              {"dataset", args.dataset},
                              {"config", args.config_path},
                              {"frames", frame_limit},
                              {"levels", args.levels},
                              {"lambda_photo", track_cfg.lambda_photo}});
    return tracking_ok ? 0 : 1;
}

struct NonRigidArgs {
    std::string source;
    std::string target;
    std::string config_path;
    std::string out;
    double phi = -1.0;
    int nodes = 50;
    int k = 4;
    int max_iters = 30;
    uint32_t seed = 7;
};

int run_nonrigid(const NonRigidArgs& args) {
    std::map<std::string, std::string> cfg;
    if (!args.config_path.empty()) cfg = fuseforge::read_config_file(args.config_path);

    const fuseforge::TriangleMesh source = fuseforge::import_ply(args.source);
    const fuseforge::TriangleMesh target = fuseforge::import_ply(args.target);
    if (source.vertices.size() != target.vertices.size() ||
        source.faces.size() != target.faces.size()) {
        std::cerr << "source and target meshes must share topology\n";
        return 2;
    }

    fs::create_directories(args.out);
    fuseforge::NonRigidConfig solve_cfg;
    solve_cfg.phi = args.phi >= 0.0 ? args.phi
                                    : fuseforge::config_double(cfg, "phi", solve_cfg.phi);
    solve_cfg.max_iters = args.max_iters;
    solve_cfg.tukey_lambda =
        fuseforge::config_double(cfg, "tukey_lambda", solve_cfg.tukey_lambda);

    const fuseforge::DeformationGraph graph =
        fuseforge::build_graph(source, size_t(args.nodes), size_t(args.k), args.seed);
    const fuseforge::WarpSolveResult result =
        fuseforge::solve_warp_field(graph, source, target, solve_cfg);
    const fuseforge::TriangleMesh warped = fuseforge::warp_mesh(result.graph, source);

    fuseforge::export_ply(warped, (fs::path(args.out) / "warped.ply").string());
    {
        std::ofstream trace(fs::path(args.out) / "energy.csv");
        fuseforge::write_energy_trace(result.trace, trace);
    }

    double max_dist = 0.0, sum = 0.0, sum_sq = 0.0;
    for (size_t i = 0; i < warped.vertices.size(); ++i) {
        const double d = (warped.vertices[i] - target.vertices[i]).norm();
        max_dist = std::max(max_dist, d);
        sum += d;
        sum_sq += d * d;
    }
    const double n = double(warped.vertices.size());
    const double mean = sum / n;
    const double stddev = std::sqrt(std::max(0.0, sum_sq / n - mean * mean));
    {
        std::ofstream s(fs::path(args.out) / "stats.csv");
        s.precision(12);
        s << "max_dist,mean_dist,std_dist\n" << max_dist << "," << mean << "," << stddev << "\n";
    }
    std::cout << "max_dist " << max_dist << " mean_dist " << mean << " std_dist " << stddev
              << "\n";

    write_manifest(args.out, {{"command", "nonrigid"},
                              {"source", args.source},
                              {"target", args.target},
                              {"phi", solve_cfg.phi},
                              {"nodes", args.nodes},
                              {"k", args.k},
                              {"seed", args.seed}});
    return 0;
}

int run_eval(const std::string& est_path, const std::string& ref_path, int delta, bool no_align,
             bool as_json) {
    const fuseforge::Trajectory est = fuseforge::read_trajectory_tum(est_path);
    const fuseforge::Trajectory ref = fuseforge::read_trajectory_tum(ref_path);
    const double ate = fuseforge::evaluate_ate_rmse(est, ref, !no_align);
    const fuseforge::RpeResult rpe = fuseforge::evaluate_rpe(est, ref, delta);
    if (as_json) {
        std::cout << json{{"ate_rmse_m", ate}, {"rpe_rmse_m", rpe.rmse}}.dump() << "\n";
    } else {
        std::cout << "ate_rmse_m " << ate << "\nrpe_rmse_m " << rpe.rmse << "\n";
    }
    return 0;
}

int run_mesh(const std::string& volume_path, const std::string& out_path) {
    const fuseforge::HashedTsdfVolume volume = fuseforge::HashedTsdfVolume::load(volume_path);
    const fuseforge::TriangleMesh mesh = fuseforge::marching_cubes(volume);
    fuseforge::export_ply(mesh, out_path);
    std::cout << "vertices " << mesh.vertices.size() << " faces " << mesh.faces.size() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dense rgb-d fusion and non-rigid registration pipeline"};
    app.require_subcommand(1);

    RigidArgs rigid_args;
    CLI::App* rigid = app.add_subcommand("rigid", "track and fuse an rgb-d sequence");
    rigid->add_option("dataset", rigid_args.dataset, "dataset root (depth.txt/rgb.txt)")
        ->required();
    rigid->add_option("--config", rigid_args.config_path, "key=value config file");
    rigid->add_option("--out", rigid_args.out, "output directory")->required();
    rigid->add_option("--max-frames", rigid_args.max_frames, "frame limit");
    rigid->add_option("--levels", rigid_args.levels, "pyramid levels");
    rigid->add_option("--lambda-photo", rigid_args.lambda_photo, "photometric term weight");
    rigid->add_flag("--continue-on-failure", rigid_args.continue_on_failure,
                    "keep integrating after a tracking failure");

    NonRigidArgs nr_args;
    CLI::App* nonrigid = app.add_subcommand("nonrigid", "non-rigid mesh registration");
    nonrigid->add_option("source", nr_args.source, "source mesh (ply)")->required();
    nonrigid->add_option("target", nr_args.target, "target mesh (ply, same topology)")
        ->required();
    nonrigid->add_option("--config", nr_args.config_path, "key=value config file");
    nonrigid->add_option("--out", nr_args.out, "output directory")->required();
    nonrigid->add_option("--phi", nr_args.phi, "regularization weight");
    nonrigid->add_option("--nodes", nr_args.nodes, "graph node count");
    nonrigid->add_option("--k", nr_args.k, "neighbors per node");
    nonrigid->add_option("--max-iters", nr_args.max_iters, "solver iterations");
    nonrigid->add_option("--seed", nr_args.seed, "node sampling seed");

    std::string est_path, ref_path;
    int delta = 1;
    bool no_align = false, as_json = false;
    CLI::App* eval = app.add_subcommand("eval", "trajectory metrics");
    eval->add_option("estimated", est_path, "estimated trajectory (tum format)")->required();
    eval->add_option("reference", ref_path, "reference trajectory (tum format)")->required();
    eval->add_option("--delta", delta, "rpe frame delta");
    eval->add_flag("--no-align", no_align, "skip rigid alignment before ate");
    eval->add_flag("--json", as_json, "machine-readable output");

    std::string volume_path, mesh_out;
    CLI::App* mesh = app.add_subcommand("mesh", "extract a mesh from a saved volume");
    mesh->add_option("volume", volume_path, "saved tsdf volume")->required();
    mesh->add_option("--out", mesh_out, "output ply path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (rigid->parsed()) return run_rigid(rigid_args);
        if (nonrigid->parsed()) return run_nonrigid(nr_args);
        if (eval->parsed()) return run_eval(est_path, ref_path, delta, no_align, as_json);
        if (mesh->parsed()) return run_mesh(volume_path, mesh_out);
    } catch (const fuseforge::IoError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
    return 0;
}
