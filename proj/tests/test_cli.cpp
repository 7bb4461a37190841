#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "fuseforge/io/ply.hpp"
#include "fuseforge/io/png_io.hpp"
#include "fuseforge/io/synthetic.hpp"
#include "fuseforge/io/trajectory.hpp"

using namespace fuseforge;
namespace fs = std::filesystem;

namespace {

const char* kCli = FUSEFORGE_CLI_PATH;

int run(const std::string& args, const std::string& stdout_path = "") {
    std::string cmd = std::string(kCli) + " " + args;
    if (!stdout_path.empty()) cmd += " > " + stdout_path;
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    TempDir(const char* name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

Trajectory straight_line(size_t n, const Eigen::Vector3d& step) {
    Trajectory t;
    for (size_t i = 0; i < n; ++i) {
        TrajectorySample s;
        s.timestamp = 10.0 + 0.1 * double(i);
        s.pose.translation = double(i) * step;
        t.push_back(s);
    }
    return t;
}

PinholeIntrinsics small_intrinsics() {
    PinholeIntrinsics intr;
    intr.fx = intr.fy = 80.0;
    intr.cx = 39.5;
    intr.cy = 29.5;
    intr.width = 80;
    intr.height = 60;
    return intr;
}

// Tiny TUM-layout dataset: a sphere in front of two planes, camera stepping
// sideways.
void write_tiny_dataset(const fs::path& root, int frames) {
    fs::create_directories(root / "depth");
    fs::create_directories(root / "rgb");
    const PinholeIntrinsics intr = small_intrinsics();
    const std::vector<SignedDistance> scene = {sphere_sdf({0.0, 0.0, 1.2}, 0.3),
                                               plane_sdf({0.0, 0.0, -1.0}, -2.0),
                                               plane_sdf({0.0, -1.0, 0.0}, -0.6)};
    std::ofstream dlist(root / "depth.txt");
    std::ofstream clist(root / "rgb.txt");
    std::ofstream gt(root / "groundtruth.txt");
    for (int i = 0; i < frames; ++i) {
        RigidTransform pose;
        pose.translation = {0.004 * i, 0.0, 0.002 * i};
        const DepthImage depth = render_synthetic_scene(scene, pose, intr);
        const ColorImage color = render_synthetic_color(scene, pose, intr);
        char dname[32], cname[32];
        std::snprintf(dname, sizeof(dname), "depth/%04d.png", i);
        std::snprintf(cname, sizeof(cname), "rgb/%04d.png", i);
        write_depth_png((root / dname).string(), depth);
        write_color_png((root / cname).string(), color);
        const double ts = 50.0 + 0.05 * i;
        dlist << ts << " " << dname << "\n";
        clist << ts << " " << cname << "\n";
        gt << ts << " " << pose.translation.x() << " " << pose.translation.y() << " "
           << pose.translation.z() << " 0 0 0 1\n";
    }
}

void write_intrinsics_config(const fs::path& path) {
    const PinholeIntrinsics intr = small_intrinsics();
    std::ofstream cfg(path);
    cfg << "fx = " << intr.fx << "\nfy = " << intr.fy << "\ncx = " << intr.cx
        << "\ncy = " << intr.cy << "\nwidth = " << intr.width << "\nheight = " << intr.height
        << "\nvoxel_size = 0.005\nmin_correspondences = 400\nlambda_photo = 0\n";
}

}  // namespace

TEST_CASE("eval reports zero error for identical trajectories") {
    TempDir dir("fuseforge_cli_eval");
    const Trajectory t = straight_line(10, {0.01, 0.0, 0.0});
    write_trajectory_tum(t, (dir.path / "a.txt").string());
    write_trajectory_tum(t, (dir.path / "b.txt").string());

    const std::string out = (dir.path / "out.txt").string();
    const int rc =
        run("eval " + (dir.path / "a.txt").string() + " " + (dir.path / "b.txt").string(), out);
    CHECK(rc == 0);
    std::ifstream f(out);
    std::string key;
    double ate = 1.0, rpe = 1.0;
    f >> key >> ate >> key >> rpe;
    CHECK(ate < 1e-12);
    CHECK(rpe < 1e-12);
}

TEST_CASE("eval honors no-align and json output") {
    TempDir dir("fuseforge_cli_eval_json");
    const Trajectory ref = straight_line(10, {0.01, 0.0, 0.0});
    Trajectory est = ref;
    for (auto& s : est) s.pose.translation += Eigen::Vector3d(0.0, 0.05, 0.0);
    write_trajectory_tum(est, (dir.path / "est.txt").string());
    write_trajectory_tum(ref, (dir.path / "ref.txt").string());

    const std::string out = (dir.path / "out.json").string();
    const int rc = run("eval " + (dir.path / "est.txt").string() + " " +
                           (dir.path / "ref.txt").string() + " --no-align --json",
                       out);
    CHECK(rc == 0);
    const std::string text = slurp(out);
    CHECK(text.find("\"ate_rmse_m\"") != std::string::npos);
    CHECK(text.find("\"rpe_rmse_m\"") != std::string::npos);
    CHECK(text.find("0.05") != std::string::npos);
}

TEST_CASE("eval exits with code 2 on a missing file") {
    TempDir dir("fuseforge_cli_eval_missing");
    const int rc = run("eval " + (dir.path / "nope.txt").string() + " " +
                       (dir.path / "nope.txt").string());
    CHECK(rc == 2);
}

TEST_CASE("nonrigid registers a deformed plane and writes its outputs") {
    TempDir dir("fuseforge_cli_nonrigid");
    const TriangleMesh plane = generate_synthetic_plane(21, 13, 1.0);
    const TriangleMesh target = apply_synthetic_deformation(plane, DeformationKind::Bend, 0.3, 0);
    export_ply(plane, (dir.path / "source.ply").string());
    export_ply(target, (dir.path / "target.ply").string());

    const fs::path out_dir = dir.path / "out";
    const int rc = run("nonrigid " + (dir.path / "source.ply").string() + " " +
                       (dir.path / "target.ply").string() + " --out " + out_dir.string() +
                       " --nodes 273 --max-iters 40 --phi 0.00001");
    CHECK(rc == 0);
    CHECK(fs::exists(out_dir / "warped.ply"));
    CHECK(fs::exists(out_dir / "energy.csv"));
    CHECK(fs::exists(out_dir / "stats.csv"));
    CHECK(fs::exists(out_dir / "manifest.json"));

    std::ifstream stats(out_dir / "stats.csv");
    std::string header, values;
    std::getline(stats, header);
    std::getline(stats, values);
    CHECK(header == "max_dist,mean_dist,std_dist");
    const double max_dist = std::stod(values.substr(0, values.find(',')));
    CHECK(max_dist > 0.0);
    CHECK(max_dist < 0.01);

    // The energy trace must end below where it started.
    std::ifstream energy(out_dir / "energy.csv");
    std::string line, first_row, last_row;
    std::getline(energy, line);  // header
    while (std::getline(energy, line)) {
        if (first_row.empty()) first_row = line;
        if (!line.empty()) last_row = line;
    }
    REQUIRE(!first_row.empty());
    // Columns: iteration,e_data,e_reg,e_total,step_norm.
    auto total_column = [](const std::string& row) {
        size_t pos = 0;
        for (int k = 0; k < 3; ++k) pos = row.find(',', pos) + 1;
        return std::stod(row.substr(pos));
    };
    CHECK(total_column(last_row) < total_column(first_row));

    const TriangleMesh warped = import_ply((out_dir / "warped.ply").string());
    CHECK(warped.vertices.size() == plane.vertices.size());
}

TEST_CASE("nonrigid reruns are byte-identical") {
    TempDir dir("fuseforge_cli_nonrigid_det");
    const TriangleMesh plane = generate_synthetic_plane(21, 13, 1.0);
    const TriangleMesh target =
        apply_synthetic_deformation(plane, DeformationKind::Sinusoid, 0.03, 0);
    export_ply(plane, (dir.path / "source.ply").string());
    export_ply(target, (dir.path / "target.ply").string());

    const std::string args = "nonrigid " + (dir.path / "source.ply").string() + " " +
                             (dir.path / "target.ply").string() + " --nodes 60 --seed 11 --out ";
    CHECK(run(args + (dir.path / "a").string()) == 0);
    CHECK(run(args + (dir.path / "b").string()) == 0);
    CHECK(slurp(dir.path / "a" / "warped.ply") == slurp(dir.path / "b" / "warped.ply"));
    CHECK(slurp(dir.path / "a" / "energy.csv") == slurp(dir.path / "b" / "energy.csv"));
}

TEST_CASE("nonrigid exits with code 2 on mismatched topology") {
    TempDir dir("fuseforge_cli_nonrigid_bad");
    export_ply(generate_synthetic_plane(21, 13, 1.0), (dir.path / "a.ply").string());
    export_ply(generate_synthetic_plane(5, 5, 1.0), (dir.path / "b.ply").string());
    const int rc = run("nonrigid " + (dir.path / "a.ply").string() + " " +
                       (dir.path / "b.ply").string() + " --out " + (dir.path / "out").string());
    CHECK(rc == 2);
}

TEST_CASE("rigid tracks a tiny synthetic sequence end to end") {
    TempDir dir("fuseforge_cli_rigid");
    const fs::path root = dir.path / "dataset";
    write_tiny_dataset(root, 4);
    write_intrinsics_config(dir.path / "run.cfg");

    const fs::path out_dir = dir.path / "out";
    const int rc = run("rigid " + root.string() + " --out " + out_dir.string() + " --config " +
                       (dir.path / "run.cfg").string());
    CHECK(rc == 0);
    CHECK(fs::exists(out_dir / "trajectory.txt"));
    CHECK(fs::exists(out_dir / "mesh.ply"));
    CHECK(fs::exists(out_dir / "frame_stats.csv"));
    CHECK(fs::exists(out_dir / "manifest.json"));

    const Trajectory est = read_trajectory_tum((out_dir / "trajectory.txt").string());
    REQUIRE(est.size() == 4);
    const Trajectory gt = read_trajectory_tum((root / "groundtruth.txt").string());
    CHECK(evaluate_ate_rmse(est, gt, false) < 0.01);

    const TriangleMesh mesh = import_ply((out_dir / "mesh.ply").string());
    CHECK(mesh.vertices.size() > 100);
    CHECK(mesh.faces.size() > 100);
}

TEST_CASE("rigid exits with code 2 on a missing dataset") {
    TempDir dir("fuseforge_cli_rigid_missing");
    const int rc = run("rigid " + (dir.path / "nope").string() + " --out " +
                       (dir.path / "out").string());
    CHECK(rc == 2);
}
