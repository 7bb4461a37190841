#include "fuseforge/volume/tsdf_volume.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <tuple>
#include <unordered_set>
#include <vector>

#include "fuseforge/core/errors.hpp"
#include "fuseforge/core/interpolation.hpp"
#include "fuseforge/image/filters.hpp"

namespace fuseforge {

namespace {

inline int floor_div(int a, int b) {
    return (a >= 0) ? a / b : -((-a + b - 1) / b);
}

inline Eigen::Vector3i world_to_voxel(const Eigen::Vector3d& p, double voxel_size) {
    return {int(std::floor(p.x() / voxel_size)), int(std::floor(p.y() / voxel_size)),
            int(std::floor(p.z() / voxel_size))};
}

struct LittleEndianFile {
    std::FILE* f = nullptr;
    explicit LittleEndianFile(std::FILE* file) : f(file) {}
    template <typename T>
    void write(const T& v) {
        if (std::fwrite(&v, sizeof(T), 1, f) != 1) throw IoError("volume dump: write failed");
    }
    template <typename T>
    T read() {
        T v{};
        if (std::fread(&v, sizeof(T), 1, f) != 1) throw IoError("volume dump: truncated file");
        return v;
    }
};

}  // namespace

HashedTsdfVolume::HashedTsdfVolume(const TsdfConfig& cfg) : cfg_(cfg) {
    if (cfg_.truncation < 2.0 * cfg_.voxel_size) {
        throw Error("HashedTsdfVolume: truncation must be >= 2 * voxel_size");
    }
    blocks_.rehash(cfg_.table_buckets);
}

const Voxel* HashedTsdfVolume::voxel_at(const Eigen::Vector3i& v) const {
    const BlockCoord bc{floor_div(v.x(), VoxelBlock::kSize), floor_div(v.y(), VoxelBlock::kSize),
                        floor_div(v.z(), VoxelBlock::kSize)};
    auto it = blocks_.find(bc);
    if (it == blocks_.end()) return nullptr;
    return &it->second.at(v.x() - bc.x * VoxelBlock::kSize, v.y() - bc.y * VoxelBlock::kSize,
                          v.z() - bc.z * VoxelBlock::kSize);
}

Voxel& HashedTsdfVolume::voxel_ref(const Eigen::Vector3i& v) {
    const BlockCoord bc{floor_div(v.x(), VoxelBlock::kSize), floor_div(v.y(), VoxelBlock::kSize),
                        floor_div(v.z(), VoxelBlock::kSize)};
    VoxelBlock& block = blocks_[bc];
    return block.at(v.x() - bc.x * VoxelBlock::kSize, v.y() - bc.y * VoxelBlock::kSize,
                    v.z() - bc.z * VoxelBlock::kSize);
}

IntegrationStats HashedTsdfVolume::integrate_frame(const DepthImage& depth,
                                                   const ColorImage& color,
                                                   const RigidTransform& pose,
                                                   const PinholeIntrinsics& intr,
                                                   const NormalMap* normals) {
    IntegrationStats stats;
    const size_t blocks_before = blocks_.size();
    const double tau = cfg_.truncation;
    const bool has_color = !color.empty();

    NormalMap computed;
    if (normals == nullptr) {
        computed = compute_normals(depth, intr, 2);
        normals = &computed;
    }

    // Pass 1: march each viewing ray through the truncation band and collect
    // the voxel blocks it crosses. Updating whole blocks afterwards keeps the
    // band watertight even where neighboring rays at the surface are further
    // apart than one voxel.
    std::vector<BlockCoord> touched;
    std::unordered_set<BlockCoord, BlockCoordHasher> seen;
    const double step = cfg_.voxel_size;
    for (int y = 0; y < depth.height(); ++y) {
        for (int x = 0; x < depth.width(); ++x) {
            const float d = depth.at(x, y);
            if (d <= 0.0f) continue;
            // Ray with unit z-parameterization: p(z) has camera depth z.
            const Eigen::Vector3d v((x - intr.cx) / intr.fx, (y - intr.cy) / intr.fy, 1.0);
            const double z_min = std::max(0.5 * step, double(d) - tau);
            const double z_max = double(d) + tau;
            for (double z = z_min; z <= z_max; z += step) {
                const Eigen::Vector3i vi = world_to_voxel(pose.apply(v * z), cfg_.voxel_size);
                const BlockCoord bc{floor_div(vi.x(), VoxelBlock::kSize),
                                    floor_div(vi.y(), VoxelBlock::kSize),
                                    floor_div(vi.z(), VoxelBlock::kSize)};
                if (seen.insert(bc).second) touched.push_back(bc);
            }
        }
    }

    // Pass 2: projective truncated signed-distance update of every voxel in
    // the touched blocks. Each voxel is measured against the depth of the
    // pixel it projects to, so only voxels within the band of some viewing
    // ray are written.
    const RigidTransform world_to_cam = pose.inverse();
    for (const BlockCoord& bc : touched) {
        VoxelBlock& block = blocks_[bc];
        for (int lz = 0; lz < VoxelBlock::kSize; ++lz) {
            for (int ly = 0; ly < VoxelBlock::kSize; ++ly) {
                for (int lx = 0; lx < VoxelBlock::kSize; ++lx) {
                    const Eigen::Vector3i vi(bc.x * VoxelBlock::kSize + lx,
                                             bc.y * VoxelBlock::kSize + ly,
                                             bc.z * VoxelBlock::kSize + lz);
                    const Eigen::Vector3d center_cam = world_to_cam.apply(voxel_center(vi));
                    if (center_cam.z() <= 0.0) continue;
                    const int u =
                        int(std::lround(intr.fx * center_cam.x() / center_cam.z() + intr.cx));
                    const int v_px =
                        int(std::lround(intr.fy * center_cam.y() / center_cam.z() + intr.cy));
                    if (!depth.in_bounds(u, v_px)) continue;
                    const float d = depth.at(u, v_px);
                    if (d <= 0.0f) continue;
                    // Projective signed distance at the voxel center, normalized.
                    const double sdf = double(d) - center_cam.z();
                    if (sdf < -tau || sdf > tau) continue;
                    const double tsdf = std::clamp(sdf / tau, -1.0, 1.0);

                    double w_sample = 0.1;
                    const Eigen::Vector3f n = normals->at(u, v_px);
                    if (normal_valid(n)) {
                        const Eigen::Vector3d dir =
                            Eigen::Vector3d((u - intr.cx) / intr.fx, (v_px - intr.cy) / intr.fy,
                                            1.0)
                                .normalized();
                        w_sample = std::max(0.1, double(-n.cast<double>().dot(dir)));
                    }

                    Voxel& vox = block.at(lx, ly, lz);
                    const double w_old = vox.weight;
                    const double w_new = std::min(double(cfg_.max_weight), w_old + w_sample);
                    vox.tsdf = float((w_old * vox.tsdf + w_sample * tsdf) / (w_old + w_sample));
                    if (has_color) {
                        const Rgb8 c = color.at(u, v_px);
                        vox.color.r = uint8_t(std::lround(
                            (w_old * vox.color.r + w_sample * double(c.r)) / (w_old + w_sample)));
                        vox.color.g = uint8_t(std::lround(
                            (w_old * vox.color.g + w_sample * double(c.g)) / (w_old + w_sample)));
                        vox.color.b = uint8_t(std::lround(
                            (w_old * vox.color.b + w_sample * double(c.b)) / (w_old + w_sample)));
                    }
                    vox.weight = float(w_new);
                    ++stats.touched_voxels;
                }
            }
        }
    }
    stats.allocated_blocks = blocks_.size() - blocks_before;
    return stats;
}

std::optional<double> HashedTsdfVolume::sample_tsdf(const Eigen::Vector3d& point) const {
    const Eigen::Vector3d g = point / cfg_.voxel_size - Eigen::Vector3d::Constant(0.5);
    const Eigen::Vector3i base(int(std::floor(g.x())), int(std::floor(g.y())),
                               int(std::floor(g.z())));
    const Eigen::Vector3d f = g - base.cast<double>();
    double corner[8];
    for (int dz = 0; dz < 2; ++dz) {
        for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
                const Voxel* vox = voxel_at(base + Eigen::Vector3i(dx, dy, dz));
                if (vox == nullptr || vox->weight <= 0.0f) return std::nullopt;
                corner[(dz * 2 + dy) * 2 + dx] = vox->tsdf;
            }
        }
    }
    return trilerp(corner, f.x(), f.y(), f.z());
}

std::optional<Eigen::Vector3d> HashedTsdfVolume::sample_gradient(
    const Eigen::Vector3d& point) const {
    const double h = cfg_.voxel_size;
    Eigen::Vector3d grad;
    for (int axis = 0; axis < 3; ++axis) {
        Eigen::Vector3d lo = point, hi = point;
        lo[axis] -= h;
        hi[axis] += h;
        const auto s_lo = sample_tsdf(lo);
        const auto s_hi = sample_tsdf(hi);
        if (!s_lo || !s_hi) return std::nullopt;
        grad[axis] = (*s_hi - *s_lo);
    }
    const double norm = grad.norm();
    if (norm < 1e-12) return std::nullopt;
    return grad / norm;
}

std::optional<Eigen::Vector3d> HashedTsdfVolume::sample_color(const Eigen::Vector3d& point) const {
    const Eigen::Vector3d g = point / cfg_.voxel_size - Eigen::Vector3d::Constant(0.5);
    const Eigen::Vector3i base(int(std::floor(g.x())), int(std::floor(g.y())),
                               int(std::floor(g.z())));
    const Eigen::Vector3d f = g - base.cast<double>();
    double r[8], gg[8], b[8];
    for (int dz = 0; dz < 2; ++dz) {
        for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
                const Voxel* vox = voxel_at(base + Eigen::Vector3i(dx, dy, dz));
                if (vox == nullptr || vox->weight <= 0.0f) return std::nullopt;
                const int i = (dz * 2 + dy) * 2 + dx;
                r[i] = vox->color.r;
                gg[i] = vox->color.g;
                b[i] = vox->color.b;
            }
        }
    }
    return Eigen::Vector3d(trilerp(r, f.x(), f.y(), f.z()), trilerp(gg, f.x(), f.y(), f.z()),
                           trilerp(b, f.x(), f.y(), f.z()));
}

size_t HashedTsdfVolume::sweep_empty_blocks() {
    size_t removed = 0;
    for (auto it = blocks_.begin(); it != blocks_.end();) {
        const bool empty = std::all_of(it->second.voxels.begin(), it->second.voxels.end(),
                                       [](const Voxel& v) { return v.weight <= 0.0f; });
        if (empty) {
            it = blocks_.erase(it);
            ++removed;
        } else {
            ++it;
        }
    }
    return removed;
}

void HashedTsdfVolume::save(const std::string& path) const {
    std::FILE* raw = std::fopen(path.c_str(), "wb");
    if (!raw) throw IoError("volume dump: cannot open " + path);
    LittleEndianFile f(raw);
    f.write(cfg_.voxel_size);
    f.write(cfg_.truncation);
    f.write(cfg_.max_weight);
    f.write(uint64_t(blocks_.size()));

    std::vector<const std::pair<const BlockCoord, VoxelBlock>*> sorted;
    sorted.reserve(blocks_.size());
    for (const auto& kv : blocks_) sorted.push_back(&kv);
    std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
        const BlockCoord &p = a->first, &q = b->first;
        return std::tie(p.z, p.y, p.x) < std::tie(q.z, q.y, q.x);
    });

    for (const auto* kv : sorted) {
        f.write(kv->first.x);
        f.write(kv->first.y);
        f.write(kv->first.z);
        for (const Voxel& v : kv->second.voxels) {
            f.write(v.tsdf);
            f.write(v.weight);
            f.write(v.color.r);
            f.write(v.color.g);
            f.write(v.color.b);
            f.write(uint8_t{0});
        }
    }
    std::fclose(raw);
}

HashedTsdfVolume HashedTsdfVolume::load(const std::string& path) {
    std::FILE* raw = std::fopen(path.c_str(), "rb");
    if (!raw) throw IoError("volume dump: cannot open " + path);
    LittleEndianFile f(raw);
    TsdfConfig cfg;
    cfg.voxel_size = f.read<double>();
    cfg.truncation = f.read<double>();
    cfg.max_weight = f.read<float>();
    const uint64_t count = f.read<uint64_t>();
    HashedTsdfVolume vol(cfg);
    for (uint64_t i = 0; i < count; ++i) {
        BlockCoord bc;
        bc.x = f.read<int32_t>();
        bc.y = f.read<int32_t>();
        bc.z = f.read<int32_t>();
        VoxelBlock& block = vol.blocks_[bc];
        for (Voxel& v : block.voxels) {
            v.tsdf = f.read<float>();
            v.weight = f.read<float>();
            v.color.r = f.read<uint8_t>();
            v.color.g = f.read<uint8_t>();
            v.color.b = f.read<uint8_t>();
            (void)f.read<uint8_t>();
        }
    }
    std::fclose(raw);
    return vol;
}

}  // namespace fuseforge
