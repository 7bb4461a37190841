#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>

#include <Eigen/Core>

#include "fuseforge/core/intrinsics.hpp"
#include "fuseforge/core/rigid_transform.hpp"
#include "fuseforge/image/image.hpp"

namespace fuseforge {

/// One cell of the truncated signed distance field. tsdf is the signed
/// distance normalized by the truncation band, in [-1, 1].
struct Voxel {
    float tsdf = 0.0f;
    float weight = 0.0f;
    Rgb8 color;
};

struct BlockCoord {
    int32_t x = 0, y = 0, z = 0;
    bool operator==(const BlockCoord&) const = default;
};

/// Spatial hash of a block coordinate:
/// ((x*73856093) xor (y*19349669) xor (z*83492791)) mod table_size,
/// on unsigned arithmetic.
inline uint64_t block_hash(const BlockCoord& c, uint64_t table_size) {
    const uint64_t h = (uint64_t(uint32_t(c.x)) * 73856093ull) ^
                       (uint64_t(uint32_t(c.y)) * 19349669ull) ^
                       (uint64_t(uint32_t(c.z)) * 83492791ull);
    return h % table_size;
}

struct BlockCoordHasher {
    size_t operator()(const BlockCoord& c) const {
        return size_t((uint64_t(uint32_t(c.x)) * 73856093ull) ^
                      (uint64_t(uint32_t(c.y)) * 19349669ull) ^
                      (uint64_t(uint32_t(c.z)) * 83492791ull));
    }
};

/// 8x8x8 dense brick of voxels.
struct VoxelBlock {
    static constexpr int kSize = 8;
    static constexpr int kVoxels = kSize * kSize * kSize;
    std::array<Voxel, kVoxels> voxels;

    Voxel& at(int lx, int ly, int lz) {
        return voxels[size_t((lz * kSize + ly) * kSize + lx)];
    }
    const Voxel& at(int lx, int ly, int lz) const {
        return voxels[size_t((lz * kSize + ly) * kSize + lx)];
    }
};

struct TsdfConfig {
    double voxel_size = 0.01;   // meters
    double truncation = 0.04;   // meters, >= 2 * voxel_size
    float max_weight = 128.0f;
    size_t table_buckets = 1u << 20;
};

struct IntegrationStats {
    size_t touched_voxels = 0;
    size_t allocated_blocks = 0;
};

/// Sparse block-hashed TSDF volume with weighted running-average fusion.
class HashedTsdfVolume {
public:
    explicit HashedTsdfVolume(const TsdfConfig& cfg = {});

    const TsdfConfig& config() const { return cfg_; }
    size_t block_count() const { return blocks_.size(); }
    const std::unordered_map<BlockCoord, VoxelBlock, BlockCoordHasher>& blocks() const {
        return blocks_;
    }

    /// Fuses one depth+color frame taken at `pose` (camera-to-world). Voxels
    /// along each valid pixel's ray within the truncation band are allocated
    /// on demand and updated with per-sample weight max(0.1, cos(theta))
    /// against the pixel normal. Deterministic row-major pixel order.
    IntegrationStats integrate_frame(const DepthImage& depth, const ColorImage& color,
                                     const RigidTransform& pose, const PinholeIntrinsics& intr,
                                     const NormalMap* normals = nullptr);

    /// Trilinear sample of the normalized tsdf at a world point; empty if any
    /// of the 8 surrounding voxels is unobserved.
    std::optional<double> sample_tsdf(const Eigen::Vector3d& point) const;

    /// Unit central-difference gradient of the tsdf field; empty when the
    /// +-voxel_size neighborhood is not fully observed.
    std::optional<Eigen::Vector3d> sample_gradient(const Eigen::Vector3d& point) const;

    /// Trilinear color sample (per channel); empty on unobserved corners.
    std::optional<Eigen::Vector3d> sample_color(const Eigen::Vector3d& point) const;

    /// Direct voxel access by global voxel index; nullptr when unallocated.
    const Voxel* voxel_at(const Eigen::Vector3i& voxel_index) const;
    Voxel& voxel_ref(const Eigen::Vector3i& voxel_index);  // allocates

    /// World position of a voxel center.
    Eigen::Vector3d voxel_center(const Eigen::Vector3i& voxel_index) const {
        return (voxel_index.cast<double>() + Eigen::Vector3d::Constant(0.5)) * cfg_.voxel_size;
    }

    /// Drops blocks whose voxels are all unobserved.
    size_t sweep_empty_blocks();

    /// Little-endian binary dump / load of the full volume.
    void save(const std::string& path) const;
    static HashedTsdfVolume load(const std::string& path);

private:
    TsdfConfig cfg_;
    std::unordered_map<BlockCoord, VoxelBlock, BlockCoordHasher> blocks_;
};

}  // namespace fuseforge
