#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cstdint>
#include <limits>
#include <vector>

namespace svr {

struct BlockCoord {
    std::int32_t x = 0, y = 0, z = 0;
    bool operator==(const BlockCoord&) const = default;
};

inline std::uint64_t hash_block_coord(const BlockCoord& c) {
    // 3-integer mixing hash. Exact-key semantics come from the compare in the
    // probe loop; the hash only spreads load across slots.
    std::uint64_t h = static_cast<std::uint32_t>(c.x) * 0x9E3779B185EBCA87ull;
    h ^= static_cast<std::uint32_t>(c.y) * 0xC2B2AE3D27D4EB4Full;
    h += static_cast<std::uint32_t>(c.z) * 0x165667B19E3779F9ull;
    h ^= h >> 29;
    h *= 0xBF58476D1CE4E5B9ull;
    h ^= h >> 32;
    return h;
}

// Exact-key open-addressing map BlockCoord -> u32. Linear probing over a
// prime-sized slot array; grows by rehash once load exceeds 0.75. Lookups
// return exactly the inserted entry or kInvalid, never an aliased slot.
class BlockMap {
public:
    static constexpr std::uint32_t kInvalid = 0xFFFFFFFFu;

    BlockMap();

    std::uint32_t find(const BlockCoord& key) const;
    // Returns the stored value for `key`, inserting `value` first if absent.
    std::uint32_t insert(const BlockCoord& key, std::uint32_t value);
    std::size_t size() const { return count_; }
    std::size_t slot_count() const { return slots_.size(); }

private:
    struct Slot {
        BlockCoord key;
        std::uint32_t value = kInvalid;
    };
    std::vector<Slot> slots_;
    std::size_t count_ = 0;

    std::size_t probe_start(const BlockCoord& key) const {
        return static_cast<std::size_t>(hash_block_coord(key) % slots_.size());
    }
    void grow();
};

// Dense per-block payload arrays, res^3 voxels, x fastest. `weight` doubles
// as the observation count; a voxel is valid for interpolation iff its
// weight is strictly positive. sum_* hold fusion running sums (`weight` is
// the matching count) and are released on finalize. grad_* / rms_* are
// shadow buffers the optimizers allocate on demand.
struct VoxelBlock {
    std::vector<float> sdf;
    std::vector<float> weight;
    std::vector<float> color;   // 3 per voxel, rgb in [0,1]
    std::vector<float> logits;  // label_channels per voxel

    std::vector<float> sum_sdf, sum_color, sum_logits;
    std::vector<float> grad_sdf, grad_color, grad_logits;
    std::vector<float> rms_sdf, rms_color, rms_logits;

    VoxelBlock() = default;
    VoxelBlock(int res, int label_channels);
};

// Interpolation cache for one query point: the 8 cell corners with their
// trilinear weights and weight gradients. Compact float storage -- this is
// what the renderer retains per sample so the backward pass can scatter
// without re-walking the hash table.
struct CornerCache {
    std::uint32_t block[8];
    std::uint32_t voxel[8];
    float w[8];
    float dw[8][3];  // d(weight)/d(world), 1/m
    bool valid = false;
};

// Full-precision variant for queries whose consumers care about more than
// float accuracy (meshing, metrics, oracles).
struct CornerCacheD {
    std::uint32_t block[8];
    std::uint32_t voxel[8];
    double w[8];
    double dw[8][3];
    bool valid = false;
};

// Globally sparse, locally dense voxel grid: a collision-free hash table
// from integer block coordinates to res^3 dense voxel arrays.
class SparseDenseGrid {
public:
    static constexpr std::uint32_t kInvalidBlock = BlockMap::kInvalid;

    SparseDenseGrid(double voxel_size, int block_res, int label_channels,
                    std::size_t capacity = kDefaultCapacity);

    static constexpr std::size_t kDefaultCapacity = 1u << 21;

    double voxel_size() const { return voxel_size_; }
    int block_res() const { return block_res_; }
    int label_channels() const { return label_channels_; }
    double block_extent() const { return voxel_size_ * block_res_; }
    int voxels_per_block() const { return block_res_ * block_res_ * block_res_; }
    std::size_t capacity() const { return capacity_; }

    std::size_t block_count() const { return blocks_.size(); }
    bool empty() const { return blocks_.empty(); }
    const VoxelBlock& block(std::uint32_t i) const { return blocks_[i]; }
    VoxelBlock& block(std::uint32_t i) { return blocks_[i]; }
    const BlockCoord& block_coord(std::uint32_t i) const { return coords_[i]; }

    // Coordinate transforms. Voxel v samples the field at world v * h; block
    // b owns voxels [b*B, (b+1)*B).
    Eigen::Vector3d voxel_to_world(const Eigen::Vector3i& v) const {
        return v.cast<double>() * voxel_size_;
    }
    Eigen::Vector3i voxel_of_point(const Eigen::Vector3d& x) const {
        return Eigen::Vector3i(static_cast<int>(std::floor(x.x() / voxel_size_)),
                               static_cast<int>(std::floor(x.y() / voxel_size_)),
                               static_cast<int>(std::floor(x.z() / voxel_size_)));
    }
    BlockCoord block_of_voxel(const Eigen::Vector3i& v) const {
        return BlockCoord{floor_div(v.x(), block_res_), floor_div(v.y(), block_res_),
                          floor_div(v.z(), block_res_)};
    }
    BlockCoord block_of_point(const Eigen::Vector3d& x) const {
        const double L = block_extent();
        return BlockCoord{static_cast<std::int32_t>(std::floor(x.x() / L)),
                          static_cast<std::int32_t>(std::floor(x.y() / L)),
                          static_cast<std::int32_t>(std::floor(x.z() / L))};
    }
    std::uint32_t local_index(const Eigen::Vector3i& v, const BlockCoord& b) const {
        const int lx = v.x() - b.x * block_res_;
        const int ly = v.y() - b.y * block_res_;
        const int lz = v.z() - b.z * block_res_;
        return static_cast<std::uint32_t>(lx + block_res_ * (ly + block_res_ * lz));
    }
    Eigen::Vector3i voxel_of_local(const BlockCoord& b, std::uint32_t local) const {
        const int lx = static_cast<int>(local) % block_res_;
        const int ly = (static_cast<int>(local) / block_res_) % block_res_;
        const int lz = static_cast<int>(local) / (block_res_ * block_res_);
        return Eigen::Vector3i(b.x * block_res_ + lx, b.y * block_res_ + ly,
                               b.z * block_res_ + lz);
    }

    std::uint32_t find_block(const BlockCoord& c) const { return map_.find(c); }
    // Existing index if present, otherwise allocates. Throws CapacityError
    // once the logical capacity is exhausted.
    std::uint32_t allocate_block(const BlockCoord& c);

    // Trilinear interpolation cache at x. False when any of the 8 corners is
    // unallocated or has zero weight; neighbor lookups cross block faces
    // through the hash table.
    bool gather_corners(const Eigen::Vector3d& x, CornerCache& cache) const;
    bool gather_corners(const Eigen::Vector3d& x, CornerCacheD& cache) const;

    float sdf_at(const CornerCache& c) const;
    Eigen::Vector3f sdf_gradient_at(const CornerCache& c) const;
    Eigen::Vector3f color_at(const CornerCache& c) const;
    void logits_at(const CornerCache& c, float* out) const;  // label_channels

    double sdf_at(const CornerCacheD& c) const;
    Eigen::Vector3d sdf_gradient_at(const CornerCacheD& c) const;
    Eigen::Vector3d color_at(const CornerCacheD& c) const;
    void logits_at(const CornerCacheD& c, double* out) const;

    bool query_sdf(const Eigen::Vector3d& x, double& sdf) const;
    bool query_sdf_with_gradient(const Eigen::Vector3d& x, double& sdf,
                                 Eigen::Vector3d& grad) const;

    // Ray marching. Intervals are the merged t-spans where the ray crosses
    // allocated blocks, in strictly increasing order; t is measured along
    // `dir` from `origin` (dir unit-norm).
    struct Interval {
        double t0, t1;
    };
    void march_intervals(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                         double t_min, double t_max, std::vector<Interval>& out) const;

    struct RaySample {
        double t;
        double delta;  // t_{k+1} - t_k, last one = step
    };
    // Fixed-step samples inside allocated intervals; empty space contributes
    // none. Sample phase persists across contiguous blocks and resets after
    // each gap.
    void march_ray(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir, double step,
                   std::size_t max_samples, std::vector<RaySample>& out) const;

    // n points uniform over the union of allocated block volumes (equal-volume
    // blocks, so block choice is uniform). Deterministic under seed.
    std::vector<Eigen::Vector3d> sample_uniform(std::size_t n, std::uint64_t seed) const;

    // Axis-aligned world bounds of the allocated blocks.
    Eigen::AlignedBox3d allocated_bounds() const;

    static std::int32_t floor_div(std::int32_t a, std::int32_t b) {
        std::int32_t q = a / b;
        return (a % b != 0 && ((a < 0) != (b < 0))) ? q - 1 : q;
    }

private:
    double voxel_size_;
    int block_res_;
    int label_channels_;
    std::size_t capacity_;

    BlockMap map_;
    std::vector<VoxelBlock> blocks_;
    std::vector<BlockCoord> coords_;

    BlockCoord min_block_{0, 0, 0}, max_block_{0, 0, 0};  // valid iff !empty()
};

}  // namespace svr
