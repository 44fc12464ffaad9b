#include "core/grid.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "core/errors.hpp"

namespace svr {

namespace {

// Roughly doubling primes for the slot array.
constexpr std::size_t kPrimes[] = {
    97,       193,      389,      769,       1543,      3079,      6151,
    12289,    24593,    49157,    98317,     196613,    393241,    786433,
    1572869,  3145739,  6291469,  12582917,  25165843,  50331653,  100663319,
    201326611};

std::size_t next_prime_size(std::size_t at_least) {
    for (std::size_t p : kPrimes)
        if (p >= at_least) return p;
    return kPrimes[std::size(kPrimes) - 1];
}

}  // namespace

BlockMap::BlockMap() : slots_(kPrimes[0]) {}

std::uint32_t BlockMap::find(const BlockCoord& key) const {
    std::size_t i = probe_start(key);
    for (;;) {
        const Slot& s = slots_[i];
        if (s.value == kInvalid) return kInvalid;
        if (s.key == key) return s.value;
        if (++i == slots_.size()) i = 0;
    }
}

std::uint32_t BlockMap::insert(const BlockCoord& key, std::uint32_t value) {
    if ((count_ + 1) * 4 > slots_.size() * 3) grow();
    std::size_t i = probe_start(key);
    for (;;) {
        Slot& s = slots_[i];
        if (s.value == kInvalid) {
            s.key = key;
            s.value = value;
            ++count_;
            return value;
        }
        if (s.key == key) return s.value;
        if (++i == slots_.size()) i = 0;
    }
}

void BlockMap::grow() {
    std::vector<Slot> old;
    old.swap(slots_);
    slots_.assign(next_prime_size(old.size() * 2), Slot{});
    for (const Slot& s : old) {
        if (s.value == kInvalid) continue;
        std::size_t i = probe_start(s.key);
        while (slots_[i].value != kInvalid)
            if (++i == slots_.size()) i = 0;
        slots_[i] = s;
    }
}

VoxelBlock::VoxelBlock(int res, int label_channels) {
    const std::size_t n = static_cast<std::size_t>(res) * res * res;
    sdf.assign(n, 0.0f);
    weight.assign(n, 0.0f);
    color.assign(3 * n, 0.0f);
    logits.assign(static_cast<std::size_t>(label_channels) * n, 0.0f);
}

SparseDenseGrid::SparseDenseGrid(double voxel_size, int block_res, int label_channels,
                                 std::size_t capacity)
    : voxel_size_(voxel_size),
      block_res_(block_res),
      label_channels_(label_channels),
      capacity_(capacity) {
    if (!(voxel_size > 0.0)) throw ConfigError("grid: voxel_size must be positive");
    if (block_res < 2) throw ConfigError("grid: block_res must be >= 2");
    if (label_channels < 1) throw ConfigError("grid: label_channels must be >= 1");
}

std::uint32_t SparseDenseGrid::allocate_block(const BlockCoord& c) {
    const std::uint32_t existing = map_.find(c);
    if (existing != kInvalidBlock) return existing;
    if (blocks_.size() >= capacity_)
        throw CapacityError("grid: block capacity exceeded", 1);
    const std::uint32_t idx = static_cast<std::uint32_t>(blocks_.size());
    map_.insert(c, idx);
    blocks_.emplace_back(block_res_, label_channels_);
    coords_.push_back(c);
    if (blocks_.size() == 1) {
        min_block_ = max_block_ = c;
    } else {
        min_block_.x = std::min(min_block_.x, c.x);
        min_block_.y = std::min(min_block_.y, c.y);
        min_block_.z = std::min(min_block_.z, c.z);
        max_block_.x = std::max(max_block_.x, c.x);
        max_block_.y = std::max(max_block_.y, c.y);
        max_block_.z = std::max(max_block_.z, c.z);
    }
    return idx;
}

namespace {

template <typename Cache>
bool gather_impl(const SparseDenseGrid& grid, const BlockMap& map,
                 const Eigen::Vector3d& x, Cache& cache) {
    using Scalar = std::remove_reference_t<decltype(cache.w[0])>;
    cache.valid = false;
    const double inv_h = 1.0 / grid.voxel_size();
    double fx[3];
    int base[3];
    for (int a = 0; a < 3; ++a) {
        const double g = x[a] * inv_h;
        const double fl = std::floor(g);
        base[a] = static_cast<int>(fl);
        fx[a] = g - fl;
    }
    const double w0[3] = {1.0 - fx[0], 1.0 - fx[1], 1.0 - fx[2]};

    // Corner c uses bit a of c along axis a. Neighbor voxels may live in a
    // different block; cache the last lookup since most corners share one.
    BlockCoord last_coord{std::numeric_limits<std::int32_t>::min(), 0, 0};
    std::uint32_t last_idx = SparseDenseGrid::kInvalidBlock;
    for (int c = 0; c < 8; ++c) {
        const int bx = c & 1, by = (c >> 1) & 1, bz = (c >> 2) & 1;
        const Eigen::Vector3i v(base[0] + bx, base[1] + by, base[2] + bz);
        const BlockCoord bc = grid.block_of_voxel(v);
        if (!(bc == last_coord)) {
            last_coord = bc;
            last_idx = map.find(bc);
        }
        if (last_idx == SparseDenseGrid::kInvalidBlock) return false;
        const std::uint32_t voxel = grid.local_index(v, bc);
        if (!(grid.block(last_idx).weight[voxel] > 0.0f)) return false;
        cache.block[c] = last_idx;
        cache.voxel[c] = voxel;
        const double wx = bx ? fx[0] : w0[0];
        const double wy = by ? fx[1] : w0[1];
        const double wz = bz ? fx[2] : w0[2];
        cache.w[c] = static_cast<Scalar>(wx * wy * wz);
        cache.dw[c][0] = static_cast<Scalar>((bx ? 1.0 : -1.0) * inv_h * wy * wz);
        cache.dw[c][1] = static_cast<Scalar>((by ? 1.0 : -1.0) * inv_h * wx * wz);
        cache.dw[c][2] = static_cast<Scalar>((bz ? 1.0 : -1.0) * inv_h * wx * wy);
    }
    cache.valid = true;
    return true;
}

template <typename Cache>
double sdf_impl(const SparseDenseGrid& grid, const Cache& c) {
    double acc = 0.0;
    for (int i = 0; i < 8; ++i)
        acc += static_cast<double>(c.w[i]) * grid.block(c.block[i]).sdf[c.voxel[i]];
    return acc;
}

template <typename Cache>
Eigen::Vector3d sdf_gradient_impl(const SparseDenseGrid& grid, const Cache& c) {
    Eigen::Vector3d g = Eigen::Vector3d::Zero();
    for (int i = 0; i < 8; ++i) {
        const double s = grid.block(c.block[i]).sdf[c.voxel[i]];
        g.x() += c.dw[i][0] * s;
        g.y() += c.dw[i][1] * s;
        g.z() += c.dw[i][2] * s;
    }
    return g;
}

template <typename Cache>
Eigen::Vector3d color_impl(const SparseDenseGrid& grid, const Cache& c) {
    Eigen::Vector3d rgb = Eigen::Vector3d::Zero();
    for (int i = 0; i < 8; ++i) {
        const float* col = &grid.block(c.block[i]).color[3 * c.voxel[i]];
        const double w = c.w[i];
        rgb.x() += w * col[0];
        rgb.y() += w * col[1];
        rgb.z() += w * col[2];
    }
    return rgb;
}

}  // namespace

bool SparseDenseGrid::gather_corners(const Eigen::Vector3d& x, CornerCache& cache) const {
    return gather_impl(*this, map_, x, cache);
}

bool SparseDenseGrid::gather_corners(const Eigen::Vector3d& x, CornerCacheD& cache) const {
    return gather_impl(*this, map_, x, cache);
}

float SparseDenseGrid::sdf_at(const CornerCache& c) const {
    return static_cast<float>(sdf_impl(*this, c));
}

Eigen::Vector3f SparseDenseGrid::sdf_gradient_at(const CornerCache& c) const {
    return sdf_gradient_impl(*this, c).cast<float>();
}

Eigen::Vector3f SparseDenseGrid::color_at(const CornerCache& c) const {
    return color_impl(*this, c).cast<float>();
}

void SparseDenseGrid::logits_at(const CornerCache& c, float* out) const {
    for (int k = 0; k < label_channels_; ++k) out[k] = 0.0f;
    for (int i = 0; i < 8; ++i) {
        const float* l =
            &blocks_[c.block[i]].logits[static_cast<std::size_t>(label_channels_) * c.voxel[i]];
        for (int k = 0; k < label_channels_; ++k) out[k] += c.w[i] * l[k];
    }
}

double SparseDenseGrid::sdf_at(const CornerCacheD& c) const { return sdf_impl(*this, c); }

Eigen::Vector3d SparseDenseGrid::sdf_gradient_at(const CornerCacheD& c) const {
    return sdf_gradient_impl(*this, c);
}

Eigen::Vector3d SparseDenseGrid::color_at(const CornerCacheD& c) const {
    return color_impl(*this, c);
}

void SparseDenseGrid::logits_at(const CornerCacheD& c, double* out) const {
    for (int k = 0; k < label_channels_; ++k) out[k] = 0.0;
    for (int i = 0; i < 8; ++i) {
        const float* l =
            &blocks_[c.block[i]].logits[static_cast<std::size_t>(label_channels_) * c.voxel[i]];
        for (int k = 0; k < label_channels_; ++k) out[k] += c.w[i] * l[k];
    }
}

bool SparseDenseGrid::query_sdf(const Eigen::Vector3d& x, double& sdf) const {
    CornerCacheD c;
    if (!gather_corners(x, c)) {
        sdf = 0.0;
        return false;
    }
    sdf = sdf_at(c);
    return true;
}

bool SparseDenseGrid::query_sdf_with_gradient(const Eigen::Vector3d& x, double& sdf,
                                              Eigen::Vector3d& grad) const {
    CornerCacheD c;
    if (!gather_corners(x, c)) {
        sdf = 0.0;
        grad.setZero();
        return false;
    }
    sdf = sdf_at(c);
    grad = sdf_gradient_at(c);
    return true;
}

void SparseDenseGrid::march_intervals(const Eigen::Vector3d& origin,
                                      const Eigen::Vector3d& dir, double t_min,
                                      double t_max, std::vector<Interval>& out) const {
    out.clear();
    if (blocks_.empty()) return;
    const double L = block_extent();

    // Clip to the allocated bounding box so traversal cannot wander off.
    const Eigen::Vector3d box_lo(min_block_.x * L, min_block_.y * L, min_block_.z * L);
    const Eigen::Vector3d box_hi((max_block_.x + 1) * L, (max_block_.y + 1) * L,
                                 (max_block_.z + 1) * L);
    double t0 = t_min, t1 = t_max;
    for (int a = 0; a < 3; ++a) {
        if (dir[a] == 0.0) {
            if (origin[a] < box_lo[a] || origin[a] >= box_hi[a]) return;
            continue;
        }
        const double ta = (box_lo[a] - origin[a]) / dir[a];
        const double tb = (box_hi[a] - origin[a]) / dir[a];
        t0 = std::max(t0, std::min(ta, tb));
        t1 = std::min(t1, std::max(ta, tb));
    }
    if (!(t0 < t1)) return;

    // Amanatides-Woo over the block lattice. Crossing t values are recomputed
    // from plane equations each step, not accumulated.
    const double t_eps = 1e-12 * std::max(1.0, std::abs(t0));
    const Eigen::Vector3d start = origin + (t0 + t_eps) * dir;
    std::int32_t b[3] = {static_cast<std::int32_t>(std::floor(start.x() / L)),
                         static_cast<std::int32_t>(std::floor(start.y() / L)),
                         static_cast<std::int32_t>(std::floor(start.z() / L))};
    const std::int32_t lo[3] = {min_block_.x, min_block_.y, min_block_.z};
    const std::int32_t hi[3] = {max_block_.x, max_block_.y, max_block_.z};
    for (int a = 0; a < 3; ++a) b[a] = std::clamp(b[a], lo[a], hi[a]);

    auto crossing = [&](int a) {
        if (dir[a] == 0.0) return std::numeric_limits<double>::infinity();
        const double plane = (b[a] + (dir[a] > 0.0 ? 1 : 0)) * L;
        return (plane - origin[a]) / dir[a];
    };

    double t = t0;
    bool open = false;
    double open_t0 = 0.0;
    while (t < t1) {
        double t_exit = t1;
        int axis = -1;
        for (int a = 0; a < 3; ++a) {
            const double c = crossing(a);
            if (c < t_exit) {
                t_exit = c;
                axis = a;
            }
        }
        const bool allocated =
            map_.find(BlockCoord{b[0], b[1], b[2]}) != kInvalidBlock;
        if (allocated && !open) {
            open = true;
            open_t0 = t;
        } else if (!allocated && open) {
            out.push_back({open_t0, t});
            open = false;
        }
        if (axis < 0) {
            t = t1;
            break;
        }
        b[axis] += dir[axis] > 0.0 ? 1 : -1;
        t = t_exit;
        if (b[axis] < lo[axis] || b[axis] > hi[axis]) break;
    }
    if (open) out.push_back({open_t0, std::min(t, t1)});
}

void SparseDenseGrid::march_ray(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir,
                                double step, std::size_t max_samples,
                                std::vector<RaySample>& out) const {
    out.clear();
    std::vector<Interval> intervals;
    march_intervals(origin, dir, 0.0, std::numeric_limits<double>::max(), intervals);
    double cursor = -std::numeric_limits<double>::infinity();
    for (const Interval& iv : intervals) {
        if (cursor < iv.t0) cursor = iv.t0 + 0.5 * step;
        while (cursor < iv.t1 && out.size() < max_samples) {
            out.push_back({cursor, step});
            cursor += step;
        }
        if (out.size() >= max_samples) break;
    }
    for (std::size_t k = 0; k + 1 < out.size(); ++k) out[k].delta = out[k + 1].t - out[k].t;
}

std::vector<Eigen::Vector3d> SparseDenseGrid::sample_uniform(std::size_t n,
                                                             std::uint64_t seed) const {
    if (blocks_.empty()) throw DataError("sample_uniform: empty grid");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, blocks_.size() - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double L = block_extent();
    std::vector<Eigen::Vector3d> points;
    points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const BlockCoord& c = coords_[pick(rng)];
        points.emplace_back((c.x + unit(rng)) * L, (c.y + unit(rng)) * L,
                            (c.z + unit(rng)) * L);
    }
    return points;
}

Eigen::AlignedBox3d SparseDenseGrid::allocated_bounds() const {
    if (blocks_.empty()) return {};
    const double L = block_extent();
    return Eigen::AlignedBox3d(
        Eigen::Vector3d(min_block_.x * L, min_block_.y * L, min_block_.z * L),
        Eigen::Vector3d((max_block_.x + 1) * L, (max_block_.y + 1) * L,
                        (max_block_.z + 1) * L));
}

}  // namespace svr
