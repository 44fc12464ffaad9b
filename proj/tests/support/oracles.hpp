#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <vector>

#include "core/grid.hpp"

namespace svr::test {

// Independent allocated-interval discovery: slab-test every allocated block,
// sort by entry, merge touching spans. O(n_blocks) per ray.
inline std::vector<SparseDenseGrid::Interval> brute_force_intervals(
    const SparseDenseGrid& grid, const Eigen::Vector3d& origin,
    const Eigen::Vector3d& dir, double t_min, double t_max) {
    const double L = grid.block_extent();
    std::vector<SparseDenseGrid::Interval> spans;
    for (std::uint32_t i = 0; i < grid.block_count(); ++i) {
        const BlockCoord& c = grid.block_coord(i);
        double t0 = t_min, t1 = t_max;
        bool hit = true;
        const double lo[3] = {c.x * L, c.y * L, c.z * L};
        for (int a = 0; a < 3 && hit; ++a) {
            if (dir[a] == 0.0) {
                if (origin[a] < lo[a] || origin[a] >= lo[a] + L) hit = false;
                continue;
            }
            const double ta = (lo[a] - origin[a]) / dir[a];
            const double tb = (lo[a] + L - origin[a]) / dir[a];
            t0 = std::max(t0, std::min(ta, tb));
            t1 = std::min(t1, std::max(ta, tb));
        }
        if (hit && t0 < t1) spans.push_back({t0, t1});
    }
    std::sort(spans.begin(), spans.end(),
              [](const auto& a, const auto& b) { return a.t0 < b.t0; });
    std::vector<SparseDenseGrid::Interval> merged;
    for (const auto& s : spans) {
        if (!merged.empty() && s.t0 <= merged.back().t1 + 1e-12)
            merged.back().t1 = std::max(merged.back().t1, s.t1);
        else
            merged.push_back(s);
    }
    return merged;
}

// The sampling rule of march_ray applied to an interval list.
inline std::vector<double> sample_intervals(
    const std::vector<SparseDenseGrid::Interval>& intervals, double step,
    std::size_t max_samples) {
    std::vector<double> ts;
    double cursor = -std::numeric_limits<double>::infinity();
    for (const auto& iv : intervals) {
        if (cursor < iv.t0) cursor = iv.t0 + 0.5 * step;
        while (cursor < iv.t1 && ts.size() < max_samples) {
            ts.push_back(cursor);
            cursor += step;
        }
        if (ts.size() >= max_samples) break;
    }
    return ts;
}

// Marks every voxel of every allocated block observed so trilinear queries
// see a fully valid grid.
inline void mark_all_valid(SparseDenseGrid& grid, float weight = 1.0f) {
    for (std::uint32_t i = 0; i < grid.block_count(); ++i) {
        auto& w = grid.block(i).weight;
        std::fill(w.begin(), w.end(), weight);
    }
}

// Stores f(world_position_of_voxel) into the SDF channel of every voxel.
template <typename F>
void fill_sdf(SparseDenseGrid& grid, F&& f) {
    for (std::uint32_t i = 0; i < grid.block_count(); ++i) {
        VoxelBlock& b = grid.block(i);
        const int n = grid.voxels_per_block();
        for (int v = 0; v < n; ++v) {
            const Eigen::Vector3i voxel = grid.voxel_of_local(grid.block_coord(i), v);
            b.sdf[v] = static_cast<float>(f(grid.voxel_to_world(voxel)));
        }
    }
}

}  // namespace svr::test
