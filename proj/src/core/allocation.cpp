#include "core/allocation.hpp"

#include <unordered_set>

#include "core/errors.hpp"

namespace svr {

namespace {

struct CoordHash {
    std::size_t operator()(const BlockCoord& c) const {
        return static_cast<std::size_t>(hash_block_coord(c));
    }
};

using CoordSet = std::unordered_set<BlockCoord, CoordHash>;

AllocationReport commit(SparseDenseGrid& grid, const CoordSet& base, int dilation) {
    CoordSet wanted;
    wanted.reserve(base.size() * (dilation > 0 ? 8 : 1));
    for (const BlockCoord& c : base)
        for (int dz = -dilation; dz <= dilation; ++dz)
            for (int dy = -dilation; dy <= dilation; ++dy)
                for (int dx = -dilation; dx <= dilation; ++dx)
                    wanted.insert(BlockCoord{c.x + dx, c.y + dy, c.z + dz});

    AllocationReport report;
    report.blocks_requested = wanted.size();
    std::size_t unallocated = 0;
    for (const BlockCoord& c : wanted) {
        if (grid.find_block(c) != SparseDenseGrid::kInvalidBlock) continue;
        if (grid.block_count() >= grid.capacity()) {
            ++unallocated;
            continue;
        }
        grid.allocate_block(c);
        ++report.blocks_added;
    }
    if (unallocated > 0)
        throw CapacityError("allocate: grid capacity exceeded", unallocated);
    return report;
}

}  // namespace

AllocationReport allocate_for_points(SparseDenseGrid& grid,
                                     std::span<const Eigen::Vector3d> points,
                                     int dilation) {
    CoordSet base;
    base.reserve(points.size());
    for (const Eigen::Vector3d& p : points) base.insert(grid.block_of_point(p));
    AllocationReport report = commit(grid, base, dilation);
    report.pixels_used = points.size();
    return report;
}

AllocationReport allocate_for_frames(SparseDenseGrid& grid, std::span<const Frame> frames,
                                     const std::vector<ScaleField>* scales,
                                     int dilation) {
    CoordSet base;
    std::size_t pixels = 0;
    for (std::size_t fi = 0; fi < frames.size(); ++fi) {
        const Frame& f = frames[fi];
        const ScaleField* sf = scales ? &(*scales)[fi] : nullptr;
        for (int y = 0; y < f.depth.height; ++y) {
            for (int x = 0; x < f.depth.width; ++x) {
                const float d = f.depth.at(x, y);
                if (!(d > 0.0f)) continue;
                const double scale = sf ? sf->value(x, y) : 1.0;
                if (!(scale > 0.0)) continue;
                const Eigen::Vector3d p =
                    f.camera.unproject({static_cast<double>(x), static_cast<double>(y)},
                                       d * scale);
                base.insert(grid.block_of_point(p));
                ++pixels;
            }
        }
    }
    AllocationReport report = commit(grid, base, dilation);
    report.pixels_used = pixels;
    return report;
}

}  // namespace svr
