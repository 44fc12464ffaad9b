#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "core/frame.hpp"
#include "core/grid.hpp"
#include "core/scale_field.hpp"

namespace svr {

struct AllocationReport {
    std::size_t blocks_added = 0;
    std::size_t blocks_requested = 0;
    std::size_t pixels_used = 0;
};

// Allocates the block containing each point plus every block within L-inf
// radius `dilation` of it. Idempotent; existing payloads are untouched.
// Throws CapacityError (with the unallocated count) if the grid fills up.
AllocationReport allocate_for_points(SparseDenseGrid& grid,
                                     std::span<const Eigen::Vector3d> points,
                                     int dilation);

// Unprojects every valid pixel of every frame with its scaled prior depth and
// allocates around the resulting points. `scales` may be null (scale 1).
AllocationReport allocate_for_frames(SparseDenseGrid& grid, std::span<const Frame> frames,
                                     const std::vector<ScaleField>* scales, int dilation);

}  // namespace svr
