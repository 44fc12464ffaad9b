#pragma once

#include <string>

#include "core/grid.hpp"

namespace svr {

// Grid snapshot file, binary little-endian:
//   magic "SDGV", version u32, voxel_size f64, block_res u32,
//   n_blocks u64, n_label_channels u32,
// then per block: coord 3*i32, sdf f32[B^3], weight f32[B^3],
// rgb f32[3*B^3], logits f32[C*B^3].
void save_grid(const SparseDenseGrid& grid, const std::string& path);
SparseDenseGrid load_grid(const std::string& path);

}  // namespace svr
