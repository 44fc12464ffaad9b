#pragma once

#include <string>
#include <vector>

#include "core/frame.hpp"
#include "core/sfm.hpp"

namespace svr {

struct Dataset {
    std::string root;
    std::vector<Frame> frames;  // sorted by id
    std::vector<Landmark> landmarks;
    std::vector<CovisPair> covis;
    std::string gt_mesh_path;        // empty when the dataset has no ground truth
    std::vector<double> gt_scales;   // per-frame gt depth scale, synthetic only
};

// Loads the directory layout:
//   root/{intrinsics.txt, poses.txt, images/%06d.{bin,png},
//         depth/%06d.{f32,png}, normal/%06d.f32, semantic/%06d.f32,
//         sfm/points.json, sfm/covis.json, gt/mesh.ply}
// Throws DataError naming the offending file on missing inputs, shape
// mismatches, or invalid poses (poses are re-orthonormalized when drift
// exceeds 1e-6; determinant -1 is rejected).
Dataset load_dataset(const std::string& root);

}  // namespace svr
