#pragma once

#include <Eigen/Core>
#include <vector>

#include "core/grid.hpp"

namespace svr {

struct Mesh {
    std::vector<Eigen::Vector3d> vertices;
    std::vector<Eigen::Vector3d> normals;  // unit, optional
    std::vector<Eigen::Vector3d> colors;   // rgb in [0,1], optional
    std::vector<int> labels;               // argmax label id, optional
    std::vector<Eigen::Vector3i> triangles;

    double area() const;
    bool has_normals() const { return normals.size() == vertices.size(); }
    bool has_colors() const { return colors.size() == vertices.size(); }
    bool has_labels() const { return labels.size() == vertices.size(); }
};

// Extracts the iso level set with the 256-case marching cubes table. Only
// cells whose 8 corners are all valid are processed (cells straddling block
// boundaries included); vertices sit on cell edges by linear interpolation
// and are deduplicated through a global edge key. Per-vertex attributes come
// from trilinear queries at the vertex.
Mesh marching_cubes(const SparseDenseGrid& grid, double iso = 0.0);

}  // namespace svr
