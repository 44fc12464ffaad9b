#pragma once

#include <string>

#include "core/meshing.hpp"

namespace svr {

// Binary little-endian PLY: float positions, float normals and uchar colors
// when present, optional int label. Positions round-trip through import_ply
// bit-exactly.
void export_ply(const Mesh& mesh, const std::string& path);
Mesh import_ply(const std::string& path);

// Positions + faces only.
void export_obj(const Mesh& mesh, const std::string& path);

}  // namespace svr
