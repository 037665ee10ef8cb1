#pragma once

#include <string>

#include "tg/mesh.hpp"

namespace tg {

// Reads a Gmsh MSH 4.1 ASCII file. All volume elements must share one kind
// (TRI3/QUAD4/TET4); lower-dimensional elements contribute boundary node
// tags only. Node tags are re-packed to contiguous 0-based indices.
Mesh load_gmsh(const std::string& path);

// Debug writer in the same format; load_gmsh(write_gmsh(m)) reproduces
// coordinates and connectivity.
void write_gmsh(const Mesh& mesh, const std::string& path);

}  // namespace tg
