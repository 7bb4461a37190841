#pragma once

#include <string>

#include "fuseforge/surface/mesh.hpp"

namespace fuseforge {

/// ASCII PLY with vertex properties x y z nx ny nz [red green blue] and face
/// lists "3 a b c". Round-trip preserves topology exactly and coordinates to
/// printed precision.
void export_ply(const TriangleMesh& mesh, const std::string& path);
TriangleMesh import_ply(const std::string& path);

}  // namespace fuseforge
