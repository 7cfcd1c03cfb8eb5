#pragma once

#include <filesystem>
#include <string_view>

#include "drivelab/model.hpp"

namespace drivelab {

/// Reads Wavefront OBJ geometry (v, vt, f). Polygons are fan-triangulated;
/// when texture coordinates are present, vertices are split per (v, vt) pair
/// so the result carries one UV per vertex. Throws ParseError.
MeshAsset parse_obj(std::string_view text, std::string id, MeshRole role);
MeshAsset load_obj(const std::filesystem::path& path, std::string id, MeshRole role);

}  // namespace drivelab
