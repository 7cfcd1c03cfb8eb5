#pragma once

#include <vector>

#include "drivelab/geo/geodesy.hpp"
#include "drivelab/model.hpp"
#include "drivelab/validate.hpp"

namespace drivelab {

inline constexpr double kDefaultBuildingHeight = 10.0;

/// Triangulates a simple polygon (either winding) by ear clipping. Returns
/// index triples into `ring`, counter-clockwise. Collinear vertices are
/// clipped without emitting a triangle.
std::vector<Triangle> ear_clip(const std::vector<Vec2>& ring);

/// Signed shoelace area; positive for counter-clockwise rings.
double signed_area(const std::vector<Vec2>& ring);

/// Prism mesh per footprint with id "bldg-<footprint id>". UV atlas: walls
/// in v [0, 0.5] with u the running perimeter fraction, top cap in
/// [0,0.5]x[0.5,1], bottom cap in [0.5,1]x[0.5,1]. Non-simple footprints are
/// skipped with a warning.
std::vector<MeshAsset> extrude_footprints(const std::vector<BuildingFootprint>& footprints,
                                          const LocalFrame& frame, Report* report = nullptr);

std::string building_mesh_id(const std::string& footprint_id);

}  // namespace drivelab
