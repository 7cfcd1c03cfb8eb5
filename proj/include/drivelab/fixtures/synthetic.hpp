#pragma once

#include <cstdint>
#include <filesystem>

#include "drivelab/model.hpp"

namespace drivelab {

/// Rectangular city loop driven at constant speed; the geometry matches the
/// values the multimodal fixture is checked against.
inline constexpr double kFixtureLoopWidth = 700.0;   // east-west leg, metres
inline constexpr double kFixtureLoopHeight = 500.0;  // north-south leg
inline constexpr double kFixtureLoopLength = 2.0 * (kFixtureLoopWidth + kFixtureLoopHeight);
inline constexpr double kFixtureSpeedKmh = 35.0;
/// Onset spacing inside each gaze > pointing > speech chain.
inline constexpr Millis kFixtureChainGap = 500;

struct MultimodalFixtureOptions {
  int participants = 3;
  int tasks = 4;  // chains per participant
  std::uint64_t seed = 7;
};

/// Scene-frame origin of the loop (its south-west corner).
GeoSample fixture_origin();

/// Metres along the loop -> scene-frame position (counter-clockwise from
/// the origin: east, north, west, south).
Vec3 fixture_loop_position(double arc_length);

/// Writes manifest.json with CSV, OBJ and GeoJSON sources plus
/// gazetteer.json under `dir`. Returns the manifest path.
std::filesystem::path write_multimodal_fixture(const std::filesystem::path& dir,
                                               const MultimodalFixtureOptions& options = {});

/// Miniature Drive&Act-style export: 3D body poses, activity intervals and a
/// GPS trace, no environment geometry. Returns the manifest path.
std::filesystem::path write_driveact_fixture(const std::filesystem::path& dir);

}  // namespace drivelab
