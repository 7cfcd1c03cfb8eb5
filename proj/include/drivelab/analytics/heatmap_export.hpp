#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "drivelab/analytics/heatmap.hpp"
#include "drivelab/json_io.hpp"

namespace drivelab {

/// Names accepted by ramp_color.
const std::vector<std::string>& color_ramps();

/// Colour of a normalised weight x in [0,1]. Throws std::invalid_argument
/// for an unknown ramp.
Rgb ramp_color(const std::string& ramp, double x);

/// uint32 width, uint32 height, then width*height float32 weights, row 0
/// first, all little-endian.
std::string encode_f32(const HeatmapLayer& layer);

struct FloatMap {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<float> values;
};

/// Throws ParseError on a truncated or oversized buffer.
FloatMap decode_f32(const std::string& bytes);

/// 8-bit RGBA PNG: colour from the ramp, alpha = weight / max weight. The
/// image is flipped so its top row is the highest v (or northernmost) row,
/// matching the usual texture upload convention. An empty ramp name uses the
/// layer's colour scheme.
std::string encode_png(const HeatmapLayer& layer, const std::string& ramp = {});

/// Layer metadata without the weights.
Json heatmap_summary(const HeatmapLayer& layer);

/// Writes <dir>/<id>.f32 and <dir>/<id>.png for every layer plus
/// <dir>/heatmaps.json with the summaries.
void write_heatmaps(const std::vector<HeatmapLayer>& layers, const std::filesystem::path& dir);

}  // namespace drivelab
