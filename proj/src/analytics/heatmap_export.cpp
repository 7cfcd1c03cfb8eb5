#include "drivelab/analytics/heatmap_export.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace drivelab {

namespace {

// Viridis sampled at nine evenly spaced stops.
constexpr std::array<std::array<double, 3>, 9> kViridis{{
    {0.267004, 0.004874, 0.329415},
    {0.282327, 0.140926, 0.457517},
    {0.253935, 0.265254, 0.529983},
    {0.206756, 0.371758, 0.553117},
    {0.163625, 0.471133, 0.558148},
    {0.127568, 0.566949, 0.550556},
    {0.134692, 0.658636, 0.517649},
    {0.266941, 0.748751, 0.440573},
    {0.993248, 0.906157, 0.143936},
}};

Rgb mix(const Rgb& a, const Rgb& b, double s) {
  return {a.r + (b.r - a.r) * s, a.g + (b.g - a.g) * s, a.b + (b.b - a.b) * s};
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const std::string& in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

std::uint8_t to_byte(double x) { return static_cast<std::uint8_t>(std::lround(std::clamp(x, 0.0, 1.0) * 255.0)); }

void png_append(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(data), len);
}

// Plain C frames only between setjmp and any longjmp out of libpng.
bool write_png(std::string* out, const std::uint8_t* pixels, std::uint32_t w, std::uint32_t h) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_set_write_fn(png, out, png_append, nullptr);
  png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_RGBA, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::uint32_t y = 0; y < h; ++y) {
    png_write_row(png, const_cast<png_bytep>(pixels + static_cast<std::size_t>(y) * w * 4));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

}  // namespace

const std::vector<std::string>& color_ramps() {
  static const std::vector<std::string> names{"blue", "gray", "green", "magenta", "red", "viridis"};
  return names;
}

Rgb ramp_color(const std::string& ramp, double x) {
  x = std::isfinite(x) ? std::clamp(x, 0.0, 1.0) : 0.0;
  if (ramp == "viridis") {
    const double f = x * (kViridis.size() - 1);
    const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(f), kViridis.size() - 2);
    const auto& a = kViridis[i];
    const auto& b = kViridis[i + 1];
    return mix({a[0], a[1], a[2]}, {b[0], b[1], b[2]}, f - static_cast<double>(i));
  }
  Rgb hue;
  if (ramp == "green") hue = {0.0, 0.8, 0.1};
  else if (ramp == "magenta") hue = {0.9, 0.0, 0.9};
  else if (ramp == "blue") hue = {0.05, 0.35, 1.0};
  else if (ramp == "red") hue = {0.95, 0.1, 0.05};
  else if (ramp == "gray") hue = {0.0, 0.0, 0.0};
  else throw std::invalid_argument("unknown colour ramp '" + ramp + "'");
  return mix({1.0, 1.0, 1.0}, hue, 0.25 + 0.75 * x);
}

std::string encode_f32(const HeatmapLayer& layer) {
  std::string out;
  out.reserve(8 + layer.weights.size() * 4);
  put_u32(out, layer.width);
  put_u32(out, layer.height);
  const std::size_t n = static_cast<std::size_t>(layer.width) * layer.height;
  for (std::size_t i = 0; i < n; ++i) {
    const float f = i < layer.weights.size() ? static_cast<float>(layer.weights[i]) : 0.0f;
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
  }
  return out;
}

FloatMap decode_f32(const std::string& bytes) {
  if (bytes.size() < 8) throw ParseError("f32 map: missing header");
  FloatMap m;
  m.width = get_u32(bytes, 0);
  m.height = get_u32(bytes, 4);
  const std::size_t n = static_cast<std::size_t>(m.width) * m.height;
  if (bytes.size() != 8 + 4 * n) throw ParseError("f32 map: size does not match header");
  m.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t bits = get_u32(bytes, 8 + 4 * i);
    std::memcpy(&m.values[i], &bits, 4);
  }
  return m;
}

std::string encode_png(const HeatmapLayer& layer, const std::string& ramp) {
  const std::string scheme = ramp.empty() ? layer.color_scheme : ramp;
  ramp_color(scheme, 0.0);  // validates the name before any allocation
  const double peak = layer.max_weight();
  const std::uint32_t W = std::max(1u, layer.width);
  const std::uint32_t H = std::max(1u, layer.height);
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(W) * H * 4, 0);
  for (std::uint32_t y = 0; y < layer.height; ++y) {
    const std::uint32_t row = H - 1 - y;
    for (std::uint32_t x = 0; x < layer.width; ++x) {
      const double w = layer.weights.empty() ? 0.0 : layer.at(x, y);
      const double s = peak > 0.0 ? w / peak : 0.0;
      const Rgb c = ramp_color(scheme, s);
      std::uint8_t* p = &pixels[(static_cast<std::size_t>(row) * W + x) * 4];
      p[0] = to_byte(c.r);
      p[1] = to_byte(c.g);
      p[2] = to_byte(c.b);
      p[3] = to_byte(s);
    }
  }

  std::string out;
  if (!write_png(&out, pixels.data(), W, H)) throw std::runtime_error("png encoding failed for " + layer.id);
  return out;
}

Json heatmap_summary(const HeatmapLayer& layer) {
  Json j = {{"id", layer.id},
            {"kind", to_string(layer.kind)},
            {"target", layer.target},
            {"width", layer.width},
            {"height", layer.height},
            {"total_weight", layer.total_weight},
            {"max_weight", layer.max_weight()},
            {"color_scheme", layer.color_scheme},
            {"sigma", layer.sigma},
            {"samples", layer.samples},
            {"misses", layer.misses}};
  if (layer.target == "ground") {
    j["cell_size"] = layer.cell_size;
    j["grid_origin"] = Json::array({layer.grid_origin.u, layer.grid_origin.v});
  }
  return j;
}

void write_heatmaps(const std::vector<HeatmapLayer>& layers, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  Json index = Json::array();
  for (const auto& l : layers) {
    write_file(dir / (l.id + ".f32"), encode_f32(l));
    write_file(dir / (l.id + ".png"), encode_png(l));
    index.push_back(heatmap_summary(l));
  }
  write_file(dir / "heatmaps.json", canonical_dump(index));
}

}  // namespace drivelab
