#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "drivelab/analytics/scene.hpp"
#include "drivelab/geo/ego_path.hpp"
#include "drivelab/model.hpp"

namespace drivelab {

enum class HeatmapKind { gaze, touch, pointing, traffic };

const char* to_string(HeatmapKind k);
HeatmapKind parse_heatmap_kind(const std::string& s);

/// Kernel support radius in standard deviations.
inline constexpr double kKernelTruncation = 3.0;

/// Mass of a unit 2D Gaussian inside radius kKernelTruncation * sigma.
double truncated_kernel_mass();

/// Weight grid over a mesh's UV square or over ground cells. Row 0 is v = 0
/// (ground: the southernmost row).
struct HeatmapLayer {
  std::string id;
  HeatmapKind kind = HeatmapKind::gaze;
  std::string target;  // mesh id, or "ground"
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<double> weights;
  double total_weight = 0.0;
  std::string color_scheme;
  double sigma = 0.0;
  std::uint64_t samples = 0;
  std::uint64_t misses = 0;
  double cell_size = 0.0;  // ground grids only, metres
  Vec2 grid_origin;        // ground grids only: scene x/y of the grid corner

  double at(std::uint32_t x, std::uint32_t y) const { return weights[static_cast<std::size_t>(y) * width + x]; }
  double max_weight() const;
  double weight_sum() const;
};

struct HeatmapParams {
  double sigma_interior = 0.05;
  double sigma_building = 1.0;
  double sigma_ground = 1.0;
  std::uint32_t resolution = 256;
  double ground_cell = 1.0;
  double max_ray_distance = 500.0;
  unsigned threads = 1;
};

double sigma_for(MeshRole role, const HeatmapParams& p);
std::string heatmap_layer_id(HeatmapKind kind, const std::string& target);
const char* default_color_scheme(HeatmapKind kind);

/// Texture coordinates for surface points. Meshes without UVs get a
/// per-triangle planar atlas (triangle i in cell i of a ceil(sqrt(n)) grid).
class UvBinding {
 public:
  explicit UvBinding(const MeshAsset& mesh);

  bool uses_fallback() const { return fallback_; }
  /// Barycentric (u, v) are the weights of vertices 1 and 2.
  Vec2 uv_at(std::uint32_t triangle, double u, double v) const;
  /// Columns are d(position)/d(tex u) and d(position)/d(tex v) on the
  /// triangle; nullopt when its UVs are degenerate.
  std::optional<std::array<Vec3, 2>> jacobian(std::uint32_t triangle) const;

 private:
  const MeshAsset* mesh_;
  bool fallback_ = false;
  std::vector<std::array<Vec2, 3>> tri_uv_;
};

HeatmapLayer make_mesh_layer(HeatmapKind kind, const MeshAsset& mesh, std::uint32_t resolution, double sigma);
HeatmapLayer make_ground_layer(HeatmapKind kind, const Aabb& region, double cell, double sigma);

/// Adds one kernel centred on a hit point of `triangle`. Returns the
/// deposited mass (truncated_kernel_mass() unless part of the footprint
/// falls outside the grid).
double splat_surface(HeatmapLayer& layer, const UvBinding& binding, std::uint32_t triangle, double u, double v);
double splat_ground(HeatmapLayer& layer, double x, double y);

struct RayBatch {
  const std::vector<RaySample>* rays = nullptr;
  const EgoPath* path = nullptr;  // null: interior targets only
};

/// Gaze or pointing layers, one per target mesh that exists in the raycaster
/// (interior layers are always present). Rays missing every target are
/// tallied in the misses of every returned layer.
std::vector<HeatmapLayer> accumulate_ray_heatmaps(HeatmapKind kind, const std::vector<RayBatch>& batches,
                                                  const SceneRaycaster& scene, const HeatmapParams& params);

/// Touch layer for one mesh; samples on other meshes are ignored.
HeatmapLayer accumulate_touch_heatmap(const MeshAsset& mesh, const std::vector<SurfaceSample>& samples,
                                      const HeatmapParams& params);

/// Traffic density of road-user positions on a ground grid covering `region`.
HeatmapLayer accumulate_traffic_heatmap(const std::vector<TrackedObjectSample>& samples, const Aabb& region,
                                        const HeatmapParams& params);

/// Every layer of a document: gaze, pointing and touch per target, traffic on
/// the ground. Deterministic for any thread count.
std::vector<HeatmapLayer> compute_heatmaps(const ConfigDocument& doc, const HeatmapParams& params,
                                           Report* report = nullptr);

}  // namespace drivelab
