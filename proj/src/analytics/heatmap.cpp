#include "drivelab/analytics/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "drivelab/geo/geodesy.hpp"
#include "drivelab/parallel.hpp"

namespace drivelab {

namespace {

constexpr std::size_t kChunks = 16;
constexpr std::uint32_t kMaxGroundCells = 4096;

// Grid-space metric: squared surface distance of an index offset (di, dj) is
// a*di^2 + 2*b*di*dj + c*dj^2.
struct Metric {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

void ensure_storage(HeatmapLayer& layer) {
  if (layer.weights.empty()) layer.weights.assign(static_cast<std::size_t>(layer.width) * layer.height, 0.0);
}

double deposit(HeatmapLayer& layer, double fx, double fy, const Metric& m) {
  const double mass = truncated_kernel_mass();
  ensure_storage(layer);
  const double W = layer.width;
  const double H = layer.height;
  auto containing = [&]() -> double {
    const double cx = std::clamp(std::floor(fx), 0.0, W - 1.0);
    const double cy = std::clamp(std::floor(fy), 0.0, H - 1.0);
    layer.weights[static_cast<std::size_t>(cy) * layer.width + static_cast<std::size_t>(cx)] += mass;
    layer.total_weight += mass;
    return mass;
  };

  const double det = m.a * m.c - m.b * m.b;
  const double sigma = layer.sigma;
  const double r2 = kKernelTruncation * kKernelTruncation * sigma * sigma;
  if (!(det > 0.0) || !std::isfinite(det)) return containing();
  // Extents of the ellipse {d : d^T G d <= r2} along each index axis,
  // clipped to the grid.
  const double ext_i = std::sqrt(r2 * m.c / det);
  const double ext_j = std::sqrt(r2 * m.a / det);
  auto lower = [](double x, double n) { return static_cast<long>(std::ceil(std::clamp(x, -1.0, n))); };
  auto upper = [](double x, double n) { return static_cast<long>(std::floor(std::clamp(x, -1.0, n))); };
  const long i0 = std::max(0L, lower(fx - 0.5 - ext_i, W));
  const long i1 = std::min(static_cast<long>(W) - 1, upper(fx - 0.5 + ext_i, W));
  const long j0 = std::max(0L, lower(fy - 0.5 - ext_j, H));
  const long j1 = std::min(static_cast<long>(H) - 1, upper(fy - 0.5 + ext_j, H));

  thread_local std::vector<std::pair<std::size_t, double>> buffer;
  buffer.clear();
  double sum = 0.0;
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (long j = j0; j <= j1; ++j) {
    const double dj = j + 0.5 - fy;
    for (long i = i0; i <= i1; ++i) {
      const double di = i + 0.5 - fx;
      const double q = m.a * di * di + 2.0 * m.b * di * dj + m.c * dj * dj;
      if (q > r2) continue;
      const double w = std::exp(-q * inv);
      sum += w;
      buffer.emplace_back(static_cast<std::size_t>(j) * layer.width + static_cast<std::size_t>(i), w);
    }
  }
  if (!(sum > 0.0)) return containing();
  const double scale = mass / sum;
  for (const auto& [idx, w] : buffer) layer.weights[idx] += w * scale;
  layer.total_weight += mass;
  return mass;
}

// Barycentric weights (of vertices 1 and 2) of a point in the triangle plane.
std::pair<double, double> barycentric(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 v0 = b - a;
  const Vec3 v1 = c - a;
  const Vec3 v2 = p - a;
  const double d00 = dot(v0, v0);
  const double d01 = dot(v0, v1);
  const double d11 = dot(v1, v1);
  const double d20 = dot(v2, v0);
  const double d21 = dot(v2, v1);
  const double den = d00 * d11 - d01 * d01;
  if (den == 0.0) return {0.0, 0.0};
  return {(d11 * d20 - d01 * d21) / den, (d00 * d21 - d01 * d20) / den};
}

void merge_into(HeatmapLayer& dst, const HeatmapLayer& src) {
  dst.samples += src.samples;
  dst.total_weight += src.total_weight;
  if (src.weights.empty()) return;
  ensure_storage(dst);
  for (std::size_t i = 0; i < dst.weights.size(); ++i) dst.weights[i] += src.weights[i];
}

}  // namespace

const char* to_string(HeatmapKind k) {
  switch (k) {
    case HeatmapKind::gaze: return "gaze";
    case HeatmapKind::touch: return "touch";
    case HeatmapKind::pointing: return "pointing";
    case HeatmapKind::traffic: return "traffic";
  }
  return "gaze";
}

HeatmapKind parse_heatmap_kind(const std::string& s) {
  if (s == "gaze") return HeatmapKind::gaze;
  if (s == "touch") return HeatmapKind::touch;
  if (s == "pointing") return HeatmapKind::pointing;
  if (s == "traffic") return HeatmapKind::traffic;
  throw std::invalid_argument("unknown heatmap kind '" + s + "'");
}

double truncated_kernel_mass() {
  return 1.0 - std::exp(-0.5 * kKernelTruncation * kKernelTruncation);
}

double HeatmapLayer::max_weight() const {
  double m = 0.0;
  for (double w : weights) m = std::max(m, w);
  return m;
}

double HeatmapLayer::weight_sum() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

double sigma_for(MeshRole role, const HeatmapParams& p) {
  switch (role) {
    case MeshRole::interior:
    case MeshRole::ego_exterior: return p.sigma_interior;
    case MeshRole::ground: return p.sigma_ground;
    case MeshRole::building:
    case MeshRole::road_user: return p.sigma_building;
  }
  return p.sigma_building;
}

std::string heatmap_layer_id(HeatmapKind kind, const std::string& target) {
  return std::string(to_string(kind)) + "-" + target;
}

const char* default_color_scheme(HeatmapKind kind) {
  switch (kind) {
    case HeatmapKind::gaze: return "green";
    case HeatmapKind::pointing: return "magenta";
    case HeatmapKind::touch: return "blue";
    case HeatmapKind::traffic: return "red";
  }
  return "viridis";
}

UvBinding::UvBinding(const MeshAsset& mesh) : mesh_(&mesh) {
  const std::size_t n = mesh.triangles.size();
  tri_uv_.resize(n);
  fallback_ = mesh.uv.size() != mesh.vertices.size() || mesh.uv.empty();
  if (!fallback_) {
    for (std::size_t i = 0; i < n; ++i) {
      for (int k = 0; k < 3; ++k) tri_uv_[i][k] = mesh.uv[mesh.triangles[i][k]];
    }
    return;
  }
  const std::size_t k = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n)))));
  const double cell = 1.0 / static_cast<double>(k);
  const double margin = 0.05 * cell;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& a = mesh.vertices[mesh.triangles[i][0]];
    const Vec3& b = mesh.vertices[mesh.triangles[i][1]];
    const Vec3& c = mesh.vertices[mesh.triangles[i][2]];
    const Vec3 e1 = normalized(b - a);
    const Vec3 nrm = normalized(cross(b - a, c - a));
    const Vec3 e2 = cross(nrm, e1);
    const std::array<Vec2, 3> p{Vec2{0.0, 0.0}, Vec2{norm(b - a), 0.0}, Vec2{dot(c - a, e1), dot(c - a, e2)}};
    double lo_u = 0.0, hi_u = 0.0, lo_v = 0.0, hi_v = 0.0;
    for (const auto& q : p) {
      lo_u = std::min(lo_u, q.u);
      hi_u = std::max(hi_u, q.u);
      lo_v = std::min(lo_v, q.v);
      hi_v = std::max(hi_v, q.v);
    }
    const double extent = std::max(hi_u - lo_u, hi_v - lo_v);
    const double scale = extent > 0.0 ? (cell - 2.0 * margin) / extent : 0.0;
    const double cu = static_cast<double>(i % k) * cell + margin;
    const double cv = static_cast<double>(i / k) * cell + margin;
    for (int m = 0; m < 3; ++m) tri_uv_[i][m] = {cu + (p[m].u - lo_u) * scale, cv + (p[m].v - lo_v) * scale};
  }
}

Vec2 UvBinding::uv_at(std::uint32_t triangle, double u, double v) const {
  const auto& t = tri_uv_[triangle];
  const double w = 1.0 - u - v;
  return {w * t[0].u + u * t[1].u + v * t[2].u, w * t[0].v + u * t[1].v + v * t[2].v};
}

std::optional<std::array<Vec3, 2>> UvBinding::jacobian(std::uint32_t triangle) const {
  const auto& t = tri_uv_[triangle];
  const auto& tri = mesh_->triangles[triangle];
  const Vec3 e1 = mesh_->vertices[tri[1]] - mesh_->vertices[tri[0]];
  const Vec3 e2 = mesh_->vertices[tri[2]] - mesh_->vertices[tri[0]];
  const double d11 = t[1].u - t[0].u, d21 = t[1].v - t[0].v;
  const double d12 = t[2].u - t[0].u, d22 = t[2].v - t[0].v;
  const double det = d11 * d22 - d12 * d21;
  const double scale = std::max({std::abs(d11), std::abs(d12), std::abs(d21), std::abs(d22)});
  if (!(std::abs(det) > 1e-12 * scale * scale) || norm(cross(e1, e2)) == 0.0) return std::nullopt;
  return std::array<Vec3, 2>{(e1 * d22 - e2 * d21) / det, (e2 * d11 - e1 * d12) / det};
}

HeatmapLayer make_mesh_layer(HeatmapKind kind, const MeshAsset& mesh, std::uint32_t resolution, double sigma) {
  if (resolution == 0) throw std::invalid_argument("heatmap resolution must be positive");
  if (!(sigma > 0.0)) throw std::invalid_argument("heatmap sigma must be positive");
  HeatmapLayer l;
  l.id = heatmap_layer_id(kind, mesh.id);
  l.kind = kind;
  l.target = mesh.id;
  l.width = resolution;
  l.height = resolution;
  l.sigma = sigma;
  l.color_scheme = default_color_scheme(kind);
  return l;
}

HeatmapLayer make_ground_layer(HeatmapKind kind, const Aabb& region, double cell, double sigma) {
  if (!(cell > 0.0)) throw std::invalid_argument("ground cell size must be positive");
  if (!(sigma > 0.0)) throw std::invalid_argument("heatmap sigma must be positive");
  HeatmapLayer l;
  l.id = heatmap_layer_id(kind, "ground");
  l.kind = kind;
  l.target = "ground";
  l.sigma = sigma;
  l.color_scheme = default_color_scheme(kind);
  if (region.empty()) {
    l.cell_size = cell;
    l.width = l.height = 1;
    return l;
  }
  const double pad = kKernelTruncation * sigma + cell;
  const double x0 = std::floor((region.lo.x - pad) / cell) * cell;
  const double y0 = std::floor((region.lo.y - pad) / cell) * cell;
  double span = std::max(region.hi.x + pad - x0, region.hi.y + pad - y0);
  while (std::ceil(span / cell) > kMaxGroundCells) cell *= 2.0;
  l.cell_size = cell;
  l.grid_origin = {x0, y0};
  l.width = static_cast<std::uint32_t>(std::max(1.0, std::ceil((region.hi.x + pad - x0) / cell)));
  l.height = static_cast<std::uint32_t>(std::max(1.0, std::ceil((region.hi.y + pad - y0) / cell)));
  return l;
}

double splat_surface(HeatmapLayer& layer, const UvBinding& binding, std::uint32_t triangle, double u, double v) {
  const Vec2 uv = binding.uv_at(triangle, u, v);
  const double W = layer.width;
  const double H = layer.height;
  Metric m;
  if (const auto j = binding.jacobian(triangle)) {
    const Vec3 du = (*j)[0] / W;
    const Vec3 dv = (*j)[1] / H;
    m = {dot(du, du), dot(du, dv), dot(dv, dv)};
  }
  ++layer.samples;
  return deposit(layer, uv.u * W, uv.v * H, m);
}

double splat_ground(HeatmapLayer& layer, double x, double y) {
  const double c2 = layer.cell_size * layer.cell_size;
  ++layer.samples;
  return deposit(layer, (x - layer.grid_origin.u) / layer.cell_size, (y - layer.grid_origin.v) / layer.cell_size,
                 Metric{c2, 0.0, c2});
}

std::vector<HeatmapLayer> accumulate_ray_heatmaps(HeatmapKind kind, const std::vector<RayBatch>& batches,
                                                  const SceneRaycaster& scene, const HeatmapParams& params) {
  if (kind != HeatmapKind::gaze && kind != HeatmapKind::pointing) {
    throw std::invalid_argument("ray heatmaps are gaze or pointing");
  }
  const auto& meshes = scene.meshes();
  std::vector<UvBinding> bindings;
  std::vector<HeatmapLayer> proto;
  for (const auto& m : meshes) {
    bindings.emplace_back(m);
    proto.push_back(make_mesh_layer(kind, m, params.resolution, sigma_for(m.role, params)));
  }

  std::vector<std::pair<std::size_t, std::size_t>> items;
  for (std::size_t b = 0; b < batches.size(); ++b) {
    if (!batches[b].rays) continue;
    for (std::size_t r = 0; r < batches[b].rays->size(); ++r) items.emplace_back(b, r);
  }

  struct Partial {
    std::vector<HeatmapLayer> layers;
    std::uint64_t misses = 0;
  };
  std::vector<Partial> partials(kChunks);
  parallel_for(kChunks, params.threads, [&](std::size_t k) {
    Partial& part = partials[k];
    part.layers = proto;
    const auto [lo, hi] = chunk_range(items.size(), kChunks, k);
    for (std::size_t n = lo; n < hi; ++n) {
      const RayBatch& batch = batches[items[n].first];
      const RaySample& ray = (*batch.rays)[items[n].second];
      std::optional<EgoPose> pose;
      if (batch.path && !batch.path->empty()) pose = interpolate_pose(*batch.path, ray.t);
      const auto hit = scene.cast(ray.origin, normalized(ray.direction), pose ? &*pose : nullptr,
                                  params.max_ray_distance);
      if (!hit) {
        ++part.misses;
        continue;
      }
      splat_surface(part.layers[hit->target], bindings[hit->target], hit->hit.triangle, hit->hit.u, hit->hit.v);
    }
  });

  std::uint64_t misses = 0;
  for (auto& part : partials) {
    misses += part.misses;
    for (std::size_t i = 0; i < proto.size(); ++i) merge_into(proto[i], part.layers[i]);
  }
  for (auto& l : proto) {
    ensure_storage(l);
    l.misses = misses;
  }
  return proto;
}

HeatmapLayer accumulate_touch_heatmap(const MeshAsset& mesh, const std::vector<SurfaceSample>& samples,
                                      const HeatmapParams& params) {
  HeatmapLayer layer = make_mesh_layer(HeatmapKind::touch, mesh, params.resolution, sigma_for(mesh.role, params));
  ensure_storage(layer);
  const UvBinding binding(mesh);
  for (const auto& s : samples) {
    if (s.mesh_id != mesh.id) continue;
    double best = std::numeric_limits<double>::infinity();
    std::optional<std::pair<std::uint32_t, Vec3>> found;
    for (std::uint32_t i = 0; i < mesh.triangles.size(); ++i) {
      const auto& t = mesh.triangles[i];
      const Vec3 q = closest_point_on_triangle(s.position, mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
      const double d = distance(q, s.position);
      if (d < best) {
        best = d;
        found = {{i, q}};
      }
    }
    if (!found) {
      ++layer.misses;
      continue;
    }
    const auto& t = mesh.triangles[found->first];
    const auto [u, v] = barycentric(found->second, mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
    splat_surface(layer, binding, found->first, u, v);
  }
  return layer;
}

HeatmapLayer accumulate_traffic_heatmap(const std::vector<TrackedObjectSample>& samples, const Aabb& region,
                                        const HeatmapParams& params) {
  Aabb r = region;
  for (const auto& s : samples) r.extend(s.position);
  HeatmapLayer layer = make_ground_layer(HeatmapKind::traffic, r, params.ground_cell, params.sigma_ground);
  ensure_storage(layer);
  std::vector<HeatmapLayer> partials(kChunks);
  parallel_for(kChunks, params.threads, [&](std::size_t k) {
    HeatmapLayer part = layer;
    part.weights.clear();
    part.total_weight = 0.0;
    const auto [lo, hi] = chunk_range(samples.size(), kChunks, k);
    for (std::size_t i = lo; i < hi; ++i) splat_ground(part, samples[i].position.x, samples[i].position.y);
    partials[k] = std::move(part);
  });
  for (const auto& p : partials) merge_into(layer, p);
  return layer;
}

std::vector<HeatmapLayer> compute_heatmaps(const ConfigDocument& doc, const HeatmapParams& params, Report* report) {
  const SceneRaycaster scene(doc.scene, report);
  const LocalFrame frame = make_local_frame(doc.scene.origin);

  std::vector<std::optional<EgoPath>> paths(doc.sessions.size());
  Aabb region;
  for (std::size_t i = 0; i < doc.sessions.size(); ++i) {
    const auto& s = doc.sessions[i];
    if (s.ego_path.size() >= 2) {
      paths[i] = build_ego_path(s.ego_path, frame);
      for (const auto& p : paths[i]->points) region.extend(p.position);
    }
  }

  std::vector<RayBatch> gaze, pointing;
  for (std::size_t i = 0; i < doc.sessions.size(); ++i) {
    const EgoPath* path = paths[i] ? &*paths[i] : nullptr;
    gaze.push_back({&doc.sessions[i].gaze, path});
    pointing.push_back({&doc.sessions[i].pointing, path});
  }

  std::vector<HeatmapLayer> out = accumulate_ray_heatmaps(HeatmapKind::gaze, gaze, scene, params);
  for (auto& l : accumulate_ray_heatmaps(HeatmapKind::pointing, pointing, scene, params)) out.push_back(std::move(l));

  std::vector<SurfaceSample> touches;
  std::set<std::string> touched;
  for (const auto& s : doc.sessions) {
    for (const auto& t : s.touches) {
      touches.push_back(t);
      touched.insert(t.mesh_id);
    }
  }
  for (const auto& m : scene.meshes()) {
    if (m.role == MeshRole::interior || touched.count(m.id)) {
      out.push_back(accumulate_touch_heatmap(m, touches, params));
    }
  }
  for (const auto& id : touched) {
    if (!scene.find(id) && report) report->warning("heatmaps.touch", "touch samples on unknown mesh '" + id + "'");
  }

  std::vector<TrackedObjectSample> users;
  for (const auto& s : doc.sessions) users.insert(users.end(), s.road_users.begin(), s.road_users.end());
  if (!users.empty() || !region.empty()) out.push_back(accumulate_traffic_heatmap(users, region, params));
  return out;
}

}  // namespace drivelab
