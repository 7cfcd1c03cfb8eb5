// Runs every primary acceptance criterion and prints one PASS/FAIL line each.
// Exit status is the number of failed criteria (capped at 100).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "drivelab/analytics/avatars.hpp"
#include "drivelab/analytics/heatmap.hpp"
#include "drivelab/analytics/layout.hpp"
#include "drivelab/analytics/raycast.hpp"
#include "drivelab/analytics/scene.hpp"
#include "drivelab/analytics/trajectory.hpp"
#include "drivelab/cli/commands.hpp"
#include "drivelab/collab/ledger.hpp"
#include "drivelab/collab/sequencer.hpp"
#include "drivelab/collab/store.hpp"
#include "drivelab/fixtures/synthetic.hpp"
#include "drivelab/geo/ego_path.hpp"
#include "drivelab/geo/geodesy.hpp"
#include "drivelab/ingest/ingest.hpp"
#include "drivelab/ingest/stream_ops.hpp"
#include "drivelab/mesh_util.hpp"
#include "drivelab/replay/replay.hpp"
#include "drivelab/validate.hpp"
#include "support/builders.hpp"
#include "support/temp_dir.hpp"

using namespace drivelab;
namespace fs = std::filesystem;

namespace {

// Collects the first few failure descriptions of one criterion.
struct Check {
  std::vector<std::string> failures;
  std::size_t count = 0;

  void expect(bool ok, const std::string& what) {
    if (ok) return;
    ++count;
    if (failures.size() < 3) failures.push_back(what);
  }
  std::string summary() const {
    std::string s;
    for (const auto& f : failures) s += (s.empty() ? "" : "; ") + f;
    if (count > failures.size()) s += "; +" + std::to_string(count - failures.size()) + " more";
    return s;
  }
};

std::string num(double v) {
  std::ostringstream o;
  o.precision(12);
  o << v;
  return o.str();
}

Vec3 random_vec(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  return {d(rng), d(rng), d(rng)};
}

// FNV-1a over bytes.
std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

ConfigDocument ingest_manifest(const fs::path& manifest, Report& report) {
  const auto bundle = load_manifest(manifest);
  return ingest(bundle, bundle.study_meta.value_or(StudyMeta{}), report);
}

// ---------------------------------------------------------------------------

void config_round_trip(Check& c) {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 200; ++i) {
    const ConfigDocument doc = testing::random_document(rng);
    const std::string bytes = canonical_serialize(doc);
    const ConfigDocument once = parse_document(bytes);
    const std::string again = canonical_serialize(once);
    const ConfigDocument twice = parse_document(again);
    c.expect(once == doc, "document " + std::to_string(i) + " changed after parse");
    c.expect(twice == once, "document " + std::to_string(i) + " not stable under parse∘serialize∘parse");
    c.expect(again == bytes, "document " + std::to_string(i) + " canonical bytes differ");
  }
}

// Type-7 quantile straight from its definition: h = (n-1)p, linear between
// the floor(h)-th and ceil(h)-th order statistics.
double oracle_quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = static_cast<std::size_t>(std::ceil(h));
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::vector<std::pair<Millis, double>> oracle_outliers(const std::vector<StreamSample>& xs) {
  std::vector<std::pair<Millis, double>> out;
  if (xs.size() < 4) return out;
  std::vector<double> v;
  for (const auto& s : xs) v.push_back(s.value);
  const double q1 = oracle_quantile(v, 0.25);
  const double q3 = oracle_quantile(v, 0.75);
  const double iqr = q3 - q1;
  for (const auto& s : xs) {
    if (s.value < q1 - 1.5 * iqr || s.value > q3 + 1.5 * iqr) out.emplace_back(s.t, s.value);
  }
  return out;
}

SampledStream stream_of(const std::vector<StreamSample>& xs) {
  SampledStream s;
  s.name = "x";
  s.unit = "u";
  s.rate_hz = 10.0;
  s.samples = xs;
  return s;
}

void outlier_oracle(Check& c) {
  std::vector<StreamSample> tiny;
  for (double v : {1.0, 2.0, 3.0, 4.0, 100.0}) tiny.push_back({static_cast<Millis>(tiny.size()) * 100, v});
  const auto marks = detect_outliers(stream_of(tiny));
  c.expect(marks.size() == 1 && marks[0].value == 100.0 && marks[0].fence == Fence::high,
           "[1,2,3,4,100] did not yield exactly {100}");

  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> len(1, 10000);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = len(rng);
    const double heavy = coin(rng) * 0.1;
    const bool rounded = coin(rng) < 0.3;
    std::vector<StreamSample> xs;
    xs.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      double v = coin(rng) < heavy ? noise(rng) * 25.0 : noise(rng);
      if (rounded) v = std::round(v * 2.0) / 2.0;  // ties on the fences
      xs.push_back({static_cast<Millis>(k) * 100, v});
    }
    std::vector<std::pair<Millis, double>> got;
    for (const auto& m : detect_outliers(stream_of(xs))) got.emplace_back(m.t, m.value);
    c.expect(got == oracle_outliers(xs), "stream " + std::to_string(trial) + " (n=" + std::to_string(n) + ") differs");
  }
}

SessionRecording avatar_session(const std::string& pid, const std::vector<Millis>& times,
                                const std::function<JointPose(Millis, int)>& pose) {
  SessionRecording s;
  s.participant_id = pid;
  s.joint_names = {"head", "left_hand", "right_hand"};
  for (Millis t : times) {
    SkeletonFrame f;
    f.t = t;
    for (int j = 0; j < 3; ++j) f.joints.push_back(pose(t, j));
    s.skeleton.push_back(f);
  }
  s.duration = times.back();
  return s;
}

void avatars(Check& c) {
  std::vector<Millis> times;
  for (Millis t = 0; t <= 5000; t += 100) times.push_back(t);

  const auto single = avatar_session("P1", times, [](Millis t, int j) {
    const double s = static_cast<double>(t) * 0.001;
    return JointPose{{0.3 * j + std::sin(s), 0.2 * std::cos(s), 1.1 + 0.05 * j},
                     axis_angle(normalized(Vec3{1, 2, 3}), 0.4 * s)};
  });
  const auto one = aggregate_avatars({&single}, 0, 5000, 10.0);
  c.expect(one.frames.size() == single.skeleton.size(), "N=1 frame count differs");
  for (std::size_t f = 0; f < std::min(one.frames.size(), single.skeleton.size()); ++f) {
    for (std::size_t j = 0; j < 3; ++j) {
      const auto& a = one.frames[f].joints[j];
      const auto& b = single.skeleton[f].joints[j];
      c.expect(distance(a.position, b.position) <= 1e-9, "N=1 position differs at frame " + std::to_string(f));
      c.expect(1.0 - std::abs(dot(a.rotation, b.rotation)) <= 1e-9, "N=1 rotation differs at frame " + std::to_string(f));
    }
  }

  // Mirror images across the x = 0 plane; the mean lies on it.
  auto mirrored = [&](double sign) {
    return avatar_session(sign > 0 ? "P1" : "P2", times, [sign](Millis t, int j) {
      const double s = static_cast<double>(t) * 0.001;
      return JointPose{{sign * (0.5 + 0.1 * j + 0.2 * std::sin(s)), 0.3 * j, 1.0 + 0.1 * std::cos(s)},
                       Quat::identity()};
    });
  };
  const auto left = mirrored(1.0);
  const auto right = mirrored(-1.0);
  const auto pair = aggregate_avatars({&left, &right}, 0, 5000, 10.0);
  for (std::size_t f = 0; f < pair.frames.size(); ++f) {
    for (std::size_t j = 0; j < 3; ++j) {
      const Vec3 mid = (left.skeleton[f].joints[j].position + right.skeleton[f].joints[j].position) * 0.5;
      c.expect(distance(pair.frames[f].joints[j].position, mid) <= 1e-9,
               "mirrored pair not at midpoint, frame " + std::to_string(f));
    }
  }

  std::mt19937_64 rng(5);
  std::vector<SessionRecording> members;
  for (int m = 0; m < 5; ++m) {
    const Vec3 offset = random_vec(rng, -0.5, 0.5);
    const Quat q = normalized(Quat{1.0, 0.1 * m, -0.05 * m, 0.02});
    const bool flip = m % 2 == 1;
    members.push_back(avatar_session("P" + std::to_string(m), times, [=](Millis t, int j) {
      return JointPose{offset + Vec3{0.001 * static_cast<double>(t), 0.1 * j, 0.0}, flip ? -q : q};
    }));
  }
  std::vector<const SessionRecording*> order;
  for (const auto& m : members) order.push_back(&m);
  const std::string reference = canonical_dump(Json(aggregate_avatars(order, 0, 5000, 10.0)));
  for (int trial = 0; trial < 20; ++trial) {
    std::shuffle(order.begin(), order.end(), rng);
    c.expect(canonical_dump(Json(aggregate_avatars(order, 0, 5000, 10.0))) == reference,
             "permutation " + std::to_string(trial) + " changed the aggregate");
  }
}

// Plane intersection plus edge-side tests, independent of the library's
// triangle routine.
std::optional<double> oracle_triangle(const Vec3& o, const Vec3& d, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 n = cross(b - a, c - a);
  const double den = dot(n, d);
  if (den == 0.0) return std::nullopt;
  const double t = dot(n, a - o) / den;
  if (!(t > 0.0)) return std::nullopt;
  const Vec3 p = o + d * t;
  if (dot(cross(b - a, p - a), n) < 0.0 || dot(cross(c - b, p - b), n) < 0.0 || dot(cross(a - c, p - c), n) < 0.0) {
    return std::nullopt;
  }
  return t;
}

void raycast_equivalence(Check& c) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> tri_count(1, 5000);
  int hits = 0;
  for (int m = 0; m < 20; ++m) {
    MeshAsset mesh;
    mesh.id = "m" + std::to_string(m);
    const int n = m == 0 ? 5000 : tri_count(rng);
    const double spread = 2.0 + 0.5 * m;
    for (int i = 0; i < n; ++i) {
      const Vec3 centre = random_vec(rng, -spread, spread);
      const auto base = static_cast<std::uint32_t>(mesh.vertices.size());
      for (int k = 0; k < 3; ++k) mesh.vertices.push_back(centre + random_vec(rng, -0.6, 0.6));
      mesh.triangles.push_back({base, base + 1, base + 2});
    }
    const Bvh bvh(mesh);
    for (int r = 0; r < 500; ++r) {
      const Vec3 o = random_vec(rng, -2.0 * spread, 2.0 * spread);
      Vec3 target = random_vec(rng, -spread, spread);
      if (distance(target, o) < 1e-6) target += Vec3{1, 0, 0};
      const Vec3 d = normalized(target - o);
      std::optional<double> best;
      for (const auto& t : mesh.triangles) {
        const auto h = oracle_triangle(o, d, mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
        if (h && (!best || *h < *best)) best = h;
      }
      const auto got = bvh.intersect(o, d);
      const std::string where = "mesh " + std::to_string(m) + " ray " + std::to_string(r);
      c.expect(got.has_value() == best.has_value(), where + ": hit/miss disagrees");
      if (got && best) {
        ++hits;
        c.expect(std::abs(got->distance - *best) <= 1e-9, where + ": distance differs by " + num(got->distance - *best));
        c.expect(distance(got->point, o + d * *best) <= 1e-9, where + ": hit point differs");
      }
    }
  }
  c.expect(hits > 1000, "too few hits to be meaningful: " + std::to_string(hits));
}

void heatmap_conservation(Check& c) {
  // Truncated 2D Gaussian mass by closed form: 1 - exp(-r^2 / 2) at r = 3.
  const double analytic = 1.0 - std::exp(-4.5);
  std::mt19937_64 rng(31);
  for (double sigma : {0.05, 1.0}) {
    SceneDescription scene;
    scene.origin = {0, 37.79, -122.40, 0.0, std::nullopt, std::nullopt};
    scene.meshes.push_back(make_quad_mesh("quad", MeshRole::interior, {0, 0, 0}, {10, 0, 0}, {0, 10, 0}));
    std::uniform_real_distribution<double> u(0.0, 10.0);
    std::vector<RaySample> rays;
    const int n = 2000;
    for (int i = 0; i < n; ++i) rays.push_back({i, {u(rng), u(rng), 2.0}, {0, 0, -1}, RayModality::gaze});
    HeatmapParams params;
    params.sigma_interior = sigma;
    params.resolution = 512;
    const auto layers = accumulate_ray_heatmaps(HeatmapKind::gaze, {{&rays, nullptr}}, SceneRaycaster(scene), params);
    double total = 0.0;
    for (const auto& l : layers) {
      for (double w : l.weights) total += w;
    }
    const double ratio = total / (n * analytic);
    c.expect(std::abs(ratio - 1.0) <= 0.01, "sigma " + num(sigma) + ": ratio " + num(ratio));
  }
}

// Independent WGS-84 geodetic -> ECEF -> ENU.
Vec3 oracle_enu(double lat0, double lon0, double h0, double lat, double lon, double h) {
  const double a = 6378137.0;
  const double f = 1.0 / 298.257223563;
  const double e2 = f * (2.0 - f);
  const double rad = std::acos(-1.0) / 180.0;
  auto ecef = [&](double la, double lo, double hh) {
    const double s = std::sin(la * rad);
    const double n = a / std::sqrt(1.0 - e2 * s * s);
    return Vec3{(n + hh) * std::cos(la * rad) * std::cos(lo * rad), (n + hh) * std::cos(la * rad) * std::sin(lo * rad),
                (n * (1.0 - e2) + hh) * s};
  };
  const Vec3 d = ecef(lat, lon, h) - ecef(lat0, lon0, h0);
  const double sl = std::sin(lat0 * rad), cl = std::cos(lat0 * rad);
  const double so = std::sin(lon0 * rad), co = std::cos(lon0 * rad);
  return {-so * d.x + co * d.y, -sl * co * d.x - sl * so * d.y + cl * d.z, cl * co * d.x + cl * so * d.y + sl * d.z};
}

GeoSample geo(double lat, double lon, double alt = 0.0) {
  GeoSample g;
  g.lat = lat;
  g.lon = lon;
  g.alt = alt;
  return g;
}

void geodesy(Check& c) {
  const Vec3 east = geo_to_local(make_local_frame(geo(0, 0)), geo(0, 0.001));
  c.expect(std::abs(east.x - 111.32) <= 0.1, "east offset " + num(east.x) + " m");

  const GeoSample origin = geo(37.7925, -122.4065, 12.0);
  const LocalFrame frame = make_local_frame(origin);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> bearing(0.0, 2.0 * std::acos(-1.0));
  std::uniform_real_distribution<double> range(0.0, 10000.0);
  std::uniform_real_distribution<double> up(-50.0, 400.0);
  double worst_deg = 0.0;
  double worst_oracle = 0.0;
  for (int i = 0; i < 1000; ++i) {
    // Points up to 10 km away, placed through the local frame.
    const double b = bearing(rng);
    const double r = range(rng);
    const GeoSample p = local_to_geo(frame, {r * std::sin(b), r * std::cos(b), up(rng)});
    const Vec3 local = geo_to_local(frame, p);
    const GeoSample back = local_to_geo(frame, local);
    worst_deg = std::max({worst_deg, std::abs(back.lat - p.lat), std::abs(back.lon - p.lon)});
    const Vec3 expect = oracle_enu(origin.lat, origin.lon, origin.alt, p.lat, p.lon, p.alt);
    worst_oracle = std::max(worst_oracle, distance(local, expect));
  }
  c.expect(worst_deg < 1e-6, "round trip error " + num(worst_deg) + " deg");
  c.expect(worst_oracle < 1e-6, "local frame differs from the WGS-84 oracle by " + num(worst_oracle) + " m");
}

double point_segment(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double l2 = dot(ab, ab);
  const double s = l2 == 0.0 ? 0.0 : std::clamp(dot(p - a, ab) / l2, 0.0, 1.0);
  return distance(p, a + ab * s);
}

void trajectory_simplification(Check& c) {
  std::mt19937_64 rng(404);
  std::normal_distribution<double> step(0.0, 0.03);
  std::uniform_int_distribution<int> len(2, 600);
  std::uniform_real_distribution<double> eps_d(0.0, 0.2);
  for (int walk = 0; walk < 500; ++walk) {
    Trajectory t;
    Vec3 p;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) {
      p += Vec3{step(rng), step(rng), step(rng) * 0.3};
      t.points.push_back({i * 33, p});
    }
    const double eps = walk % 50 == 0 ? 0.0 : eps_d(rng);
    const auto kept = *simplify_trajectory(t, eps).simplified;
    const std::string where = "walk " + std::to_string(walk);
    c.expect(!kept.empty() && kept.front() == t.points.front() && kept.back() == t.points.back(),
             where + ": endpoints not kept");
    std::size_t k = 0;
    for (const auto& q : t.points) {
      if (k < kept.size() && kept[k] == q) ++k;
    }
    c.expect(k == kept.size(), where + ": not a subsequence");
    double hausdorff = 0.0;
    for (const auto& q : t.points) {
      double best = kept.size() == 1 ? distance(q.position, kept[0].position) : 1e300;
      for (std::size_t i = 0; i + 1 < kept.size(); ++i) {
        best = std::min(best, point_segment(q.position, kept[i].position, kept[i + 1].position));
      }
      hausdorff = std::max(hausdorff, best);
    }
    c.expect(hausdorff <= eps, where + ": Hausdorff " + num(hausdorff) + " > eps " + num(eps));
  }
}

void path_event_layout(Check& c) {
  const LocalFrame frame = make_local_frame(geo(37.79, -122.40));
  // Northbound at exactly 10 m/s, so 100 ms is 1 m of arc length.
  std::vector<GeoSample> samples;
  for (Millis t = 0; t <= 10000; t += 1000) {
    GeoSample g = local_to_geo(frame, {0.0, static_cast<double>(t) / 100.0, 0.0});
    g.t = t;
    g.alt = 0.0;
    samples.push_back(g);
  }
  const EgoPath path = build_ego_path(samples, frame);
  auto ev = [](std::string id, Millis t, std::string pid) {
    return EventRecord{std::move(id), EventKind::interaction, "x", t, t + 50, std::move(pid), {}, 1.0, EventSource::logged};
  };
  const std::vector<std::string> order{"P1", "P2", "P3"};
  const auto three = layout_path_events({ev("c", 3000, "P3"), ev("a", 3000, "P1"), ev("b", 3000, "P2")}, path, order);
  std::map<std::string, double> offset;
  for (const auto& e : three.entries) offset[e.event_id] = e.vertical_offset;
  c.expect(offset["a"] == 2.0 && offset["b"] == 2.5 && offset["c"] == 3.0,
           "exploded offsets " + num(offset["a"]) + "/" + num(offset["b"]) + "/" + num(offset["c"]));

  const auto collapsed =
      layout_path_events({ev("c", 3000, "P3"), ev("a", 3000, "P1"), ev("b", 3000, "P2")}, path, order, LayoutMode::collapsed);
  for (const auto& e : collapsed.entries) c.expect(e.vertical_offset == 2.0, "collapsed offset not 2.0");

  // 99 ms apart = 0.99 m: one cluster. 101 ms = 1.01 m: two.
  const auto near = layout_path_events({ev("a", 3000, "P1"), ev("b", 3099, "P2")}, path, order);
  c.expect(near.entries[0].cluster == near.entries[1].cluster, "0.99 m apart did not cluster");
  c.expect(near.entries[1].vertical_offset == 2.5, "second lane of a 0.99 m cluster not at 2.5");
  const auto far = layout_path_events({ev("a", 3000, "P1"), ev("b", 3101, "P2")}, path, order);
  c.expect(far.entries[0].cluster != far.entries[1].cluster, "1.01 m apart clustered");
  c.expect(far.entries[1].vertical_offset == 2.0, "separate cluster not at base height");
}

void fixture_values(Check& c) {
  testing::TempDir dir;
  const fs::path manifest = write_multimodal_fixture(dir.path() / "fixture");
  std::ostringstream log;
  c.expect(cmd_ingest(manifest, dir.path() / "config.json", {}, {log, true}) == kExitOk, "ingest failed: " + log.str());
  const ConfigDocument doc = load_document(dir.path() / "config.json");
  c.expect(validate(doc).error_count() == 0, "fixture document has validation errors");

  const EgoPath path = build_ego_path(doc.sessions.at(0).ego_path, make_local_frame(doc.scene.origin));
  c.expect(std::abs(path.length() - 2400.0) <= 24.0, "track length " + num(path.length()));
  const double minute = path.arc_length_at(60000) - path.arc_length_at(0);
  c.expect(std::abs(minute - 583.3) <= 0.5, "60 s at 35 km/h covers " + num(minute) + " m");

  c.expect(cmd_analyze(dir.path() / "config.json", {"metrics"}, dir.path() / "out", {}, {log, true}) == kExitOk,
           "analyze failed");
  const Json metrics = Json::parse(read_file(dir.path() / "out/metrics.json"));
  const auto& chains = metrics["chains"];
  c.expect(chains.size() == 12, "expected 12 chains, got " + std::to_string(chains.size()));
  for (const auto& ch : chains) {
    c.expect(ch["chain"] == "gaze>pointing>speech", "chain order " + ch["chain"].get<std::string>());
    const auto onsets = ch["onsets"].get<std::vector<Millis>>();
    c.expect(std::is_sorted(onsets.begin(), onsets.end()), "chain onsets out of order");
  }
  const double mean = metrics["dataset_mean_gap_ms"].get<double>();
  c.expect(std::abs(mean - 500.0) <= 1.0, "mean inter-onset gap " + num(mean) + " ms");
}

SyncMessage op(SyncKind kind, const std::string& origin, Json payload) {
  SyncMessage m;
  m.kind = kind;
  m.origin = origin;
  m.payload = std::move(payload);
  return m;
}

SyncMessage random_op(std::mt19937_64& rng, const std::string& origin, Millis duration) {
  std::uniform_int_distribution<Millis> t(0, duration);
  const std::string ann = "n" + std::to_string(rng() % 6);
  switch (rng() % 8) {
    case 0: return op(SyncKind::set_playback, origin, {{"t", t(rng)}, {"playing", rng() % 2 == 0}});
    case 1: return op(SyncKind::set_playback, origin, {{"rate", static_cast<double>(rng() % 33) * 0.5 - 8.0}});
    case 2: return op(SyncKind::create_annotation, origin, {{"id", ann}, {"kind", "comment"}, {"text", origin}});
    case 3: return op(SyncKind::update_annotation, origin, {{"id", ann}, {"kind", "comment"}, {"text", "v" + std::to_string(rng() % 99)}});
    case 4: return op(SyncKind::delete_annotation, origin, {{"id", ann}});
    case 5:
      return op(SyncKind::presence, origin,
                {{"display_name", origin}, {"view", "desktop"},
                 {"pose", {{"position", {0.5 * static_cast<double>(rng() % 9), 1.0, 1.5}}, {"orientation", {1, 0, 0, 0}}}},
                 {"frustum", {{"h_fov", 90}, {"v_fov", 60}}}});
    case 6:
      return op(SyncKind::create_ghost, origin,
                {{"t", t(rng)}, {"camera", {{"position", {0, 0, 2}}, {"orientation", {1, 0, 0, 0}}}}});
    default: return op(SyncKind::set_visibility, origin, {{"events", rng() % 2 == 0}});
  }
}

void collab_convergence(Check& c) {
  const ConfigDocument doc = testing::minimal_document();
  const std::vector<std::string> clients{"alice", "bob"};
  testing::TempDir dir;
  for (int run = 0; run < 50; ++run) {
    std::mt19937_64 rng(500 + run);
    Millis now = 1'700'000'000'000;
    Sequencer server(doc, [&now] { return now; });
    const Millis duration = server.state().duration;
    // Each connection proposes its own queue in order; runs differ in how
    // the two queues interleave.
    std::vector<std::vector<SyncMessage>> queues(2);
    for (int i = 0; i < 100; ++i) queues[rng() % 2].push_back(random_op(rng, clients[rng() % 2], duration));
    for (std::size_t k = 0; k < 2; ++k) {
      for (auto& m : queues[k]) m.origin = clients[k];
    }
    std::vector<SessionMirror> mirrors(2);
    for (std::size_t k = 0; k < 2; ++k) mirrors[k].receive(server.join(clients[k]));
    const fs::path ledger_path = dir.path() / ("run" + std::to_string(run) + ".ndjson");
    std::vector<std::string> history;
    std::int64_t expected_seq = 0;
    {
      Ledger ledger(ledger_path);
      std::size_t next[2] = {0, 0};
      while (next[0] < queues[0].size() || next[1] < queues[1].size()) {
        std::size_t k = rng() % 2;
        if (next[k] >= queues[k].size()) k = 1 - k;
        now += static_cast<Millis>(rng() % 40);
        const auto r = server.apply(queues[k][next[k]++]);
        if (!r.accepted) continue;
        c.expect(r.message.seq == ++expected_seq, "run " + std::to_string(run) + ": seq gap");
        ledger.append(r.message);
        for (auto& m : mirrors) c.expect(m.receive(r.message), "run " + std::to_string(run) + ": mirror refused a message");
        history.push_back(canonical_dump(full_state_json(server.state())));
      }
    }
    const std::string server_state = canonical_dump(full_state_json(server.state()));
    const std::string server_doc = canonical_serialize(materialized_document(doc, server.state()));
    for (const auto& m : mirrors) {
      c.expect(canonical_dump(full_state_json(m.state())) == server_state, "run " + std::to_string(run) + ": client diverged");
      c.expect(canonical_serialize(materialized_document(doc, m.state())) == server_doc,
               "run " + std::to_string(run) + ": materialized document differs");
    }
    if (history.empty()) continue;

    const auto full = read_ledger(ledger_path);
    c.expect(canonical_dump(full_state_json(replay_ledger(doc, full.messages))) == server_state,
             "run " + std::to_string(run) + ": ledger replay differs");
    // Crash in the middle of writing the final line.
    fs::resize_file(ledger_path, fs::file_size(ledger_path) - 5);
    const auto torn = read_ledger(ledger_path);
    c.expect(torn.truncated_tail && torn.messages.size() == history.size() - 1,
             "run " + std::to_string(run) + ": torn tail not detected");
    const std::string before = history.size() >= 2 ? history[history.size() - 2]
                                                   : canonical_dump(full_state_json(initial_state(doc)));
    c.expect(canonical_dump(full_state_json(replay_ledger(doc, torn.messages))) == before,
             "run " + std::to_string(run) + ": replay after crash differs");
  }
}

void replay_determinism(Check& c) {
  testing::TempDir dir;
  Report report;
  const ConfigDocument doc = ingest_manifest(write_multimodal_fixture(dir.path()), report);
  c.expect(report.error_count() == 0, "fixture ingest reported errors");

  auto script = [](Millis duration) {
    std::vector<ReplayState> states;
    ReplayState st;
    st.playing = true;
    for (int i = 0; i < 300; ++i) {
      if (i % 37 == 0) st = seek(st, (duration / 300) * ((i * 53) % 300), duration);
      if (i % 61 == 0) st = set_rate(st, i % 2 ? -2.0 : 4.0);
      if (i % 89 == 0) st.playing = !st.playing;
      st = step(st, 400 + 10 * (i % 7), duration);
      states.push_back(st);
    }
    return states;
  };
  auto hashes = [&](unsigned threads) {
    const ReplayEngine engine(doc);
    std::vector<std::uint64_t> out;
    for (const auto& s : engine.snapshots(script(engine.duration()), threads)) out.push_back(fnv1a(canonical_dump(Json(s))));
    return out;
  };
  const auto first = hashes(1);
  c.expect(first == hashes(1), "two single-thread runs differ");
  c.expect(first == hashes(4), "four threads differ from one");
  c.expect(std::set<std::uint64_t>(first.begin(), first.end()).size() > 100, "snapshots barely vary; script too weak");
}

void driveact_import(Check& c) {
  testing::TempDir dir;
  Report report;
  const ConfigDocument doc = ingest_manifest(write_driveact_fixture(dir.path()), report);
  c.expect(report.error_count() == 0, "ingest errors: " + to_text(report));
  c.expect(validate(doc).error_count() == 0, "document does not validate");
  c.expect(doc.sessions.size() == 1, "expected one session");
  if (doc.sessions.empty()) return;
  const auto& s = doc.sessions[0];
  c.expect(!s.skeleton.empty(), "no 3D poses imported");
  c.expect(s.road_users.empty(), "road users present");
  c.expect(!s.ego_path.empty(), "no GPS path");
  c.expect(doc.scene.footprints.empty(), "building footprints present");
  std::size_t activities = 0;
  for (const auto& e : s.events) activities += e.kind == EventKind::activity;
  c.expect(activities > 0 && activities == s.events.size(), "activity intervals missing or mixed");
  for (const auto& m : doc.scene.meshes) {
    c.expect(m.role == MeshRole::ground || m.role == MeshRole::ego_exterior, "non-GPS mesh " + m.id);
  }
}

struct Criterion {
  const char* name;
  double limit_s;
  void (*run)(Check&);
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"config round-trip (200 documents)", 10.0, config_round_trip},
      {"outlier oracle equivalence (1000 streams)", 30.0, outlier_oracle},
      {"aggregated avatar identity, symmetry, permutation", 5.0, avatars},
      {"raycast equivalence (10^4 rays, 20 meshes)", 60.0, raycast_equivalence},
      {"heatmap mass conservation (sigma 0.05, 1.0)", 30.0, heatmap_conservation},
      {"geodesy offset and round trip", 5.0, geodesy},
      {"trajectory simplification (500 walks)", 10.0, trajectory_simplification},
      {"path-event layout offsets and 1 m boundary", 1.0, path_event_layout},
      {"fixture track, speed and 500 ms chains", 30.0, fixture_values},
      {"collaboration convergence and ledger replay", 60.0, collab_convergence},
      {"replay determinism across runs and threads", 10.0, replay_determinism},
      {"Drive&Act-style import", 10.0, driveact_import},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Check check;
    const auto start = std::chrono::steady_clock::now();
    try {
      cr.run(check);
    } catch (const std::exception& e) {
      check.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > cr.limit_s) check.expect(false, "took " + num(secs) + " s");
    const bool ok = check.count == 0;
    failed += !ok;
    std::printf("%s  %-52s %7.3f s / %4.0f s%s%s\n", ok ? "PASS" : "FAIL", cr.name, secs, cr.limit_s,
                ok ? "" : "  ", check.summary().c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return std::min(failed, 100);
}
