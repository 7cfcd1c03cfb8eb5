#include "drivelab/fixtures/synthetic.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "drivelab/geo/ego_path.hpp"
#include "drivelab/geo/geodesy.hpp"
#include "drivelab/json_io.hpp"
#include "drivelab/mesh_util.hpp"

namespace drivelab {

namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSpeed = kFixtureSpeedKmh / 3.6;  // m/s
constexpr Millis kLapMs = static_cast<Millis>(kFixtureLoopLength / kSpeed * 1000.0 + 0.5);
constexpr double kSkeletonHz = 30.0;
constexpr double kEdaHz = 4.0;
constexpr double kRayHz = 10.0;

// Pyramid footprint in the scene frame, inside the loop so nothing else
// stands between the road and it.
const Vec3 kPyramidLo{300.0, 60.0, 0.0};
const Vec3 kPyramidHi{345.0, 105.0, 260.0};
const Vec3 kPyramidTarget{322.5, 82.5, 40.0};

// Cabin geometry, vehicle frame.
const Vec3 kDashLo{0.75, -0.75, 0.6};
const Vec3 kDashHi{1.05, 0.75, 0.9};

std::string num(double v) { return format_double(v); }

std::string csv_line(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  return out + '\n';
}

double heading_at(double s) {
  s = std::fmod(s, kFixtureLoopLength);
  if (s < kFixtureLoopWidth) return 90.0;
  if (s < kFixtureLoopWidth + kFixtureLoopHeight) return 0.0;
  if (s < 2 * kFixtureLoopWidth + kFixtureLoopHeight) return 270.0;
  return 180.0;
}

std::vector<Millis> grid(double hz, Millis duration) {
  std::vector<Millis> out;
  for (long k = 0;; ++k) {
    const Millis t = std::llround(static_cast<double>(k) * 1000.0 / hz);
    if (t > duration) break;
    out.push_back(t);
  }
  return out;
}

std::string obj_text(const MeshAsset& m) {
  std::ostringstream o;
  o << "# " << m.id << "\n";
  for (const auto& v : m.vertices) o << "v " << num(v.x) << ' ' << num(v.y) << ' ' << num(v.z) << "\n";
  for (const auto& t : m.uv) o << "vt " << num(t.u) << ' ' << num(t.v) << "\n";
  for (const auto& tri : m.triangles) {
    o << 'f';
    for (auto i : tri) o << ' ' << (i + 1) << '/' << (i + 1);
    o << "\n";
  }
  return o.str();
}

Json footprint_feature(const LocalFrame& frame, const std::string& id, const std::string& name, const Vec3& lo,
                       const Vec3& hi) {
  Json ring = Json::array();
  const Vec3 corners[] = {{lo.x, lo.y, 0}, {hi.x, lo.y, 0}, {hi.x, hi.y, 0}, {lo.x, hi.y, 0}, {lo.x, lo.y, 0}};
  for (const auto& c : corners) {
    const GeoSample g = local_to_geo(frame, c);
    ring.push_back({g.lon, g.lat});
  }
  Json props = {{"height", hi.z - lo.z}};
  if (!name.empty()) props["name"] = name;
  return {{"type", "Feature"},
          {"id", id},
          {"properties", props},
          {"geometry", {{"type", "Polygon"}, {"coordinates", {ring}}}}};
}

// Per-participant body model: small seat offsets and a slow sway.
struct Body {
  Vec3 seat;
  double phase = 0.0;

  Vec3 head(Millis t) const {
    const double s = static_cast<double>(t) / 1000.0;
    return seat + Vec3{0.02 * std::sin(0.7 * s + phase), 0.015 * std::sin(0.5 * s + 2 * phase), 0.01 * std::sin(1.1 * s)};
  }
  double yaw(Millis t) const { return 0.12 * std::sin(0.3 * static_cast<double>(t) / 1000.0 + phase); }
};

struct Task {
  Millis onset = 0;
  std::string id;
  bool landmark_in_scene = true;
};

bool pointing_at(const std::vector<Task>& tasks, Millis t) {
  for (const auto& k : tasks) {
    if (t >= k.onset + kFixtureChainGap && t <= k.onset + kFixtureChainGap + 1000) return true;
  }
  return false;
}

bool gazing_at(const std::vector<Task>& tasks, Millis t) {
  for (const auto& k : tasks) {
    if (t >= k.onset && t <= k.onset + 1000) return true;
  }
  return false;
}

Vec3 right_hand(const Body& b, const std::vector<Task>& tasks, Millis t) {
  const Vec3 h = b.head(t);
  return pointing_at(tasks, t) ? h + Vec3{0.45, -0.25, -0.1} : h + Vec3{0.35, -0.2, -0.35};
}

}  // namespace

GeoSample fixture_origin() { return {0, 37.7925, -122.4065, 0.0, std::nullopt, std::nullopt}; }

Vec3 fixture_loop_position(double s) {
  s = std::fmod(s, kFixtureLoopLength);
  if (s < 0) s += kFixtureLoopLength;
  const double w = kFixtureLoopWidth;
  const double h = kFixtureLoopHeight;
  if (s < w) return {s, 0.0, 0.0};
  if (s < w + h) return {w, s - w, 0.0};
  if (s < 2 * w + h) return {w - (s - w - h), h, 0.0};
  return {0.0, h - (s - 2 * w - h), 0.0};
}

fs::path write_multimodal_fixture(const fs::path& dir, const MultimodalFixtureOptions& opt) {
  fs::create_directories(dir / "scene");
  const GeoSample origin = fixture_origin();
  const LocalFrame frame = make_local_frame(origin);
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  // GPS at 1 Hz plus the exact lap end.
  std::vector<Millis> gps_times = grid(1.0, kLapMs);
  if (gps_times.back() != kLapMs) gps_times.push_back(kLapMs);
  std::vector<GeoSample> gps;
  std::string gps_csv = csv_line({"t", "lat", "lon", "alt", "heading", "speed"});
  for (const Millis t : gps_times) {
    const double s = kSpeed * static_cast<double>(t) / 1000.0;
    GeoSample g = local_to_geo(frame, fixture_loop_position(s));
    g.t = t;
    g.heading = heading_at(std::min(s, kFixtureLoopLength - 1e-6));
    g.speed = kSpeed;
    gps.push_back(g);
    gps_csv += csv_line({std::to_string(t), num(g.lat), num(g.lon), "0", num(*g.heading), num(kSpeed)});
  }
  const EgoPath path = build_ego_path(gps, frame);

  // Scene: interior OBJs, footprints, gazetteer.
  const MeshAsset dash = make_box_mesh("dashboard", MeshRole::interior, kDashLo, kDashHi);
  const MeshAsset console =
      make_box_mesh("console", MeshRole::interior, {0.3, -0.12, 0.3}, {0.75, 0.12, 0.6});
  write_file(dir / "scene/dashboard.obj", obj_text(dash));
  write_file(dir / "scene/console.obj", obj_text(console));

  Json features = Json::array();
  features.push_back(footprint_feature(frame, "transamerica", "Transamerica Pyramid", kPyramidLo, kPyramidHi));
  int b = 0;
  for (double x = 10.0; x + 50.0 <= kFixtureLoopWidth; x += 80.0) {
    const double hs = 15.0 + (b * 7) % 25;
    features.push_back(footprint_feature(frame, "south-" + std::to_string(b), "", {x, -50.0, 0}, {x + 50.0, -15.0, hs}));
    features.push_back(footprint_feature(frame, "north-" + std::to_string(b), "",
                                         {x, kFixtureLoopHeight + 15.0, 0}, {x + 50.0, kFixtureLoopHeight + 50.0, hs + 5}));
    ++b;
  }
  for (double y = 20.0; y + 60.0 <= kFixtureLoopHeight; y += 100.0) {
    features.push_back(footprint_feature(frame, "east-" + std::to_string(b), "", {kFixtureLoopWidth + 15.0, y, 0},
                                         {kFixtureLoopWidth + 50.0, y + 60.0, 30.0}));
    features.push_back(footprint_feature(frame, "west-" + std::to_string(b), "", {-50.0, y, 0}, {-15.0, y + 60.0, 25.0}));
    ++b;
  }
  write_file(dir / "scene/buildings.geojson",
             canonical_dump({{"type", "FeatureCollection"}, {"features", features}}) + "\n");

  const GeoSample pyramid_geo = local_to_geo(frame, kPyramidTarget);
  write_file(dir / "gazetteer.json",
             canonical_dump(Json::array({{{"name", "Lombard Street"}, {"lat", 37.80208}, {"lon", -122.41874}},
                                         {{"name", "Coit Tower"}, {"lat", 37.80239}, {"lon", -122.40582}},
                                         {{"name", "Transamerica Pyramid"},
                                          {"lat", pyramid_geo.lat},
                                          {"lon", pyramid_geo.lon}}})) +
                 "\n");

  // Road users shared by all sessions: a lead car, a cyclist and a pedestrian.
  std::string road_csv = csv_line({"t", "object_id", "class", "x", "y", "z"});
  for (const Millis t : grid(2.0, kLapMs)) {
    const double s = kSpeed * static_cast<double>(t) / 1000.0;
    const Vec3 car = fixture_loop_position(s + 40.0);
    const Vec3 bike = fixture_loop_position(0.6 * s + 300.0);
    const Vec3 walker{200.0 + 1.3 * static_cast<double>(t) / 1000.0, kFixtureLoopHeight + 8.0, 0.0};
    road_csv += csv_line({std::to_string(t), "car-1", "car", num(car.x), num(car.y), "0"});
    road_csv += csv_line({std::to_string(t), "bike-1", "cyclist", num(bike.x), num(bike.y), "0"});
    road_csv += csv_line({std::to_string(t), "ped-1", "pedestrian", num(walker.x), num(walker.y), "0"});
  }

  Json participants = Json::array();
  Json sessions = Json::array();
  const double corners[] = {kFixtureLoopWidth, kFixtureLoopWidth + kFixtureLoopHeight,
                            2 * kFixtureLoopWidth + kFixtureLoopHeight};

  for (int p = 0; p < opt.participants; ++p) {
    const std::string pid = "P" + std::to_string(p + 1);
    const fs::path pdir = dir / pid;
    fs::create_directories(pdir);
    participants.push_back({{"id", pid}, {"demographics", {{"seat", "driver"}, {"age", std::to_string(24 + 7 * p)}}}});
    Body body{{0.05 * p, 0.37, 1.2 + 0.02 * p}, 0.9 * p};

    std::vector<Task> tasks;
    for (int k = 0; k < opt.tasks; ++k) {
      tasks.push_back({20000 + 45000 * k + 1000 * p, "task" + std::to_string(k + 1), k % 2 == 0});
    }

    // Skeleton, 30 Hz.
    std::string skel = "t";
    for (const char* j : {"head", "left_hand", "right_hand"}) {
      for (const char* c : {"_px", "_py", "_pz", "_qw", "_qx", "_qy", "_qz"}) skel += std::string(",") + j + c;
    }
    skel += "\n";
    for (const Millis t : grid(kSkeletonHz, kLapMs)) {
      const double a = body.yaw(t);
      const Quat q{std::cos(a / 2), 0.0, 0.0, std::sin(a / 2)};
      const Vec3 h = body.head(t);
      const Vec3 joints[] = {h, h + Vec3{0.35, 0.2, -0.35}, right_hand(body, tasks, t)};
      std::vector<std::string> row{std::to_string(t)};
      for (const auto& j : joints) {
        for (double v : {j.x, j.y, j.z, q.w, q.x, q.y, q.z}) row.push_back(num(v));
      }
      skel += csv_line(row);
    }

    // EDA, 4 Hz, with a sustained rise for the second participant.
    std::string eda = csv_line({"t", "eda"});
    for (const Millis t : grid(kEdaHz, kLapMs)) {
      const double s = static_cast<double>(t) / 1000.0;
      double v = 2.0 + 0.1 * p + 0.08 * std::sin(s / 20.0) + 0.01 * noise(rng);
      if (p == 1 && s >= 100.0 && s <= 110.0) v += 1.0;
      eda += csv_line({std::to_string(t), num(v)});
    }

    // Gaze and pointing rays, vehicle frame.
    const auto to_target = [&](Millis t, const Vec3& from) {
      const EgoPose pose = interpolate_pose(path, t);
      return normalized(world_to_vehicle(pose, kPyramidTarget) - from);
    };
    std::string gaze = csv_line({"t", "ox", "oy", "oz", "dx", "dy", "dz"});
    for (const Millis t : grid(kRayHz, kLapMs)) {
      const Vec3 o = body.head(t);
      Vec3 d;
      const bool on_task = gazing_at(tasks, t);
      if (on_task) {
        d = to_target(t, o);
      } else if (t % 30000 < 1000) {
        d = normalized(Vec3{0.9, 0.1 * std::sin(static_cast<double>(t)), 0.9} - o);  // glance at the dashboard
      } else {
        const double yaw = 0.15 * std::sin(static_cast<double>(t) / 3000.0 + body.phase) + 0.02 * noise(rng);
        const double pitch = -0.035 + 0.01 * noise(rng);
        d = {std::cos(pitch) * std::cos(yaw), std::cos(pitch) * std::sin(yaw), std::sin(pitch)};
      }
      gaze += csv_line({std::to_string(t), num(o.x), num(o.y), num(o.z), num(d.x), num(d.y), num(d.z)});
    }
    std::string pointing = csv_line({"t", "ox", "oy", "oz", "dx", "dy", "dz"});
    for (const Millis t : grid(kRayHz, kLapMs)) {
      if (!pointing_at(tasks, t)) continue;
      const Vec3 o = right_hand(body, tasks, t);
      const Vec3 d = to_target(t, o);
      pointing += csv_line({std::to_string(t), num(o.x), num(o.y), num(o.z), num(d.x), num(d.y), num(d.z)});
    }

    // Touches on the dashboard top face.
    std::string touches = csv_line({"t", "mesh_id", "x", "y", "z"});
    for (Millis t = 5000 + 3000 * p; t < kLapMs; t += 40000) {
      const double y = -0.4 + 0.1 * static_cast<double>((t / 40000) % 8);
      touches += csv_line({std::to_string(t), "dashboard", num(0.9), num(y), num(kDashHi.z)});
    }

    // Events: one gaze > pointing > speech chain per task, driving events
    // ahead of each corner, one activity.
    std::string events = csv_line({"id", "t_start", "t_end", "kind", "label", "task", "modality", "referent"});
    std::string speech = csv_line({"t_start", "t_end", "transcript", "referent"});
    for (const auto& task : tasks) {
      const std::string base = pid + "-" + task.id;
      const Millis t0 = task.onset;
      const std::string referent = task.landmark_in_scene ? "Transamerica Pyramid" : "Lombard Street";
      const std::string said = task.landmark_in_scene ? "What is that pointed building over there?"
                                                      : "How far is it to Lombard Street?";
      events += csv_line({base + "-gaze", std::to_string(t0), std::to_string(t0 + 1000), "interaction",
                          "look at landmark", task.id, "gaze", ""});
      events += csv_line({base + "-pointing", std::to_string(t0 + kFixtureChainGap),
                          std::to_string(t0 + kFixtureChainGap + 1000), "interaction", "point at landmark", task.id,
                          "pointing", ""});
      events += csv_line({base + "-speech", std::to_string(t0 + 2 * kFixtureChainGap),
                          std::to_string(t0 + 2 * kFixtureChainGap + 1500), "interaction", "ask about landmark",
                          task.id, "speech", referent});
      speech += csv_line({std::to_string(t0 + 2 * kFixtureChainGap), std::to_string(t0 + 2 * kFixtureChainGap + 1500),
                          "\"" + said + "\"", referent});
    }
    int n = 0;
    for (double c : corners) {
      const auto tc = static_cast<Millis>(c / kSpeed * 1000.0);
      ++n;
      events += csv_line({pid + "-brake-" + std::to_string(n), std::to_string(tc - 4000), std::to_string(tc - 1500),
                          "driving", "brake", "", "", ""});
      events += csv_line({pid + "-turn-" + std::to_string(n), std::to_string(tc - 1500), std::to_string(tc + 2500),
                          "driving", "turn_left", "", "", ""});
    }
    events += csv_line({pid + "-mirror", std::to_string(150000 + 2000 * p), std::to_string(154000 + 2000 * p),
                        "activity", "adjust_mirror", "", "", ""});

    write_file(pdir / "skeleton.csv", skel);
    write_file(pdir / "eda.csv", eda);
    write_file(pdir / "gaze.csv", gaze);
    write_file(pdir / "pointing.csv", pointing);
    write_file(pdir / "touches.csv", touches);
    write_file(pdir / "events.csv", events);
    write_file(pdir / "speech.csv", speech);
    write_file(pdir / "gps.csv", gps_csv);
    write_file(pdir / "road_users.csv", road_csv);

    const std::string rel = pid + "/";
    sessions.push_back(
        {{"participant_id", pid},
         {"condition", "city"},
         {"t0", 1690000000000LL + 3600000LL * p},
         {"sources",
          {{"skeleton", {{"format", "skeleton_csv"}, {"path", rel + "skeleton.csv"}}},
           {"eda", {{"format", "stream_csv"}, {"path", rel + "eda.csv"}, {"options", {{"units", {{"eda", "uS"}}}}}}},
           {"gaze", {{"format", "rays_csv"}, {"path", rel + "gaze.csv"}, {"options", {{"modality", "gaze"}}}}},
           {"pointing",
            {{"format", "rays_csv"}, {"path", rel + "pointing.csv"}, {"options", {{"modality", "pointing"}}}}},
           {"touches", {{"format", "touches_csv"}, {"path", rel + "touches.csv"}}},
           {"events", {{"format", "events_csv"}, {"path", rel + "events.csv"}}},
           {"speech", {{"format", "speech_csv"}, {"path", rel + "speech.csv"}}},
           {"gps", {{"format", "gps_csv"}, {"path", rel + "gps.csv"}}},
           {"road_users", {{"format", "road_users_csv"}, {"path", rel + "road_users.csv"}}}}}});
  }

  const Json manifest = {
      {"study_meta",
       {{"title", "Synthetic multimodal city drive"},
        {"conditions", {"city"}},
        {"notes", "Generated fixture: 2400 m loop at 35 km/h, gaze > pointing > speech chains 500 ms apart."}}},
      {"participants", participants},
      {"sessions", sessions},
      {"scene",
       {{"origin", {{"lat", origin.lat}, {"lon", origin.lon}, {"alt", 0.0}}},
        {"sources",
         {{"buildings", {{"format", "geojson_footprints"}, {"path", "scene/buildings.geojson"}}},
          {"dashboard",
           {{"format", "obj"},
            {"path", "scene/dashboard.obj"},
            {"options", {{"id", "dashboard"}, {"role", "interior"}, {"name", "Dashboard"}}}}},
          {"console",
           {{"format", "obj"},
            {"path", "scene/console.obj"},
            {"options", {{"id", "console"}, {"role", "interior"}, {"name", "Center console"}}}}}}}}},
      {"detectors", Json::array({{{"name", "threshold"}, {"params", {{"stream", "eda"}}}}, {{"name", "speech_activity"}}})}};
  const fs::path manifest_path = dir / "manifest.json";
  write_file(manifest_path, manifest.dump(2) + "\n");
  return manifest_path;
}

fs::path write_driveact_fixture(const fs::path& dir) {
  fs::create_directories(dir / "vp1");
  const std::vector<std::string> joints{"nose",      "neck",   "rShoulder", "rElbow", "rWrist",
                                        "lShoulder", "lElbow", "lWrist",    "rHip",   "lHip"};
  std::string poses = "frame";
  for (const auto& j : joints) poses += "," + j + "_x," + j + "_y," + j + "_z";
  poses += "\n";
  constexpr int kFrames = 15 * 60;  // one minute at 15 fps
  for (int f = 0; f < kFrames; ++f) {
    const double s = f / 15.0;
    poses += std::to_string(f);
    for (std::size_t j = 0; j < joints.size(); ++j) {
      const double jj = static_cast<double>(j);
      poses += "," + num(0.1 + 0.02 * std::sin(s + jj)) + "," + num(0.25 - 0.05 * jj) + "," +
               num(1.25 - 0.08 * jj + 0.01 * std::cos(2 * s));
    }
    poses += "\n";
  }
  write_file(dir / "vp1/poses.csv", poses);
  write_file(dir / "vp1/activities.csv",
             "participant_id,file_id,annotation_id,frame_start,frame_end,activity,chunk_id\n"
             "vp1,run1,0,30,240,reading_newspaper,0\n"
             "vp1,run1,1,300,420,drinking,1\n"
             "vp1,run1,2,450,600,fastening_seat_belt,2\n"
             "vp1,run1,3,650,880,talking_on_phone,3\n");
  std::string gps = "t,lat,lon\n";
  for (int k = 0; k <= 60; ++k) {
    gps += std::to_string(k * 1000) + "," + num(48.7823 + 0.00002 * k) + "," + num(9.1702 + 0.00011 * k) + "\n";
  }
  write_file(dir / "vp1/gps.csv", gps);
  const Json manifest = {
      {"study_meta", {{"title", "Drive&Act mini sample"}, {"conditions", {"driveact"}}}},
      {"participants", {{{"id", "vp1"}}}},
      {"sessions",
       {{{"participant_id", "vp1"},
         {"condition", "driveact"},
         {"sources",
          {{"poses", {{"format", "driveact_poses"}, {"path", "vp1/poses.csv"}, {"options", {{"fps", 15}}}}},
           {"activities",
            {{"format", "driveact_activities"}, {"path", "vp1/activities.csv"}, {"options", {{"fps", 15}}}}},
           {"gps", {{"format", "gps_csv"}, {"path", "vp1/gps.csv"}}}}}}}}};
  const fs::path manifest_path = dir / "manifest.json";
  write_file(manifest_path, manifest.dump(2) + "\n");
  return manifest_path;
}

}  // namespace drivelab
