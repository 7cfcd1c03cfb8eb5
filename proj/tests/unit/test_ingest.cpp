#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "drivelab/ingest/annotations.hpp"
#include "drivelab/ingest/csv.hpp"
#include "drivelab/ingest/detectors.hpp"
#include "drivelab/ingest/ingest.hpp"
#include "drivelab/ingest/stream_ops.hpp"
#include "drivelab/ingest/timestamps.hpp"
#include "support/temp_dir.hpp"

using namespace drivelab;
using drivelab::testing::TempDir;

namespace {

SampledStream make_stream(std::vector<StreamSample> samples, double hz = 4.0) {
  SampledStream s;
  s.name = "x";
  s.rate_hz = hz;
  s.samples = std::move(samples);
  return s;
}

// Quantile with 1-based order statistics: x_(j) + g (x_(j+1) - x_(j)),
// j = floor(1 + (n-1)p).
double oracle_quantile(std::vector<double> xs, double p) {
  std::sort(xs.begin(), xs.end());
  const double pos = 1.0 + (static_cast<double>(xs.size()) - 1.0) * p;
  const auto j = static_cast<std::size_t>(pos);
  const double g = pos - static_cast<double>(j);
  const double lo = xs[j - 1];
  const double hi = j < xs.size() ? xs[j] : xs[j - 1];
  return lo + g * (hi - lo);
}

std::vector<std::pair<Millis, double>> oracle_marks(const SampledStream& s) {
  std::vector<double> xs;
  for (const auto& x : s.samples) xs.push_back(x.value);
  const double q1 = oracle_quantile(xs, 0.25);
  const double q3 = oracle_quantile(xs, 0.75);
  std::vector<std::pair<Millis, double>> out;
  for (const auto& x : s.samples) {
    if (x.value < q1 - 1.5 * (q3 - q1) || x.value > q3 + 1.5 * (q3 - q1)) out.emplace_back(x.t, x.value);
  }
  return out;
}

std::string csv_stream(const std::vector<std::pair<Millis, double>>& rows, const char* col = "eda") {
  std::ostringstream out;
  out << "t," << col << "\n";
  for (const auto& [t, v] : rows) out << t << "," << v << "\n";
  return out.str();
}

}  // namespace

TEST_CASE("csv parsing") {
  const CsvTable t = parse_csv("a, b ,c\r\n1,\"x, \"\"y\"\"\",3\n\n4,5\n");
  REQUIRE(t.header == std::vector<std::string>{"a", "b", "c"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0].fields[1] == "x, \"y\"");
  CHECK(t.rows[1].line == 4);
  CHECK(t.rows[1].fields.size() == 2);
  CHECK(parse_number("1.5") == 1.5);
  CHECK_FALSE(parse_number("1.5x"));
  CHECK_FALSE(parse_number("nan"));
}

TEST_CASE("timestamp detection") {
  CHECK(parse_iso8601("1970-01-01T00:00:01.5Z") == 1500);
  CHECK(parse_iso8601("2020-02-29T12:00:00+02:00") == 1582970400000);
  CHECK_FALSE(parse_iso8601("2021-02-30T00:00:00Z"));
  CHECK(detect_time_format("250") == TimeFormat::relative_ms);
  CHECK(detect_time_format("1690000000000") == TimeFormat::epoch_ms);
  CHECK(detect_time_format("2023-07-22T04:26:40Z") == TimeFormat::iso8601);
  CHECK(parse_time("1690000000250", TimeFormat::epoch_ms, 1690000000000) == 250);
  CHECK(parse_time("2023-07-22T04:26:40.250Z", TimeFormat::iso8601, 1690000000000) == 250);
}

TEST_CASE("resample") {
  SUBCASE("linearity") {
    const auto out = resample(make_stream({{0, 0}, {1000, 10}}), 4.0);
    const std::vector<StreamSample> want{{0, 0}, {250, 2.5}, {500, 5}, {750, 7.5}, {1000, 10}};
    CHECK(out.samples == want);
    CHECK(out.rate_hz == 4.0);
  }
  SUBCASE("identity at the original rate") {
    std::vector<StreamSample> xs;
    for (int k = 0; k < 40; ++k) xs.push_back({k * 250, std::sin(k * 0.3)});
    CHECK(resample(make_stream(xs), 4.0).samples == xs);
  }
  SUBCASE("every output lies on the input polyline") {
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<int> dt(1, 400);
    std::uniform_real_distribution<double> val(-5, 5);
    std::uniform_real_distribution<double> hz(0.3, 90.0);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<StreamSample> xs;
      Millis t = dt(rng);
      for (int k = 0; k < 30; ++k) {
        xs.push_back({t, val(rng)});
        t += dt(rng);
      }
      const auto out = resample(make_stream(xs), hz(rng));
      for (const auto& o : out.samples) {
        CHECK(o.t >= xs.front().t);
        CHECK(o.t <= xs.back().t);
        bool on_segment = false;
        for (std::size_t k = 0; k + 1 < xs.size() && !on_segment; ++k) {
          if (xs[k].t > o.t || o.t > xs[k + 1].t) continue;
          const double lo = std::min(xs[k].value, xs[k + 1].value);
          const double hi = std::max(xs[k].value, xs[k + 1].value);
          const double expect = xs[k].value + (xs[k + 1].value - xs[k].value) *
                                                  double(o.t - xs[k].t) / double(xs[k + 1].t - xs[k].t);
          on_segment = o.value >= lo - 1e-12 && o.value <= hi + 1e-12 && std::abs(o.value - expect) < 1e-9;
        }
        CHECK(on_segment);
      }
    }
  }
  SUBCASE("gap regions emit nothing") {
    auto s = make_stream({{0, 0}, {250, 1}, {2000, 2}, {2250, 3}});
    s.gaps = find_gaps(s.samples, 4.0);
    REQUIRE(s.gaps.size() == 1);
    CHECK(s.gaps[0] == StreamGap{250, 2000});
    const auto out = resample(s, 4.0);
    for (const auto& o : out.samples) CHECK((o.t <= 250 || o.t >= 2000));
    CHECK(out.samples.size() == 4);
  }
  CHECK_THROWS_AS(resample(make_stream({{0, 0}, {1, 1}}), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(resample(make_stream({{0, 0}}), 4.0), std::invalid_argument);
}

TEST_CASE("outlier detection") {
  auto s = make_stream({{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 100}});
  const IqrFences f = iqr_fences({1, 2, 3, 4, 100});
  CHECK(f.q1 == 2.0);
  CHECK(f.q3 == 4.0);
  CHECK(f.low == -1.0);
  CHECK(f.high == 7.0);
  const auto marks = detect_outliers(s);
  REQUIRE(marks.size() == 1);
  CHECK(marks[0].value == 100.0);
  CHECK(marks[0].fence == Fence::high);
  CHECK(marks[0].t == 4);

  CHECK(detect_outliers(make_stream({{0, 5}, {1, 5}, {2, 5}, {3, 5}})).empty());

  Report r;
  CHECK(detect_outliers(make_stream({{0, 1}, {1, 2}, {2, 300}}), &r).empty());
  CHECK(r.warning_count() == 1);

  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> len(4, 300);
  std::normal_distribution<double> noise(0, 1);
  std::uniform_real_distribution<double> coin(0, 1);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<StreamSample> xs;
    const int n = len(rng);
    for (int k = 0; k < n; ++k) {
      double v = coin(rng) < 0.05 ? noise(rng) * 20 : noise(rng);
      if (coin(rng) < 0.2) v = std::round(v);  // ties on fences
      xs.push_back({k * 10, v});
    }
    const auto stream = make_stream(xs);
    std::vector<std::pair<Millis, double>> got;
    for (const auto& m : detect_outliers(stream)) got.emplace_back(m.t, m.value);
    CHECK(got == oracle_marks(stream));
  }
}

TEST_CASE("detectors") {
  SessionRecording s;
  s.participant_id = "P1";
  s.duration = 70000;
  SampledStream eda;
  eda.name = "eda";
  eda.rate_hz = 4;
  for (Millis t = 0; t < 70000; t += 250) eda.samples.push_back({t, t >= 60000 ? 1.0 : 0.0});
  s.streams.push_back(eda);
  SampledStream eyes;
  eyes.name = "eye_closure";
  eyes.rate_hz = 4;
  for (Millis t = 0; t < 70000; t += 250) eyes.samples.push_back({t, 0.1});
  s.streams.push_back(eyes);
  s.speech = {{1000, 2000, "hello", std::nullopt}, {5000, 5600, "look there", std::string("Pyramid")}};

  ConfigDocument doc;
  doc.sessions.push_back(s);
  const auto thr = make_threshold_detector();
  const auto eye = make_eye_closure_detector();
  const auto speech = make_speech_activity_detector();

  SUBCASE("threshold detector spans the step") {
    const auto out = run_detectors(doc, {thr.get()});
    REQUIRE(out.sessions[0].events.size() == 1);
    const auto& e = out.sessions[0].events[0];
    CHECK(e.kind == EventKind::emotion);
    CHECK(e.label == "stress");
    CHECK(e.t_start == 60000);
    CHECK(e.t_end == 69750);
    CHECK(e.source == EventSource::inferred);
    CHECK(e.id == "threshold-P1-1");
    CHECK(e.confidence > 0.5);
    CHECK(e.confidence <= 1.0);
  }
  SUBCASE("eye closure never fires on open eyes") {
    CHECK(run_detectors(doc, {eye.get()}).sessions[0].events.empty());
    auto closed = doc;
    for (auto& x : closed.sessions[0].streams[1].samples) x.value = x.t >= 5000 ? 0.95 : 0.0;
    const auto out = run_detectors(closed, {eye.get()});
    REQUIRE(out.sessions[0].events.size() == 1);
    CHECK(out.sessions[0].events[0].label == "drowsiness");
  }
  SUBCASE("speech activity maps segments one to one") {
    const auto out = run_detectors(doc, {speech.get()});
    REQUIRE(out.sessions[0].events.size() == 2);
    CHECK(out.sessions[0].events[1].kind == EventKind::audio);
    CHECK(out.sessions[0].events[1].attrs.at("referent") == "Pyramid");
    CHECK(out.sessions[0].events[0].t_end == 2000);
  }
  SUBCASE("original events untouched, determinism") {
    auto with_logged = doc;
    with_logged.sessions[0].events.push_back({"e1", EventKind::driving, "brake", 61000, 61500, "P1", {}, 1.0, EventSource::logged});
    const auto a = run_detectors(with_logged, {thr.get(), speech.get()});
    const auto b = run_detectors(with_logged, {thr.get(), speech.get()});
    CHECK(a == b);
    const auto it = std::find_if(a.sessions[0].events.begin(), a.sessions[0].events.end(),
                                 [](const EventRecord& e) { return e.id == "e1"; });
    REQUIRE(it != a.sessions[0].events.end());
    CHECK(*it == with_logged.sessions[0].events[0]);
    CHECK(std::is_sorted(a.sessions[0].events.begin(), a.sessions[0].events.end(),
                         [](const EventRecord& x, const EventRecord& y) { return x.t_start < y.t_start; }));
  }
  SUBCASE("unsatisfiable requirement skips with a warning") {
    auto no_eda = doc;
    no_eda.sessions[0].streams.erase(no_eda.sessions[0].streams.begin());
    Report r;
    CHECK(run_detectors(no_eda, {thr.get()}, &r).sessions[0].events.empty());
    CHECK(r.has(Severity::warning, "sessions[0]", "threshold"));
  }
  SUBCASE("undeclared input access is refused") {
    const DetectorInput in(s, {"stream:eda"});
    CHECK_NOTHROW(in.stream("eda"));
    CHECK_THROWS_AS(in.stream("eye_closure"), std::logic_error);
    CHECK_THROWS_AS(in.speech(), std::logic_error);
  }
  CHECK_THROWS_AS(make_detector("telepathy", {}), std::invalid_argument);
  CHECK_THROWS_AS(make_detector("threshold", {{"k", "abc"}}), std::invalid_argument);
}

namespace {

// Three-source bundle: eda 4 Hz, skeleton 30 Hz, GPS 1 Hz over 20 s.
void write_basic_bundle(const TempDir& dir, bool shuffle = false, int extra_eda_rows = 0) {
  std::vector<std::string> eda_rows;
  const int n_eda = 80 + extra_eda_rows;
  for (int k = 0; k < n_eda; ++k) eda_rows.push_back(std::to_string(k * 250) + "," + std::to_string(0.5 + 0.01 * k));
  std::vector<std::string> skel_rows;
  for (int k = 0; k < 600; ++k) {
    const Millis t = std::llround(k * 1000.0 / 30.0);
    std::string row = std::to_string(t);
    for (int j = 0; j < 3; ++j) row += ",0.1,0.2," + std::to_string(1.0 + j) + ",1,0,0,0";
    skel_rows.push_back(row);
  }
  std::vector<std::string> gps_rows;
  for (int k = 0; k < 20; ++k) {
    gps_rows.push_back(std::to_string(1690000000000LL + k * 1000) + ",37.79," + std::to_string(-122.40 + k * 1e-5));
  }
  if (shuffle) {
    std::mt19937_64 rng(1);
    std::shuffle(eda_rows.begin(), eda_rows.end(), rng);
    std::shuffle(skel_rows.begin(), skel_rows.end(), rng);
    std::shuffle(gps_rows.begin(), gps_rows.end(), rng);
  }
  auto join = [](const std::string& header, const std::vector<std::string>& rows) {
    std::string s = header + "\n";
    for (const auto& r : rows) s += r + "\n";
    return s;
  };
  std::string skel_header = "t";
  for (const char* j : {"head", "left_hand", "right_hand"}) {
    for (const char* c : {"_px", "_py", "_pz", "_qw", "_qx", "_qy", "_qz"}) skel_header += std::string(",") + j + c;
  }
  dir.write("P1/eda.csv", join("t,eda", eda_rows));
  dir.write("P1/skeleton.csv", join(skel_header, skel_rows));
  dir.write("P1/gps.csv", join("t,lat,lon", gps_rows));
  dir.write("manifest.json", R"({
    "participants": [{"id": "P1"}],
    "sessions": [{
      "participant_id": "P1", "condition": "baseline", "t0": 1690000000000,
      "sources": {
        "eda": {"format": "stream_csv", "path": "P1/eda.csv", "options": {"unit": "uS"}},
        "skeleton": {"format": "skeleton_csv", "path": "P1/skeleton.csv"},
        "gps": {"format": "gps_csv", "path": "P1/gps.csv"}
      }
    }]
  })");
}

}  // namespace

TEST_CASE("ingest of a three-source bundle") {
  TempDir dir;
  write_basic_bundle(dir);
  Report r;
  const auto bundle = load_manifest(dir.path() / "manifest.json");
  const ConfigDocument doc = ingest(bundle, StudyMeta{"t", {}, ""}, r);
  CHECK(r.warning_count() == 0);
  const Report v = validate(doc);
  CHECK(v.error_count() == 0);
  INFO(to_text(v));
  REQUIRE(doc.sessions.size() == 1);
  const auto& s = doc.sessions[0];
  REQUIRE(s.streams.size() == 1);
  CHECK(s.streams[0].samples.size() == 80);
  CHECK(s.streams[0].rate_hz == doctest::Approx(4.0));
  CHECK(s.streams[0].unit == "uS");
  CHECK(s.skeleton.size() == 600);
  CHECK(s.joint_names == std::vector<std::string>{"head", "left_hand", "right_hand"});
  CHECK(s.ego_path.size() == 20);
  CHECK(s.ego_path[3].t == 3000);
  CHECK(doc.study_meta.conditions == std::vector<std::string>{"baseline"});
  CHECK(doc.scene.find_mesh(doc.scene.ego_vehicle) != nullptr);
  CHECK(doc.scene.origin.lat == 37.79);

  // Byte-identical on a rerun.
  Report r2;
  CHECK(canonical_serialize(ingest(bundle, StudyMeta{"t", {}, ""}, r2)) == canonical_serialize(doc));
}

TEST_CASE("ingest sorts shuffled rows and never invents samples") {
  TempDir dir;
  write_basic_bundle(dir, true);
  Report r;
  const ConfigDocument doc = ingest(load_manifest(dir.path() / "manifest.json"), {}, r);
  const auto& s = doc.sessions[0];
  CHECK(std::is_sorted(s.streams[0].samples.begin(), s.streams[0].samples.end(),
                       [](const StreamSample& a, const StreamSample& b) { return a.t < b.t; }));
  CHECK(std::is_sorted(s.skeleton.begin(), s.skeleton.end(),
                       [](const SkeletonFrame& a, const SkeletonFrame& b) { return a.t < b.t; }));
  CHECK(s.streams[0].samples.size() <= 80);
  CHECK(validate(doc).error_count() == 0);
}

TEST_CASE("one malformed row among 1000 is skipped with one warning") {
  TempDir dir;
  write_basic_bundle(dir, false, 920);
  std::string eda = read_file(dir.path() / "P1/eda.csv");
  const auto pos = eda.find("\n2500,");
  eda.replace(pos + 1, 4, "25x0");
  dir.write("P1/eda.csv", eda);
  Report r;
  const ConfigDocument doc = ingest(load_manifest(dir.path() / "manifest.json"), {}, r);
  CHECK(doc.sessions[0].streams[0].samples.size() == 999);
  CHECK(r.warning_count() == 1);
  CHECK(r.has(Severity::warning, "P1/eda.csv:12"));
}

TEST_CASE("gaps are recorded, not filled") {
  TempDir dir;
  write_basic_bundle(dir);
  std::vector<std::pair<Millis, double>> rows;
  for (Millis t = 0; t < 20000; t += 250) {
    if (t < 5000 || t > 8000) rows.emplace_back(t, 1.0);
  }
  dir.write("P1/eda.csv", csv_stream(rows));
  Report r;
  const ConfigDocument doc = ingest(load_manifest(dir.path() / "manifest.json"), {}, r);
  const auto& st = doc.sessions[0].streams[0];
  REQUIRE(st.gaps.size() == 1);
  CHECK(st.gaps[0] == StreamGap{4750, 8250});
  CHECK(st.samples.size() == rows.size());
}

TEST_CASE("manifest and session errors") {
  TempDir dir;
  write_basic_bundle(dir);
  CHECK_THROWS_WITH(load_manifest(dir.path() / "nope.json"), doctest::Contains("nope.json"));

  dir.write("bad_format.json", R"({"sessions":[{"participant_id":"P1","sources":{"x":{"format":"mystery","path":"P1/eda.csv"}}}]})");
  CHECK_THROWS_WITH_AS(load_manifest(dir.path() / "bad_format.json"), doctest::Contains("unknown format"), ParseError);

  dir.write("missing.json", R"({"sessions":[{"participant_id":"P1","sources":{"x":{"format":"stream_csv","path":"P1/none.csv"}}}]})");
  CHECK_THROWS_WITH_AS(load_manifest(dir.path() / "missing.json"), doctest::Contains("not found"), ParseError);

  dir.write("gps_only.json", R"({"sessions":[{"participant_id":"P1","t0":1690000000000,"sources":{"gps":{"format":"gps_csv","path":"P1/gps.csv"}}}]})");
  Report r;
  CHECK_THROWS_WITH_AS(ingest(load_manifest(dir.path() / "gps_only.json"), {}, r), doctest::Contains("empty session"),
                       ParseError);
}

TEST_CASE("Drive&Act-style bundle yields a GPS-only scene") {
  TempDir dir;
  std::string poses = "frame";
  const std::vector<std::string> joints{"nose", "neck", "rShoulder", "rElbow", "rWrist", "lShoulder", "lElbow", "lWrist"};
  for (const auto& j : joints) poses += "," + j + "_x," + j + "_y," + j + "_z";
  poses += "\n";
  for (int f = 0; f < 150; ++f) {
    poses += std::to_string(f);
    for (std::size_t j = 0; j < joints.size(); ++j) poses += ",0.1,0.2," + std::to_string(0.5 + 0.1 * double(j));
    poses += "\n";
  }
  dir.write("vp1/poses.csv", poses);
  dir.write("vp1/activities.csv",
            "participant_id,file_id,annotation_id,frame_start,frame_end,activity,chunk_id\n"
            "vp1,run1,0,15,90,reading_newspaper,0\n"
            "vp1,run1,1,100,140,drinking,1\n"
            "vp2,run1,2,0,10,eating,0\n");
  std::string gps = "t,lat,lon\n";
  for (int k = 0; k <= 10; ++k) gps += std::to_string(k * 1000) + ",48.78," + std::to_string(9.17 + k * 1e-4) + "\n";
  dir.write("vp1/gps.csv", gps);
  dir.write("manifest.json", R"({
    "sessions": [{"participant_id": "vp1", "condition": "driveact",
      "sources": {
        "poses": {"format": "driveact_poses", "path": "vp1/poses.csv", "options": {"fps": 15}},
        "activities": {"format": "driveact_activities", "path": "vp1/activities.csv", "options": {"fps": 15}},
        "gps": {"format": "gps_csv", "path": "vp1/gps.csv"}
      }}]
  })");
  Report r;
  const ConfigDocument doc = ingest(load_manifest(dir.path() / "manifest.json"), {}, r);
  INFO(to_text(r));
  CHECK(validate(doc).error_count() == 0);
  const auto& s = doc.sessions[0];
  CHECK(s.road_users.empty());
  CHECK(doc.scene.footprints.empty());
  for (const auto& m : doc.scene.meshes) CHECK((m.role == MeshRole::ground || m.role == MeshRole::ego_exterior));
  CHECK(std::any_of(doc.scene.meshes.begin(), doc.scene.meshes.end(),
                    [](const MeshAsset& m) { return m.role == MeshRole::ground; }));
  REQUIRE(s.events.size() == 2);
  CHECK(s.events[0].label == "reading_newspaper");
  CHECK(s.events[0].kind == EventKind::activity);
  CHECK(s.events[0].t_start == 1000);
  CHECK(s.events[0].t_end == 6000);
  CHECK(s.skeleton.size() == 150);
  CHECK(s.joint_index("head").has_value());
  CHECK(s.joint_index("left_hand").has_value());
}

TEST_CASE("external annotation import") {
  TempDir dir;
  ConfigDocument doc;
  doc.participants.push_back({"vp1", {1, 0, 0}, {}});
  SessionRecording s;
  s.participant_id = "vp1";
  s.duration = 10000;
  doc.sessions.push_back(s);

  const auto empty = dir.write("empty.csv", "");
  CHECK(import_external_annotations(doc, empty, AnnotationFormat::generic_intervals) == doc);

  const auto generic = dir.write("g.csv", "t_start,t_end,label\n0,100,a\n200,300,b\n400,500,c\n");
  const auto g = import_external_annotations(doc, generic, AnnotationFormat::generic_intervals);
  CHECK(g.sessions[0].events.size() == 3);

  const auto act = dir.write("a.csv",
                             "participant_id,file_id,annotation_id,frame_start,frame_end,activity,chunk_id\n"
                             "vp1,f,0,0,30,reading_newspaper,0\n");
  const auto a = import_external_annotations(doc, act, AnnotationFormat::driveact_activities);
  REQUIRE(a.sessions[0].events.size() == 1);
  CHECK(a.sessions[0].events[0].label == "reading_newspaper");
  CHECK(a.sessions[0].events[0].source == EventSource::logged);

  const auto clash = dir.write("c.csv", "t_start,t_end,label\n0,1000,sitting\n500,1500,standing\n");
  Report r;
  const auto c = import_external_annotations(doc, clash, AnnotationFormat::generic_intervals, &r);
  CHECK(c.sessions[0].events.size() == 2);
  CHECK(r.warning_count() == 1);
}
