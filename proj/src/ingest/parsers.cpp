#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_set>

#include "drivelab/ingest/annotations.hpp"
#include "drivelab/ingest/csv.hpp"
#include "drivelab/ingest/ingest.hpp"
#include "drivelab/ingest/stream_ops.hpp"
#include "drivelab/ingest/timestamps.hpp"
#include "drivelab/obj.hpp"

namespace drivelab {

namespace {

std::string opt_str(const Json& o, const char* key, const std::string& fallback) {
  return o.contains(key) && o[key].is_string() ? o[key].get<std::string>() : fallback;
}

double opt_num(const Json& o, const char* key, double fallback) {
  return o.contains(key) && o[key].is_number() ? o[key].get<double>() : fallback;
}

std::string where(const SourceContext& ctx, std::size_t line) {
  return ctx.spec.path.generic_string() + ":" + std::to_string(line);
}

std::size_t need_column(const CsvTable& t, const SourceContext& ctx, std::initializer_list<const char*> names) {
  for (const char* n : names) {
    if (const auto c = t.column(n)) return *c;
  }
  throw ParseError(ctx.spec.path.generic_string() + ": missing column '" + *names.begin() + "'");
}

std::optional<std::size_t> find_column(const CsvTable& t, std::initializer_list<const char*> names) {
  for (const char* n : names) {
    if (const auto c = t.column(n)) return *c;
  }
  return std::nullopt;
}

// Per-column timestamp decoding with format auto-detection on first use.
class TimeColumn {
 public:
  TimeColumn(std::size_t column, const SourceContext& ctx, Report& report)
      : column_(column), ctx_(ctx), report_(report) {}

  std::size_t index() const { return column_; }

  std::optional<Millis> read(const CsvRow& row, const std::string& column_name) {
    const std::string& v = row.fields[column_];
    if (!format_) {
      format_ = detect_time_format(v);
      if (!format_) return std::nullopt;
      report_.info(ctx_.spec.path.generic_string() + "#" + column_name,
                   std::string("timestamps detected as ") + to_string(*format_));
    }
    return parse_time(v, *format_, ctx_.t0);
  }

 private:
  std::size_t column_;
  const SourceContext& ctx_;
  Report& report_;
  std::optional<TimeFormat> format_;
};

// Row-shape and time checks shared by all CSV parsers. Returns the
// session-relative time or nullopt after reporting the skip.
std::optional<Millis> row_time(const CsvTable& t, const CsvRow& row, TimeColumn& tc,
                               const SourceContext& ctx, Report& report) {
  if (row.fields.size() != t.header.size()) {
    report.warning(where(ctx, row.line), "row skipped: expected " + std::to_string(t.header.size()) +
                                             " fields, found " + std::to_string(row.fields.size()));
    return std::nullopt;
  }
  const auto ms = tc.read(row, t.header[tc.index()]);
  if (!ms) {
    report.warning(where(ctx, row.line), "row skipped: unparseable timestamp '" + row.fields[tc.index()] + "'");
    return std::nullopt;
  }
  if (*ms < 0) {
    report.warning(where(ctx, row.line), "row skipped: timestamp before session start");
    return std::nullopt;
  }
  return ms;
}

std::optional<std::vector<double>> numbers(const CsvRow& row, const std::vector<std::size_t>& cols) {
  std::vector<double> out;
  out.reserve(cols.size());
  for (std::size_t c : cols) {
    const auto v = parse_number(row.fields[c]);
    if (!v) return std::nullopt;
    out.push_back(*v);
  }
  return out;
}

void malformed(Report& report, const SourceContext& ctx, const CsvRow& row, const std::string& what) {
  report.warning(where(ctx, row.line), "row skipped: " + what);
}

// --- session sources -------------------------------------------------------

void parse_stream_csv(const SourceContext& ctx, SessionRecording& s, Report& report) {
  const CsvTable t = load_csv(ctx.file);
  const auto& o = ctx.spec.options;
  const std::string time_name = opt_str(o, "time_column", t.column("t") ? "t" : (t.header.empty() ? "t" : t.header[0]));
  const auto tcol = t.column(time_name);
  if (!tcol) throw ParseError(ctx.spec.path.generic_string() + ": missing time column '" + time_name + "'");

  std::vector<std::size_t> cols;
  if (o.contains("columns")) {
    for (const auto& c : o["columns"]) {
      const auto idx = t.column(c.get<std::string>());
      if (!idx) throw ParseError(ctx.spec.path.generic_string() + ": missing column '" + c.get<std::string>() + "'");
      cols.push_back(*idx);
    }
  } else {
    for (std::size_t i = 0; i < t.header.size(); ++i) {
      if (i != *tcol) cols.push_back(i);
    }
  }
  std::vector<SampledStream> streams(cols.size());
  for (std::size_t k = 0; k < cols.size(); ++k) {
    streams[k].name = cols.size() == 1 && o.contains("name") ? o["name"].get<std::string>() : t.header[cols[k]];
    if (o.contains("units") && o["units"].contains(t.header[cols[k]])) {
      streams[k].unit = o["units"][t.header[cols[k]]].get<std::string>();
    } else {
      streams[k].unit = opt_str(o, "unit", "");
    }
  }

  TimeColumn tc(*tcol, ctx, report);
  for (const auto& row : t.rows) {
    const auto ms = row_time(t, row, tc, ctx, report);
    if (!ms) continue;
    std::vector<std::optional<double>> vals;
    bool bad = false;
    for (std::size_t c : cols) {
      if (row.fields[c].empty()) {
        vals.emplace_back();
        continue;
      }
      const auto v = parse_number(row.fields[c]);
      if (!v) {
        bad = true;
        break;
      }
      vals.emplace_back(*v);
    }
    if (bad) {
      malformed(report, ctx, row, "non-numeric value");
      continue;
    }
    for (std::size_t k = 0; k < cols.size(); ++k) {
      if (vals[k]) streams[k].samples.push_back({*ms, *vals[k]});
    }
  }
  for (auto& st : streams) {
    std::stable_sort(st.samples.begin(), st.samples.end(),
                     [](const StreamSample& a, const StreamSample& b) { return a.t < b.t; });
    const double period = median_period_ms(st.samples);
    st.rate_hz = o.contains("rate_hz") ? o["rate_hz"].get<double>() : (period > 0.0 ? 1000.0 / period : 1.0);
    st.gaps = find_gaps(st.samples, st.rate_hz);
    s.streams.push_back(std::move(st));
  }
}

void adopt_joint_names(SessionRecording& s, std::vector<std::string> names, const SourceContext& ctx) {
  if (s.joint_names.empty()) {
    s.joint_names = std::move(names);
  } else if (s.joint_names != names) {
    throw ParseError(ctx.spec.path.generic_string() + ": joint set differs from an earlier skeleton source");
  }
}

void parse_skeleton_csv(const SourceContext& ctx, SessionRecording& s, Report& report) {
  const CsvTable t = load_csv(ctx.file);
  const std::size_t tcol = need_column(t, ctx, {"t", "time", "timestamp"});
  // Joint columns are "<joint>_px" ... "<joint>_qz"; rotation columns optional.
  std::vector<std::string> names;
  std::vector<std::array<std::optional<std::size_t>, 7>> cols;
  static const char* kSuffix[7] = {"_px", "_py", "_pz", "_qw", "_qx", "_qy", "_qz"};
  for (const auto& h : t.header) {
    if (h.size() > 3 && h.compare(h.size() - 3, 3, "_px") == 0) names.push_back(h.substr(0, h.size() - 3));
  }
  for (const auto& n : names) {
    std::array<std::optional<std::size_t>, 7> c;
    for (int k = 0; k < 7; ++k) c[k] = t.column(n + kSuffix[k]);
    if (!c[1] || !c[2]) throw ParseError(ctx.spec.path.generic_string() + ": joint '" + n + "' lacks position columns");
    cols.push_back(c);
  }
  adopt_joint_names(s, names, ctx);

  TimeColumn tc(tcol, ctx, report);
  for (const auto& row : t.rows) {
    const auto ms = row_time(t, row, tc, ctx, report);
    if (!ms) continue;
    SkeletonFrame f;
    f.t = *ms;
    bool ok = true;
    for (const auto& c : cols) {
      double v[7] = {0, 0, 0, 1, 0, 0, 0};
      for (int k = 0; k < 7 && ok; ++k) {
        if (!c[k]) continue;
        const auto x = parse_number(row.fields[*c[k]]);
        ok = x.has_value();
        if (ok) v[k] = *x;
      }
      f.joints.push_back({{v[0], v[1], v[2]}, {v[3], v[4], v[5], v[6]}});
    }
    if (!ok) {
      malformed(report, ctx, row, "non-numeric joint value");
      continue;
    }
    s.skeleton.push_back(std::move(f));
  }
}

void parse_skeleton_json(const SourceContext& ctx, SessionRecording& s, Report& report) {
  Json j;
  try {
    j = Json::parse(read_file(ctx.file));
  } catch (const Json::exception& e) {
    throw ParseError(ctx.spec.path.generic_string() + ": " + e.what());
  }
  std::vector<std::string> names = j.at("joint_names").get<std::vector<std::string>>();
  adopt_joint_names(s, names, ctx);
  std::optional<TimeFormat> tf;
  const auto& frames = j.at("frames");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& fr = frames[i];
    const std::string at = ctx.spec.path.generic_string() + "#frames[" + std::to_string(i) + "]";
    try {
      const std::string tv = fr.at("t").is_string() ? fr["t"].get<std::string>() : fr["t"].dump();
      if (!tf) tf = detect_time_format(tv);
      const auto ms = tf ? parse_time(tv, *tf, ctx.t0) : std::nullopt;
      if (!ms || *ms < 0) {
        report.warning(at, "frame skipped: bad timestamp");
        continue;
      }
      SkeletonFrame f;
      f.t = *ms;
      const auto& joints = fr.at("joints");
      if (joints.size() != names.size()) {
        report.warning(at, "frame skipped: joint count mismatch");
        continue;
      }
      for (const auto& jp : joints) {
        const auto v = jp.get<std::vector<double>>();
        if (v.size() != 7 && v.size() != 3) throw std::invalid_argument("joint needs 3 or 7 numbers");
        f.joints.push_back({{v[0], v[1], v[2]}, v.size() == 7 ? Quat{v[3], v[4], v[5], v[6]} : Quat::identity()});
      }
      s.skeleton.push_back(std::move(f));
    } catch (const std::exception& e) {
      report.warning(at, std::string("frame skipped: ") + e.what());
    }
  }
}

// Drive&Act-style 3D body pose export: "frame" column plus <joint>_x/_y/_z
// triples; frames converted with the video frame rate, no joint rotations.
void parse_driveact_poses(const SourceContext& ctx, SessionRecording& s, Report& report) {
  const CsvTable t = load_csv(ctx.file);
  const auto& o = ctx.spec.options;
  const double fps = opt_num(o, "fps", 15.0);
  const double scale = opt_num(o, "scale", 1.0);
  const auto offset = static_cast<Millis>(opt_num(o, "t_offset_ms", 0.0));
  if (!(fps > 0.0)) throw ParseError(ctx.spec.path.generic_string() + ": fps must be positive");
  std::map<std::string, std::string> rename{{"nose", "head"},        {"head", "head"},
                                            {"lWrist", "left_hand"}, {"left_wrist", "left_hand"},
                                            {"rWrist", "right_hand"}, {"right_wrist", "right_hand"}};
  if (o.contains("joint_map")) {
    for (const auto& [k, v] : o["joint_map"].items()) rename[k] = v.get<std::string>();
  }
  const std::size_t fcol = need_column(t, ctx, {"frame", "frame_id"});
  std::vector<std::string> names;
  std::vector<std::array<std::size_t, 3>> cols;
  std::unordered_set<std::string> seen;
  for (const auto& h : t.header) {
    if (h.size() < 3 || h.compare(h.size() - 2, 2, "_x") != 0) continue;
    const std::string raw = h.substr(0, h.size() - 2);
    const auto cy = t.column(raw + "_y");
    const auto cz = t.column(raw + "_z");
    if (!cy || !cz) continue;
    const auto it = rename.find(raw);
    std::string name = it == rename.end() ? raw : it->second;
    if (!seen.insert(name).second) continue;
    names.push_back(name);
    cols.push_back({*t.column(h), *cy, *cz});
  }
  adopt_joint_names(s, names, ctx);
  for (const auto& row : t.rows) {
    if (row.fields.size() != t.header.size()) {
      malformed(report, ctx, row, "expected " + std::to_string(t.header.size()) + " fields");
      continue;
    }
    const auto frame = parse_number(row.fields[fcol]);
    if (!frame || *frame < 0) {
      malformed(report, ctx, row, "bad frame index");
      continue;
    }
    SkeletonFrame f;
    f.t = std::llround(*frame * 1000.0 / fps) + offset;
    bool ok = true;
    for (const auto& c : cols) {
      const auto v = numbers(row, {c[0], c[1], c[2]});
      if (!v) {
        ok = false;
        break;
      }
      f.joints.push_back({{(*v)[0] * scale, (*v)[1] * scale, (*v)[2] * scale}, Quat::identity()});
    }
    if (!ok) {
      malformed(report, ctx, row, "missing joint coordinate");
      continue;
    }
    s.skeleton.push_back(std::move(f));
  }
}

void parse_gps_csv(const SourceContext& ctx, SessionRecording& s, Report& report) {
  const CsvTable t = load_csv(ctx.file);
  const std::size_t tcol = need_column(t, ctx, {"t", "time", "timestamp"});
  const std::size_t clat = need_column(t, ctx, {"lat", "latitude"});
  const std::size_t clon = need_column(t, ctx, {"lon", "lng", "longitude"});
  const auto calt = find_column(t, {"alt", "altitude"});
  const auto chead = find_column(t, {"heading", "course"});
  const auto cspeed = find_column(t, {"speed"});
  TimeColumn tc(tcol, ctx, report);
  for (const auto& row : t.rows) {
    const auto ms = row_time(t, row, tc, ctx, report);
    if (!ms) continue;
    const auto v = numbers(row, {clat, clon});
    if (!v || std::abs((*v)[0]) > 90.0 || std::abs((*v)[1]) > 180.0) {
      malformed(report, ctx, row, "bad latitude/longitude");
      continue;
    }
    GeoSample g;
    g.t = *ms;
    g.lat = (*v)[0];
    g.lon = (*v)[1];
    bool ok = true;
    auto optional_field = [&](std::optional<std::size_t> c, std::optional<double>& out) {
      if (!c || row.fields[*c].empty()) return;
      const auto x = parse_number(row.fields[*c]);
      if (!x) ok = false;
      out = x;
    };
    std::optional<double> alt;
    optional_field(calt, alt);
    optional_field(chead, g.heading);
    optional_field(cspeed, g.speed);
    if (!ok) {
      malformed(report, ctx, row, "non-numeric altitude/heading/speed");
      continue;
    }
    g.alt = alt.value_or(0.0);
    s.ego_path.push_back(g);
  }
}

void parse_rays_csv(const SourceContext& ctx, SessionRecording& s, Report& report) {
  const CsvTable t = load_csv(ctx.file);
  const RayModality modality = parse_ray_modality(opt_str(ctx.spec.options, "modality", "gaze"));
  const std::size_t tcol = need_column(t, ctx, {"t", "time", "timestamp"});
  std::vector<std::size_t> cols;
  for (const char* n : {"ox", "oy", "oz", "dx", "dy", "dz"}) cols.push_back(need_column(t, ctx, {n}));
  TimeColumn tc(tcol, ctx, report);
  auto& out = modality == RayModality::gaze ? s.gaze : s.pointing;
  for (const auto& row : t.rows) {
    const auto ms = row_time(t, row, tc, ctx, report);
    if (!ms) continue;
    const auto v = numbers(row, cols);
    if (!v) {
      malformed(report, ctx, row, "non-numeric ray component");
      continue;
    }
    const Vec3 dir{(*v)[3], (*v)[4], (*v)[5]};
    if (!(norm(dir) > 1e-12)) {
      malformed(report, ctx, row, "zero-length ray direction");
      continue;
    }
    out.push_back({*ms, {(*v)[0], (*v)[1], (*v)[2]}, normalized(dir), modality});
  }
}

void parse_touches_csv(const SourceContext& ctx, SessionRecording& s, Report& report) {
  const CsvTable t = load_csv(ctx.file);
  const std::size_t tcol = need_column(t, ctx, {"t", "time", "timestamp"});
  const std::size_t cmesh = need_column(t, ctx, {"mesh_id", "mesh"});
  std::vector<std::size_t> cols;
  for (const char* n : {"x", "y", "z"}) cols.push_back(need_column(t, ctx, {n}));
  TimeColumn tc(tcol, ctx, report);
  for (const auto& row : t.rows) {
    const auto ms = row_time(t, row, tc, ctx, report);
    if (!ms) continue;
    const auto v = numbers(row, cols);
    if (!v || row.fields[cmesh].empty()) {
      malformed(report, ctx, row, "bad touch position or mesh id");
      continue;
    }
    s.touches.push_back({*ms, row.fields[cmesh], {(*v)[0], (*v)[1], (*v)[2]}});
  }
}

void parse_events_csv(const SourceContext& ctx, SessionRecording& s, Report& report) {
  const CsvTable t = load_csv(ctx.file);
  const std::size_t cstart = need_column(t, ctx, {"t_start", "t"});
  const std::size_t ckind = need_column(t, ctx, {"kind"});
  const std::size_t clabel = need_column(t, ctx, {"label"});
  const auto cend = find_column(t, {"t_end"});
  const auto cid = find_column(t, {"id"});
  const auto cconf = find_column(t, {"confidence"});
  const auto csource = find_column(t, {"source"});
  std::unordered_set<std::size_t> known{cstart, ckind, clabel};
  for (auto c : {cend, cid, cconf, csource}) {
    if (c) known.insert(*c);
  }
  if (const auto cp = t.column("participant_id")) known.insert(*cp);

  std::unordered_set<std::string> used;
  for (const auto& e : s.events) used.insert(e.id);
  TimeColumn tc(cstart, ctx, report);
  std::optional<TimeFormat> end_format;
  int n = 0;
  for (const auto& row : t.rows) {
    const auto ms = row_time(t, row, tc, ctx, report);
    if (!ms) continue;
    EventRecord e;
    e.t_start = *ms;
    e.t_end = *ms;
    if (cend && !row.fields[*cend].empty()) {
      if (!end_format) end_format = detect_time_format(row.fields[*cend]);
      const auto te = end_format ? parse_time(row.fields[*cend], *end_format, ctx.t0) : std::nullopt;
      if (!te) {
        malformed(report, ctx, row, "unparseable t_end");
        continue;
      }
      e.t_end = *te;
    }
    try {
      e.kind = parse_event_kind(row.fields[ckind]);
      if (csource && !row.fields[*csource].empty()) e.source = parse_event_source(row.fields[*csource]);
    } catch (const std::invalid_argument& err) {
      malformed(report, ctx, row, err.what());
      continue;
    }
    if (cconf && !row.fields[*cconf].empty()) {
      const auto c = parse_number(row.fields[*cconf]);
      if (!c) {
        malformed(report, ctx, row, "non-numeric confidence");
        continue;
      }
      e.confidence = *c;
    }
    e.label = row.fields[clabel];
    e.participant_id = s.participant_id;
    for (std::size_t c = 0; c < t.header.size(); ++c) {
      if (!known.count(c) && !row.fields[c].empty()) e.attrs[t.header[c]] = row.fields[c];
    }
    std::string base = cid && !row.fields[*cid].empty() ? row.fields[*cid]
                                                         : ctx.spec.name + "-" + s.participant_id + "-" + std::to_string(n + 1);
    ++n;
    e.id = base;
    for (int k = 2; used.count(e.id); ++k) e.id = base + "~" + std::to_string(k);
    if (e.id != base) report.warning(where(ctx, row.line), "duplicate event id '" + base + "' renamed to '" + e.id + "'");
    used.insert(e.id);
    s.events.push_back(std::move(e));
  }
}

void parse_speech_csv(const SourceContext& ctx, SessionRecording& s, Report& report) {
  const CsvTable t = load_csv(ctx.file);
  const std::size_t cstart = need_column(t, ctx, {"t_start"});
  const std::size_t cend = need_column(t, ctx, {"t_end"});
  const std::size_t ctext = need_column(t, ctx, {"transcript", "text"});
  const auto cref = find_column(t, {"referent"});
  TimeColumn tc(cstart, ctx, report);
  std::optional<TimeFormat> end_format;
  for (const auto& row : t.rows) {
    const auto ms = row_time(t, row, tc, ctx, report);
    if (!ms) continue;
    if (!end_format) end_format = detect_time_format(row.fields[cend]);
    const auto te = end_format ? parse_time(row.fields[cend], *end_format, ctx.t0) : std::nullopt;
    if (!te || *te < *ms) {
      malformed(report, ctx, row, "bad t_end");
      continue;
    }
    SpeechSegment seg{*ms, *te, row.fields[ctext], std::nullopt};
    if (cref && !row.fields[*cref].empty()) seg.referent = row.fields[*cref];
    s.speech.push_back(std::move(seg));
  }
}

void parse_road_users_csv(const SourceContext& ctx, SessionRecording& s, Report& report) {
  const CsvTable t = load_csv(ctx.file);
  const std::size_t tcol = need_column(t, ctx, {"t", "time", "timestamp"});
  const std::size_t cid = need_column(t, ctx, {"object_id", "id"});
  const std::size_t cclass = need_column(t, ctx, {"class", "object_class"});
  std::vector<std::size_t> cols;
  for (const char* n : {"x", "y", "z"}) cols.push_back(need_column(t, ctx, {n}));
  TimeColumn tc(tcol, ctx, report);
  for (const auto& row : t.rows) {
    const auto ms = row_time(t, row, tc, ctx, report);
    if (!ms) continue;
    const auto v = numbers(row, cols);
    if (!v || row.fields[cid].empty()) {
      malformed(report, ctx, row, "bad road-user position or id");
      continue;
    }
    ObjectClass cls = ObjectClass::other;
    try {
      cls = parse_object_class(row.fields[cclass]);
    } catch (const std::invalid_argument& e) {
      malformed(report, ctx, row, e.what());
      continue;
    }
    s.road_users.push_back({*ms, row.fields[cid], cls, {(*v)[0], (*v)[1], (*v)[2]}});
  }
}

void parse_media(const SourceContext& ctx, SessionRecording& s, Report&) {
  const auto& o = ctx.spec.options;
  MediaRef m;
  m.path = ctx.spec.path.generic_string();
  m.kind = parse_media_kind(opt_str(o, "kind", "video"));
  m.t_offset = static_cast<Millis>(opt_num(o, "t_offset", 0.0));
  s.media.push_back(std::move(m));
}

void parse_interval_source(const SourceContext& ctx, SessionRecording& s, Report& report) {
  ImportOptions opt;
  opt.fps = opt_num(ctx.spec.options, "fps", 15.0);
  if (ctx.spec.options.contains("participant")) opt.participant = ctx.spec.options["participant"].get<std::string>();
  opt.t_offset = static_cast<Millis>(opt_num(ctx.spec.options, "t_offset_ms", 0.0));
  try {
    import_annotations_into(s, ctx.file, parse_annotation_format(ctx.spec.format), report, opt);
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
}

// --- scene sources ---------------------------------------------------------

void parse_geojson_footprints(const SourceContext& ctx, SceneDescription& scene, Report& report) {
  Json j;
  try {
    j = Json::parse(read_file(ctx.file));
  } catch (const Json::exception& e) {
    throw ParseError(ctx.spec.path.generic_string() + ": " + e.what());
  }
  if (j.value("type", "") != "FeatureCollection" || !j.contains("features")) {
    throw ParseError(ctx.spec.path.generic_string() + ": expected a GeoJSON FeatureCollection");
  }
  const auto& features = j["features"];
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& f = features[i];
    const std::string at = ctx.spec.path.generic_string() + "#features[" + std::to_string(i) + "]";
    try {
      const auto& geom = f.at("geometry");
      if (geom.at("type").get<std::string>() != "Polygon") {
        report.warning(at, "feature skipped: geometry is not a Polygon");
        continue;
      }
      const Json props = f.contains("properties") && f["properties"].is_object() ? f["properties"] : Json::object();
      BuildingFootprint fp;
      if (f.contains("id")) {
        fp.id = f["id"].is_string() ? f["id"].get<std::string>() : f["id"].dump();
      } else if (props.contains("id")) {
        fp.id = props["id"].is_string() ? props["id"].get<std::string>() : props["id"].dump();
      } else {
        fp.id = "fp" + std::to_string(i);
      }
      fp.name = props.value("name", "");
      if (props.contains("height") && props["height"].is_number()) fp.height = props["height"].get<double>();
      // Outer ring only; GeoJSON positions are [lon, lat].
      for (const auto& pos : geom.at("coordinates").at(0)) {
        fp.polygon.push_back({pos.at(1).get<double>(), pos.at(0).get<double>()});
      }
      if (fp.polygon.size() > 1 && fp.polygon.front() == fp.polygon.back()) fp.polygon.pop_back();
      std::vector<Vec2> ring;
      for (const auto& ll : fp.polygon) ring.push_back({ll.lon, ll.lat});
      if (fp.polygon.size() < 3 || !is_simple_polygon(ring)) {
        report.warning(at, "footprint skipped: polygon is not simple");
        continue;
      }
      scene.footprints.push_back(std::move(fp));
    } catch (const Json::exception& e) {
      report.warning(at, std::string("feature skipped: ") + e.what());
    }
  }
}

void parse_obj_source(const SourceContext& ctx, SceneDescription& scene, Report&) {
  const auto& o = ctx.spec.options;
  MeshAsset m = load_obj(ctx.file, opt_str(o, "id", ctx.spec.name),
                         parse_mesh_role(opt_str(o, "role", "interior")));
  m.name = opt_str(o, "name", "");
  scene.meshes.push_back(std::move(m));
}

}  // namespace

void ParserRegistry::add_session_parser(const std::string& format, SessionParser parser) {
  session_[format] = std::move(parser);
}

void ParserRegistry::add_scene_parser(const std::string& format, SceneParser parser) {
  scene_[format] = std::move(parser);
}

const SessionParser* ParserRegistry::session_parser(const std::string& format) const {
  const auto it = session_.find(format);
  return it == session_.end() ? nullptr : &it->second;
}

const SceneParser* ParserRegistry::scene_parser(const std::string& format) const {
  const auto it = scene_.find(format);
  return it == scene_.end() ? nullptr : &it->second;
}

bool ParserRegistry::knows(const std::string& format) const {
  return session_.count(format) || scene_.count(format);
}

const ParserRegistry& ParserRegistry::builtin() {
  static const ParserRegistry registry = [] {
    ParserRegistry r;
    r.add_session_parser("stream_csv", parse_stream_csv);
    r.add_session_parser("skeleton_csv", parse_skeleton_csv);
    r.add_session_parser("skeleton_json", parse_skeleton_json);
    r.add_session_parser("driveact_poses", parse_driveact_poses);
    r.add_session_parser("gps_csv", parse_gps_csv);
    r.add_session_parser("rays_csv", parse_rays_csv);
    r.add_session_parser("touches_csv", parse_touches_csv);
    r.add_session_parser("events_csv", parse_events_csv);
    r.add_session_parser("speech_csv", parse_speech_csv);
    r.add_session_parser("road_users_csv", parse_road_users_csv);
    r.add_session_parser("media", parse_media);
    r.add_session_parser("driveact_activities", parse_interval_source);
    r.add_session_parser("generic_intervals", parse_interval_source);
    r.add_scene_parser("geojson_footprints", parse_geojson_footprints);
    r.add_scene_parser("obj", parse_obj_source);
    return r;
  }();
  return registry;
}

}  // namespace drivelab
