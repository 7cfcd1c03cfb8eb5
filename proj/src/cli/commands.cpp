#include "drivelab/cli/commands.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <ostream>

#include "drivelab/analytics/avatars.hpp"
#include "drivelab/analytics/heatmap.hpp"
#include "drivelab/analytics/heatmap_export.hpp"
#include "drivelab/analytics/layout.hpp"
#include "drivelab/analytics/metrics.hpp"
#include "drivelab/analytics/portals.hpp"
#include "drivelab/analytics/trajectory.hpp"
#include "drivelab/collab/server.hpp"
#include "drivelab/fixtures/synthetic.hpp"
#include "drivelab/ingest/ingest.hpp"
#include "drivelab/parallel.hpp"

namespace drivelab {

namespace fs = std::filesystem;

namespace {

constexpr double kDefaultEpsilon = 0.05;        // metres
constexpr double kDefaultAggregateRate = 10.0;  // Hz

void emit(CommandOutput io, const Json& summary, const std::string& text) {
  if (io.json) {
    io.out << canonical_dump(summary) << "\n";
  } else {
    io.out << text;
    if (!text.empty() && text.back() != '\n') io.out << "\n";
  }
  io.out.flush();
}

int fail(CommandOutput io, const std::string& command, int code, const std::string& message) {
  emit(io, {{"command", command}, {"ok", false}, {"exit_code", code}, {"error", message}}, "error: " + message);
  return code;
}

template <class T>
std::optional<T> setting(const Json& j, const char* key) {
  if (!j.contains(key)) return std::nullopt;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ParseError(std::string("settings: bad value for '") + key + "': " + e.what());
  }
}

HeatmapParams heatmap_params(const RunSettings& s) {
  HeatmapParams p;
  if (s.sigma_interior) p.sigma_interior = *s.sigma_interior;
  if (s.sigma_environment) {
    p.sigma_building = *s.sigma_environment;
    p.sigma_ground = *s.sigma_environment;
  }
  if (s.heatmap_res) p.resolution = *s.heatmap_res;
  if (s.threads) p.threads = *s.threads;
  return p;
}

std::string write_json(const fs::path& path, const Json& j) {
  write_file(path, canonical_dump(j) + "\n");
  return path.filename().string();
}

struct ProductResult {
  std::vector<std::string> files;
  Report report;
};

ProductResult run_heatmaps(const ConfigDocument& doc, const fs::path& out, const RunSettings& s) {
  ProductResult r;
  const auto layers = compute_heatmaps(doc, heatmap_params(s), &r.report);
  write_heatmaps(layers, out / "heatmaps");
  r.files.push_back("heatmaps/heatmaps.json");
  for (const auto& l : layers) {
    r.files.push_back("heatmaps/" + l.id + ".f32");
    r.files.push_back("heatmaps/" + l.id + ".png");
  }
  return r;
}

ProductResult run_aggregate(const ConfigDocument& doc, const fs::path& out, const RunSettings& s) {
  ProductResult r;
  const double rate = s.aggregate_rate.value_or(kDefaultAggregateRate);
  std::vector<std::string> conditions = doc.study_meta.conditions;
  for (const auto& sess : doc.sessions) {
    if (std::find(conditions.begin(), conditions.end(), sess.condition) == conditions.end()) {
      conditions.push_back(sess.condition);
    }
  }
  Json groups = Json::array();
  for (const auto& cond : conditions) {
    std::vector<const SessionRecording*> members;
    Millis t_end = -1;
    for (const auto& sess : doc.sessions) {
      if (sess.condition != cond || sess.skeleton.empty()) continue;
      members.push_back(&sess);
      const Millis last = sess.skeleton.back().t;
      t_end = t_end < 0 ? last : std::min(t_end, last);
    }
    if (members.empty()) continue;
    try {
      const auto agg = aggregate_avatars(members, 0, t_end, rate, &r.report);
      groups.push_back({{"condition", cond}, {"aggregate", agg}});
    } catch (const std::invalid_argument& e) {
      r.report.warning("aggregate." + cond, e.what());
    }
  }
  r.files.push_back(write_json(out / "aggregate.json", groups));
  return r;
}

ProductResult run_trajectories(const ConfigDocument& doc, const fs::path& out, const RunSettings& s) {
  ProductResult r;
  const double eps = s.epsilon.value_or(kDefaultEpsilon);
  if (eps < 0) throw std::invalid_argument("epsilon must be non-negative");
  std::vector<std::pair<const SessionRecording*, std::string>> jobs;
  for (const auto& sess : doc.sessions) {
    for (const auto& joint : trajectory_joints()) {
      if (std::find(sess.joint_names.begin(), sess.joint_names.end(), joint) != sess.joint_names.end()) {
        jobs.emplace_back(&sess, joint);
      }
    }
  }
  std::vector<Json> results(jobs.size());
  parallel_for(jobs.size(), s.threads.value_or(1), [&](std::size_t i) {
    const auto& [sess, joint] = jobs[i];
    results[i] = simplify_trajectory(extract_trajectory(*sess, joint, 0, sess->duration), eps);
  });
  Json all = Json::array();
  for (auto& j : results) all.push_back(std::move(j));
  r.files.push_back(write_json(out / "trajectories.json", all));
  return r;
}

ProductResult run_portals(const ConfigDocument& doc, const fs::path& out, const RunSettings& s) {
  ProductResult r;
  std::optional<OfflineGazetteer> places;
  if (s.gazetteer) places = OfflineGazetteer::load(*s.gazetteer);
  const auto portals = resolve_portals(doc, places ? &*places : nullptr, &r.report);
  r.files.push_back(write_json(out / "portals.json", portals));
  return r;
}

ProductResult run_layout(const ConfigDocument& doc, const fs::path& out, const RunSettings&) {
  ProductResult r;
  const Json j = {{"collapsed", layout_document_events(doc, LayoutMode::collapsed, &r.report)},
                  {"exploded", layout_document_events(doc, LayoutMode::exploded, nullptr)}};
  r.files.push_back(write_json(out / "layout.json", j));
  return r;
}

ProductResult run_metrics(const ConfigDocument& doc, const fs::path& out, const RunSettings&) {
  ProductResult r;
  const auto m = modality_sequence_metrics(doc);
  write_file(out / "metrics.csv", metrics_csv(m));
  r.files.push_back("metrics.csv");
  r.files.push_back(write_json(out / "metrics.json", m));
  return r;
}

using ProductFn = ProductResult (*)(const ConfigDocument&, const fs::path&, const RunSettings&);

const std::map<std::string, ProductFn>& product_table() {
  static const std::map<std::string, ProductFn> table = {
      {"heatmaps", run_heatmaps}, {"aggregate", run_aggregate}, {"trajectories", run_trajectories},
      {"portals", run_portals},   {"layout", run_layout},       {"metrics", run_metrics}};
  return table;
}

}  // namespace

RunSettings load_settings(const fs::path& path) {
  const Json j = parse_json(read_file(path), path.string());
  if (!j.is_object()) throw ParseError("settings: expected a JSON object");
  static const std::set<std::string> known = {"sigma_interior", "sigma_environment", "heatmap_res", "epsilon",
                                              "threads",        "aggregate_rate",    "gazetteer",   "products",
                                              "detectors"};
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw ParseError("settings: unknown key '" + k + "'");
  }
  RunSettings s;
  s.sigma_interior = setting<double>(j, "sigma_interior");
  s.sigma_environment = setting<double>(j, "sigma_environment");
  s.heatmap_res = setting<int>(j, "heatmap_res");
  s.epsilon = setting<double>(j, "epsilon");
  s.threads = setting<int>(j, "threads");
  s.aggregate_rate = setting<double>(j, "aggregate_rate");
  if (const auto g = setting<std::string>(j, "gazetteer")) {
    const fs::path p(*g);
    s.gazetteer = p.is_relative() ? path.parent_path() / p : p;
  }
  s.products = setting<std::vector<std::string>>(j, "products");
  if (j.contains("detectors")) {
    if (!j["detectors"].is_array()) throw ParseError("settings: 'detectors' must be an array");
    s.detectors = j["detectors"];
  }
  return s;
}

RunSettings merge_settings(RunSettings flags, const RunSettings& file) {
  if (!flags.sigma_interior) flags.sigma_interior = file.sigma_interior;
  if (!flags.sigma_environment) flags.sigma_environment = file.sigma_environment;
  if (!flags.heatmap_res) flags.heatmap_res = file.heatmap_res;
  if (!flags.epsilon) flags.epsilon = file.epsilon;
  if (!flags.threads) flags.threads = file.threads;
  if (!flags.aggregate_rate) flags.aggregate_rate = file.aggregate_rate;
  if (!flags.gazetteer) flags.gazetteer = file.gazetteer;
  if (!flags.products) flags.products = file.products;
  if (!flags.detectors) flags.detectors = file.detectors;
  return flags;
}

int cmd_ingest(const fs::path& manifest, const fs::path& out_config, const RunSettings& settings, CommandOutput io) {
  Report report;
  ConfigDocument doc;
  try {
    SourceBundle bundle = load_manifest(manifest);
    if (settings.detectors) {
      bundle.detectors.clear();
      for (const auto& d : *settings.detectors) {
        DetectorSpec spec;
        spec.name = d.at("name").get<std::string>();
        if (d.contains("params")) {
          for (const auto& [k, v] : d["params"].items()) spec.params[k] = v.is_string() ? v.get<std::string>() : v.dump();
        }
        bundle.detectors.push_back(std::move(spec));
      }
    }
    doc = ingest(bundle, bundle.study_meta.value_or(StudyMeta{}), report);
  } catch (const std::exception& e) {
    return fail(io, "ingest", kExitEnvironment, e.what());
  }
  report.merge(validate(doc));
  try {
    save_document(doc, out_config);
  } catch (const std::exception& e) {
    return fail(io, "ingest", kExitEnvironment, e.what());
  }
  const int code = report.ok() ? kExitOk : kExitValidation;
  emit(io,
       {{"command", "ingest"}, {"ok", code == kExitOk}, {"exit_code", code}, {"config", out_config.string()},
        {"report", report}},
       to_text(report) + "wrote " + out_config.string() + "\n");
  return code;
}

int cmd_validate(const fs::path& config, CommandOutput io) {
  ConfigDocument doc;
  try {
    doc = load_document(config);
  } catch (const std::exception& e) {
    return fail(io, "validate", kExitEnvironment, e.what());
  }
  const Report report = validate(doc);
  const int code = report.ok() ? kExitOk : kExitValidation;
  emit(io, {{"command", "validate"}, {"ok", code == kExitOk}, {"exit_code", code}, {"report", report}},
       to_text(report));
  return code;
}

const std::vector<std::string>& analysis_products() {
  static const std::vector<std::string> names = {"heatmaps", "aggregate", "trajectories", "portals", "layout",
                                                 "metrics"};
  return names;
}

int cmd_analyze(const fs::path& config, const std::vector<std::string>& products, const fs::path& out_dir,
                const RunSettings& settings, CommandOutput io) {
  std::vector<std::string> wanted;
  for (const auto& p : products.empty() ? analysis_products() : products) {
    if (!product_table().count(p)) return fail(io, "analyze", kExitEnvironment, "unknown product '" + p + "'");
    if (std::find(wanted.begin(), wanted.end(), p) == wanted.end()) wanted.push_back(p);
  }
  ConfigDocument doc;
  try {
    doc = load_document(config);
  } catch (const std::exception& e) {
    return fail(io, "analyze", kExitEnvironment, e.what());
  }
  Report report = validate(doc);
  if (!report.ok()) {
    emit(io, {{"command", "analyze"}, {"ok", false}, {"exit_code", kExitValidation}, {"report", report}},
         to_text(report));
    return kExitValidation;
  }

  std::vector<ProductResult> results(wanted.size());
  std::vector<std::string> errors(wanted.size());
  try {
    fs::create_directories(out_dir);
  } catch (const std::exception& e) {
    return fail(io, "analyze", kExitEnvironment, e.what());
  }
  parallel_for(wanted.size(), settings.threads.value_or(1), [&](std::size_t i) {
    try {
      results[i] = product_table().at(wanted[i])(doc, out_dir, settings);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  Json files = Json::object();
  std::string text;
  int code = kExitOk;
  for (std::size_t i = 0; i < wanted.size(); ++i) {
    report.merge(results[i].report);
    if (!errors[i].empty()) {
      report.error("products." + wanted[i], errors[i]);
      code = kExitEnvironment;
      continue;
    }
    files[wanted[i]] = results[i].files;
    text += wanted[i] + ": " + std::to_string(results[i].files.size()) + " file(s)\n";
  }
  emit(io,
       {{"command", "analyze"}, {"ok", code == kExitOk}, {"exit_code", code}, {"out", out_dir.string()},
        {"files", files}, {"report", report}},
       to_text(report) + text + "output in " + out_dir.string() + "\n");
  return code;
}

std::pair<std::string, unsigned short> parse_bind(const std::string& bind) {
  std::string host = "127.0.0.1";
  std::string port = bind;
  if (const auto colon = bind.rfind(':'); colon != std::string::npos) {
    if (colon > 0) host = bind.substr(0, colon);
    port = bind.substr(colon + 1);
  }
  unsigned value = 0;
  const auto [p, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
  if (ec != std::errc() || p != port.data() + port.size() || value > 65535 || port.empty()) {
    throw std::invalid_argument("bad bind address '" + bind + "'");
  }
  return {host, static_cast<unsigned short>(value)};
}

int cmd_serve(const ServeOptions& options, const RunSettings& settings, CommandOutput io) {
  ServerOptions server_options;
  try {
    std::tie(server_options.address, server_options.port) = parse_bind(options.bind);
  } catch (const std::exception& e) {
    return fail(io, "serve", kExitEnvironment, e.what());
  }
  server_options.static_dir = options.static_dir;
  server_options.threads = std::max(2, settings.threads.value_or(2));
  server_options.handle_signals = true;

  fs::path root = options.data_dir.empty() ? default_data_dir() : options.data_dir;
  std::string focus;
  if (options.session_dir) {
    const fs::path dir = fs::absolute(*options.session_dir);
    if (!fs::exists(dir / "config.json")) {
      return fail(io, "serve", kExitEnvironment, "not a session directory: " + dir.string());
    }
    root = dir.parent_path();
    focus = dir.filename().string();
  }

  Report report;
  std::unique_ptr<SessionStore> store;
  try {
    store = std::make_unique<SessionStore>(root, Clock{}, heatmap_params(settings));
    store->restore_all(&report);
  } catch (const std::exception& e) {
    return fail(io, "serve", kExitEnvironment, e.what());
  }
  if (options.session_dir && !store->get(focus)) {
    return fail(io, "serve", kExitEnvironment, "cannot restore session " + focus + ": " + to_text(report));
  }
  // Bind before hosting so a busy port leaves no orphan session behind.
  Server server(*store, server_options);
  try {
    server.start();
  } catch (const std::exception& e) {
    return fail(io, "serve", kExitEnvironment, e.what());
  }
  if (options.config) {
    ConfigDocument doc;
    try {
      doc = load_document(*options.config);
    } catch (const std::exception& e) {
      return fail(io, "serve", kExitEnvironment, e.what());
    }
    auto hosted = store->host(doc, report);
    if (!hosted) {
      emit(io, {{"command", "serve"}, {"ok", false}, {"exit_code", kExitValidation}, {"report", report}},
           to_text(report));
      return kExitValidation;
    }
    focus = hosted->id();
  }

  const std::string url = "http://" + server_options.address + ":" + std::to_string(server.port());
  Json sessions = Json::array();
  std::string text = "serving " + url + " (data " + root.string() + ")\n";
  for (const auto& s : store->list()) {
    sessions.push_back({{"id", s->id()}, {"token", s->token()}, {"seq", s->state().seq}});
    text += "  session " + s->id() + " token " + s->token() + (s->id() == focus ? "  <- this run" : "") + "\n";
  }
  Json started = {{"command", "serve"}, {"ok", true}, {"url", url}, {"data_dir", root.string()},
                  {"sessions", sessions}, {"report", report}};
  if (!focus.empty()) started["session"] = focus;
  emit(io, started, text);
  server.run();
  emit(io, {{"command", "serve"}, {"event", "stopped"}, {"ok", true}, {"exit_code", kExitOk}}, "stopped; ledgers flushed");
  return kExitOk;
}

int cmd_export(const fs::path& session_dir, const fs::path& out_config, CommandOutput io) {
  try {
    ConfigDocument doc = load_document(session_dir / "config.json");
    const auto ledger = read_ledger(session_dir / "ledger.ndjson");
    const SessionState state = replay_ledger(doc, ledger.messages);
    save_document(materialized_document(std::move(doc), state), out_config);
    Json summary = {{"command", "export"}, {"ok", true}, {"exit_code", kExitOk}, {"seq", state.seq},
                    {"annotations", state.annotations.size()}, {"config", out_config.string()},
                    {"truncated_tail", ledger.truncated_tail}};
    emit(io, summary,
         "replayed " + std::to_string(state.seq) + " message(s); wrote " + out_config.string() +
             (ledger.truncated_tail ? " (ignored a torn final ledger line)" : ""));
    return kExitOk;
  } catch (const std::exception& e) {
    return fail(io, "export", kExitEnvironment, e.what());
  }
}

int cmd_fixture(const std::string& kind, const fs::path& out_dir, CommandOutput io) {
  try {
    fs::path manifest;
    if (kind == "multimodal") {
      manifest = write_multimodal_fixture(out_dir);
    } else if (kind == "driveact") {
      manifest = write_driveact_fixture(out_dir);
    } else {
      return fail(io, "fixture", kExitEnvironment, "unknown fixture '" + kind + "' (multimodal, driveact)");
    }
    emit(io, {{"command", "fixture"}, {"ok", true}, {"exit_code", kExitOk}, {"manifest", manifest.string()}},
         "wrote " + manifest.string());
    return kExitOk;
  } catch (const std::exception& e) {
    return fail(io, "fixture", kExitEnvironment, e.what());
  }
}

}  // namespace drivelab
