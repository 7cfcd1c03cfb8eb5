#include <CLI11.hpp>

#include <iostream>

#include "drivelab/cli/commands.hpp"

using namespace drivelab;

namespace {

std::vector<std::string> split_products(const std::vector<std::string>& raw) {
  std::vector<std::string> out;
  for (const auto& item : raw) {
    std::size_t pos = 0;
    while (pos <= item.size()) {
      const auto comma = item.find(',', pos);
      const auto end = comma == std::string::npos ? item.size() : comma;
      if (end > pos) out.push_back(item.substr(pos, end - pos));
      pos = end + 1;
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"drivelab: multimodal driving-study analysis, replay and collaboration server"};
  app.require_subcommand(1);
  app.fallthrough();

  bool json = false;
  std::string settings_path;
  RunSettings flags;
  app.add_flag("--json", json, "Print a JSON report on stdout");
  app.add_option("--settings", settings_path, "JSON settings file; flags take precedence")->check(CLI::ExistingFile);

  std::string manifest;
  std::string config;
  std::string out;
  std::vector<std::string> products;

  auto* ingest = app.add_subcommand("ingest", "Build a canonical config document from a manifest");
  ingest->add_option("--manifest", manifest, "manifest.json of the study bundle")->required();
  ingest->add_option("--out", out, "Output config path")->required();

  auto* validate = app.add_subcommand("validate", "Check a config document");
  validate->add_option("--config", config, "Config document")->required();

  auto* analyze = app.add_subcommand("analyze", "Compute analysis artifacts headless");
  analyze->add_option("--config", config, "Config document")->required();
  analyze->add_option("--out", out, "Output directory")->required();
  analyze->add_option("--products", products, "Comma list: heatmaps,aggregate,trajectories,portals,layout,metrics")
      ->delimiter(',');
  double sigma_interior = 0;
  double sigma_environment = 0;
  int heatmap_res = 0;
  double epsilon = 0;
  int threads = 0;
  double aggregate_rate = 0;
  std::string gazetteer;
  auto* o_si = analyze->add_option("--sigma-interior", sigma_interior, "Kernel sigma on interior meshes, m");
  auto* o_se = analyze->add_option("--sigma-environment", sigma_environment, "Kernel sigma on buildings and ground, m");
  auto* o_res = analyze->add_option("--heatmap-res", heatmap_res, "Heatmap texture resolution per mesh");
  auto* o_eps = analyze->add_option("--epsilon", epsilon, "Trajectory simplification tolerance, m");
  auto* o_thr = app.add_option("--threads", threads, "Worker threads");
  auto* o_rate = analyze->add_option("--aggregate-rate", aggregate_rate, "Aggregated avatar sampling rate, Hz");
  auto* o_gaz = analyze->add_option("--gazetteer", gazetteer, "Offline gazetteer JSON for indirect portals");

  ServeOptions serve_options;
  std::string serve_config;
  std::string session_dir;
  std::string data_dir;
  std::string static_dir;
  auto* serve = app.add_subcommand("serve", "Host a collaborative analysis session over HTTP and WebSocket");
  auto* o_sc = serve->add_option("--config", serve_config, "Host a new session from this config");
  auto* o_sd = serve->add_option("--session-dir", session_dir, "Reopen an existing session directory");
  o_sc->excludes(o_sd);
  serve->add_option("--bind", serve_options.bind, "host:port")->capture_default_str();
  serve->add_option("--data-dir", data_dir, "Session root (default: $AUTOVIS_DATA_DIR)");
  serve->add_option("--static", static_dir, "Directory of console assets to serve");
  auto* o_ssi = serve->add_option("--sigma-interior", sigma_interior, "Kernel sigma on interior meshes, m");
  auto* o_sse = serve->add_option("--sigma-environment", sigma_environment, "Kernel sigma on buildings and ground, m");
  auto* o_sres = serve->add_option("--heatmap-res", heatmap_res, "Heatmap texture resolution per mesh");

  std::string export_session;
  auto* exp = app.add_subcommand("export", "Write a session's document with its ledger applied");
  exp->add_option("--session-dir", export_session, "Session directory")->required();
  exp->add_option("--out", out, "Output config path")->required();

  std::string fixture_kind = "multimodal";
  auto* fixture = app.add_subcommand("fixture", "Write a bundled synthetic study bundle");
  fixture->add_option("--kind", fixture_kind, "multimodal or driveact")->capture_default_str();
  fixture->add_option("--out", out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitEnvironment;
  }

  const CommandOutput io{std::cout, json};
  const auto set_if = [](CLI::Option* opt, auto& target, auto value) {
    if (opt->count() > 0) target = value;
  };
  set_if(o_si, flags.sigma_interior, sigma_interior);
  set_if(o_se, flags.sigma_environment, sigma_environment);
  set_if(o_res, flags.heatmap_res, heatmap_res);
  set_if(o_eps, flags.epsilon, epsilon);
  set_if(o_thr, flags.threads, threads);
  set_if(o_rate, flags.aggregate_rate, aggregate_rate);
  if (o_gaz->count() > 0) flags.gazetteer = gazetteer;
  set_if(o_ssi, flags.sigma_interior, sigma_interior);
  set_if(o_sse, flags.sigma_environment, sigma_environment);
  set_if(o_sres, flags.heatmap_res, heatmap_res);
  if (!products.empty()) flags.products = split_products(products);

  RunSettings settings = flags;
  if (!settings_path.empty()) {
    try {
      settings = merge_settings(flags, load_settings(settings_path));
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitEnvironment;
    }
  }

  if (*ingest) return cmd_ingest(manifest, out, settings, io);
  if (*validate) return cmd_validate(config, io);
  if (*analyze) return cmd_analyze(config, settings.products.value_or(std::vector<std::string>{}), out, settings, io);
  if (*serve) {
    if (!serve_config.empty()) serve_options.config = serve_config;
    if (!session_dir.empty()) serve_options.session_dir = session_dir;
    serve_options.data_dir = data_dir;
    serve_options.static_dir = static_dir;
    return cmd_serve(serve_options, settings, io);
  }
  if (*exp) return cmd_export(export_session, out, io);
  if (*fixture) return cmd_fixture(fixture_kind, out, io);
  return kExitEnvironment;
}
