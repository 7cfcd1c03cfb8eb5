#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "drivelab/json_io.hpp"

namespace drivelab {

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitEnvironment = 2;

/// Values that may come from flags or a --settings JSON file (flags win).
struct RunSettings {
  std::optional<double> sigma_interior;
  std::optional<double> sigma_environment;
  std::optional<int> heatmap_res;
  std::optional<double> epsilon;
  std::optional<int> threads;
  std::optional<double> aggregate_rate;
  std::optional<std::filesystem::path> gazetteer;
  std::optional<std::vector<std::string>> products;
  /// Replaces the manifest's detector list: [{"name", "params"}].
  std::optional<Json> detectors;
};

/// Reads a settings file. Keys mirror the long flag names with '_' for '-'.
/// Throws ParseError for unknown keys or wrong types.
RunSettings load_settings(const std::filesystem::path& path);
/// Fills every unset field of `flags` from `file`.
RunSettings merge_settings(RunSettings flags, const RunSettings& file);

struct CommandOutput {
  std::ostream& out;
  bool json = false;
};

int cmd_ingest(const std::filesystem::path& manifest, const std::filesystem::path& out_config,
               const RunSettings& settings, CommandOutput io);

int cmd_validate(const std::filesystem::path& config, CommandOutput io);

const std::vector<std::string>& analysis_products();

/// Writes the requested products into out_dir:
///   heatmaps/ (<layer>.f32, <layer>.png, heatmaps.json), aggregate.json,
///   trajectories.json, portals.json, layout.json, metrics.csv + metrics.json.
int cmd_analyze(const std::filesystem::path& config, const std::vector<std::string>& products,
                const std::filesystem::path& out_dir, const RunSettings& settings, CommandOutput io);

struct ServeOptions {
  std::optional<std::filesystem::path> config;       // host a new session from this document
  std::optional<std::filesystem::path> session_dir;  // or reopen an existing one
  std::string bind = "127.0.0.1:8080";
  std::filesystem::path data_dir;  // empty: AUTOVIS_DATA_DIR / default
  std::filesystem::path static_dir;
};

/// Blocks until SIGINT/SIGTERM.
int cmd_serve(const ServeOptions& options, const RunSettings& settings, CommandOutput io);

/// Writes the document of a session directory with the annotations of its
/// replayed ledger.
int cmd_export(const std::filesystem::path& session_dir, const std::filesystem::path& out_config, CommandOutput io);

int cmd_fixture(const std::string& kind, const std::filesystem::path& out_dir, CommandOutput io);

/// "host:port" or ":port" or "port".
std::pair<std::string, unsigned short> parse_bind(const std::string& bind);

}  // namespace drivelab
