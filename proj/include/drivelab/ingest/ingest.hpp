#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "drivelab/ingest/detectors.hpp"
#include "drivelab/json_io.hpp"
#include "drivelab/model.hpp"
#include "drivelab/validate.hpp"

namespace drivelab {

struct SourceSpec {
  std::string name;
  std::string format;
  std::filesystem::path path;  // as written in the manifest, relative to base_dir
  Json options = Json::object();
};

struct ParticipantSpec {
  std::string id;
  std::optional<Rgb> color;
  AttrMap demographics;
};

struct SessionSpec {
  std::string participant_id;
  std::string condition;
  Millis t0 = 0;
  std::optional<Millis> duration;
  std::vector<SourceSpec> sources;
};

struct DetectorSpec {
  std::string name;
  DetectorParams params;
};

/// Parsed manifest.json: every file it names, grouped by session.
struct SourceBundle {
  std::filesystem::path base_dir;
  std::optional<StudyMeta> study_meta;
  std::vector<ParticipantSpec> participants;
  std::vector<SessionSpec> sessions;
  std::optional<GeoSample> origin;
  std::optional<std::string> ego_vehicle;
  std::vector<SourceSpec> scene_sources;
  std::vector<DetectorSpec> detectors;
};

struct SourceContext {
  const SourceSpec& spec;
  std::filesystem::path file;  // resolved path
  Millis t0 = 0;
};

using SessionParser = std::function<void(const SourceContext&, SessionRecording&, Report&)>;
using SceneParser = std::function<void(const SourceContext&, SceneDescription&, Report&)>;

/// Format name -> parser. Dataset adapters register here.
class ParserRegistry {
 public:
  void add_session_parser(const std::string& format, SessionParser parser);
  void add_scene_parser(const std::string& format, SceneParser parser);
  const SessionParser* session_parser(const std::string& format) const;
  const SceneParser* scene_parser(const std::string& format) const;
  bool knows(const std::string& format) const;

  /// All formats shipped with the library.
  static const ParserRegistry& builtin();

 private:
  std::map<std::string, SessionParser> session_;
  std::map<std::string, SceneParser> scene_;
};

/// Parses and checks a manifest: known formats, existing files. Throws
/// ParseError naming the offending entry.
SourceBundle parse_manifest(const Json& manifest, const std::filesystem::path& base_dir,
                            const ParserRegistry& registry = ParserRegistry::builtin());
SourceBundle load_manifest(const std::filesystem::path& manifest_path,
                           const ParserRegistry& registry = ParserRegistry::builtin());

/// Builds the config document. Row-level problems become warnings with
/// "<file>:<line>" paths; a session without skeleton or stream data throws
/// ParseError. Detectors listed in the bundle run last.
ConfigDocument ingest(const SourceBundle& bundle, const StudyMeta& study_meta, Report& report,
                      const ParserRegistry& registry = ParserRegistry::builtin());

/// Deterministic, pairwise-distinct participant colour for position `i`.
Rgb palette_color(std::size_t i);

/// Flat strip along the ego path in the scene frame (role ground), used when
/// the scene has no other ground geometry.
MeshAsset make_ground_ribbon(const std::vector<GeoSample>& ego_path, const GeoSample& origin,
                             double width = 8.0);

}  // namespace drivelab
