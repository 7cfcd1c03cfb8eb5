#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "drivelab/analytics/heatmap.hpp"
#include "drivelab/collab/ledger.hpp"
#include "drivelab/collab/sequencer.hpp"
#include "drivelab/replay/replay.hpp"
#include "drivelab/validate.hpp"

namespace drivelab {

/// Session persistence root: AUTOVIS_DATA_DIR, or ./autovis-data.
std::filesystem::path default_data_dir();

/// Random lowercase hex string of `bytes` bytes.
std::string random_hex(std::size_t bytes);

/// One hosted analysis environment: an immutable document plus the
/// sequenced collaboration state and its ledger.
///
/// On disk: <dir>/config.json (canonical bytes), <dir>/ledger.ndjson,
/// <dir>/token.
class HostedSession {
 public:
  /// Receives encoded frames, called with the session lock held and in seq
  /// order. Must not block or call back into the session.
  using Sink = std::function<void(const std::string& frame)>;

  static std::shared_ptr<HostedSession> create(const std::filesystem::path& dir, const std::string& id,
                                               const ConfigDocument& doc, Clock clock = {},
                                               HeatmapParams heatmap_params = {});
  /// Restores a session directory by replaying its ledger.
  static std::shared_ptr<HostedSession> open(const std::filesystem::path& dir, Clock clock = {},
                                             HeatmapParams heatmap_params = {});

  const std::string& id() const { return id_; }
  const std::string& token() const { return token_; }
  const std::filesystem::path& dir() const { return dir_; }
  const ConfigDocument& document() const { return doc_; }
  const std::string& config_bytes() const { return config_bytes_; }
  const EventIndex& events() const { return *events_; }
  /// Computed on first use.
  const std::vector<HeatmapLayer>& heatmaps() const;
  const HeatmapLayer* heatmap(const std::string& layer_id) const;

  struct Subscription {
    std::uint64_t id = 0;
    SyncMessage snapshot;
  };
  /// Snapshot and registration happen atomically, so the first broadcast a
  /// subscriber sees is snapshot.seq + 1.
  Subscription join(const std::string& analyst_id, Sink sink);
  void leave(std::uint64_t subscription);
  std::size_t connected() const;

  /// Sequences a proposal; accepted messages are logged, then broadcast.
  ApplyResult propose(const SyncMessage& proposal);

  SessionState state() const;
  void flush();

 private:
  HostedSession() = default;

  std::string id_;
  std::string token_;
  std::filesystem::path dir_;
  ConfigDocument doc_;
  std::string config_bytes_;
  std::unique_ptr<EventIndex> events_;
  HeatmapParams heatmap_params_;

  mutable std::once_flag heatmaps_once_;
  mutable std::vector<HeatmapLayer> heatmaps_;

  mutable std::mutex mutex_;
  std::unique_ptr<Sequencer> sequencer_;
  std::unique_ptr<Ledger> ledger_;
  std::map<std::uint64_t, Sink> sinks_;
  std::uint64_t next_sink_ = 1;
};

/// All sessions under one data directory.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path root, Clock clock = {}, HeatmapParams heatmap_params = {});

  /// Reopens every session directory under the root. Damaged directories
  /// are reported and skipped.
  void restore_all(Report* report = nullptr);

  /// Validates and persists the document; returns nullptr when validation
  /// reports errors (details in `report`).
  std::shared_ptr<HostedSession> host(const ConfigDocument& doc, Report& report);
  std::shared_ptr<HostedSession> get(const std::string& id) const;
  std::vector<std::shared_ptr<HostedSession>> list() const;
  void flush_all();

  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
  Clock clock_;
  HeatmapParams heatmap_params_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<HostedSession>> sessions_;
};

/// The document with annotations replaced by the materialized state.
ConfigDocument materialized_document(ConfigDocument doc, const SessionState& state);

}  // namespace drivelab
