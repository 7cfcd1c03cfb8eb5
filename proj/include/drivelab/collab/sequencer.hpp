#pragma once

#include <functional>
#include <optional>
#include <string>

#include "drivelab/collab/protocol.hpp"
#include "drivelab/geo/ego_path.hpp"

namespace drivelab {

using Clock = std::function<Millis()>;

/// Milliseconds since the Unix epoch.
Millis system_clock_ms();

struct ApplyResult {
  bool accepted = false;
  /// Accepted: the stamped message to log and broadcast. Rejected: an error
  /// message with seq 0 for the proposer only.
  SyncMessage message;
};

/// Single writer for one session: validates proposals against the current
/// state, stamps server-side fields and assigns gap-free sequence numbers.
/// Not thread-safe; callers serialize access.
class Sequencer {
 public:
  Sequencer(const ConfigDocument& doc, Clock clock);
  /// Resumes from a restored state (for example after ledger replay).
  Sequencer(const ConfigDocument& doc, SessionState state, Clock clock);

  /// Snapshot message for a joining analyst; consumes no seq.
  SyncMessage join(const std::string& analyst_id) const;

  /// On acceptance the state already includes the message.
  ApplyResult apply(const SyncMessage& proposal);

  const SessionState& state() const { return state_; }
  Millis now() const { return clock_(); }

 private:
  SyncMessage stamp(SyncKind kind, const std::string& origin, Json payload) const;
  ApplyResult reject(const SyncMessage& proposal, const std::string& reason) const;
  Json validated_payload(const SyncMessage& p, SyncKind& kind);

  SessionState state_;
  Clock clock_;
  std::optional<EgoPath> path_;
};

}  // namespace drivelab
