#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "drivelab/collab/protocol.hpp"

namespace drivelab {

/// Append-only NDJSON log of accepted messages, one canonical line each.
class Ledger {
 public:
  explicit Ledger(const std::filesystem::path& path);
  ~Ledger();
  Ledger(const Ledger&) = delete;
  Ledger& operator=(const Ledger&) = delete;

  /// Writes and flushes to the OS before returning.
  void append(const SyncMessage& m);
  /// fsync; used on shutdown.
  void sync();
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::FILE* file_ = nullptr;
};

struct LedgerContents {
  std::vector<SyncMessage> messages;
  /// A final line without newline that failed to parse (torn write).
  bool truncated_tail = false;
  /// Byte length of the intact prefix.
  std::uintmax_t valid_bytes = 0;
};

/// Reads a ledger. A missing file is empty. A damaged line other than an
/// unterminated last line is a ParseError.
LedgerContents read_ledger(const std::filesystem::path& path);

/// initial_state(doc) with every message materialized in order.
SessionState replay_ledger(const ConfigDocument& doc, const std::vector<SyncMessage>& messages);

/// Client-side replica driven only by what the server broadcasts.
class SessionMirror {
 public:
  /// Returns false for messages that do not apply (errors, stale seq).
  bool receive(const SyncMessage& m);
  bool joined() const { return joined_; }
  const SessionState& state() const { return state_; }

 private:
  SessionState state_;
  bool joined_ = false;
};

}  // namespace drivelab
