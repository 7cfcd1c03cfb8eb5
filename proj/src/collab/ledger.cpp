#include "drivelab/collab/ledger.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>

namespace drivelab {

Ledger::Ledger(const std::filesystem::path& path) : path_(path) {
  // Drop a torn tail left by a crash so new lines start clean.
  const auto contents = read_ledger(path);
  if (contents.truncated_tail) std::filesystem::resize_file(path, contents.valid_bytes);
  file_ = std::fopen(path.c_str(), "ab");
  if (!file_) throw std::runtime_error("cannot open ledger " + path.string() + ": " + std::strerror(errno));
}

Ledger::~Ledger() {
  if (file_) {
    sync();
    std::fclose(file_);
  }
}

void Ledger::append(const SyncMessage& m) {
  std::string line = encode_sync_message(m);
  line.push_back('\n');
  if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() || std::fflush(file_) != 0) {
    throw std::runtime_error("ledger write failed: " + path_.string());
  }
}

void Ledger::sync() {
  std::fflush(file_);
  ::fsync(::fileno(file_));
}

LedgerContents read_ledger(const std::filesystem::path& path) {
  LedgerContents out;
  if (!std::filesystem::exists(path)) return out;
  const std::string text = read_file(path);
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    ++line_no;
    const std::size_t nl = text.find('\n', pos);
    const bool terminated = nl != std::string::npos;
    const std::string_view line(text.data() + pos, (terminated ? nl : text.size()) - pos);
    if (!line.empty()) {
      try {
        out.messages.push_back(parse_sync_message(line));
      } catch (const std::exception& e) {
        if (!terminated) {
          out.truncated_tail = true;
          break;
        }
        throw ParseError("ledger " + path.string() + " line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    pos = terminated ? nl + 1 : text.size();
    out.valid_bytes = pos;
  }
  return out;
}

SessionState replay_ledger(const ConfigDocument& doc, const std::vector<SyncMessage>& messages) {
  SessionState s = initial_state(doc);
  for (const auto& m : messages) materialize(s, m);
  return s;
}

bool SessionMirror::receive(const SyncMessage& m) {
  if (m.kind == SyncKind::snapshot) {
    state_ = state_from_snapshot(m.payload);
    state_.seq = m.seq;
    joined_ = true;
    return true;
  }
  if (!joined_ || m.kind == SyncKind::error || m.seq != state_.seq + 1) return false;
  materialize(state_, m);
  return true;
}

}  // namespace drivelab
