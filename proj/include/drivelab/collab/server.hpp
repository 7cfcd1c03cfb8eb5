#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "drivelab/collab/store.hpp"

namespace drivelab {

struct ServerOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 8080;  // 0 picks a free port
  std::filesystem::path static_dir;
  int threads = 2;
  std::size_t max_body_bytes = 512u << 20;
  /// Stop on SIGINT/SIGTERM, flushing every ledger first.
  bool handle_signals = false;
};

/// HTTP + WebSocket front end for a SessionStore.
class Server {
 public:
  Server(SessionStore& store, ServerOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and listens. Throws std::system_error (for example when the
  /// port is in use).
  void start();
  unsigned short port() const;
  /// Serves until stop() or a handled signal; flushes ledgers on return.
  void run();
  /// Thread-safe.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace drivelab
