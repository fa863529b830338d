#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "loomcast/session.hpp"

namespace loomcast {

struct ServerOptions {
  std::string host = "127.0.0.1";
  /// 0 picks a free port.
  std::uint16_t port = 8080;
  /// Device map used for new sessions; simulated drivers otherwise.
  std::optional<std::filesystem::path> device_map;
  /// Session logs are written here on shutdown.
  std::optional<std::filesystem::path> log_dir;
  int threads = 2;
};

/// HTTP and WebSocket front end for live sessions and story authoring.
///
///   GET  /session/{id}          WebSocket upgrade
///   POST /sessions              {"story_file"} | {"fixture"} | {"story_id"} | {"story"} -> {"id"}
///   GET  /sessions/{id}/log     newline-delimited transition records
///   GET  /stories/{id}          story document
///   PUT  /stories/{id}          replace the story document
///   POST /stories/{id}/edits    apply one edit command
///   POST /stories/{id}/preview  {"up_to"} -> world and device states
class Server {
 public:
  /// Throws DriverUnavailable when the device map cannot be loaded.
  explicit Server(ServerOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and serves on background threads. Throws std::system_error when
  /// the address cannot be bound.
  void start();
  std::uint16_t port() const;

  /// Closes connections, stops serving and writes session logs. Idempotent.
  void stop();

  /// Blocks until SIGINT or SIGTERM, then stops.
  void run_until_signal();

  SessionHub& sessions();

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace loomcast
