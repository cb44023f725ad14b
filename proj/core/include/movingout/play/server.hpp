#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "movingout/bass.hpp"

namespace movingout::play {

struct ServerOptions {
  std::string address = "0.0.0.0";
  /// 0 picks a free port; see Server::port().
  std::uint16_t port = 8808;
  int max_sessions = 8;
  int tick_ms = 100;
  int max_ticks = kLivePlayHorizon;
  int n_candidates = 8;
  int threads = 1;
  std::shared_ptr<const LatentDynamics> model;
  /// Serve files from here instead of the built-in client page.
  std::filesystem::path static_dir;
};

/// HTTP + WebSocket host. GET / serves the browser client; a WebSocket
/// upgrade on any path opens a play connection (hello, then action messages).
class Server {
 public:
  explicit Server(ServerOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Bound port (resolved when the options asked for 0).
  std::uint16_t port() const;
  /// Serves until stop(). Blocks the calling thread.
  void run();
  /// Safe to call from any thread.
  void stop();
  int active_sessions() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// The single-page browser client served at /.
const std::string& builtin_client_page();

}  // namespace movingout::play
