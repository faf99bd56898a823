#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "mvnav/session.hpp"

namespace mvnav {

struct ServerOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 8080;  // 0 picks a free port
  std::filesystem::path static_root;  // cockpit assets; empty serves a stub page
  std::filesystem::path record_dir;   // recording + session log written on stop
  bool autostart = false;             // start ticking without a client "start"
};

// HTTP + WebSocket front end for one Session. Clients connect to /ws; other
// paths are served from static_root. A dedicated thread ticks the session at
// its tick rate and broadcasts each tick to every connected client.
class TeleopServer {
 public:
  TeleopServer(Session session, ServerOptions options);
  ~TeleopServer();
  TeleopServer(const TeleopServer&) = delete;
  TeleopServer& operator=(const TeleopServer&) = delete;

  // Binds and launches the network and tick threads. Throws InputError when
  // the address cannot be bound.
  void start();
  // Stops both threads and writes the recording if a directory was given.
  void stop();

  unsigned short port() const;
  std::size_t client_count() const;
  std::uint64_t tick_count() const;
  std::uint64_t missed_deadlines() const;
  Recording recording() const;
  std::string session_log_csv() const;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace mvnav
