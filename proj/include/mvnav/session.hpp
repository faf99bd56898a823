#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mvnav/semi_auto.hpp"

namespace mvnav {

using Json = nlohmann::json;

// Policy reference that selects the scripted straight-line autopilot instead
// of a checkpoint file.
inline constexpr std::string_view kStraightLinePolicy = "builtin:straight";

struct SessionConfig {
  double tick_rate = 60.0;  // Hz; simulated time advances 1/rate per tick
  std::uint64_t seed = 0;
  int threshold = 128;
  EnvConfig env;
  ControllerConfig controller;
  std::optional<Vec2> start;  // random when unset
  std::optional<Vec2> target;
};

// A client message applied just before tick `tick + 1` ran.
struct RecordedMessage {
  std::uint64_t tick = 0;
  Json message;
};

struct Recording {
  std::string map;
  std::string checkpoint;
  SessionConfig config;
  std::uint64_t ticks = 0;
  std::vector<RecordedMessage> messages;

  Json to_json() const;
  static Recording from_json(const Json& j);
  void save(const std::filesystem::path& path) const;
  static Recording load(const std::filesystem::path& path);
};

// Outgoing traffic produced by one call.
struct Outbox {
  std::vector<Json> reply;      // to the sender only
  std::vector<Json> broadcast;  // to every client
};

// One simulator + controller. Not thread-safe; the server serializes access.
class Session {
 public:
  Session(std::shared_ptr<const OccupancyGrid> grid, ActionSelector policy, SessionConfig config,
          std::string map_ref = {}, std::string checkpoint_ref = {});

  // Loads the map and the checkpoint (or kStraightLinePolicy). Throws
  // InputError for missing or unreadable artifacts.
  static Session create(const std::string& map, const std::string& checkpoint,
                        SessionConfig config);

  // Validates and applies one client text frame. Invalid input yields an
  // error reply, never an exception.
  Outbox handle_message(std::string_view text);
  Outbox handle_message(const Json& message);

  // Advances one tick when running: queued inputs, controller tick, log row.
  // Returns the broadcast for this tick (events, then one state message), or
  // nothing while paused.
  std::vector<Json> tick();

  bool running() const { return running_; }
  std::uint64_t tick_count() const { return ctrl_.tick; }
  double tick_rate() const { return config_.tick_rate; }
  double t_ms() const;
  const ControllerState& controller() const { return ctrl_; }
  const OccupancyGrid& grid() const { return *grid_; }
  const SessionConfig& config() const { return config_; }
  Vec2 hand() const { return hand_; }

  Json state_message() const;
  Json map_message() const;  // cached PNG of the lumen mask

  const Recording& recording() const { return recording_; }
  const std::vector<SessionLogRow>& log_rows() const { return log_; }
  std::string session_log_csv() const { return format_session_log(log_); }

 private:
  void start_episode(std::uint64_t seed);
  std::uint64_t t_ms_at(std::uint64_t tick) const;
  void log_row(const std::string& events);
  Outbox apply(const Json& message);

  std::shared_ptr<const OccupancyGrid> grid_;
  SessionConfig config_;
  ControllerContext ctx_;
  ControllerState ctrl_;
  InputQueue queue_;
  Rng rng_;
  Vec2 hand_;
  std::optional<std::uint64_t> last_input_ms_;
  std::uint64_t auto_t_ms_ = 0;
  bool running_ = false;
  std::string pending_events_;
  Recording recording_;
  std::vector<SessionLogRow> log_;
  mutable std::shared_ptr<const std::string> map_png_;
};

// Re-runs a recording offline and returns the final session.
Session replay(const Recording& recording);

}  // namespace mvnav
