#include <doctest.h>

#include <filesystem>

#include "helpers.hpp"
#include "mvnav/benchmark_map.hpp"
#include "mvnav/error.hpp"
#include "mvnav/session.hpp"

using namespace mvnav;

namespace {

SessionConfig open_config() {
  SessionConfig cfg;
  cfg.env.agent_radius = 5.0;
  cfg.start = Vec2{100, 100};
  cfg.target = Vec2{300, 100};
  return cfg;
}

Session open_session(SessionConfig cfg = open_config()) {
  return Session(std::make_shared<const OccupancyGrid>(testing::open_grid(400, 200, 5.0)),
                 straight_line_selector(), cfg);
}

std::string error_reason(const Outbox& out) {
  if (out.reply.size() != 1 || out.reply[0]["type"] != "error") return {};
  return out.reply[0]["reason"].get<std::string>();
}

SessionConfig corridor_config() {
  SessionConfig cfg;
  cfg.env = corridor_benchmark_config();
  cfg.seed = 17;
  return cfg;
}

}  // namespace

TEST_CASE("messages are validated against the schema") {
  auto s = open_session();
  CHECK(error_reason(s.handle_message(std::string_view("{not json"))) == "malformed JSON");
  CHECK(error_reason(s.handle_message(std::string_view("[1,2]"))).find("object") != std::string::npos);
  CHECK(error_reason(s.handle_message(Json{{"kind", "start"}})).find("type") != std::string::npos);
  CHECK(error_reason(s.handle_message(Json{{"type", "fly"}})).find("unknown message type") != std::string::npos);
  CHECK(error_reason(s.handle_message(Json{{"type", "start"}, {"now", true}})).find("unexpected field 'now'") !=
        std::string::npos);
  CHECK(error_reason(s.handle_message(Json{{"type", "mark_critical"}, {"x", 150}})).find("missing field 'y'") !=
        std::string::npos);
  CHECK(!error_reason(s.handle_message(Json{{"type", "mark_critical"}, {"x", "a"}, {"y", 1}})).empty());
  CHECK(!error_reason(s.handle_message(Json{{"type", "mark_critical"}, {"x", 1}, {"y", 1}})).empty());
  CHECK(!error_reason(s.handle_message(Json{{"type", "reset"}, {"seed", -4}})).empty());
  CHECK(error_reason(s.handle_message(Json{{"type", "hand_delta"}, {"dx", 1}, {"dy", 0}})) ==
        "hand_delta rejected: control is in AUTO mode");
  s.handle_message(Json{{"type", "takeover"}});
  CHECK(!error_reason(s.handle_message(Json{{"type", "hand_delta"}, {"dx", 1}})).empty());
  CHECK(!error_reason(s.handle_message(Json{{"type", "hand_delta"}, {"dx", 1}, {"dy", 0}, {"t_ms", -1}})).empty());
  CHECK(error_reason(s.handle_message(Json{{"type", "hand_delta"}, {"dx", 1}, {"dy", 0}, {"t_ms", 5}})).empty());
  // only accepted messages are recorded
  CHECK(s.recording().messages.size() == 2);
}

TEST_CASE("state snapshot and map message") {
  auto s = open_session();
  CHECK_FALSE(s.running());
  const auto st = s.state_message();
  CHECK(st["type"] == "state");
  CHECK(st["tick"] == 0);
  CHECK(st["t_ms"] == 0);
  CHECK(st["robot"] == Json::array({100.0, 100.0}));
  CHECK(st["target"] == Json::array({300.0, 100.0}));
  CHECK(st["mode"] == "AUTO");
  CHECK(st["critical"].is_null());
  CHECK(st["done"] == false);

  const auto m = s.map_message();
  CHECK(m["type"] == "map");
  CHECK(m["width"] == 400);
  CHECK(m["height"] == 200);
  CHECK(m["png_base64"].get<std::string>().rfind("iVBORw0KGgo", 0) == 0);  // PNG signature
}

TEST_CASE("ticks advance only while running") {
  auto s = open_session();
  CHECK(s.tick().empty());
  s.handle_message(Json{{"type", "start"}});
  const auto out = s.tick();
  REQUIRE(!out.empty());
  CHECK(out.back()["type"] == "state");
  CHECK(out.back()["tick"] == 1);
  CHECK(out.back()["t_ms"] == 17);
  CHECK(out.back()["robot"] == Json::array({105.0, 100.0}));
  s.handle_message(Json{{"type", "pause"}});
  CHECK(s.tick().empty());
  CHECK(s.tick_count() == 1);
}

TEST_CASE("critical area hand-off, manual control and arrival through messages") {
  auto s = open_session();
  s.handle_message(Json{{"type", "mark_critical"}, {"x", 150}, {"y", 100}, {"eps", 10}});
  CHECK(s.state_message()["critical"]["eps"] == 10.0);
  s.handle_message(Json{{"type", "start"}});
  bool switched = false;
  for (int k = 0; k < 50 && !switched; ++k) {
    for (const auto& m : s.tick())
      if (m["type"] == "event" && m["kind"] == "mode_changed") switched = true;
  }
  CHECK(switched);
  CHECK(s.controller().mode == ControlMode::Manual);
  CHECK(s.controller().position == Vec2{140, 100});

  // deltas accumulate into the hand position; one increment per tick
  s.handle_message(Json{{"type", "hand_delta"}, {"dx", 10}, {"dy", 0}, {"t_ms", 1000}});
  s.handle_message(Json{{"type", "hand_delta"}, {"dx", 5}, {"dy", 2}, {"t_ms", 1001}});
  s.tick();
  CHECK(s.hand() == Vec2{15, 2});
  CHECK(s.controller().position == Vec2{155, 102});
  // stale timestamp is reported and dropped
  s.handle_message(Json{{"type", "hand_delta"}, {"dx", 5}, {"dy", 0}, {"t_ms", 900}});
  const auto out = s.tick();
  CHECK(out.front()["kind"] == "fault");
  CHECK(s.controller().position == Vec2{155, 102});

  s.handle_message(Json{{"type", "re_arm"}});
  bool arrived = false;
  for (int k = 0; k < 100 && !arrived; ++k) {
    for (const auto& m : s.tick())
      if (m["type"] == "event" && m["kind"] == "arrived") arrived = true;
  }
  CHECK(arrived);
  CHECK(s.state_message()["done"] == true);

  const auto csv = s.session_log_csv();
  CHECK(csv.find(",MANUAL,") != std::string::npos);
  CHECK(csv.find("fault") != std::string::npos);
  CHECK(csv.find("arrived") != std::string::npos);
  CHECK(s.log_rows().size() == s.tick_count() + 1);
}

TEST_CASE("queue overflow is reported as a fault") {
  auto cfg = open_config();
  cfg.controller.queue_capacity = 2;
  auto s = open_session(cfg);
  s.handle_message(Json{{"type", "takeover"}});
  CHECK(s.handle_message(Json{{"type", "hand_delta"}, {"dx", 1}, {"dy", 0}}).broadcast.empty());
  CHECK(s.handle_message(Json{{"type", "hand_delta"}, {"dx", 1}, {"dy", 0}}).broadcast.empty());
  const auto out = s.handle_message(Json{{"type", "hand_delta"}, {"dx", 1}, {"dy", 0}});
  REQUIRE(out.broadcast.size() == 1);
  CHECK(out.broadcast[0]["kind"] == "fault");
  // auto-assigned stamps are stored in the recording
  CHECK(s.recording().messages.back().message["t_ms"] == 2);
}

TEST_CASE("reset starts a new episode and keeps the tick counter") {
  auto s = Session::create(std::string(kCorridorBenchmarkName), std::string(kStraightLinePolicy),
                           corridor_config());
  s.handle_message(Json{{"type", "start"}});
  for (int k = 0; k < 5; ++k) s.tick();
  const Vec2 first_start = s.controller().start;
  s.handle_message(Json{{"type", "reset"}, {"seed", 99}});
  CHECK(s.tick_count() == 5);
  CHECK(s.controller().start != first_start);
  s.tick();
  CHECK(s.log_rows().back().events.find("reset") != std::string::npos);
}

TEST_CASE("a recording replays to the identical session log") {
  auto s = Session::create(std::string(kCorridorBenchmarkName), std::string(kStraightLinePolicy),
                           corridor_config());
  s.handle_message(Json{{"type", "start"}});
  for (int k = 0; k < 10; ++k) s.tick();
  s.handle_message(Json{{"type", "takeover"}});
  for (int k = 0; k < 20; ++k) {
    s.handle_message(Json{{"type", "hand_delta"}, {"dx", (k % 5) - 2}, {"dy", (k % 3) - 1}});
    s.tick();
  }
  s.handle_message(Json{{"type", "re_arm"}});
  for (int k = 0; k < 10; ++k) s.tick();
  s.handle_message(Json{{"type", "reset"}, {"seed", 3}});
  for (int k = 0; k < 10; ++k) s.tick();

  const auto path = std::filesystem::temp_directory_path() / "mvnav_test_recording.json";
  s.recording().save(path);
  const auto loaded = Recording::load(path);
  std::filesystem::remove(path);
  CHECK(loaded.ticks == 50);
  const auto r = replay(loaded);
  CHECK(r.session_log_csv() == s.session_log_csv());
  CHECK(r.state_message() == s.state_message());

  // two sessions with the same inputs do not interfere
  auto a = Session::create(std::string(kCorridorBenchmarkName), std::string(kStraightLinePolicy),
                           corridor_config());
  auto b = Session::create(std::string(kCorridorBenchmarkName), std::string(kStraightLinePolicy),
                           corridor_config());
  a.handle_message(Json{{"type", "start"}});
  b.handle_message(Json{{"type", "start"}});
  for (int k = 0; k < 7; ++k) {
    a.tick();
    if (k == 3) b.handle_message(Json{{"type", "takeover"}});
    b.tick();
  }
  CHECK(a.controller().mode == ControlMode::Auto);
  CHECK(b.controller().mode == ControlMode::Manual);
  CHECK(a.tick_count() == b.tick_count());

  CHECK_THROWS_AS(Recording::from_json(Json{{"version", 2}}), InputError);
  CHECK_THROWS_AS(Session::create("missing.png", std::string(kStraightLinePolicy), {}), InputError);
}
