#include "mvnav/session.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mvnav/error.hpp"
#include "mvnav/image_io.hpp"

namespace mvnav {

namespace {

Json vec_json(const Vec2& v) { return Json::array({v.x, v.y}); }

Vec2 vec_from(const Json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw InputError("expected a [x, y] pair");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

Json event_json(std::string_view kind, const std::string& detail) {
  return {{"type", "event"}, {"kind", kind}, {"detail", detail}};
}

Json error_json(const std::string& reason) { return {{"type", "error"}, {"reason", reason}}; }

// Schema checks. Each returns an empty string when the field is acceptable.
bool is_finite_number(const Json& j) { return j.is_number() && std::isfinite(j.get<double>()); }

// nlohmann stores small literals as signed integers; accept both encodings.
bool is_nonnegative_integer(const Json& j) {
  return j.is_number_unsigned() || (j.is_number_integer() && j.get<std::int64_t>() >= 0);
}

std::string check_fields(const Json& msg, std::initializer_list<std::string_view> required,
                         std::initializer_list<std::string_view> optional) {
  for (auto it = msg.begin(); it != msg.end(); ++it) {
    const std::string& key = it.key();
    if (key == "type") continue;
    bool known = false;
    for (auto k : required) known = known || key == k;
    for (auto k : optional) known = known || key == k;
    if (!known) return "unexpected field '" + key + "'";
  }
  for (auto k : required) {
    if (!msg.contains(std::string(k))) return "missing field '" + std::string(k) + "'";
  }
  return {};
}

}  // namespace

Session::Session(std::shared_ptr<const OccupancyGrid> grid, ActionSelector policy,
                 SessionConfig config, std::string map_ref, std::string checkpoint_ref)
    : grid_(std::move(grid)),
      config_(std::move(config)),
      queue_(config_.controller.queue_capacity),
      rng_(config_.seed) {
  if (!grid_) throw InputError("session needs a map");
  if (!policy) throw InputError("session needs a policy");
  if (!(config_.tick_rate > 0.0 && config_.tick_rate <= 1000.0)) {
    throw InputError("tick rate must be in (0, 1000] Hz");
  }
  ctx_.grid = grid_.get();
  ctx_.env = config_.env;
  ctx_.config = config_.controller;
  ctx_.policy = std::move(policy);
  recording_.map = std::move(map_ref);
  recording_.checkpoint = std::move(checkpoint_ref);
  recording_.config = config_;
  start_episode(config_.seed);
  log_row("");
}

Session Session::create(const std::string& map, const std::string& checkpoint,
                        SessionConfig config) {
  auto grid = std::make_shared<const OccupancyGrid>(
      load_map(map, config.threshold, config.env.agent_radius));
  ActionSelector policy;
  if (checkpoint == kStraightLinePolicy) {
    policy = straight_line_selector();
  } else {
    if (checkpoint.empty()) throw InputError("no checkpoint given");
    policy = greedy_selector(std::make_shared<const PolicyParams>(load_checkpoint(checkpoint)));
  }
  return Session(std::move(grid), std::move(policy), std::move(config), map, checkpoint);
}

void Session::start_episode(std::uint64_t seed) {
  rng_.seed(seed);
  const EnvState s = reset(*grid_, config_.env, rng_, config_.start, config_.target);
  const std::uint64_t t = ctrl_.tick;
  ctrl_ = make_controller(s);
  ctrl_.tick = t;
  ctrl_.mode = ControlMode::Auto;
  // Hand increments are measured from wherever the hand is now.
  ctrl_.last_input = OperatorInput{hand_, t_ms_at(t)};
  last_input_ms_.reset();
  queue_.drain();
}

std::uint64_t Session::t_ms_at(std::uint64_t tick) const {
  return static_cast<std::uint64_t>(std::llround(double(tick) * 1000.0 / config_.tick_rate));
}

double Session::t_ms() const { return double(ctrl_.tick) * 1000.0 / config_.tick_rate; }

void Session::log_row(const std::string& events) {
  log_.push_back({ctrl_.tick, t_ms(), ctrl_.mode, ctrl_.position.x, ctrl_.position.y, events});
}

Json Session::state_message() const {
  Json critical = nullptr;
  if (ctrl_.critical) {
    critical = {{"x", ctrl_.critical->center.x},
                {"y", ctrl_.critical->center.y},
                {"eps", ctrl_.critical->eps}};
  }
  return {{"type", "state"},
          {"tick", ctrl_.tick},
          {"t_ms", t_ms_at(ctrl_.tick)},
          {"robot", vec_json(ctrl_.position)},
          {"target", vec_json(ctrl_.target)},
          {"mode", to_string(ctrl_.mode)},
          {"critical", critical},
          {"reward", ctrl_.last_reward},
          {"collisions", ctrl_.collisions},
          {"done", ctrl_.done}};
}

Json Session::map_message() const {
  if (!map_png_) {
    map_png_ = std::make_shared<const std::string>(base64_encode(encode_png(grid_->to_image())));
  }
  return {{"type", "map"},
          {"width", grid_->width()},
          {"height", grid_->height()},
          {"png_base64", *map_png_}};
}

Outbox Session::handle_message(std::string_view text) {
  Json msg = Json::parse(text, nullptr, false);
  if (msg.is_discarded()) return {{error_json("malformed JSON")}, {}};
  return handle_message(msg);
}

Outbox Session::handle_message(const Json& msg) {
  if (!msg.is_object()) return {{error_json("message must be a JSON object")}, {}};
  if (!msg.contains("type") || !msg["type"].is_string()) {
    return {{error_json("missing string field 'type'")}, {}};
  }
  try {
    return apply(msg);
  } catch (const InputError& e) {
    return {{error_json(e.what())}, {}};
  }
}

Outbox Session::apply(const Json& msg) {
  const std::string type = msg["type"].get<std::string>();
  auto invalid = [&](const std::string& reason) -> Outbox {
    return {{error_json(type + ": " + reason)}, {}};
  };
  auto record = [&](Json m) { recording_.messages.push_back({ctrl_.tick, std::move(m)}); };
  auto mode_events = [&](const std::vector<ControllerEvent>& events) {
    Outbox out;
    for (const auto& e : events) {
      out.broadcast.push_back(event_json(to_string(e.kind), e.detail));
      pending_events_ += (pending_events_.empty() ? "" : ";") + std::string(to_string(e.kind));
    }
    return out;
  };

  if (type == "hand_delta") {
    if (auto err = check_fields(msg, {"dx", "dy"}, {"t_ms"}); !err.empty()) return invalid(err);
    if (!is_finite_number(msg["dx"]) || !is_finite_number(msg["dy"])) {
      return invalid("dx and dy must be finite numbers");
    }
    if (msg.contains("t_ms") && !is_nonnegative_integer(msg["t_ms"])) {
      return invalid("t_ms must be a nonnegative integer");
    }
    if (ctrl_.mode != ControlMode::Manual) {
      return {{error_json("hand_delta rejected: control is in AUTO mode")}, {}};
    }
    HandDelta d;
    d.delta = {msg["dx"].get<double>(), msg["dy"].get<double>()};
    // Without a client timestamp the input is ordered by arrival.
    d.t_ms = msg.contains("t_ms") ? msg["t_ms"].get<std::uint64_t>() : auto_t_ms_;
    auto_t_ms_ = std::max(auto_t_ms_, d.t_ms + 1);
    Json stored = msg;
    stored["t_ms"] = d.t_ms;
    record(stored);
    Outbox out;
    if (!queue_.push(d)) {
      out.broadcast.push_back(event_json("fault", "input queue full; oldest input dropped"));
      pending_events_ += (pending_events_.empty() ? "" : ";") + std::string("fault");
    }
    return out;
  }
  if (type == "takeover" || type == "re_arm" || type == "start" || type == "pause") {
    if (auto err = check_fields(msg, {}, {}); !err.empty()) return invalid(err);
    record(msg);
    if (type == "takeover") return mode_events(takeover(ctrl_));
    if (type == "re_arm") return mode_events(re_arm(ctrl_));
    running_ = type == "start";
    return {};
  }
  if (type == "mark_critical") {
    if (auto err = check_fields(msg, {"x", "y"}, {"eps"}); !err.empty()) return invalid(err);
    if (!is_finite_number(msg["x"]) || !is_finite_number(msg["y"]) ||
        (msg.contains("eps") && !is_finite_number(msg["eps"]))) {
      return invalid("x, y and eps must be finite numbers");
    }
    const double eps = msg.contains("eps") ? msg["eps"].get<double>() : config_.controller.critical_eps;
    mark_critical_area(ctrl_, *grid_, {msg["x"].get<double>(), msg["y"].get<double>()}, eps);
    record(msg);
    return {};
  }
  if (type == "reset") {
    if (auto err = check_fields(msg, {}, {"seed"}); !err.empty()) return invalid(err);
    if (msg.contains("seed") && !is_nonnegative_integer(msg["seed"])) {
      return invalid("seed must be a nonnegative integer");
    }
    record(msg);
    start_episode(msg.contains("seed") ? msg["seed"].get<std::uint64_t>() : config_.seed);
    pending_events_ += (pending_events_.empty() ? "" : ";") + std::string("reset");
    return {};
  }
  return {{error_json("unknown message type '" + type + "'")}, {}};
}

std::vector<Json> Session::tick() {
  std::vector<Json> out;
  if (!running_) return out;

  std::optional<OperatorInput> input;
  for (const auto& d : queue_.drain()) {
    if (ctrl_.mode != ControlMode::Manual) break;
    if (last_input_ms_ && d.t_ms <= *last_input_ms_) {
      out.push_back(event_json("fault", "stale hand_delta dropped (t_ms " +
                                            std::to_string(d.t_ms) + ")"));
      pending_events_ += (pending_events_.empty() ? "" : ";") + std::string("fault");
      continue;
    }
    last_input_ms_ = d.t_ms;
    hand_ += d.delta;
    input = OperatorInput{hand_, t_ms_at(ctrl_.tick + 1)};
  }

  std::string events = std::move(pending_events_);
  pending_events_.clear();
  for (const auto& e : mvnav::tick(ctrl_, input, ctx_)) {
    if (e.kind == EventKind::Moved) continue;
    out.push_back(event_json(to_string(e.kind), e.detail));
    events += (events.empty() ? "" : ";") + std::string(to_string(e.kind));
  }
  recording_.ticks = ctrl_.tick;
  log_row(events);
  out.push_back(state_message());
  return out;
}

namespace {

Json config_json(const SessionConfig& c) {
  return {{"tick_rate", c.tick_rate},
          {"seed", c.seed},
          {"threshold", c.threshold},
          {"env",
           {{"agent_radius", c.env.agent_radius},
            {"arrival_threshold", c.env.arrival_threshold},
            {"max_steps", c.env.max_steps},
            {"reward_arrive", c.env.reward.arrive},
            {"reward_wall", c.env.reward.wall},
            {"reward_distance", c.env.reward.distance},
            {"reward_displacement", c.env.reward.displacement}}},
          {"controller",
           {{"tau", c.controller.tau},
            {"increment_cap", c.controller.increment_cap},
            {"critical_eps", c.controller.critical_eps},
            {"queue_capacity", c.controller.queue_capacity}}},
          {"start", c.start ? vec_json(*c.start) : Json(nullptr)},
          {"target", c.target ? vec_json(*c.target) : Json(nullptr)}};
}

SessionConfig config_from(const Json& j) {
  SessionConfig c;
  c.tick_rate = j.at("tick_rate").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.threshold = j.at("threshold").get<int>();
  const Json& e = j.at("env");
  c.env.agent_radius = e.at("agent_radius").get<double>();
  c.env.arrival_threshold = e.at("arrival_threshold").get<double>();
  c.env.max_steps = e.at("max_steps").get<int>();
  c.env.reward.arrive = e.at("reward_arrive").get<double>();
  c.env.reward.wall = e.at("reward_wall").get<double>();
  c.env.reward.distance = e.at("reward_distance").get<double>();
  c.env.reward.displacement = e.at("reward_displacement").get<double>();
  const Json& k = j.at("controller");
  c.controller.tau = k.at("tau").get<double>();
  c.controller.increment_cap = k.at("increment_cap").get<double>();
  c.controller.critical_eps = k.at("critical_eps").get<double>();
  c.controller.queue_capacity = k.at("queue_capacity").get<std::size_t>();
  if (!j.at("start").is_null()) c.start = vec_from(j["start"]);
  if (!j.at("target").is_null()) c.target = vec_from(j["target"]);
  return c;
}

}  // namespace

Json Recording::to_json() const {
  Json msgs = Json::array();
  for (const auto& m : messages) msgs.push_back({{"tick", m.tick}, {"message", m.message}});
  return {{"version", 1},      {"map", map},   {"checkpoint", checkpoint},
          {"config", config_json(config)}, {"ticks", ticks}, {"messages", msgs}};
}

Recording Recording::from_json(const Json& j) {
  try {
    if (j.at("version").get<int>() != 1) throw InputError("unsupported recording version");
    Recording r;
    r.map = j.at("map").get<std::string>();
    r.checkpoint = j.at("checkpoint").get<std::string>();
    r.config = config_from(j.at("config"));
    r.ticks = j.at("ticks").get<std::uint64_t>();
    for (const auto& m : j.at("messages")) {
      r.messages.push_back({m.at("tick").get<std::uint64_t>(), m.at("message")});
    }
    return r;
  } catch (const Json::exception& e) {
    throw InputError(std::string("malformed recording: ") + e.what());
  }
}

void Recording::save(const std::filesystem::path& path) const {
  write_file_atomic(path, to_json().dump(1) + "\n");
}

Recording Recording::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open recording '" + path.string() + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  Json j = Json::parse(ss.str(), nullptr, false);
  if (j.is_discarded()) throw InputError("recording '" + path.string() + "' is not valid JSON");
  return from_json(j);
}

Session replay(const Recording& rec) {
  Session s = Session::create(rec.map, rec.checkpoint, rec.config);
  std::size_t next = 0;
  for (std::uint64_t k = 0; k < rec.ticks; ++k) {
    while (next < rec.messages.size() && rec.messages[next].tick == k) {
      s.handle_message(rec.messages[next++].message);
    }
    if (!s.running()) throw InputError("recording is inconsistent: session paused at a recorded tick");
    s.tick();
  }
  while (next < rec.messages.size()) s.handle_message(rec.messages[next++].message);
  return s;
}

}  // namespace mvnav
