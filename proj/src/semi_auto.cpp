#include "mvnav/semi_auto.hpp"

#include <algorithm>
#include <cmath>

#include "mvnav/error.hpp"

namespace mvnav {

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Moved: return "moved";
    case EventKind::ModeChanged: return "mode_changed";
    case EventKind::Collision: return "collision";
    case EventKind::Arrived: return "arrived";
    case EventKind::Fault: return "fault";
  }
  return "unknown";
}

ControllerState make_controller(const EnvState& episode) {
  ControllerState c;
  c.position = episode.position;
  c.start = episode.start;
  c.target = episode.target;
  return c;
}

namespace {

ControllerEvent switch_mode(ControllerState& ctrl, ControlMode to, std::string reason) {
  ctrl.mode = to;
  ctrl.history.push_back({ctrl.tick, to, reason});
  return {EventKind::ModeChanged, std::string(to_string(to)) + " (" + reason + ")"};
}

}  // namespace

ManualStepResult manual_step(ControllerState& ctrl, const OperatorInput& input,
                             const ControllerContext& ctx) {
  if (ctrl.mode != ControlMode::Manual) throw InputError("manual input outside MANUAL mode");
  ManualStepResult r;
  if (!ctrl.last_input) {
    ctrl.last_input = input;
    return r;
  }
  if (input.t_ms <= ctrl.last_input->t_ms) {
    throw InputError("operator input timestamps must be strictly increasing");
  }
  const double cap = ctx.config.increment_cap;
  const Vec2 raw = ctx.config.tau * (input.hand - ctrl.last_input->hand);
  const Vec2 inc{std::clamp(raw.x, -cap, cap), std::clamp(raw.y, -cap, cap)};
  ctrl.last_input = input;

  const Vec2 next = ctrl.position + inc;
  if (ctx.grid->is_free(next)) {
    ctrl.position = next;
    r.increment = inc;
  } else if (inc.x != 0.0 || inc.y != 0.0) {
    r.collided = true;
    ++ctrl.collisions;
  }
  return r;
}

StepResult auto_step(ControllerState& ctrl, const ControllerContext& ctx) {
  if (ctrl.mode != ControlMode::Auto) throw InputError("auto step outside AUTO mode");
  if (!ctx.policy) throw InputError("no policy loaded for autonomous control");
  EnvState s;
  s.position = ctrl.position;
  s.start = ctrl.start;
  s.target = ctrl.critical && !ctrl.critical_reached ? ctrl.critical->center : ctrl.target;
  const int action = ctx.policy(s, *ctx.grid);
  EnvConfig env = ctx.env;
  env.max_steps = std::max(env.max_steps, 1);
  const StepResult r = step(s, action, *ctx.grid, env);
  ctrl.position = r.next_state.position;
  ctrl.last_reward = r.reward;
  if (r.hit_wall) ++ctrl.collisions;
  return r;
}

bool check_switch(ControllerState& ctrl, const CriticalArea& critical) {
  if (ctrl.mode != ControlMode::Auto || !ctrl.switch_armed) return false;
  if (distance(ctrl.position, critical.center) > critical.eps) return false;
  ctrl.switch_armed = false;
  ctrl.critical_reached = true;
  switch_mode(ctrl, ControlMode::Manual, "critical area reached");
  return true;
}

std::vector<ControllerEvent> tick(ControllerState& ctrl, std::optional<OperatorInput> input,
                                  const ControllerContext& ctx) {
  std::vector<ControllerEvent> events;
  ++ctrl.tick;
  if (ctrl.done) return events;

  if (ctrl.mode == ControlMode::Auto) {
    const Vec2 before = ctrl.position;
    const StepResult r = auto_step(ctrl, ctx);
    if (ctrl.position != before) events.push_back({EventKind::Moved, ""});
    if (r.hit_wall) events.push_back({EventKind::Collision, "autopilot move blocked"});
    if (ctrl.critical) {
      if (check_switch(ctrl, *ctrl.critical)) {
        events.push_back({EventKind::ModeChanged, "MANUAL (critical area reached)"});
      } else if (!ctrl.switch_armed &&
                 distance(ctrl.position, ctrl.critical->center) > ctrl.critical->eps) {
        ctrl.switch_armed = true;
      }
    }
  } else if (input) {
    const ManualStepResult r = manual_step(ctrl, *input, ctx);
    if (r.increment.x != 0.0 || r.increment.y != 0.0) events.push_back({EventKind::Moved, ""});
    if (r.collided) events.push_back({EventKind::Collision, "manual move blocked"});
  } else {
    ctrl.last_reward = 0.0;
  }

  if (distance(ctrl.position, ctrl.target) < ctx.env.arrival_threshold) {
    ctrl.done = true;
    events.push_back({EventKind::Arrived, ""});
  }
  return events;
}

CriticalArea mark_critical_area(ControllerState& ctrl, const OccupancyGrid& grid, Vec2 center,
                                double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw InputError("critical radius must be positive");
  if (!grid.is_free(center)) throw InputError("critical center is outside the navigable region");
  ctrl.critical = CriticalArea{center, eps};
  ctrl.switch_armed = true;
  ctrl.critical_reached = false;
  return *ctrl.critical;
}

std::vector<ControllerEvent> takeover(ControllerState& ctrl) {
  if (ctrl.mode == ControlMode::Manual) return {};
  return {switch_mode(ctrl, ControlMode::Manual, "operator takeover")};
}

std::vector<ControllerEvent> re_arm(ControllerState& ctrl) {
  if (ctrl.mode == ControlMode::Auto) return {};
  return {switch_mode(ctrl, ControlMode::Auto, "re-armed")};
}

bool InputQueue::push(const HandDelta& d) {
  bool dropped = false;
  if (items_.size() >= capacity_) {
    items_.pop_front();
    dropped = true;
  }
  items_.push_back(d);
  return !dropped;
}

std::vector<HandDelta> InputQueue::drain() {
  std::vector<HandDelta> out(items_.begin(), items_.end());
  items_.clear();
  std::stable_sort(out.begin(), out.end(),
                   [](const HandDelta& a, const HandDelta& b) { return a.t_ms < b.t_ms; });
  return out;
}

}  // namespace mvnav
