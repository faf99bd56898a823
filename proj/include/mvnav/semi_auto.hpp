#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvnav/env.hpp"
#include "mvnav/metrics.hpp"
#include "mvnav/trainers.hpp"

namespace mvnav {

struct ControllerConfig {
  double tau = 1.0;            // hand-to-robot scale
  double increment_cap = 50.0;  // per-tick bound on each increment component, px
  double critical_eps = 50.0;   // default critical-area radius, px
  std::size_t queue_capacity = 256;
};

struct CriticalArea {
  Vec2 center;
  double eps = 50.0;
};

// Absolute hand position P_m and its timestamp.
struct OperatorInput {
  Vec2 hand;
  std::uint64_t t_ms = 0;
};

enum class EventKind { Moved, ModeChanged, Collision, Arrived, Fault };
std::string_view to_string(EventKind kind);

struct ControllerEvent {
  EventKind kind = EventKind::Moved;
  std::string detail;
};

struct ModeTransition {
  std::uint64_t tick = 0;
  ControlMode to = ControlMode::Manual;
  std::string reason;
};

struct ControllerState {
  ControlMode mode = ControlMode::Auto;
  Vec2 position;  // P_s
  Vec2 start;
  Vec2 target;    // final destination of the session
  std::optional<OperatorInput> last_input;
  std::optional<CriticalArea> critical;
  // The switch fires once per arrival; it re-arms when the area is marked
  // again or after the robot has left the area in AUTO mode.
  bool switch_armed = false;
  // Set once the switch has fired for the current area. The autopilot then
  // steers for the final target even after the switch re-arms.
  bool critical_reached = false;
  bool done = false;  // arrived at the target
  std::uint64_t tick = 0;
  std::size_t collisions = 0;
  double last_reward = 0.0;
  std::vector<ModeTransition> history;
};

// Everything a tick needs besides the mutable state.
struct ControllerContext {
  const OccupancyGrid* grid = nullptr;
  EnvConfig env;
  ControllerConfig config;
  ActionSelector policy;
};

ControllerState make_controller(const EnvState& episode);

// Hand-scaled increment tau * dP_m, each component clamped to +-cap. The
// first input only initializes P_m. A blocked move leaves P_s unchanged and
// reports a collision. Throws InputError on a non-increasing timestamp or outside
// MANUAL mode.
struct ManualStepResult {
  Vec2 increment;  // applied increment after clamping (zero when blocked)
  bool collided = false;
};
ManualStepResult manual_step(ControllerState& ctrl, const OperatorInput& input,
                             const ControllerContext& ctx);

// One environment step with the argmax policy action. The policy is pointed
// at the critical center until the area is first reached, then at the target.
StepResult auto_step(ControllerState& ctrl, const ControllerContext& ctx);

// |P_s - P_critical| <= eps. On true the mode becomes MANUAL and the
// transition is logged; the switch disarms until re-armed.
bool check_switch(ControllerState& ctrl, const CriticalArea& critical);

// AUTO: auto_step then check_switch. MANUAL: manual_step with the latest
// input, if any. Both: arrival check against the target.
std::vector<ControllerEvent> tick(ControllerState& ctrl, std::optional<OperatorInput> input,
                                  const ControllerContext& ctx);

// Stores the area and arms the switch. Throws InputError when the center is
// not free or eps is not positive.
CriticalArea mark_critical_area(ControllerState& ctrl, const OccupancyGrid& grid, Vec2 center,
                                double eps);

// Operator override to MANUAL; no-op when already MANUAL.
std::vector<ControllerEvent> takeover(ControllerState& ctrl);
// Back to AUTO.
std::vector<ControllerEvent> re_arm(ControllerState& ctrl);

// Hand movement reported by the operator device.
struct HandDelta {
  Vec2 delta;
  std::uint64_t t_ms = 0;
};

// Bounded FIFO; pushing into a full queue drops the oldest entry.
class InputQueue {
 public:
  explicit InputQueue(std::size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

  // Returns false when an entry had to be dropped.
  bool push(const HandDelta& d);
  // All pending entries, stably ordered by timestamp.
  std::vector<HandDelta> drain();
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  std::deque<HandDelta> items_;
};

}  // namespace mvnav
