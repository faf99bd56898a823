#include "mvnav/env.hpp"

#include <cmath>
#include <string>

#include "mvnav/error.hpp"

namespace mvnav {

namespace {

std::array<Action, kActionCount> build_action_table() {
  std::array<Action, kActionCount> table{};
  int next = 0;
  for (int dy = -5; dy <= 5; ++dy) {
    for (int dx = -5; dx <= 5; ++dx) {
      if (std::max(std::abs(dx), std::abs(dy)) != 5) continue;
      table[next] = Action{next, dx, dy};
      ++next;
    }
  }
  return table;
}

Vec2 draw_free_cell(const OccupancyGrid& grid, Rng& rng) {
  const auto& cells = grid.free_cells();
  std::uniform_int_distribution<std::size_t> pick(0, cells.size() - 1);
  return grid.cell_center(cells[pick(rng)]);
}

std::string describe(const Vec2& p) {
  return "(" + std::to_string(p.x) + ", " + std::to_string(p.y) + ")";
}

}  // namespace

const std::array<Action, kActionCount>& action_table() {
  static const auto table = build_action_table();
  return table;
}

double reward(double d, double t, bool arrived, bool hit_wall, const EnvConfig& config) {
  const auto& c = config.reward;
  if (arrived) return c.arrive;
  double r = -c.distance * d - c.displacement * t;
  if (hit_wall) r += c.wall;
  return r;
}

EnvState reset(const OccupancyGrid& grid, const EnvConfig& config, Rng& rng,
               std::optional<Vec2> start, std::optional<Vec2> target) {
  if (start && !grid.is_free(*start)) {
    throw InputError("start " + describe(*start) + " is outside the navigable region");
  }
  if (target && !grid.is_free(*target)) {
    throw InputError("target " + describe(*target) + " is outside the navigable region");
  }
  if (!start && !target && grid.free_cells().size() < 2) {
    throw InputError("navigable region too small to place distinct start and target");
  }

  EnvState s;
  constexpr int kMaxDraws = 1'000'000;
  for (int attempt = 0;; ++attempt) {
    if (attempt == kMaxDraws) throw InputError("could not draw a start/target pair");
    s.start = start ? *start : draw_free_cell(grid, rng);
    s.target = target ? *target : draw_free_cell(grid, rng);
    if (start && target) break;
    if (distance(s.start, s.target) >= config.arrival_threshold) break;
  }
  s.position = s.start;
  s.step_count = 0;
  s.done = false;
  return s;
}

StepResult step(const EnvState& state, int action_index, const OccupancyGrid& grid,
                const EnvConfig& config) {
  if (state.done) throw InputError("step called on a finished episode");
  if (action_index < 0 || action_index >= kActionCount) {
    throw InputError("action index " + std::to_string(action_index) + " out of range");
  }
  const Action& a = action_table()[action_index];

  StepResult r;
  r.next_state = state;
  const Vec2 tentative = state.position + Vec2{double(a.dx), double(a.dy)};
  if (grid.is_free(tentative)) {
    r.next_state.position = tentative;
  } else {
    r.hit_wall = true;
  }
  r.next_state.step_count = state.step_count + 1;

  const double d = distance(r.next_state.position, state.target);
  r.arrived = d < config.arrival_threshold;
  r.reward = reward(d, a.magnitude(), r.arrived, r.hit_wall, config);
  r.truncated = !r.arrived && r.next_state.step_count >= config.max_steps;
  r.next_state.done = r.arrived || r.truncated;
  return r;
}

Observation observe(const EnvState& state, const OccupancyGrid& grid) {
  const double w = grid.width();
  const double h = grid.height();
  return {state.position.x / w, state.position.y / h, state.start.x / w,
          state.start.y / h,    state.target.x / w,   state.target.y / h};
}

EnvState denormalize(const Observation& obs, const OccupancyGrid& grid) {
  const double w = grid.width();
  const double h = grid.height();
  EnvState s;
  s.position = {obs[0] * w, obs[1] * h};
  s.start = {obs[2] * w, obs[3] * h};
  s.target = {obs[4] * w, obs[5] * h};
  return s;
}

}  // namespace mvnav
