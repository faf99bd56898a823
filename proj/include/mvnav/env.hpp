#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>

#include "mvnav/geometry.hpp"
#include "mvnav/occupancy_grid.hpp"

namespace mvnav {

using Rng = std::mt19937_64;

inline constexpr int kActionCount = 40;
inline constexpr int kObservationSize = 6;

struct RewardCoefficients {
  double arrive = 1000.0;
  double wall = -10.0;
  double distance = 0.005;
  double displacement = 0.02;
};

struct EnvConfig {
  double agent_radius = 50.0;
  double arrival_threshold = 10.0;
  int max_steps = 20000;
  RewardCoefficients reward;
};

struct EnvState {
  Vec2 position;
  Vec2 start;
  Vec2 target;
  int step_count = 0;
  bool done = false;
};

struct Action {
  int index = 0;
  int dx = 0;
  int dy = 0;

  double magnitude() const { return std::hypot(double(dx), double(dy)); }
};

struct StepResult {
  EnvState next_state;
  double reward = 0.0;
  bool hit_wall = false;
  bool arrived = false;
  bool truncated = false;
};

using Observation = std::array<double, kObservationSize>;

// The integer points on the boundary of the 11x11 square centered at the
// origin, in row-major order (dy from -5 to 5, then dx from -5 to 5).
const std::array<Action, kActionCount>& action_table();

// Per-step reward. Arrival dominates; otherwise a distance and displacement
// penalty, with the wall penalty added on top when the move was blocked.
double reward(double d, double t, bool arrived, bool hit_wall, const EnvConfig& config);

// Starts an episode. Missing endpoints are drawn uniformly from the
// inflated-navigable cells; random pairs closer than the arrival threshold
// are redrawn. Throws InputError for a supplied point that is not free.
EnvState reset(const OccupancyGrid& grid, const EnvConfig& config, Rng& rng,
               std::optional<Vec2> start = std::nullopt,
               std::optional<Vec2> target = std::nullopt);

StepResult step(const EnvState& state, int action_index, const OccupancyGrid& grid,
                const EnvConfig& config);

// (x, y, x_start, y_start, x_target, y_target), x components divided by the
// grid width and y components by the grid height.
Observation observe(const EnvState& state, const OccupancyGrid& grid);

// Inverse of observe() for the three points.
EnvState denormalize(const Observation& obs, const OccupancyGrid& grid);

}  // namespace mvnav
