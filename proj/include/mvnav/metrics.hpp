#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mvnav {

enum class ControlMode { Auto, Manual };

std::string_view to_string(ControlMode mode);
ControlMode parse_control_mode(std::string_view text);

struct TrajectorySample {
  double t = 0.0;  // seconds
  double x = 0.0;  // micrometres
  double y = 0.0;  // micrometres
  bool collision = false;
  ControlMode mode = ControlMode::Auto;
};

// Timestamped planar path. Positions are in micrometres; `um_per_px`
// records the scale used when the path was converted from pixels.
struct Trajectory {
  std::vector<TrajectorySample> samples;
  double um_per_px = 1.0;
};

struct MetricsReport {
  double average_speed = 0.0;       // Va, um/s
  double time_of_completion = 0.0;  // TOC, s
  double gracefulness = 0.0;        // G
  double smoothness = 0.0;          // S
  std::size_t collisions = 0;       // C
};

inline constexpr double kCurvatureFloor = 1e-12;
inline constexpr double kJerkFloor = 1e-12;
inline constexpr double kDefaultSmoothnessWindow = 1.0;

// Path length over duration. Throws InputError for fewer than two samples,
// non-increasing time stamps, or zero duration.
double average_speed(const Trajectory& traj);

double time_of_completion(const Trajectory& traj);

// Median over interior samples of log10(max(kappa, floor)), where kappa is
// the planar curvature from three-point central differences on the actual
// (possibly nonuniform) time grid. Stationary samples are skipped.
double gracefulness(const Trajectory& traj, double curvature_floor = kCurvatureFloor);

// Splits the trajectory into consecutive windows of `window` seconds and
// takes the median over windows of
//   log10(max(window^5 / v_peak^2 * integral |jerk|^2 dt, floor)).
// Jerk comes from three nested central differences (endpoints excluded) and
// the integral from the trapezoid rule over each window's samples.
double smoothness(const Trajectory& traj, double window = kDefaultSmoothnessWindow,
                  double jerk_floor = kJerkFloor);

// Number of maximal runs of consecutive collision-flagged samples.
std::size_t collision_count(const Trajectory& traj);

MetricsReport compute_metrics(const Trajectory& traj, double window = kDefaultSmoothnessWindow);

// One row of a session log; positions in pixels.
struct SessionLogRow {
  std::uint64_t tick = 0;
  double t_ms = 0.0;
  ControlMode mode = ControlMode::Auto;
  double x = 0.0;
  double y = 0.0;
  std::string events;
};

// Byte-stable rendering: fixed decimal places, '\n' line endings.
std::string format_session_log(const std::vector<SessionLogRow>& rows);

// Session-log CSV: header `tick,t_ms,mode,x,y,event`; x and y in pixels;
// `event` is a ';'-separated list of event kinds (a sample is flagged as a
// collision when the list contains "collision").
Trajectory read_session_log(const std::filesystem::path& path, double um_per_px);
Trajectory parse_session_log(std::string_view csv, double um_per_px);

}  // namespace mvnav
