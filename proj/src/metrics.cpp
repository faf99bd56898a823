#include "mvnav/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mvnav/error.hpp"

namespace mvnav {

std::string_view to_string(ControlMode mode) {
  return mode == ControlMode::Auto ? "AUTO" : "MANUAL";
}

ControlMode parse_control_mode(std::string_view text) {
  if (text == "AUTO") return ControlMode::Auto;
  if (text == "MANUAL") return ControlMode::Manual;
  throw InputError("unknown control mode '" + std::string(text) + "'");
}

namespace {

void require_samples(const Trajectory& traj, std::size_t n, const char* what) {
  if (traj.samples.size() < n) {
    throw InputError(std::string(what) + " needs at least " + std::to_string(n) + " samples");
  }
  for (std::size_t i = 1; i < traj.samples.size(); ++i) {
    if (!(traj.samples[i].t > traj.samples[i - 1].t)) {
      throw InputError("trajectory time stamps must be strictly increasing");
    }
  }
}

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + std::ptrdiff_t(mid), v.end());
  if (v.size() % 2 == 1) return v[mid];
  const double upper = v[mid];
  const double lower = *std::max_element(v.begin(), v.begin() + std::ptrdiff_t(mid));
  return 0.5 * (lower + upper);
}

// Three-point first derivative at interior points of a nonuniform grid.
// Entry i holds f'(t[i + 1]).
std::vector<double> central_first(const std::vector<double>& t, const std::vector<double>& f) {
  std::vector<double> d;
  for (std::size_t i = 1; i + 1 < t.size(); ++i) {
    const double h1 = t[i] - t[i - 1];
    const double h2 = t[i + 1] - t[i];
    d.push_back((h1 * h1 * f[i + 1] - h2 * h2 * f[i - 1] + (h2 * h2 - h1 * h1) * f[i]) /
                (h1 * h2 * (h1 + h2)));
  }
  return d;
}

double central_second(const std::vector<double>& t, const std::vector<double>& f, std::size_t i) {
  const double h1 = t[i] - t[i - 1];
  const double h2 = t[i + 1] - t[i];
  return 2.0 * (h1 * f[i + 1] - (h1 + h2) * f[i] + h2 * f[i - 1]) / (h1 * h2 * (h1 + h2));
}

struct Columns {
  std::vector<double> t, x, y;
};

Columns columns(const Trajectory& traj) {
  Columns c;
  for (const auto& s : traj.samples) {
    c.t.push_back(s.t);
    c.x.push_back(s.x);
    c.y.push_back(s.y);
  }
  return c;
}

std::vector<double> drop_ends(const std::vector<double>& v) {
  return {v.begin() + 1, v.end() - 1};
}

}  // namespace

double average_speed(const Trajectory& traj) {
  require_samples(traj, 2, "average speed");
  double length = 0.0;
  for (std::size_t i = 1; i < traj.samples.size(); ++i) {
    length += std::hypot(traj.samples[i].x - traj.samples[i - 1].x,
                         traj.samples[i].y - traj.samples[i - 1].y);
  }
  const double duration = traj.samples.back().t - traj.samples.front().t;
  if (!(duration > 0.0)) throw InputError("trajectory has zero duration");
  return length / duration;
}

double time_of_completion(const Trajectory& traj) {
  require_samples(traj, 2, "time of completion");
  return traj.samples.back().t - traj.samples.front().t;
}

double gracefulness(const Trajectory& traj, double curvature_floor) {
  require_samples(traj, 3, "gracefulness");
  const auto c = columns(traj);
  const auto vx = central_first(c.t, c.x);
  const auto vy = central_first(c.t, c.y);
  std::vector<double> logs;
  for (std::size_t i = 1; i + 1 < c.t.size(); ++i) {
    const double sx = vx[i - 1];
    const double sy = vy[i - 1];
    const double speed = std::hypot(sx, sy);
    if (speed == 0.0) continue;
    const double ax = central_second(c.t, c.x, i);
    const double ay = central_second(c.t, c.y, i);
    const double kappa = std::abs(sx * ay - sy * ax) / (speed * speed * speed);
    logs.push_back(std::log10(std::max(kappa, curvature_floor)));
  }
  if (logs.empty()) throw InputError("trajectory is stationary; curvature undefined");
  return median(std::move(logs));
}

double smoothness(const Trajectory& traj, double window, double jerk_floor) {
  require_samples(traj, 4, "smoothness");
  if (!(window > 0.0)) throw InputError("smoothness window must be positive");
  const auto c = columns(traj);
  const double t0 = c.t.front();
  const double duration = c.t.back() - t0;
  const double slack = 1e-9 * window;
  if (window > duration + slack) throw InputError("smoothness window exceeds trajectory duration");

  // Velocity on t[1..n-2], acceleration on t[2..n-3], jerk on t[3..n-4].
  const auto vx = central_first(c.t, c.x);
  const auto vy = central_first(c.t, c.y);
  const auto tv = drop_ends(c.t);
  const auto ax = central_first(tv, vx);
  const auto ay = central_first(tv, vy);
  const auto ta = drop_ends(tv);
  const auto jx = central_first(ta, ax);
  const auto jy = central_first(ta, ay);
  const auto tj = drop_ends(ta);

  std::vector<double> logs;
  bool saw_degenerate = false;
  for (double start = t0; start + window <= c.t.back() + slack; start += window) {
    const double end = start + window;
    auto inside = [&](double t) { return t >= start - slack && t <= end + slack; };

    std::size_t in_window = 0;
    for (double t : c.t) in_window += inside(t) ? 1 : 0;
    if (in_window < 4) continue;

    double peak = 0.0;
    for (std::size_t i = 0; i < tv.size(); ++i) {
      if (inside(tv[i])) peak = std::max(peak, std::hypot(vx[i], vy[i]));
    }
    double integral = 0.0;
    std::size_t jerk_samples = 0;
    double prev_t = 0.0;
    double prev_j2 = 0.0;
    for (std::size_t i = 0; i < tj.size(); ++i) {
      if (!inside(tj[i])) continue;
      const double j2 = jx[i] * jx[i] + jy[i] * jy[i];
      if (jerk_samples > 0) integral += 0.5 * (j2 + prev_j2) * (tj[i] - prev_t);
      prev_t = tj[i];
      prev_j2 = j2;
      ++jerk_samples;
    }
    if (jerk_samples < 2) continue;
    if (peak == 0.0) {
      saw_degenerate = true;
      continue;
    }
    const double phi = std::pow(window, 5) / (peak * peak) * integral;
    logs.push_back(std::log10(std::max(phi, jerk_floor)));
  }
  if (logs.empty()) {
    throw InputError(saw_degenerate ? "every smoothness window has zero peak speed"
                                    : "no smoothness window has enough samples");
  }
  return median(std::move(logs));
}

std::size_t collision_count(const Trajectory& traj) {
  std::size_t runs = 0;
  bool previous = false;
  for (const auto& s : traj.samples) {
    if (s.collision && !previous) ++runs;
    previous = s.collision;
  }
  return runs;
}

MetricsReport compute_metrics(const Trajectory& traj, double window) {
  MetricsReport r;
  r.average_speed = average_speed(traj);
  r.time_of_completion = time_of_completion(traj);
  r.gracefulness = gracefulness(traj);
  r.smoothness = smoothness(traj, std::min(window, r.time_of_completion));
  r.collisions = collision_count(traj);
  return r;
}

std::string format_session_log(const std::vector<SessionLogRow>& rows) {
  std::string out = "tick,t_ms,mode,x,y,event\n";
  char line[256];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%llu,%.3f,%s,%.6f,%.6f,",
                  static_cast<unsigned long long>(r.tick), r.t_ms,
                  r.mode == ControlMode::Auto ? "AUTO" : "MANUAL", r.x, r.y);
    out += line;
    out += r.events;
    out += '\n';
  }
  return out;
}

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t pos = 0;
  while (true) {
    const auto next = s.find(sep, pos);
    parts.push_back(s.substr(pos, next == std::string_view::npos ? std::string_view::npos
                                                                  : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return parts;
}

double to_double(std::string_view s, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw InputError("session log line " + std::to_string(line) + ": bad number '" +
                     std::string(s) + "'");
  }
  return v;
}

}  // namespace

Trajectory parse_session_log(std::string_view csv, double um_per_px) {
  Trajectory traj;
  traj.um_per_px = um_per_px;
  std::size_t line_no = 0;
  for (auto line : split(csv, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "tick,t_ms,mode,x,y,event") throw InputError("missing session-log header");
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 6) {
      throw InputError("session log line " + std::to_string(line_no) + ": expected 6 fields");
    }
    TrajectorySample s;
    s.t = to_double(f[1], line_no) / 1000.0;
    s.mode = parse_control_mode(f[2]);
    s.x = to_double(f[3], line_no) * um_per_px;
    s.y = to_double(f[4], line_no) * um_per_px;
    for (auto ev : split(f[5], ';')) s.collision = s.collision || ev == "collision";
    traj.samples.push_back(s);
  }
  return traj;
}

Trajectory read_session_log(const std::filesystem::path& path, double um_per_px) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open session log '" + path.string() + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_session_log(ss.str(), um_per_px);
}

}  // namespace mvnav
