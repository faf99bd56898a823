#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mvnav/benchmark_map.hpp"
#include "mvnav/error.hpp"
#include "mvnav/magnet.hpp"
#include "mvnav/metrics.hpp"
#include "mvnav/occupancy_grid.hpp"
#include "mvnav/policy.hpp"
#include "mvnav/semi_auto.hpp"
#include "mvnav/session.hpp"
#include "mvnav/stats.hpp"
#include "mvnav/trainers.hpp"

namespace py = pybind11;
using namespace mvnav;

namespace {

std::pair<double, double> pair_of(const Vec2& v) { return {v.x, v.y}; }
Vec2 vec_of(const std::pair<double, double>& p) { return {p.first, p.second}; }

std::optional<Vec2> opt_vec(const std::optional<std::pair<double, double>>& p) {
  if (!p) return std::nullopt;
  return vec_of(*p);
}

Trajectory make_trajectory(const std::vector<double>& t, const std::vector<double>& x,
                           const std::vector<double>& y, const std::vector<bool>& collision) {
  if (t.size() != x.size() || t.size() != y.size() ||
      (!collision.empty() && collision.size() != t.size())) {
    throw InputError("t, x, y (and collision) must have equal lengths");
  }
  Trajectory traj;
  for (std::size_t i = 0; i < t.size(); ++i) {
    traj.samples.push_back({t[i], x[i], y[i], !collision.empty() && collision[i], ControlMode::Auto});
  }
  return traj;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Magnetic micro-robot navigation core";
  m.attr("__version__") = MVNAV_VERSION;

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InputError>(m, "InputError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<AdsorptionFault>(m, "AdsorptionFault", base.ptr());

  // Maps and environment.
  py::class_<OccupancyGrid>(m, "OccupancyGrid")
      .def_property_readonly("width", &OccupancyGrid::width)
      .def_property_readonly("height", &OccupancyGrid::height)
      .def("is_free", [](const OccupancyGrid& g, double x, double y) { return g.is_free({x, y}); })
      .def("navigable", &OccupancyGrid::navigable)
      .def("inflated", &OccupancyGrid::inflated)
      .def("free_cell_count", [](const OccupancyGrid& g) { return g.free_cells().size(); })
      .def("save", &OccupancyGrid::save)
      .def_static("load", &OccupancyGrid::load);

  m.def("load_map", &load_map, py::arg("spec"), py::arg("threshold") = 128,
        py::arg("agent_radius") = 50.0,
        "Load a PNG, an .mvgrid cache, or 'benchmark:corridor'.");
  m.def(
      "ingest_map",
      [](const std::vector<std::uint8_t>& pixels, int width, int height, int threshold,
         double radius) {
        if (pixels.size() != std::size_t(width) * std::size_t(height)) {
          throw InputError("pixel count does not match width * height");
        }
        return ingest_map(GrayImage{width, height, pixels}, threshold, radius);
      },
      py::arg("pixels"), py::arg("width"), py::arg("height"), py::arg("threshold") = 128,
      py::arg("agent_radius") = 50.0);

  py::class_<EnvConfig>(m, "EnvConfig")
      .def(py::init<>())
      .def_readwrite("agent_radius", &EnvConfig::agent_radius)
      .def_readwrite("arrival_threshold", &EnvConfig::arrival_threshold)
      .def_readwrite("max_steps", &EnvConfig::max_steps);
  m.def("corridor_benchmark_config", &corridor_benchmark_config);

  py::class_<EnvState>(m, "EnvState")
      .def(py::init<>())
      .def_property(
          "position", [](const EnvState& s) { return pair_of(s.position); },
          [](EnvState& s, std::pair<double, double> p) { s.position = vec_of(p); })
      .def_property_readonly("start", [](const EnvState& s) { return pair_of(s.start); })
      .def_property_readonly("target", [](const EnvState& s) { return pair_of(s.target); })
      .def_readonly("step_count", &EnvState::step_count)
      .def_readonly("done", &EnvState::done);

  py::class_<StepResult>(m, "StepResult")
      .def_readonly("next_state", &StepResult::next_state)
      .def_readonly("reward", &StepResult::reward)
      .def_readonly("hit_wall", &StepResult::hit_wall)
      .def_readonly("arrived", &StepResult::arrived)
      .def_readonly("truncated", &StepResult::truncated);

  m.def("action_table", [] {
    std::vector<std::pair<int, int>> out;
    for (const auto& a : action_table()) out.emplace_back(a.dx, a.dy);
    return out;
  });
  m.def("reward", &reward, py::arg("d"), py::arg("t"), py::arg("arrived"), py::arg("hit_wall"),
        py::arg("config") = EnvConfig{});
  m.def(
      "reset",
      [](const OccupancyGrid& g, const EnvConfig& c, std::uint64_t seed,
         std::optional<std::pair<double, double>> start,
         std::optional<std::pair<double, double>> target) {
        Rng rng(seed);
        return reset(g, c, rng, opt_vec(start), opt_vec(target));
      },
      py::arg("grid"), py::arg("config"), py::arg("seed") = 0, py::arg("start") = py::none(),
      py::arg("target") = py::none());
  m.def("step", &step, py::arg("state"), py::arg("action"), py::arg("grid"), py::arg("config"));
  m.def("observe", &observe);

  // Policy network.
  py::class_<PolicyParams>(m, "PolicyParams")
      .def_static(
          "orthogonal", [](std::uint64_t seed) {
            Rng rng(seed);
            return PolicyParams::orthogonal(Architecture{}, rng);
          },
          py::arg("seed") = 0)
      .def_property_readonly("size", [](const PolicyParams& p) { return p.size(); })
      .def("to_json", &checkpoint_to_json)
      .def_static("from_json", &checkpoint_from_json);
  m.def(
      "forward",
      [](const PolicyParams& p, const Observation& obs) {
        const auto r = forward(p, obs);
        return std::make_pair(Eigen::VectorXd(r.logits.col(0)), r.values(0));
      },
      "Logits and value for one observation.");
  m.def("load_checkpoint", &load_checkpoint);
  m.def("save_checkpoint", &save_checkpoint);

  // Training and evaluation.
  py::class_<PpoConfig>(m, "PpoConfig")
      .def(py::init<>())
      .def_readwrite("total_steps", &PpoConfig::total_steps)
      .def_readwrite("rollout_length", &PpoConfig::rollout_length)
      .def_readwrite("minibatch_size", &PpoConfig::minibatch_size)
      .def_readwrite("epochs", &PpoConfig::epochs)
      .def_readwrite("learning_rate", &PpoConfig::learning_rate)
      .def_readwrite("num_envs", &PpoConfig::num_envs)
      .def_readwrite("seed", &PpoConfig::seed);
  py::class_<A2cConfig>(m, "A2cConfig")
      .def(py::init<>())
      .def_readwrite("total_steps", &A2cConfig::total_steps)
      .def_readwrite("n_steps", &A2cConfig::n_steps)
      .def_readwrite("learning_rate", &A2cConfig::learning_rate)
      .def_readwrite("num_envs", &A2cConfig::num_envs)
      .def_readwrite("seed", &A2cConfig::seed);
  py::class_<EvalSchedule>(m, "EvalSchedule")
      .def(py::init<>())
      .def_readwrite("eval_interval", &EvalSchedule::eval_interval)
      .def_readwrite("eval_episodes", &EvalSchedule::eval_episodes)
      .def_readwrite("stop_at_success", &EvalSchedule::stop_at_success);
  py::class_<CurvePoint>(m, "CurvePoint")
      .def_readonly("env_steps", &CurvePoint::env_steps)
      .def_readonly("mean_return", &CurvePoint::mean_return)
      .def_readonly("success_rate", &CurvePoint::success_rate);
  py::class_<TrainReport>(m, "TrainReport")
      .def_readonly("env_steps", &TrainReport::env_steps)
      .def_readonly("curve", &TrainReport::curve)
      .def_readonly("final_params", &TrainReport::final_params);
  m.def("train_ppo", &train_ppo, py::arg("grid"), py::arg("env"), py::arg("config"),
        py::arg("schedule") = EvalSchedule{}, py::arg("progress") = ProgressCallback{},
        py::call_guard<py::gil_scoped_release>());
  m.def("train_a2c", &train_a2c, py::arg("grid"), py::arg("env"), py::arg("config"),
        py::arg("schedule") = EvalSchedule{}, py::arg("progress") = ProgressCallback{},
        py::call_guard<py::gil_scoped_release>());
  m.def(
      "evaluate",
      [](const PolicyParams& p, const OccupancyGrid& g, const EnvConfig& env, int n,
         bool deterministic, std::uint64_t seed) {
        Rng rng(seed);
        const auto r = evaluate(p, g, env, n, deterministic, rng);
        return py::dict(py::arg("episodes") = r.episodes, py::arg("success_rate") = r.success_rate,
                        py::arg("mean_return") = r.mean_return);
      },
      py::arg("params"), py::arg("grid"), py::arg("env"), py::arg("episodes"),
      py::arg("deterministic") = true, py::arg("seed") = 0);

  // Metrics and statistics.
  py::class_<MetricsReport>(m, "MetricsReport")
      .def_readonly("average_speed", &MetricsReport::average_speed)
      .def_readonly("time_of_completion", &MetricsReport::time_of_completion)
      .def_readonly("gracefulness", &MetricsReport::gracefulness)
      .def_readonly("smoothness", &MetricsReport::smoothness)
      .def_readonly("collisions", &MetricsReport::collisions);
  m.def(
      "compute_metrics",
      [](const std::vector<double>& t, const std::vector<double>& x, const std::vector<double>& y,
         const std::vector<bool>& collision, double window) {
        return compute_metrics(make_trajectory(t, x, y, collision), window);
      },
      py::arg("t"), py::arg("x"), py::arg("y"), py::arg("collision") = std::vector<bool>{},
      py::arg("window") = kDefaultSmoothnessWindow);
  m.def(
      "gracefulness",
      [](const std::vector<double>& t, const std::vector<double>& x, const std::vector<double>& y) {
        return gracefulness(make_trajectory(t, x, y, {}));
      });
  m.def(
      "smoothness",
      [](const std::vector<double>& t, const std::vector<double>& x, const std::vector<double>& y,
         double window) { return smoothness(make_trajectory(t, x, y, {}), window); },
      py::arg("t"), py::arg("x"), py::arg("y"), py::arg("window") = kDefaultSmoothnessWindow);
  m.def("shapiro_wilk", [](const std::vector<double>& v) {
    const auto r = shapiro_wilk(v);
    return std::make_pair(r.statistic, r.p_value);
  });
  m.def("welch_t_test", [](const std::vector<double>& a, const std::vector<double>& b) {
    const auto r = welch_t_test(a, b);
    return std::make_pair(r.statistic, r.p_value);
  });
  m.def("mann_whitney_u", [](const std::vector<double>& a, const std::vector<double>& b) {
    const auto r = mann_whitney_u(a, b);
    return std::make_pair(r.u, r.p_value);
  });

  // Magnet model (SI units).
  py::class_<MagnetConfig>(m, "MagnetConfig")
      .def(py::init<>())
      .def_readwrite("flux_density", &MagnetConfig::flux_density)
      .def_readwrite("driver_diameter", &MagnetConfig::driver_diameter)
      .def_readwrite("robot_diameter", &MagnetConfig::robot_diameter)
      .def_readwrite("robot_density", &MagnetConfig::robot_density)
      .def_readwrite("robot_magnetization", &MagnetConfig::robot_magnetization)
      .def_readwrite("drag", &MagnetConfig::drag);
  m.def("dipole_field", [](const Vec3& moment, const Vec3& position, const Vec3& r) {
    return dipole_field(Dipole{moment, position}, r);
  });
  m.def("dipole_force",
        [](const Vec3& robot_moment, const Vec3& moment, const Vec3& position, const Vec3& r) {
          return dipole_force(robot_moment, MagneticField(Dipole{moment, position}), r);
        });
  m.def("critical_distance", &critical_distance, py::arg("config") = MagnetConfig{});
  m.def("axial_force", &axial_force);

  // Teleop session without networking.
  py::class_<Session>(m, "Session")
      .def(py::init([](const std::string& map, const std::string& checkpoint, std::uint64_t seed,
                       const EnvConfig& env, double tick_rate) {
             SessionConfig c;
             c.seed = seed;
             c.env = env;
             c.tick_rate = tick_rate;
             return Session::create(map, checkpoint, c);
           }),
           py::arg("map"), py::arg("checkpoint"), py::arg("seed") = 0,
           py::arg("env") = corridor_benchmark_config(), py::arg("tick_rate") = 60.0)
      .def("handle_message",
           [](Session& s, const std::string& text) {
             const auto out = s.handle_message(std::string_view(text));
             std::vector<std::string> reply, broadcast;
             for (const auto& j : out.reply) reply.push_back(j.dump());
             for (const auto& j : out.broadcast) broadcast.push_back(j.dump());
             return std::make_pair(reply, broadcast);
           })
      .def("tick",
           [](Session& s) {
             std::vector<std::string> out;
             for (const auto& j : s.tick()) out.push_back(j.dump());
             return out;
           })
      .def("state_message", [](const Session& s) { return s.state_message().dump(); })
      .def_property_readonly("tick_count", &Session::tick_count)
      .def("session_log_csv", &Session::session_log_csv)
      .def("recording_json", [](const Session& s) { return s.recording().to_json().dump(); });
  m.def("replay_json", [](const std::string& text) {
    return replay(Recording::from_json(Json::parse(text))).session_log_csv();
  });
}
