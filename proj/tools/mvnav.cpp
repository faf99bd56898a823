// mvnav: map ingestion, training, evaluation, teleop serving, replay and
// trajectory reports.
//
// Exit codes: 0 success, 1 user error, 2 internal fault.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>

#include "mvnav/benchmark_map.hpp"
#include "mvnav/config.hpp"
#include "mvnav/error.hpp"
#include "mvnav/image_io.hpp"
#include "mvnav/session.hpp"
#include "mvnav/stats.hpp"
#include "mvnav/teleop_server.hpp"

namespace fs = std::filesystem;
using namespace mvnav;

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted = true; }

std::string version_string() {
  std::string v = "mvnav " MVNAV_VERSION;
#if defined(__clang__)
  v += " (clang " __clang_version__;
#elif defined(__GNUC__)
  v += " (gcc " __VERSION__;
#else
  v += " (unknown compiler";
#endif
#ifdef NDEBUG
  v += ", release";
#else
  v += ", debug";
#endif
  v += ", built " __DATE__ ")";
  return v;
}

// Environment defaults follow the map: the builtin benchmark carries its own
// scaled radius and step cap.
EnvConfig env_for(const std::string& map, const KeyValueConfig& kv) {
  EnvConfig env = map == kCorridorBenchmarkName ? corridor_benchmark_config() : EnvConfig{};
  apply_config(kv, env);
  return env;
}

KeyValueConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  auto kv = KeyValueConfig::load(path);
  validate_keys(kv);
  return kv;
}

std::optional<Vec2> parse_point(const std::string& text) {
  if (text.empty()) return std::nullopt;
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw InputError("expected x,y but got '" + text + "'");
  try {
    std::size_t a = 0, b = 0;
    const double x = std::stod(text.substr(0, comma), &a);
    const double y = std::stod(text.substr(comma + 1), &b);
    if (a != comma || b != text.size() - comma - 1) throw std::invalid_argument(text);
    return Vec2{x, y};
  } catch (const std::logic_error&) {
    throw InputError("expected x,y but got '" + text + "'");
  }
}

// Episode trajectory as a session-log CSV in pixels.
std::string trajectory_csv(const Trajectory& traj) {
  std::vector<SessionLogRow> rows;
  std::uint64_t tick = 0;
  for (const auto& s : traj.samples) {
    rows.push_back({tick++, s.t * 1000.0, s.mode, s.x / traj.um_per_px, s.y / traj.um_per_px,
                    s.collision ? "collision" : ""});
  }
  return format_session_log(rows);
}

std::vector<MetricsReport> metrics_for_dir(const fs::path& dir, double scale, double window) {
  if (!fs::is_directory(dir)) throw InputError("'" + dir.string() + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<MetricsReport> out;
  for (const auto& f : files) {
    try {
      out.push_back(compute_metrics(read_session_log(f, scale), window));
    } catch (const InputError& e) {
      throw InputError(f.string() + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-autonomous magnetic micro-robot navigation toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version_string());

  // ingest
  std::string map, out, config_path, ckpt, curve, traj_out, record, group_a, group_b;
  std::string algo = "ppo", address = "127.0.0.1", static_root, start_pt, target_pt;
  int threshold = 128, episodes = 100, port = 8080;
  std::optional<double> radius;
  std::optional<std::uint64_t> seed;
  std::optional<long> total_steps;
  bool deterministic = false, autostart = false;
  double scale = 1.0, window = kDefaultSmoothnessWindow, tick_rate = 60.0;

  auto* ingest = app.add_subcommand("ingest", "Threshold a map image and cache the inflated grid");
  ingest->add_option("--map", map, "Grayscale PNG, or benchmark:corridor")->required();
  ingest->add_option("--threshold", threshold, "Lumen threshold (pixel >= threshold)")
      ->check(CLI::Range(0, 255));
  ingest->add_option("--radius", radius, "Agent radius in pixels (default: map default)");
  ingest->add_option("--out", out, "Output grid cache (.mvgrid)")->required();

  auto* train = app.add_subcommand("train", "Train a PPO or A2C policy");
  train->add_option("--algo", algo, "ppo or a2c")->check(CLI::IsMember({"ppo", "a2c"}));
  train->add_option("--map", map, "Map: PNG, .mvgrid or benchmark:corridor")
      ->default_val(std::string(kCorridorBenchmarkName));
  train->add_option("--config", config_path, "Key/value config file");
  train->add_option("--seed", seed, "Training seed (overrides config)");
  train->add_option("--total-steps", total_steps, "Env-step budget (overrides config)");
  train->add_option("--threshold", threshold, "Lumen threshold for PNG maps")
      ->check(CLI::Range(0, 255));
  train->add_option("--out", out, "Output checkpoint (JSON)")->required();
  train->add_option("--curve", curve, "Learning-curve CSV");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on random start/target pairs");
  eval->add_option("--ckpt", ckpt, "Checkpoint (JSON)")->required();
  eval->add_option("--map", map, "Map: PNG, .mvgrid or benchmark:corridor")
      ->default_val(std::string(kCorridorBenchmarkName));
  eval->add_option("--config", config_path, "Key/value config file");
  eval->add_option("--episodes", episodes, "Episode count")->check(CLI::NonNegativeNumber);
  eval->add_flag("--deterministic", deterministic, "Argmax actions instead of sampling");
  eval->add_option("--seed", seed, "Seed for start/target pairs (default 0)");
  eval->add_option("--threshold", threshold, "Lumen threshold for PNG maps")
      ->check(CLI::Range(0, 255));
  eval->add_option("--traj-out", traj_out, "Directory for per-episode session-log CSVs");

  auto* serve = app.add_subcommand("serve", "Run the teleop session server");
  serve->add_option("--map", map, "Map: PNG, .mvgrid or benchmark:corridor")
      ->default_val(std::string(kCorridorBenchmarkName));
  serve->add_option("--ckpt", ckpt, "Checkpoint (JSON) or builtin:straight")->required();
  serve->add_option("--config", config_path, "Key/value config file");
  serve->add_option("--address", address, "Bind address")->envname("MVNAV_ADDRESS");
  serve->add_option("--port", port, "Port (0 picks a free one)")
      ->envname("MVNAV_PORT")
      ->check(CLI::Range(0, 65535));
  serve->add_option("--record", record, "Directory for recording.json and session_log.csv");
  serve->add_option("--static", static_root, "Cockpit asset directory");
  serve->add_option("--seed", seed, "Episode seed (default 0)");
  serve->add_option("--tick-rate", tick_rate, "Ticks per second")->check(CLI::Range(1.0, 1000.0));
  serve->add_option("--start", start_pt, "Fixed start x,y in pixels");
  serve->add_option("--target", target_pt, "Fixed target x,y in pixels");
  serve->add_option("--threshold", threshold, "Lumen threshold for PNG maps")
      ->check(CLI::Range(0, 255));
  serve->add_flag("--autostart", autostart, "Start ticking without waiting for a client");

  auto* replay_cmd = app.add_subcommand("replay", "Replay a recording into a session log");
  replay_cmd->add_option("--record", record, "recording.json")->required();
  replay_cmd->add_option("--out", out, "Output session-log CSV")->required();

  auto* report = app.add_subcommand("report", "Compare trajectory metrics of two run groups");
  report->add_option("--group-a", group_a, "Directory of session-log CSVs")->required();
  report->add_option("--group-b", group_b, "Directory of session-log CSVs")->required();
  report->add_option("--scale", scale, "Micrometres per pixel")->check(CLI::PositiveNumber);
  report->add_option("--window", window, "Smoothness window in seconds")
      ->check(CLI::PositiveNumber);
  report->add_option("--out", out, "Output CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*ingest) {
      const double r = radius ? *radius
                              : (map == kCorridorBenchmarkName ? corridor_benchmark_config()
                                                               : EnvConfig{})
                                    .agent_radius;
      const auto grid = load_map(map, threshold, r);
      grid.save(out);
      std::printf("grid %dx%d, %zu free cells, radius %g -> %s\n", grid.width(), grid.height(),
                  grid.free_cells().size(), r, out.c_str());
    } else if (*train) {
      const auto kv = load_config(config_path);
      const EnvConfig env = env_for(map, kv);
      const auto grid = load_map(map, threshold, env.agent_radius);
      EvalSchedule schedule;
      apply_config(kv, schedule);
      auto progress = [](const CurvePoint& p) {
        std::printf("steps %ld  return %.2f  success %.3f  (%.1f s)\n", p.env_steps, p.mean_return,
                    p.success_rate, p.wall_clock_s);
        std::fflush(stdout);
        return !g_interrupted.load();
      };
      std::signal(SIGINT, on_signal);
      TrainReport rep;
      if (algo == "ppo") {
        PpoConfig cfg;
        apply_config(kv, cfg);
        if (seed) cfg.seed = *seed;
        if (total_steps) cfg.total_steps = *total_steps;
        rep = train_ppo(grid, env, cfg, schedule, progress);
      } else {
        A2cConfig cfg;
        apply_config(kv, cfg);
        if (seed) cfg.seed = *seed;
        if (total_steps) cfg.total_steps = *total_steps;
        rep = train_a2c(grid, env, cfg, schedule, progress);
      }
      auto doc = Json::parse(checkpoint_to_json(rep.final_params));
      doc["training"] = {{"algo", to_string(rep.algorithm)},
                         {"seed", rep.seed},
                         {"env_steps", rep.env_steps},
                         {"map", map}};
      write_file_atomic(out, doc.dump() + "\n");
      if (!curve.empty()) write_file_atomic(curve, format_curve_csv(rep.curve));
      for (const auto& d : rep.diagnostics) std::fprintf(stderr, "warning: %s\n", d.c_str());
      std::printf("algo=%s seed=%llu env_steps=%ld checkpoint=%s\n",
                  std::string(to_string(rep.algorithm)).c_str(),
                  static_cast<unsigned long long>(rep.seed), rep.env_steps, out.c_str());
    } else if (*eval) {
      const auto kv = load_config(config_path);
      const EnvConfig env = env_for(map, kv);
      const auto grid = load_map(map, threshold, env.agent_radius);
      const auto params = load_checkpoint(ckpt);
      Rng rng(seed.value_or(0));
      EvalOptions opts;
      opts.record_trajectories = !traj_out.empty();
      const auto rep = evaluate(params, grid, env, episodes, deterministic, rng, opts);
      if (!traj_out.empty()) {
        fs::create_directories(traj_out);
        char name[32];
        for (std::size_t i = 0; i < rep.trajectories.size(); ++i) {
          std::snprintf(name, sizeof name, "episode_%04zu.csv", i);
          write_file_atomic(fs::path(traj_out) / name, trajectory_csv(rep.trajectories[i]));
        }
      }
      std::printf("episodes=%d seed=%llu deterministic=%s success_rate=%.4f mean_return=%.4f\n",
                  rep.episodes, static_cast<unsigned long long>(seed.value_or(0)),
                  deterministic ? "true" : "false", rep.success_rate, rep.mean_return);
    } else if (*serve) {
      const auto kv = load_config(config_path);
      SessionConfig sc;
      sc.env = env_for(map, kv);
      apply_config(kv, sc.controller);
      sc.seed = seed.value_or(0);
      sc.tick_rate = tick_rate;
      sc.threshold = threshold;
      sc.start = parse_point(start_pt);
      sc.target = parse_point(target_pt);
      ServerOptions so;
      so.address = address;
      so.port = static_cast<unsigned short>(port);
      so.static_root = static_root;
      so.record_dir = record;
      so.autostart = autostart;
      TeleopServer server(Session::create(map, ckpt, sc), so);
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      server.start();
      std::printf("serving on http://%s:%u (websocket /ws), seed=%llu\n", address.c_str(),
                  unsigned(server.port()), static_cast<unsigned long long>(sc.seed));
      std::fflush(stdout);
      while (!g_interrupted.load()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
      server.stop();
      if (!record.empty()) std::printf("recording written to %s\n", record.c_str());
    } else if (*replay_cmd) {
      const auto rec = Recording::load(record);
      const Session s = replay(rec);
      write_file_atomic(out, s.session_log_csv());
      std::printf("replayed %llu ticks (seed=%llu) -> %s\n",
                  static_cast<unsigned long long>(rec.ticks),
                  static_cast<unsigned long long>(rec.config.seed), out.c_str());
    } else if (*report) {
      const auto a = metrics_for_dir(group_a, scale, window);
      const auto b = metrics_for_dir(group_b, scale, window);
      const auto rows = compare_report(a, b);
      std::fputs(format_comparison_table(rows).c_str(), stdout);
      if (!out.empty()) write_file_atomic(out, format_comparison_csv(rows));
    }
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 2;
  }
  return 0;
}
