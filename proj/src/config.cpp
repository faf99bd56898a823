#include "mvnav/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <type_traits>

#include "mvnav/error.hpp"

namespace mvnav {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string where(std::size_t line) { return "config line " + std::to_string(line) + ": "; }

// Drops a trailing comment that is not inside a quoted string.
std::string_view strip_comment(std::string_view s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

std::string parse_value(std::string_view v, std::size_t line) {
  if (v.empty()) throw InputError(where(line) + "missing value");
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"') throw InputError(where(line) + "unterminated string");
    return std::string(v.substr(1, v.size() - 2));
  }
  if (v.front() == '[' || v.front() == '{') {
    throw InputError(where(line) + "arrays and inline tables are not supported");
  }
  std::string out;
  for (char c : v) {
    if (c != '_') out += c;  // 2_000_000
  }
  return out;
}

const std::set<std::string>& trainer_keys() {
  static const std::set<std::string> keys = {
      "total_steps", "rollout_length", "minibatch_size", "epochs",       "clip_ratio",
      "gamma",       "gae_lambda",     "entropy_coef",   "value_coef",   "learning_rate",
      "max_grad_norm", "reward_scale", "seed",           "num_envs",     "n_steps"};
  return keys;
}

const std::set<std::string>& eval_keys() {
  static const std::set<std::string> keys = {"eval_interval", "eval_episodes", "eval_seed",
                                             "stop_at_success"};
  return keys;
}

const std::set<std::string>& env_keys() {
  static const std::set<std::string> keys = {
      "agent_radius",  "arrival_threshold", "max_steps",          "reward_arrive",
      "reward_wall",   "reward_distance",   "reward_displacement"};
  return keys;
}

const std::set<std::string>& magnet_keys() {
  static const std::set<std::string> keys = {
      "flux_density", "driver_diameter", "robot_diameter", "robot_density",
      "robot_magnetization", "drag", "safety_floor", "max_bracket"};
  return keys;
}

const std::set<std::string>& controller_keys() {
  static const std::set<std::string> keys = {"tau", "increment_cap", "critical_eps",
                                             "queue_capacity"};
  return keys;
}

template <class T>
T convert(const std::string& key, const std::string& text) {
  if constexpr (std::is_same_v<T, bool>) {
    if (text == "true") return true;
    if (text == "false") return false;
    throw InputError("config key '" + key + "': expected true or false, got '" + text + "'");
  } else {
    T v{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec == std::errc() && ptr == text.data() + text.size()) return v;
    if constexpr (std::is_integral_v<T>) {
      // Accept integral values written in floating-point form, e.g. 2e6.
      double d = 0.0;
      const auto [p2, e2] = std::from_chars(text.data(), text.data() + text.size(), d);
      if (e2 == std::errc() && p2 == text.data() + text.size() && d == std::floor(d) &&
          d >= double(std::numeric_limits<T>::min()) && d <= double(std::numeric_limits<T>::max())) {
        return static_cast<T>(d);
      }
    }
    throw InputError("config key '" + key + "': bad value '" + text + "'");
  }
}

// Reads `name` from the given sections in order; later sections win.
template <class T>
void read(const KeyValueConfig& kv, std::initializer_list<std::string_view> prefixes,
          const std::string& name, T& out) {
  for (auto prefix : prefixes) {
    const std::string key = std::string(prefix) + name;
    if (auto v = kv.get(key)) out = convert<T>(key, *v);
  }
}

template <class Cfg>
void apply_trainer_common(const KeyValueConfig& kv, std::initializer_list<std::string_view> p,
                          Cfg& c) {
  read(kv, p, "total_steps", c.total_steps);
  read(kv, p, "gamma", c.gamma);
  read(kv, p, "entropy_coef", c.entropy_coef);
  read(kv, p, "value_coef", c.value_coef);
  read(kv, p, "learning_rate", c.learning_rate);
  read(kv, p, "max_grad_norm", c.max_grad_norm);
  read(kv, p, "reward_scale", c.reward_scale);
  read(kv, p, "seed", c.seed);
  read(kv, p, "num_envs", c.num_envs);
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text) {
  KeyValueConfig kv;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw InputError(where(line_no) + "malformed section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section.empty()) throw InputError(where(line_no) + "empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw InputError(where(line_no) + "expected key = value");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw InputError(where(line_no) + "missing key");
    const std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
    kv.entries_[full] = parse_value(trim(line.substr(eq + 1)), line_no);
  }
  return kv;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse(ss.str());
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void apply_config(const KeyValueConfig& kv, PpoConfig& c) {
  const std::initializer_list<std::string_view> p = {"", "ppo."};
  apply_trainer_common(kv, p, c);
  read(kv, p, "rollout_length", c.rollout_length);
  read(kv, p, "minibatch_size", c.minibatch_size);
  read(kv, p, "epochs", c.epochs);
  read(kv, p, "clip_ratio", c.clip_ratio);
  read(kv, p, "gae_lambda", c.gae_lambda);
}

void apply_config(const KeyValueConfig& kv, A2cConfig& c) {
  const std::initializer_list<std::string_view> p = {"", "a2c."};
  apply_trainer_common(kv, p, c);
  read(kv, p, "n_steps", c.n_steps);
}

void apply_config(const KeyValueConfig& kv, EvalSchedule& c) {
  const std::initializer_list<std::string_view> p = {"", "eval."};
  read(kv, p, "eval_interval", c.eval_interval);
  read(kv, p, "eval_episodes", c.eval_episodes);
  read(kv, p, "eval_seed", c.eval_seed);
  read(kv, p, "stop_at_success", c.stop_at_success);
}

void apply_config(const KeyValueConfig& kv, EnvConfig& c) {
  const std::initializer_list<std::string_view> p = {"env."};
  read(kv, p, "agent_radius", c.agent_radius);
  read(kv, p, "arrival_threshold", c.arrival_threshold);
  read(kv, p, "max_steps", c.max_steps);
  read(kv, p, "reward_arrive", c.reward.arrive);
  read(kv, p, "reward_wall", c.reward.wall);
  read(kv, p, "reward_distance", c.reward.distance);
  read(kv, p, "reward_displacement", c.reward.displacement);
  if (!(c.agent_radius > 0.0)) throw InputError("env.agent_radius must be positive");
  if (!(c.arrival_threshold > 0.0)) throw InputError("env.arrival_threshold must be positive");
  if (c.max_steps < 1) throw InputError("env.max_steps must be at least 1");
}

void apply_config(const KeyValueConfig& kv, MagnetConfig& c) {
  const std::initializer_list<std::string_view> p = {"magnet."};
  read(kv, p, "flux_density", c.flux_density);
  read(kv, p, "driver_diameter", c.driver_diameter);
  read(kv, p, "robot_diameter", c.robot_diameter);
  read(kv, p, "robot_density", c.robot_density);
  read(kv, p, "robot_magnetization", c.robot_magnetization);
  read(kv, p, "drag", c.drag);
  read(kv, p, "safety_floor", c.safety_floor);
  read(kv, p, "max_bracket", c.max_bracket);
}

void apply_config(const KeyValueConfig& kv, ControllerConfig& c) {
  const std::initializer_list<std::string_view> p = {"controller."};
  read(kv, p, "tau", c.tau);
  read(kv, p, "increment_cap", c.increment_cap);
  read(kv, p, "critical_eps", c.critical_eps);
  read(kv, p, "queue_capacity", c.queue_capacity);
  if (!(c.increment_cap > 0.0)) throw InputError("controller.increment_cap must be positive");
  if (!(c.critical_eps > 0.0)) throw InputError("controller.critical_eps must be positive");
}

void validate_keys(const KeyValueConfig& kv) {
  for (const auto& [key, value] : kv.entries()) {
    const auto dot = key.find('.');
    const std::string section = dot == std::string::npos ? "" : key.substr(0, dot);
    const std::string name = dot == std::string::npos ? key : key.substr(dot + 1);
    bool ok = false;
    if (section.empty()) {
      ok = trainer_keys().count(name) || eval_keys().count(name);
    } else if (section == "ppo" || section == "a2c") {
      ok = trainer_keys().count(name) != 0;
    } else if (section == "eval") {
      ok = eval_keys().count(name) != 0;
    } else if (section == "env") {
      ok = env_keys().count(name) != 0;
    } else if (section == "magnet") {
      ok = magnet_keys().count(name) != 0;
    } else if (section == "controller") {
      ok = controller_keys().count(name) != 0;
    }
    if (!ok) throw InputError("unknown config key '" + key + "'");
  }
}

}  // namespace mvnav
