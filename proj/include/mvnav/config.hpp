#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "mvnav/env.hpp"
#include "mvnav/magnet.hpp"
#include "mvnav/semi_auto.hpp"
#include "mvnav/trainers.hpp"

namespace mvnav {

// Flat TOML-style key/value document:
//
//   # comment
//   total_steps = 2_000_000
//   [magnet]
//   flux_density = 0.1
//
// A `[section]` header prefixes the following keys with "section.". Values
// are numbers, booleans or double-quoted strings; arrays and inline tables
// are not supported.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value) { entries_[key] = value; }
  std::optional<std::string> get(const std::string& key) const;
  bool contains(const std::string& key) const { return entries_.count(key) != 0; }
  const std::map<std::string, std::string>& entries() const { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

// Each applier reads the keys it knows and leaves the rest of the struct at
// its defaults. Trainer fields are read from the top level and from the
// algorithm's own section ("ppo." / "a2c."), the latter taking precedence.
void apply_config(const KeyValueConfig& kv, PpoConfig& out);
void apply_config(const KeyValueConfig& kv, A2cConfig& out);
void apply_config(const KeyValueConfig& kv, EvalSchedule& out);
void apply_config(const KeyValueConfig& kv, EnvConfig& out);          // "env." keys
void apply_config(const KeyValueConfig& kv, MagnetConfig& out);       // "magnet." keys
void apply_config(const KeyValueConfig& kv, ControllerConfig& out);   // "controller." keys

// Throws InputError naming the first key no applier recognizes.
void validate_keys(const KeyValueConfig& kv);

}  // namespace mvnav
