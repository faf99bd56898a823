#include <doctest.h>

#include "mvnav/config.hpp"
#include "mvnav/error.hpp"

using namespace mvnav;

TEST_CASE("key/value config parsing") {
  const auto kv = KeyValueConfig::parse(R"(
# training
total_steps = 1_500_000   # trailing comment
learning_rate = 2.5e-4
stop_at_success = 0.9

[ppo]
epochs = 10

[env]
agent_radius = 6
max_steps = 2000

[controller]
tau = 0.5
)");
  CHECK(kv.get("ppo.epochs") == "10");
  CHECK_FALSE(kv.get("missing"));

  PpoConfig ppo;
  apply_config(kv, ppo);
  CHECK(ppo.total_steps == 1'500'000);
  CHECK(ppo.learning_rate == 2.5e-4);
  CHECK(ppo.epochs == 10);
  CHECK(ppo.clip_ratio == 0.2);

  A2cConfig a2c;
  apply_config(kv, a2c);
  CHECK(a2c.total_steps == 1'500'000);

  EvalSchedule sched;
  apply_config(kv, sched);
  CHECK(sched.stop_at_success == 0.9);

  EnvConfig env;
  apply_config(kv, env);
  CHECK(env.agent_radius == 6.0);
  CHECK(env.max_steps == 2000);
  CHECK(env.arrival_threshold == 10.0);

  ControllerConfig ctl;
  apply_config(kv, ctl);
  CHECK(ctl.tau == 0.5);
  CHECK(ctl.increment_cap == 50.0);

  CHECK_NOTHROW(validate_keys(kv));
}

TEST_CASE("config errors name the offending line or key") {
  CHECK_THROWS_WITH_AS(KeyValueConfig::parse("a = [1, 2]"), doctest::Contains("arrays"), InputError);
  CHECK_THROWS_AS(KeyValueConfig::parse("name = \"open"), InputError);
  CHECK_THROWS_AS(KeyValueConfig::parse("[magnet\nx = 1"), InputError);
  CHECK_THROWS_AS(KeyValueConfig::parse("just words"), InputError);

  auto kv = KeyValueConfig::parse("gama = 0.9");
  CHECK_THROWS_WITH_AS(validate_keys(kv), doctest::Contains("gama"), InputError);

  PpoConfig ppo;
  CHECK_THROWS_AS(apply_config(KeyValueConfig::parse("epochs = many"), ppo), InputError);
  EnvConfig env;
  CHECK_THROWS_AS(apply_config(KeyValueConfig::parse("[env]\nagent_radius = -1"), env), InputError);
}

TEST_CASE("magnet section") {
  MagnetConfig m;
  apply_config(KeyValueConfig::parse("[magnet]\nflux_density = 0.2\nrobot_diameter = 2e-3"), m);
  CHECK(m.flux_density == 0.2);
  CHECK(m.robot_diameter == 2e-3);
  CHECK(m.drag == MagnetConfig{}.drag);
}
