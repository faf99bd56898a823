#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mvnav/env.hpp"
#include "mvnav/metrics.hpp"
#include "mvnav/policy.hpp"

namespace mvnav {

// Chooses an action index for a state. Used for evaluation and by the
// semi-autonomous controller.
using ActionSelector = std::function<int(const EnvState& state, const OccupancyGrid& grid)>;

// argmax over the policy logits.
ActionSelector greedy_selector(std::shared_ptr<const PolicyParams> params);

// Scripted oracle: the action whose displacement lands closest to the
// target, ignoring walls.
ActionSelector straight_line_selector();

// Independent environment instances stepped in lockstep; finished episodes
// are reset immediately with fresh random endpoints.
class EnvPool {
 public:
  EnvPool(const OccupancyGrid& grid, EnvConfig config, int num_envs, std::uint64_t seed);

  const OccupancyGrid& grid() const { return *grid_; }
  const EnvConfig& config() const { return config_; }
  int size() const { return static_cast<int>(states_.size()); }
  const EnvState& state(int i) const { return states_[std::size_t(i)]; }
  void set_state(int i, const EnvState& s) { states_[std::size_t(i)] = s; }
  Rng& rng() { return rng_; }

  // Raw (unscaled) return accumulated by the current episode of env i.
  double& episode_return(int i) { return returns_[std::size_t(i)]; }

 private:
  const OccupancyGrid* grid_;
  EnvConfig config_;
  Rng rng_;
  std::vector<EnvState> states_;
  std::vector<double> returns_;
};

// Time-major storage: record k = t * num_envs + e.
struct RolloutBuffer {
  int length = 0;
  int num_envs = 0;
  Eigen::MatrixXd obs;  // kObservationSize x size()
  std::vector<int> actions;
  std::vector<double> log_probs;
  std::vector<double> rewards;    // training reward (env reward x reward scale)
  std::vector<double> bootstrap;  // gamma * V(final state) on truncation, else 0
  std::vector<double> values;
  std::vector<std::uint8_t> dones;  // episode ended at this step
  std::vector<double> last_values;  // V(s_T) for each env
  std::vector<double> advantages;
  std::vector<double> returns;

  // Episodes that finished during collection (raw env reward).
  std::vector<double> finished_returns;
  std::vector<std::uint8_t> finished_success;

  std::size_t size() const { return actions.size(); }
  void allocate(int len, int envs);
};

struct RolloutOptions {
  double gamma = 0.99;
  double reward_scale = 1.0;
};

// Steps every env `length` times with actions sampled from the policy.
RolloutBuffer collect_rollout(const PolicyParams& params, EnvPool& envs, int length, Rng& rng,
                              const RolloutOptions& options = {});

// advantage_t = sum_k (gamma lambda)^k delta_{t+k}, cut at episode ends, with
// delta_t = r_t + bootstrap_t + gamma V(s_{t+1})(1 - done_t) - V(s_t);
// returns = advantages + values.
void compute_gae(RolloutBuffer& buffer, double gamma, double lambda);

struct PpoConfig {
  long total_steps = 2'000'000;
  int rollout_length = 256;  // per env; 8 envs x 256 = 2048 per update
  int minibatch_size = 64;
  int epochs = 4;
  double clip_ratio = 0.2;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double learning_rate = 3e-4;
  double max_grad_norm = 0.5;
  double reward_scale = 0.01;
  std::uint64_t seed = 0;
  int num_envs = 8;
};

struct A2cConfig {
  long total_steps = 2'000'000;
  int n_steps = 5;
  double gamma = 0.99;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  double learning_rate = 7e-4;
  double max_grad_norm = 0.5;
  double reward_scale = 0.01;
  std::uint64_t seed = 0;
  int num_envs = 8;
};

// Evaluation cadence shared by both trainers.
struct EvalSchedule {
  long eval_interval = 20'000;  // env steps between greedy evaluations
  int eval_episodes = 100;      // held-out start/target pairs
  std::uint64_t eval_seed = 20250101;
  // Stop as soon as an evaluation reaches this success rate (0 disables).
  double stop_at_success = 0.0;
};

struct LossStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  double grad_norm = 0.0;
};

// Clipped surrogate for one sample: min(r A, clip(r, 1 - eps, 1 + eps) A).
double clipped_surrogate(double ratio, double advantage, double clip);

struct MinibatchLoss {
  LossStats stats;
  PolicyParams grads;
  std::vector<double> ratios;
  double total = 0.0;
};

// PPO loss and gradient on the records `indices`, with advantages
// normalized over the minibatch.
MinibatchLoss ppo_minibatch_loss(const PolicyParams& params, const RolloutBuffer& buffer,
                                 std::span<const std::size_t> indices, const PpoConfig& config);

// A2C loss and gradient over the whole buffer (unnormalized advantages).
MinibatchLoss a2c_loss(const PolicyParams& params, const RolloutBuffer& buffer,
                       const A2cConfig& config);

// Scales `grads` in place so its L2 norm is at most `max_norm`; returns the
// norm before clipping.
double clip_grad_norm(PolicyParams& grads, double max_norm);

// Epochs of shuffled minibatch updates; returns stats averaged over
// minibatches. Throws NumericalError on a non-finite loss.
LossStats ppo_update(PolicyParams& params, AdamState& adam, const RolloutBuffer& buffer,
                     const PpoConfig& config, Rng& rng);

LossStats a2c_update(PolicyParams& params, AdamState& adam, const RolloutBuffer& buffer,
                     const A2cConfig& config);

enum class Algorithm { Ppo, A2c };
std::string_view to_string(Algorithm algo);
Algorithm parse_algorithm(std::string_view text);

struct CurvePoint {
  long env_steps = 0;
  double mean_return = 0.0;
  double success_rate = 0.0;
  double wall_clock_s = 0.0;
};

struct TrainReport {
  Algorithm algorithm = Algorithm::Ppo;
  std::uint64_t seed = 0;
  long env_steps = 0;
  std::vector<CurvePoint> curve;
  PolicyParams final_params;
  double collect_seconds = 0.0;
  double update_seconds = 0.0;
  double eval_seconds = 0.0;
  std::vector<std::string> diagnostics;

  // Env steps at the first evaluation whose success rate reaches `threshold`.
  std::optional<long> steps_to_success(double threshold) const;
};

// Called after every evaluation; return false to stop training early.
using ProgressCallback = std::function<bool(const CurvePoint&)>;

TrainReport train_ppo(const OccupancyGrid& grid, const EnvConfig& env, const PpoConfig& config,
                      const EvalSchedule& schedule, ProgressCallback progress = {});
TrainReport train_a2c(const OccupancyGrid& grid, const EnvConfig& env, const A2cConfig& config,
                      const EvalSchedule& schedule, ProgressCallback progress = {});

std::string format_curve_csv(const std::vector<CurvePoint>& curve);

struct EvalOptions {
  bool record_trajectories = false;
  double sample_dt = 1.0 / 60.0;  // seconds per env step in recorded trajectories
  double um_per_px = 1.0;
};

struct EvalReport {
  int episodes = 0;
  double success_rate = 0.0;
  double mean_return = 0.0;
  std::vector<Trajectory> trajectories;
  std::vector<std::uint8_t> success;
};

// Start/target pairs drawn with the environment's reset rule.
std::vector<std::pair<Vec2, Vec2>> draw_episode_pairs(const OccupancyGrid& grid,
                                                      const EnvConfig& env, int count,
                                                      std::uint64_t seed);

EvalReport evaluate_pairs(const ActionSelector& policy, const OccupancyGrid& grid,
                          const EnvConfig& env, const std::vector<std::pair<Vec2, Vec2>>& pairs,
                          const EvalOptions& options = {});

// Runs `n_episodes` on fresh random pairs. Deterministic mode takes the
// argmax action; otherwise actions are sampled from the policy.
EvalReport evaluate(const PolicyParams& params, const OccupancyGrid& grid, const EnvConfig& env,
                    int n_episodes, bool deterministic, Rng& rng, const EvalOptions& options = {});

}  // namespace mvnav
