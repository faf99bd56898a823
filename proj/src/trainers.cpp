#include "mvnav/trainers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "mvnav/error.hpp"

namespace mvnav {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::RowVectorXd;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Eigen::Map<const Eigen::VectorXd> as_vector(const Observation& o) {
  return {o.data(), Index(o.size())};
}

}  // namespace

ActionSelector greedy_selector(std::shared_ptr<const PolicyParams> params) {
  if (!params) throw InputError("greedy selector needs a policy");
  return [params = std::move(params)](const EnvState& state, const OccupancyGrid& grid) {
    const auto out = forward(*params, observe(state, grid));
    Index best = 0;
    out.logits.col(0).maxCoeff(&best);
    return static_cast<int>(best);
  };
}

ActionSelector straight_line_selector() {
  return [](const EnvState& state, const OccupancyGrid&) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& a : action_table()) {
      const double d = distance(state.position + Vec2{double(a.dx), double(a.dy)}, state.target);
      if (d < best_d) {
        best_d = d;
        best = a.index;
      }
    }
    return best;
  };
}

EnvPool::EnvPool(const OccupancyGrid& grid, EnvConfig config, int num_envs, std::uint64_t seed)
    : grid_(&grid), config_(config), rng_(seed) {
  if (num_envs <= 0) throw InputError("env count must be positive");
  for (int i = 0; i < num_envs; ++i) states_.push_back(reset(grid, config_, rng_));
  returns_.assign(std::size_t(num_envs), 0.0);
}

void RolloutBuffer::allocate(int len, int envs) {
  length = len;
  num_envs = envs;
  const auto n = std::size_t(len) * std::size_t(envs);
  obs.resize(kObservationSize, Index(n));
  actions.assign(n, 0);
  log_probs.assign(n, 0.0);
  rewards.assign(n, 0.0);
  bootstrap.assign(n, 0.0);
  values.assign(n, 0.0);
  dones.assign(n, 0);
  last_values.assign(std::size_t(envs), 0.0);
  advantages.assign(n, 0.0);
  returns.assign(n, 0.0);
  finished_returns.clear();
  finished_success.clear();
}

RolloutBuffer collect_rollout(const PolicyParams& params, EnvPool& envs, int length, Rng& rng,
                              const RolloutOptions& options) {
  if (length <= 0) throw InputError("rollout length must be positive");
  const int n = envs.size();
  RolloutBuffer buf;
  buf.allocate(length, n);
  MatrixXd obs(kObservationSize, n);

  for (int t = 0; t < length; ++t) {
    for (int e = 0; e < n; ++e) obs.col(e) = as_vector(observe(envs.state(e), envs.grid()));
    const auto out = forward(params, obs);
    const MatrixXd logp = log_softmax(out.logits);
    for (int e = 0; e < n; ++e) {
      const std::size_t k = std::size_t(t) * n + e;
      CategoricalDist dist;
      dist.logits = out.logits.col(e);
      dist.log_probs = logp.col(e);
      dist.probs = dist.log_probs.array().exp();
      const auto sampled = sample_action(dist, rng);

      buf.obs.col(Index(k)) = obs.col(e);
      buf.actions[k] = sampled.index;
      buf.log_probs[k] = sampled.log_prob;
      buf.values[k] = out.values(e);

      const auto res = step(envs.state(e), sampled.index, envs.grid(), envs.config());
      envs.episode_return(e) += res.reward;
      buf.rewards[k] = res.reward * options.reward_scale;
      buf.dones[k] = res.next_state.done ? 1 : 0;
      if (res.truncated) {
        // Truncation is not a true terminal state: bootstrap from V(s_final).
        const auto tail = forward(params, observe(res.next_state, envs.grid()));
        buf.bootstrap[k] = options.gamma * tail.values(0);
      }
      if (res.next_state.done) {
        buf.finished_returns.push_back(envs.episode_return(e));
        buf.finished_success.push_back(res.arrived ? 1 : 0);
        envs.episode_return(e) = 0.0;
        envs.set_state(e, reset(envs.grid(), envs.config(), envs.rng()));
      } else {
        envs.set_state(e, res.next_state);
      }
    }
  }
  for (int e = 0; e < n; ++e) obs.col(e) = as_vector(observe(envs.state(e), envs.grid()));
  const auto tail = forward(params, obs);
  for (int e = 0; e < n; ++e) buf.last_values[std::size_t(e)] = tail.values(e);
  return buf;
}

void compute_gae(RolloutBuffer& buf, double gamma, double lambda) {
  const int n = buf.num_envs;
  for (int e = 0; e < n; ++e) {
    double next_value = buf.last_values[std::size_t(e)];
    double next_adv = 0.0;
    for (int t = buf.length - 1; t >= 0; --t) {
      const std::size_t k = std::size_t(t) * n + e;
      const double live = buf.dones[k] ? 0.0 : 1.0;
      const double delta =
          buf.rewards[k] + buf.bootstrap[k] + gamma * next_value * live - buf.values[k];
      next_adv = delta + gamma * lambda * live * next_adv;
      buf.advantages[k] = next_adv;
      buf.returns[k] = next_adv + buf.values[k];
      next_value = buf.values[k];
    }
  }
}

double clipped_surrogate(double ratio, double advantage, double clip) {
  const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
  return std::min(ratio * advantage, clipped * advantage);
}

double clip_grad_norm(PolicyParams& grads, double max_norm) {
  const double norm = grads.values().norm();
  if (max_norm > 0.0 && norm > max_norm) grads.values() *= max_norm / (norm + 1e-12);
  return norm;
}

namespace {

struct Batch {
  MatrixXd obs;
  std::vector<int> actions;
  std::vector<double> old_log_probs;
  std::vector<double> advantages;
  std::vector<double> returns;
};

Batch gather(const RolloutBuffer& buf, std::span<const std::size_t> idx) {
  Batch b;
  b.obs.resize(kObservationSize, Index(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto k = idx[i];
    b.obs.col(Index(i)) = buf.obs.col(Index(k));
    b.actions.push_back(buf.actions[k]);
    b.old_log_probs.push_back(buf.log_probs[k]);
    b.advantages.push_back(buf.advantages[k]);
    b.returns.push_back(buf.returns[k]);
  }
  return b;
}

// Adds the entropy bonus and value-loss terms to the logits/value gradients
// and fills the shared statistics.
void add_entropy_and_value(const ForwardResult& out, const MatrixXd& logp, const Batch& b,
                           double entropy_coef, double value_coef, MatrixXd& grad_logits,
                           RowVectorXd& grad_values, LossStats& stats) {
  const double inv = 1.0 / double(b.actions.size());
  double entropy_sum = 0.0;
  double value_sq = 0.0;
  for (Index i = 0; i < logp.cols(); ++i) {
    const Eigen::ArrayXd lp = logp.col(i).array();
    const Eigen::ArrayXd p = lp.exp();
    const double h = -(p * lp).sum();
    entropy_sum += h;
    // d(-c H)/dz_j = c p_j (log p_j + H)
    grad_logits.col(i).array() += entropy_coef * inv * p * (lp + h);

    const double err = out.values(i) - b.returns[std::size_t(i)];
    value_sq += err * err;
    grad_values(i) = 2.0 * value_coef * inv * err;
  }
  stats.entropy = entropy_sum * inv;
  stats.value_loss = value_sq * inv;
}

}  // namespace

MinibatchLoss ppo_minibatch_loss(const PolicyParams& params, const RolloutBuffer& buffer,
                                 std::span<const std::size_t> indices, const PpoConfig& config) {
  if (indices.empty()) throw InputError("empty minibatch");
  Batch b = gather(buffer, indices);
  const std::size_t B = indices.size();
  const double inv = 1.0 / double(B);

  const double mean = std::accumulate(b.advantages.begin(), b.advantages.end(), 0.0) * inv;
  double var = 0.0;
  for (double a : b.advantages) var += (a - mean) * (a - mean);
  const double stdev = std::sqrt(var * inv);
  for (double& a : b.advantages) a = (a - mean) / (stdev + 1e-8);

  const auto out = forward(params, b.obs);
  const MatrixXd logp = log_softmax(out.logits);
  MatrixXd grad_logits = MatrixXd::Zero(out.logits.rows(), out.logits.cols());
  RowVectorXd grad_values(out.values.cols());

  MinibatchLoss res{{}, PolicyParams(params.arch()), {}, 0.0};
  double surrogate_sum = 0.0;
  double kl_sum = 0.0;
  std::size_t clipped = 0;
  for (std::size_t i = 0; i < B; ++i) {
    const int a = b.actions[i];
    const double new_lp = logp(a, Index(i));
    const double ratio = std::exp(new_lp - b.old_log_probs[i]);
    const double adv = b.advantages[i];
    res.ratios.push_back(ratio);
    const double surr = clipped_surrogate(ratio, adv, config.clip_ratio);
    surrogate_sum += surr;
    kl_sum += (ratio - 1.0) - (new_lp - b.old_log_probs[i]);
    if (std::abs(ratio - 1.0) > config.clip_ratio) ++clipped;
    // The unclipped branch carries the gradient; the clipped one is flat.
    if (ratio * adv <= surr) {
      const double g = -adv * ratio * inv;  // d(-surr/B)/d log pi(a)
      grad_logits.col(Index(i)) -= g * logp.col(Index(i)).array().exp().matrix();
      grad_logits(a, Index(i)) += g;
    }
  }
  res.stats.policy_loss = -surrogate_sum * inv;
  res.stats.approx_kl = kl_sum * inv;
  res.stats.clip_fraction = double(clipped) * inv;
  add_entropy_and_value(out, logp, b, config.entropy_coef, config.value_coef, grad_logits,
                        grad_values, res.stats);
  res.total = res.stats.policy_loss + config.value_coef * res.stats.value_loss -
              config.entropy_coef * res.stats.entropy;
  res.grads = backward(params, out.cache, grad_logits, grad_values);
  return res;
}

MinibatchLoss a2c_loss(const PolicyParams& params, const RolloutBuffer& buffer,
                       const A2cConfig& config) {
  std::vector<std::size_t> idx(buffer.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const Batch b = gather(buffer, idx);
  const std::size_t B = idx.size();
  if (B == 0) throw InputError("empty rollout");
  const double inv = 1.0 / double(B);

  const auto out = forward(params, b.obs);
  const MatrixXd logp = log_softmax(out.logits);
  MatrixXd grad_logits = MatrixXd::Zero(out.logits.rows(), out.logits.cols());
  RowVectorXd grad_values(out.values.cols());

  MinibatchLoss res{{}, PolicyParams(params.arch()), {}, 0.0};
  double pg = 0.0;
  for (std::size_t i = 0; i < B; ++i) {
    const int a = b.actions[i];
    const double adv = b.advantages[i];
    pg -= logp(a, Index(i)) * adv;
    const double g = -adv * inv;
    grad_logits.col(Index(i)) -= g * logp.col(Index(i)).array().exp().matrix();
    grad_logits(a, Index(i)) += g;
  }
  res.stats.policy_loss = pg * inv;
  add_entropy_and_value(out, logp, b, config.entropy_coef, config.value_coef, grad_logits,
                        grad_values, res.stats);
  res.total = res.stats.policy_loss + config.value_coef * res.stats.value_loss -
              config.entropy_coef * res.stats.entropy;
  res.grads = backward(params, out.cache, grad_logits, grad_values);
  return res;
}

namespace {

void apply(PolicyParams& params, AdamState& adam, MinibatchLoss& loss, double max_grad_norm) {
  if (!std::isfinite(loss.total)) {
    std::ostringstream os;
    os << "non-finite loss (policy " << loss.stats.policy_loss << ", value "
       << loss.stats.value_loss << ", entropy " << loss.stats.entropy << "); update aborted";
    throw NumericalError(os.str());
  }
  loss.stats.grad_norm = clip_grad_norm(loss.grads, max_grad_norm);
  adam_update(params, loss.grads, adam);
}

void accumulate(LossStats& acc, const LossStats& s) {
  acc.policy_loss += s.policy_loss;
  acc.value_loss += s.value_loss;
  acc.entropy += s.entropy;
  acc.approx_kl += s.approx_kl;
  acc.clip_fraction += s.clip_fraction;
  acc.grad_norm += s.grad_norm;
}

}  // namespace

LossStats ppo_update(PolicyParams& params, AdamState& adam, const RolloutBuffer& buffer,
                     const PpoConfig& config, Rng& rng) {
  std::vector<std::size_t> idx(buffer.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const std::size_t mb = std::size_t(std::max(1, config.minibatch_size));
  LossStats acc;
  int count = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t start = 0; start < idx.size(); start += mb) {
      const std::size_t len = std::min(mb, idx.size() - start);
      auto loss = ppo_minibatch_loss(params, buffer, std::span(idx).subspan(start, len), config);
      apply(params, adam, loss, config.max_grad_norm);
      accumulate(acc, loss.stats);
      ++count;
    }
  }
  if (count > 0) {
    const double inv = 1.0 / count;
    acc.policy_loss *= inv;
    acc.value_loss *= inv;
    acc.entropy *= inv;
    acc.approx_kl *= inv;
    acc.clip_fraction *= inv;
    acc.grad_norm *= inv;
  }
  return acc;
}

LossStats a2c_update(PolicyParams& params, AdamState& adam, const RolloutBuffer& buffer,
                     const A2cConfig& config) {
  auto loss = a2c_loss(params, buffer, config);
  apply(params, adam, loss, config.max_grad_norm);
  return loss.stats;
}

std::string_view to_string(Algorithm algo) { return algo == Algorithm::Ppo ? "ppo" : "a2c"; }

Algorithm parse_algorithm(std::string_view text) {
  if (text == "ppo" || text == "PPO") return Algorithm::Ppo;
  if (text == "a2c" || text == "A2C") return Algorithm::A2c;
  throw InputError("unknown algorithm '" + std::string(text) + "' (expected ppo or a2c)");
}

std::optional<long> TrainReport::steps_to_success(double threshold) const {
  for (const auto& p : curve) {
    if (p.success_rate >= threshold) return p.env_steps;
  }
  return std::nullopt;
}

std::string format_curve_csv(const std::vector<CurvePoint>& curve) {
  std::ostringstream os;
  os << "env_steps,mean_return,success_rate,wall_clock_s\n";
  os.precision(10);
  for (const auto& p : curve) {
    os << p.env_steps << ',' << p.mean_return << ',' << p.success_rate << ',' << p.wall_clock_s
       << '\n';
  }
  return os.str();
}

std::vector<std::pair<Vec2, Vec2>> draw_episode_pairs(const OccupancyGrid& grid,
                                                      const EnvConfig& env, int count,
                                                      std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::pair<Vec2, Vec2>> pairs;
  for (int i = 0; i < count; ++i) {
    const auto s = reset(grid, env, rng);
    pairs.emplace_back(s.start, s.target);
  }
  return pairs;
}

namespace {

struct EpisodeOutcome {
  bool arrived = false;
  double ret = 0.0;
  Trajectory traj;
};

bool integral(const Vec2& p) { return p.x == std::floor(p.x) && p.y == std::floor(p.y); }

std::int64_t cell_key(const Vec2& p) {
  return (std::int64_t(p.x) << 32) ^ (std::int64_t(p.y) & 0xffffffff);
}

// With a selector that depends only on (position, start, target), revisiting
// a position means the remaining steps repeat the cycle until the step cap.
// The return is extended exactly by replaying the cycle's rewards.
EpisodeOutcome run_episode(const ActionSelector& policy, const OccupancyGrid& grid,
                           const EnvConfig& env, const Vec2& start, const Vec2& target,
                           const EvalOptions& opt, bool detect_cycles) {
  Rng unused(0);
  EnvState s = reset(grid, env, unused, start, target);
  EpisodeOutcome out;
  out.traj.um_per_px = opt.um_per_px;
  auto record = [&](const EnvState& st, bool collision) {
    out.traj.samples.push_back({double(st.step_count) * opt.sample_dt,
                                st.position.x * opt.um_per_px, st.position.y * opt.um_per_px,
                                collision, ControlMode::Auto});
  };
  if (opt.record_trajectories) record(s, false);

  detect_cycles = detect_cycles && !opt.record_trajectories && integral(start);
  std::unordered_map<std::int64_t, std::size_t> first_visit;
  std::vector<double> rewards;
  if (detect_cycles) first_visit.emplace(cell_key(s.position), 0);

  while (!s.done) {
    const auto res = step(s, policy(s, grid), grid, env);
    out.ret += res.reward;
    s = res.next_state;
    if (opt.record_trajectories) record(s, res.hit_wall);
    if (res.arrived) out.arrived = true;
    if (!detect_cycles || s.done) continue;

    rewards.push_back(res.reward);
    const auto [it, inserted] = first_visit.emplace(cell_key(s.position), rewards.size());
    if (!inserted) {
      const std::size_t from = it->second;
      const std::size_t period = rewards.size() - from;
      for (long m = 0; s.step_count + m < env.max_steps; ++m) {
        out.ret += rewards[from + std::size_t(m) % period];
      }
      break;
    }
  }
  return out;
}

}  // namespace

EvalReport evaluate_pairs(const ActionSelector& policy, const OccupancyGrid& grid,
                          const EnvConfig& env, const std::vector<std::pair<Vec2, Vec2>>& pairs,
                          const EvalOptions& options) {
  EvalReport rep;
  rep.episodes = static_cast<int>(pairs.size());
  if (pairs.empty()) return rep;
  double ret = 0.0;
  int wins = 0;
  for (const auto& [start, target] : pairs) {
    auto out = run_episode(policy, grid, env, start, target, options, true);
    ret += out.ret;
    wins += out.arrived ? 1 : 0;
    rep.success.push_back(out.arrived ? 1 : 0);
    if (options.record_trajectories) rep.trajectories.push_back(std::move(out.traj));
  }
  rep.success_rate = double(wins) / double(pairs.size());
  rep.mean_return = ret / double(pairs.size());
  return rep;
}

EvalReport evaluate(const PolicyParams& params, const OccupancyGrid& grid, const EnvConfig& env,
                    int n_episodes, bool deterministic, Rng& rng, const EvalOptions& options) {
  EvalReport rep;
  rep.episodes = std::max(0, n_episodes);
  if (n_episodes <= 0) return rep;
  std::vector<std::pair<Vec2, Vec2>> pairs;
  for (int i = 0; i < n_episodes; ++i) {
    const auto s = reset(grid, env, rng);
    pairs.emplace_back(s.start, s.target);
  }
  auto shared = std::make_shared<const PolicyParams>(params);
  if (deterministic) return evaluate_pairs(greedy_selector(shared), grid, env, pairs, options);

  ActionSelector sampler = [shared, &rng](const EnvState& s, const OccupancyGrid& g) {
    const auto out = forward(*shared, observe(s, g));
    return sample_action(CategoricalDist::from_logits(out.logits.col(0)), rng).index;
  };
  double ret = 0.0;
  int wins = 0;
  for (const auto& [start, target] : pairs) {
    auto out = run_episode(sampler, grid, env, start, target, options, false);
    ret += out.ret;
    wins += out.arrived ? 1 : 0;
    rep.success.push_back(out.arrived ? 1 : 0);
    if (options.record_trajectories) rep.trajectories.push_back(std::move(out.traj));
  }
  rep.success_rate = double(wins) / double(n_episodes);
  rep.mean_return = ret / double(n_episodes);
  return rep;
}

namespace {

// Shared outer loop: collect/update until the budget is spent, evaluating
// greedily on held-out pairs every `eval_interval` env steps.
template <typename Step>
TrainReport run_training(Algorithm algo, std::uint64_t seed, long total_steps,
                         const OccupancyGrid& grid, const EnvConfig& env,
                         const EvalSchedule& schedule, const ProgressCallback& progress,
                         PolicyParams& params, Step&& train_step) {
  TrainReport rep;
  rep.algorithm = algo;
  rep.seed = seed;
  const auto t0 = Clock::now();
  const auto pairs = draw_episode_pairs(grid, env, schedule.eval_episodes, schedule.eval_seed);

  auto eval_now = [&]() {
    const auto te = Clock::now();
    auto shared = std::make_shared<const PolicyParams>(params);
    const auto ev = evaluate_pairs(greedy_selector(shared), grid, env, pairs);
    rep.eval_seconds += seconds_since(te);
    CurvePoint p{rep.env_steps, ev.mean_return, ev.success_rate, seconds_since(t0)};
    rep.curve.push_back(p);
    bool keep_going = true;
    if (progress) keep_going = progress(p);
    if (schedule.stop_at_success > 0.0 && p.success_rate >= schedule.stop_at_success) {
      keep_going = false;
    }
    return keep_going;
  };

  const long interval = std::max<long>(1, schedule.eval_interval);
  long next_eval = interval;
  bool running = true;
  while (running && rep.env_steps < total_steps) {
    rep.env_steps += train_step(rep);
    if (rep.env_steps >= next_eval) {
      running = eval_now();
      while (next_eval <= rep.env_steps) next_eval += interval;
    }
  }
  if (running && total_steps > 0 && (rep.curve.empty() || rep.curve.back().env_steps != rep.env_steps)) {
    eval_now();
  }
  rep.final_params = params;
  return rep;
}

}  // namespace

TrainReport train_ppo(const OccupancyGrid& grid, const EnvConfig& env, const PpoConfig& config,
                      const EvalSchedule& schedule, ProgressCallback progress) {
  if (!(config.gamma > 0.0 && config.gamma <= 1.0)) throw InputError("gamma must be in (0, 1]");
  if (!(config.gae_lambda >= 0.0 && config.gae_lambda <= 1.0)) {
    throw InputError("gae_lambda must be in [0, 1]");
  }
  if (!(config.clip_ratio > 0.0)) throw InputError("clip_ratio must be positive");
  if (config.rollout_length <= 0 || config.num_envs <= 0 || config.epochs <= 0) {
    throw InputError("rollout_length, num_envs and epochs must be positive");
  }

  Rng rng(config.seed);
  PolicyParams params = PolicyParams::orthogonal(Architecture{}, rng);
  AdamState adam(params.size(), AdamConfig{config.learning_rate, 0.9, 0.999, 1e-5});
  EnvPool pool(grid, env, config.num_envs, config.seed + 1);
  const RolloutOptions ro{config.gamma, config.reward_scale};

  return run_training(Algorithm::Ppo, config.seed, config.total_steps, grid, env, schedule,
                      progress, params, [&](TrainReport& rep) -> long {
                        const auto tc = Clock::now();
                        auto buf = collect_rollout(params, pool, config.rollout_length, rng, ro);
                        compute_gae(buf, config.gamma, config.gae_lambda);
                        rep.collect_seconds += seconds_since(tc);
                        const auto tu = Clock::now();
                        ppo_update(params, adam, buf, config, rng);
                        rep.update_seconds += seconds_since(tu);
                        return static_cast<long>(buf.size());
                      });
}

TrainReport train_a2c(const OccupancyGrid& grid, const EnvConfig& env, const A2cConfig& config,
                      const EvalSchedule& schedule, ProgressCallback progress) {
  if (!(config.gamma > 0.0 && config.gamma <= 1.0)) throw InputError("gamma must be in (0, 1]");
  if (config.n_steps < 1) throw InputError("n_steps must be at least 1");
  if (config.num_envs <= 0) throw InputError("num_envs must be positive");

  Rng rng(config.seed);
  PolicyParams params = PolicyParams::orthogonal(Architecture{}, rng);
  AdamState adam(params.size(), AdamConfig{config.learning_rate, 0.9, 0.999, 1e-5});
  EnvPool pool(grid, env, config.num_envs, config.seed + 1);
  const RolloutOptions ro{config.gamma, config.reward_scale};

  return run_training(Algorithm::A2c, config.seed, config.total_steps, grid, env, schedule,
                      progress, params, [&](TrainReport& rep) -> long {
                        const auto tc = Clock::now();
                        auto buf = collect_rollout(params, pool, config.n_steps, rng, ro);
                        // lambda = 1 turns GAE into bootstrapped n-step returns.
                        compute_gae(buf, config.gamma, 1.0);
                        rep.collect_seconds += seconds_since(tc);
                        const auto tu = Clock::now();
                        a2c_update(params, adam, buf, config);
                        rep.update_seconds += seconds_since(tu);
                        return static_cast<long>(buf.size());
                      });
}

}  // namespace mvnav
