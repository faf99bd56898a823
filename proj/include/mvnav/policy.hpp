#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mvnav/env.hpp"

namespace mvnav {

struct Architecture {
  int input = kObservationSize;
  std::vector<int> hidden{64, 64};
  int actions = kActionCount;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

// Parameters of a tanh MLP trunk with a linear policy head (logits) and a
// linear value head. All scalars live in one contiguous vector so that
// optimizers and gradient checks can treat the network as a flat point.
//
// Layer order: trunk layers 0..H-1, then the policy head (index H), then the
// value head (index H + 1). Weights are stored column-major, shape
// (out x in); the checkpoint format converts to row-major.
class PolicyParams {
 public:
  explicit PolicyParams(Architecture arch = {});

  // Orthogonal weights (gain sqrt(2) on the trunk, 0.01 on the policy head,
  // 1.0 on the value head), zero biases.
  static PolicyParams orthogonal(Architecture arch, Rng& rng);

  const Architecture& arch() const { return arch_; }
  std::size_t layer_count() const { return shapes_.size(); }
  std::size_t policy_head() const { return arch_.hidden.size(); }
  std::size_t value_head() const { return arch_.hidden.size() + 1; }
  int rows(std::size_t layer) const { return shapes_[layer].first; }
  int cols(std::size_t layer) const { return shapes_[layer].second; }

  Eigen::Map<Eigen::MatrixXd> weight(std::size_t layer);
  Eigen::Map<const Eigen::MatrixXd> weight(std::size_t layer) const;
  Eigen::Map<Eigen::VectorXd> bias(std::size_t layer);
  Eigen::Map<const Eigen::VectorXd> bias(std::size_t layer) const;

  Eigen::VectorXd& values() { return values_; }
  const Eigen::VectorXd& values() const { return values_; }
  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }

  bool all_finite() const { return values_.allFinite(); }

 private:
  Architecture arch_;
  std::vector<std::pair<int, int>> shapes_;
  std::vector<Eigen::Index> offsets_;
  Eigen::VectorXd values_;
};

// Post-activation outputs of every trunk layer; activations[0] is the input.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> activations;
};

struct ForwardResult {
  Eigen::MatrixXd logits;   // actions x batch
  Eigen::RowVectorXd values;  // 1 x batch
  ForwardCache cache;
};

// Batched forward pass; `obs` is input x batch.
ForwardResult forward(const PolicyParams& params, const Eigen::Ref<const Eigen::MatrixXd>& obs);
ForwardResult forward(const PolicyParams& params, const Observation& obs);

// Gradient of a scalar loss with respect to every parameter, given its
// partials with respect to the logits and values of a matching forward().
PolicyParams backward(const PolicyParams& params, const ForwardCache& cache,
                      const Eigen::Ref<const Eigen::MatrixXd>& grad_logits,
                      const Eigen::Ref<const Eigen::RowVectorXd>& grad_values);

// Column-wise log-softmax with max subtraction.
Eigen::MatrixXd log_softmax(const Eigen::Ref<const Eigen::MatrixXd>& logits);

struct CategoricalDist {
  Eigen::VectorXd logits;
  Eigen::VectorXd log_probs;
  Eigen::VectorXd probs;

  static CategoricalDist from_logits(const Eigen::Ref<const Eigen::VectorXd>& logits);
  double entropy() const;
  int argmax() const;
};

struct SampledAction {
  int index = 0;
  double log_prob = 0.0;
};

SampledAction sample_action(const CategoricalDist& dist, Rng& rng);

// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double uniform01(Rng& rng) { return double(rng() >> 11) * 0x1.0p-53; }

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step = 0;

  AdamState(std::size_t n, AdamConfig cfg)
      : config(cfg), m(Eigen::VectorXd::Zero(Eigen::Index(n))),
        v(Eigen::VectorXd::Zero(Eigen::Index(n))) {}
};

// Bias-corrected Adam step. Throws NumericalError (leaving params and state
// untouched) when the gradient contains NaN or infinity.
void adam_step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::Ref<const Eigen::VectorXd>& grads,
               AdamState& state);
void adam_update(PolicyParams& params, const PolicyParams& grads, AdamState& state);

std::string checkpoint_to_json(const PolicyParams& params);
PolicyParams checkpoint_from_json(const std::string& text);
void save_checkpoint(const std::filesystem::path& path, const PolicyParams& params);
PolicyParams load_checkpoint(const std::filesystem::path& path);

}  // namespace mvnav
