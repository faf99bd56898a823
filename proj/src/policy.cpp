#include "mvnav/policy.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mvnav/error.hpp"
#include "mvnav/image_io.hpp"

namespace mvnav {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

PolicyParams::PolicyParams(Architecture arch) : arch_(std::move(arch)) {
  if (arch_.input <= 0 || arch_.actions <= 0) throw InputError("architecture sizes must be positive");
  int prev = arch_.input;
  for (int h : arch_.hidden) {
    if (h <= 0) throw InputError("hidden layer sizes must be positive");
    shapes_.emplace_back(h, prev);
    prev = h;
  }
  shapes_.emplace_back(arch_.actions, prev);
  shapes_.emplace_back(1, prev);

  Index total = 0;
  for (const auto& [r, c] : shapes_) {
    offsets_.push_back(total);
    total += Index(r) * c + r;
  }
  values_ = VectorXd::Zero(total);
}

Eigen::Map<MatrixXd> PolicyParams::weight(std::size_t layer) {
  return {values_.data() + offsets_[layer], shapes_[layer].first, shapes_[layer].second};
}
Eigen::Map<const MatrixXd> PolicyParams::weight(std::size_t layer) const {
  return {values_.data() + offsets_[layer], shapes_[layer].first, shapes_[layer].second};
}
Eigen::Map<VectorXd> PolicyParams::bias(std::size_t layer) {
  const auto [r, c] = shapes_[layer];
  return {values_.data() + offsets_[layer] + Index(r) * c, r};
}
Eigen::Map<const VectorXd> PolicyParams::bias(std::size_t layer) const {
  const auto [r, c] = shapes_[layer];
  return {values_.data() + offsets_[layer] + Index(r) * c, r};
}

namespace {

MatrixXd orthogonal_matrix(int rows, int cols, double gain, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const int big = std::max(rows, cols);
  const int small = std::min(rows, cols);
  MatrixXd g(big, small);
  for (Index j = 0; j < small; ++j) {
    for (Index i = 0; i < big; ++i) g(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<MatrixXd> qr(g);
  MatrixXd q = qr.householderQ() * MatrixXd::Identity(big, small);
  const MatrixXd r = qr.matrixQR().topRows(small).triangularView<Eigen::Upper>();
  for (Index j = 0; j < small; ++j) {
    if (r(j, j) < 0) q.col(j) *= -1.0;
  }
  MatrixXd w = rows >= cols ? q : MatrixXd(q.transpose());
  return gain * w;
}

}  // namespace

PolicyParams PolicyParams::orthogonal(Architecture arch, Rng& rng) {
  PolicyParams p(std::move(arch));
  for (std::size_t l = 0; l < p.layer_count(); ++l) {
    double gain = std::sqrt(2.0);
    if (l == p.policy_head()) gain = 0.01;
    if (l == p.value_head()) gain = 1.0;
    p.weight(l) = orthogonal_matrix(p.rows(l), p.cols(l), gain, rng);
  }
  return p;
}

ForwardResult forward(const PolicyParams& params, const Eigen::Ref<const MatrixXd>& obs) {
  if (obs.rows() != params.arch().input) {
    throw InputError("observation has " + std::to_string(obs.rows()) + " rows, network expects " +
                     std::to_string(params.arch().input));
  }
  ForwardResult out;
  auto& acts = out.cache.activations;
  acts.reserve(params.arch().hidden.size() + 1);
  acts.emplace_back(obs);
  for (std::size_t l = 0; l < params.arch().hidden.size(); ++l) {
    MatrixXd z = params.weight(l) * acts.back();
    z.colwise() += params.bias(l);
    acts.emplace_back(z.array().tanh().matrix());
  }
  const MatrixXd& h = acts.back();
  out.logits = params.weight(params.policy_head()) * h;
  out.logits.colwise() += params.bias(params.policy_head());
  out.values = params.weight(params.value_head()) * h;
  out.values.array() += params.bias(params.value_head())(0);
  return out;
}

ForwardResult forward(const PolicyParams& params, const Observation& obs) {
  return forward(params, Eigen::Map<const VectorXd>(obs.data(), Index(obs.size())));
}

PolicyParams backward(const PolicyParams& params, const ForwardCache& cache,
                      const Eigen::Ref<const MatrixXd>& grad_logits,
                      const Eigen::Ref<const Eigen::RowVectorXd>& grad_values) {
  const std::size_t depth = params.arch().hidden.size();
  if (cache.activations.size() != depth + 1) throw InputError("cache does not match network depth");
  const Index batch = cache.activations[0].cols();
  if (grad_logits.rows() != params.arch().actions || grad_logits.cols() != batch ||
      grad_values.cols() != batch) {
    throw InputError("upstream gradient shape does not match cache");
  }

  PolicyParams grads(params.arch());
  const MatrixXd& h = cache.activations.back();
  const auto ph = params.policy_head();
  const auto vh = params.value_head();
  grads.weight(ph).noalias() = grad_logits * h.transpose();
  grads.bias(ph) = grad_logits.rowwise().sum();
  grads.weight(vh).noalias() = grad_values * h.transpose();
  grads.bias(vh)(0) = grad_values.sum();

  MatrixXd delta = params.weight(ph).transpose() * grad_logits;
  delta.noalias() += params.weight(vh).transpose() * grad_values;
  for (std::size_t l = depth; l-- > 0;) {
    const MatrixXd& out = cache.activations[l + 1];
    const MatrixXd dz = (delta.array() * (1.0 - out.array().square())).matrix();
    grads.weight(l).noalias() = dz * cache.activations[l].transpose();
    grads.bias(l) = dz.rowwise().sum();
    if (l > 0) delta = params.weight(l).transpose() * dz;
  }
  return grads;
}

MatrixXd log_softmax(const Eigen::Ref<const MatrixXd>& logits) {
  MatrixXd out(logits.rows(), logits.cols());
  for (Index j = 0; j < logits.cols(); ++j) {
    const double mx = logits.col(j).maxCoeff();
    const double lse = mx + std::log((logits.col(j).array() - mx).exp().sum());
    out.col(j) = logits.col(j).array() - lse;
  }
  return out;
}

CategoricalDist CategoricalDist::from_logits(const Eigen::Ref<const VectorXd>& logits) {
  CategoricalDist d;
  d.logits = logits;
  d.log_probs = log_softmax(logits);
  d.probs = d.log_probs.array().exp();
  return d;
}

double CategoricalDist::entropy() const {
  double h = 0.0;
  for (Index i = 0; i < probs.size(); ++i) {
    if (probs(i) > 0.0) h -= probs(i) * log_probs(i);
  }
  return h;
}

int CategoricalDist::argmax() const {
  Index best = 0;
  logits.maxCoeff(&best);
  return static_cast<int>(best);
}

SampledAction sample_action(const CategoricalDist& dist, Rng& rng) {
  const double u = uniform01(rng);
  double cum = 0.0;
  Index last_positive = 0;
  for (Index i = 0; i < dist.probs.size(); ++i) {
    if (dist.probs(i) <= 0.0) continue;
    last_positive = i;
    cum += dist.probs(i);
    if (u < cum) return {static_cast<int>(i), dist.log_probs(i)};
  }
  // Rounding left the cumulative sum just below u.
  return {static_cast<int>(last_positive), dist.log_probs(last_positive)};
}

void adam_step(Eigen::Ref<VectorXd> params, const Eigen::Ref<const VectorXd>& grads,
               AdamState& state) {
  if (grads.size() != params.size() || state.m.size() != params.size()) {
    throw InputError("Adam shape mismatch");
  }
  if (!grads.allFinite()) throw NumericalError("non-finite gradient; batch rejected");
  const auto& c = state.config;
  ++state.step;
  state.m = c.beta1 * state.m + (1.0 - c.beta1) * grads;
  state.v = c.beta2 * state.v + (1.0 - c.beta2) * grads.cwiseAbs2();
  const double bc1 = 1.0 - std::pow(c.beta1, double(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, double(state.step));
  params.array() -=
      c.lr * (state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + c.eps);
}

void adam_update(PolicyParams& params, const PolicyParams& grads, AdamState& state) {
  if (!(params.arch() == grads.arch())) throw InputError("gradient architecture mismatch");
  adam_step(params.values(), grads.values(), state);
}

std::string checkpoint_to_json(const PolicyParams& params) {
  nlohmann::json j;
  j["arch"] = {{"input", params.arch().input},
               {"hidden", params.arch().hidden},
               {"actions", params.arch().actions}};
  auto layers = nlohmann::json::array();
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    const auto w = params.weight(l);
    std::vector<double> rows;
    rows.reserve(std::size_t(w.size()));
    for (Index r = 0; r < w.rows(); ++r) {
      for (Index c = 0; c < w.cols(); ++c) rows.push_back(w(r, c));
    }
    const auto b = params.bias(l);
    layers.push_back({{"w", rows}, {"b", std::vector<double>(b.data(), b.data() + b.size())}});
  }
  j["layers"] = std::move(layers);
  j["version"] = 1;
  return j.dump();
}

PolicyParams checkpoint_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("version").get<int>() != 1) throw InputError("unsupported checkpoint version");
    Architecture arch;
    arch.input = j.at("arch").at("input").get<int>();
    arch.hidden = j.at("arch").at("hidden").get<std::vector<int>>();
    arch.actions = j.at("arch").at("actions").get<int>();
    PolicyParams p(arch);
    const auto& layers = j.at("layers");
    if (layers.size() != p.layer_count()) throw InputError("checkpoint layer count mismatch");
    for (std::size_t l = 0; l < p.layer_count(); ++l) {
      const auto w = layers[l].at("w").get<std::vector<double>>();
      const auto b = layers[l].at("b").get<std::vector<double>>();
      auto wm = p.weight(l);
      if (w.size() != std::size_t(wm.size()) || b.size() != std::size_t(p.rows(l))) {
        throw InputError("checkpoint layer " + std::to_string(l) + " has the wrong shape");
      }
      for (Index r = 0; r < wm.rows(); ++r) {
        for (Index c = 0; c < wm.cols(); ++c) wm(r, c) = w[std::size_t(r * wm.cols() + c)];
      }
      p.bias(l) = Eigen::Map<const VectorXd>(b.data(), Index(b.size()));
    }
    if (!p.all_finite()) throw InputError("checkpoint contains non-finite parameters");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const PolicyParams& params) {
  write_file_atomic(path, checkpoint_to_json(params));
}

PolicyParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open checkpoint '" + path.string() + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return checkpoint_from_json(ss.str());
}

}  // namespace mvnav
