#ifndef MTRANK_NUMCORE_HPP
#define MTRANK_NUMCORE_HPP

// Dense numeric kernel shared by every trainable component: Eigen type aliases,
// activations, Glorot initialization, adagrad with L2 decay, inverted dropout
// and a central-difference gradient checker.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

#include "mtrank/error.hpp"

namespace mtrank {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Rng = std::mt19937_64;

enum class Mode { train, infer };

enum class Activation { tanh, sigmoid, hard_sigmoid };

template <typename Scalar>
inline Scalar logistic(Scalar x) {
  if (x >= Scalar(0)) {
    return Scalar(1) / (Scalar(1) + std::exp(-x));
  }
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

// clamp(0.2 x + 0.5, 0, 1); saturates for |x| >= 2.5.
template <typename Scalar>
inline Scalar hard_sigmoid(Scalar x) {
  return std::clamp(Scalar(0.2) * x + Scalar(0.5), Scalar(0), Scalar(1));
}

template <typename Scalar>
inline Scalar hard_sigmoid_slope(Scalar x) {
  const Scalar y = Scalar(0.2) * x + Scalar(0.5);
  return (y > Scalar(0) && y < Scalar(1)) ? Scalar(0.2) : Scalar(0);
}

template <typename Scalar>
inline Scalar apply_activation(Scalar x, Activation kind) {
  switch (kind) {
    case Activation::tanh:
      return std::tanh(x);
    case Activation::sigmoid:
      return logistic(x);
    case Activation::hard_sigmoid:
      return hard_sigmoid(x);
  }
  return x;
}

// Derivative of the activation at pre-activation `x` with output `y`.
template <typename Scalar>
inline Scalar activation_slope(Scalar x, Scalar y, Activation kind) {
  switch (kind) {
    case Activation::tanh:
      return Scalar(1) - y * y;
    case Activation::sigmoid:
      return y * (Scalar(1) - y);
    case Activation::hard_sigmoid:
      return hard_sigmoid_slope(x);
  }
  return Scalar(0);
}

// Element-wise activation with input validation. Layers use the unchecked
// scalar forms above in their inner loops.
template <typename Derived>
Vector<typename Derived::Scalar> activate(const Eigen::MatrixBase<Derived>& x, Activation kind) {
  using Scalar = typename Derived::Scalar;
  if (!x.allFinite()) {
    throw NumericError("activate: non-finite input");
  }
  return x.derived().unaryExpr([kind](Scalar v) { return apply_activation(v, kind); });
}

// Glorot/Xavier uniform initialization on [-sqrt(6/(rows+cols)), +sqrt(6/(rows+cols))].
template <typename Scalar>
Matrix<Scalar> xavier_init(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  if (rows < 1 || cols < 1) {
    throw std::invalid_argument("xavier_init: shape must be at least 1x1");
  }
  const Scalar bound = std::sqrt(Scalar(6) / static_cast<Scalar>(rows + cols));
  std::uniform_real_distribution<Scalar> dist(-bound, bound);
  Matrix<Scalar> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = dist(rng);
  }
  return m;
}

struct OptimizerConfig {
  double learning_rate = 0.01;
  double l2 = 1e-4;
  double epsilon = 1e-8;
  std::size_t batch_size = 30;
  std::size_t max_epochs = 10000;
  std::uint64_t seed = 1;
  // Stop after this many epochs without a strict dev improvement; 0 disables.
  std::size_t patience = 0;

  void validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
      throw std::invalid_argument("learning rate must be > 0");
    }
    if (!(l2 >= 0.0) || !std::isfinite(l2)) {
      throw std::invalid_argument("L2 decay must be >= 0");
    }
    if (!(epsilon > 0.0)) {
      throw std::invalid_argument("adagrad epsilon must be > 0");
    }
    if (batch_size < 1) {
      throw std::invalid_argument("batch size must be >= 1");
    }
    if (max_epochs < 1) {
      throw std::invalid_argument("max epochs must be >= 1");
    }
  }
};

// Named parameters with per-entry adagrad accumulators of identical shape.
template <typename Scalar>
class ParamStore {
 public:
  struct Param {
    Matrix<Scalar> value;
    Matrix<Scalar> accum;
    bool decay = true;      // receives the L2 term in adagrad_step
    bool trainable = true;  // frozen parameters are never updated or gradchecked
  };

  using Map = std::map<std::string, Param>;

  void add(const std::string& name, Matrix<Scalar> value, bool decay = true, bool trainable = true) {
    if (params_.count(name) != 0) {
      throw std::invalid_argument("duplicate parameter '" + name + "'");
    }
    Param p;
    p.accum = Matrix<Scalar>::Zero(value.rows(), value.cols());
    p.value = std::move(value);
    p.decay = decay;
    p.trainable = trainable;
    params_.emplace(name, std::move(p));
  }

  bool contains(const std::string& name) const { return params_.count(name) != 0; }

  Param& at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) {
      throw std::out_of_range("unknown parameter '" + name + "'");
    }
    return it->second;
  }
  const Param& at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) {
      throw std::out_of_range("unknown parameter '" + name + "'");
    }
    return it->second;
  }

  Matrix<Scalar>& value(const std::string& name) { return at(name).value; }
  const Matrix<Scalar>& value(const std::string& name) const { return at(name).value; }
  const Matrix<Scalar>& accumulator(const std::string& name) const { return at(name).accum; }

  typename Map::iterator begin() { return params_.begin(); }
  typename Map::iterator end() { return params_.end(); }
  typename Map::const_iterator begin() const { return params_.begin(); }
  typename Map::const_iterator end() const { return params_.end(); }

  std::size_t size() const { return params_.size(); }
  std::size_t step_count() const { return steps_; }
  void set_step_count(std::size_t n) { steps_ = n; }
  void count_step() { ++steps_; }

  std::size_t entry_count() const {
    std::size_t n = 0;
    for (const auto& [name, p] : params_) n += static_cast<std::size_t>(p.value.size());
    return n;
  }

 private:
  Map params_;
  std::size_t steps_ = 0;
};

template <typename Scalar>
using GradMap = std::map<std::string, Matrix<Scalar>>;

// Zero gradients for every trainable parameter.
template <typename Scalar>
GradMap<Scalar> zero_grads(const ParamStore<Scalar>& store) {
  GradMap<Scalar> g;
  for (const auto& [name, p] : store) {
    if (p.trainable) {
      g.emplace(name, Matrix<Scalar>::Zero(p.value.rows(), p.value.cols()));
    }
  }
  return g;
}

// One adagrad update: g <- g + l2*theta (decayed params only); accum <- accum + g^2;
// theta <- theta - lr * g / (sqrt(accum) + eps). All shapes are validated before
// anything is written.
template <typename Scalar>
void adagrad_step(ParamStore<Scalar>& params, const GradMap<Scalar>& grads, const OptimizerConfig& cfg) {
  cfg.validate();
  for (const auto& [name, g] : grads) {
    if (!params.contains(name)) {
      throw std::invalid_argument("adagrad_step: gradient for unknown parameter '" + name + "'");
    }
    const auto& p = params.at(name);
    if (p.value.rows() != g.rows() || p.value.cols() != g.cols()) {
      throw std::invalid_argument("adagrad_step: shape mismatch for '" + name + "'");
    }
  }
  const Scalar lr = static_cast<Scalar>(cfg.learning_rate);
  const Scalar l2 = static_cast<Scalar>(cfg.l2);
  const Scalar eps = static_cast<Scalar>(cfg.epsilon);
  for (const auto& [name, g] : grads) {
    auto& p = params.at(name);
    if (!p.trainable) continue;
    Scalar* theta = p.value.data();
    Scalar* acc = p.accum.data();
    const Scalar* grad = g.data();
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      Scalar gi = grad[i];
      if (p.decay) gi += l2 * theta[i];
      acc[i] += gi * gi;
      theta[i] -= lr * gi / (std::sqrt(acc[i]) + eps);
    }
  }
  params.count_step();
}

// Inverted dropout: in train mode each entry is 0 with probability `rate`, otherwise
// 1/(1-rate). Infer mode (or rate 0) yields all ones and draws nothing from `rng`.
template <typename Scalar>
Vector<Scalar> dropout_mask(Eigen::Index len, double rate, Rng& rng, Mode mode) {
  if (!(rate >= 0.0) || rate >= 1.0) {
    throw std::invalid_argument("dropout rate must be in [0, 1)");
  }
  Vector<Scalar> mask = Vector<Scalar>::Ones(len);
  if (mode == Mode::infer || rate == 0.0) {
    return mask;
  }
  std::bernoulli_distribution keep(1.0 - rate);
  const Scalar scale = static_cast<Scalar>(1.0 / (1.0 - rate));
  for (Eigen::Index i = 0; i < len; ++i) {
    mask[i] = keep(rng) ? scale : Scalar(0);
  }
  return mask;
}

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_param;
  Eigen::Index worst_index = -1;
  std::size_t entries_checked = 0;
};

// Compares the analytic gradient reported by `f` against central differences for
// every entry of every trainable parameter. `f(params, grads)` returns the loss and,
// when `grads` is non-null, accumulates the analytic gradient into it.
// Relative error: |a - n| / max(|a|, |n|, 1e-8). Parameters are restored on return.
template <typename Scalar, typename F>
GradCheckResult gradcheck(F&& f, ParamStore<Scalar>& params, Scalar epsilon = Scalar(1e-5)) {
  if (!(epsilon > Scalar(0))) {
    throw std::invalid_argument("gradcheck: epsilon must be > 0");
  }
  GradMap<Scalar> analytic = zero_grads(params);
  const Scalar base = f(static_cast<const ParamStore<Scalar>&>(params), &analytic);
  if (!std::isfinite(base)) {
    throw NumericError("gradcheck: non-finite loss");
  }
  GradCheckResult result;
  for (auto& [name, p] : params) {
    if (!p.trainable) continue;
    const auto& a = analytic.at(name);
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      Scalar& theta = p.value.data()[i];
      const Scalar saved = theta;
      theta = saved + epsilon;
      const Scalar plus = f(static_cast<const ParamStore<Scalar>&>(params), nullptr);
      theta = saved - epsilon;
      const Scalar minus = f(static_cast<const ParamStore<Scalar>&>(params), nullptr);
      theta = saved;
      if (!std::isfinite(plus) || !std::isfinite(minus)) {
        throw NumericError("gradcheck: non-finite loss while perturbing '" + name + "'");
      }
      const double numeric = static_cast<double>((plus - minus) / (Scalar(2) * epsilon));
      const double exact = static_cast<double>(a.data()[i]);
      const double denom = std::max({std::abs(exact), std::abs(numeric), 1e-8});
      const double rel = std::abs(exact - numeric) / denom;
      ++result.entries_checked;
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_param = name;
        result.worst_index = i;
      }
    }
  }
  return result;
}

}  // namespace mtrank

#endif  // MTRANK_NUMCORE_HPP
