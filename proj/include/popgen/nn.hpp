#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "popgen/common.hpp"
#include "popgen/matrix.hpp"

namespace popgen {

enum class ActivationKind { ReLU, Sigmoid, Tanh, Softmax, Linear };

inline const char* activation_name(ActivationKind k) {
  switch (k) {
    case ActivationKind::ReLU: return "relu";
    case ActivationKind::Sigmoid: return "sigmoid";
    case ActivationKind::Tanh: return "tanh";
    case ActivationKind::Softmax: return "softmax";
    case ActivationKind::Linear: return "linear";
  }
  return "?";
}

inline ActivationKind activation_from_name(const std::string& name) {
  if (name == "relu") return ActivationKind::ReLU;
  if (name == "sigmoid") return ActivationKind::Sigmoid;
  if (name == "tanh") return ActivationKind::Tanh;
  if (name == "softmax") return ActivationKind::Softmax;
  if (name == "linear") return ActivationKind::Linear;
  throw data_error("CorruptArtifact", "unknown activation " + name);
}

struct DenseLayer {
  Matrix2D weights;            // in x out
  std::vector<double> bias;    // out
  ActivationKind activation = ActivationKind::Linear;

  std::size_t in_dim() const { return weights.rows(); }
  std::size_t out_dim() const { return weights.cols(); }
};

struct DropoutSpec {
  double drop_probability = 0.5;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(drop_probability >= 0.0 && drop_probability < 1.0))
      throw config_error("BadDropout", "drop probability must be in [0,1)");
  }
};

enum class OptimizerKind { SgdMomentum, Adadelta };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::SgdMomentum;
  double learning_rate = 0.01;
  double momentum = 0.9;
  double rho = 0.95;
  double epsilon = 1e-6;
  std::size_t batch_size = 32;

  void validate() const {
    if (learning_rate <= 0)
      throw config_error("BadOptimizer", "learning_rate must be > 0");
    if (!(momentum >= 0 && momentum < 1))
      throw config_error("BadOptimizer", "momentum must be in [0,1)");
    if (!(rho > 0 && rho < 1))
      throw config_error("BadOptimizer", "rho must be in (0,1)");
    if (epsilon <= 0)
      throw config_error("BadOptimizer", "epsilon must be > 0");
    if (batch_size < 1)
      throw config_error("BadOptimizer", "batch_size must be >= 1");
  }
};

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline void apply_activation(ActivationKind kind, Matrix2D& z) {
  switch (kind) {
    case ActivationKind::Linear:
      break;
    case ActivationKind::ReLU:
      for (std::size_t i = 0; i < z.size(); ++i)
        z.data()[i] = std::max(0.0, z.data()[i]);
      break;
    case ActivationKind::Sigmoid:
      for (std::size_t i = 0; i < z.size(); ++i)
        z.data()[i] = sigmoid(z.data()[i]);
      break;
    case ActivationKind::Tanh:
      for (std::size_t i = 0; i < z.size(); ++i)
        z.data()[i] = std::tanh(z.data()[i]);
      break;
    case ActivationKind::Softmax:
      for (std::size_t r = 0; r < z.rows(); ++r) {
        double* row = z.row(r);
        double m = row[0];
        for (std::size_t c = 1; c < z.cols(); ++c) m = std::max(m, row[c]);
        double sum = 0.0;
        for (std::size_t c = 0; c < z.cols(); ++c) {
          row[c] = std::exp(row[c] - m);
          sum += row[c];
        }
        for (std::size_t c = 0; c < z.cols(); ++c) row[c] /= sum;
      }
      break;
  }
}

// grad wrt pre-activation, from grad wrt activation output and the output
// itself (all activations used here are expressible that way).
inline Matrix2D activation_backward(ActivationKind kind, const Matrix2D& grad_a,
                                    const Matrix2D& a) {
  Matrix2D dz = grad_a;
  switch (kind) {
    case ActivationKind::Linear:
      break;
    case ActivationKind::ReLU:
      for (std::size_t i = 0; i < dz.size(); ++i)
        if (a.data()[i] <= 0.0) dz.data()[i] = 0.0;
      break;
    case ActivationKind::Sigmoid:
      for (std::size_t i = 0; i < dz.size(); ++i)
        dz.data()[i] *= a.data()[i] * (1.0 - a.data()[i]);
      break;
    case ActivationKind::Tanh:
      for (std::size_t i = 0; i < dz.size(); ++i)
        dz.data()[i] *= 1.0 - a.data()[i] * a.data()[i];
      break;
    case ActivationKind::Softmax:
      for (std::size_t r = 0; r < dz.rows(); ++r) {
        const double* arow = a.row(r);
        const double* grow = grad_a.row(r);
        double dot = 0.0;
        for (std::size_t c = 0; c < dz.cols(); ++c) dot += grow[c] * arow[c];
        double* drow = dz.row(r);
        for (std::size_t c = 0; c < dz.cols(); ++c)
          drow[c] = arow[c] * (grow[c] - dot);
      }
      break;
  }
  return dz;
}

// ---------------------------------------------------------------------------
// Forward / backward over a dense stack
// ---------------------------------------------------------------------------

struct ForwardCache {
  const std::vector<DenseLayer>* layers = nullptr;
  std::vector<Matrix2D> inputs;       // actual input fed to each layer
  std::vector<Matrix2D> activations;  // unmasked output of each layer
  std::vector<std::vector<double>> masks;  // inverted-dropout scale, or empty
};

// Dropout (inverted scaling) is applied to hidden activations only, and only
// in training mode. `rng` drives the masks; pass the training loop's stream.
inline Matrix2D forward(const std::vector<DenseLayer>& layers,
                        const Matrix2D& x, ForwardCache* cache = nullptr,
                        double drop_probability = 0.0, bool training = false,
                        Rng* rng = nullptr) {
  if (cache) {
    cache->layers = &layers;
    cache->inputs.clear();
    cache->activations.clear();
    cache->masks.clear();
  }
  const bool use_dropout = training && drop_probability > 0.0 && rng;
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Matrix2D current = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    if (current.cols() != layer.in_dim())
      throw numeric_error("ShapeMismatch", "forward layer input width");
    if (cache) cache->inputs.push_back(current);

    Matrix2D z = matmul(current, layer.weights);
    for (std::size_t r = 0; r < z.rows(); ++r) {
      double* row = z.row(r);
      for (std::size_t c = 0; c < z.cols(); ++c) row[c] += layer.bias[c];
    }
    apply_activation(layer.activation, z);
    if (cache) cache->activations.push_back(z);

    std::vector<double> mask;
    if (use_dropout && l + 1 < layers.size()) {
      const double keep = 1.0 - drop_probability;
      mask.resize(z.size());
      for (std::size_t i = 0; i < z.size(); ++i)
        mask[i] = unit(*rng) < keep ? 1.0 / keep : 0.0;
      for (std::size_t i = 0; i < z.size(); ++i) z.data()[i] *= mask[i];
    }
    if (cache) cache->masks.push_back(std::move(mask));
    current = std::move(z);
  }
  return current;
}

struct LayerGrads {
  Matrix2D d_weights;
  std::vector<double> d_bias;
};

struct BackwardResult {
  std::vector<LayerGrads> layer_grads;
  Matrix2D grad_input;
};

inline BackwardResult backward(const ForwardCache& cache,
                               const Matrix2D& grad_output) {
  const auto& layers = *cache.layers;
  if (layers.empty())
    throw numeric_error("ShapeMismatch", "backward on empty stack");
  BackwardResult res;
  res.layer_grads.resize(layers.size());

  Matrix2D grad = grad_output;
  for (std::size_t li = layers.size(); li-- > 0;) {
    const auto& layer = layers[li];
    if (!grad.same_shape(cache.activations[li]) && cache.masks[li].empty())
      throw numeric_error("ShapeMismatch", "backward grad shape");

    if (!cache.masks[li].empty())
      for (std::size_t i = 0; i < grad.size(); ++i)
        grad.data()[i] *= cache.masks[li][i];

    Matrix2D dz =
        activation_backward(layer.activation, grad, cache.activations[li]);

    auto& lg = res.layer_grads[li];
    lg.d_weights = matmul_at_b(cache.inputs[li], dz);
    lg.d_bias.assign(layer.out_dim(), 0.0);
    for (std::size_t r = 0; r < dz.rows(); ++r) {
      const double* row = dz.row(r);
      for (std::size_t c = 0; c < dz.cols(); ++c) lg.d_bias[c] += row[c];
    }
    grad = matmul_a_bt(dz, layer.weights);
  }
  res.grad_input = std::move(grad);
  return res;
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

inline constexpr double kLogClamp = 1e-12;

inline double cross_entropy(const Matrix2D& probabilities,
                            const Matrix2D& one_hot) {
  require_same_shape(probabilities, one_hot, "cross_entropy");
  double total = 0.0;
  for (std::size_t r = 0; r < probabilities.rows(); ++r)
    for (std::size_t c = 0; c < probabilities.cols(); ++c)
      total -= one_hot(r, c) *
               std::log(std::max(probabilities(r, c), kLogClamp));
  return total / static_cast<double>(probabilities.rows());
}

// dL/dp for the mean cross-entropy above.
inline Matrix2D cross_entropy_grad(const Matrix2D& probabilities,
                                   const Matrix2D& one_hot) {
  require_same_shape(probabilities, one_hot, "cross_entropy_grad");
  Matrix2D grad(probabilities.rows(), probabilities.cols());
  const double inv_n = 1.0 / static_cast<double>(probabilities.rows());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double p = std::max(probabilities.data()[i], kLogClamp);
    grad.data()[i] = -one_hot.data()[i] / p * inv_n;
  }
  return grad;
}

// Mean over rows of the squared reconstruction error ||x - y||^2.
inline double squared_loss(const Matrix2D& reconstruction,
                           const Matrix2D& target) {
  require_same_shape(reconstruction, target, "squared_loss");
  double total = 0.0;
  for (std::size_t i = 0; i < reconstruction.size(); ++i) {
    const double d = reconstruction.data()[i] - target.data()[i];
    total += d * d;
  }
  return total / static_cast<double>(reconstruction.rows());
}

inline Matrix2D squared_loss_grad(const Matrix2D& reconstruction,
                                  const Matrix2D& target) {
  require_same_shape(reconstruction, target, "squared_loss_grad");
  Matrix2D grad(reconstruction.rows(), reconstruction.cols());
  const double inv_n = 2.0 / static_cast<double>(reconstruction.rows());
  for (std::size_t i = 0; i < grad.size(); ++i)
    grad.data()[i] =
        inv_n * (reconstruction.data()[i] - target.data()[i]);
  return grad;
}

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

inline Matrix2D xavier_init(std::size_t rows, std::size_t cols,
                            std::uint64_t seed) {
  if (rows == 0 || cols == 0)
    throw config_error("BadShape", "xavier_init needs positive dimensions");
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> dist(-a, a);
  Matrix2D out(rows, cols);
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = dist(rng);
  return out;
}

inline DenseLayer make_dense_layer(std::size_t in_dim, std::size_t out_dim,
                                   ActivationKind activation,
                                   std::uint64_t seed) {
  DenseLayer layer;
  layer.weights = xavier_init(in_dim, out_dim, seed);
  layer.bias.assign(out_dim, 0.0);
  layer.activation = activation;
  return layer;
}

// ---------------------------------------------------------------------------
// Optimizers. Pure update rules over flat parameter arrays; the caller owns
// one OptimizerState per parameter tensor.
// ---------------------------------------------------------------------------

struct OptimizerState {
  std::vector<double> velocity;  // SGD momentum
  std::vector<double> acc_grad;  // Adadelta E[g^2]
  std::vector<double> acc_step;  // Adadelta E[dx^2]
};

inline void sgd_momentum_step(double* params, const double* grads,
                              OptimizerState& state, std::size_t n,
                              const OptimizerConfig& config) {
  if (state.velocity.size() != n) state.velocity.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    state.velocity[i] = config.momentum * state.velocity[i] -
                        config.learning_rate * grads[i];
    params[i] += state.velocity[i];
  }
}

inline void adadelta_step(double* params, const double* grads,
                          OptimizerState& state, std::size_t n,
                          const OptimizerConfig& config) {
  if (state.acc_grad.size() != n) {
    state.acc_grad.assign(n, 0.0);
    state.acc_step.assign(n, 0.0);
  }
  const double rho = config.rho;
  const double eps = config.epsilon;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grads[i];
    state.acc_grad[i] = rho * state.acc_grad[i] + (1.0 - rho) * g * g;
    const double step = -std::sqrt(state.acc_step[i] + eps) /
                        std::sqrt(state.acc_grad[i] + eps) * g;
    state.acc_step[i] = rho * state.acc_step[i] + (1.0 - rho) * step * step;
    params[i] += step;
  }
}

inline void optimizer_step(double* params, const double* grads,
                           OptimizerState& state, std::size_t n,
                           const OptimizerConfig& config) {
  switch (config.kind) {
    case OptimizerKind::SgdMomentum:
      sgd_momentum_step(params, grads, state, n, config);
      break;
    case OptimizerKind::Adadelta:
      adadelta_step(params, grads, state, n, config);
      break;
  }
}

// Per-layer optimizer bookkeeping for a dense stack.
struct StackOptimizer {
  OptimizerConfig config;
  std::vector<OptimizerState> weight_states;
  std::vector<OptimizerState> bias_states;

  explicit StackOptimizer(const OptimizerConfig& cfg, std::size_t n_layers)
      : config(cfg), weight_states(n_layers), bias_states(n_layers) {}

  void apply(std::vector<DenseLayer>& layers,
             const std::vector<LayerGrads>& grads) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      optimizer_step(layers[l].weights.data(), grads[l].d_weights.data(),
                     weight_states[l], layers[l].weights.size(), config);
      optimizer_step(layers[l].bias.data(), grads[l].d_bias.data(),
                     bias_states[l], layers[l].bias.size(), config);
    }
  }
};

namespace detail {

inline std::vector<std::size_t> argmax_rows(const Matrix2D& m) {
  std::vector<std::size_t> out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double* row = m.row(r);
    std::size_t best = 0;
    for (std::size_t c = 1; c < m.cols(); ++c)
      if (row[c] > row[best]) best = c;  // ties -> lowest index
    out[r] = best;
  }
  return out;
}

}  // namespace detail

// One-hot encoding of class indices.
inline Matrix2D one_hot(const std::vector<std::size_t>& labels,
                        std::size_t n_classes) {
  Matrix2D out(labels.size(), n_classes);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (labels[r] >= n_classes)
      throw data_error("UnknownLabel", "label index out of range");
    out(r, labels[r]) = 1.0;
  }
  return out;
}

}  // namespace popgen
