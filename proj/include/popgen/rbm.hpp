#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "popgen/common.hpp"
#include "popgen/matrix.hpp"
#include "popgen/nn.hpp"

namespace popgen {

// Restricted Boltzmann machine with m visible and n hidden units.
struct Rbm {
  Matrix2D weights;                 // m x n
  std::vector<double> visible_bias; // m
  std::vector<double> hidden_bias;  // n

  std::size_t n_visible() const { return weights.rows(); }
  std::size_t n_hidden() const { return weights.cols(); }
};

struct CdConfig {
  double learning_rate = 0.1;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const {
    if (learning_rate <= 0)
      throw config_error("BadConfig", "learning_rate must be > 0");
    if (batch_size < 1)
      throw config_error("BadConfig", "batch_size must be >= 1");
  }
};

inline Rbm make_rbm(std::size_t n_visible, std::size_t n_hidden,
                    std::uint64_t seed) {
  Rbm rbm;
  rbm.weights = xavier_init(n_visible, n_hidden, seed);
  rbm.visible_bias.assign(n_visible, 0.0);
  rbm.hidden_bias.assign(n_hidden, 0.0);
  return rbm;
}

// E(v,h) = -sum b_i v_i - sum c_j h_j - sum v_i h_j w_ij
inline double energy(const Rbm& rbm, const std::vector<double>& v,
                     const std::vector<double>& h) {
  if (v.size() != rbm.n_visible() || h.size() != rbm.n_hidden())
    throw numeric_error("ShapeMismatch", "energy vector sizes");
  double e = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) e -= rbm.visible_bias[i] * v[i];
  for (std::size_t j = 0; j < h.size(); ++j) e -= rbm.hidden_bias[j] * h[j];
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == 0.0) continue;
    const double* wrow = rbm.weights.row(i);
    for (std::size_t j = 0; j < h.size(); ++j) e -= v[i] * h[j] * wrow[j];
  }
  return e;
}

// p(h_j = 1 | v) = sigmoid(c_j + sum_i v_i w_ij)
inline std::vector<double> hidden_probs(const Rbm& rbm,
                                        const std::vector<double>& v) {
  if (v.size() != rbm.n_visible())
    throw numeric_error("ShapeMismatch", "hidden_probs input size");
  std::vector<double> p(rbm.hidden_bias);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == 0.0) continue;
    const double* wrow = rbm.weights.row(i);
    for (std::size_t j = 0; j < p.size(); ++j) p[j] += v[i] * wrow[j];
  }
  for (double& x : p) x = sigmoid(x);
  return p;
}

// p(v_i = 1 | h) = sigmoid(b_i + sum_j h_j w_ij)
inline std::vector<double> visible_probs(const Rbm& rbm,
                                         const std::vector<double>& h) {
  if (h.size() != rbm.n_hidden())
    throw numeric_error("ShapeMismatch", "visible_probs input size");
  std::vector<double> p(rbm.visible_bias);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double* wrow = rbm.weights.row(i);
    double acc = p[i];
    for (std::size_t j = 0; j < h.size(); ++j) acc += h[j] * wrow[j];
    p[i] = sigmoid(acc);
  }
  return p;
}

// Batched hidden probabilities: rows of v are samples.
inline Matrix2D hidden_probs_batch(const Rbm& rbm, const Matrix2D& v) {
  if (v.cols() != rbm.n_visible())
    throw numeric_error("ShapeMismatch", "hidden_probs_batch input width");
  Matrix2D p = matmul(v, rbm.weights);
  for (std::size_t r = 0; r < p.rows(); ++r) {
    double* row = p.row(r);
    for (std::size_t j = 0; j < p.cols(); ++j)
      row[j] = sigmoid(row[j] + rbm.hidden_bias[j]);
  }
  return p;
}

inline Matrix2D visible_probs_batch(const Rbm& rbm, const Matrix2D& h) {
  if (h.cols() != rbm.n_hidden())
    throw numeric_error("ShapeMismatch", "visible_probs_batch input width");
  Matrix2D p = matmul_a_bt(h, rbm.weights);
  for (std::size_t r = 0; r < p.rows(); ++r) {
    double* row = p.row(r);
    for (std::size_t i = 0; i < p.cols(); ++i)
      row[i] = sigmoid(row[i] + rbm.visible_bias[i]);
  }
  return p;
}

// One CD-1 step on a mini-batch. Statistics use probabilities; only the
// hidden state driving the reconstruction is sampled. Returns the mean
// squared reconstruction error of the batch.
inline double cd1_update(Rbm& rbm, const Matrix2D& batch,
                         const CdConfig& config, Rng& rng) {
  if (batch.cols() != rbm.n_visible())
    throw numeric_error("ShapeMismatch", "cd1_update batch width");
  for (std::size_t i = 0; i < batch.size(); ++i)
    if (batch.data()[i] < 0.0 || batch.data()[i] > 1.0)
      throw numeric_error("ValueOutOfRange", "cd1 batch values must be in [0,1]");

  const std::size_t n = batch.rows();
  const Matrix2D h_data = hidden_probs_batch(rbm, batch);

  Matrix2D h_sample(h_data.rows(), h_data.cols());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < h_data.size(); ++i)
    h_sample.data()[i] = unit(rng) < h_data.data()[i] ? 1.0 : 0.0;

  const Matrix2D v_recon = visible_probs_batch(rbm, h_sample);
  const Matrix2D h_recon = hidden_probs_batch(rbm, v_recon);

  const double scale = config.learning_rate / static_cast<double>(n);
  const Matrix2D pos = matmul_at_b(batch, h_data);
  const Matrix2D neg = matmul_at_b(v_recon, h_recon);
  for (std::size_t i = 0; i < rbm.weights.size(); ++i)
    rbm.weights.data()[i] += scale * (pos.data()[i] - neg.data()[i]);

  for (std::size_t i = 0; i < rbm.n_visible(); ++i) {
    double diff = 0.0;
    for (std::size_t r = 0; r < n; ++r) diff += batch(r, i) - v_recon(r, i);
    rbm.visible_bias[i] += scale * diff;
  }
  for (std::size_t j = 0; j < rbm.n_hidden(); ++j) {
    double diff = 0.0;
    for (std::size_t r = 0; r < n; ++r) diff += h_data(r, j) - h_recon(r, j);
    rbm.hidden_bias[j] += scale * diff;
  }

  double err = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double d = batch.data()[i] - v_recon.data()[i];
    err += d * d;
  }
  return err / static_cast<double>(batch.size());
}

// Full CD-1 training loop; returns the per-epoch mean reconstruction error.
inline std::vector<double> train_rbm(Rbm& rbm, const Matrix2D& data,
                                     const CdConfig& config) {
  config.validate();
  Rng rng = make_rng(derive_seed(config.seed, 0x72626d));
  const std::size_t n = data.rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> history;
  history.reserve(config.epochs);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double err_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t end = std::min(n, start + config.batch_size);
      Matrix2D batch(end - start, data.cols());
      for (std::size_t i = start; i < end; ++i)
        std::copy(data.row(order[i]), data.row(order[i]) + data.cols(),
                  batch.row(i - start));
      err_sum += cd1_update(rbm, batch, config, rng);
      ++batches;
    }
    history.push_back(err_sum / static_cast<double>(batches));
  }
  return history;
}

// ---------------------------------------------------------------------------
// Exact enumeration oracle (tiny instances only)
// ---------------------------------------------------------------------------

inline constexpr std::size_t kEnumerationBound = 20;

namespace detail {

inline void check_enumeration_size(const Rbm& rbm) {
  if (rbm.n_visible() + rbm.n_hidden() > kEnumerationBound)
    throw numeric_error("TooLarge", "enumeration bound is m + n <= 20");
}

inline std::vector<double> bits_of(std::size_t mask, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = (mask >> i) & 1u ? 1.0 : 0.0;
  return out;
}

}  // namespace detail

// Z = sum over all binary (v, h) of exp(-E(v,h))
inline double exact_partition(const Rbm& rbm) {
  detail::check_enumeration_size(rbm);
  const std::size_t m = rbm.n_visible(), n = rbm.n_hidden();
  double z = 0.0;
  for (std::size_t vm = 0; vm < (1u << m); ++vm) {
    const auto v = detail::bits_of(vm, m);
    for (std::size_t hm = 0; hm < (1u << n); ++hm)
      z += std::exp(-energy(rbm, v, detail::bits_of(hm, n)));
  }
  return z;
}

// p(v) = (1/Z) sum_h exp(-E(v,h))
inline double exact_marginal(const Rbm& rbm, const std::vector<double>& v) {
  detail::check_enumeration_size(rbm);
  const std::size_t n = rbm.n_hidden();
  double unnorm = 0.0;
  for (std::size_t hm = 0; hm < (1u << n); ++hm)
    unnorm += std::exp(-energy(rbm, v, detail::bits_of(hm, n)));
  return unnorm / exact_partition(rbm);
}

// Mean exact log-likelihood of a set of binary patterns (rows of data).
inline double exact_average_log_likelihood(const Rbm& rbm,
                                           const Matrix2D& data) {
  detail::check_enumeration_size(rbm);
  double total = 0.0;
  for (std::size_t r = 0; r < data.rows(); ++r) {
    std::vector<double> v(data.row(r), data.row(r) + data.cols());
    total += std::log(exact_marginal(rbm, v));
  }
  return total / static_cast<double>(data.rows());
}

}  // namespace popgen
