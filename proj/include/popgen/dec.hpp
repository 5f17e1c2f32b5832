#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "popgen/common.hpp"
#include "popgen/kmeans.hpp"
#include "popgen/matrix.hpp"
#include "popgen/nn.hpp"

namespace popgen {

// ---------------------------------------------------------------------------
// Stacked denoising autoencoder
// ---------------------------------------------------------------------------

struct Autoencoder {
  std::vector<DenseLayer> encoder;
  std::vector<DenseLayer> decoder;  // mirrors encoder dims in reverse

  std::size_t latent_dim() const {
    return encoder.empty() ? 0 : encoder.back().out_dim();
  }
  std::vector<DenseLayer> full_stack() const {
    std::vector<DenseLayer> all = encoder;
    all.insert(all.end(), decoder.begin(), decoder.end());
    return all;
  }
};

struct SaeConfig {
  std::vector<std::size_t> dims = {500, 250, 100};  // hidden, last = latent
  double corruption = 0.5;
  std::size_t iterations_per_layer = 5000;
  std::size_t finetune_iterations = 5000;
  OptimizerConfig optimizer{OptimizerKind::SgdMomentum, 0.01, 0.9,
                            0.95, 1e-6, 128};
  std::size_t lr_decay_interval = 500;  // learning rate divided by 10
  std::uint64_t seed = 0;

  void validate() const {
    if (dims.empty()) throw config_error("BadConfig", "SAE needs dims");
    if (!(corruption >= 0.0 && corruption < 1.0))
      throw config_error("BadConfig", "corruption must be in [0,1)");
    optimizer.validate();
  }
};

namespace detail {

inline Matrix2D sample_batch(const Matrix2D& data, std::size_t batch_size,
                             Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, data.rows() - 1);
  Matrix2D batch(std::min(batch_size, data.rows()), data.cols());
  for (std::size_t r = 0; r < batch.rows(); ++r) {
    const std::size_t i = pick(rng);
    std::copy(data.row(i), data.row(i) + data.cols(), batch.row(r));
  }
  return batch;
}

inline void corrupt_inplace(Matrix2D& m, double rate, Rng& rng) {
  if (rate <= 0.0) return;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double keep = 1.0 - rate;
  for (std::size_t i = 0; i < m.size(); ++i)
    m.data()[i] = unit(rng) < keep ? m.data()[i] / keep : 0.0;
}

inline double decayed_lr(double base, std::size_t iteration,
                         std::size_t decay_interval) {
  if (decay_interval == 0) return base;
  return base / std::pow(10.0, static_cast<double>(iteration / decay_interval));
}

}  // namespace detail

// Greedy layer-wise denoising pre-training. Pair l trains on the clean
// outputs of pairs < l; activations are ReLU except the decoder output of
// the first pair and the bottleneck encoder output, which are linear.
inline Autoencoder pretrain_sae(const Matrix2D& data, const SaeConfig& config) {
  config.validate();
  Autoencoder ae;
  Rng rng = make_rng(derive_seed(config.seed, 0x736165));
  Matrix2D current = data;
  std::size_t in_dim = data.cols();

  std::vector<DenseLayer> decoders_in_pair_order;
  for (std::size_t l = 0; l < config.dims.size(); ++l) {
    const std::size_t out_dim = config.dims[l];
    const bool bottleneck = l + 1 == config.dims.size();
    DenseLayer enc = make_dense_layer(
        in_dim, out_dim,
        bottleneck ? ActivationKind::Linear : ActivationKind::ReLU,
        derive_seed(config.seed, 2 * l));
    DenseLayer dec = make_dense_layer(
        out_dim, in_dim,
        l == 0 ? ActivationKind::Linear : ActivationKind::ReLU,
        derive_seed(config.seed, 2 * l + 1));

    std::vector<DenseLayer> enc_stack{std::move(enc)};
    std::vector<DenseLayer> dec_stack{std::move(dec)};
    StackOptimizer enc_optimizer(config.optimizer, 1);
    StackOptimizer dec_optimizer(config.optimizer, 1);
    for (std::size_t it = 0; it < config.iterations_per_layer; ++it) {
      const double lr = detail::decayed_lr(config.optimizer.learning_rate, it,
                                           config.lr_decay_interval);
      enc_optimizer.config.learning_rate = lr;
      dec_optimizer.config.learning_rate = lr;
      Matrix2D clean =
          detail::sample_batch(current, config.optimizer.batch_size, rng);
      Matrix2D corrupted = clean;
      detail::corrupt_inplace(corrupted, config.corruption, rng);

      // encode, corrupt the code, decode
      ForwardCache enc_cache;
      Matrix2D code = forward(enc_stack, corrupted, &enc_cache);
      Matrix2D corrupted_code = code;
      detail::corrupt_inplace(corrupted_code, config.corruption, rng);
      ForwardCache dec_cache;
      Matrix2D recon = forward(dec_stack, corrupted_code, &dec_cache);

      const auto dec_back =
          backward(dec_cache, squared_loss_grad(recon, clean));
      const auto enc_back = backward(enc_cache, dec_back.grad_input);
      enc_optimizer.apply(enc_stack, enc_back.layer_grads);
      dec_optimizer.apply(dec_stack, dec_back.layer_grads);
    }
    ae.encoder.push_back(std::move(enc_stack.front()));
    decoders_in_pair_order.push_back(std::move(dec_stack.front()));
    std::vector<DenseLayer> last{ae.encoder.back()};
    current = forward(last, current);
    in_dim = out_dim;
  }
  // decoder layers run in reverse pair order
  ae.decoder.assign(decoders_in_pair_order.rbegin(),
                    decoders_in_pair_order.rend());
  return ae;
}

// End-to-end squared-loss fine-tuning, no corruption. Returns the final
// training loss.
inline double finetune_ae(Autoencoder& ae, const Matrix2D& data,
                          const SaeConfig& config) {
  auto stack = ae.full_stack();
  StackOptimizer optimizer(config.optimizer, stack.size());
  Rng rng = make_rng(derive_seed(config.seed, 0x616566));
  double last_loss = 0.0;
  for (std::size_t it = 0; it < config.finetune_iterations; ++it) {
    optimizer.config.learning_rate = detail::decayed_lr(
        config.optimizer.learning_rate, it, config.lr_decay_interval);
    Matrix2D batch =
        detail::sample_batch(data, config.optimizer.batch_size, rng);
    ForwardCache cache;
    Matrix2D recon = forward(stack, batch, &cache);
    last_loss = squared_loss(recon, batch);
    const auto back = backward(cache, squared_loss_grad(recon, batch));
    optimizer.apply(stack, back.layer_grads);
  }
  const std::size_t n_enc = ae.encoder.size();
  for (std::size_t l = 0; l < stack.size(); ++l) {
    if (l < n_enc)
      ae.encoder[l] = stack[l];
    else
      ae.decoder[l - n_enc] = stack[l];
  }
  return last_loss;
}

inline Matrix2D encode(const Autoencoder& ae, const Matrix2D& x) {
  return forward(ae.encoder, x);
}

// ---------------------------------------------------------------------------
// DEC machinery
// ---------------------------------------------------------------------------

// q_ij = (1+||z_i-mu_j||^2/alpha)^(-(alpha+1)/2), row-normalized.
inline Matrix2D soft_assign(const Matrix2D& z, const Matrix2D& centroids,
                            double alpha = 1.0) {
  if (z.cols() != centroids.cols())
    throw numeric_error("ShapeMismatch", "soft_assign dimension");
  Matrix2D q(z.rows(), centroids.rows());
  const double power = -(alpha + 1.0) / 2.0;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    double sum = 0.0;
    double* row = q.row(i);
    for (std::size_t j = 0; j < centroids.rows(); ++j) {
      const double d2 =
          squared_distance(z.row(i), centroids.row(j), z.cols());
      row[j] = std::pow(1.0 + d2 / alpha, power);
      sum += row[j];
    }
    for (std::size_t j = 0; j < centroids.rows(); ++j) row[j] /= sum;
  }
  return q;
}

// p_ij = (q_ij^2 / f_j) normalized per row, f_j = sum_i q_ij.
inline Matrix2D target_distribution(const Matrix2D& q) {
  std::vector<double> f(q.cols(), 0.0);
  for (std::size_t i = 0; i < q.rows(); ++i)
    for (std::size_t j = 0; j < q.cols(); ++j) f[j] += q(i, j);
  for (double fj : f)
    if (fj <= 0.0)
      throw numeric_error("DegenerateCluster", "empty soft cluster frequency");
  Matrix2D p(q.rows(), q.cols());
  for (std::size_t i = 0; i < q.rows(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < q.cols(); ++j) {
      p(i, j) = q(i, j) * q(i, j) / f[j];
      sum += p(i, j);
    }
    for (std::size_t j = 0; j < q.cols(); ++j) p(i, j) /= sum;
  }
  return p;
}

// KL(P || Q) with 0 log 0 = 0.
inline double kl_loss(const Matrix2D& p, const Matrix2D& q) {
  require_same_shape(p, q, "kl_loss");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pi = p.data()[i];
    if (pi <= 0.0) continue;
    const double qi = q.data()[i];
    if (qi <= 0.0)
      throw numeric_error("ZeroQEntry", "q = 0 where p > 0");
    total += pi * std::log(pi / qi);
  }
  return total;
}

struct DecGradients {
  Matrix2D d_z;         // n x latent
  Matrix2D d_centroids; // k x latent
};

inline DecGradients dec_gradients(const Matrix2D& z, const Matrix2D& centroids,
                                  const Matrix2D& p, const Matrix2D& q,
                                  double alpha = 1.0) {
  if (z.cols() != centroids.cols() || p.rows() != z.rows() ||
      !p.same_shape(q) || p.cols() != centroids.rows())
    throw numeric_error("ShapeMismatch", "dec_gradients inputs");
  DecGradients g;
  g.d_z = Matrix2D(z.rows(), z.cols());
  g.d_centroids = Matrix2D(centroids.rows(), centroids.cols());
  const double factor = (alpha + 1.0) / alpha;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    for (std::size_t j = 0; j < centroids.rows(); ++j) {
      const double d2 =
          squared_distance(z.row(i), centroids.row(j), z.cols());
      const double coeff =
          factor / (1.0 + d2 / alpha) * (p(i, j) - q(i, j));
      for (std::size_t c = 0; c < z.cols(); ++c) {
        const double diff = z(i, c) - centroids(j, c);
        g.d_z(i, c) += coeff * diff;
        g.d_centroids(j, c) -= coeff * diff;
      }
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// DEC training loop
// ---------------------------------------------------------------------------

struct DecConfig {
  double alpha = 1.0;
  double tol = 0.001;  // stop when label-change fraction drops below this
  double gamma = 0.1;  // reconstruction-loss weight (0 = pure DEC)
  std::size_t update_interval = 0;  // 0 = once per epoch
  OptimizerConfig optimizer{OptimizerKind::SgdMomentum, 0.01, 0.9,
                            0.95, 1e-6, 128};
  std::size_t max_iterations = 5000;
  std::size_t kmeans_restarts = 20;
  std::uint64_t seed = 0;
  SaeConfig sae;

  void validate() const {
    if (alpha <= 0) throw config_error("BadConfig", "alpha must be > 0");
    if (gamma < 0) throw config_error("BadConfig", "gamma must be >= 0");
    optimizer.validate();
    sae.validate();
  }
};

struct DecIntervalStats {
  std::size_t iteration = 0;
  double kl = 0.0;
  double reconstruction = 0.0;
  double label_change_fraction = 0.0;
};

struct DecState {
  Autoencoder autoencoder;
  Matrix2D centroids;
  double alpha = 1.0;
  Matrix2D q;  // soft assignments, n x k
  Matrix2D p;  // target distribution, n x k
  std::vector<std::size_t> labels;
  std::vector<DecIntervalStats> history;
};

// Full pipeline: K-means centroid initialization in latent space, then
// alternating target refresh and mini-batch KL (+ gamma * reconstruction)
// gradient steps on the encoder and centroids.
inline DecState train_dec(const Matrix2D& data, std::size_t k,
                          Autoencoder autoencoder, const DecConfig& config) {
  config.validate();
  if (k < 2 || k > data.rows())
    throw config_error("KTooLarge", "k must be in [2, sample count]");
  if (autoencoder.encoder.empty())
    throw config_error("NotPretrained", "train_dec needs an autoencoder");

  DecState state;
  state.autoencoder = std::move(autoencoder);
  state.alpha = config.alpha;

  Matrix2D z = encode(state.autoencoder, data);
  const auto km = kmeans_fit(z, k, 300, config.kmeans_restarts,
                             derive_seed(config.seed, 0xdec0));
  state.centroids = km.centroids;
  state.q = soft_assign(z, state.centroids, config.alpha);
  state.p = target_distribution(state.q);
  state.labels = detail::argmax_rows(state.q);

  const std::size_t n = data.rows();
  const std::size_t batch_size = std::min(config.optimizer.batch_size, n);
  const std::size_t interval =
      config.update_interval > 0
          ? config.update_interval
          : (n + batch_size - 1) / batch_size;

  auto& enc_stack = state.autoencoder.encoder;
  auto& dec_stack = state.autoencoder.decoder;
  StackOptimizer enc_optimizer(config.optimizer, enc_stack.size());
  StackOptimizer dec_optimizer(config.optimizer, dec_stack.size());
  OptimizerState centroid_state;
  Rng rng = make_rng(derive_seed(config.seed, 0xdec1));
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);

  for (std::size_t it = 0; it < config.max_iterations; ++it) {
    if (it > 0 && it % interval == 0) {
      // refresh P, check stopping
      z = encode(state.autoencoder, data);
      state.q = soft_assign(z, state.centroids, config.alpha);
      const auto new_labels = detail::argmax_rows(state.q);
      std::size_t changed = 0;
      for (std::size_t i = 0; i < n; ++i)
        if (new_labels[i] != state.labels[i]) ++changed;
      const double change_fraction =
          static_cast<double>(changed) / static_cast<double>(n);

      DecIntervalStats stats;
      stats.iteration = it;
      stats.kl = kl_loss(state.p, state.q);
      if (config.gamma > 0) {
        const Matrix2D recon =
            forward(state.autoencoder.decoder, z);
        stats.reconstruction = squared_loss(recon, data);
      }
      stats.label_change_fraction = change_fraction;
      state.history.push_back(stats);
      state.labels = new_labels;
      if (change_fraction < config.tol) break;
      state.p = target_distribution(state.q);
    }

    // mini-batch step
    std::vector<std::size_t> rows(batch_size);
    for (auto& r : rows) r = pick(rng);
    Matrix2D bx(batch_size, data.cols());
    Matrix2D bp(batch_size, k);
    for (std::size_t r = 0; r < batch_size; ++r) {
      std::copy(data.row(rows[r]), data.row(rows[r]) + data.cols(),
                bx.row(r));
      std::copy(state.p.row(rows[r]), state.p.row(rows[r]) + k, bp.row(r));
    }

    ForwardCache enc_cache;
    const Matrix2D bz = forward(enc_stack, bx, &enc_cache);
    const Matrix2D bq = soft_assign(bz, state.centroids, config.alpha);
    auto grads = dec_gradients(bz, state.centroids, bp, bq, config.alpha);
    const double batch_scale = 1.0 / static_cast<double>(batch_size);
    for (std::size_t i = 0; i < grads.d_z.size(); ++i)
      grads.d_z.data()[i] *= batch_scale;
    for (std::size_t i = 0; i < grads.d_centroids.size(); ++i)
      grads.d_centroids.data()[i] *= batch_scale;

    Matrix2D latent_grad = grads.d_z;
    if (config.gamma > 0) {
      ForwardCache dec_cache;
      const Matrix2D recon = forward(dec_stack, bz, &dec_cache);
      Matrix2D recon_grad = squared_loss_grad(recon, bx);
      for (std::size_t i = 0; i < recon_grad.size(); ++i)
        recon_grad.data()[i] *= config.gamma;
      auto dec_back = backward(dec_cache, recon_grad);
      for (std::size_t i = 0; i < latent_grad.size(); ++i)
        latent_grad.data()[i] += dec_back.grad_input.data()[i];
      dec_optimizer.apply(dec_stack, dec_back.layer_grads);
    }
    auto enc_back = backward(enc_cache, latent_grad);
    enc_optimizer.apply(enc_stack, enc_back.layer_grads);
    optimizer_step(state.centroids.data(), grads.d_centroids.data(),
                   centroid_state, state.centroids.size(), config.optimizer);
  }

  z = encode(state.autoencoder, data);
  state.q = soft_assign(z, state.centroids, config.alpha);
  state.labels = detail::argmax_rows(state.q);
  return state;
}

// Builds the autoencoder internally (SAE pre-training + fine-tuning).
inline DecState train_dec(const Matrix2D& data, std::size_t k,
                          const DecConfig& config) {
  SaeConfig sae = config.sae;
  sae.seed = derive_seed(config.seed, 0x5ae);
  Autoencoder ae = pretrain_sae(data, sae);
  finetune_ae(ae, data, sae);
  return train_dec(data, k, std::move(ae), config);
}

}  // namespace popgen
