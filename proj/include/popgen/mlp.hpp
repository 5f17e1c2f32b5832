#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "popgen/common.hpp"
#include "popgen/featurize.hpp"
#include "popgen/matrix.hpp"
#include "popgen/metrics.hpp"
#include "popgen/nn.hpp"

namespace popgen {

struct MlpConfig {
  std::vector<std::size_t> hidden_layers = {256, 256, 256, 256};
  std::size_t epochs = 50;
  DropoutSpec dropout{0.5, 0};
  OptimizerConfig optimizer;
  ScalingKind scaling = ScalingKind::HalfCount;
  ActivationKind hidden_activation = ActivationKind::ReLU;
  std::uint64_t seed = 0;

  void validate() const {
    if (epochs < 1) throw config_error("BadConfig", "epochs must be >= 1");
    for (std::size_t w : hidden_layers)
      if (w < 1) throw config_error("BadConfig", "layer width must be >= 1");
    dropout.validate();
    optimizer.validate();
  }
};

struct EpochStats {
  double loss = 0.0;
  double accuracy = 0.0;
};

struct MlpClassifier {
  std::vector<DenseLayer> layers;  // hidden ReLU, output Softmax
  std::vector<std::string> label_vocabulary;
  ScalingKind input_scaling = ScalingKind::HalfCount;
  std::vector<EpochStats> training_history;
};

namespace detail {

inline void check_trainable(const LabeledDataset& ds) {
  if (ds.matrix.rows() == 0)
    throw data_error("EmptyDataset", "no training rows");
  std::vector<char> present(ds.label_vocabulary.size(), 0);
  for (std::size_t l : ds.labels) present[l] = 1;
  if (std::count(present.begin(), present.end(), 1) < 2)
    throw data_error("SingleClass", "training needs at least 2 classes");
}

// Generic mini-batch cross-entropy training over a dense stack; shared by the
// MLP and the DBN fine-tuning step.
inline std::vector<EpochStats> train_softmax_stack(
    std::vector<DenseLayer>& layers, const Matrix2D& x,
    const std::vector<std::size_t>& labels, std::size_t n_classes,
    std::size_t epochs, double drop_probability,
    const OptimizerConfig& opt_config, std::uint64_t seed) {
  StackOptimizer optimizer(opt_config, layers.size());
  Rng rng = make_rng(derive_seed(seed, 0x7261696e));
  const std::size_t n = x.rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const Matrix2D targets = one_hot(labels, n_classes);

  std::vector<EpochStats> history;
  history.reserve(epochs);
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += opt_config.batch_size) {
      const std::size_t end = std::min(n, start + opt_config.batch_size);
      Matrix2D bx(end - start, x.cols());
      Matrix2D by(end - start, n_classes);
      for (std::size_t i = start; i < end; ++i) {
        std::copy(x.row(order[i]), x.row(order[i]) + x.cols(),
                  bx.row(i - start));
        std::copy(targets.row(order[i]), targets.row(order[i]) + n_classes,
                  by.row(i - start));
      }
      ForwardCache cache;
      const Matrix2D probs =
          forward(layers, bx, &cache, drop_probability, true, &rng);
      loss_sum += cross_entropy(probs, by);
      ++batches;
      const auto back = backward(cache, cross_entropy_grad(probs, by));
      optimizer.apply(layers, back.layer_grads);
    }
    EpochStats stats;
    stats.loss = loss_sum / static_cast<double>(std::max<std::size_t>(1, batches));
    const Matrix2D eval = forward(layers, x);
    stats.accuracy = accuracy(labels, argmax_rows(eval));
    history.push_back(stats);
  }
  return history;
}

}  // namespace detail

inline MlpClassifier train_mlp(const LabeledDataset& train,
                               const MlpConfig& config) {
  config.validate();
  detail::check_trainable(train);

  MlpClassifier model;
  model.label_vocabulary = train.label_vocabulary;
  model.input_scaling = config.scaling;

  const Matrix2D x = to_model_matrix(train.matrix, config.scaling);
  std::vector<std::size_t> widths;
  widths.push_back(x.cols());
  for (std::size_t w : config.hidden_layers) widths.push_back(w);
  widths.push_back(train.label_vocabulary.size());
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const bool last = l + 2 == widths.size();
    model.layers.push_back(make_dense_layer(
        widths[l], widths[l + 1],
        last ? ActivationKind::Softmax : config.hidden_activation,
        derive_seed(config.seed, l)));
  }

  model.training_history = detail::train_softmax_stack(
      model.layers, x, train.labels, train.label_vocabulary.size(),
      config.epochs, config.dropout.drop_probability, config.optimizer,
      config.seed);
  return model;
}

inline Matrix2D predict_proba(const MlpClassifier& model,
                              const FeatureMatrix& matrix) {
  return forward(model.layers, to_model_matrix(matrix, model.input_scaling));
}

inline std::vector<std::size_t> predict(const MlpClassifier& model,
                                        const FeatureMatrix& matrix) {
  return detail::argmax_rows(predict_proba(model, matrix));
}

// ---------------------------------------------------------------------------
// Cross-validation and grid search
// ---------------------------------------------------------------------------

struct CrossValidationResult {
  std::vector<ClassificationScore> fold_scores;
  ClassificationScore mean;
};

namespace detail {

inline std::vector<std::vector<std::size_t>> stratified_folds(
    const LabeledDataset& ds, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw config_error("BadConfig", "cross-validation needs k >= 2");
  std::vector<std::vector<std::size_t>> by_class(ds.label_vocabulary.size());
  for (std::size_t r = 0; r < ds.labels.size(); ++r)
    by_class[ds.labels[r]].push_back(r);
  Rng rng = make_rng(derive_seed(seed, 0x666f6c64));
  std::vector<std::vector<std::size_t>> folds(k);
  for (auto& members : by_class) {
    if (members.empty()) continue;
    if (members.size() < k)
      throw config_error("ClassTooSmall",
                         "every class needs at least k members");
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t i = 0; i < members.size(); ++i)
      folds[i % k].push_back(members[i]);
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

}  // namespace detail

inline CrossValidationResult cross_validate(const LabeledDataset& ds,
                                            const MlpConfig& config,
                                            std::size_t k = 5) {
  const auto folds = detail::stratified_folds(ds, k, config.seed);
  CrossValidationResult res;
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> train_rows;
    for (std::size_t g = 0; g < k; ++g)
      if (g != f)
        train_rows.insert(train_rows.end(), folds[g].begin(), folds[g].end());
    std::sort(train_rows.begin(), train_rows.end());

    MlpConfig fold_config = config;
    fold_config.seed = derive_seed(config.seed, f);
    const auto train_ds = detail::take_rows(ds, train_rows);
    const auto test_ds = detail::take_rows(ds, folds[f]);
    const auto model = train_mlp(train_ds, fold_config);
    const auto predictions = predict(model, test_ds.matrix);
    res.fold_scores.push_back(classification_score(
        test_ds.labels, predictions, ds.label_vocabulary));
  }
  auto& m = res.mean;
  for (const auto& s : res.fold_scores) {
    m.accuracy += s.accuracy;
    m.weighted_precision += s.weighted_precision;
    m.weighted_recall += s.weighted_recall;
    m.weighted_f1 += s.weighted_f1;
    m.rmse += s.rmse;
  }
  const double inv = 1.0 / static_cast<double>(k);
  m.accuracy *= inv;
  m.weighted_precision *= inv;
  m.weighted_recall *= inv;
  m.weighted_f1 *= inv;
  m.rmse *= inv;
  return res;
}

struct GridSearchResult {
  std::size_t best_index = 0;
  MlpConfig best_config;
  std::vector<CrossValidationResult> table;
};

inline GridSearchResult grid_search(const LabeledDataset& ds,
                                    const std::vector<MlpConfig>& grid,
                                    std::size_t k = 5) {
  if (grid.empty()) throw config_error("EmptyGrid", "grid_search needs configs");
  GridSearchResult res;
  double best_accuracy = -1.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    res.table.push_back(cross_validate(ds, grid[i], k));
    if (res.table.back().mean.accuracy > best_accuracy) {
      best_accuracy = res.table.back().mean.accuracy;
      res.best_index = i;
    }
  }
  res.best_config = grid[res.best_index];
  return res;
}

}  // namespace popgen
