#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "popgen/common.hpp"
#include "popgen/featurize.hpp"
#include "popgen/matrix.hpp"
#include "popgen/mlp.hpp"
#include "popgen/nn.hpp"
#include "popgen/rbm.hpp"

namespace popgen {

struct DbnConfig {
  std::vector<std::size_t> hidden_layers = {256, 256, 256, 256};
  CdConfig pretrain;  // applied per layer; seed derived per layer
  std::size_t finetune_epochs = 50;
  DropoutSpec finetune_dropout{0.1, 0};
  OptimizerConfig finetune_optimizer;
  ScalingKind scaling = ScalingKind::HalfCount;
  std::uint64_t seed = 0;

  void validate() const {
    if (hidden_layers.empty())
      throw config_error("BadConfig", "DBN needs at least one hidden layer");
    for (std::size_t w : hidden_layers)
      if (w < 1) throw config_error("BadConfig", "layer width must be >= 1");
    pretrain.validate();
    finetune_dropout.validate();
    finetune_optimizer.validate();
  }
};

struct Dbn {
  std::vector<Rbm> rbm_stack;
  // Sigmoid encoder initialized from the stack, plus the softmax head;
  // this is the network fine-tuning trains and prediction uses.
  std::vector<DenseLayer> layers;
  std::vector<std::string> label_vocabulary;
  ScalingKind input_scaling = ScalingKind::HalfCount;
  std::vector<std::vector<double>> pretrain_history;  // per layer, per epoch
  std::vector<EpochStats> finetune_history;
};

// Greedy layer-wise CD-1 pre-training. Layer l trains on the hidden
// probabilities propagated through layers < l. Labels never enter here.
inline std::pair<std::vector<Rbm>, std::vector<std::vector<double>>>
pretrain_dbn(const Matrix2D& x, const DbnConfig& config) {
  config.validate();
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x.data()[i] < 0.0 || x.data()[i] > 1.0)
      throw numeric_error("ValueOutOfRange",
                          "pretrain data must be in [0,1]");
  std::vector<Rbm> stack;
  std::vector<std::vector<double>> history;
  Matrix2D current = x;
  std::size_t in_dim = x.cols();
  for (std::size_t l = 0; l < config.hidden_layers.size(); ++l) {
    Rbm rbm = make_rbm(in_dim, config.hidden_layers[l],
                       derive_seed(config.seed, l));
    CdConfig layer_config = config.pretrain;
    layer_config.seed = derive_seed(config.seed, 0x70726500 + l);
    history.push_back(train_rbm(rbm, current, layer_config));
    current = hidden_probs_batch(rbm, current);
    in_dim = config.hidden_layers[l];
    stack.push_back(std::move(rbm));
  }
  return {std::move(stack), std::move(history)};
}

// Recognition direction only: weights and hidden biases, sigmoid units.
inline std::vector<DenseLayer> encoder_from_stack(
    const std::vector<Rbm>& stack) {
  std::vector<DenseLayer> layers;
  layers.reserve(stack.size());
  for (const auto& rbm : stack) {
    DenseLayer layer;
    layer.weights = rbm.weights;
    layer.bias = rbm.hidden_bias;
    layer.activation = ActivationKind::Sigmoid;
    layers.push_back(std::move(layer));
  }
  return layers;
}

// Supervised fine-tuning: append a softmax head and train end-to-end on
// cross-entropy.
inline Dbn finetune_dbn(std::vector<Rbm> stack,
                        std::vector<std::vector<double>> pretrain_history,
                        const LabeledDataset& train, const DbnConfig& config) {
  detail::check_trainable(train);
  Dbn dbn;
  dbn.rbm_stack = std::move(stack);
  dbn.pretrain_history = std::move(pretrain_history);
  dbn.label_vocabulary = train.label_vocabulary;
  dbn.input_scaling = config.scaling;
  dbn.layers = encoder_from_stack(dbn.rbm_stack);
  dbn.layers.push_back(make_dense_layer(
      config.hidden_layers.back(), train.label_vocabulary.size(),
      ActivationKind::Softmax,
      derive_seed(config.seed, config.hidden_layers.size())));

  if (config.finetune_epochs > 0) {
    const Matrix2D x = to_model_matrix(train.matrix, config.scaling);
    dbn.finetune_history = detail::train_softmax_stack(
        dbn.layers, x, train.labels, train.label_vocabulary.size(),
        config.finetune_epochs, config.finetune_dropout.drop_probability,
        config.finetune_optimizer, config.seed);
  }
  return dbn;
}

inline Dbn train_dbn(const LabeledDataset& train, const DbnConfig& config) {
  const Matrix2D x = to_model_matrix(train.matrix, config.scaling);
  auto [stack, history] = pretrain_dbn(x, config);
  return finetune_dbn(std::move(stack), std::move(history), train, config);
}

inline Matrix2D predict_proba(const Dbn& dbn, const FeatureMatrix& matrix) {
  return forward(dbn.layers, to_model_matrix(matrix, dbn.input_scaling));
}

inline std::vector<std::size_t> predict(const Dbn& dbn,
                                        const FeatureMatrix& matrix) {
  return detail::argmax_rows(predict_proba(dbn, matrix));
}

}  // namespace popgen
