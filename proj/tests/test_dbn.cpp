#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "doctest.h"
#include "popgen/dbn.hpp"

using namespace popgen;

namespace {

LabeledDataset make_blobs(std::size_t per_class, std::size_t dims,
                          std::uint64_t seed, double flip = 0.05) {
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  LabeledDataset ds;
  ds.label_vocabulary = {"A", "B"};
  for (std::size_t c = 0; c < dims; ++c)
    ds.matrix.variant_keys.push_back(
        {"1", static_cast<std::int64_t>(c + 1), "v" + std::to_string(c)});
  for (std::size_t cls = 0; cls < 2; ++cls) {
    for (std::size_t i = 0; i < per_class; ++i) {
      ds.matrix.sample_ids.push_back("s" + std::to_string(cls) + "_" +
                                     std::to_string(i));
      ds.labels.push_back(cls);
      for (std::size_t c = 0; c < dims; ++c) {
        std::uint8_t base = cls == 0 ? 0 : 2;
        if (unit(rng) < flip) base = 1;
        ds.matrix.values.push_back(base);
      }
    }
  }
  return ds;
}

DbnConfig small_config(std::uint64_t seed) {
  DbnConfig config;
  config.hidden_layers = {12, 8};
  config.pretrain.epochs = 15;
  config.pretrain.learning_rate = 0.05;
  config.pretrain.batch_size = 8;
  config.finetune_epochs = 30;
  config.finetune_dropout.drop_probability = 0.0;
  config.finetune_optimizer.learning_rate = 0.1;
  config.finetune_optimizer.batch_size = 8;
  config.seed = seed;
  return config;
}

}  // namespace

TEST_CASE("pretraining stacks RBMs with the right shapes") {
  const auto ds = make_blobs(20, 10, 1);
  const Matrix2D x = to_model_matrix(ds.matrix, ScalingKind::HalfCount);
  const auto [stack, history] = pretrain_dbn(x, small_config(2));
  REQUIRE(stack.size() == 2);
  CHECK(stack[0].n_visible() == 10);
  CHECK(stack[0].n_hidden() == 12);
  CHECK(stack[1].n_visible() == 12);
  CHECK(stack[1].n_hidden() == 8);
  REQUIRE(history.size() == 2);
  CHECK(history[0].size() == 15);
  // reconstruction error should improve layer by layer over training
  CHECK(history[0].back() < history[0].front());
}

TEST_CASE("pretraining rejects data outside [0,1]") {
  Matrix2D bad{{0.5, 2.0}};
  CHECK_THROWS_WITH_AS(pretrain_dbn(bad, small_config(1)),
                       doctest::Contains("ValueOutOfRange"), Error);
}

TEST_CASE("pretraining ignores labels entirely") {
  auto ds = make_blobs(20, 10, 3);
  const Matrix2D x = to_model_matrix(ds.matrix, ScalingKind::HalfCount);
  const auto a = pretrain_dbn(x, small_config(4));
  // scrambling labels cannot change an unsupervised phase
  std::reverse(ds.labels.begin(), ds.labels.end());
  const auto b = pretrain_dbn(x, small_config(4));
  REQUIRE(a.first.size() == b.first.size());
  for (std::size_t l = 0; l < a.first.size(); ++l) {
    CHECK(a.first[l].weights == b.first[l].weights);
    CHECK(a.first[l].hidden_bias == b.first[l].hidden_bias);
  }
}

TEST_CASE("encoder_from_stack copies the recognition parameters") {
  const auto ds = make_blobs(10, 6, 5);
  const Matrix2D x = to_model_matrix(ds.matrix, ScalingKind::HalfCount);
  auto config = small_config(6);
  config.hidden_layers = {5};
  config.pretrain.epochs = 3;
  const auto [stack, history] = pretrain_dbn(x, config);
  const auto layers = encoder_from_stack(stack);
  REQUIRE(layers.size() == 1);
  CHECK(layers[0].weights == stack[0].weights);
  CHECK(layers[0].bias == stack[0].hidden_bias);
  CHECK(layers[0].activation == ActivationKind::Sigmoid);

  // encoder output equals the RBM hidden probabilities exactly
  const Matrix2D via_layer = forward(layers, x);
  const Matrix2D via_rbm = hidden_probs_batch(stack[0], x);
  REQUIRE(via_layer.rows() == via_rbm.rows());
  for (std::size_t i = 0; i < via_layer.size(); ++i)
    CHECK(std::abs(via_layer.data()[i] - via_rbm.data()[i]) < 1e-12);
}

TEST_CASE("dbn learns the blob problem") {
  const auto ds = make_blobs(40, 12, 7);
  const auto model = train_dbn(ds, small_config(8));
  const auto preds = predict(model, ds.matrix);
  CHECK(accuracy(ds.labels, preds) == doctest::Approx(1.0));
  REQUIRE(model.layers.size() == 3);  // two sigmoid encoders + softmax head
  CHECK(model.layers.back().activation == ActivationKind::Softmax);
  CHECK(model.finetune_history.size() == 30);
}

TEST_CASE("with pretraining disabled the dbn degenerates to a sigmoid mlp") {
  const auto ds = make_blobs(25, 9, 9);

  DbnConfig dbn_config = small_config(17);
  dbn_config.pretrain.epochs = 0;  // leave the stack at its random init

  MlpConfig mlp_config;
  mlp_config.hidden_layers = dbn_config.hidden_layers;
  mlp_config.epochs = dbn_config.finetune_epochs;
  mlp_config.dropout = dbn_config.finetune_dropout;
  mlp_config.optimizer = dbn_config.finetune_optimizer;
  mlp_config.scaling = dbn_config.scaling;
  mlp_config.hidden_activation = ActivationKind::Sigmoid;
  mlp_config.seed = dbn_config.seed;

  const auto dbn = train_dbn(ds, dbn_config);
  const auto mlp = train_mlp(ds, mlp_config);

  REQUIRE(dbn.layers.size() == mlp.layers.size());
  for (std::size_t l = 0; l < dbn.layers.size(); ++l) {
    CHECK(dbn.layers[l].weights == mlp.layers[l].weights);  // bit-exact
    CHECK(dbn.layers[l].bias == mlp.layers[l].bias);
  }
  CHECK(predict_proba(dbn, ds.matrix) == predict_proba(mlp, ds.matrix));
}

TEST_CASE("training is deterministic in the seed") {
  const auto ds = make_blobs(15, 8, 11);
  auto config = small_config(21);
  config.pretrain.epochs = 5;
  config.finetune_epochs = 5;
  const auto a = train_dbn(ds, config);
  const auto b = train_dbn(ds, config);
  for (std::size_t l = 0; l < a.layers.size(); ++l)
    CHECK(a.layers[l].weights == b.layers[l].weights);
  config.seed = 22;
  const auto c = train_dbn(ds, config);
  CHECK(a.layers[0].weights != c.layers[0].weights);
}

TEST_CASE("config validation") {
  DbnConfig config = small_config(1);
  config.hidden_layers.clear();
  CHECK_THROWS_WITH_AS(config.validate(), doctest::Contains("BadConfig"),
                       Error);
  config = small_config(1);
  config.pretrain.learning_rate = 0.0;
  CHECK_THROWS_AS(config.validate(), Error);
}
