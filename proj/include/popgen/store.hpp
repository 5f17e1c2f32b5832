#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "popgen/common.hpp"
#include "popgen/dbn.hpp"
#include "popgen/featurize.hpp"
#include "popgen/mlp.hpp"
#include "popgen/nn.hpp"

namespace popgen {

static_assert(std::endian::native == std::endian::little,
              "model artifacts are little-endian");

inline constexpr int kModelFormatVersion = 1;

inline const char* scaling_name(ScalingKind s) {
  switch (s) {
    case ScalingKind::None: return "none";
    case ScalingKind::HalfCount: return "half";
    case ScalingKind::UnitNorm: return "unitnorm";
  }
  return "?";
}

inline ScalingKind scaling_from_name(const std::string& name) {
  if (name == "none") return ScalingKind::None;
  if (name == "half") return ScalingKind::HalfCount;
  if (name == "unitnorm") return ScalingKind::UnitNorm;
  throw data_error("CorruptArtifact", "unknown scaling " + name);
}

namespace detail {

inline void write_layers(const std::vector<DenseLayer>& layers,
                         const std::vector<std::string>& vocabulary,
                         ScalingKind scaling, const std::string& kind,
                         const std::string& manifest_path,
                         const std::string& array_path) {
  std::ofstream manifest(manifest_path);
  if (!manifest) throw data_error("FileOpen", manifest_path);
  manifest << "popgen-model v" << kModelFormatVersion << "\n";
  manifest << "kind " << kind << "\n";
  manifest << "scaling " << scaling_name(scaling) << "\n";
  manifest << "labels " << vocabulary.size();
  for (const auto& l : vocabulary) manifest << ' ' << l;
  manifest << "\nlayers " << layers.size() << "\n";
  std::size_t total = 0;
  for (const auto& layer : layers) {
    manifest << "layer " << layer.in_dim() << ' ' << layer.out_dim() << ' '
             << activation_name(layer.activation) << "\n";
    total += layer.weights.size() + layer.bias.size();
  }
  manifest << "arrays " << total << "\n";

  std::ofstream array(array_path, std::ios::binary);
  if (!array) throw data_error("FileOpen", array_path);
  for (const auto& layer : layers) {
    array.write(reinterpret_cast<const char*>(layer.weights.data()),
                static_cast<std::streamsize>(layer.weights.size() *
                                             sizeof(double)));
    array.write(reinterpret_cast<const char*>(layer.bias.data()),
                static_cast<std::streamsize>(layer.bias.size() *
                                             sizeof(double)));
  }
}

struct LoadedModel {
  std::string kind;
  std::vector<DenseLayer> layers;
  std::vector<std::string> vocabulary;
  ScalingKind scaling = ScalingKind::HalfCount;
};

inline LoadedModel read_layers(const std::string& manifest_path,
                               const std::string& array_path) {
  std::ifstream manifest(manifest_path);
  if (!manifest) throw data_error("FileOpen", manifest_path);
  std::string magic, version;
  manifest >> magic >> version;
  if (magic != "popgen-model")
    throw data_error("CorruptArtifact", "not a model manifest");
  if (version != "v" + std::to_string(kModelFormatVersion))
    throw data_error("VersionMismatch", "model format " + version);

  LoadedModel model;
  std::string tag;
  manifest >> tag >> model.kind;
  std::string scaling;
  manifest >> tag >> scaling;
  model.scaling = scaling_from_name(scaling);
  std::size_t n_labels = 0;
  manifest >> tag >> n_labels;
  model.vocabulary.resize(n_labels);
  for (auto& l : model.vocabulary) manifest >> l;
  std::size_t n_layers = 0;
  manifest >> tag >> n_layers;
  std::size_t total = 0;
  for (std::size_t i = 0; i < n_layers; ++i) {
    std::size_t in = 0, out = 0;
    std::string activation;
    manifest >> tag >> in >> out >> activation;
    DenseLayer layer;
    layer.weights = Matrix2D(in, out);
    layer.bias.assign(out, 0.0);
    layer.activation = activation_from_name(activation);
    model.layers.push_back(std::move(layer));
    total += in * out + out;
  }
  std::size_t declared = 0;
  manifest >> tag >> declared;
  if (!manifest || declared != total)
    throw data_error("CorruptArtifact", "manifest shape/array count mismatch");

  std::ifstream array(array_path, std::ios::binary);
  if (!array) throw data_error("FileOpen", array_path);
  for (auto& layer : model.layers) {
    array.read(reinterpret_cast<char*>(layer.weights.data()),
               static_cast<std::streamsize>(layer.weights.size() *
                                            sizeof(double)));
    array.read(reinterpret_cast<char*>(layer.bias.data()),
               static_cast<std::streamsize>(layer.bias.size() *
                                            sizeof(double)));
    if (!array)
      throw data_error("CorruptArtifact", "array file truncated");
  }
  return model;
}

}  // namespace detail

inline void save_model(const MlpClassifier& model,
                       const std::string& manifest_path,
                       const std::string& array_path) {
  detail::write_layers(model.layers, model.label_vocabulary,
                       model.input_scaling, "mlp", manifest_path, array_path);
}

inline void save_model(const Dbn& model, const std::string& manifest_path,
                       const std::string& array_path) {
  detail::write_layers(model.layers, model.label_vocabulary,
                       model.input_scaling, "dbn", manifest_path, array_path);
}

inline MlpClassifier load_mlp(const std::string& manifest_path,
                              const std::string& array_path) {
  auto loaded = detail::read_layers(manifest_path, array_path);
  if (loaded.kind != "mlp")
    throw data_error("CorruptArtifact", "expected an mlp artifact");
  MlpClassifier model;
  model.layers = std::move(loaded.layers);
  model.label_vocabulary = std::move(loaded.vocabulary);
  model.input_scaling = loaded.scaling;
  return model;
}

inline Dbn load_dbn(const std::string& manifest_path,
                    const std::string& array_path) {
  auto loaded = detail::read_layers(manifest_path, array_path);
  if (loaded.kind != "dbn")
    throw data_error("CorruptArtifact", "expected a dbn artifact");
  Dbn model;
  model.layers = std::move(loaded.layers);
  model.label_vocabulary = std::move(loaded.vocabulary);
  model.input_scaling = loaded.scaling;
  return model;
}

}  // namespace popgen
