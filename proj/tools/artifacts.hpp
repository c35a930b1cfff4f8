#pragma once

// Artifact plumbing: run manifests next to every output, model checkpoints
// that carry their dimensions, and prerequisite checks.

#include <filesystem>
#include <optional>
#include <string>

#include "affordance/dataset.hpp"
#include "affordance/hash.hpp"
#include "affordance/model.hpp"
#include "affordance/numerics.hpp"
#include "json_io.hpp"

namespace affordance::tool {

inline constexpr const char* kToolVersion = "1.0.0";

inline std::string manifest_path(const std::string& artifact) { return artifact + ".manifest.json"; }

/// Throws not_found naming the command that produces `path`.
inline void require_artifact(const std::string& path, const std::string& producer) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorKind::not_found, path + " does not exist; run `affordance " + producer + "` first");
  }
}

inline json read_manifest(const std::string& artifact, const std::string& producer) {
  const std::string path = manifest_path(artifact);
  require_artifact(path, producer);
  try {
    return json::parse(read_file_bytes(path));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::format, path + ": " + e.what());
  }
}

inline void write_manifest(const std::string& artifact, const json& manifest) {
  write_file_atomic(manifest_path(artifact), manifest.dump(2) + "\n");
}

inline json dims_json(const ModelDims& d) {
  return {{"feature_dim", d.feature_dim}, {"num_classes", d.num_classes}, {"hidden", d.hidden}, {"latent", d.latent}};
}

inline ModelDims dims_from_json(const json& j) {
  try {
    return {j.at("feature_dim").get<std::size_t>(), j.at("num_classes").get<std::size_t>(),
            j.at("hidden").get<std::size_t>(), j.at("latent").get<std::size_t>()};
  } catch (const json::exception& e) {
    throw Error(ErrorKind::format, std::string("model dims: ") + e.what());
  }
}

/// Everything inference needs, loaded together and cross-checked.
struct ModelBundle {
  PoseVocabulary vocab;
  ClassifierModel classifier;
  VaeModel vae;
  double delta = 0.0;
  std::size_t m = 10;
  std::uint64_t featurizer_seed = 0;
};

template <class Model>
Model load_model(const std::string& path, const std::string& producer, const std::string& vocab_checksum, json* manifest_out) {
  require_artifact(path, producer);
  const json manifest = read_manifest(path, producer);
  if (manifest.value("vocab_checksum", std::string()) != vocab_checksum) {
    throw Error(ErrorKind::state, path + " was trained on a different vocabulary; rerun `affordance " + producer + "`");
  }
  Model model = Model::create(dims_from_json(manifest.at("dims")), 0);
  nn::load_parameters_into(model.params(), path);
  model.mark_trained();
  if (manifest_out) *manifest_out = manifest;
  return model;
}

inline ModelBundle load_bundle(const std::string& vocab_path, const std::string& classifier_path,
                               const std::string& vae_path) {
  require_artifact(vocab_path, "cluster");
  ModelBundle b;
  b.vocab = read_vocabulary(vocab_path);
  const std::string vsum = file_checksum(vocab_path);
  json cm, vm;
  b.classifier = load_model<ClassifierModel>(classifier_path, "train-classifier", vsum, &cm);
  b.vae = load_model<VaeModel>(vae_path, "train-vae", vsum, &vm);
  if (vm.value("classifier_checksum", std::string()) != file_checksum(classifier_path)) {
    throw Error(ErrorKind::state, vae_path + " was calibrated against a different classifier; rerun `affordance train-vae`");
  }
  b.delta = vm.at("delta").get<double>();
  b.m = vm.at("m").get<std::size_t>();
  b.featurizer_seed = cm.at("featurizer_seed").get<std::uint64_t>();
  return b;
}

}  // namespace affordance::tool
