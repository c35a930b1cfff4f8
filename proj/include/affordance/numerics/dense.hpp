#pragma once

// Fully connected layers with cached reverse-mode gradients.
// Batches are column-major: one sample per column.

#include <random>
#include <string>
#include <vector>

#include "affordance/numerics/params.hpp"

namespace affordance::nn {

enum class Activation { identity, relu };

struct DenseLayer {
  std::size_t weight = 0;  // slot of the (out x in) weight matrix
  std::size_t bias = 0;    // slot of the (out x 1) bias
  Activation activation = Activation::identity;
};

struct ForwardCache {
  std::vector<Mat> inputs;  // input to each layer
  std::vector<Mat> preact;  // affine output of each layer, before activation
  bool empty() const { return inputs.empty(); }
};

/// Glorot-uniform weights, zero biases.
inline Mat glorot_uniform(Eigen::Index out, Eigen::Index in, std::mt19937_64& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> u(-a, a);
  Mat w(out, in);
  for (Eigen::Index c = 0; c < w.cols(); ++c) {
    for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = u(rng);
  }
  return w;
}

class DenseNet {
 public:
  DenseNet() = default;

  /// Allocate `<name>.w` / `<name>.b` in the store and append the layer.
  DenseNet& add(ParameterStore& store, const std::string& name, Eigen::Index in, Eigen::Index out,
                Activation act, std::mt19937_64& rng) {
    if (!layers_.empty() && in != out_dim_) {
      throw Error(ErrorKind::shape, "layer " + name + " expects " + std::to_string(in) + " inputs, previous emits " +
                                        std::to_string(out_dim_));
    }
    DenseLayer l;
    l.weight = store.add(name + ".w", glorot_uniform(out, in, rng));
    l.bias = store.add(name + ".b", Mat::Zero(out, 1));
    l.activation = act;
    if (layers_.empty()) in_dim_ = in;
    out_dim_ = out;
    layers_.push_back(l);
    return *this;
  }

  const std::vector<DenseLayer>& layers() const { return layers_; }
  Eigen::Index in_dim() const { return in_dim_; }
  Eigen::Index out_dim() const { return out_dim_; }

  Mat forward(const ParameterStore& p, const Mat& x, ForwardCache* cache = nullptr) const {
    if (layers_.empty()) throw Error(ErrorKind::state, "network has no layers");
    if (x.rows() != in_dim_) {
      throw Error(ErrorKind::shape, "input has " + std::to_string(x.rows()) + " rows, network expects " +
                                        std::to_string(in_dim_));
    }
    if (cache) {
      cache->inputs.clear();
      cache->preact.clear();
    }
    Mat h = x;
    for (const auto& l : layers_) {
      Mat z = p[l.weight] * h;
      z.colwise() += p[l.bias].col(0);
      if (cache) {
        cache->inputs.push_back(std::move(h));
        cache->preact.push_back(z);
      }
      h = l.activation == Activation::relu ? Mat(z.cwiseMax(0.0)) : std::move(z);
    }
    return h;
  }

  /// Accumulates parameter gradients into `grads` (same layout as the store
  /// used for forward) and returns the gradient w.r.t. the input batch.
  Mat backward(const ParameterStore& p, const ForwardCache& cache, const Mat& upstream, ParameterStore& grads) const {
    if (cache.inputs.size() != layers_.size()) throw Error(ErrorKind::state, "backward called without forward cache");
    if (upstream.rows() != out_dim_ || upstream.cols() != cache.preact.back().cols()) {
      throw Error(ErrorKind::shape, "upstream gradient shape mismatch");
    }
    Mat g = upstream;
    for (std::size_t i = layers_.size(); i-- > 0;) {
      const auto& l = layers_[i];
      if (l.activation == Activation::relu) g = g.cwiseProduct((cache.preact[i].array() > 0.0).cast<double>().matrix());
      grads[l.weight].noalias() += g * cache.inputs[i].transpose();
      grads[l.bias] += g.rowwise().sum();
      g = p[l.weight].transpose() * g;
    }
    return g;
  }

 private:
  std::vector<DenseLayer> layers_;
  Eigen::Index in_dim_ = 0;
  Eigen::Index out_dim_ = 0;
};

}  // namespace affordance::nn
