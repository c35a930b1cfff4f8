#pragma once

// Two-stage affordance model.
//
// Stage one classifies the pose class at a query point from three crop
// features passed through a shared tower. Stage two is a conditional VAE
// over the 36-d scale/deformation vector, conditioned on the same crops and
// a class vector. Encoder and decoder read the condition through one trunk
// whose parameter slots they share.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "affordance/clustering.hpp"
#include "affordance/hash.hpp"
#include "affordance/numerics.hpp"
#include "affordance/pose.hpp"
#include "affordance/scene_features.hpp"

namespace affordance {

using nn::Mat;
using nn::Vec;

struct ModelDims {
  std::size_t feature_dim = 64;
  std::size_t num_classes = 30;
  std::size_t hidden = 512;
  std::size_t latent = 30;
};

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  nn::AdamConfig adam;
  double kl_weight = 1.0;  // VAE only
};

/// Scene features for a batch, one sample per column of each matrix.
struct FeatureBatch {
  Mat full, half, whole;

  std::size_t size() const { return static_cast<std::size_t>(full.cols()); }

  static FeatureBatch from(std::span<const SceneFeatures> items) {
    if (items.empty()) throw Error(ErrorKind::empty_input, "empty batch");
    const auto f = items[0].full.size();
    const auto n = static_cast<Eigen::Index>(items.size());
    FeatureBatch b{Mat(f, n), Mat(f, n), Mat(f, n)};
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& s = items[static_cast<std::size_t>(i)];
      if (s.full.size() != f || s.half.size() != f || s.whole.size() != f) {
        throw Error(ErrorKind::shape, "inconsistent feature dimensions");
      }
      b.full.col(i) = s.full;
      b.half.col(i) = s.half;
      b.whole.col(i) = s.whole;
    }
    return b;
  }
};

/// Classes ordered by probability, ties broken by class id.
inline std::vector<std::size_t> rank_classes(const Vec& probs) {
  std::vector<std::size_t> order(static_cast<std::size_t>(probs.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return probs(static_cast<Eigen::Index>(a)) > probs(static_cast<Eigen::Index>(b));
  });
  return order;
}

struct EpochStats {
  std::size_t epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;        // classifier
  double reconstruction = 0.0;  // VAE, mean per sample
  double kl = 0.0;              // VAE, mean per sample
};

namespace detail {

inline void require_finite(double loss, const nn::ParameterStore& p, std::size_t epoch) {
  if (!std::isfinite(loss) || !p.all_finite()) {
    throw Error(ErrorKind::training_diverged, "non-finite loss or parameters in epoch " + std::to_string(epoch));
  }
}

inline std::vector<std::size_t> shuffled(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

template <typename T>
std::vector<T> gather(std::span<const T> items, std::span<const std::size_t> idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(items[i]);
  return out;
}

inline Mat stack(std::initializer_list<const Mat*> parts) {
  Eigen::Index rows = 0;
  for (const Mat* p : parts) rows += p->rows();
  Mat out(rows, (*parts.begin())->cols());
  Eigen::Index r = 0;
  for (const Mat* p : parts) {
    out.middleRows(r, p->rows()) = *p;
    r += p->rows();
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Classifier

class ClassifierModel {
 public:
  struct Cache {
    nn::ForwardCache full, half, whole, head;
  };

  ClassifierModel() = default;

  static ClassifierModel create(const ModelDims& dims, std::uint64_t seed) {
    ClassifierModel m;
    m.dims_ = dims;
    std::mt19937_64 rng(seed);
    const auto f = static_cast<Eigen::Index>(dims.feature_dim), h = static_cast<Eigen::Index>(dims.hidden);
    m.tower_.add(m.params_, "tower", f, h, nn::Activation::relu, rng);
    m.head_.add(m.params_, "head", 3 * h, static_cast<Eigen::Index>(dims.num_classes), nn::Activation::identity, rng);
    return m;
  }

  const ModelDims& dims() const { return dims_; }
  nn::ParameterStore& params() { return params_; }
  const nn::ParameterStore& params() const { return params_; }
  const nn::DenseNet& tower() const { return tower_; }
  const nn::DenseNet& head() const { return head_; }
  bool trained() const { return trained_; }
  void mark_trained() { trained_ = true; }

  Mat logits(const FeatureBatch& x, Cache* cache = nullptr) const {
    const Mat a = tower_.forward(params_, x.full, cache ? &cache->full : nullptr);
    const Mat b = tower_.forward(params_, x.half, cache ? &cache->half : nullptr);
    const Mat c = tower_.forward(params_, x.whole, cache ? &cache->whole : nullptr);
    return head_.forward(params_, detail::stack({&a, &b, &c}), cache ? &cache->head : nullptr);
  }

  /// Backpropagate d loss / d logits into `grads`.
  void backward(const Cache& cache, const Mat& grad_logits, nn::ParameterStore& grads) const {
    const Mat d = head_.backward(params_, cache.head, grad_logits, grads);
    const auto h = static_cast<Eigen::Index>(dims_.hidden);
    tower_.backward(params_, cache.full, d.topRows(h), grads);
    tower_.backward(params_, cache.half, d.middleRows(h, h), grads);
    tower_.backward(params_, cache.whole, d.bottomRows(h), grads);
  }

 private:
  ModelDims dims_;
  nn::ParameterStore params_;
  nn::DenseNet tower_;
  nn::DenseNet head_;
  bool trained_ = false;
};

/// Probability over classes for each sample (columns sum to one).
inline Mat classify(const ClassifierModel& model, const FeatureBatch& x) {
  if (x.full.rows() != static_cast<Eigen::Index>(model.dims().feature_dim)) {
    throw Error(ErrorKind::shape, "feature dimension does not match the classifier");
  }
  return nn::softmax(model.logits(x));
}

inline Vec classify(const ClassifierModel& model, const SceneFeatures& x) {
  const SceneFeatures one[] = {x};
  return classify(model, FeatureBatch::from(one)).col(0);
}

struct ClassifierSample {
  SceneFeatures features;
  std::size_t class_id = 0;
};

struct ClassifierTraining {
  ClassifierModel model;
  std::vector<EpochStats> log;
};

inline ClassifierTraining train_classifier(std::span<const ClassifierSample> samples, const ModelDims& dims,
                                           const TrainConfig& config, std::uint64_t seed) {
  if (samples.empty()) throw Error(ErrorKind::empty_input, "no training samples");
  ClassifierTraining out{ClassifierModel::create(dims, mix_seed(seed, 0)), {}};
  ClassifierModel& model = out.model;
  nn::AdamState adam{config.adam, 0, {}, {}};
  std::mt19937_64 rng(mix_seed(seed, 1));
  const std::size_t batch = std::max<std::size_t>(1, config.batch_size);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = detail::shuffled(samples.size(), rng);
    double total = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::span<const std::size_t> idx(order.data() + start, std::min(batch, order.size() - start));
      std::vector<SceneFeatures> feats;
      std::vector<std::size_t> labels;
      for (auto i : idx) {
        feats.push_back(samples[i].features);
        labels.push_back(samples[i].class_id);
      }
      ClassifierModel::Cache cache;
      const Mat logits = model.logits(FeatureBatch::from(feats), &cache);
      auto ce = nn::softmax_cross_entropy(logits, labels);
      for (Eigen::Index c = 0; c < logits.cols(); ++c) {
        Eigen::Index arg;
        logits.col(c).maxCoeff(&arg);
        correct += static_cast<std::size_t>(arg) == labels[static_cast<std::size_t>(c)];
      }
      total += ce.loss;
      nn::ParameterStore grads = model.params().zeros_like();
      model.backward(cache, ce.grad / static_cast<double>(idx.size()), grads);
      nn::adam_step(adam, model.params(), grads);
    }
    const double mean = total / static_cast<double>(samples.size());
    detail::require_finite(mean, model.params(), epoch);
    out.log.push_back({epoch, mean, static_cast<double>(correct) / static_cast<double>(samples.size()), 0.0, 0.0});
  }
  model.mark_trained();
  return out;
}

// ---------------------------------------------------------------------------
// Conditional VAE

struct VaeBatch {
  FeatureBatch features;
  Mat class_vec;  // K x B
  Mat target;     // 36 x B, standardized
};

struct VaeLoss {
  double reconstruction = 0.0;  // summed over the batch
  double kl = 0.0;              // summed over the batch
  double total(double kl_weight) const { return reconstruction + kl_weight * kl; }
};

class VaeModel {
 public:
  struct TrunkCache {
    nn::ForwardCache full, half, whole, cls;
  };

  VaeModel() = default;

  static VaeModel create(const ModelDims& dims, std::uint64_t seed) {
    VaeModel m;
    m.dims_ = dims;
    std::mt19937_64 rng(seed);
    const auto f = static_cast<Eigen::Index>(dims.feature_dim), h = static_cast<Eigen::Index>(dims.hidden);
    const auto k = static_cast<Eigen::Index>(dims.num_classes), l = static_cast<Eigen::Index>(dims.latent);
    const auto y = static_cast<Eigen::Index>(kScaleDeformDim);
    using nn::Activation;
    // Shared condition trunk.
    m.image_tower_.add(m.params_, "cond.image", f, h, Activation::relu, rng);
    m.class_path_.add(m.params_, "cond.class1", k, h, Activation::relu, rng)
        .add(m.params_, "cond.class2", h, h, Activation::relu, rng);
    // Encoder Q(z | x, y).
    m.target_path_.add(m.params_, "enc.target1", y, h, Activation::relu, rng)
        .add(m.params_, "enc.target2", h, h, Activation::relu, rng);
    m.encoder_head_.add(m.params_, "enc.out", 5 * h, 2 * l, Activation::identity, rng);
    // Decoder P(y | z, x).
    m.latent_path_.add(m.params_, "dec.latent1", l, h, Activation::relu, rng)
        .add(m.params_, "dec.latent2", h, h, Activation::relu, rng);
    m.decoder_head_.add(m.params_, "dec.out", 5 * h, y, Activation::identity, rng);
    // Target standardization, never updated by the optimizer.
    m.params_.add("stats.mean", Mat::Zero(y, 1));
    m.params_.add("stats.std", Mat::Ones(y, 1));
    return m;
  }

  const ModelDims& dims() const { return dims_; }
  nn::ParameterStore& params() { return params_; }
  const nn::ParameterStore& params() const { return params_; }
  bool trained() const { return trained_; }
  void mark_trained() { trained_ = true; }

  const nn::DenseNet& image_tower() const { return image_tower_; }
  const nn::DenseNet& class_path() const { return class_path_; }
  const nn::DenseNet& target_path() const { return target_path_; }
  const nn::DenseNet& latent_path() const { return latent_path_; }
  const nn::DenseNet& encoder_head() const { return encoder_head_; }
  const nn::DenseNet& decoder_head() const { return decoder_head_; }

  Vec target_mean() const { return params_["stats.mean"].col(0); }
  Vec target_std() const { return params_["stats.std"].col(0); }
  void set_standardization(const Vec& mean, const Vec& std) {
    params_["stats.mean"] = mean;
    params_["stats.std"] = std;
  }

  Mat standardize(const Mat& y) const {
    return ((y.colwise() - target_mean()).array().colwise() / target_std().array()).matrix();
  }
  Mat destandardize(const Mat& y) const {
    return ((y.array().colwise() * target_std().array()).matrix().colwise() + target_mean());
  }

  /// Condition trunk output [image(full); image(half); image(whole); class], 4H x B.
  Mat condition(const FeatureBatch& x, const Mat& class_vec, TrunkCache* cache = nullptr) const {
    if (class_vec.rows() != static_cast<Eigen::Index>(dims_.num_classes) ||
        class_vec.cols() != static_cast<Eigen::Index>(x.size())) {
      throw Error(ErrorKind::shape, "class vector batch has the wrong shape");
    }
    const Mat a = image_tower_.forward(params_, x.full, cache ? &cache->full : nullptr);
    const Mat b = image_tower_.forward(params_, x.half, cache ? &cache->half : nullptr);
    const Mat c = image_tower_.forward(params_, x.whole, cache ? &cache->whole : nullptr);
    const Mat k = class_path_.forward(params_, class_vec, cache ? &cache->cls : nullptr);
    return detail::stack({&a, &b, &c, &k});
  }

  void condition_backward(const TrunkCache& cache, const Mat& grad, nn::ParameterStore& grads) const {
    const auto h = static_cast<Eigen::Index>(dims_.hidden);
    image_tower_.backward(params_, cache.full, grad.middleRows(0, h), grads);
    image_tower_.backward(params_, cache.half, grad.middleRows(h, h), grads);
    image_tower_.backward(params_, cache.whole, grad.middleRows(2 * h, h), grads);
    class_path_.backward(params_, cache.cls, grad.middleRows(3 * h, h), grads);
  }

  /// Standardized decoder output for given condition and latent batch.
  Mat decode(const Mat& cond, const Mat& z, nn::ForwardCache* latent_cache = nullptr,
             nn::ForwardCache* head_cache = nullptr) const {
    const Mat ez = latent_path_.forward(params_, z, latent_cache);
    return decoder_head_.forward(params_, detail::stack({&cond, &ez}), head_cache);
  }

  /// Encoder output split into (mu, log_var).
  std::pair<Mat, Mat> encode(const Mat& cond, const Mat& target, nn::ForwardCache* target_cache = nullptr,
                             nn::ForwardCache* head_cache = nullptr) const {
    const Mat ey = target_path_.forward(params_, target, target_cache);
    const Mat out = encoder_head_.forward(params_, detail::stack({&cond, &ey}), head_cache);
    const auto l = static_cast<Eigen::Index>(dims_.latent);
    return {out.topRows(l), out.bottomRows(l)};
  }

  /// Full training objective for one batch with a fixed noise draw `alpha`
  /// (latent x B). Gradients of reconstruction + kl_weight * KL, both summed
  /// over the batch and multiplied by `scale`, are accumulated into `grads`.
  VaeLoss loss_and_gradient(const VaeBatch& batch, const Mat& alpha, double kl_weight, nn::ParameterStore* grads,
                            double scale = 1.0) const {
    TrunkCache trunk;
    nn::ForwardCache target_cache, enc_cache, latent_cache, dec_cache;
    const Mat cond = condition(batch.features, batch.class_vec, &trunk);
    const auto [mu, log_var] = encode(cond, batch.target, &target_cache, &enc_cache);
    const Mat z = nn::reparameterize(mu, log_var, alpha);
    const Mat y = decode(cond, z, &latent_cache, &dec_cache);

    VaeLoss loss;
    const Mat diff = y - batch.target;
    loss.reconstruction = diff.squaredNorm();
    const auto kl = nn::kl_to_standard_normal(mu, log_var);
    loss.kl = kl.loss;
    if (!grads) return loss;

    const auto h = static_cast<Eigen::Index>(dims_.hidden);
    const Mat d_dec_in = decoder_head_.backward(params_, dec_cache, 2.0 * scale * diff, *grads);
    const Mat dz = latent_path_.backward(params_, latent_cache, d_dec_in.bottomRows(h), *grads);
    const auto rg = nn::reparameterize_backward(log_var, alpha, dz);
    const Mat d_mu = rg.grad_mu + scale * kl_weight * kl.grad_mu;
    const Mat d_lv = rg.grad_log_var + scale * kl_weight * kl.grad_log_var;
    const Mat d_enc_out = detail::stack({&d_mu, &d_lv});
    const Mat d_enc_in = encoder_head_.backward(params_, enc_cache, d_enc_out, *grads);
    target_path_.backward(params_, target_cache, d_enc_in.bottomRows(h), *grads);
    const Mat d_cond = d_dec_in.topRows(4 * h) + d_enc_in.topRows(4 * h);
    condition_backward(trunk, d_cond, *grads);
    return loss;
  }

 private:
  ModelDims dims_;
  nn::ParameterStore params_;
  nn::DenseNet image_tower_, class_path_, target_path_, encoder_head_, latent_path_, decoder_head_;
  bool trained_ = false;
};

struct VaeSample {
  SceneFeatures features;
  std::size_t class_id = 0;
  ScaleDeform target;
};

struct VaeTraining {
  VaeModel model;
  std::vector<EpochStats> log;
};

inline Mat standard_normal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

inline VaeBatch make_vae_batch(const VaeModel& model, std::span<const VaeSample> samples) {
  std::vector<SceneFeatures> feats;
  const auto n = static_cast<Eigen::Index>(samples.size());
  Mat cls(static_cast<Eigen::Index>(model.dims().num_classes), n);
  Mat y(static_cast<Eigen::Index>(kScaleDeformDim), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    feats.push_back(s.features);
    cls.col(i) = one_hot(s.class_id, model.dims().num_classes);
    const auto flat = s.target.flatten();
    y.col(i) = Eigen::Map<const Vec>(flat.data(), static_cast<Eigen::Index>(flat.size()));
  }
  return {FeatureBatch::from(feats), cls, model.standardize(y)};
}

/// Per-dimension mean and standard deviation of the raw targets; a
/// dimension with zero spread keeps unit scale.
inline std::pair<Vec, Vec> target_statistics(std::span<const VaeSample> samples) {
  const auto d = static_cast<Eigen::Index>(kScaleDeformDim);
  Vec mean = Vec::Zero(d), sq = Vec::Zero(d);
  for (const auto& s : samples) {
    const auto flat = s.target.flatten();
    const Vec v = Eigen::Map<const Vec>(flat.data(), d);
    mean += v;
  }
  mean /= static_cast<double>(samples.size());
  for (const auto& s : samples) {
    const auto flat = s.target.flatten();
    const Vec v = Eigen::Map<const Vec>(flat.data(), d) - mean;
    sq += v.cwiseProduct(v);
  }
  Vec std = (sq / static_cast<double>(samples.size())).cwiseSqrt();
  for (Eigen::Index i = 0; i < d; ++i) {
    if (!(std(i) > 1e-12)) std(i) = 1.0;
  }
  return {mean, std};
}

inline VaeTraining train_vae(std::span<const VaeSample> samples, const ModelDims& dims, const TrainConfig& config,
                             std::uint64_t seed) {
  if (samples.empty()) throw Error(ErrorKind::empty_input, "no training samples");
  VaeTraining out{VaeModel::create(dims, mix_seed(seed, 0)), {}};
  VaeModel& model = out.model;
  const auto [mean, std] = target_statistics(samples);
  model.set_standardization(mean, std);

  nn::AdamState adam{config.adam, 0, {}, {}};
  std::mt19937_64 order_rng(mix_seed(seed, 1));
  std::mt19937_64 noise_rng(mix_seed(seed, 2));
  const std::size_t batch = std::max<std::size_t>(1, config.batch_size);
  const auto latent = static_cast<Eigen::Index>(dims.latent);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = detail::shuffled(samples.size(), order_rng);
    VaeLoss sum;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::span<const std::size_t> idx(order.data() + start, std::min(batch, order.size() - start));
      const auto picked = detail::gather(samples, idx);
      const VaeBatch b = make_vae_batch(model, picked);
      const Mat alpha = standard_normal(latent, static_cast<Eigen::Index>(idx.size()), noise_rng);
      nn::ParameterStore grads = model.params().zeros_like();
      const VaeLoss l = model.loss_and_gradient(b, alpha, config.kl_weight, &grads, 1.0 / static_cast<double>(idx.size()));
      sum.reconstruction += l.reconstruction;
      sum.kl += l.kl;
      nn::adam_step(adam, model.params(), grads);
    }
    const double n = static_cast<double>(samples.size());
    EpochStats st{epoch, sum.total(config.kl_weight) / n, 0.0, sum.reconstruction / n, sum.kl / n};
    detail::require_finite(st.loss, model.params(), epoch);
    out.log.push_back(st);
  }
  model.mark_trained();
  return out;
}

// ---------------------------------------------------------------------------
// Inference

struct GeneratedPose {
  Pose pose;
  std::size_t class_id = 0;
  ScaleDeform sd;
  Vec z;
  Vec scores;  // classifier distribution the decoder was conditioned on
};

struct GenerateOptions {
  /// Condition the decoder on the classifier's full score vector (true) or
  /// on the one-hot argmax class (false).
  bool soft_condition = true;
  /// Decoded scales are floored here so every sample decodes to a pose.
  double min_scale = 1e-3;
};

/// Decoder samples at `anchor`: class = argmax of the classifier, z ~ N(0, I)
/// drawn from a generator seeded with `seed`.
inline std::vector<GeneratedPose> generate_pose(const ClassifierModel& classifier, const VaeModel& vae,
                                                const SceneFeatures& scene, Point2 anchor, const PoseVocabulary& vocab,
                                                std::uint64_t seed, std::size_t n_samples,
                                                const GenerateOptions& options = {}) {
  if (!classifier.trained() || !vae.trained()) throw Error(ErrorKind::state, "models are not trained");
  if (vocab.size() != classifier.dims().num_classes || vocab.size() != vae.dims().num_classes) {
    throw Error(ErrorKind::shape, "vocabulary size does not match the models");
  }
  const Vec scores = classify(classifier, scene);
  const std::size_t cls = rank_classes(scores).front();
  const Vec cond_class = options.soft_condition ? scores : one_hot(cls, vocab.size());

  const SceneFeatures one[] = {scene};
  const auto n = static_cast<Eigen::Index>(n_samples);
  const FeatureBatch x = FeatureBatch::from(one);
  const Mat cond1 = vae.condition(x, Mat(cond_class));
  const Mat cond = cond1.replicate(1, n);
  std::mt19937_64 rng(seed);
  const Mat z = standard_normal(static_cast<Eigen::Index>(vae.dims().latent), n, rng);
  const Mat y = vae.destandardize(vae.decode(cond, z));

  std::vector<GeneratedPose> out;
  out.reserve(n_samples);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec col = y.col(i);
    ScaleDeform sd = ScaleDeform::unflatten(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())));
    sd.s_h = std::max(sd.s_h, options.min_scale);
    sd.s_w = std::max(sd.s_w, options.min_scale);
    out.push_back({decode(sd, vocab.center(cls), anchor), cls, sd, z.col(i), scores});
  }
  return out;
}

struct PoseScore {
  double distance = 0.0;
  bool plausible = false;
};

/// Mean euclidean joint distance between `candidate` and m generated poses at
/// `anchor`; plausible when below `delta`.
inline PoseScore score_pose(const ClassifierModel& classifier, const VaeModel& vae, const SceneFeatures& scene,
                            Point2 anchor, const Pose& candidate, std::size_t m, const PoseVocabulary& vocab,
                            std::uint64_t seed, double delta, const GenerateOptions& options = {}) {
  if (m == 0) throw Error(ErrorKind::usage, "m must be at least 1");
  const Pose checked(candidate.joints());  // re-validates
  const auto gen = generate_pose(classifier, vae, scene, anchor, vocab, seed, m, options);
  double total = 0.0;
  for (const auto& g : gen) total += joint_distance(g.pose, checked);
  PoseScore s;
  s.distance = total / static_cast<double>(m);
  s.plausible = s.distance < delta;
  return s;
}

/// Threshold maximizing F1 for "plausible iff distance < delta". Returned
/// as the midpoint between the last accepted and the first rejected score.
inline double select_delta_f1(std::span<const double> distances, std::span<const bool> positive) {
  if (distances.size() != positive.size() || distances.empty()) throw Error(ErrorKind::shape, "score/label mismatch");
  std::vector<std::size_t> order(distances.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return distances[a] < distances[b]; });
  const auto total_pos = static_cast<double>(std::count(positive.begin(), positive.end(), true));
  if (total_pos == 0) throw Error(ErrorKind::undefined_precision, "no positive samples");
  double best_f1 = -1.0, best_delta = distances[order.front()];
  double tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (positive[order[i]] ? tp : fp) += 1;
    if (i + 1 < order.size() && distances[order[i + 1]] == distances[order[i]]) continue;
    const double f1 = 2 * tp / (tp + fp + total_pos);
    if (f1 > best_f1) {
      best_f1 = f1;
      const double hi = i + 1 < order.size() ? distances[order[i + 1]] : distances[order[i]] + 1.0;
      best_delta = 0.5 * (distances[order[i]] + hi);
    }
  }
  return best_delta;
}

}  // namespace affordance
