#pragma once

#include <cmath>
#include <span>

#include "affordance/numerics/params.hpp"

namespace affordance::nn {

/// Column-wise softmax with max subtraction.
inline Mat softmax(const Mat& logits) {
  Mat out(logits.rows(), logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const double m = logits.col(c).maxCoeff();
    out.col(c) = (logits.col(c).array() - m).exp().matrix();
    out.col(c) /= out.col(c).sum();
  }
  return out;
}

struct LossResult {
  double loss = 0.0;
  Mat grad;
};

/// Summed over the batch: loss = sum_c -log softmax(logits_c)[label_c],
/// gradient = softmax - one_hot.
inline LossResult softmax_cross_entropy(const Mat& logits, std::span<const std::size_t> labels) {
  if (logits.rows() < 2) throw Error(ErrorKind::shape, "need at least two classes");
  if (static_cast<std::size_t>(logits.cols()) != labels.size()) throw Error(ErrorKind::shape, "label count mismatch");
  LossResult r;
  r.grad = softmax(logits);
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const auto label = labels[static_cast<std::size_t>(c)];
    if (label >= static_cast<std::size_t>(logits.rows())) {
      throw Error(ErrorKind::invalid_label, "label " + std::to_string(label) + " out of range");
    }
    const auto k = static_cast<Eigen::Index>(label);
    const double m = logits.col(c).maxCoeff();
    const double lse = m + std::log((logits.col(c).array() - m).exp().sum());
    r.loss += lse - logits(k, c);
    r.grad(k, c) -= 1.0;
  }
  return r;
}

inline LossResult softmax_cross_entropy(const Vec& logits, std::size_t label) {
  const std::size_t labels[] = {label};
  return softmax_cross_entropy(Mat(logits), labels);
}

struct KlResult {
  double loss = 0.0;
  Mat grad_mu;
  Mat grad_log_var;
};

/// KL[N(mu, diag exp(log_var)) || N(0, I)], summed over dimensions and batch.
inline KlResult kl_to_standard_normal(const Mat& mu, const Mat& log_var) {
  if (mu.rows() != log_var.rows() || mu.cols() != log_var.cols()) throw Error(ErrorKind::shape, "mu/log_var mismatch");
  KlResult r;
  const Eigen::ArrayXXd var = log_var.array().exp();
  r.loss = 0.5 * (mu.array().square() + var - 1.0 - log_var.array()).sum();
  r.grad_mu = mu;
  r.grad_log_var = (0.5 * (var - 1.0)).matrix();
  return r;
}

/// z = mu + exp(log_var / 2) * alpha.
inline Mat reparameterize(const Mat& mu, const Mat& log_var, const Mat& alpha) {
  if (mu.rows() != alpha.rows() || mu.cols() != alpha.cols() || log_var.rows() != mu.rows() ||
      log_var.cols() != mu.cols()) {
    throw Error(ErrorKind::shape, "reparameterize shape mismatch");
  }
  return (mu.array() + (0.5 * log_var.array()).exp() * alpha.array()).matrix();
}

struct ReparamGrad {
  Mat grad_mu;
  Mat grad_log_var;
};

inline ReparamGrad reparameterize_backward(const Mat& log_var, const Mat& alpha, const Mat& grad_z) {
  return {grad_z, (grad_z.array() * 0.5 * (0.5 * log_var.array()).exp() * alpha.array()).matrix()};
}

}  // namespace affordance::nn
