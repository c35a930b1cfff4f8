#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "affordance/numerics/params.hpp"

namespace affordance::nn {

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<Mat> m;  // first moments, one per slot
  std::vector<Mat> v;  // second moments
};

/// Bias-corrected Adam update, in place. Moments are allocated on the first
/// call to match the parameter layout.
inline void adam_step(AdamState& state, ParameterStore& params, const ParameterStore& grads) {
  if (!params.same_layout(grads)) throw Error(ErrorKind::shape, "gradient layout differs from parameters");
  if (state.m.empty()) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      state.m.push_back(Mat::Zero(params[i].rows(), params[i].cols()));
      state.v.push_back(Mat::Zero(params[i].rows(), params[i].cols()));
    }
  }
  if (state.m.size() != params.size()) throw Error(ErrorKind::shape, "optimizer state has wrong slot count");
  const auto& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correct1 = 1.0 - std::pow(c.beta1, t);
  const double correct2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Mat& g = grads[i];
    if (state.m[i].rows() != g.rows() || state.m[i].cols() != g.cols()) {
      throw Error(ErrorKind::shape, "moment shape mismatch for slot " + params.slot(i).name);
    }
    state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * g;
    state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * g.cwiseProduct(g);
    const Eigen::ArrayXXd m_hat = state.m[i].array() / correct1;
    const Eigen::ArrayXXd v_hat = state.v[i].array() / correct2;
    params[i].array() -= c.lr * m_hat / (v_hat.sqrt() + c.epsilon);
  }
}

}  // namespace affordance::nn
