#pragma once

// Central finite differences, test-only. Kept independent of the analytic
// backward code it checks.

#include <algorithm>
#include <cmath>
#include <functional>

#include "affordance/numerics/params.hpp"

namespace affordance::testing {

inline double relative_error(double analytic, double numeric) {
  // Floor the denominator so gradients that are zero up to round-off are
  // compared absolutely.
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

/// d loss / d m(r, c) for every entry of `m`, perturbing in place. Five-point
/// stencil, so truncation is O(h^4) and h can stay well above round-off.
inline nn::Mat numeric_gradient(nn::Mat& m, const std::function<double()>& loss, double h = 1e-3) {
  nn::Mat g(m.rows(), m.cols());
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      const double keep = m(r, c);
      auto at = [&](double step) {
        m(r, c) = keep + step;
        return loss();
      };
      const double f1 = at(h), f_1 = at(-h), f2 = at(2 * h), f_2 = at(-2 * h);
      m(r, c) = keep;
      g(r, c) = (8 * (f1 - f_1) - (f2 - f_2)) / (12 * h);
    }
  }
  return g;
}

inline double max_relative_error(const nn::Mat& analytic, const nn::Mat& numeric) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    worst = std::max(worst, relative_error(analytic.data()[i], numeric.data()[i]));
  }
  return worst;
}

struct StoreCheck {
  double worst = 0.0;
  std::size_t checked = 0;
  std::size_t kinks = 0;  // entries where a ReLU switches inside the stencil
};

/// Compares `analytic` against finite differences of `m`. An entry whose
/// differences at h and h/4 disagree sits on a non-differentiable point and
/// is counted in `kinks` instead of compared.
inline void check_matrix_detailed(nn::Mat& m, const nn::Mat& analytic, const std::function<double()>& loss,
                                  StoreCheck& out, double h = 1e-3) {
  const nn::Mat coarse = numeric_gradient(m, loss, h);
  const nn::Mat fine = numeric_gradient(m, loss, h / 4);
  for (Eigen::Index j = 0; j < coarse.size(); ++j) {
    if (relative_error(coarse.data()[j], fine.data()[j]) > 1e-5) {
      ++out.kinks;
      continue;
    }
    ++out.checked;
    out.worst = std::max(out.worst, relative_error(analytic.data()[j], coarse.data()[j]));
  }
}

/// Worst relative error over every slot of `params`, skipping kinks.
inline StoreCheck check_store_detailed(nn::ParameterStore& params, const nn::ParameterStore& analytic,
                                       const std::function<double()>& loss, double h = 1e-3) {
  StoreCheck out;
  for (std::size_t i = 0; i < params.size(); ++i) check_matrix_detailed(params[i], analytic[i], loss, out, h);
  return out;
}

}  // namespace affordance::testing
