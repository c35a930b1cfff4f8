#pragma once

#include <random>

#include "affordance/pose.hpp"

namespace affordance::testing {

/// Loosely human-shaped random pose: a jittered standing skeleton scaled and
/// placed somewhere in a 640x480 frame.
inline Pose random_pose(std::mt19937_64& rng) {
  static constexpr Point2 kTemplate[kNumJoints] = {
      {0.0, -0.45}, {0.0, -0.35}, {-0.12, -0.32}, {0.12, -0.32}, {-0.16, -0.15}, {0.16, -0.15},
      {-0.18, 0.0}, {0.18, 0.0},  {-0.08, 0.02},  {0.08, 0.02},  {-0.09, 0.25},  {0.09, 0.25},
      {-0.1, 0.5},  {0.1, 0.5},   {0.0, -0.25},   {0.0, -0.12},  {0.0, 0.0},
  };
  std::normal_distribution<double> jitter(0.0, 0.04);
  std::uniform_real_distribution<double> height(60.0, 300.0), px(100.0, 540.0), py(100.0, 380.0);
  const double h = height(rng);
  const Point2 at{px(rng), py(rng)};
  Joints j;
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    j[i] = at + h * Point2{kTemplate[i].x + jitter(rng), kTemplate[i].y + jitter(rng)};
  }
  return Pose(j);
}

}  // namespace affordance::testing
