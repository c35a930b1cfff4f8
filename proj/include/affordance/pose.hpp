#pragma once

// Pose representation and the codec between absolute poses and
// (vocabulary center, scale, deformation) triples.
//
// Coordinates follow the pixel convention: x grows rightward, y grows
// downward, origin at the image top-left.

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <string_view>

#include "affordance/error.hpp"
#include "affordance/hash.hpp"

namespace affordance {

inline constexpr std::size_t kNumJoints = 17;
inline constexpr std::size_t kScaleDeformDim = 2 + 2 * kNumJoints;  // 36

// Fixed joint order. Changing it invalidates every dataset file (the header
// stores a hash of this list).
inline constexpr std::array<std::string_view, kNumJoints> kJointNames = {
    "head",           "neck",        "left_shoulder", "right_shoulder", "left_elbow",
    "right_elbow",    "left_wrist",  "right_wrist",   "left_hip",       "right_hip",
    "left_knee",      "right_knee",  "left_ankle",    "right_ankle",    "upper_torso",
    "mid_torso",      "lower_torso",
};

inline std::uint64_t joint_schema_hash() {
  std::uint64_t h = fnv1a64("");
  for (auto name : kJointNames) {
    h = fnv1a64(name, h);
    h = fnv1a64(",", h);
  }
  return h;
}

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
  friend bool operator==(const Point2&, const Point2&) = default;
};

struct BBox {
  double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;

  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
  Point2 center() const { return {0.5 * (min_x + max_x), 0.5 * (min_y + max_y)}; }
};

inline BBox bounding_box(std::span<const Point2> pts) {
  if (pts.empty()) throw Error(ErrorKind::invalid_pose, "no joints");
  BBox b{pts[0].x, pts[0].y, pts[0].x, pts[0].y};
  for (const auto& p : pts.subspan(1)) {
    b.min_x = std::min(b.min_x, p.x);
    b.min_y = std::min(b.min_y, p.y);
    b.max_x = std::max(b.max_x, p.x);
    b.max_y = std::max(b.max_y, p.y);
  }
  return b;
}

using Joints = std::array<Point2, kNumJoints>;

/// A 17-joint pose in pixel coordinates. Construction validates: all joints
/// finite and a bounding box with positive height and width.
class Pose {
 public:
  Pose() = default;
  explicit Pose(const Joints& joints) : joints_(joints) { validate(); }

  const Joints& joints() const { return joints_; }
  const Point2& operator[](std::size_t i) const { return joints_[i]; }
  BBox bbox() const { return bounding_box(joints_); }

  friend bool operator==(const Pose&, const Pose&) = default;

 private:
  void validate() const {
    for (const auto& p : joints_) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw Error(ErrorKind::invalid_pose, "non-finite joint");
    }
    const BBox b = bbox();
    if (!(b.height() > 0.0) || !(b.width() > 0.0)) {
      throw Error(ErrorKind::invalid_pose, "degenerate bounding box");
    }
  }

  Joints joints_{};
};

/// Pose in the canonical frame: unit bounding-box height, bbox center at the origin.
class NormalizedPose {
 public:
  NormalizedPose() = default;

  /// Adopt joints that are already canonical (e.g. read back from a
  /// vocabulary file). Rejects anything off the unit-height, centered frame.
  static NormalizedPose from_canonical(const Joints& joints) {
    const Pose checked(joints);
    const BBox b = checked.bbox();
    const Point2 c = b.center();
    if (std::abs(b.height() - 1.0) > 1e-9 || std::abs(c.x) > 1e-9 || std::abs(c.y) > 1e-9) {
      throw Error(ErrorKind::invalid_pose, "joints are not in the canonical frame");
    }
    return NormalizedPose(joints);
  }

  const Joints& joints() const { return joints_; }
  const Point2& operator[](std::size_t i) const { return joints_[i]; }
  BBox bbox() const { return bounding_box(joints_); }
  /// Same joints viewed as a (valid) absolute pose.
  Pose as_pose() const { return Pose(joints_); }

  friend bool operator==(const NormalizedPose&, const NormalizedPose&) = default;

 private:
  friend NormalizedPose normalize(const Pose& pose);
  explicit NormalizedPose(const Joints& joints) : joints_(joints) {}
  Joints joints_{};
};

inline NormalizedPose normalize(const Pose& pose) {
  const BBox b = pose.bbox();
  if (!(b.height() > 0.0)) throw Error(ErrorKind::invalid_pose, "zero bounding-box height");
  const double inv_h = 1.0 / b.height();
  const Point2 c = b.center();
  Joints out;
  for (std::size_t i = 0; i < kNumJoints; ++i) out[i] = inv_h * (pose[i] - c);
  return NormalizedPose(out);
}

struct ScaleDeform {
  double s_h = 1.0;
  double s_w = 1.0;
  std::array<Point2, kNumJoints> deform{};

  std::array<double, kScaleDeformDim> flatten() const {
    std::array<double, kScaleDeformDim> v{};
    v[0] = s_h;
    v[1] = s_w;
    for (std::size_t i = 0; i < kNumJoints; ++i) {
      v[2 + 2 * i] = deform[i].x;
      v[3 + 2 * i] = deform[i].y;
    }
    return v;
  }

  static ScaleDeform unflatten(std::span<const double> v) {
    if (v.size() != kScaleDeformDim) throw Error(ErrorKind::shape, "scale/deform vector must have 36 entries");
    ScaleDeform sd;
    sd.s_h = v[0];
    sd.s_w = v[1];
    for (std::size_t i = 0; i < kNumJoints; ++i) sd.deform[i] = {v[2 + 2 * i], v[3 + 2 * i]};
    return sd;
  }
};

/// Procrustes distance between two point sets under translation and
/// non-negative uniform scale (no rotation or reflection).
///
/// Both shapes are centered on their centroid and scaled to unit centroid
/// size; b is then aligned to a with the optimal scale s >= 0. The result is
/// the RMS per-point residual, which is symmetric and invariant to
/// translating or scaling either argument.
inline double procrustes_distance(std::span<const Point2> a, std::span<const Point2> b) {
  if (a.size() != b.size() || a.empty()) throw Error(ErrorKind::shape, "point sets differ in size");
  const auto n = static_cast<double>(a.size());
  Point2 ca{}, cb{};
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca = ca + a[i];
    cb = cb + b[i];
  }
  ca = (1.0 / n) * ca;
  cb = (1.0 / n) * cb;
  double na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Point2 pa = a[i] - ca, pb = b[i] - cb;
    na += pa.x * pa.x + pa.y * pa.y;
    nb += pb.x * pb.x + pb.y * pb.y;
  }
  if (!(na > 0.0) || !(nb > 0.0)) throw Error(ErrorKind::invalid_pose, "shape collapses to a point");
  const double ia = 1.0 / std::sqrt(na), ib = 1.0 / std::sqrt(nb);
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Point2 pa = ia * (a[i] - ca), pb = ib * (b[i] - cb);
    dot += pa.x * pb.x + pa.y * pb.y;
  }
  bool identical = true;
  for (std::size_t i = 0; i < a.size() && identical; ++i) {
    identical = ia * (a[i] - ca) == ib * (b[i] - cb);
  }
  if (identical) return 0.0;
  const double s = std::max(0.0, dot);
  // Residual summed directly (not as 1 - s^2) so identical shapes give ~0
  // instead of sqrt(rounding noise); averaged over both directions so the
  // result is exactly symmetric.
  double r_ab = 0.0, r_ba = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Point2 pa = ia * (a[i] - ca), pb = ib * (b[i] - cb);
    const Point2 dab = pa - s * pb, dba = pb - s * pa;
    r_ab += dab.x * dab.x + dab.y * dab.y;
    r_ba += dba.x * dba.x + dba.y * dba.y;
  }
  return std::sqrt(0.5 * (r_ab + r_ba) / n);
}

inline double procrustes_distance(const Pose& a, const Pose& b) {
  return procrustes_distance(std::span<const Point2>(a.joints()), std::span<const Point2>(b.joints()));
}

/// Express `pose` relative to a vocabulary center attached at `anchor`.
/// The anchor coincides with the bbox center of the scaled center.
inline ScaleDeform encode(const Pose& pose, const NormalizedPose& center, Point2 anchor) {
  const BBox pb = pose.bbox();
  const BBox cb = center.bbox();
  if (!(cb.height() > 0.0) || !(cb.width() > 0.0)) throw Error(ErrorKind::invalid_pose, "degenerate center");
  ScaleDeform sd;
  sd.s_h = pb.height() / cb.height();
  sd.s_w = pb.width() / cb.width();
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    const Point2 placed{anchor.x + sd.s_w * center[i].x, anchor.y + sd.s_h * center[i].y};
    sd.deform[i] = pose[i] - placed;
  }
  return sd;
}

inline Pose decode(const ScaleDeform& sd, const NormalizedPose& center, Point2 anchor) {
  if (!(sd.s_h > 0.0) || !(sd.s_w > 0.0) || !std::isfinite(sd.s_h) || !std::isfinite(sd.s_w)) {
    throw Error(ErrorKind::invalid_scale, "scales must be positive");
  }
  Joints out;
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    const Point2 placed{anchor.x + sd.s_w * center[i].x, anchor.y + sd.s_h * center[i].y};
    out[i] = placed + sd.deform[i];
  }
  return Pose(out);
}

/// Euclidean distance between two poses viewed as 34-vectors.
inline double joint_distance(const Pose& a, const Pose& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    const Point2 d = a[i] - b[i];
    s += d.x * d.x + d.y * d.y;
  }
  return std::sqrt(s);
}

inline Pose translate(const Pose& p, Point2 offset) {
  Joints out;
  for (std::size_t i = 0; i < kNumJoints; ++i) out[i] = p[i] + offset;
  return Pose(out);
}

/// Uniform scale about `origin`, then translate.
inline Pose scale_about(const Pose& p, double s, Point2 origin, Point2 offset = {}) {
  Joints out;
  for (std::size_t i = 0; i < kNumJoints; ++i) out[i] = origin + s * (p[i] - origin) + offset;
  return Pose(out);
}

}  // namespace affordance
