#pragma once

// Crop geometry around a query point and the pluggable crop featurizer.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>

#include "affordance/image.hpp"
#include "affordance/numerics/params.hpp"
#include "affordance/pose.hpp"

namespace affordance {

struct CropRect {
  int x = 0, y = 0, width = 0, height = 0;
  bool clamped = false;  // window was shifted or shrunk to fit the image

  friend bool operator==(const CropRect&, const CropRect&) = default;
};

/// Square crops centered at the point with side = image height and side =
/// image height / 2, plus the whole image.
struct CropSpec {
  CropRect full;
  CropRect half;
  CropRect whole;
};

namespace detail {

// Shift the window inside [0, extent); shrink only when it cannot fit.
inline void place_window(double center, int side, int extent, int& origin, int& length, bool& clamped) {
  length = side;
  if (side > extent) {
    length = extent;
    origin = 0;
    clamped = true;
    return;
  }
  const int ideal = static_cast<int>(std::lround(center - side / 2.0));
  origin = std::clamp(ideal, 0, extent - side);
  clamped = clamped || origin != ideal;
}

inline CropRect square_crop(int width, int height, Point2 p, int side) {
  CropRect r;
  detail::place_window(p.x, side, width, r.x, r.width, r.clamped);
  detail::place_window(p.y, side, height, r.y, r.height, r.clamped);
  return r;
}

}  // namespace detail

inline CropSpec make_crops(int width, int height, Point2 point) {
  if (width <= 0 || height <= 0) throw Error(ErrorKind::shape, "image dimensions must be positive");
  if (!(point.x >= 0.0 && point.x < width && point.y >= 0.0 && point.y < height)) {
    throw Error(ErrorKind::out_of_bounds, "query point outside the image");
  }
  CropSpec c;
  c.full = detail::square_crop(width, height, point, height);
  c.half = detail::square_crop(width, height, point, std::max(1, height / 2));
  c.whole = {0, 0, width, height, false};
  return c;
}

/// Area-weighted resample of a crop to an n x n grid.
inline std::vector<double> resample_crop(const Image& img, const CropRect& r, int n) {
  if (r.width <= 0 || r.height <= 0 || r.x < 0 || r.y < 0 || r.x + r.width > img.width() ||
      r.y + r.height > img.height()) {
    throw Error(ErrorKind::out_of_bounds, "crop outside image");
  }
  std::vector<double> out(static_cast<std::size_t>(n) * n, 0.0);
  const double sx = static_cast<double>(r.width) / n, sy = static_cast<double>(r.height) / n;
  for (int gy = 0; gy < n; ++gy) {
    const double y0 = r.y + gy * sy, y1 = y0 + sy;
    for (int gx = 0; gx < n; ++gx) {
      const double x0 = r.x + gx * sx, x1 = x0 + sx;
      double acc = 0.0;
      const int py_end = std::min(static_cast<int>(std::ceil(y1)), r.y + r.height);
      for (int py = static_cast<int>(std::floor(y0)); py < py_end; ++py) {
        const double wy = std::min<double>(py + 1, y1) - std::max<double>(py, y0);
        const int px_end = std::min(static_cast<int>(std::ceil(x1)), r.x + r.width);
        for (int px = static_cast<int>(std::floor(x0)); px < px_end; ++px) {
          const double wx = std::min<double>(px + 1, x1) - std::max<double>(px, x0);
          acc += wx * wy * img(px, py);
        }
      }
      out[static_cast<std::size_t>(gy) * n + gx] = acc / (sx * sy);
    }
  }
  return out;
}

class Featurizer {
 public:
  virtual ~Featurizer() = default;
  virtual std::size_t dim() const = 0;
  virtual nn::Vec featurize(const Image& img, const CropRect& crop) const = 0;
};

/// Default featurizer: 16x16 grayscale thumbnail, fixed seeded Gaussian
/// projection to `dim` values, L2-normalized.
class RandomProjectionFeaturizer final : public Featurizer {
 public:
  static constexpr int kThumb = 16;

  explicit RandomProjectionFeaturizer(std::size_t dim = 64, std::uint64_t seed = 0)
      : seed_(seed), projection_(static_cast<Eigen::Index>(dim), kThumb * kThumb) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0 / kThumb);
    for (Eigen::Index c = 0; c < projection_.cols(); ++c) {
      for (Eigen::Index r = 0; r < projection_.rows(); ++r) projection_(r, c) = n(rng);
    }
  }

  std::size_t dim() const override { return static_cast<std::size_t>(projection_.rows()); }
  std::uint64_t seed() const { return seed_; }

  nn::Vec featurize(const Image& img, const CropRect& crop) const override {
    const auto thumb = resample_crop(img, crop, kThumb);
    const nn::Vec x = Eigen::Map<const nn::Vec>(thumb.data(), static_cast<Eigen::Index>(thumb.size()));
    nn::Vec f = projection_ * x;
    const double norm = f.norm();
    if (norm > 0.0) f /= norm;
    return f;
  }

 private:
  std::uint64_t seed_;
  nn::Mat projection_;
};

/// Features of the three crops around one query point.
struct SceneFeatures {
  nn::Vec full;
  nn::Vec half;
  nn::Vec whole;
};

inline SceneFeatures extract_scene_features(const Featurizer& f, const Image& img, Point2 point) {
  const CropSpec c = make_crops(img.width(), img.height(), point);
  return {f.featurize(img, c.full), f.featurize(img, c.half), f.featurize(img, c.whole)};
}

/// Conditioning input: scene features plus the class vector (one-hot during
/// training, classifier probabilities at inference).
struct ConditionInput {
  SceneFeatures scene;
  nn::Vec class_vec;
};

inline nn::Vec one_hot(std::size_t k, std::size_t n) {
  if (k >= n) throw Error(ErrorKind::invalid_label, "class id out of range");
  nn::Vec v = nn::Vec::Zero(static_cast<Eigen::Index>(n));
  v(static_cast<Eigen::Index>(k)) = 1.0;
  return v;
}

}  // namespace affordance
