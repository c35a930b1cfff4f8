#pragma once

// Dense optical-flow fields, their composition along a shot, and pose
// transfer through a composed field.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "affordance/error.hpp"
#include "affordance/fileio.hpp"
#include "affordance/pose.hpp"
#include "affordance/record.hpp"

namespace affordance {

/// Per-pixel displacement: pixel p of one frame moves to p + d(p) in the next.
class FlowField {
 public:
  FlowField() = default;
  FlowField(int width, int height) : width_(width), height_(height) {
    if (width < 1 || height < 1) throw Error(ErrorKind::shape, "flow field must be at least 1x1");
    d_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), Point2{});
  }

  static FlowField uniform(int width, int height, Point2 d) {
    FlowField f(width, height);
    std::fill(f.d_.begin(), f.d_.end(), d);
    return f;
  }

  template <typename Fn>
  static FlowField from_function(int width, int height, Fn&& displacement) {
    FlowField f(width, height);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) f(x, y) = displacement(Point2{double(x), double(y)});
    }
    return f;
  }

  int width() const { return width_; }
  int height() const { return height_; }
  Point2& operator()(int x, int y) { return d_[index(x, y)]; }
  const Point2& operator()(int x, int y) const { return d_[index(x, y)]; }

  bool all_finite() const {
    for (const auto& p : d_) {
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) return false;
    }
    return true;
  }

  /// Bilinear displacement at a sub-pixel position. Outside the grid the
  /// border cell is extended linearly, so affine fields stay exact everywhere.
  Point2 sample(Point2 p) const {
    auto cell = [](double v, int n, int& i0, double& t) {
      if (n == 1) {
        i0 = 0;
        t = 0.0;
        return;
      }
      i0 = std::clamp(static_cast<int>(std::floor(v)), 0, n - 2);
      t = v - i0;
    };
    int x0, y0;
    double tx, ty;
    cell(p.x, width_, x0, tx);
    cell(p.y, height_, y0, ty);
    const int x1 = std::min(x0 + 1, width_ - 1), y1 = std::min(y0 + 1, height_ - 1);
    const Point2 a = (*this)(x0, y0), b = (*this)(x1, y0), c = (*this)(x0, y1), d = (*this)(x1, y1);
    const Point2 top = a + tx * (b - a), bottom = c + tx * (d - c);
    return top + ty * (bottom - top);
  }

  Point2 warp(Point2 p) const { return p + sample(p); }

  friend bool operator==(const FlowField&, const FlowField&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0, height_ = 0;
  std::vector<Point2> d_;
};

/// total(p) = first(p) + second(p + first(p)).
inline FlowField compose(const FlowField& first, const FlowField& second) {
  if (first.width() != second.width() || first.height() != second.height()) {
    throw Error(ErrorKind::shape, "flow fields differ in size");
  }
  FlowField out(first.width(), first.height());
  for (int y = 0; y < first.height(); ++y) {
    for (int x = 0; x < first.width(); ++x) {
      const Point2 d1 = first(x, y);
      const Point2 p{x + d1.x, y + d1.y};
      out(x, y) = d1 + second.sample(p);
    }
  }
  return out;
}

/// Compose fields in order: pixel p of the first frame maps through every field.
inline FlowField accumulate_flow(std::span<const FlowField> flows) {
  if (flows.empty()) throw Error(ErrorKind::empty_input, "no flow fields to accumulate");
  FlowField total = flows[0];
  for (std::size_t i = 1; i < flows.size(); ++i) total = compose(total, flows[i]);
  return total;
}

/// Frame indices within +-window of `index`, clipped to the shot.
inline std::pair<std::size_t, std::size_t> local_window(std::size_t index, std::size_t count, std::size_t window) {
  if (index >= count) throw Error(ErrorKind::out_of_bounds, "frame index outside the shot");
  return {index >= window ? index - window : 0, std::min(count - 1, index + window)};
}

/// Fields carrying frame `from` to frame `to`. forward[i] maps frame i to
/// i+1 and backward[i] maps frame i+1 to i.
inline std::vector<FlowField> flow_chain(std::span<const FlowField> forward, std::span<const FlowField> backward,
                                         std::size_t from, std::size_t to) {
  std::vector<FlowField> out;
  if (to > from) {
    if (to > forward.size()) throw Error(ErrorKind::out_of_bounds, "not enough forward flows");
    for (std::size_t i = from; i < to; ++i) out.push_back(forward[i]);
  } else if (to < from) {
    if (from > backward.size()) throw Error(ErrorKind::out_of_bounds, "not enough backward flows");
    for (std::size_t i = from; i > to; --i) out.push_back(backward[i - 1]);
  }
  return out;
}

struct TransferTarget {
  std::uint64_t id = 0;
  std::string scene;
  std::string show;
  std::string image;
  int width = 0;
  int height = 0;
};

/// Move a detected pose through `field` into the empty frame described by
/// `target`. A joint landing outside the target raises the out-of-frame flag.
inline AffordanceRecord transfer_pose(const Pose& pose, const FlowField& field, const TransferTarget& target,
                                      RecordSource source) {
  if (!pose_in_frame(pose, field.width(), field.height())) {
    throw Error(ErrorKind::out_of_bounds, "pose lies outside the source frame");
  }
  Joints warped;
  for (std::size_t i = 0; i < kNumJoints; ++i) warped[i] = field.warp(pose[i]);
  AffordanceRecord r;
  r.id = target.id;
  r.scene = target.scene;
  r.show = target.show;
  r.image = target.image;
  r.frame_width = target.width;
  r.frame_height = target.height;
  r.pose = Pose(warped);
  r.anchor = r.pose.bbox().center();
  r.source = source;
  r.status = RecordStatus::hypothesis;
  r.out_of_frame = !pose_in_frame(r.pose, target.width, target.height);
  return r;
}

// ---------------------------------------------------------------------------
// Middlebury .flo: "PIEH", i32 width, i32 height, then (u, v) f32 pairs row by row.

inline std::string encode_flo(const FlowField& f) {
  static_assert(std::endian::native == std::endian::little);
  std::string out = "PIEH";
  auto put = [&](auto v) {
    char buf[sizeof(v)];
    std::memcpy(buf, &v, sizeof(v));
    out.append(buf, sizeof(v));
  };
  put(static_cast<std::int32_t>(f.width()));
  put(static_cast<std::int32_t>(f.height()));
  for (int y = 0; y < f.height(); ++y) {
    for (int x = 0; x < f.width(); ++x) {
      put(static_cast<float>(f(x, y).x));
      put(static_cast<float>(f(x, y).y));
    }
  }
  return out;
}

inline FlowField decode_flo(std::string_view bytes) {
  if (bytes.size() < 12 || bytes.substr(0, 4) != "PIEH") throw Error(ErrorKind::format, "not a .flo file");
  std::int32_t w, h;
  std::memcpy(&w, bytes.data() + 4, 4);
  std::memcpy(&h, bytes.data() + 8, 4);
  if (w < 1 || h < 1 || bytes.size() != 12 + 8 * std::size_t(w) * std::size_t(h)) {
    throw Error(ErrorKind::format, ".flo size does not match its header");
  }
  FlowField f(w, h);
  std::size_t pos = 12;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float u, v;
      std::memcpy(&u, bytes.data() + pos, 4);
      std::memcpy(&v, bytes.data() + pos + 4, 4);
      pos += 8;
      f(x, y) = {u, v};
    }
  }
  if (!f.all_finite()) throw Error(ErrorKind::format, ".flo contains non-finite displacements");
  return f;
}

inline void write_flo(const FlowField& f, const std::string& path) { write_file_atomic(path, encode_flo(f)); }
inline FlowField read_flo(const std::string& path) { return decode_flo(read_file_bytes(path)); }

}  // namespace affordance
