#pragma once

// Grayscale raster with intensities in [0, 1]. Reads binary netpbm (P5 gray,
// P6 color, converted with Rec. 601 luma) and writes P5.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>
#include <vector>

#include "affordance/error.hpp"
#include "affordance/fileio.hpp"

namespace affordance {

class Image {
 public:
  Image() = default;
  Image(int width, int height, double fill = 0.0) : width_(width), height_(height) {
    if (width <= 0 || height <= 0) throw Error(ErrorKind::shape, "image dimensions must be positive");
    pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  double operator()(int x, int y) const { return pixels_[index(x, y)]; }
  double& operator()(int x, int y) { return pixels_[index(x, y)]; }
  const std::vector<double>& pixels() const { return pixels_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }
  int width_ = 0;
  int height_ = 0;
  std::vector<double> pixels_;
};

namespace detail {

inline int netpbm_int(const std::string& bytes, std::size_t& pos, const std::string& path) {
  for (;;) {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (pos < bytes.size() && bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  long v = 0;
  const std::size_t start = pos;
  while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
    v = v * 10 + (bytes[pos++] - '0');
    if (v > 1 << 24) throw Error(ErrorKind::io, path + ": netpbm header value too large");
  }
  if (pos == start) throw Error(ErrorKind::io, path + ": malformed netpbm header");
  return static_cast<int>(v);
}

}  // namespace detail

inline Image read_image(const std::string& path) {
  const std::string bytes = read_file_bytes(path);
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw Error(ErrorKind::io, path + ": not a binary PGM/PPM file");
  }
  const bool color = bytes[1] == '6';
  std::size_t pos = 2;
  const int w = detail::netpbm_int(bytes, pos, path);
  const int h = detail::netpbm_int(bytes, pos, path);
  const int maxval = detail::netpbm_int(bytes, pos, path);
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) throw Error(ErrorKind::io, path + ": bad netpbm header");
  ++pos;  // single whitespace before the raster
  const std::size_t channels = color ? 3 : 1;
  const std::size_t sample_bytes = maxval > 255 ? 2 : 1;
  const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * channels * sample_bytes;
  if (bytes.size() < pos + need) throw Error(ErrorKind::io, path + ": truncated raster");
  auto sample = [&](std::size_t i) {
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + pos + i * sample_bytes;
    const int v = sample_bytes == 2 ? (p[0] << 8) | p[1] : p[0];
    return static_cast<double>(v) / maxval;
  };
  Image img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = (static_cast<std::size_t>(y) * w + x) * channels;
      img(x, y) = color ? 0.299 * sample(i) + 0.587 * sample(i + 1) + 0.114 * sample(i + 2) : sample(i);
    }
  }
  return img;
}

/// 8-bit P5.
inline std::string encode_pgm(const Image& img) {
  std::string out = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  for (double v : img.pixels()) out += static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  return out;
}

inline void write_pgm(const Image& img, const std::string& path) { write_file_atomic(path, encode_pgm(img)); }

}  // namespace affordance
