#pragma once

// Dataset and vocabulary text files, leave-one-show-out splits, and
// synthetic negative poses.
//
// Dataset file: one header line
//
//   #affordance-dataset v1 joints=<16 hex> featurizer_seed=<u64>
//
// then one tab-separated record per line:
//
//   1  id            decimal u64, unique
//   2  scene         token (no tabs or newlines)
//   3  show          token
//   4  image         token, path of the empty-scene frame
//   5  frame         <width>x<height>, 0x0 when unknown
//   6  anchor        x,y
//   7  joints        34 comma-separated numbers, x0,y0,x1,y1,...
//   8  class         decimal class id, or -
//   9  source        global | local | manual
//   10 status        hypothesis | accepted | rejected
//   11 label         pos | neg
//   12 out_of_frame  0 | 1
//   13 adjustment    scale,tx,ty of the last manual adjustment, or -
//   14 features      <dim>:<base64 of little-endian f64, full then half then whole>, or -
//
// Numbers use the shortest decimal form that round-trips, so reading and
// re-writing a file reproduces it byte for byte.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "affordance/clustering.hpp"
#include "affordance/error.hpp"
#include "affordance/fileio.hpp"
#include "affordance/hash.hpp"
#include "affordance/record.hpp"
#include "affordance/textio.hpp"

namespace affordance {

inline constexpr std::string_view kDatasetMagic = "#affordance-dataset";
inline constexpr std::string_view kVocabularyMagic = "#affordance-vocabulary";

struct Dataset {
  std::uint64_t featurizer_seed = 0;
  std::vector<AffordanceRecord> records;
};

namespace detail {

inline void check_token(const std::string& s, const char* field) {
  if (s.empty() || s.find_first_of("\t\n\r") != std::string::npos) {
    throw Error(ErrorKind::format, std::string(field) + " must be non-empty and free of tabs and newlines");
  }
}

inline std::string join_numbers(std::span<const double> v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += text::format_double(v[i]);
  }
  return out;
}

inline std::vector<double> parse_numbers(std::string_view s, std::size_t expected, std::size_t line, const char* field) {
  const auto parts = text::split(s, ',');
  if (parts.size() != expected) {
    throw FormatError(line, std::string(field) + ": expected " + std::to_string(expected) + " numbers");
  }
  std::vector<double> out(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    if (!text::parse_double(parts[i], out[i]) || !std::isfinite(out[i])) {
      throw FormatError(line, std::string(field) + ": bad number '" + std::string(parts[i]) + "'");
    }
  }
  return out;
}

inline std::vector<double> joint_values(const Joints& j) {
  std::vector<double> v;
  v.reserve(2 * kNumJoints);
  for (const auto& p : j) {
    v.push_back(p.x);
    v.push_back(p.y);
  }
  return v;
}

inline Joints joints_from(std::span<const double> v) {
  Joints j;
  for (std::size_t i = 0; i < kNumJoints; ++i) j[i] = {v[2 * i], v[2 * i + 1]};
  return j;
}

inline std::string encode_features(const SceneFeatures& f) {
  static_assert(std::endian::native == std::endian::little);
  const auto dim = f.full.size();
  if (f.half.size() != dim || f.whole.size() != dim) throw Error(ErrorKind::shape, "inconsistent feature dimensions");
  std::string bytes;
  bytes.reserve(static_cast<std::size_t>(3 * dim) * 8);
  for (const nn::Vec* v : {&f.full, &f.half, &f.whole}) {
    bytes.append(reinterpret_cast<const char*>(v->data()), static_cast<std::size_t>(dim) * 8);
  }
  return std::to_string(dim) + ":" + text::base64_encode(bytes);
}

inline SceneFeatures decode_features(std::string_view s, std::size_t line) {
  const auto colon = s.find(':');
  std::size_t dim = 0;
  std::string bytes;
  if (colon == std::string_view::npos || !text::parse_int(s.substr(0, colon), dim) || dim == 0 ||
      !text::base64_decode(s.substr(colon + 1), bytes) || bytes.size() != 3 * dim * 8) {
    throw FormatError(line, "features: malformed blob");
  }
  SceneFeatures f{nn::Vec(dim), nn::Vec(dim), nn::Vec(dim)};
  std::size_t pos = 0;
  for (nn::Vec* v : {&f.full, &f.half, &f.whole}) {
    std::memcpy(v->data(), bytes.data() + pos, dim * 8);
    pos += dim * 8;
  }
  if (!f.full.allFinite() || !f.half.allFinite() || !f.whole.allFinite()) {
    throw FormatError(line, "features: non-finite value");
  }
  return f;
}

}  // namespace detail

inline std::string dataset_header(std::uint64_t featurizer_seed) {
  return std::string(kDatasetMagic) + " v1 joints=" + hex64(joint_schema_hash()) +
         " featurizer_seed=" + std::to_string(featurizer_seed);
}

inline std::string serialize_record(const AffordanceRecord& r) {
  detail::check_token(r.scene, "scene");
  detail::check_token(r.show, "show");
  detail::check_token(r.image, "image");
  if (r.frame_width < 0 || r.frame_height < 0) throw Error(ErrorKind::format, "negative frame size");
  const Pose checked(r.pose.joints());
  std::string line = std::to_string(r.id);
  auto field = [&](const std::string& s) {
    line += '\t';
    line += s;
  };
  field(r.scene);
  field(r.show);
  field(r.image);
  field(std::to_string(r.frame_width) + "x" + std::to_string(r.frame_height));
  const double anchor[] = {r.anchor.x, r.anchor.y};
  field(detail::join_numbers(anchor));
  field(detail::join_numbers(detail::joint_values(checked.joints())));
  field(r.class_id ? std::to_string(*r.class_id) : "-");
  field(to_string(r.source));
  field(to_string(r.status));
  field(to_string(r.label));
  field(r.out_of_frame ? "1" : "0");
  if (r.adjustment) {
    const double adj[] = {r.adjustment->scale, r.adjustment->translate.x, r.adjustment->translate.y};
    field(detail::join_numbers(adj));
  } else {
    field("-");
  }
  field(r.features ? detail::encode_features(*r.features) : "-");
  return line;
}

inline AffordanceRecord parse_record(std::string_view line, std::size_t line_no) {
  const auto f = text::split(line, '\t');
  if (f.size() != 14) throw FormatError(line_no, "expected 14 tab-separated fields, got " + std::to_string(f.size()));
  AffordanceRecord r;
  if (!text::parse_int(f[0], r.id)) throw FormatError(line_no, "id: not an unsigned integer");
  r.scene = std::string(f[1]);
  r.show = std::string(f[2]);
  r.image = std::string(f[3]);
  if (r.scene.empty() || r.show.empty() || r.image.empty()) throw FormatError(line_no, "empty scene, show or image");
  {
    const auto x = f[4].find('x');
    if (x == std::string_view::npos || !text::parse_int(f[4].substr(0, x), r.frame_width) ||
        !text::parse_int(f[4].substr(x + 1), r.frame_height) || r.frame_width < 0 || r.frame_height < 0) {
      throw FormatError(line_no, "frame: expected <width>x<height>");
    }
  }
  const auto anchor = detail::parse_numbers(f[5], 2, line_no, "anchor");
  r.anchor = {anchor[0], anchor[1]};
  const auto joints = detail::parse_numbers(f[6], 2 * kNumJoints, line_no, "joints");
  try {
    r.pose = Pose(detail::joints_from(joints));
  } catch (const Error& e) {
    throw FormatError(line_no, std::string("joints: ") + e.what());
  }
  if (f[7] != "-") {
    std::size_t c = 0;
    if (!text::parse_int(f[7], c)) throw FormatError(line_no, "class: not an id");
    r.class_id = c;
  }
  const auto source = parse_source(f[8]);
  const auto status = parse_status(f[9]);
  const auto label = parse_label(f[10]);
  if (!source) throw FormatError(line_no, "source: unknown value '" + std::string(f[8]) + "'");
  if (!status) throw FormatError(line_no, "status: unknown value '" + std::string(f[9]) + "'");
  if (!label) throw FormatError(line_no, "label: unknown value '" + std::string(f[10]) + "'");
  r.source = *source;
  r.status = *status;
  r.label = *label;
  if (f[11] != "0" && f[11] != "1") throw FormatError(line_no, "out_of_frame: expected 0 or 1");
  r.out_of_frame = f[11] == "1";
  if (f[12] != "-") {
    const auto a = detail::parse_numbers(f[12], 3, line_no, "adjustment");
    r.adjustment = Adjustment{a[0], {a[1], a[2]}};
  }
  if (f[13] != "-") r.features = detail::decode_features(f[13], line_no);
  return r;
}

inline std::string serialize_dataset(const Dataset& ds) {
  std::string out = dataset_header(ds.featurizer_seed);
  out += '\n';
  std::set<std::uint64_t> ids;
  for (const auto& r : ds.records) {
    if (!ids.insert(r.id).second) throw Error(ErrorKind::format, "duplicate record id " + std::to_string(r.id));
    out += serialize_record(r);
    out += '\n';
  }
  return out;
}

inline Dataset parse_dataset(std::string_view text) {
  Dataset ds;
  std::size_t line_no = 0, start = 0;
  std::set<std::uint64_t> ids;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line_no == 1) {
      const auto parts = text::split(line, ' ');
      if (parts.size() != 4 || parts[0] != kDatasetMagic) throw FormatError(1, "missing dataset header");
      if (parts[1] != "v1") throw FormatError(1, "unsupported dataset version " + std::string(parts[1]));
      if (parts[2] != "joints=" + hex64(joint_schema_hash())) throw FormatError(1, "joint schema does not match");
      if (parts[3].substr(0, 16) != "featurizer_seed=" || !text::parse_int(parts[3].substr(16), ds.featurizer_seed)) {
        throw FormatError(1, "bad featurizer seed");
      }
      continue;
    }
    auto r = parse_record(line, line_no);
    if (!ids.insert(r.id).second) throw FormatError(line_no, "duplicate record id " + std::to_string(r.id));
    ds.records.push_back(std::move(r));
  }
  if (line_no == 0) throw FormatError(1, "empty file");
  return ds;
}

/// Exclusive write through `<path>.lock`, then an atomic replace.
inline void write_dataset(const Dataset& ds, const std::string& path) {
  const std::string bytes = serialize_dataset(ds);
  FileLock lock(path);
  write_file_atomic(path, bytes);
}

inline Dataset read_dataset(const std::string& path) { return parse_dataset(read_file_bytes(path)); }

// ---------------------------------------------------------------------------
// Vocabulary: K canonical poses, one per line after the header.
//
//   #affordance-vocabulary v1 joints=<16 hex> k=<K>
//   <class id>\t<34 comma-separated numbers>

inline std::string serialize_vocabulary(const PoseVocabulary& v) {
  std::string out = std::string(kVocabularyMagic) + " v1 joints=" + hex64(joint_schema_hash()) +
                    " k=" + std::to_string(v.size()) + "\n";
  for (std::size_t k = 0; k < v.size(); ++k) {
    out += std::to_string(k) + "\t" + detail::join_numbers(detail::joint_values(v.centers[k].joints())) + "\n";
  }
  return out;
}

inline PoseVocabulary parse_vocabulary(std::string_view text) {
  const auto lines = text::split(text, '\n');
  if (lines.empty()) throw FormatError(1, "empty vocabulary");
  const auto header = text::split(lines[0], ' ');
  std::size_t k = 0;
  if (header.size() != 4 || header[0] != kVocabularyMagic || header[1] != "v1") {
    throw FormatError(1, "missing vocabulary header");
  }
  if (header[2] != "joints=" + hex64(joint_schema_hash())) throw FormatError(1, "joint schema does not match");
  if (header[3].substr(0, 2) != "k=" || !text::parse_int(header[3].substr(2), k) || k == 0) {
    throw FormatError(1, "bad class count");
  }
  if (lines.size() != k + 2 || !lines.back().empty()) throw FormatError(lines.size(), "expected " + std::to_string(k) + " classes");
  PoseVocabulary v;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t line_no = i + 2;
    const auto f = text::split(lines[i + 1], '\t');
    std::size_t id = 0;
    if (f.size() != 2 || !text::parse_int(f[0], id) || id != i) throw FormatError(line_no, "expected class " + std::to_string(i));
    const auto vals = detail::parse_numbers(f[1], 2 * kNumJoints, line_no, "joints");
    try {
      v.centers.push_back(NormalizedPose::from_canonical(detail::joints_from(vals)));
    } catch (const Error& e) {
      throw FormatError(line_no, e.what());
    }
  }
  return v;
}

inline void write_vocabulary(const PoseVocabulary& v, const std::string& path) {
  write_file_atomic(path, serialize_vocabulary(v));
}
inline PoseVocabulary read_vocabulary(const std::string& path) { return parse_vocabulary(read_file_bytes(path)); }

// ---------------------------------------------------------------------------
// Splits

struct Split {
  std::vector<AffordanceRecord> train;
  std::vector<AffordanceRecord> test;
};

/// Leave-one-show-out: every record of `test_show` goes to test, the rest to train.
inline Split split_by_show(std::span<const AffordanceRecord> records, const std::string& test_show) {
  Split s;
  for (const auto& r : records) (r.show == test_show ? s.test : s.train).push_back(r);
  if (s.test.empty()) throw Error(ErrorKind::invalid_split, "no records from show '" + test_show + "'");
  return s;
}

inline std::map<std::string, std::size_t> count_by_show(std::span<const AffordanceRecord> records) {
  std::map<std::string, std::size_t> out;
  for (const auto& r : records) ++out[r.show];
  return out;
}

// ---------------------------------------------------------------------------
// Negative poses

/// Negatives per positive in the reference test set (9572 / 3872).
inline constexpr double kDefaultNegativeRatio = 9572.0 / 3872.0;

enum class Perturbation { extreme_scale, far_anchor, vertical_flip, class_swap };

inline const char* to_string(Perturbation p) {
  switch (p) {
    case Perturbation::extreme_scale: return "extreme_scale";
    case Perturbation::far_anchor: return "far_anchor";
    case Perturbation::vertical_flip: return "vertical_flip";
    case Perturbation::class_swap: return "class_swap";
  }
  return "?";
}

inline std::size_t negative_count(std::size_t positives, double per_positive) {
  if (!(per_positive >= 0.0) || !std::isfinite(per_positive)) {
    throw Error(ErrorKind::usage, "negative ratio must be a finite value >= 0");
  }
  return static_cast<std::size_t>(std::llround(per_positive * static_cast<double>(positives)));
}

inline Pose perturb_pose(const AffordanceRecord& src, Perturbation kind, const PoseVocabulary& vocab,
                         std::mt19937_64& rng) {
  const Pose& p = src.pose;
  const BBox b = p.bbox();
  switch (kind) {
    case Perturbation::extreme_scale: {
      const double s = std::bernoulli_distribution(0.5)(rng) ? 0.2 : 5.0;
      return scale_about(p, s, src.anchor);
    }
    case Perturbation::far_anchor: {
      // Keep the query anchor; move the pose to a point at least half the
      // frame extent away from it.
      const double w = src.frame_width > 0 ? src.frame_width : 10.0 * b.width();
      const double h = src.frame_height > 0 ? src.frame_height : 10.0 * b.height();
      const double min_d = 0.5 * std::max(w, h);
      std::uniform_real_distribution<double> ux(0.0, w), uy(0.0, h);
      Point2 target{w, h};
      double best = -1.0;
      for (int attempt = 0; attempt < 64; ++attempt) {
        const Point2 q{ux(rng), uy(rng)};
        const double d = std::hypot(q.x - src.anchor.x, q.y - src.anchor.y);
        if (d > best) {
          best = d;
          target = q;
        }
        if (d >= min_d) break;
      }
      if (best < min_d) {
        for (Point2 corner : {Point2{0, 0}, Point2{w, 0}, Point2{0, h}, Point2{w, h}}) {
          const double d = std::hypot(corner.x - src.anchor.x, corner.y - src.anchor.y);
          if (d > best) {
            best = d;
            target = corner;
          }
        }
      }
      return translate(p, target - b.center());
    }
    case Perturbation::vertical_flip: {
      Joints j;
      const double cy = b.center().y;
      for (std::size_t i = 0; i < kNumJoints; ++i) j[i] = {p[i].x, 2.0 * cy - p[i].y};
      return Pose(j);
    }
    case Perturbation::class_swap: {
      const std::size_t own = assign_class(p, vocab);
      std::size_t other = std::uniform_int_distribution<std::size_t>(0, vocab.size() - 2)(rng);
      if (other >= own) ++other;
      return decode(encode(p, vocab.center(own), src.anchor), vocab.center(other), src.anchor);
    }
  }
  return p;
}

struct NegativeOptions {
  double per_positive = kDefaultNegativeRatio;
  std::uint64_t first_id = 0;  // ids are first_id, first_id + 1, ...
};

/// llround(per_positive * |positives|) implausible poses in the positives'
/// scenes. Sources are visited in seeded shuffled rounds; each negative uses
/// one perturbation family drawn uniformly.
inline std::vector<AffordanceRecord> synthesize_negatives(std::span<const AffordanceRecord> positives,
                                                          const PoseVocabulary& vocab, std::uint64_t seed,
                                                          const NegativeOptions& options = {}) {
  const std::size_t count = negative_count(positives.size(), options.per_positive);
  std::vector<AffordanceRecord> out;
  if (count == 0 || positives.empty()) return out;
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(positives.size());
  const int families = vocab.size() >= 2 ? 4 : 3;
  for (std::size_t i = 0; i < count; ++i) {
    if (i % positives.size() == 0) {
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
    }
    const AffordanceRecord& src = positives[order[i % positives.size()]];
    const auto kind = static_cast<Perturbation>(std::uniform_int_distribution<int>(0, families - 1)(rng));
    Pose p = perturb_pose(src, kind, vocab, rng);
    if (joint_distance(p, src.pose) == 0.0) p = scale_about(src.pose, 5.0, src.anchor);
    AffordanceRecord n = src;
    n.id = options.first_id + i;
    n.pose = p;
    n.label = RecordLabel::negative;
    n.class_id.reset();
    n.adjustment.reset();
    n.out_of_frame = n.frame_width > 0 && !pose_in_frame(p, n.frame_width, n.frame_height);
    out.push_back(std::move(n));
  }
  return out;
}

}  // namespace affordance
