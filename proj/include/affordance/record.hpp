#pragma once

// AffordanceRecord: one (scene, query point, pose) row with provenance and
// annotation status, and the status state machine used by annotation.

#include <cstdint>
#include <optional>
#include <string>

#include "affordance/error.hpp"
#include "affordance/pose.hpp"
#include "affordance/scene_features.hpp"

namespace affordance {

enum class RecordSource { global, local, manual };
enum class RecordStatus { hypothesis, accepted, rejected };
enum class RecordLabel { positive, negative };

inline const char* to_string(RecordSource s) {
  switch (s) {
    case RecordSource::global: return "global";
    case RecordSource::local: return "local";
    case RecordSource::manual: return "manual";
  }
  return "?";
}
inline const char* to_string(RecordStatus s) {
  switch (s) {
    case RecordStatus::hypothesis: return "hypothesis";
    case RecordStatus::accepted: return "accepted";
    case RecordStatus::rejected: return "rejected";
  }
  return "?";
}
inline const char* to_string(RecordLabel l) { return l == RecordLabel::positive ? "pos" : "neg"; }

inline std::optional<RecordSource> parse_source(std::string_view s) {
  if (s == "global") return RecordSource::global;
  if (s == "local") return RecordSource::local;
  if (s == "manual") return RecordSource::manual;
  return std::nullopt;
}
inline std::optional<RecordStatus> parse_status(std::string_view s) {
  if (s == "hypothesis") return RecordStatus::hypothesis;
  if (s == "accepted") return RecordStatus::accepted;
  if (s == "rejected") return RecordStatus::rejected;
  return std::nullopt;
}
inline std::optional<RecordLabel> parse_label(std::string_view s) {
  if (s == "pos") return RecordLabel::positive;
  if (s == "neg") return RecordLabel::negative;
  return std::nullopt;
}

/// Uniform scale about the pose's bbox center, then translation.
struct Adjustment {
  double scale = 1.0;
  Point2 translate{};
  friend bool operator==(const Adjustment&, const Adjustment&) = default;
};

inline Point2 apply_adjustment(Point2 p, Point2 center, const Adjustment& a) {
  return center + a.scale * (p - center) + a.translate;
}

inline Pose apply_adjustment(const Pose& pose, const Adjustment& a) {
  if (!(a.scale > 0.0) || !std::isfinite(a.scale)) throw Error(ErrorKind::invalid_scale, "adjust scale must be positive");
  return scale_about(pose, a.scale, pose.bbox().center(), a.translate);
}

struct AffordanceRecord {
  std::uint64_t id = 0;
  std::string scene;
  std::string show;
  std::string image;  // path of the empty-scene frame
  int frame_width = 0;
  int frame_height = 0;
  Point2 anchor{};
  Pose pose;
  std::optional<std::size_t> class_id;
  RecordSource source = RecordSource::manual;
  RecordStatus status = RecordStatus::hypothesis;
  RecordLabel label = RecordLabel::positive;
  bool out_of_frame = false;
  std::optional<Adjustment> adjustment;  // last applied manual adjustment
  std::optional<SceneFeatures> features;

  friend bool operator==(const AffordanceRecord& a, const AffordanceRecord& b) {
    auto same_features = [](const std::optional<SceneFeatures>& x, const std::optional<SceneFeatures>& y) {
      if (x.has_value() != y.has_value()) return false;
      if (!x) return true;
      return x->full == y->full && x->half == y->half && x->whole == y->whole;
    };
    return a.id == b.id && a.scene == b.scene && a.show == b.show && a.image == b.image &&
           a.frame_width == b.frame_width && a.frame_height == b.frame_height && a.anchor == b.anchor &&
           a.pose == b.pose && a.class_id == b.class_id && a.source == b.source && a.status == b.status &&
           a.label == b.label && a.out_of_frame == b.out_of_frame && a.adjustment == b.adjustment &&
           same_features(a.features, b.features);
  }
};

inline bool pose_in_frame(const Pose& pose, int width, int height) {
  for (const auto& j : pose.joints()) {
    if (j.x < 0.0 || j.y < 0.0 || j.x > width || j.y > height) return false;
  }
  return true;
}

inline void require_status(const AffordanceRecord& r, std::initializer_list<RecordStatus> allowed, const char* action) {
  for (auto s : allowed) {
    if (r.status == s) return;
  }
  throw Error(ErrorKind::conflict,
              std::string("cannot ") + action + " record " + std::to_string(r.id) + " in status " + to_string(r.status));
}

inline void accept(AffordanceRecord& r) {
  require_status(r, {RecordStatus::hypothesis}, "accept");
  r.status = RecordStatus::accepted;
}

inline void reject(AffordanceRecord& r) {
  require_status(r, {RecordStatus::hypothesis}, "reject");
  r.status = RecordStatus::rejected;
}

/// Replace the joints with an annotator-adjusted list. The anchor follows the
/// same transform; the record ends up accepted.
inline void adjust(AffordanceRecord& r, const Joints& joints, const Adjustment& a) {
  require_status(r, {RecordStatus::hypothesis, RecordStatus::accepted}, "adjust");
  if (!(a.scale > 0.0) || !std::isfinite(a.scale) || !std::isfinite(a.translate.x) || !std::isfinite(a.translate.y)) {
    throw Error(ErrorKind::invalid_scale, "adjust scale must be positive and finite");
  }
  const Pose next(joints);
  r.anchor = apply_adjustment(r.anchor, r.pose.bbox().center(), a);
  r.pose = next;
  r.adjustment = a;
  r.out_of_frame = r.frame_width > 0 && !pose_in_frame(next, r.frame_width, r.frame_height);
  r.status = RecordStatus::accepted;
}

}  // namespace affordance
