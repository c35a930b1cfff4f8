#pragma once

// JSON views of records, poses and reports, shared by the CLI and the HTTP API.

#include <json.hpp>

#include "affordance/evaluation.hpp"
#include "affordance/model.hpp"
#include "affordance/record.hpp"

namespace affordance::tool {

using json = nlohmann::json;

inline json point_json(Point2 p) { return json::array({p.x, p.y}); }

inline json joints_json(const Joints& j) {
  json out = json::array();
  for (const auto& p : j) out.push_back(point_json(p));
  return out;
}

inline Point2 point_from_json(const json& v, const char* field) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw Error(ErrorKind::bad_request, std::string(field) + " must be [x, y]");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

/// 17 [x, y] pairs in joint order.
inline Joints joints_from_json(const json& v) {
  if (!v.is_array() || v.size() != kNumJoints) {
    throw Error(ErrorKind::bad_request, "joints must be an array of " + std::to_string(kNumJoints) + " [x, y] pairs");
  }
  Joints j;
  for (std::size_t i = 0; i < kNumJoints; ++i) j[i] = point_from_json(v[i], "joint");
  return j;
}

inline json record_json(const AffordanceRecord& r) {
  json out = {
      {"id", r.id},
      {"scene", r.scene},
      {"show", r.show},
      {"image", r.image},
      {"width", r.frame_width},
      {"height", r.frame_height},
      {"anchor", point_json(r.anchor)},
      {"joints", joints_json(r.pose.joints())},
      {"class_id", r.class_id ? json(*r.class_id) : json(nullptr)},
      {"source", to_string(r.source)},
      {"status", to_string(r.status)},
      {"label", to_string(r.label)},
      {"out_of_frame", r.out_of_frame},
      {"has_features", r.features.has_value()},
  };
  if (r.adjustment) {
    out["adjustment"] = {{"scale", r.adjustment->scale}, {"translate", point_json(r.adjustment->translate)}};
  } else {
    out["adjustment"] = nullptr;
  }
  return out;
}

inline json generated_json(const GeneratedPose& g) {
  return {{"class_id", g.class_id}, {"s_h", g.sd.s_h}, {"s_w", g.sd.s_w}, {"joints", joints_json(g.pose.joints())}};
}

inline json report_json(const EvalReport& r) {
  json pr = json::array();
  for (const auto& p : r.pr) pr.push_back({{"threshold", p.threshold}, {"precision", p.precision}, {"recall", p.recall}});
  return {{"topk", r.topk},
          {"average_precision", r.average_precision},
          {"prevalence", r.prevalence()},
          {"positives", r.positives},
          {"negatives", r.negatives},
          {"pr", pr}};
}

}  // namespace affordance::tool
