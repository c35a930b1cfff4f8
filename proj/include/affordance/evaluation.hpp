#pragma once

// Evaluation harness: top-k classification accuracy and the precision-recall
// sweep over plausibility distances.

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "affordance/error.hpp"
#include "affordance/model.hpp"
#include "affordance/record.hpp"
#include "affordance/textio.hpp"

namespace affordance {

/// accuracy@k for k = 1..k_max: fraction of samples whose true class is among
/// the k most probable, ranked with ties broken by class id.
inline std::vector<double> topk_accuracy(std::span<const Vec> probs, std::span<const std::size_t> truth,
                                         std::size_t k_max = 5) {
  if (probs.empty()) throw Error(ErrorKind::empty_input, "empty test set");
  if (probs.size() != truth.size()) throw Error(ErrorKind::shape, "probabilities and labels differ in length");
  std::vector<double> hits(k_max, 0.0);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const auto order = rank_classes(probs[i]);
    const auto pos = static_cast<std::size_t>(std::find(order.begin(), order.end(), truth[i]) - order.begin());
    if (pos == order.size()) throw Error(ErrorKind::invalid_label, "true class outside the classifier's range");
    for (std::size_t k = pos; k < k_max; ++k) hits[k] += 1.0;
  }
  for (auto& h : hits) h /= static_cast<double>(probs.size());
  return hits;
}

/// Records need cached features and a class id.
inline std::vector<double> evaluate_topk(const ClassifierModel& classifier, std::span<const AffordanceRecord> test,
                                         std::size_t k_max = 5) {
  std::vector<Vec> probs;
  std::vector<std::size_t> truth;
  for (const auto& r : test) {
    if (!r.features || !r.class_id) {
      throw Error(ErrorKind::state, "record " + std::to_string(r.id) + " lacks features or a class");
    }
    probs.push_back(classify(classifier, *r.features));
    truth.push_back(*r.class_id);
  }
  return topk_accuracy(probs, truth, k_max);
}

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

struct EvalReport {
  std::vector<double> topk;  // accuracy@1..k_max; empty when not evaluated
  std::vector<PrPoint> pr;   // one point per distinct score, loosening threshold
  double average_precision = 0.0;
  std::size_t positives = 0;
  std::size_t negatives = 0;

  double prevalence() const { return double(positives) / double(positives + negatives); }
};

/// Lower distance means more plausible: at threshold t a record is
/// predicted positive when its distance is <= t. AP is the step integral
/// sum (R_i - R_{i-1}) * P_i over the distinct thresholds.
inline EvalReport evaluate_pr(std::span<const double> distances, std::span<const bool> positive) {
  if (distances.size() != positive.size()) throw Error(ErrorKind::shape, "scores and labels differ in length");
  EvalReport rep;
  rep.positives = static_cast<std::size_t>(std::count(positive.begin(), positive.end(), true));
  rep.negatives = positive.size() - rep.positives;
  if (rep.positives == 0 || rep.negatives == 0) {
    throw Error(ErrorKind::undefined_precision, "labels contain a single class");
  }
  for (double d : distances) {
    if (std::isnan(d)) throw Error(ErrorKind::invalid_score, "NaN distance");
  }
  std::vector<std::size_t> order(distances.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return distances[a] < distances[b]; });
  double tp = 0, fp = 0, prev_recall = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (positive[order[i]] ? tp : fp) += 1;
    if (i + 1 < order.size() && distances[order[i + 1]] == distances[order[i]]) continue;
    const PrPoint p{distances[order[i]], tp / (tp + fp), tp / double(rep.positives)};
    rep.average_precision += (p.recall - prev_recall) * p.precision;
    prev_recall = p.recall;
    rep.pr.push_back(p);
  }
  return rep;
}

inline std::string format_report_table(const EvalReport& r) {
  std::string out = "metric        value\n";
  auto row = [&](const std::string& name, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-13s %.4f\n", name.c_str(), v);
    out += buf;
  };
  for (std::size_t k = 0; k < r.topk.size(); ++k) row("top-" + std::to_string(k + 1), r.topk[k]);
  row("AP", r.average_precision);
  row("prevalence", r.prevalence());
  out += "positives     " + std::to_string(r.positives) + "\n";
  out += "negatives     " + std::to_string(r.negatives) + "\n";
  return out;
}

inline std::string pr_csv(const EvalReport& r) {
  std::string out = "threshold,precision,recall\n";
  for (const auto& p : r.pr) {
    out += text::format_double(p.threshold) + "," + text::format_double(p.precision) + "," +
           text::format_double(p.recall) + "\n";
  }
  return out;
}

}  // namespace affordance
