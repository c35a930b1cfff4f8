#pragma once

// Pose vocabulary: k-medoids over a procrustes distance matrix.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <thread>
#include <vector>

#include "affordance/error.hpp"
#include "affordance/pose.hpp"

namespace affordance {

/// Dense symmetric n x n matrix, row-major.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

/// Rows are independent, so they are split across `threads` workers; the
/// result does not depend on the thread count.
inline DistanceMatrix pairwise_distances(std::span<const Pose> poses, unsigned threads = 1) {
  if (poses.empty()) throw Error(ErrorKind::empty_input, "no poses to compare");
  const std::size_t n = poses.size();
  DistanceMatrix d(n);
  auto fill_rows = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double v = procrustes_distance(poses[i], poses[j]);
        d(i, j) = v;
        d(j, i) = v;
      }
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (threads == 1) {
    fill_rows(0, n);
    return d;
  }
  // Interleave rows so the triangular workload stays balanced.
  std::vector<std::jthread> workers;
  for (unsigned t = 0; t < threads; ++t) {
    workers.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += threads) fill_rows(i, i + 1);
    });
  }
  workers.clear();  // joins
  return d;
}

struct KMedoidsOptions {
  std::size_t max_iterations = 100;
  /// After the assign/update alternation settles, try single medoid swaps
  /// (classic PAM SWAP) and re-run the alternation while any swap helps.
  bool swap_refinement = true;
};

struct KMedoidsResult {
  std::vector<std::size_t> medoids;     // sample index per class id
  std::vector<std::size_t> assignment;  // class id per sample
  double cost = 0.0;
  std::vector<double> cost_history;  // cost after every assignment pass
  std::size_t iterations = 0;
};

namespace detail {

inline double assign_to_nearest(const DistanceMatrix& d, std::span<const std::size_t> medoids,
                                std::vector<std::size_t>& assignment) {
  double cost = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < medoids.size(); ++k) {
      if (d(i, medoids[k]) < d(i, medoids[best])) best = k;
    }
    // A medoid always belongs to its own cluster, even when duplicates tie.
    for (std::size_t k = 0; k < medoids.size(); ++k) {
      if (medoids[k] == i) best = k;
    }
    assignment[i] = best;
    cost += d(i, medoids[best]);
  }
  return cost;
}

inline double total_cost(const DistanceMatrix& d, std::span<const std::size_t> medoids) {
  double cost = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (auto m : medoids) best = std::min(best, d(i, m));
    cost += best;
  }
  return cost;
}

/// Give every empty cluster the point currently farthest from its medoid.
inline bool repair_empty(const DistanceMatrix& d, std::vector<std::size_t>& medoids,
                         std::vector<std::size_t>& assignment) {
  bool repaired = false;
  for (std::size_t k = 0; k < medoids.size(); ++k) {
    if (std::find(assignment.begin(), assignment.end(), k) != assignment.end()) continue;
    std::size_t far = d.size();
    double far_d = -1.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const bool is_medoid = std::find(medoids.begin(), medoids.end(), i) != medoids.end();
      if (is_medoid) continue;
      if (d(i, medoids[assignment[i]]) > far_d) {
        far_d = d(i, medoids[assignment[i]]);
        far = i;
      }
    }
    if (far == d.size()) break;
    medoids[k] = far;
    assignment[far] = k;
    repaired = true;
  }
  return repaired;
}

}  // namespace detail

/// PAM-style k-medoids. Seeding: the seeded RNG picks the first medoid, the
/// rest are chosen greedily as the point farthest from all chosen medoids.
/// Then alternate nearest-medoid assignment with per-cluster medoid updates
/// until no medoid changes. The objective never increases.
inline KMedoidsResult k_medoids(const DistanceMatrix& d, std::size_t k, std::uint64_t seed,
                                const KMedoidsOptions& options = {}) {
  const std::size_t n = d.size();
  if (n == 0) throw Error(ErrorKind::empty_input, "empty distance matrix");
  if (k == 0 || k > n) {
    throw Error(ErrorKind::invalid_k, "K=" + std::to_string(k) + " must be in [1, " + std::to_string(n) + "]");
  }

  KMedoidsResult r;
  std::mt19937_64 rng(seed);
  r.medoids.push_back(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
  std::vector<double> nearest(n);
  for (std::size_t i = 0; i < n; ++i) nearest[i] = d(i, r.medoids[0]);
  while (r.medoids.size() < k) {
    std::size_t far = n;
    double far_d = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::find(r.medoids.begin(), r.medoids.end(), i) != r.medoids.end()) continue;
      if (nearest[i] > far_d) {
        far_d = nearest[i];
        far = i;
      }
    }
    r.medoids.push_back(far);
    for (std::size_t i = 0; i < n; ++i) nearest[i] = std::min(nearest[i], d(i, far));
  }

  r.assignment.assign(n, 0);
  auto alternate = [&] {
    for (;;) {
      r.cost = detail::assign_to_nearest(d, r.medoids, r.assignment);
      if (detail::repair_empty(d, r.medoids, r.assignment)) {
        r.cost = detail::assign_to_nearest(d, r.medoids, r.assignment);
      }
      r.cost_history.push_back(r.cost);
      if (++r.iterations > options.max_iterations) return;

      bool changed = false;
      for (std::size_t c = 0; c < k; ++c) {
        std::size_t best = r.medoids[c];
        double best_sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          if (r.assignment[j] == c) best_sum += d(best, j);
        }
        for (std::size_t i = 0; i < n; ++i) {
          if (r.assignment[i] != c || i == r.medoids[c]) continue;
          double sum = 0.0;
          for (std::size_t j = 0; j < n; ++j) {
            if (r.assignment[j] == c) sum += d(i, j);
          }
          if (sum < best_sum) {
            best_sum = sum;
            best = i;
          }
        }
        if (best != r.medoids[c]) {
          r.medoids[c] = best;
          changed = true;
        }
      }
      if (!changed) return;
    }
  };

  alternate();
  while (options.swap_refinement && r.iterations <= options.max_iterations) {
    double best_cost = r.cost;
    std::size_t best_slot = k, best_point = n;
    std::vector<std::size_t> trial = r.medoids;
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t i = 0; i < n; ++i) {
        if (std::find(r.medoids.begin(), r.medoids.end(), i) != r.medoids.end()) continue;
        trial[c] = i;
        const double cost = detail::total_cost(d, trial);
        // Relative margin keeps round-off from triggering endless swaps.
        if (cost < best_cost - 1e-12 * (1.0 + std::abs(best_cost))) {
          best_cost = cost;
          best_slot = c;
          best_point = i;
        }
      }
      trial[c] = r.medoids[c];
    }
    if (best_slot == k) break;
    r.medoids[best_slot] = best_point;
    alternate();
  }
  r.cost = detail::assign_to_nearest(d, r.medoids, r.assignment);
  return r;
}

/// K normalized medoid poses; class ids are indices into `centers`.
struct PoseVocabulary {
  std::vector<NormalizedPose> centers;
  std::vector<std::size_t> medoid_samples;  // training-time only
  std::vector<std::size_t> assignment;      // training-time only

  std::size_t size() const { return centers.size(); }
  const NormalizedPose& center(std::size_t class_id) const {
    if (class_id >= centers.size()) throw Error(ErrorKind::invalid_label, "class id out of range");
    return centers[class_id];
  }
};

inline PoseVocabulary build_vocabulary(std::span<const Pose> poses, std::size_t k, std::uint64_t seed,
                                       unsigned threads = 1, const KMedoidsOptions& options = {}) {
  const DistanceMatrix d = pairwise_distances(poses, threads);
  const KMedoidsResult km = k_medoids(d, k, seed, options);
  PoseVocabulary v;
  for (auto m : km.medoids) v.centers.push_back(normalize(poses[m]));
  v.medoid_samples = km.medoids;
  v.assignment = km.assignment;
  return v;
}

/// Nearest center under procrustes distance; ties go to the lowest class id.
inline std::size_t assign_class(const Pose& pose, const PoseVocabulary& vocab) {
  if (vocab.centers.empty()) throw Error(ErrorKind::empty_input, "empty vocabulary");
  const NormalizedPose p = normalize(pose);
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < vocab.centers.size(); ++k) {
    const double dist = procrustes_distance(std::span<const Point2>(p.joints()),
                                            std::span<const Point2>(vocab.centers[k].joints()));
    if (dist < best_d) {
      best_d = dist;
      best = k;
    }
  }
  return best;
}

}  // namespace affordance
