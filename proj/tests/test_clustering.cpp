#include <gtest/gtest.h>

#include <random>

#include "affordance/clustering.hpp"
#include "test_util.hpp"

using namespace affordance;
using affordance::testing::random_pose;

namespace {

DistanceMatrix euclidean_matrix(const std::vector<Point2>& pts) {
  DistanceMatrix d(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = 0; j < pts.size(); ++j) {
      d(i, j) = std::hypot(pts[i].x - pts[j].x, pts[i].y - pts[j].y);
    }
  }
  return d;
}

// Exhaustive optimum over every K-subset of medoids.
std::pair<double, std::vector<std::size_t>> brute_force_optimum(const DistanceMatrix& d, std::size_t k) {
  const std::size_t n = d.size();
  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + static_cast<long>(k), true);
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> best_set;
  do {
    std::vector<std::size_t> set;
    for (std::size_t i = 0; i < n; ++i) {
      if (pick[i]) set.push_back(i);
    }
    double cost = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double m = std::numeric_limits<double>::infinity();
      for (auto s : set) m = std::min(m, d(i, s));
      cost += m;
    }
    if (cost < best) {
      best = cost;
      best_set = set;
    }
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return {best, best_set};
}

std::vector<Point2> separated_clusters(std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, 0.3);
  const Point2 centers[] = {{0, 0}, {20, 0}, {0, 20}};
  std::vector<Point2> pts;
  for (const auto& c : centers) {
    for (int i = 0; i < 4; ++i) pts.push_back({c.x + noise(rng), c.y + noise(rng)});
  }
  return pts;
}

}  // namespace

TEST(PairwiseDistances, SingleAndDuplicate) {
  std::mt19937_64 rng(1);
  const Pose p = random_pose(rng);
  const std::vector<Pose> one{p};
  const auto d1 = pairwise_distances(one);
  ASSERT_EQ(d1.size(), 1u);
  EXPECT_EQ(d1(0, 0), 0.0);
  const std::vector<Pose> dup{p, random_pose(rng), p};
  const auto d = pairwise_distances(dup);
  EXPECT_EQ(d(0, 2), 0.0);
  EXPECT_GT(d(0, 1), 0.0);
}

TEST(PairwiseDistances, MatchesDirectRecomputation) {
  std::mt19937_64 rng(2);
  std::vector<Pose> poses;
  for (int i = 0; i < 5; ++i) poses.push_back(random_pose(rng));
  for (unsigned threads : {1u, 3u}) {
    const auto d = pairwise_distances(poses, threads);
    for (std::size_t i = 0; i < 5; ++i) {
      EXPECT_EQ(d(i, i), 0.0);
      for (std::size_t j = 0; j < 5; ++j) {
        if (i != j) {
          EXPECT_EQ(d(i, j), procrustes_distance(poses[i], poses[j]));
        }
        EXPECT_EQ(d(i, j), d(j, i));
      }
    }
  }
}

TEST(PairwiseDistances, EmptyInputThrows) {
  try {
    pairwise_distances(std::vector<Pose>{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::empty_input);
  }
}

TEST(KMedoids, InvalidK) {
  const DistanceMatrix d = euclidean_matrix({{0, 0}, {1, 1}});
  try {
    k_medoids(d, 3, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_k);
  }
  EXPECT_THROW(k_medoids(d, 0, 0), Error);
}

TEST(KMedoids, KEqualsNIsZeroCost) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 10);
  std::vector<Point2> pts;
  for (int i = 0; i < 7; ++i) pts.push_back({u(rng), u(rng)});
  const auto r = k_medoids(euclidean_matrix(pts), 7, 5);
  EXPECT_EQ(r.cost, 0.0);
  for (std::size_t i = 0; i < 7; ++i) EXPECT_EQ(r.medoids[r.assignment[i]], i);
}

TEST(KMedoids, RecoversExhaustiveOptimumOnSeparatedClusters) {
  std::mt19937_64 rng(4);
  for (int inst = 0; inst < 5; ++inst) {
    const auto pts = separated_clusters(rng);
    const auto d = euclidean_matrix(pts);
    const auto [opt, opt_set] = brute_force_optimum(d, 3);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto r = k_medoids(d, 3, seed);
      auto got = r.medoids;
      std::sort(got.begin(), got.end());
      EXPECT_EQ(got, opt_set);
      EXPECT_NEAR(r.cost, opt, 1e-12);
    }
  }
}

TEST(KMedoids, NearOptimalOnRandomPoints) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 10);
  std::vector<Point2> pts;
  for (int i = 0; i < 10; ++i) pts.push_back({u(rng), u(rng)});
  const auto d = euclidean_matrix(pts);
  const double opt = brute_force_optimum(d, 2).first;
  for (std::uint64_t seed = 0; seed < 5; ++seed) EXPECT_LE(k_medoids(d, 2, seed).cost, 1.05 * opt);
}

TEST(KMedoids, CostNeverIncreasesAndIsDeterministic) {
  std::mt19937_64 rng(6);
  std::vector<Pose> poses;
  for (int i = 0; i < 60; ++i) poses.push_back(random_pose(rng));
  const auto d = pairwise_distances(poses);
  const auto a = k_medoids(d, 6, 17, {.max_iterations = 100, .swap_refinement = false});
  for (std::size_t i = 1; i < a.cost_history.size(); ++i) EXPECT_LE(a.cost_history[i], a.cost_history[i - 1]);
  const auto b = k_medoids(d, 6, 17, {.max_iterations = 100, .swap_refinement = false});
  EXPECT_EQ(a.medoids, b.medoids);
  EXPECT_EQ(a.assignment, b.assignment);
  const auto c = k_medoids(d, 6, 17);
  for (std::size_t i = 1; i < c.cost_history.size(); ++i) EXPECT_LE(c.cost_history[i], c.cost_history[i - 1]);
  EXPECT_LE(c.cost, a.cost);
  for (std::size_t k = 0; k < 6; ++k) EXPECT_EQ(c.assignment[c.medoids[k]], k);
}

TEST(KMedoids, DuplicatePointsKeepEveryClusterNonEmpty) {
  const auto d = euclidean_matrix({{0, 0}, {0, 0}, {0, 0}, {5, 5}});
  const auto r = k_medoids(d, 3, 1);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(r.assignment[r.medoids[k]], k);
  }
}

TEST(AssignClass, MedoidScaledAndExhaustive) {
  std::mt19937_64 rng(7);
  std::vector<Pose> poses;
  for (int i = 0; i < 40; ++i) poses.push_back(random_pose(rng));
  const PoseVocabulary vocab = build_vocabulary(poses, 5, 3);
  ASSERT_EQ(vocab.size(), 5u);
  for (std::size_t k = 0; k < 5; ++k) {
    const Pose& m = poses[vocab.medoid_samples[k]];
    EXPECT_EQ(assign_class(m, vocab), k);
    EXPECT_EQ(assign_class(scale_about(m, 3.0, {0, 0}, {40, -12}), vocab), k);
  }
  for (int t = 0; t < 50; ++t) {
    const Pose p = random_pose(rng);
    std::size_t best = 0;
    double best_d = 1e300;
    for (std::size_t k = 0; k < vocab.size(); ++k) {
      const double dist = procrustes_distance(p, vocab.centers[k].as_pose());
      if (dist < best_d) {
        best_d = dist;
        best = k;
      }
    }
    EXPECT_EQ(assign_class(p, vocab), best);
  }
}
