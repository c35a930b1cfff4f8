#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "affordance/numerics.hpp"
#include "gradcheck.hpp"

using namespace affordance;
using namespace affordance::nn;
using affordance::testing::check_matrix_detailed;
using affordance::testing::StoreCheck;
using affordance::testing::max_relative_error;
using affordance::testing::numeric_gradient;

namespace {

Mat random_mat(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Mat m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

// Random weights everywhere (Glorot init plus random biases).
void randomize(ParameterStore& p, std::mt19937_64& rng) {
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = random_mat(p[i].rows(), p[i].cols(), rng, 0.7);
}

}  // namespace

TEST(Forward, IdentityLayerPassesInputThrough) {
  ParameterStore p;
  std::mt19937_64 rng(1);
  DenseNet net;
  net.add(p, "l", 4, 4, Activation::identity, rng);
  p["l.w"] = Mat::Identity(4, 4);
  const Mat x = random_mat(4, 3, rng);
  EXPECT_EQ(net.forward(p, x), x);
}

TEST(Forward, ZeroWeightsGiveActivationOfBias) {
  ParameterStore p;
  std::mt19937_64 rng(2);
  DenseNet net;
  net.add(p, "l", 3, 2, Activation::relu, rng);
  p["l.w"].setZero();
  p["l.b"] = (Mat(2, 1) << -1.5, 2.0).finished();
  const Mat y = net.forward(p, random_mat(3, 1, rng));
  EXPECT_EQ(y(0, 0), 0.0);
  EXPECT_EQ(y(1, 0), 2.0);
}

TEST(Forward, MatchesHandRolledArithmetic) {
  ParameterStore p;
  std::mt19937_64 rng(3);
  DenseNet net;
  net.add(p, "a", 5, 4, Activation::relu, rng).add(p, "b", 4, 3, Activation::identity, rng);
  randomize(p, rng);
  const Mat x = random_mat(5, 1, rng);
  const Mat y = net.forward(p, x);
  // Straight-line loops, no Eigen products.
  double h[4];
  for (int i = 0; i < 4; ++i) {
    double s = p["a.b"](i, 0);
    for (int j = 0; j < 5; ++j) s += p["a.w"](i, j) * x(j, 0);
    h[i] = s > 0 ? s : 0;
  }
  for (int i = 0; i < 3; ++i) {
    double s = p["b.b"](i, 0);
    for (int j = 0; j < 4; ++j) s += p["b.w"](i, j) * h[j];
    EXPECT_NEAR(y(i, 0), s, 1e-12);
  }
}

TEST(Forward, ShapeMismatchThrows) {
  ParameterStore p;
  std::mt19937_64 rng(4);
  DenseNet net;
  net.add(p, "a", 5, 4, Activation::relu, rng);
  try {
    net.forward(p, Mat::Zero(3, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::shape);
  }
  EXPECT_THROW(net.add(p, "b", 3, 2, Activation::relu, rng), Error);
}

TEST(Backward, LinearSumLoss) {
  ParameterStore p;
  std::mt19937_64 rng(5);
  DenseNet net;
  net.add(p, "l", 3, 2, Activation::identity, rng);
  const Mat x = (Mat(3, 1) << 1.0, -2.0, 0.5).finished();
  ForwardCache cache;
  net.forward(p, x, &cache);
  ParameterStore g = p.zeros_like();
  net.backward(p, cache, Mat::Ones(2, 1), g);
  for (int r = 0; r < 2; ++r) {
    EXPECT_EQ(g["l.b"](r, 0), 1.0);
    for (int c = 0; c < 3; ++c) EXPECT_EQ(g["l.w"](r, c), x(c, 0));
  }
}

TEST(Backward, MissingCacheIsStateError) {
  ParameterStore p;
  std::mt19937_64 rng(6);
  DenseNet net;
  net.add(p, "l", 3, 2, Activation::identity, rng);
  ParameterStore g = p.zeros_like();
  try {
    net.backward(p, ForwardCache{}, Mat::Ones(2, 1), g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::state);
  }
}

TEST(Backward, ReluBlocksNegativePreactivation) {
  ParameterStore p;
  std::mt19937_64 rng(7);
  DenseNet net;
  net.add(p, "l", 2, 2, Activation::relu, rng);
  p["l.w"] = Mat::Identity(2, 2);
  const Mat x = (Mat(2, 1) << -1.0, 1.0).finished();
  ForwardCache cache;
  net.forward(p, x, &cache);
  ParameterStore g = p.zeros_like();
  const Mat dx = net.backward(p, cache, Mat::Ones(2, 1), g);
  EXPECT_EQ(dx(0, 0), 0.0);
  EXPECT_EQ(g["l.b"](0, 0), 0.0);
  EXPECT_EQ(g["l.w"](0, 0), 0.0);
  EXPECT_EQ(dx(1, 0), 1.0);
}

TEST(Backward, FiniteDifferenceEveryParameter) {
  std::mt19937_64 rng(8);
  StoreCheck r;
  for (int inst = 0; inst < 100; ++inst) {
    ParameterStore p;
    DenseNet net;
    net.add(p, "a", 4, 5, Activation::relu, rng).add(p, "b", 5, 3, Activation::identity, rng);
    randomize(p, rng);
    const Mat x = random_mat(4, 2, rng);
    const Mat w = random_mat(3, 2, rng);  // loss = <w, net(x)>
    auto loss = [&] { return net.forward(p, x).cwiseProduct(w).sum(); };
    ForwardCache cache;
    net.forward(p, x, &cache);
    ParameterStore g = p.zeros_like();
    const Mat dx = net.backward(p, cache, w, g);
    for (std::size_t i = 0; i < p.size(); ++i) check_matrix_detailed(p[i], g[i], loss, r);
    Mat xm = x;
    auto loss_x = [&] { return net.forward(p, xm).cwiseProduct(w).sum(); };
    check_matrix_detailed(xm, dx, loss_x, r);
  }
  EXPECT_LT(r.worst, 1e-4);
  EXPECT_LT(r.kinks * 100, r.checked);
}

TEST(SoftmaxCrossEntropy, UniformLogitsGiveLogK) {
  const auto r = softmax_cross_entropy(Vec::Zero(30), 7);
  EXPECT_NEAR(r.loss, std::log(30.0), 1e-12);
  EXPECT_NEAR(r.loss, 3.4012, 1e-4);
}

TEST(SoftmaxCrossEntropy, ConfidentTrueClassApproachesZero) {
  Vec logits = Vec::Zero(5);
  double prev = 1e9;
  for (double big : {1.0, 10.0, 100.0, 1000.0}) {
    logits(2) = big;
    const double l = softmax_cross_entropy(logits, 2).loss;
    EXPECT_LE(l, prev);
    EXPECT_GE(l, 0.0);
    prev = l;
  }
  EXPECT_LT(prev, 1e-12);
}

TEST(SoftmaxCrossEntropy, LabelOutOfRange) {
  try {
    softmax_cross_entropy(Vec::Zero(4), 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_label);
  }
}

TEST(SoftmaxCrossEntropy, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(9);
  for (int inst = 0; inst < 100; ++inst) {
    Mat logits = random_mat(6, 1, rng, 3.0);
    const std::size_t label = inst % 6;
    const auto r = softmax_cross_entropy(Vec(logits.col(0)), label);
    const Mat num = numeric_gradient(logits, [&] { return softmax_cross_entropy(Vec(logits.col(0)), label).loss; });
    EXPECT_LT((r.grad - num).cwiseAbs().maxCoeff(), 1e-6);
    const Mat probs = softmax(logits);
    EXPECT_NEAR(probs.sum(), 1.0, 1e-12);
  }
}

TEST(Kl, ZeroAtStandardNormal) {
  const auto r = kl_to_standard_normal(Mat::Zero(30, 1), Mat::Zero(30, 1));
  EXPECT_EQ(r.loss, 0.0);
  EXPECT_EQ(r.grad_mu.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(r.grad_log_var.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Kl, UnitMeanShiftIsHalfPerDimension) {
  // Closed form 0.5 * (mu^2 + s^2 - 1 - log s^2) with mu = 1, s = 1.
  EXPECT_NEAR(kl_to_standard_normal(Mat::Ones(7, 1), Mat::Zero(7, 1)).loss, 3.5, 1e-15);
}

TEST(Kl, NonNegativeAndGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(10);
  for (int inst = 0; inst < 100; ++inst) {
    Mat mu = random_mat(5, 2, rng), lv = random_mat(5, 2, rng);
    const auto r = kl_to_standard_normal(mu, lv);
    EXPECT_GT(r.loss, 0.0);
    const Mat nmu = numeric_gradient(mu, [&] { return kl_to_standard_normal(mu, lv).loss; });
    const Mat nlv = numeric_gradient(lv, [&] { return kl_to_standard_normal(mu, lv).loss; });
    EXPECT_LT((r.grad_mu - nmu).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT((r.grad_log_var - nlv).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(Reparameterize, Definitions) {
  std::mt19937_64 rng(11);
  const Mat mu = random_mat(4, 1, rng), lv = random_mat(4, 1, rng), alpha = random_mat(4, 1, rng);
  EXPECT_EQ(reparameterize(mu, lv, Mat::Zero(4, 1)), mu);
  EXPECT_TRUE(reparameterize(mu, Mat::Zero(4, 1), alpha).isApprox(mu + alpha, 1e-15));
}

TEST(Reparameterize, JacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(12);
  for (int inst = 0; inst < 100; ++inst) {
    Mat mu = random_mat(4, 1, rng), lv = random_mat(4, 1, rng);
    const Mat alpha = random_mat(4, 1, rng), w = random_mat(4, 1, rng);
    auto loss = [&] { return reparameterize(mu, lv, alpha).cwiseProduct(w).sum(); };
    const auto g = reparameterize_backward(lv, alpha, w);
    EXPECT_LT(max_relative_error(g.grad_mu, numeric_gradient(mu, loss)), 1e-6);
    EXPECT_LT(max_relative_error(g.grad_log_var, numeric_gradient(lv, loss)), 1e-6);
  }
}

TEST(Adam, ZeroGradientLeavesParameters) {
  ParameterStore p;
  p.add("w", Mat::Constant(2, 2, 1.5));
  const ParameterStore before = p;
  AdamState s;
  adam_step(s, p, p.zeros_like());
  EXPECT_EQ(p, before);
  EXPECT_EQ(s.step, 1u);
}

TEST(Adam, FirstStepMovesByLearningRateAgainstGradientSign) {
  ParameterStore p;
  p.add("w", (Mat(3, 1) << 1.0, -2.0, 3.0).finished());
  ParameterStore g = p.zeros_like();
  g[0] = (Mat(3, 1) << 0.1, -0.2, 0.3).finished();
  AdamState s;
  adam_step(s, p, g);
  // m_hat = g, v_hat = g^2 at t = 1, so the step is lr * g / (|g| + eps).
  const double lr = 2e-4, eps = 1e-8;
  EXPECT_DOUBLE_EQ(p[0](0, 0), 1.0 - lr * 0.1 / (0.1 + eps));
  EXPECT_DOUBLE_EQ(p[0](1, 0), -2.0 + lr * 0.2 / (0.2 + eps));
  EXPECT_DOUBLE_EQ(p[0](2, 0), 3.0 - lr * 0.3 / (0.3 + eps));
}

TEST(Adam, DefaultsFollowTrainingRecipe) {
  const AdamConfig c;
  EXPECT_EQ(c.lr, 2e-4);
  EXPECT_EQ(c.beta1, 0.5);
  EXPECT_EQ(c.beta2, 0.999);
  EXPECT_EQ(c.epsilon, 1e-8);
}

TEST(Adam, ConvergesOnScalarQuadratic) {
  // 200 steps at the default lr of 2e-4 cannot cover a distance of 3, so
  // the convergence run uses lr = 0.1.
  ParameterStore p;
  p.add("w", Mat::Zero(1, 1));
  AdamState s;
  s.config.lr = 0.1;
  for (int i = 0; i < 200; ++i) {
    ParameterStore g = p.zeros_like();
    g[0](0, 0) = 2.0 * (p[0](0, 0) - 3.0);
    adam_step(s, p, g);
  }
  EXPECT_LT(std::abs(p[0](0, 0) - 3.0), 0.05);
}

TEST(Adam, ShapeMismatchThrows) {
  ParameterStore p, g;
  p.add("w", Mat::Zero(2, 1));
  g.add("w", Mat::Zero(3, 1));
  AdamState s;
  try {
    adam_step(s, p, g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::shape);
  }
}

TEST(Checkpoint, BitExactRoundTripAndChecksum) {
  std::mt19937_64 rng(13);
  ParameterStore p;
  DenseNet net;
  net.add(p, "enc", 7, 5, Activation::relu, rng).add(p, "head", 5, 2, Activation::identity, rng);
  randomize(p, rng);
  p["head.b"](0, 0) = 1e-300;
  p["head.b"](1, 0) = -0.0;
  const std::string bytes = serialize_parameters(p);
  const ParameterStore back = parse_parameters(bytes);
  EXPECT_EQ(back, p);
  EXPECT_EQ(serialize_parameters(back), bytes);

  std::string corrupted = bytes;
  corrupted[bytes.find("slot enc.b") + 20] ^= 1;
  EXPECT_THROW(parse_parameters(corrupted), Error);

  const auto path = (std::filesystem::temp_directory_path() / "affordance_ckpt_test.txt").string();
  save_parameters(p, path);
  ParameterStore target = p.zeros_like();
  load_parameters_into(target, path);
  EXPECT_EQ(target, p);
  ParameterStore other;
  other.add("x", Mat::Zero(1, 1));
  EXPECT_THROW(load_parameters_into(other, path), Error);
  std::filesystem::remove(path);
}
