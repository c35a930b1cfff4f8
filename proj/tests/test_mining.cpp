#include <gtest/gtest.h>

#include <filesystem>
#include <numbers>
#include <random>
#include <set>

#include "affordance/flow.hpp"
#include "affordance/mining.hpp"
#include "test_util.hpp"

using namespace affordance;
using affordance::testing::random_pose;

namespace {

std::vector<FrameScore> random_scores(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<FrameScore> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({i * 3 + 1, 60.0 * u(rng), u(rng), u(rng)});
  return out;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("affordance_mining_" + name)).string();
}

Point2 rotate(Point2 p, Point2 c, double theta) {
  const double cs = std::cos(theta), sn = std::sin(theta);
  const Point2 d = p - c;
  return c + Point2{cs * d.x - sn * d.y, sn * d.x + cs * d.y};
}

}  // namespace

TEST(FilterEmpty, SingleFrames) {
  const EmptyThresholds t;
  const FrameScore clear{1, 0.0, 0.0, 1.0};
  EXPECT_TRUE(is_empty(clear, t));
  const FrameScore full{2, 0.0, 0.0, 0.0};
  EXPECT_FALSE(is_empty(full, t));
  const FrameScore face{3, 100.0, 0.0, 1.0};
  EXPECT_FALSE(is_empty(face, t));
}

TEST(FilterEmpty, MissingOrInvalidScore) {
  const FrameScore missing{1, 0.0, std::nullopt, 1.0};
  try {
    is_empty(missing, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::incomplete_scoring);
  }
  EXPECT_THROW(is_empty(FrameScore{1, -1.0, 0.0, 0.5}, {}), Error);
  EXPECT_THROW(is_empty(FrameScore{1, 0.0, 0.0, 1.5}, {}), Error);
  EXPECT_THROW(is_empty(FrameScore{1, 0.0, std::nan(""), 0.5}, {}), Error);
}

TEST(FilterEmpty, HundredFrameFixtureMatchesConjunction) {
  std::mt19937_64 rng(1);
  const auto frames = random_scores(100, rng);
  const EmptyThresholds t{20.0, 0.4, 0.6};
  std::vector<FrameId> expected;
  for (const auto& f : frames) {
    if (*f.face < 20.0 && *f.person < 0.4 && *f.emptiness > 0.6) expected.push_back(f.frame);
  }
  EXPECT_FALSE(expected.empty());
  EXPECT_EQ(filter_empty(frames, t), expected);
}

TEST(FilterEmpty, MonotoneInThresholds) {
  std::mt19937_64 rng(2);
  const auto frames = random_scores(300, rng);
  for (double lo = 0.0; lo < 1.0; lo += 0.1) {
    const auto a = filter_empty(frames, {30.0, 0.5, lo});
    const auto b = filter_empty(frames, {30.0, 0.5, lo + 0.1});
    EXPECT_TRUE(std::includes(a.begin(), a.end(), b.begin(), b.end()));
  }
  for (double face = 60.0; face > 0.0; face -= 5.0) {
    const auto a = filter_empty(frames, {face, 0.5, 0.3});
    const auto b = filter_empty(frames, {face - 5.0, 0.5, 0.3});
    EXPECT_TRUE(std::includes(a.begin(), a.end(), b.begin(), b.end()));
  }
}

TEST(FilterEmpty, SidecarScorersAndFileRoundTrip) {
  std::mt19937_64 rng(3);
  auto frames = random_scores(40, rng);
  frames[7].person = std::nullopt;
  const ScoreSidecar sidecar(frames);
  const auto path = temp_path("scores.bin");
  sidecar.save(path);
  const ScoreSidecar back = ScoreSidecar::load(path);
  EXPECT_EQ(back.serialize(), sidecar.serialize());
  ASSERT_EQ(back.size(), 40u);
  EXPECT_FALSE(back.find(frames[7].frame)->person.has_value());

  const SidecarScorer face(back, ScoreSidecar::Channel::face), person(back, ScoreSidecar::Channel::person),
      empt(back, ScoreSidecar::Channel::emptiness);
  const ScorerSet set{&face, &person, &empt};
  std::vector<FrameId> ids;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (i != 7) ids.push_back(frames[i].frame);
  }
  auto good = frames;
  good.erase(good.begin() + 7);
  EXPECT_EQ(filter_empty(ids, set, {}), filter_empty(good, {}));
  const FrameId with_missing[] = {frames[7].frame};
  EXPECT_THROW(filter_empty(with_missing, set, {}), Error);
  const FrameId unknown[] = {999999};
  EXPECT_THROW(filter_empty(unknown, set, {}), Error);

  std::string bytes = sidecar.serialize();
  bytes.pop_back();
  EXPECT_THROW(ScoreSidecar::parse(bytes), Error);
  EXPECT_THROW(ScoreSidecar::parse("garbage"), Error);
  std::filesystem::remove(path);
}

TEST(HardNegative, TopAllIsIdentitySelection) {
  const std::vector<Prediction> p{{5, 0.3}, {2, 0.9}, {8, 0.1}};
  const auto r = hard_negative_refresh(p, 3, {});
  EXPECT_EQ(r.selected, (std::vector<FrameId>{2, 5, 8}));
  EXPECT_FALSE(r.truncated);
  EXPECT_EQ(r.unlabeled.size(), 3u);
}

TEST(HardNegative, StrictlyDecreasingScoresKeepOrder) {
  std::vector<Prediction> p;
  for (FrameId i = 0; i < 20; ++i) p.push_back({i, 1.0 - 0.01 * double(i)});
  const auto r = hard_negative_refresh(p, 5, {});
  EXPECT_EQ(r.selected, (std::vector<FrameId>{0, 1, 2, 3, 4}));
}

TEST(HardNegative, MatchesSortOracleAndLabels) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> u(0, 20);  // coarse scores force ties
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Prediction> p;
    std::vector<LabeledFrame> labels;
    for (FrameId i = 0; i < 60; ++i) {
      p.push_back({(i * 37) % 101, u(rng) / 20.0});
      if (i % 3 == 0) labels.push_back({(i * 37) % 101, i % 2 == 0});
    }
    auto oracle = p;
    std::sort(oracle.begin(), oracle.end(), [](auto& a, auto& b) {
      return std::make_pair(-a.score, a.frame) < std::make_pair(-b.score, b.frame);
    });
    const auto r = hard_negative_refresh(p, 25, labels);
    ASSERT_EQ(r.selected.size(), 25u);
    for (std::size_t i = 0; i < 25; ++i) EXPECT_EQ(r.selected[i], oracle[i].frame);
    EXPECT_EQ(r.corrected.size() + r.unlabeled.size(), 25u);
    for (const auto& c : r.corrected) {
      const auto it = std::find_if(labels.begin(), labels.end(), [&](auto& l) { return l.frame == c.frame; });
      ASSERT_NE(it, labels.end());
      EXPECT_EQ(it->empty, c.empty);
    }
  }
}

TEST(HardNegative, TruncatesWhenShort) {
  const std::vector<Prediction> p{{1, 0.5}, {2, 0.7}};
  const auto r = hard_negative_refresh(p, 1000, {});
  EXPECT_TRUE(r.truncated);
  EXPECT_EQ(r.selected.size(), 2u);
}

TEST(GlobalMatch, IdentityAndOrthogonal) {
  nn::Vec q(3);
  q << 0.3, -1.2, 2.0;
  const std::vector<CorpusItem> corpus{{10, nn::Vec::Unit(3, 0)}, {11, q}, {12, -q}};
  const auto m = global_match(q, corpus, 3);
  ASSERT_EQ(m.size(), 3u);
  EXPECT_EQ(m[0].frame, 11u);
  EXPECT_EQ(m[0].similarity, 1.0);
  EXPECT_EQ(m[2].frame, 12u);
  EXPECT_NEAR(m[2].similarity, -1.0, 1e-15);
  const std::vector<CorpusItem> ortho{{1, nn::Vec::Unit(2, 1)}};
  EXPECT_EQ(global_match(nn::Vec::Unit(2, 0), ortho, 1)[0].similarity, 0.0);
}

TEST(GlobalMatch, ExhaustiveOracleOnRandomCorpus) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  auto rnd = [&] {
    nn::Vec v(16);
    for (auto& x : v) x = n(rng);
    return v;
  };
  std::vector<CorpusItem> corpus;
  for (FrameId i = 0; i < 50; ++i) corpus.push_back({100 - i, rnd()});
  for (int trial = 0; trial < 10; ++trial) {
    const nn::Vec q = trial == 0 ? corpus[17].features : rnd();
    std::vector<std::pair<double, FrameId>> oracle;
    for (const auto& c : corpus) {
      double dot = 0, a = 0, b = 0;
      for (int k = 0; k < 16; ++k) {
        dot += q(k) * c.features(k);
        a += q(k) * q(k);
        b += c.features(k) * c.features(k);
      }
      oracle.emplace_back(-dot / std::sqrt(a * b), c.frame);
    }
    std::sort(oracle.begin(), oracle.end());
    const auto m = global_match(q, corpus, 10);
    ASSERT_EQ(m.size(), 10u);
    for (std::size_t i = 0; i < 10; ++i) {
      EXPECT_EQ(m[i].frame, oracle[i].second);
      EXPECT_NEAR(m[i].similarity, -oracle[i].first, 1e-12);
    }
    if (trial == 0) {
      EXPECT_EQ(m[0].frame, corpus[17].frame);
    }
  }
}

TEST(GlobalMatch, ZeroNormRejected) {
  const std::vector<CorpusItem> corpus{{1, nn::Vec::Ones(3)}, {2, nn::Vec::Zero(3)}};
  try {
    global_match(nn::Vec::Ones(3), corpus, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::invalid_feature);
  }
  EXPECT_THROW(global_match(nn::Vec::Zero(3), {}, 1), Error);
}

TEST(Flow, ZeroFlowsComposeToIdentity) {
  const std::vector<FlowField> flows(4, FlowField(20, 15));
  const FlowField total = accumulate_flow(flows);
  EXPECT_EQ(total, FlowField(20, 15));
  EXPECT_EQ(total.warp({3.5, 7.25}), (Point2{3.5, 7.25}));
}

TEST(Flow, UniformTranslationsAdd) {
  const std::vector<FlowField> flows{FlowField::uniform(30, 20, {2, 0}), FlowField::uniform(30, 20, {3, 0})};
  const FlowField total = accumulate_flow(flows);
  for (int y = 0; y < 20; ++y) {
    for (int x = 0; x < 30; ++x) EXPECT_EQ(total(x, y), (Point2{5, 0}));
  }
}

TEST(Flow, RotatingTranslationMatchesAnalyticComposition) {
  // Camera i sees world point w at R(theta_i) (w - c) + c + t_i.
  const int w = 160, h = 120;
  const Point2 c{80, 60};
  auto cam = [&](int i, Point2 p) { return rotate(p, c, 0.01 * i) + Point2{1.5 * i, -0.7 * i}; };
  auto inv = [&](int i, Point2 p) { return rotate(p - Point2{1.5 * i, -0.7 * i}, c, -0.01 * i); };
  std::vector<FlowField> flows;
  for (int i = 0; i < 10; ++i) {
    flows.push_back(FlowField::from_function(w, h, [&](Point2 p) { return cam(i + 1, inv(i, p)) - p; }));
  }
  const FlowField total = accumulate_flow(flows);
  double worst = 0;
  for (int y = 0; y < h; y += 7) {
    for (int x = 0; x < w; x += 7) {
      const Point2 truth = cam(10, inv(0, {double(x), double(y)}));
      const Point2 got = total.warp({double(x), double(y)});
      worst = std::max(worst, std::hypot(got.x - truth.x, got.y - truth.y));
    }
  }
  EXPECT_LT(worst, 0.5);
}

TEST(Flow, SmoothFieldComposition) {
  const int w = 200, h = 150;
  auto f1 = [](Point2 p) { return Point2{3 * std::sin(p.y / 40), 2 * std::cos(p.x / 50)}; };
  auto f2 = [](Point2 p) { return Point2{1.5 * std::cos(p.x / 60 + p.y / 90), -std::sin(p.x / 70)}; };
  const std::vector<FlowField> flows{FlowField::from_function(w, h, f1), FlowField::from_function(w, h, f2)};
  const FlowField total = accumulate_flow(flows);
  for (int y = 5; y < h; y += 11) {
    for (int x = 5; x < w; x += 13) {
      const Point2 p{double(x), double(y)};
      const Point2 truth = p + f1(p) + f2(p + f1(p));
      const Point2 got = total.warp(p);
      EXPECT_LT(std::hypot(got.x - truth.x, got.y - truth.y), 0.5);
    }
  }
}

TEST(Flow, CompositionIsAssociativeOnSmoothFields) {
  const int w = 64, h = 48;
  auto affine = [](double a, double b, double c, double d, double e, double f) {
    return [=](Point2 p) { return Point2{a * p.x + b * p.y + c, d * p.x + e * p.y + f}; };
  };
  const FlowField a = FlowField::from_function(w, h, affine(0.01, -0.02, 1.5, 0.015, 0.005, -0.8));
  const FlowField b = FlowField::from_function(w, h, affine(-0.03, 0.01, -2.0, 0.02, -0.01, 0.4));
  const FlowField c = FlowField::from_function(w, h, affine(0.005, 0.02, 0.7, -0.01, 0.03, 1.1));
  const FlowField left = compose(compose(a, b), c), right = compose(a, compose(b, c));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      EXPECT_NEAR(left(x, y).x, right(x, y).x, 1e-6);
      EXPECT_NEAR(left(x, y).y, right(x, y).y, 1e-6);
    }
  }
  // Identity on either side leaves a field unchanged.
  const FlowField id(w, h);
  const FlowField ia = compose(id, a), ai = compose(a, id);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      EXPECT_NEAR(ia(x, y).x, a(x, y).x, 1e-12);
      EXPECT_NEAR(ai(x, y).y, a(x, y).y, 1e-12);
    }
  }
}

TEST(Flow, DimensionMismatchAndEmpty) {
  const std::vector<FlowField> flows{FlowField(10, 10), FlowField(10, 11)};
  try {
    accumulate_flow(flows);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::shape);
  }
  EXPECT_THROW(accumulate_flow({}), Error);
}

TEST(Flow, FloFileRoundTrip) {
  const FlowField f = FlowField::from_function(17, 9, [](Point2 p) { return Point2{0.25 * p.x - 1, -0.5 * p.y}; });
  const auto path = temp_path("a.flo");
  write_flo(f, path);
  EXPECT_EQ(read_flo(path), f);  // values are exact in float32
  std::string bytes = encode_flo(f);
  bytes.resize(bytes.size() - 3);
  EXPECT_THROW(decode_flo(bytes), Error);
  std::filesystem::remove(path);
}

TEST(Flow, ChainAndWindow) {
  std::vector<FlowField> fwd, bwd;
  for (int i = 0; i < 5; ++i) {
    fwd.push_back(FlowField::uniform(8, 8, {double(i + 1), 0}));
    bwd.push_back(FlowField::uniform(8, 8, {-double(i + 1), 0}));
  }
  const auto f = accumulate_flow(flow_chain(fwd, bwd, 1, 4));
  EXPECT_EQ(f(0, 0), (Point2{2 + 3 + 4, 0}));
  const auto b = accumulate_flow(flow_chain(fwd, bwd, 4, 1));
  EXPECT_EQ(b(0, 0), (Point2{-(2 + 3 + 4), 0}));
  EXPECT_TRUE(flow_chain(fwd, bwd, 2, 2).empty());
  EXPECT_EQ(local_window(3, 100, 5), (std::pair<std::size_t, std::size_t>{0, 8}));
  EXPECT_EQ(local_window(97, 100, 5), (std::pair<std::size_t, std::size_t>{92, 99}));
}

TEST(Transfer, IdentityAndUniformFields) {
  std::mt19937_64 rng(6);
  const Pose p = random_pose(rng);
  const TransferTarget target{42, "s1", "showA", "s1/f3.pgm", 640, 480};
  const auto r = transfer_pose(p, FlowField(640, 480), target, RecordSource::global);
  EXPECT_EQ(r.pose, p);
  EXPECT_EQ(r.source, RecordSource::global);
  EXPECT_EQ(r.status, RecordStatus::hypothesis);
  EXPECT_EQ(r.id, 42u);
  EXPECT_EQ(r.anchor, p.bbox().center());

  const auto s = transfer_pose(p, FlowField::uniform(640, 480, {10, 5}), target, RecordSource::local);
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    EXPECT_DOUBLE_EQ(s.pose[j].x, p[j].x + 10);
    EXPECT_DOUBLE_EQ(s.pose[j].y, p[j].y + 5);
  }
  EXPECT_EQ(s.source, RecordSource::local);
}

TEST(Transfer, PanSequenceWithPlantedPose) {
  // Pose planted in frame 0 of a 12-frame pan with slight rotation.
  const int w = 320, h = 240;
  const Point2 c{160, 120};
  auto cam = [&](int i, Point2 p) { return rotate(p, c, 0.004 * i) + Point2{-2.5 * i, 0.8 * i}; };
  auto inv = [&](int i, Point2 p) { return rotate(p - Point2{-2.5 * i, 0.8 * i}, c, -0.004 * i); };
  std::vector<FlowField> fwd;
  for (int i = 0; i < 11; ++i) {
    fwd.push_back(FlowField::from_function(w, h, [&](Point2 p) { return cam(i + 1, inv(i, p)) - p; }));
  }
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Pose p = random_pose(rng);
    const double s = 150.0 / p.bbox().height();
    p = scale_about(p, s, p.bbox().center(), Point2{160, 120} - p.bbox().center());
    for (int to : {3, 11}) {
      const auto r = transfer_pose(p, accumulate_flow(flow_chain(fwd, {}, 0, std::size_t(to))), {1, "x", "y", "z", w, h},
                                   RecordSource::local);
      for (std::size_t j = 0; j < kNumJoints; ++j) {
        const Point2 truth = cam(to, inv(0, p[j]));
        EXPECT_LT(std::hypot(r.pose[j].x - truth.x, r.pose[j].y - truth.y), 1.0);
      }
      EXPECT_FALSE(r.out_of_frame);
    }
  }
}

TEST(Transfer, OutOfFrameIsFlaggedNotThrown) {
  std::mt19937_64 rng(8);
  const Pose p = random_pose(rng);
  const auto r = transfer_pose(p, FlowField::uniform(640, 480, {1000, 0}), {1, "a", "b", "c", 640, 480},
                               RecordSource::local);
  EXPECT_TRUE(r.out_of_frame);
  EXPECT_THROW(transfer_pose(translate(p, {-2000, 0}), FlowField(640, 480), {}, RecordSource::local), Error);
}

TEST(Record, StateMachine) {
  std::mt19937_64 rng(9);
  AffordanceRecord r;
  r.pose = random_pose(rng);
  r.anchor = r.pose.bbox().center();
  r.frame_width = 640;
  r.frame_height = 480;
  AffordanceRecord a = r, b = r, c = r;
  accept(a);
  EXPECT_EQ(a.status, RecordStatus::accepted);
  EXPECT_THROW(accept(a), Error);
  EXPECT_THROW(reject(a), Error);
  reject(b);
  EXPECT_EQ(b.status, RecordStatus::rejected);
  try {
    adjust(b, b.pose.joints(), {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::conflict);
  }
  adjust(c, c.pose.joints(), {});
  EXPECT_EQ(c.pose, r.pose);
  EXPECT_EQ(c.anchor, r.anchor);
  EXPECT_EQ(c.status, RecordStatus::accepted);
  const Adjustment twice{2.0, {10, -5}};
  const Pose scaled = apply_adjustment(c.pose, twice);
  adjust(c, scaled.joints(), twice);
  EXPECT_NEAR(c.pose.bbox().height(), 2 * r.pose.bbox().height(), 1e-9);
  EXPECT_NEAR(c.anchor.x, r.anchor.x + 10, 1e-9);
  EXPECT_EQ(c.status, RecordStatus::accepted);
}
