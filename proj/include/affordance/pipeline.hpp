#pragma once

// Stage drivers shared by the command-line tool and the service: mining a
// corpus into hypotheses, assembling training sets, and evaluation.

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "affordance/corpus.hpp"
#include "affordance/dataset.hpp"
#include "affordance/evaluation.hpp"
#include "affordance/flow.hpp"
#include "affordance/image.hpp"
#include "affordance/mining.hpp"
#include "affordance/model.hpp"
#include "affordance/scene_features.hpp"

namespace affordance {

struct MiningConfig {
  EmptyThresholds thresholds;
  std::size_t window_frames = 5;
  double match_threshold = 0.9;  // minimum cosine similarity for a global transfer
  std::uint64_t featurizer_seed = 0;
  std::size_t feature_dim = 64;
  bool auto_annotate = false;  // accept in-frame hypotheses, reject the rest
};

struct MiningReport {
  std::size_t frames = 0;
  std::size_t empty_frames = 0;
  std::size_t detections = 0;
  std::size_t local = 0;
  std::size_t global = 0;
  std::size_t out_of_frame = 0;
};

class ImageCache {
 public:
  explicit ImageCache(const Corpus& c) : corpus_(&c) {}
  const Image& get(const CorpusFrame& f) {
    auto it = images_.find(f.id);
    if (it == images_.end()) it = images_.emplace(f.id, read_image(corpus_->resolve(f.image))).first;
    return it->second;
  }

 private:
  const Corpus* corpus_;
  std::map<FrameId, Image> images_;
};

inline std::optional<SceneFeatures> features_at(const Featurizer& f, const Image& img, Point2 p) {
  if (p.x < 0 || p.y < 0 || p.x >= img.width() || p.y >= img.height()) return std::nullopt;
  return extract_scene_features(f, img, p);
}

/// Empty-scene filtering, then local (optical flow within the shot) and global
/// (retrieval across shots, identity field) transfer of every detection.
inline Dataset mine(const Corpus& corpus, const MiningConfig& cfg, MiningReport* report = nullptr) {
  const ScoreSidecar sidecar = ScoreSidecar::load(corpus.resolve(corpus.scores));
  const SidecarScorer face(sidecar, ScoreSidecar::Channel::face), person(sidecar, ScoreSidecar::Channel::person),
      empt(sidecar, ScoreSidecar::Channel::emptiness);
  std::vector<FrameId> ids;
  for (const auto& f : corpus.frames) ids.push_back(f.id);
  const auto empty_ids = filter_empty(ids, ScorerSet{&face, &person, &empt}, cfg.thresholds);
  const std::set<FrameId> empty(empty_ids.begin(), empty_ids.end());

  const RandomProjectionFeaturizer featurizer(cfg.feature_dim, cfg.featurizer_seed);
  ImageCache images(corpus);
  std::vector<CorpusItem> empty_index;
  for (const auto& f : corpus.frames) {
    if (!empty.count(f.id)) continue;
    const Image& img = images.get(f);
    empty_index.push_back({f.id, featurizer.featurize(img, {0, 0, img.width(), img.height(), false})});
  }

  Dataset ds;
  ds.featurizer_seed = cfg.featurizer_seed;
  MiningReport rep;
  rep.frames = corpus.frames.size();
  rep.empty_frames = empty.size();
  std::uint64_t next_id = 1;
  auto target_of = [&](const CorpusFrame& f) {
    return TransferTarget{next_id++, f.scene, f.show, corpus.resolve(f.image), f.width, f.height};
  };
  auto finish = [&](AffordanceRecord r, const CorpusFrame& frame) {
    if (!r.out_of_frame) r.features = features_at(featurizer, images.get(frame), r.anchor);
    if (!r.features) r.out_of_frame = true;
    if (cfg.auto_annotate) r.status = r.out_of_frame ? RecordStatus::rejected : RecordStatus::accepted;
    rep.out_of_frame += r.out_of_frame;
    ds.records.push_back(std::move(r));
  };

  auto detections = corpus.detections;
  std::stable_sort(detections.begin(), detections.end(), [](auto& a, auto& b) { return a.frame < b.frame; });
  for (const auto& det : detections) {
    ++rep.detections;
    const CorpusFrame& src = corpus.frame(det.frame);
    if (!pose_in_frame(det.pose, src.width, src.height)) continue;

    // Local: nearest empty frame of the same shot inside the window.
    const auto shot = corpus.shot_frames(src.shot);
    const auto [lo, hi] = local_window(src.index, shot.size(), cfg.window_frames);
    const CorpusFrame* best = nullptr;
    for (std::size_t i = lo; i <= hi; ++i) {
      if (!empty.count(shot[i].id)) continue;
      const auto dist = [&](const CorpusFrame* f) { return f->index > src.index ? f->index - src.index : src.index - f->index; };
      if (!best || dist(&shot[i]) < dist(best)) best = &shot[i];
    }
    if (best) {
      std::vector<FlowField> fwd, bwd;
      for (const auto& fl : corpus.flows) {
        if (fl.shot != src.shot) continue;
        if (fwd.size() <= fl.index) {
          fwd.resize(fl.index + 1);
          bwd.resize(fl.index + 1);
        }
        fwd[fl.index] = read_flo(corpus.resolve(fl.forward));
        bwd[fl.index] = read_flo(corpus.resolve(fl.backward));
      }
      const auto chain = flow_chain(fwd, bwd, src.index, best->index);
      const FlowField field = chain.empty() ? FlowField(src.width, src.height) : accumulate_flow(chain);
      finish(transfer_pose(det.pose, field, target_of(*best), RecordSource::local), *best);
      ++rep.local;
    }

    // Global: best-matching empty frame from any other shot.
    std::vector<CorpusItem> others;
    for (const auto& item : empty_index) {
      if (corpus.frame(item.frame).shot != src.shot) others.push_back(item);
    }
    if (others.empty()) continue;
    const Image& img = images.get(src);
    const auto query = featurizer.featurize(img, {0, 0, img.width(), img.height(), false});
    const auto match = global_match(query, others, 1);
    if (match.empty() || match[0].similarity < cfg.match_threshold) continue;
    const CorpusFrame& dst = corpus.frame(match[0].frame);
    finish(transfer_pose(det.pose, FlowField(src.width, src.height), target_of(dst), RecordSource::global), dst);
    ++rep.global;
  }
  std::stable_sort(ds.records.begin(), ds.records.end(),
                   [](const auto& a, const auto& b) { return std::tie(a.scene, a.id) < std::tie(b.scene, b.id); });
  if (report) *report = rep;
  return ds;
}

// ---------------------------------------------------------------------------
// Training data

/// Accepted, in-frame positives with cached features.
inline std::vector<AffordanceRecord> usable_positives(std::span<const AffordanceRecord> records) {
  std::vector<AffordanceRecord> out;
  for (const auto& r : records) {
    if (r.status == RecordStatus::accepted && r.label == RecordLabel::positive && r.features && !r.out_of_frame) {
      out.push_back(r);
    }
  }
  return out;
}

/// Shows in sorted order: the last is held out for testing, the first for
/// threshold selection (when at least three exist).
struct ShowRoles {
  std::string test;
  std::string validation;  // empty when there are too few shows
};

inline std::vector<std::string> show_names(std::span<const AffordanceRecord> records) {
  std::set<std::string> s;
  for (const auto& r : records) s.insert(r.show);
  return {s.begin(), s.end()};
}

inline ShowRoles default_roles(std::span<const AffordanceRecord> records) {
  const auto shows = show_names(records);
  if (shows.size() < 2) throw Error(ErrorKind::invalid_split, "need records from at least two shows");
  return {shows.back(), shows.size() >= 3 ? shows.front() : std::string()};
}

struct RoleSplit {
  std::vector<AffordanceRecord> train, validation, test;
};

inline RoleSplit split_roles(std::span<const AffordanceRecord> records, const ShowRoles& roles) {
  RoleSplit s;
  const auto known = show_names(records);
  if (std::find(known.begin(), known.end(), roles.test) == known.end()) {
    throw Error(ErrorKind::invalid_split, "unknown test show '" + roles.test + "'");
  }
  if (!roles.validation.empty() && std::find(known.begin(), known.end(), roles.validation) == known.end()) {
    throw Error(ErrorKind::invalid_split, "unknown validation show '" + roles.validation + "'");
  }
  if (roles.validation == roles.test) throw Error(ErrorKind::invalid_split, "validation and test show coincide");
  for (const auto& r : records) {
    if (r.show == roles.test) {
      s.test.push_back(r);
    } else if (r.show == roles.validation) {
      s.validation.push_back(r);
    } else {
      s.train.push_back(r);
    }
  }
  return s;
}

inline std::vector<Pose> poses_of(std::span<const AffordanceRecord> records) {
  std::vector<Pose> out;
  for (const auto& r : records) out.push_back(r.pose);
  return out;
}

inline std::vector<ClassifierSample> classifier_samples(std::span<const AffordanceRecord> records,
                                                        const PoseVocabulary& vocab) {
  std::vector<ClassifierSample> out;
  for (const auto& r : records) out.push_back({*r.features, assign_class(r.pose, vocab)});
  return out;
}

inline std::vector<VaeSample> vae_samples(std::span<const AffordanceRecord> records, const PoseVocabulary& vocab) {
  std::vector<VaeSample> out;
  for (const auto& r : records) {
    const std::size_t c = assign_class(r.pose, vocab);
    out.push_back({*r.features, c, encode(r.pose, vocab.center(c), r.anchor)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Plausibility evaluation

struct ScoringConfig {
  std::size_t m = 10;
  std::uint64_t seed = 0;
  GenerateOptions generate;
};

/// Mean generated-pose distance for every record at its own anchor. Each
/// record's sampling stream is derived from (seed, record id).
inline std::vector<double> plausibility_distances(const ClassifierModel& cls, const VaeModel& vae,
                                                  const PoseVocabulary& vocab, std::span<const AffordanceRecord> records,
                                                  const ScoringConfig& cfg) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    if (!r.features) throw Error(ErrorKind::state, "record " + std::to_string(r.id) + " has no cached features");
    out.push_back(score_pose(cls, vae, *r.features, r.anchor, r.pose, cfg.m, vocab, mix_seed(cfg.seed, r.id),
                             std::numeric_limits<double>::infinity(), cfg.generate)
                      .distance);
  }
  return out;
}

struct LabeledSet {
  std::vector<AffordanceRecord> records;  // positives then negatives
  std::vector<bool> positive;
};

inline LabeledSet with_negatives(std::span<const AffordanceRecord> positives, const PoseVocabulary& vocab,
                                 std::uint64_t seed, double per_positive) {
  LabeledSet s;
  std::uint64_t max_id = 0;
  for (const auto& r : positives) max_id = std::max(max_id, r.id);
  const auto neg = synthesize_negatives(positives, vocab, seed, {per_positive, max_id + 1});
  s.records.assign(positives.begin(), positives.end());
  s.records.insert(s.records.end(), neg.begin(), neg.end());
  s.positive.assign(positives.size(), true);
  s.positive.resize(s.records.size(), false);
  return s;
}

/// delta maximizing F1 on a labeled validation set.
inline double choose_delta(const ClassifierModel& cls, const VaeModel& vae, const PoseVocabulary& vocab,
                           const LabeledSet& val, const ScoringConfig& cfg) {
  const auto d = plausibility_distances(cls, vae, vocab, val.records, cfg);
  const std::unique_ptr<bool[]> pos(new bool[val.positive.size()]);
  for (std::size_t i = 0; i < val.positive.size(); ++i) pos[i] = val.positive[i];
  return select_delta_f1(d, std::span<const bool>(pos.get(), val.positive.size()));
}

struct EvaluationResult {
  EvalReport report;
  std::vector<double> distances;  // aligned with `set.records`
  LabeledSet set;
};

inline EvaluationResult evaluate_model(const ClassifierModel& cls, const VaeModel& vae, const PoseVocabulary& vocab,
                                       std::span<const AffordanceRecord> test_positives, std::uint64_t negative_seed,
                                       double per_positive, const ScoringConfig& cfg, std::size_t k_max = 5) {
  EvaluationResult out;
  out.set = with_negatives(test_positives, vocab, negative_seed, per_positive);
  out.distances = plausibility_distances(cls, vae, vocab, out.set.records, cfg);
  const std::unique_ptr<bool[]> pos(new bool[out.set.positive.size()]);
  for (std::size_t i = 0; i < out.set.positive.size(); ++i) pos[i] = out.set.positive[i];
  out.report = evaluate_pr(out.distances, std::span<const bool>(pos.get(), out.set.positive.size()));
  std::vector<AffordanceRecord> labeled(test_positives.begin(), test_positives.end());
  for (auto& r : labeled) r.class_id = assign_class(r.pose, vocab);
  out.report.topk = evaluate_topk(cls, labeled, k_max);
  return out;
}

}  // namespace affordance
