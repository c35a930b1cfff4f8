#pragma once

// Empty-scene mining: the face / person / emptiness filter cascade, the
// hard-negative refresh loop, and global retrieval by cosine similarity.
// Detectors are pluggable; the bundled implementation reads score sidecars.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "affordance/error.hpp"
#include "affordance/fileio.hpp"
#include "affordance/numerics/params.hpp"

namespace affordance {

using FrameId = std::uint64_t;

struct FrameScore {
  FrameId frame = 0;
  std::optional<double> face;       // largest detected face, pixels
  std::optional<double> person;     // max person-detection confidence
  std::optional<double> emptiness;  // empty-scene classifier probability
};

inline void validate(const FrameScore& s) {
  const auto id = std::to_string(s.frame);
  if (!s.face || !s.person || !s.emptiness) {
    throw Error(ErrorKind::incomplete_scoring, "frame " + id + " is missing a score");
  }
  if (!std::isfinite(*s.face) || !std::isfinite(*s.person) || !std::isfinite(*s.emptiness)) {
    throw Error(ErrorKind::invalid_score, "frame " + id + " has a non-finite score");
  }
  if (*s.face < 0.0 || *s.person < 0.0) throw Error(ErrorKind::invalid_score, "frame " + id + " has a negative score");
  if (*s.emptiness < 0.0 || *s.emptiness > 1.0) {
    throw Error(ErrorKind::invalid_score, "frame " + id + " emptiness outside [0, 1]");
  }
}

struct EmptyThresholds {
  double face = 24.0;
  double person = 0.5;
  double empty = 0.5;
};

inline bool is_empty(const FrameScore& s, const EmptyThresholds& t) {
  validate(s);
  return *s.face < t.face && *s.person < t.person && *s.emptiness > t.empty;
}

/// Ids of frames passing the cascade, in input order.
inline std::vector<FrameId> filter_empty(std::span<const FrameScore> frames, const EmptyThresholds& t) {
  std::vector<FrameId> out;
  for (const auto& f : frames) {
    if (is_empty(f, t)) out.push_back(f.frame);
  }
  return out;
}

/// One detector or classifier. Returns nothing when it has no opinion on a frame.
class FrameScorer {
 public:
  virtual ~FrameScorer() = default;
  virtual std::optional<double> score(FrameId frame) const = 0;
};

struct ScorerSet {
  const FrameScorer* face = nullptr;
  const FrameScorer* person = nullptr;
  const FrameScorer* emptiness = nullptr;
};

inline FrameScore score_frame(FrameId frame, const ScorerSet& s) {
  if (!s.face || !s.person || !s.emptiness) throw Error(ErrorKind::usage, "all three scorers are required");
  return {frame, s.face->score(frame), s.person->score(frame), s.emptiness->score(frame)};
}

inline std::vector<FrameId> filter_empty(std::span<const FrameId> frames, const ScorerSet& scorers,
                                         const EmptyThresholds& t) {
  std::vector<FrameScore> scored;
  scored.reserve(frames.size());
  for (auto f : frames) scored.push_back(score_frame(f, scorers));
  return filter_empty(scored, t);
}

// ---------------------------------------------------------------------------
// Score sidecar: precomputed detector outputs keyed by frame id.
//
//   bytes 0-7   magic "AFSCORE\0"
//   u32         version (1)
//   u32         reserved (0)
//   u64         record count
//   records     u64 frame id, f64 face, f64 person, f64 emptiness
//
// Little-endian throughout; NaN marks a missing score.

class ScoreSidecar {
 public:
  enum class Channel { face, person, emptiness };

  ScoreSidecar() = default;
  explicit ScoreSidecar(std::span<const FrameScore> scores) {
    for (const auto& s : scores) insert(s);
  }

  void insert(const FrameScore& s) {
    if (!scores_.emplace(s.frame, s).second) {
      throw Error(ErrorKind::format, "duplicate frame " + std::to_string(s.frame) + " in score sidecar");
    }
  }
  std::size_t size() const { return scores_.size(); }
  const FrameScore* find(FrameId f) const {
    auto it = scores_.find(f);
    return it == scores_.end() ? nullptr : &it->second;
  }
  std::vector<FrameScore> all() const {
    std::vector<FrameScore> out;
    for (const auto& [id, s] : scores_) out.push_back(s);
    return out;
  }

  std::string serialize() const {
    std::string out("AFSCORE\0", 8);
    put<std::uint32_t>(out, 1);
    put<std::uint32_t>(out, 0);
    put<std::uint64_t>(out, scores_.size());
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& [id, s] : scores_) {
      put<std::uint64_t>(out, id);
      put<double>(out, s.face.value_or(nan));
      put<double>(out, s.person.value_or(nan));
      put<double>(out, s.emptiness.value_or(nan));
    }
    return out;
  }

  static ScoreSidecar parse(std::string_view bytes) {
    static_assert(std::endian::native == std::endian::little);
    if (bytes.size() < 24 || bytes.substr(0, 8) != std::string_view("AFSCORE\0", 8)) {
      throw Error(ErrorKind::format, "not a score sidecar");
    }
    std::size_t pos = 8;
    if (get<std::uint32_t>(bytes, pos) != 1) throw Error(ErrorKind::format, "unsupported sidecar version");
    get<std::uint32_t>(bytes, pos);
    const auto n = get<std::uint64_t>(bytes, pos);
    if (n > (bytes.size() - pos) / 32 || bytes.size() - pos != n * 32) {
      throw Error(ErrorKind::format, "sidecar length does not match its record count");
    }
    ScoreSidecar out;
    auto opt = [](double v) { return std::isnan(v) ? std::nullopt : std::optional<double>(v); };
    for (std::uint64_t i = 0; i < n; ++i) {
      FrameScore s;
      s.frame = get<std::uint64_t>(bytes, pos);
      s.face = opt(get<double>(bytes, pos));
      s.person = opt(get<double>(bytes, pos));
      s.emptiness = opt(get<double>(bytes, pos));
      out.insert(s);
    }
    return out;
  }

  void save(const std::string& path) const { write_file_atomic(path, serialize()); }
  static ScoreSidecar load(const std::string& path) { return parse(read_file_bytes(path)); }

 private:
  template <typename T>
  static void put(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
  }
  template <typename T>
  static T get(std::string_view in, std::size_t& pos) {
    T v;
    std::memcpy(&v, in.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
  }

  std::map<FrameId, FrameScore> scores_;
};

/// Stub detector answering from one channel of a sidecar.
class SidecarScorer final : public FrameScorer {
 public:
  SidecarScorer(const ScoreSidecar& sidecar, ScoreSidecar::Channel channel) : sidecar_(&sidecar), channel_(channel) {}

  std::optional<double> score(FrameId frame) const override {
    const FrameScore* s = sidecar_->find(frame);
    if (!s) return std::nullopt;
    switch (channel_) {
      case ScoreSidecar::Channel::face: return s->face;
      case ScoreSidecar::Channel::person: return s->person;
      case ScoreSidecar::Channel::emptiness: return s->emptiness;
    }
    return std::nullopt;
  }

 private:
  const ScoreSidecar* sidecar_;
  ScoreSidecar::Channel channel_;
};

// ---------------------------------------------------------------------------
// Hard-negative refresh

struct Prediction {
  FrameId frame = 0;
  double score = 0.0;  // emptiness classifier output
};

struct LabeledFrame {
  FrameId frame = 0;
  bool empty = false;  // manual label
};

struct RefreshResult {
  std::vector<FrameId> selected;        // highest scores first
  bool truncated = false;               // fewer predictions than requested
  std::vector<LabeledFrame> corrected;  // selected frames with their manual labels
  std::vector<FrameId> unlabeled;       // selected but not yet labeled
};

/// Highest-scoring frames first; equal scores keep ascending frame id.
inline std::vector<Prediction> rank_predictions(std::span<const Prediction> predictions) {
  std::vector<Prediction> sorted(predictions.begin(), predictions.end());
  std::sort(sorted.begin(), sorted.end(), [](const Prediction& a, const Prediction& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.frame < b.frame;
  });
  return sorted;
}

inline RefreshResult hard_negative_refresh(std::span<const Prediction> predictions, std::size_t top_n,
                                           std::span<const LabeledFrame> labels) {
  for (const auto& p : predictions) {
    if (!std::isfinite(p.score)) throw Error(ErrorKind::invalid_score, "non-finite prediction score");
  }
  RefreshResult r;
  const auto ranked = rank_predictions(predictions);
  r.truncated = top_n > ranked.size();
  const std::size_t n = std::min(top_n, ranked.size());
  std::map<FrameId, bool> label_of;
  for (const auto& l : labels) label_of[l.frame] = l.empty;
  for (std::size_t i = 0; i < n; ++i) {
    const FrameId f = ranked[i].frame;
    r.selected.push_back(f);
    if (auto it = label_of.find(f); it != label_of.end()) {
      r.corrected.push_back({f, it->second});
    } else {
      r.unlabeled.push_back(f);
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Global retrieval

struct CorpusItem {
  FrameId frame = 0;
  nn::Vec features;
};

struct Match {
  FrameId frame = 0;
  double similarity = 0.0;
};

/// Corpus frames by descending cosine similarity to `query`, ties by frame id.
inline std::vector<Match> global_match(const nn::Vec& query, std::span<const CorpusItem> corpus, std::size_t top_k) {
  const double qn = query.norm();
  if (!(qn > 0.0) || !std::isfinite(qn)) throw Error(ErrorKind::invalid_feature, "query has zero norm");
  std::vector<Match> all;
  all.reserve(corpus.size());
  for (const auto& item : corpus) {
    if (item.features.size() != query.size()) throw Error(ErrorKind::shape, "feature dimensions differ");
    const double n = item.features.norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
      throw Error(ErrorKind::invalid_feature, "frame " + std::to_string(item.frame) + " has zero norm");
    }
    const double sim = item.features == query ? 1.0 : std::clamp(query.dot(item.features) / (qn * n), -1.0, 1.0);
    all.push_back({item.frame, sim});
  }
  std::sort(all.begin(), all.end(), [](const Match& a, const Match& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.frame < b.frame;
  });
  if (all.size() > top_k) all.resize(top_k);
  return all;
}

}  // namespace affordance
