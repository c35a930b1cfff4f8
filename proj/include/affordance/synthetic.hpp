#pragma once

// Synthetic sitcom-style corpus: shows made of scenes, each with a panning
// shot (people in the first frames, empty afterwards) and a static empty
// shot. The furniture under a person decides the pose archetype and the
// floor height decides the pose scale, so pose is predictable from the scene.

#include <array>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "affordance/corpus.hpp"
#include "affordance/flow.hpp"
#include "affordance/image.hpp"
#include "affordance/mining.hpp"
#include "affordance/pose.hpp"

namespace affordance::synthetic {

enum class Archetype { stand, sit, lie, reach };
inline constexpr int kArchetypes = 4;

/// Joints in units of body height, origin at the bottom center, y up is negative.
inline const Joints& archetype_joints(Archetype a) {
  static const Joints stand = {{{0.0, -1.0},   {0.0, -0.87},  {-0.11, -0.84}, {0.11, -0.84}, {-0.14, -0.65},
                                {0.14, -0.65}, {-0.15, -0.47}, {0.15, -0.47}, {-0.07, -0.5},  {0.07, -0.5},
                                {-0.07, -0.26}, {0.07, -0.26}, {-0.07, 0.0},  {0.07, 0.0},   {0.0, -0.8},
                                {0.0, -0.66},  {0.0, -0.52}}};
  static const Joints sit = {{{0.0, -1.0},  {0.0, -0.84},  {-0.12, -0.8},  {0.12, -0.8},  {0.0, -0.58},
                              {0.14, -0.6}, {0.16, -0.45}, {0.24, -0.45}, {-0.06, -0.4},  {0.06, -0.4},
                              {0.26, -0.42}, {0.34, -0.42}, {0.26, 0.0},  {0.34, 0.0},   {0.0, -0.76},
                              {0.0, -0.6},  {0.0, -0.42}}};
  static const Joints lie = {{{-0.5, -0.2},  {-0.38, -0.19}, {-0.35, -0.27}, {-0.35, -0.1}, {-0.18, -0.28},
                              {-0.18, -0.06}, {-0.02, -0.27}, {-0.02, -0.07}, {0.0, -0.23}, {0.0, -0.13},
                              {0.24, -0.22}, {0.24, -0.12},  {0.5, -0.21},   {0.5, -0.13},  {-0.3, -0.18},
                              {-0.15, -0.18}, {0.0, -0.18}}};
  static const Joints reach = {{{0.0, -0.8},   {0.0, -0.7},   {-0.11, -0.67}, {0.11, -0.67}, {-0.14, -0.84},
                                {0.14, -0.84}, {-0.12, -1.0}, {0.12, -1.0},   {-0.07, -0.4}, {0.07, -0.4},
                                {-0.07, -0.21}, {0.07, -0.21}, {-0.07, 0.0},  {0.07, 0.0},  {0.0, -0.64},
                                {0.0, -0.52},  {0.0, -0.42}}};
  switch (a) {
    case Archetype::stand: return stand;
    case Archetype::sit: return sit;
    case Archetype::lie: return lie;
    case Archetype::reach: return reach;
  }
  return stand;
}

/// A pose of body height `h` standing (or sitting, lying) at `foot`.
inline Pose place_archetype(Archetype a, Point2 foot, double h, double jitter, bool mirror, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, jitter);
  const Joints& base = archetype_joints(a);
  Joints j;
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    const double x = mirror ? -base[i].x : base[i].x;
    j[i] = foot + h * Point2{x + n(rng), base[i].y + n(rng)};
  }
  return Pose(j);
}

struct Zone {
  Archetype kind = Archetype::stand;
  double x0 = 0, x1 = 0;  // world columns
  double floor = 0;       // world row where feet rest
};

inline double zone_texture(const Zone& z, double x, double y) {
  switch (z.kind) {
    case Archetype::sit: return std::fmod(std::floor(y / 3.0), 2.0) == 0.0 ? 0.75 : 0.3;
    case Archetype::lie: return std::fmod(std::floor(x / 5.0) + std::floor(y / 5.0), 2.0) == 0.0 ? 0.85 : 0.15;
    case Archetype::reach: return std::fmod(std::floor(x / 3.0), 2.0) == 0.0 ? 0.7 : 0.2;
    case Archetype::stand: return 0.55 + 0.1 * std::sin(y / 7.0);
  }
  return 0.5;
}

struct FixtureOptions {
  std::uint64_t seed = 1;
  int shows = 7;
  int scenes_per_show = 3;
  int width = 160;
  int height = 120;
  int pan_frames = 12;      // frames in the panning shot
  int occupied_frames = 6;  // leading frames with a person
  int static_frames = 4;    // empty frames in the static shot
  double pan_speed = 1.5;   // px per frame, content moves left
  int people_per_frame = 2;
};

struct SceneLayout {
  std::string show, scene;
  std::vector<Zone> zones;
  double tone = 0.0;
};

/// Rendered world row y at world column x.
inline double world_pixel(const SceneLayout& s, double x, double y) {
  for (const auto& z : s.zones) {
    if (x >= z.x0 && x < z.x1) {
      if (y > z.floor) return 0.35 + s.tone;
      if (y >= z.floor - 45.0) return zone_texture(z, x, y) + s.tone;
    }
  }
  return 0.45 + 0.1 * (y / 120.0) + s.tone;
}

inline Image render_frame(const SceneLayout& s, int w, int h, double offset, std::mt19937_64& rng,
                          std::span<const Pose> people = {}) {
  std::normal_distribution<double> noise(0.0, 0.01);
  Image img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      // Box-average two samples so sub-pixel offsets move content smoothly.
      const double v = 0.5 * (world_pixel(s, x + offset, y) + world_pixel(s, x + offset + 0.5, y));
      img(x, y) = std::clamp(v + noise(rng), 0.0, 1.0);
    }
  }
  for (const auto& p : people) {
    for (const auto& j : p.joints()) {
      for (int dy = -2; dy <= 2; ++dy) {
        for (int dx = -2; dx <= 2; ++dx) {
          const int x = static_cast<int>(std::lround(j.x)) + dx, y = static_cast<int>(std::lround(j.y)) + dy;
          if (x >= 0 && y >= 0 && x < w && y < h) img(x, y) = 0.05;
        }
      }
    }
  }
  return img;
}

inline double body_height(double floor, int frame_height) {
  // Perspective: people lower in the frame are closer and taller.
  const double t = std::clamp((floor / frame_height - 0.7) / 0.25, 0.0, 1.0);
  return frame_height * (0.3 + 0.3 * t);
}

inline std::string show_name(int i) {
  static const char* kNames[] = {"alder", "birch", "cedar", "dogwood", "elm", "fir", "ginkgo", "hazel", "ironwood"};
  return i < 9 ? kNames[i] : "show" + std::to_string(i);
}

/// Write a complete corpus (frames, flows, score sidecar, detections, index)
/// under `dir` and return the index path.
inline std::string make_fixture(const std::string& dir, const FixtureOptions& o = {}) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "frames");
  fs::create_directories(fs::path(dir) / "flows");
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Corpus corpus;
  corpus.root = dir;
  corpus.scores = "scores.bin";
  ScoreSidecar scores;
  FrameId next_frame = 1;
  const double world_w = o.width + o.pan_speed * (o.pan_frames - 1) + 1.0;

  auto add_frame = [&](const SceneLayout& s, const std::string& shot, int index, const Image& img) {
    CorpusFrame f{next_frame++, s.show, s.scene, shot, static_cast<std::size_t>(index), "", o.width, o.height};
    f.image = "frames/" + shot + "_" + std::to_string(index) + ".pgm";
    write_pgm(img, (fs::path(dir) / f.image).string());
    corpus.frames.push_back(f);
    return f.id;
  };

  for (int show = 0; show < o.shows; ++show) {
    for (int sc = 0; sc < o.scenes_per_show; ++sc) {
      SceneLayout s;
      s.show = show_name(show);
      s.scene = s.show + "_s" + std::to_string(sc);
      s.tone = 0.08 * (u(rng) - 0.5);
      std::array<int, kArchetypes> kinds{0, 1, 2, 3};
      std::shuffle(kinds.begin(), kinds.end(), rng);
      const double band = world_w / 3.0;
      for (int z = 0; z < 3; ++z) {
        s.zones.push_back({static_cast<Archetype>(kinds[z]), z * band, (z + 1) * band,
                           o.height * (0.72 + 0.22 * u(rng))});
      }

      // Panning shot.
      const std::string pan = s.scene + "_pan";
      for (int i = 0; i < o.pan_frames; ++i) {
        const double offset = o.pan_speed * i;
        std::vector<Pose> people;
        if (i < o.occupied_frames) {
          for (int p = 0; p < o.people_per_frame; ++p) {
            const Zone& z = s.zones[static_cast<std::size_t>(rng() % s.zones.size())];
            const double h = body_height(z.floor, o.height);
            const double margin = z.kind == Archetype::lie ? 0.5 * h : 0.2 * h;
            // Keep the person visible in every frame of the pan.
            const double lo = std::max(z.x0, o.pan_speed * (o.pan_frames - 1) + margin + 2);
            const double hi = std::min(z.x1, o.width - margin - 2);
            const double fx = hi > lo ? lo + (hi - lo) * u(rng) : 0.5 * (z.x0 + z.x1);
            const double height = z.kind == Archetype::lie ? 0.8 * h : h;
            const Pose world = place_archetype(z.kind, {fx, z.floor}, height, 0.015, u(rng) < 0.5, rng);
            people.push_back(translate(world, {-offset, 0}));
          }
        }
        const Image img = render_frame(s, o.width, o.height, offset, rng, people);
        const FrameId id = add_frame(s, pan, i, img);
        const bool occupied = !people.empty();
        const FrameScore score{id, occupied ? 25.0 + 25.0 * u(rng) : 0.0, occupied ? 0.7 + 0.3 * u(rng) : 0.2 * u(rng),
                       occupied ? 0.3 * u(rng) : 0.7 + 0.3 * u(rng)};
        scores.insert(score);
        for (const auto& p : people) {
          bool inside = true;
          for (const auto& j : p.joints()) inside = inside && j.x >= 0 && j.y >= 0 && j.x <= o.width && j.y <= o.height;
          if (inside) corpus.detections.push_back({id, p});
        }
      }
      for (int i = 0; i + 1 < o.pan_frames; ++i) {
        CorpusFlow fl{pan, static_cast<std::size_t>(i), "flows/" + pan + "_fwd_" + std::to_string(i) + ".flo",
                      "flows/" + pan + "_bwd_" + std::to_string(i) + ".flo"};
        write_flo(FlowField::uniform(o.width, o.height, {-o.pan_speed, 0}), (fs::path(dir) / fl.forward).string());
        write_flo(FlowField::uniform(o.width, o.height, {o.pan_speed, 0}), (fs::path(dir) / fl.backward).string());
        corpus.flows.push_back(fl);
      }

      // Static shot, all empty; its last frame carries a poster face that
      // the cascade should reject.
      const std::string still = s.scene + "_static";
      for (int i = 0; i < o.static_frames; ++i) {
        const FrameId id = add_frame(s, still, i, render_frame(s, o.width, o.height, 0.0, rng));
        const bool poster = i + 1 == o.static_frames;
        scores.insert({id, poster ? 40.0 : 0.0, 0.2 * u(rng), 0.7 + 0.3 * u(rng)});
      }
    }
  }
  scores.save((fs::path(dir) / corpus.scores).string());
  const std::string index = (fs::path(dir) / "corpus.tsv").string();
  write_corpus(corpus, index);
  return index;
}

}  // namespace affordance::synthetic
