#pragma once

// Video corpus index consumed by the mining stage.
//
//   #affordance-corpus v1
//   scores     <sidecar path>
//   frame      <id> <show> <scene> <shot> <index in shot> <image path> <width>x<height>
//   flow       <shot> <index i> <forward i -> i+1 .flo> <backward i+1 -> i .flo>
//   detection  <frame id> <34 comma-separated joint coordinates>
//
// Fields are tab-separated; paths are relative to the index file's directory.

#include <algorithm>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "affordance/dataset.hpp"
#include "affordance/error.hpp"
#include "affordance/fileio.hpp"
#include "affordance/mining.hpp"
#include "affordance/pose.hpp"
#include "affordance/textio.hpp"

namespace affordance {

struct CorpusFrame {
  FrameId id = 0;
  std::string show, scene, shot;
  std::size_t index = 0;
  std::string image;
  int width = 0, height = 0;
};

struct CorpusFlow {
  std::string shot;
  std::size_t index = 0;
  std::string forward, backward;
};

struct Detection {
  FrameId frame = 0;
  Pose pose;
};

struct Corpus {
  std::string root;  // directory the relative paths resolve against
  std::string scores;
  std::vector<CorpusFrame> frames;
  std::vector<CorpusFlow> flows;
  std::vector<Detection> detections;

  std::string resolve(const std::string& rel) const { return (std::filesystem::path(root) / rel).string(); }

  const CorpusFrame& frame(FrameId id) const {
    for (const auto& f : frames) {
      if (f.id == id) return f;
    }
    throw Error(ErrorKind::not_found, "frame " + std::to_string(id) + " is not in the corpus");
  }

  /// Frames of one shot ordered by index.
  std::vector<CorpusFrame> shot_frames(const std::string& shot) const {
    std::vector<CorpusFrame> out;
    for (const auto& f : frames) {
      if (f.shot == shot) out.push_back(f);
    }
    std::sort(out.begin(), out.end(), [](auto& a, auto& b) { return a.index < b.index; });
    return out;
  }
};

inline std::string serialize_corpus(const Corpus& c) {
  std::string out = "#affordance-corpus v1\n";
  out += "scores\t" + c.scores + "\n";
  for (const auto& f : c.frames) {
    out += "frame\t" + std::to_string(f.id) + "\t" + f.show + "\t" + f.scene + "\t" + f.shot + "\t" +
           std::to_string(f.index) + "\t" + f.image + "\t" + std::to_string(f.width) + "x" + std::to_string(f.height) + "\n";
  }
  for (const auto& f : c.flows) {
    out += "flow\t" + f.shot + "\t" + std::to_string(f.index) + "\t" + f.forward + "\t" + f.backward + "\n";
  }
  for (const auto& d : c.detections) {
    out += "detection\t" + std::to_string(d.frame) + "\t" + detail::join_numbers(detail::joint_values(d.pose.joints())) + "\n";
  }
  return out;
}

inline Corpus parse_corpus(std::string_view text, std::string root) {
  Corpus c;
  c.root = std::move(root);
  const auto lines = text::split(text, '\n');
  if (lines.empty() || lines[0] != "#affordance-corpus v1") throw FormatError(1, "missing corpus header");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (lines[i].empty()) continue;
    const auto f = text::split(lines[i], '\t');
    auto need = [&](std::size_t n) {
      if (f.size() != n) throw FormatError(line_no, std::string(f[0]) + ": expected " + std::to_string(n) + " fields");
    };
    if (f[0] == "scores") {
      need(2);
      c.scores = std::string(f[1]);
    } else if (f[0] == "frame") {
      need(8);
      CorpusFrame fr;
      const auto x = f[7].find('x');
      if (!text::parse_int(f[1], fr.id) || !text::parse_int(f[5], fr.index) || x == std::string_view::npos ||
          !text::parse_int(f[7].substr(0, x), fr.width) || !text::parse_int(f[7].substr(x + 1), fr.height)) {
        throw FormatError(line_no, "frame: bad number");
      }
      fr.show = std::string(f[2]);
      fr.scene = std::string(f[3]);
      fr.shot = std::string(f[4]);
      fr.image = std::string(f[6]);
      c.frames.push_back(fr);
    } else if (f[0] == "flow") {
      need(5);
      CorpusFlow fl;
      if (!text::parse_int(f[2], fl.index)) throw FormatError(line_no, "flow: bad index");
      fl.shot = std::string(f[1]);
      fl.forward = std::string(f[3]);
      fl.backward = std::string(f[4]);
      c.flows.push_back(fl);
    } else if (f[0] == "detection") {
      need(3);
      Detection d;
      if (!text::parse_int(f[1], d.frame)) throw FormatError(line_no, "detection: bad frame id");
      const auto v = detail::parse_numbers(f[2], 2 * kNumJoints, line_no, "detection");
      try {
        d.pose = Pose(detail::joints_from(v));
      } catch (const Error& e) {
        throw FormatError(line_no, e.what());
      }
      c.detections.push_back(d);
    } else {
      throw FormatError(line_no, "unknown entry '" + std::string(f[0]) + "'");
    }
  }
  return c;
}

inline Corpus read_corpus(const std::string& path) {
  return parse_corpus(read_file_bytes(path), std::filesystem::path(path).parent_path().string());
}

inline void write_corpus(const Corpus& c, const std::string& path) { write_file_atomic(path, serialize_corpus(c)); }

}  // namespace affordance
