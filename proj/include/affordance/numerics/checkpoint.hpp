#pragma once

// Parameter checkpoint, text form:
//
//   affordance-params 1
//   slot <name> <rows> <cols>
//   <hex-float values of row 0, space separated>
//   ...
//   checksum <fnv1a64 of every preceding byte, 16 hex digits>
//
// Hex floats make the round trip bit-exact.

#include <sstream>
#include <string>

#include "affordance/fileio.hpp"
#include "affordance/hash.hpp"
#include "affordance/numerics/params.hpp"
#include "affordance/textio.hpp"

namespace affordance::nn {

inline constexpr int kCheckpointVersion = 1;

inline std::string serialize_parameters(const ParameterStore& store) {
  std::string out = "affordance-params " + std::to_string(kCheckpointVersion) + "\n";
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& s = store.slot(i);
    out += "slot " + s.name + " " + std::to_string(s.value.rows()) + " " + std::to_string(s.value.cols()) + "\n";
    for (Eigen::Index r = 0; r < s.value.rows(); ++r) {
      for (Eigen::Index c = 0; c < s.value.cols(); ++c) {
        if (c) out += ' ';
        out += text::format_hex(s.value(r, c));
      }
      out += '\n';
    }
  }
  out += "checksum " + hex64(fnv1a64(out)) + "\n";
  return out;
}

inline ParameterStore parse_parameters(std::string_view bytes) {
  const auto tail = bytes.rfind("checksum ");
  if (tail == std::string_view::npos) throw FormatError(1, "missing checksum line");
  const std::string_view body = bytes.substr(0, tail);
  std::string_view expected = bytes.substr(tail + 9);
  while (!expected.empty() && (expected.back() == '\n' || expected.back() == '\r')) expected.remove_suffix(1);
  if (hex64(fnv1a64(body)) != expected) throw Error(ErrorKind::format, "checkpoint checksum mismatch");

  auto lines = text::split(body, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty() || lines[0] != "affordance-params " + std::to_string(kCheckpointVersion)) {
    throw FormatError(1, "unrecognized checkpoint header");
  }
  ParameterStore store;
  std::size_t li = 1;
  while (li < lines.size()) {
    const auto head = text::split(lines[li], ' ');
    Eigen::Index rows = 0, cols = 0;
    if (head.size() != 4 || head[0] != "slot" || !text::parse_int(head[2], rows) || !text::parse_int(head[3], cols) ||
        rows < 0 || cols < 0) {
      throw FormatError(li + 1, "malformed slot header");
    }
    Mat value(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      ++li;
      if (li >= lines.size()) throw FormatError(li + 1, "truncated slot");
      const auto vals = text::split(lines[li], ' ');
      if (static_cast<Eigen::Index>(vals.size()) != cols) throw FormatError(li + 1, "wrong column count");
      for (Eigen::Index c = 0; c < cols; ++c) {
        if (!text::parse_double(vals[static_cast<std::size_t>(c)], value(r, c), std::chars_format::hex)) {
          throw FormatError(li + 1, "bad number");
        }
      }
    }
    store.add(std::string(head[1]), std::move(value));
    ++li;
  }
  return store;
}

inline void save_parameters(const ParameterStore& store, const std::string& path) {
  write_file_atomic(path, serialize_parameters(store));
}

/// Overwrite `store` with the checkpoint; names and shapes must match.
inline void load_parameters_into(ParameterStore& store, const std::string& path) {
  ParameterStore loaded = parse_parameters(read_file_bytes(path));
  if (!loaded.same_layout(store)) throw Error(ErrorKind::shape, "checkpoint " + path + " does not match the model layout");
  store = std::move(loaded);
}

}  // namespace affordance::nn
