#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "affordance/error.hpp"

namespace affordance::nn {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Named, ordered parameter slots. Networks refer to slots by index, so two
/// networks built over the same slot indices share those parameters.
class ParameterStore {
 public:
  struct Slot {
    std::string name;
    Mat value;
  };

  std::size_t add(std::string name, Mat value) {
    if (find(name) != npos) throw Error(ErrorKind::state, "duplicate parameter slot " + name);
    slots_.push_back({std::move(name), std::move(value)});
    return slots_.size() - 1;
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  std::size_t find(const std::string& name) const {
    for (std::size_t i = 0; i < slots_.size(); ++i) {
      if (slots_[i].name == name) return i;
    }
    return npos;
  }

  std::size_t index(const std::string& name) const {
    const auto i = find(name);
    if (i == npos) throw Error(ErrorKind::not_found, "no parameter slot " + name);
    return i;
  }

  std::size_t size() const { return slots_.size(); }
  const Slot& slot(std::size_t i) const { return slots_.at(i); }
  Mat& operator[](std::size_t i) { return slots_.at(i).value; }
  const Mat& operator[](std::size_t i) const { return slots_.at(i).value; }
  Mat& operator[](const std::string& name) { return slots_[index(name)].value; }
  const Mat& operator[](const std::string& name) const { return slots_[index(name)].value; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& s : slots_) n += static_cast<std::size_t>(s.value.size());
    return n;
  }

  /// Same names and shapes, all zeros.
  ParameterStore zeros_like() const {
    ParameterStore z;
    for (const auto& s : slots_) z.slots_.push_back({s.name, Mat::Zero(s.value.rows(), s.value.cols())});
    return z;
  }

  void set_zero() {
    for (auto& s : slots_) s.value.setZero();
  }

  bool all_finite() const {
    for (const auto& s : slots_) {
      if (!s.value.allFinite()) return false;
    }
    return true;
  }

  bool same_layout(const ParameterStore& other) const {
    if (other.slots_.size() != slots_.size()) return false;
    for (std::size_t i = 0; i < slots_.size(); ++i) {
      const auto& a = slots_[i];
      const auto& b = other.slots_[i];
      if (a.name != b.name || a.value.rows() != b.value.rows() || a.value.cols() != b.value.cols()) return false;
    }
    return true;
  }

  friend bool operator==(const ParameterStore& a, const ParameterStore& b) {
    if (!a.same_layout(b)) return false;
    for (std::size_t i = 0; i < a.slots_.size(); ++i) {
      if (a.slots_[i].value != b.slots_[i].value) return false;
    }
    return true;
  }

 private:
  std::vector<Slot> slots_;
};

}  // namespace affordance::nn
