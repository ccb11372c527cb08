#pragma once

#include "ide/core.hpp"

#include <initializer_list>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ide {

/// Detection thresholds, one per iteration. Values are positive, below the
/// source peak bound `k_scale`, and never increase.
class ThresholdSchedule {
 public:
  explicit ThresholdSchedule(std::vector<double> values, std::string name = {},
                             double k_scale = 1.0)
      : values_(std::move(values)), name_(std::move(name)) {
    if (values_.empty()) throw Error(ErrorCode::invalid_schedule, "schedule is empty");
    if (!(k_scale >= 1.0)) throw Error(ErrorCode::invalid_schedule, "k_scale must be >= 1");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      const double v = values_[i];
      if (!(v > 0.0 && v < k_scale))
        throw Error(ErrorCode::invalid_schedule,
                    "threshold " + std::to_string(v) + " outside (0, k_scale)");
      if (i > 0 && v > values_[i - 1])
        throw Error(ErrorCode::invalid_schedule, "thresholds must be non-increasing");
    }
  }

  const std::vector<double>& values() const noexcept { return values_; }
  const std::string& name() const noexcept { return name_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  static ThresholdSchedule exp1_short() {
    return ThresholdSchedule({0.3, 0.2, 0.1, 0.05, 0.02, 0.01}, "exp1_short");
  }
  static ThresholdSchedule general_10() {
    return ThresholdSchedule({0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1, 0.07, 0.05, 0.02}, "general_10");
  }
  static ThresholdSchedule wide_13() {
    return ThresholdSchedule(
        {0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1, 0.07, 0.05, 0.02, 0.01}, "wide_13");
  }

  /// Built-in preset by name.
  static ThresholdSchedule preset(std::string_view name) {
    if (name == "exp1_short") return exp1_short();
    if (name == "general_10") return general_10();
    if (name == "wide_13") return wide_13();
    throw Error(ErrorCode::invalid_schedule, "unknown schedule preset '" + std::string(name) + "'");
  }

 private:
  std::vector<double> values_;
  std::string name_;
};

}  // namespace ide
