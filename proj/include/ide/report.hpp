#pragma once

#include "ide/core.hpp"
#include "ide/metrics.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ide {

/// State after one iteration (or one greedy step) of a solver.
struct IterationTrace {
  int iteration = 0;
  double epsilon = 0.0;  ///< threshold used; 0 for solvers without one
  Index k_alpha = 0;     ///< detected-active count (distinct atoms for MP)
  Vector estimate;       ///< may be empty when snapshots are not recorded
  std::optional<SnrMeasurement> snr;
  double residual_rel = 0.0;
  double iteration_seconds = 0.0;
  double elapsed_seconds = 0.0;  ///< cumulative since the solve started
};

struct SolveReport {
  std::string algorithm;
  Vector estimate;
  std::vector<IterationTrace> traces;
  double total_seconds = 0.0;
  std::vector<std::string> warnings;
  bool converged = true;
};

/// ||x - A s|| / ||x||, or the absolute residual when x = 0.
inline double residual_ratio(const Matrix& a, const Vector& x, const Vector& s) {
  const double r = (x - a * s).norm();
  const double xn = x.norm();
  return xn > 0.0 ? r / xn : r;
}

}  // namespace ide
