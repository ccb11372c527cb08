#pragma once

#include "ide/core.hpp"
#include "ide/problem.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <type_traits>
#include <utility>
#include <vector>

namespace ide {

/// A power ratio, with exact reconstruction represented by a flag rather
/// than a sentinel value.
struct SnrMeasurement {
  double linear = 0.0;
  bool infinite = false;

  double db() const {
    if (infinite) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(linear);
  }

  static SnrMeasurement from_energies(double signal, double error) {
    if (error == 0.0) return {std::numeric_limits<double>::infinity(), true};
    return {signal / error, false};
  }
  static SnrMeasurement from_db(double db) {
    if (std::isinf(db) && db > 0) return {std::numeric_limits<double>::infinity(), true};
    return {std::pow(10.0, db / 10.0), false};
  }
};

/// ||s||^2 / ||s - s_hat||^2 over one sample.
inline SnrMeasurement spatial_snr(const Vector& truth, const Vector& estimate) {
  if (truth.size() != estimate.size())
    throw Error(ErrorCode::dimension_mismatch, "spatial_snr length mismatch");
  const double signal = truth.squaredNorm();
  if (signal == 0.0) throw Error(ErrorCode::zero_truth, "truth vector is zero");
  return SnrMeasurement::from_energies(signal, (truth - estimate).squaredNorm());
}

/// Per-source SNR over time; columns are samples. A source with zero
/// energy across all samples gets `linear = NaN` instead of failing the batch.
inline std::vector<SnrMeasurement> temporal_snr(const Matrix& truth, const Matrix& estimate) {
  if (truth.rows() != estimate.rows() || truth.cols() != estimate.cols())
    throw Error(ErrorCode::dimension_mismatch, "temporal_snr shape mismatch");
  std::vector<SnrMeasurement> out;
  out.reserve(static_cast<std::size_t>(truth.rows()));
  for (Index i = 0; i < truth.rows(); ++i) {
    const double signal = truth.row(i).squaredNorm();
    if (signal == 0.0) {
      out.push_back({std::numeric_limits<double>::quiet_NaN(), false});
      continue;
    }
    out.push_back(
        SnrMeasurement::from_energies(signal, (truth.row(i) - estimate.row(i)).squaredNorm()));
  }
  return out;
}

inline double relative_approx_error(const SparseProblem& problem, const Vector& estimate) {
  const double xnorm = problem.mixture().norm();
  if (xnorm == 0.0) throw Error(ErrorCode::zero_mixture, "mixture is zero");
  return (problem.mixture() - problem.a() * estimate).norm() / xnorm;
}

/// ||A||_F^2 / ||A - A_noisy||_F^2.
inline SnrMeasurement frobenius_snr(const Matrix& a_true, const Matrix& a_noisy) {
  if (a_true.rows() != a_noisy.rows() || a_true.cols() != a_noisy.cols())
    throw Error(ErrorCode::dimension_mismatch, "frobenius_snr shape mismatch");
  return SnrMeasurement::from_energies(a_true.squaredNorm(), (a_true - a_noisy).squaredNorm());
}

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename T>
struct Timed {
  T result;
  double elapsed_seconds;
};

/// Runs `op` and measures it with the monotonic clock.
template <typename F>
auto stopwatch(F&& op) {
  using R = std::invoke_result_t<F>;
  const auto start = Clock::now();
  if constexpr (std::is_void_v<R>) {
    std::forward<F>(op)();
    return seconds_since(start);
  } else {
    R result = std::forward<F>(op)();
    return Timed<R>{std::move(result), seconds_since(start)};
  }
}

}  // namespace ide
