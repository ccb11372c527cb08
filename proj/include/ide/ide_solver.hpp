#pragma once

// Iterative detection-estimation driver: starting from the zero estimate,
// alternate a detection step (activity vs. threshold) with an estimation
// step restricted by the detected active set.

#include "ide/core.hpp"
#include "ide/detection.hpp"
#include "ide/estimation.hpp"
#include "ide/metrics.hpp"
#include "ide/problem.hpp"
#include "ide/report.hpp"
#include "ide/schedule.hpp"

#include <cmath>
#include <optional>
#include <string>

namespace ide {

enum class IdeVariant { ide_s, ide_x };
enum class DetectionMode { threshold, topk };

constexpr std::string_view to_string(IdeVariant v) {
  return v == IdeVariant::ide_s ? "ide_s" : "ide_x";
}

struct IdeOptions {
  IdeVariant variant = IdeVariant::ide_s;
  DetectionMode detection = DetectionMode::threshold;
  SSpaceMethod s_method = SSpaceMethod::automatic;
  /// Active-set size for top-k detection; 0 means floor(n/2).
  Index topk = 0;
  /// Scale thresholds by ||A^T x||_inf for sources not normalized to unit peak.
  bool unnormalized = false;
  /// Store the estimate in every trace (otherwise only the final one).
  bool record_estimates = true;
  /// Retries of a numerically singular iteration, each dropping 10% of the
  /// active set.
  int max_retries = 3;
};

namespace detail {

inline bool is_numerical(ErrorCode c) {
  return c == ErrorCode::singular_system || c == ErrorCode::rank_deficient_active_set ||
         c == ErrorCode::singular_gram;
}

}  // namespace detail

inline SolveReport ide_solve(const SparseProblem& problem, const ThresholdSchedule& schedule,
                             const IdeOptions& options = {}) {
  const Index n = problem.n();
  const Index m = problem.m();
  SolveReport report;
  report.algorithm = std::string(to_string(options.variant));

  const auto start = Clock::now();
  double algorithm_seconds = 0.0;

  // Setup that every iteration reuses: the Gram factor of the closed_form_2
  // route for IDE-s. Counted in the solve time.
  std::optional<GramFactor> gram;
  if (options.variant == IdeVariant::ide_s && options.s_method != SSpaceMethod::closed_form_1 &&
      options.s_method != SSpaceMethod::kkt_direct) {
    gram.emplace(problem.a());
  }
  double scale = 1.0;
  if (options.unnormalized) {
    const double peak = (problem.a().transpose() * problem.mixture()).cwiseAbs().maxCoeff();
    if (peak > 0.0) scale = peak;
  }
  const Index topk = options.topk > 0 ? options.topk : n / 2;
  algorithm_seconds += seconds_since(start);

  Vector estimate = Vector::Zero(m);
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    const auto iter_start = Clock::now();
    const double epsilon = schedule[k] * scale;
    const Vector g = activity(problem, estimate);
    ActiveSetPartition part = options.detection == DetectionMode::threshold
                                  ? detect(g, epsilon)
                                  : detect_topk(g, std::min(topk, n - 1), n);
    const Index detected = part.k_alpha();
    auto capped = cap_active(part, g, n - 1);
    part = std::move(capped.partition);

    Vector next;
    for (int attempt = 0;; ++attempt) {
      try {
        next = options.variant == IdeVariant::ide_s
                   ? estimate_s_space(problem, part, options.s_method, gram ? &*gram : nullptr)
                   : estimate_x_space(problem, part);
        break;
      } catch (const Error& e) {
        if (!detail::is_numerical(e.code()) || attempt >= options.max_retries || part.k_alpha() == 0)
          throw Error(e.code(), "iteration " + std::to_string(k + 1) + " with k_alpha=" +
                                    std::to_string(part.k_alpha()) + ": " + e.what());
        const Index reduced = part.k_alpha() - std::max<Index>(1, part.k_alpha() / 10);
        report.warnings.push_back("iteration " + std::to_string(k + 1) +
                                  ": singular estimation step, k_alpha reduced from " +
                                  std::to_string(part.k_alpha()) + " to " +
                                  std::to_string(reduced));
        part = reduced > 0 ? cap_active(part, g, reduced).partition
                           : ActiveSetPartition(std::vector<bool>(static_cast<std::size_t>(m), false));
      }
    }
    estimate = std::move(next);
    const double iter_seconds = seconds_since(iter_start);
    algorithm_seconds += iter_seconds;

    if (capped.capped)
      report.warnings.push_back("iteration " + std::to_string(k + 1) + ": k_alpha capped from " +
                                std::to_string(detected) + " to " + std::to_string(n - 1));
    if (options.variant == IdeVariant::ide_x && part.k_alpha() == 0 &&
        problem.mixture().squaredNorm() > 0.0)
      report.warnings.push_back("iteration " + std::to_string(k + 1) +
                                ": empty active set, estimate is zero");

    IterationTrace trace;
    trace.iteration = static_cast<int>(k + 1);
    trace.epsilon = epsilon;
    trace.k_alpha = part.k_alpha();
    if (options.record_estimates || k + 1 == schedule.size()) trace.estimate = estimate;
    if (problem.truth()) trace.snr = spatial_snr(problem.truth()->values, estimate);
    trace.residual_rel = residual_ratio(problem.a(), problem.mixture(), estimate);
    trace.iteration_seconds = iter_seconds;
    trace.elapsed_seconds = algorithm_seconds;
    report.traces.push_back(std::move(trace));
  }
  report.estimate = std::move(estimate);
  report.total_seconds = algorithm_seconds;
  return report;
}

}  // namespace ide
