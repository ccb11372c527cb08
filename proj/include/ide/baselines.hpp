#pragma once

#include "ide/core.hpp"
#include "ide/metrics.hpp"
#include "ide/problem.hpp"
#include "ide/report.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace ide {

/// Number of components with magnitude above `cutoff`; the activity count
/// reported for solvers that have no detected-active set.
inline Index count_above(const Vector& s, double cutoff = 0.01) {
  return static_cast<Index>((s.array().abs() > cutoff).count());
}

inline double lp_l1_norm(const Vector& s) { return s.lpNorm<1>(); }

/// Method of frames: the minimum l2-norm solution A^T (A A^T)^-1 x.
inline SolveReport mof_solve(const SparseProblem& problem) {
  SolveReport report;
  report.algorithm = "mof";
  const auto start = Clock::now();
  const Matrix& a = problem.a();
  Matrix gram = Matrix::Zero(a.rows(), a.rows());
  gram.selfadjointView<Eigen::Lower>().rankUpdate(a);
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success || !(llt.rcond() * kMaxCondition >= 1.0))
    throw Error(ErrorCode::singular_gram, "A A^T has condition estimate above 1e12");
  report.estimate = a.transpose() * llt.solve(problem.mixture());
  report.total_seconds = seconds_since(start);

  IterationTrace trace;
  trace.iteration = 1;
  trace.k_alpha = count_above(report.estimate);
  trace.estimate = report.estimate;
  if (problem.truth()) trace.snr = spatial_snr(problem.truth()->values, report.estimate);
  trace.residual_rel = residual_ratio(a, problem.mixture(), report.estimate);
  trace.iteration_seconds = trace.elapsed_seconds = report.total_seconds;
  report.traces.push_back(std::move(trace));
  return report;
}

struct MpConfig {
  int max_iterations = 100;
  /// When false every step adds a new atom to the expansion (an atom is
  /// never selected twice); when true this is textbook matching pursuit,
  /// where re-selecting an atom accumulates into its coefficient.
  bool reselect = false;
  /// Stop once ||r|| <= residual_tol * ||x||; 0 disables.
  double residual_tol = 0.0;
  /// Steps at which the full estimate is kept in the trace (the last step
  /// is always kept).
  std::vector<int> snapshots;
};

/// Matching pursuit. One trace per step; `k_alpha` counts distinct atoms
/// in the expansion and the SNR is updated incrementally. Ties in the
/// correlation go to the lowest index. Without reselection the pursuit
/// stops early once every atom is in the expansion.
inline SolveReport mp_solve(const SparseProblem& problem, const MpConfig& config) {
  if (config.max_iterations < 1)
    throw Error(ErrorCode::invalid_params, "max_iterations must be at least 1");
  SolveReport report;
  report.algorithm = "mp";
  const Matrix& a = problem.a();
  const Vector& x = problem.mixture();
  const double xnorm = x.norm();
  const Vector* truth = problem.truth() ? &problem.truth()->values : nullptr;
  const double signal = truth ? truth->squaredNorm() : 0.0;
  double err_energy = signal;  // ||s - s_hat||^2 with s_hat = 0

  Vector s = Vector::Zero(problem.m());
  Vector r = x;
  std::vector<bool> used(static_cast<std::size_t>(problem.m()), false);
  Index distinct = 0;
  double elapsed = 0.0;
  report.traces.reserve(static_cast<std::size_t>(config.max_iterations));

  for (int t = 1; t <= config.max_iterations; ++t) {
    const auto step_start = Clock::now();
    if (config.residual_tol > 0.0 && r.norm() <= config.residual_tol * xnorm) break;
    if (!config.reselect && distinct == problem.m()) break;
    const Vector corr = a.transpose() * r;
    Index best = 0;
    double best_abs = -1.0;
    for (Index i = 0; i < corr.size(); ++i) {
      if (!config.reselect && used[static_cast<std::size_t>(i)]) continue;
      if (std::abs(corr[i]) > best_abs) {
        best_abs = std::abs(corr[i]);
        best = i;
      }
    }
    const double coef = corr[best];
    r -= coef * a.col(best);
    const double step_seconds = seconds_since(step_start);
    elapsed += step_seconds;

    if (truth) {
      const double before = (*truth)[best] - s[best];
      const double after = before - coef;
      err_energy += after * after - before * before;
    }
    s[best] += coef;
    if (!used[static_cast<std::size_t>(best)]) {
      used[static_cast<std::size_t>(best)] = true;
      ++distinct;
    }

    IterationTrace trace;
    trace.iteration = t;
    trace.k_alpha = distinct;
    if (t == config.max_iterations || (!config.reselect && distinct == problem.m()) ||
        std::find(config.snapshots.begin(), config.snapshots.end(), t) != config.snapshots.end())
      trace.estimate = s;
    if (truth) trace.snr = SnrMeasurement::from_energies(signal, std::max(err_energy, 0.0));
    trace.residual_rel = xnorm > 0.0 ? r.norm() / xnorm : r.norm();
    trace.iteration_seconds = step_seconds;
    trace.elapsed_seconds = elapsed;
    report.traces.push_back(std::move(trace));
  }
  if (!report.traces.empty() && report.traces.back().estimate.size() == 0)
    report.traces.back().estimate = s;
  // Recompute the final SNR directly so incremental drift never leaks out.
  if (truth && !report.traces.empty()) report.traces.back().snr = spatial_snr(*truth, s);
  report.estimate = std::move(s);
  report.total_seconds = elapsed;
  return report;
}

}  // namespace ide
