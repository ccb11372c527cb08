#pragma once

// Minimum l1-norm solution of A s = x as the linear program
//
//   min 1^T (u + v)   s.t.  A (u - v) = x,  u, v >= 0,
//
// solved with a primal-dual path-following interior-point method using
// Mehrotra's predictor-corrector. The Newton systems are reduced to the
// n x n normal equations A diag(d_u + d_v) A^T dy = rhs.

#include "ide/baselines.hpp"
#include "ide/core.hpp"
#include "ide/metrics.hpp"
#include "ide/problem.hpp"
#include "ide/report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace ide {

struct LpConfig {
  int max_iterations = 200;
  double feasibility_tol = 1e-8;
  double gap_tol = 1e-8;
  /// Fraction of the distance to the boundary taken by each step.
  double step_fraction = 0.995;

  void validate() const {
    if (max_iterations < 1) throw Error(ErrorCode::invalid_params, "max_iterations must be >= 1");
    if (!(feasibility_tol > 0.0) || !(gap_tol > 0.0))
      throw Error(ErrorCode::invalid_params, "LP tolerances must be positive");
    if (!(step_fraction > 0.0 && step_fraction < 1.0))
      throw Error(ErrorCode::invalid_params, "step_fraction must lie in (0,1)");
  }
};

/// Failure of the LP solver; carries the best iterate reached.
class LpFailure : public Error {
 public:
  LpFailure(ErrorCode code, const std::string& what, SolveReport partial)
      : Error(code, what), partial_(std::move(partial)) {}
  const SolveReport& partial() const noexcept { return partial_; }

 private:
  SolveReport partial_;
};

struct LpCertificate {
  double primal_infeasibility = 0.0;  ///< ||A(u - v) - x||_inf
  double dual_infeasibility = 0.0;    ///< ||1 - [A^T y; -A^T y] - w||_inf
  double relative_gap = 0.0;
  int iterations = 0;
};

namespace detail {

/// Largest alpha with v + alpha * dv >= 0 (infinite when dv >= 0).
inline double max_step(const Vector& v, const Vector& dv) {
  double alpha = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < v.size(); ++i)
    if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
  return alpha;
}

class BasisPursuitIpm {
 public:
  BasisPursuitIpm(const SparseProblem& problem, const LpConfig& config)
      : a_(problem.a()), x_(problem.mixture()), config_(config), m_(a_.cols()), n_(a_.rows()) {}

  LpCertificate solve(SolveReport& report, const Vector* truth) {
    const auto setup_start = Clock::now();
    initial_point();
    LpCertificate cert;
    const double xinf = x_.lpNorm<Eigen::Infinity>();
    double& elapsed = elapsed_;
    elapsed = seconds_since(setup_start);
    for (int it = 0; it <= config_.max_iterations; ++it) {
      const auto iter_start = Clock::now();
      residuals();
      cert.primal_infeasibility = rp_.lpNorm<Eigen::Infinity>();
      cert.dual_infeasibility = rd_.lpNorm<Eigen::Infinity>();
      const double primal_obj = z_.sum();
      const double dual_obj = x_.dot(y_);
      cert.relative_gap = std::abs(primal_obj - dual_obj) / (1.0 + std::abs(primal_obj));
      cert.iterations = it;
      if (cert.primal_infeasibility <= config_.feasibility_tol * (1.0 + xinf) &&
          cert.dual_infeasibility <= config_.feasibility_tol * 2.0 &&
          cert.relative_gap <= config_.gap_tol) {
        elapsed += seconds_since(iter_start);
        return cert;
      }
      if (it == config_.max_iterations) break;
      step();
      const double iter_seconds = seconds_since(iter_start);
      elapsed += iter_seconds;
      record(report, it + 1, iter_seconds, elapsed, truth);
    }
    throw LpFailure(ErrorCode::max_iterations_exceeded,
                    "interior point did not converge in " +
                        std::to_string(config_.max_iterations) + " iterations",
                    finish(report));
  }

  Vector solution() const { return z_.head(m_) - z_.tail(m_); }

  SolveReport& finish(SolveReport& report) const {
    report.estimate = solution();
    return report;
  }

  const Vector& dual() const noexcept { return y_; }
  double elapsed() const noexcept { return elapsed_; }

 private:
  // Atilde v for v = [v_u; v_v] is A (v_u - v_v).
  Vector apply(const Vector& v) const { return a_ * (v.head(m_) - v.tail(m_)); }
  Vector apply_t(const Vector& y) const {
    Vector out(2 * m_);
    out.head(m_) = a_.transpose() * y;
    out.tail(m_) = -out.head(m_);
    return out;
  }

  void factor_normal(const Vector& d) {
    const Vector combined = d.head(m_) + d.tail(m_);
    const Matrix scaled = a_ * combined.cwiseSqrt().asDiagonal();
    Matrix normal = Matrix::Zero(n_, n_);
    normal.selfadjointView<Eigen::Lower>().rankUpdate(scaled);
    llt_.compute(normal);
    if (llt_.info() != Eigen::Success) {
      // Late iterations can push tiny pivots negative through roundoff.
      const double shift = 1e-14 * normal.diagonal().maxCoeff();
      normal.diagonal().array() += shift;
      llt_.compute(normal);
      if (llt_.info() != Eigen::Success)
        throw Error(ErrorCode::numerical_failure, "normal equations became singular");
    }
  }

  /// Newton direction for complementarity target rc (W dz + Z dw = rc).
  void direction(const Vector& d, const Vector& rc, Vector& dz, Vector& dy, Vector& dw) const {
    const Vector q = d.cwiseProduct(rd_) - rc.cwiseQuotient(w_);
    dy = llt_.solve(rp_ + apply(q));
    const Vector aty = apply_t(dy);
    dz = d.cwiseProduct(aty) - q;
    dw = rd_ - aty;
  }

  void initial_point() {
    Matrix gram = Matrix::Zero(n_, n_);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(a_);
    Eigen::LLT<Matrix> llt(gram);
    if (llt.info() != Eigen::Success)
      throw Error(ErrorCode::numerical_failure, "A A^T is not positive definite");
    const Vector half_mof = 0.5 * (a_.transpose() * llt.solve(x_));
    z_.resize(2 * m_);
    z_.head(m_) = half_mof;
    z_.tail(m_) = -half_mof;
    y_ = Vector::Zero(n_);
    w_ = Vector::Ones(2 * m_);
    z_.array() += std::max(-1.5 * z_.minCoeff(), 0.0);
    const double zw = z_.dot(w_);
    const double z_shift = 0.5 * zw / w_.sum();
    const double w_shift = 0.5 * zw / z_.sum();
    z_.array() += z_shift;
    w_.array() += w_shift;
    if (!(z_.minCoeff() > 0.0)) z_.array() += 1.0;
  }

  void residuals() {
    rp_ = x_ - apply(z_);
    rd_ = Vector::Ones(2 * m_) - apply_t(y_) - w_;
  }

  void step() {
    const Index total = 2 * m_;
    const double mu = z_.dot(w_) / static_cast<double>(total);
    const Vector d = z_.cwiseQuotient(w_);
    factor_normal(d);

    Vector dz_aff, dy_aff, dw_aff;
    direction(d, -z_.cwiseProduct(w_), dz_aff, dy_aff, dw_aff);
    const double ap_aff = std::min(1.0, max_step(z_, dz_aff));
    const double ad_aff = std::min(1.0, max_step(w_, dw_aff));
    const double mu_aff =
        (z_ + ap_aff * dz_aff).dot(w_ + ad_aff * dw_aff) / static_cast<double>(total);
    const double sigma = std::pow(mu_aff / mu, 3);

    const Vector rc = Vector::Constant(total, sigma * mu) - z_.cwiseProduct(w_) -
                      dz_aff.cwiseProduct(dw_aff);
    Vector dz, dy, dw;
    direction(d, rc, dz, dy, dw);
    const double ap = std::min(1.0, config_.step_fraction * max_step(z_, dz));
    const double ad = std::min(1.0, config_.step_fraction * max_step(w_, dw));
    z_ += ap * dz;
    y_ += ad * dy;
    w_ += ad * dw;
  }

  void record(SolveReport& report, int it, double iter_seconds, double elapsed,
              const Vector* truth) const {
    IterationTrace trace;
    trace.iteration = it;
    const Vector s = solution();
    trace.k_alpha = count_above(s);
    if (truth) trace.snr = spatial_snr(*truth, s);
    trace.residual_rel = residual_ratio(a_, x_, s);
    trace.iteration_seconds = iter_seconds;
    trace.elapsed_seconds = elapsed;
    report.traces.push_back(std::move(trace));
  }

  const Matrix& a_;
  const Vector& x_;
  LpConfig config_;
  Index m_;
  Index n_;
  Vector z_, y_, w_;
  Vector rp_, rd_;
  Eigen::LLT<Matrix> llt_;
  double elapsed_ = 0.0;
};

}  // namespace detail

struct LpResult {
  SolveReport report;
  LpCertificate certificate;
  Vector dual;
};

/// Basis pursuit with the optimality certificate of the final iterate.
inline LpResult lp_solve_certified(const SparseProblem& problem, const LpConfig& config = {}) {
  config.validate();
  SolveReport report;
  report.algorithm = "lp";
  const Vector* truth = problem.truth() ? &problem.truth()->values : nullptr;
  detail::BasisPursuitIpm ipm(problem, config);
  LpCertificate cert = ipm.solve(report, truth);
  ipm.finish(report);
  // Per-iteration diagnostics are excluded from the solver time.
  report.total_seconds = ipm.elapsed();
  if (report.traces.empty()) {
    IterationTrace trace;
    trace.k_alpha = count_above(report.estimate);
    if (truth) trace.snr = spatial_snr(*truth, report.estimate);
    trace.residual_rel = residual_ratio(problem.a(), problem.mixture(), report.estimate);
    trace.iteration_seconds = trace.elapsed_seconds = report.total_seconds;
    report.traces.push_back(std::move(trace));
  }
  report.traces.back().estimate = report.estimate;
  return {std::move(report), cert, ipm.dual()};
}

inline SolveReport lp_solve(const SparseProblem& problem, const LpConfig& config = {}) {
  return lp_solve_certified(problem, config).report;
}

}  // namespace ide
