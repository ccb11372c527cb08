#pragma once

// Estimation step of iterative detection-estimation.
//
// s-space: minimize sum_{i inactive} s_i^2 subject to A s = x.
// x-space: least-squares fit of x over the active atoms, inactive part zero.

#include "ide/core.hpp"
#include "ide/detection.hpp"
#include "ide/linalg.hpp"
#include "ide/problem.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

namespace ide {

enum class SSpaceMethod {
  closed_form_2,  ///< P = (A_i A_i^T)^-1 route; needs k_alpha <= min(n, m-n)
  closed_form_1,  ///< null-space route; needs k_alpha <= n
  kkt_direct,     ///< dense (m+n) x (m+n) KKT solve
  automatic,      ///< first of the above whose precondition holds
};

constexpr std::string_view to_string(SSpaceMethod method) {
  switch (method) {
    case SSpaceMethod::closed_form_2: return "closed_form_2";
    case SSpaceMethod::closed_form_1: return "closed_form_1";
    case SSpaceMethod::kkt_direct: return "kkt_direct";
    case SSpaceMethod::automatic: return "auto";
  }
  return "unknown";
}

/// Explicitly formed matrices of the s-space estimation step, for
/// inspection. The solvers below never form P or H themselves.
struct EstimationWorkspace {
  Matrix a_alpha;
  Matrix a_iota;
  Matrix z;        ///< orthonormal basis of null(A_alpha^T), n x (n - k_alpha)
  Matrix b_iota;   ///< Z^T A_iota
  Matrix p;        ///< (A_iota A_iota^T)^-1, empty when k_iota < n
  Matrix h;        ///< QP Hessian: identity on inactive indices, zero on active
};

inline EstimationWorkspace make_workspace(const SparseProblem& problem,
                                          const ActiveSetPartition& part) {
  EstimationWorkspace ws;
  ws.a_alpha = linalg::gather_columns(problem.a(), part.active());
  ws.a_iota = linalg::gather_columns(problem.a(), part.inactive());
  if (part.k_alpha() <= problem.n()) {
    ws.z = linalg::left_null_space(ws.a_alpha);
    ws.b_iota = ws.z.transpose() * ws.a_iota;
  }
  if (part.k_iota() >= problem.n()) {
    const Matrix gram = ws.a_iota * ws.a_iota.transpose();
    ws.p = linalg::SpdSolver(gram, "A_iota A_iota^T").solve(Matrix::Identity(problem.n(), problem.n()));
  }
  ws.h = Matrix::Zero(problem.m(), problem.m());
  for (Index i : part.inactive()) ws.h(i, i) = 1.0;
  return ws;
}

namespace detail {

inline void require_partition(const SparseProblem& problem, const ActiveSetPartition& part) {
  if (part.size() != problem.m())
    throw Error(ErrorCode::dimension_mismatch, "partition does not cover m sources");
}

inline Vector assemble(const SparseProblem& problem, const ActiveSetPartition& part,
                       const Vector& s_alpha, const Vector& s_iota) {
  Vector s = Vector::Zero(problem.m());
  linalg::scatter(s_alpha, part.active(), s);
  linalg::scatter(s_iota, part.inactive(), s);
  return s;
}

/// Null-space route with a caller-supplied basis `z` of null(A_alpha^T).
inline Vector closed_form_1_with_basis(const SparseProblem& problem,
                                       const ActiveSetPartition& part, const Matrix& z) {
  const Matrix a_alpha = linalg::gather_columns(problem.a(), part.active());
  const Matrix a_iota = linalg::gather_columns(problem.a(), part.inactive());
  const Vector& x = problem.mixture();

  Vector s_iota = Vector::Zero(part.k_iota());
  if (z.cols() > 0) {
    const Matrix b_iota = z.transpose() * a_iota;
    const Matrix bbt = b_iota * b_iota.transpose();
    const Vector zx = z.transpose() * x;
    s_iota = b_iota.transpose() * linalg::SpdSolver(bbt, "B_iota B_iota^T").solve(zx);
  }
  Vector s_alpha(0);
  if (part.k_alpha() > 0) {
    const Matrix gram = a_alpha.transpose() * a_alpha;
    const Vector rhs = a_alpha.transpose() * (x - a_iota * s_iota);
    s_alpha = linalg::SpdSolver(gram, "A_alpha^T A_alpha").solve(rhs);
  }
  return assemble(problem, part, s_alpha, s_iota);
}

}  // namespace detail

inline Vector estimate_closed_form_1(const SparseProblem& problem, const ActiveSetPartition& part) {
  detail::require_partition(problem, part);
  if (part.k_alpha() > problem.n())
    throw Error(ErrorCode::infeasible_partition, "closed_form_1 needs k_alpha <= n");
  const Matrix a_alpha = linalg::gather_columns(problem.a(), part.active());
  return detail::closed_form_1_with_basis(problem, part, linalg::left_null_space(a_alpha));
}

inline Vector estimate_closed_form_2(const SparseProblem& problem, const ActiveSetPartition& part) {
  detail::require_partition(problem, part);
  if (part.k_alpha() > std::min(problem.n(), problem.m() - problem.n()))
    throw Error(ErrorCode::infeasible_partition, "closed_form_2 needs k_alpha <= min(n, m-n)");
  const Matrix a_alpha = linalg::gather_columns(problem.a(), part.active());
  const Matrix a_iota = linalg::gather_columns(problem.a(), part.inactive());
  const Vector& x = problem.mixture();

  const linalg::SpdSolver p(a_iota * a_iota.transpose(), "A_iota A_iota^T");
  Vector s_alpha(0);
  Vector r = x;
  if (part.k_alpha() > 0) {
    const Matrix p_a_alpha = p.solve(a_alpha);
    const Matrix reduced = a_alpha.transpose() * p_a_alpha;
    const Vector rhs = p_a_alpha.transpose() * x;
    s_alpha = linalg::SpdSolver(reduced, "A_alpha^T P A_alpha").solve(rhs);
    r -= a_alpha * s_alpha;
  }
  const Vector s_iota = a_iota.transpose() * p.solve(r);
  return detail::assemble(problem, part, s_alpha, s_iota);
}

struct KktSolution {
  Vector s;
  Vector lambda;
};

inline KktSolution estimate_kkt(const SparseProblem& problem, const ActiveSetPartition& part) {
  detail::require_partition(problem, part);
  const Index n = problem.n();
  const Index m = problem.m();
  Matrix kkt = Matrix::Zero(m + n, m + n);
  for (Index i : part.inactive()) kkt(i, i) = 1.0;
  kkt.topRightCorner(m, n) = problem.a().transpose();
  kkt.bottomLeftCorner(n, m) = problem.a();
  Vector rhs = Vector::Zero(m + n);
  rhs.tail(n) = problem.mixture();

  Eigen::PartialPivLU<Matrix> lu(kkt);
  if (!(lu.rcond() * kMaxCondition >= 1.0))
    throw Error(ErrorCode::singular_system, "KKT matrix has condition estimate above 1e12");
  const Vector sol = lu.solve(rhs);
  return {sol.head(m), sol.tail(n)};
}

/// Resolves `automatic` to the concrete method used for this partition.
inline SSpaceMethod resolve_method(SSpaceMethod method, Index k_alpha, Index n, Index m) {
  if (method != SSpaceMethod::automatic) return method;
  if (k_alpha <= std::min(n, m - n)) return SSpaceMethod::closed_form_2;
  if (k_alpha <= n) return SSpaceMethod::closed_form_1;
  return SSpaceMethod::kkt_direct;
}

/// Cholesky factor G = L L^T of the full Gram matrix A A^T, computed once
/// per dictionary. With it the closed_form_2 estimate reduces to
/// k_alpha-sized work per call: since A_i A_i^T = G - A_a A_a^T, the
/// Woodbury identity gives
///
///   s_alpha = (A_a^T G^-1 A_a)^-1 A_a^T G^-1 x,
///   s_iota  = A_i^T G^-1 (x - A_a s_alpha).
///
/// Whitened columns L^-1 a_i are cached across calls, so repeated active
/// sets only pay for atoms not seen before. Not safe for concurrent use.
class GramFactor {
 public:
  explicit GramFactor(const Matrix& a) : a_(&a) {
    Matrix gram = Matrix::Zero(a.rows(), a.rows());
    gram.selfadjointView<Eigen::Lower>().rankUpdate(a);
    llt_.compute(gram);
    if (llt_.info() != Eigen::Success || !(llt_.rcond() * kMaxCondition >= 1.0))
      throw Error(ErrorCode::singular_gram, "A A^T has condition estimate above 1e12");
  }

  const Eigen::LLT<Matrix>& llt() const noexcept { return llt_; }

  Vector estimate(const SparseProblem& problem, const ActiveSetPartition& part) {
    detail::require_partition(problem, part);
    if (&problem.a() != a_ && problem.a() != *a_)
      throw Error(ErrorCode::dimension_mismatch, "Gram factor belongs to another dictionary");
    if (part.k_alpha() > std::min(problem.n(), problem.m() - problem.n()))
      throw Error(ErrorCode::infeasible_partition, "closed_form_2 needs k_alpha <= min(n, m-n)");
    const Vector& x = problem.mixture();
    const auto lower = llt_.matrixL();
    if (whitened_x_.size() != x.size() || x != mixture_) {
      mixture_ = x;
      whitened_x_ = lower.solve(x);
    }

    // L^-1 r with r = x - A_a s_alpha, available without another solve.
    Vector lr = whitened_x_;
    Vector s_alpha(0);
    if (part.k_alpha() > 0) {
      const Matrix w = whitened_columns(part.active());
      const Matrix metric = w.transpose() * w;
      // I - M is congruent to A_iota A_iota^T restricted to span(A_alpha);
      // its Cholesky fails exactly when the inactive columns lose rank.
      const Matrix complement = Matrix::Identity(w.cols(), w.cols()) - metric;
      Eigen::LLT<Matrix> check(complement);
      if (check.info() != Eigen::Success || !(check.rcond() * kMaxCondition >= 1.0))
        throw Error(ErrorCode::singular_system, "A_iota A_iota^T is numerically singular");
      s_alpha = linalg::SpdSolver(metric, "A_alpha^T G^-1 A_alpha").solve(w.transpose() * whitened_x_);
      lr.noalias() -= w * s_alpha;
    }
    const Vector g_inv_r = llt_.matrixU().solve(lr);
    Vector s = Vector::Zero(problem.m());
    linalg::scatter(s_alpha, part.active(), s);
    for (Index i : part.inactive()) s[i] = problem.a().col(i).dot(g_inv_r);
    return s;
  }

 private:
  Matrix whitened_columns(const std::vector<Index>& cols) {
    if (cache_.cols() == 0) {
      cache_.resize(a_->rows(), a_->cols());
      cached_.assign(static_cast<std::size_t>(a_->cols()), false);
    }
    std::vector<Index> missing;
    for (Index c : cols)
      if (!cached_[static_cast<std::size_t>(c)]) missing.push_back(c);
    if (!missing.empty()) {
      Matrix fresh = linalg::gather_columns(*a_, missing);
      llt_.matrixL().solveInPlace(fresh);
      for (std::size_t j = 0; j < missing.size(); ++j) {
        cache_.col(missing[j]) = fresh.col(static_cast<Index>(j));
        cached_[static_cast<std::size_t>(missing[j])] = true;
      }
    }
    return linalg::gather_columns(cache_, cols);
  }

  const Matrix* a_;
  Eigen::LLT<Matrix> llt_;
  Matrix cache_;
  std::vector<bool> cached_;
  Vector mixture_;
  Vector whitened_x_;
};

/// Minimizer of the inactive-part energy subject to A s = x.
/// With `gram` supplied, closed_form_2 runs through the factored Gram route.
/// Under `automatic`, a closed form that meets a singular system (an
/// inactive block close to square) is retried through the KKT system.
inline Vector estimate_s_space(const SparseProblem& problem, const ActiveSetPartition& part,
                               SSpaceMethod method = SSpaceMethod::automatic,
                               GramFactor* gram = nullptr) {
  detail::require_partition(problem, part);
  try {
    switch (resolve_method(method, part.k_alpha(), problem.n(), problem.m())) {
      case SSpaceMethod::closed_form_2:
        return gram ? gram->estimate(problem, part) : estimate_closed_form_2(problem, part);
      case SSpaceMethod::closed_form_1:
        return estimate_closed_form_1(problem, part);
      case SSpaceMethod::kkt_direct:
      case SSpaceMethod::automatic:
        break;
    }
  } catch (const Error& e) {
    if (method != SSpaceMethod::automatic || e.code() != ErrorCode::singular_system) throw;
  }
  return estimate_kkt(problem, part).s;
}

/// Least-squares coefficients on the active atoms; inactive part zero.
inline Vector estimate_x_space(const SparseProblem& problem, const ActiveSetPartition& part) {
  detail::require_partition(problem, part);
  Vector s = Vector::Zero(problem.m());
  if (part.k_alpha() == 0) return s;
  if (part.k_alpha() > problem.n())
    throw Error(ErrorCode::rank_deficient_active_set, "more active atoms than mixtures");
  const Matrix a_alpha = linalg::gather_columns(problem.a(), part.active());
  const Matrix gram = a_alpha.transpose() * a_alpha;
  try {
    const Vector coeffs =
        linalg::SpdSolver(gram, "A_alpha^T A_alpha").solve(a_alpha.transpose() * problem.mixture());
    linalg::scatter(coeffs, part.active(), s);
  } catch (const Error& e) {
    throw Error(ErrorCode::rank_deficient_active_set, e.what());
  }
  return s;
}

}  // namespace ide
