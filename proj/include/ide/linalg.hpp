#pragma once

#include "ide/core.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <limits>
#include <span>
#include <vector>

namespace ide::linalg {

/// Columns of `a` listed in `cols`, in order.
inline Matrix gather_columns(const Matrix& a, std::span<const Index> cols) {
  Matrix out(a.rows(), static_cast<Index>(cols.size()));
  for (Index j = 0; j < out.cols(); ++j) out.col(j) = a.col(cols[static_cast<std::size_t>(j)]);
  return out;
}

inline Vector gather(const Vector& v, std::span<const Index> idx) {
  Vector out(static_cast<Index>(idx.size()));
  for (Index j = 0; j < out.size(); ++j) out[j] = v[idx[static_cast<std::size_t>(j)]];
  return out;
}

inline void scatter(const Vector& values, std::span<const Index> idx, Vector& into) {
  for (Index j = 0; j < values.size(); ++j) into[idx[static_cast<std::size_t>(j)]] = values[j];
}

/// 2-norm condition number from singular values; +inf for rank deficiency.
inline double condition_number(const Matrix& m) {
  if (m.size() == 0) return 1.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& sv = svd.singularValues();
  const double smin = sv[sv.size() - 1];
  if (smin <= 0.0) return std::numeric_limits<double>::infinity();
  return sv[0] / smin;
}

/// Cholesky factorization of a symmetric positive-definite matrix that
/// refuses to hand back a factor for a numerically singular input.
class SpdSolver {
 public:
  SpdSolver(const Matrix& m, const char* what) { factor(m, what); }

  template <typename Rhs>
  Matrix solve(const Eigen::MatrixBase<Rhs>& rhs) const {
    if (use_llt_) return llt_.solve(rhs);
    return qr_.solve(rhs);
  }

  const Eigen::LLT<Matrix>& llt() const { return llt_; }
  bool used_fallback() const { return !use_llt_; }

 private:
  void factor(const Matrix& m, const char* what) {
    if (m.rows() == 0) return;
    llt_.compute(m);
    // LLT::rcond is a 1-norm reciprocal estimate; a conservative screen.
    if (llt_.info() == Eigen::Success && llt_.rcond() * kMaxCondition >= 1.0) return;
    use_llt_ = false;
    const double cond = condition_number(m);
    if (!(cond <= kMaxCondition))
      throw Error(ErrorCode::singular_system,
                  std::string(what) + " has condition estimate above 1e12");
    qr_.compute(m);
  }

  Eigen::LLT<Matrix> llt_;
  Eigen::ColPivHouseholderQR<Matrix> qr_;
  bool use_llt_ = true;
};

/// Orthonormal basis of the null space of `a.transpose()`, i.e. of the
/// orthogonal complement of range(a). `a` is n x k with k <= n.
inline Matrix left_null_space(const Matrix& a) {
  const Index n = a.rows();
  const Index k = a.cols();
  if (k == 0) return Matrix::Identity(n, n);
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  return q.rightCols(n - k);
}

}  // namespace ide::linalg
