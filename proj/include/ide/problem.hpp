#pragma once

#include "ide/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <utility>
#include <vector>

namespace ide {

/// Seedable generator shared by every random constructor in the library.
using Rng = std::mt19937_64;

inline constexpr double kColumnNormTol = 1e-12;

/// An n x m overcomplete dictionary (n < m) whose columns are unit-norm atoms.
class Dictionary {
 public:
  /// Takes ownership of `entries`; throws unless every column already has
  /// unit norm and the system is underdetermined.
  explicit Dictionary(Matrix entries) : a_(std::move(entries)) {
    if (a_.rows() == 0 || a_.rows() >= a_.cols())
      throw Error(ErrorCode::invalid_dimensions, "dictionary must satisfy 0 < n < m");
    for (Index j = 0; j < a_.cols(); ++j) {
      if (std::abs(a_.col(j).norm() - 1.0) > kColumnNormTol)
        throw Error(ErrorCode::invalid_params, "dictionary column " + std::to_string(j) +
                                                   " is not unit norm");
    }
  }

  /// Rescales every column to unit norm before validating.
  static Dictionary normalized(Matrix entries) {
    for (Index j = 0; j < entries.cols(); ++j) {
      const double norm = entries.col(j).norm();
      if (norm == 0.0)
        throw Error(ErrorCode::invalid_params, "zero column " + std::to_string(j));
      entries.col(j) /= norm;
    }
    return Dictionary(std::move(entries));
  }

  const Matrix& matrix() const noexcept { return a_; }
  Index n() const noexcept { return a_.rows(); }
  Index m() const noexcept { return a_.cols(); }

 private:
  Matrix a_;
};

enum class SourceModel { mog, exact_k, external };

struct SourceVector {
  Vector values;
  SourceModel model = SourceModel::external;

  Index size() const noexcept { return values.size(); }
};

/// Two-component Gaussian mixture: inactive N(0, sigma0^2) with
/// probability p0, active N(0, sigma1^2) otherwise.
struct MogParams {
  double p0 = 0.9;
  double sigma0 = 0.01;
  double sigma1 = 1.0;

  void validate() const {
    if (!(p0 > 0.0 && p0 < 1.0)) throw Error(ErrorCode::invalid_params, "p0 must lie in (0,1)");
    if (!(sigma0 >= 0.0)) throw Error(ErrorCode::invalid_params, "sigma0 must be nonnegative");
    if (!(sigma1 > 0.0)) throw Error(ErrorCode::invalid_params, "sigma1 must be positive");
    if (!(sigma0 < sigma1)) throw Error(ErrorCode::invalid_params, "sigma0 must be below sigma1");
  }
  bool is_sparse() const noexcept { return p0 > 0.5 && p0 < 1.0; }
};

/// Exactly `num_active` unit components; the rest N(0, inactive_sigma^2).
struct ExactKParams {
  Index num_active = 1;
  double inactive_sigma = 0.1;
};

/// One instance of x = A s, with the generating source when it is known.
class SparseProblem {
 public:
  SparseProblem(Dictionary dictionary, Vector mixture, std::optional<SourceVector> truth = {},
                std::uint64_t seed = 0)
      : dictionary_(std::move(dictionary)),
        mixture_(std::move(mixture)),
        truth_(std::move(truth)),
        seed_(seed) {
    if (mixture_.size() != dictionary_.n())
      throw Error(ErrorCode::dimension_mismatch, "mixture length must equal n");
    if (truth_) {
      if (truth_->size() != dictionary_.m())
        throw Error(ErrorCode::dimension_mismatch, "source length must equal m");
      const double resid = (mixture_ - dictionary_.matrix() * truth_->values).norm();
      if (resid > 1e-10 * mixture_.norm())
        throw Error(ErrorCode::invalid_params, "mixture is not A times the stored source");
    }
  }

  const Dictionary& dictionary() const noexcept { return dictionary_; }
  const Matrix& a() const noexcept { return dictionary_.matrix(); }
  const Vector& mixture() const noexcept { return mixture_; }
  const std::optional<SourceVector>& truth() const noexcept { return truth_; }
  std::uint64_t seed() const noexcept { return seed_; }
  Index n() const noexcept { return dictionary_.n(); }
  Index m() const noexcept { return dictionary_.m(); }

 private:
  Dictionary dictionary_;
  Vector mixture_;
  std::optional<SourceVector> truth_;
  std::uint64_t seed_;
};

/// Columns drawn uniformly on the unit sphere of R^n.
inline Dictionary gen_dictionary(Index n, Index m, std::uint64_t seed) {
  if (n <= 0 || n >= m) throw Error(ErrorCode::invalid_dimensions, "need 0 < n < m");
  Rng rng(seed);
  std::normal_distribution<double> normal;
  Matrix a(n, m);
  for (Index j = 0; j < m; ++j) {
    double norm = 0.0;
    do {
      for (Index i = 0; i < n; ++i) a(i, j) = normal(rng);
      norm = a.col(j).norm();
    } while (norm == 0.0);
    a.col(j) /= norm;
  }
  return Dictionary(std::move(a));
}

namespace detail {

inline bool normalize_linf(Vector& v) {
  const double peak = v.cwiseAbs().maxCoeff();
  if (peak == 0.0) return false;
  v /= peak;
  return true;
}

}  // namespace detail

/// i.i.d. mixture-of-Gaussians draw scaled to unit peak magnitude. An
/// all-zero draw (only possible with sigma0 = 0) is redrawn from the same
/// stream.
inline SourceVector gen_source_mog(Index m, const MogParams& params, std::uint64_t seed) {
  params.validate();
  if (m <= 0) throw Error(ErrorCode::invalid_dimensions, "m must be positive");
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal;
  Vector s(m);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    for (Index i = 0; i < m; ++i) {
      const double sigma = unif(rng) < params.p0 ? params.sigma0 : params.sigma1;
      s[i] = sigma * normal(rng);
    }
    if (detail::normalize_linf(s)) return {std::move(s), SourceModel::mog};
  }
  throw Error(ErrorCode::degenerate_source, "mixture model keeps producing the zero vector");
}

inline SourceVector gen_source_exact_k(Index m, const ExactKParams& params, std::uint64_t seed) {
  if (m <= 0) throw Error(ErrorCode::invalid_dimensions, "m must be positive");
  if (params.num_active < 1 || params.num_active > m)
    throw Error(ErrorCode::invalid_params, "num_active must lie in [1, m]");
  if (!(params.inactive_sigma >= 0.0))
    throw Error(ErrorCode::invalid_params, "inactive_sigma must be nonnegative");
  Rng rng(seed);
  std::vector<Index> perm(static_cast<std::size_t>(m));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  std::normal_distribution<double> normal(0.0, params.inactive_sigma > 0.0 ? params.inactive_sigma : 1.0);
  Vector s(m);
  for (Index i = 0; i < m; ++i) s[i] = params.inactive_sigma > 0.0 ? normal(rng) : 0.0;
  for (Index k = 0; k < params.num_active; ++k) s[perm[static_cast<std::size_t>(k)]] = 1.0;
  detail::normalize_linf(s);
  return {std::move(s), SourceModel::exact_k};
}

/// Support of an exact-k draw before inactive noise could exceed it; for
/// zero inactive noise this is exactly the set of unit entries.
inline std::vector<Index> support_of(const Vector& s, double cutoff = 0.5) {
  std::vector<Index> out;
  for (Index i = 0; i < s.size(); ++i)
    if (std::abs(s[i]) > cutoff) out.push_back(i);
  return out;
}

/// How the noise level of a dictionary perturbation is interpreted.
enum class PerturbationScale {
  variance,  ///< noise variance = sigma_a * max|a_ij|
  std_dev,   ///< noise standard deviation = sigma_a * max|a_ij|
};

inline Dictionary perturb_dictionary(const Dictionary& dict, double sigma_a, std::uint64_t seed,
                                     PerturbationScale scale = PerturbationScale::variance) {
  if (!(sigma_a > 0.0)) throw Error(ErrorCode::invalid_params, "sigma_a must be positive");
  const double level = sigma_a * dict.matrix().cwiseAbs().maxCoeff();
  const double stddev = scale == PerturbationScale::variance ? std::sqrt(level) : level;
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, stddev);
  Matrix noisy = dict.matrix();
  for (Index j = 0; j < noisy.cols(); ++j)
    for (Index i = 0; i < noisy.rows(); ++i) noisy(i, j) += normal(rng);
  return Dictionary::normalized(std::move(noisy));
}

inline SparseProblem make_problem(const Dictionary& dict, SourceVector s, std::uint64_t seed = 0) {
  if (s.size() != dict.m())
    throw Error(ErrorCode::dimension_mismatch, "source length must equal m");
  Vector x = dict.matrix() * s.values;
  return SparseProblem(dict, std::move(x), std::move(s), seed);
}

}  // namespace ide
