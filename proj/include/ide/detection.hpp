#pragma once

#include "ide/core.hpp"
#include "ide/problem.hpp"

#include <algorithm>
#include <numeric>
#include <span>
#include <vector>

namespace ide {

/// Split of the source indices into detected-active and detected-inactive
/// sets. Both lists are sorted and together cover 0..m-1 exactly once.
class ActiveSetPartition {
 public:
  ActiveSetPartition() = default;

  /// `is_active[i]` selects index i into the active set.
  explicit ActiveSetPartition(const std::vector<bool>& is_active) {
    for (std::size_t i = 0; i < is_active.size(); ++i)
      (is_active[i] ? active_ : inactive_).push_back(static_cast<Index>(i));
  }

  /// Active set given as arbitrary (possibly unsorted) indices below m.
  static ActiveSetPartition from_active(std::span<const Index> active, Index m) {
    std::vector<bool> mask(static_cast<std::size_t>(m), false);
    for (Index i : active) {
      if (i < 0 || i >= m) throw Error(ErrorCode::dimension_mismatch, "active index out of range");
      mask[static_cast<std::size_t>(i)] = true;
    }
    return ActiveSetPartition(mask);
  }

  const std::vector<Index>& active() const noexcept { return active_; }
  const std::vector<Index>& inactive() const noexcept { return inactive_; }
  Index k_alpha() const noexcept { return static_cast<Index>(active_.size()); }
  Index k_iota() const noexcept { return static_cast<Index>(inactive_.size()); }
  Index size() const noexcept { return k_alpha() + k_iota(); }

  friend bool operator==(const ActiveSetPartition&, const ActiveSetPartition&) = default;

 private:
  std::vector<Index> active_;
  std::vector<Index> inactive_;
};

/// g = |A^T (x - A s_hat) + s_hat|, the per-source activity statistic with
/// the other sources' contribution compensated by the current estimate.
inline Vector activity(const SparseProblem& problem, const Vector& estimate) {
  if (estimate.size() != problem.m())
    throw Error(ErrorCode::dimension_mismatch, "estimate length must equal m");
  const Vector residual = problem.mixture() - problem.a() * estimate;
  return (problem.a().transpose() * residual + estimate).cwiseAbs();
}

/// Strict threshold test: active iff g_i > epsilon.
inline ActiveSetPartition detect(const Vector& g, double epsilon) {
  std::vector<bool> mask(static_cast<std::size_t>(g.size()));
  for (Index i = 0; i < g.size(); ++i) mask[static_cast<std::size_t>(i)] = g[i] > epsilon;
  return ActiveSetPartition(mask);
}

namespace detail {

/// Indices of the k largest entries of g among `candidates`; ties go to the
/// lower index.
inline std::vector<Index> top_k(const Vector& g, std::vector<Index> candidates, Index k) {
  auto by_value = [&g](Index a, Index b) { return g[a] > g[b] || (g[a] == g[b] && a < b); };
  const auto kk = static_cast<std::size_t>(std::min<Index>(k, static_cast<Index>(candidates.size())));
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(kk),
                    candidates.end(), by_value);
  candidates.resize(kk);
  return candidates;
}

}  // namespace detail

/// Threshold-free detection: the k sources with the highest activity.
inline ActiveSetPartition detect_topk(const Vector& g, Index k, Index n) {
  if (k < 1 || k >= n) throw Error(ErrorCode::invalid_k, "top-k detection needs 1 <= k < n");
  std::vector<Index> all(static_cast<std::size_t>(g.size()));
  std::iota(all.begin(), all.end(), Index{0});
  const auto kept = detail::top_k(g, std::move(all), k);
  return ActiveSetPartition::from_active(kept, g.size());
}

struct CapResult {
  ActiveSetPartition partition;
  bool capped = false;
};

/// Keeps at most `limit` active indices, retaining those with largest g.
inline CapResult cap_active(const ActiveSetPartition& partition, const Vector& g, Index limit) {
  if (limit < 1) throw Error(ErrorCode::invalid_params, "cap limit must be at least 1");
  if (partition.k_alpha() <= limit) return {partition, false};
  const auto kept = detail::top_k(g, partition.active(), limit);
  return {ActiveSetPartition::from_active(kept, partition.size()), true};
}

}  // namespace ide
