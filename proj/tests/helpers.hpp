#pragma once

#include "ide/detection.hpp"
#include "ide/problem.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

namespace test {

using ide::Index;
using ide::Matrix;
using ide::Vector;

inline ide::SparseProblem random_problem(Index n, Index m, std::uint64_t seed) {
  auto dict = ide::gen_dictionary(n, m, seed);
  auto s = ide::gen_source_mog(m, {}, seed + 1000);
  return ide::make_problem(dict, std::move(s), seed);
}

/// Exact-k truth with zero inactive components.
inline ide::SparseProblem sparse_problem(Index n, Index m, Index k, std::uint64_t seed) {
  auto dict = ide::gen_dictionary(n, m, seed);
  ide::ExactKParams p;
  p.num_active = k;
  p.inactive_sigma = 0.0;
  return ide::make_problem(dict, ide::gen_source_exact_k(m, p, seed + 7), seed);
}

inline ide::ActiveSetPartition random_partition(Index m, Index k, std::mt19937_64& rng) {
  std::vector<Index> idx(static_cast<std::size_t>(m));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(static_cast<std::size_t>(k));
  return ide::ActiveSetPartition::from_active(idx, m);
}

inline double rel_err(const Vector& a, const Vector& b) {
  const double scale = std::max(b.norm(), 1e-300);
  return (a - b).norm() / scale;
}

}  // namespace test
