#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ide {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class ErrorCode {
  invalid_dimensions,
  invalid_params,
  degenerate_source,
  dimension_mismatch,
  singular_system,
  infeasible_partition,
  rank_deficient_active_set,
  singular_gram,
  invalid_k,
  invalid_schedule,
  zero_truth,
  zero_mixture,
  max_iterations_exceeded,
  numerical_failure,
  parse_error,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_dimensions: return "invalid-dimensions";
    case ErrorCode::invalid_params: return "invalid-params";
    case ErrorCode::degenerate_source: return "degenerate-source";
    case ErrorCode::dimension_mismatch: return "dimension-mismatch";
    case ErrorCode::singular_system: return "singular-system";
    case ErrorCode::infeasible_partition: return "infeasible-partition";
    case ErrorCode::rank_deficient_active_set: return "rank-deficient-active-set";
    case ErrorCode::singular_gram: return "singular-gram";
    case ErrorCode::invalid_k: return "invalid-k";
    case ErrorCode::invalid_schedule: return "invalid-schedule";
    case ErrorCode::zero_truth: return "zero-truth";
    case ErrorCode::zero_mixture: return "zero-mixture";
    case ErrorCode::max_iterations_exceeded: return "max-iterations-exceeded";
    case ErrorCode::numerical_failure: return "numerical-failure";
    case ErrorCode::parse_error: return "parse-error";
  }
  return "unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Systems whose condition estimate exceeds this are reported as singular.
inline constexpr double kMaxCondition = 1e12;

}  // namespace ide
