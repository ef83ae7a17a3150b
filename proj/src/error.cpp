#include "roughsim/error.hpp"

namespace roughsim {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidSpec: return "invalid-spec";
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::InvalidLoad: return "invalid-load";
    case ErrorKind::DegenerateSurface: return "degenerate-surface";
    case ErrorKind::DegenerateStatistics: return "degenerate-statistics";
    case ErrorKind::SolverStall: return "solver-stall";
    case ErrorKind::PlanError: return "plan-error";
    case ErrorKind::Normalization: return "normalization-error";
    case ErrorKind::RankDeficiency: return "rank-deficiency";
    case ErrorKind::IllConditionedKernel: return "ill-conditioned-kernel";
    case ErrorKind::UndefinedMetric: return "undefined-metric";
    case ErrorKind::DimensionMismatch: return "dimension-mismatch";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

bool Error::is_validation() const noexcept {
  switch (kind_) {
    case ErrorKind::InvalidSpec:
    case ErrorKind::InvalidInput:
    case ErrorKind::InvalidLoad:
    case ErrorKind::PlanError:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::Validation:
      return true;
    default:
      return false;
  }
}

}  // namespace roughsim
