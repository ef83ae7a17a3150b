#pragma once

#include <stdexcept>
#include <string>

namespace roughsim {

enum class ErrorKind {
  InvalidSpec,
  InvalidInput,
  InvalidLoad,
  DegenerateSurface,
  DegenerateStatistics,
  SolverStall,
  PlanError,
  Normalization,
  RankDeficiency,
  IllConditionedKernel,
  UndefinedMetric,
  DimensionMismatch,
  Validation,
  Io,
};

const char* to_string(ErrorKind kind);

/// Base exception for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// True for errors caused by bad user input rather than a failed computation.
  bool is_validation() const noexcept;

 private:
  ErrorKind kind_;
};

/// Raised when the active-set contact solver exhausts its sweep budget.
class SolverStall : public Error {
 public:
  SolverStall(const std::string& what, double last_residual)
      : Error(ErrorKind::SolverStall, what), last_residual_(last_residual) {}

  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

}  // namespace roughsim
