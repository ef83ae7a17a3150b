#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace roughsim {

/// Accuracy metrics in percent.
struct MetricReport {
  double nmse_percent = 0.0;
  double nmae_percent = 0.0;
  double nmaxe_percent = 0.0;
  double r2_percent = 0.0;
  std::size_t n_points = 0;
};

/// nMSE and nMAE are normalized by mean(actual), nMaxE by max|actual|.
/// R^2 is not clamped. Throws UndefinedMetric for a zero mean or zero max and
/// DimensionMismatch for unequal or empty inputs.
MetricReport compute_metrics(std::span<const double> actual, std::span<const double> predicted);
MetricReport compute_metrics(const Eigen::VectorXd& actual, const Eigen::VectorXd& predicted);

void write_metrics_csv(std::ostream& out, const std::vector<std::string>& labels,
                       const std::vector<MetricReport>& reports);
void write_metrics_table(std::ostream& out, const std::vector<std::string>& labels,
                         const std::vector<MetricReport>& reports);

/// Durations in seconds.
struct CostLedger {
  double t_pred_per_sample_s = 0.0;
  double t_fit_s = 0.0;
  double t_tune_s = 0.0;
  double t_database_s = 0.0;
  double mean_bem_time_s = 0.0;

  /// Throws Validation on negative or non-finite entries.
  void validate() const;
  double fixed_cost() const { return t_database_s + t_tune_s + t_fit_s; }
};

double surrogate_total_cost(const CostLedger& ledger, std::uint64_t n_evals);
double reference_total_cost(const CostLedger& ledger, std::uint64_t n_evals);

/// Smallest N with reference(N) >= surrogate(N); nullopt when the surrogate
/// never pays off (t_p >= mean BEM time).
std::optional<std::uint64_t> break_even(const CostLedger& ledger);

/// Mean wall time per sample of `predict` over `count` inputs drawn uniformly
/// from the per-column [min, max] box of `reference_inputs`.
double estimate_prediction_time(const std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>& predict,
                                const Eigen::MatrixXd& reference_inputs, std::uint64_t seed,
                                std::size_t count = 2000);

/// Rows (n, reference_s, surrogate_s) for n = 0, step, 2 step, ... <= n_max.
void write_break_even_curve(std::ostream& out, const CostLedger& ledger, std::uint64_t n_max,
                            std::uint64_t step);

}  // namespace roughsim
