#include "roughsim/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "roughsim/error.hpp"
#include "roughsim/random.hpp"
#include "roughsim/text_io.hpp"

namespace roughsim {

MetricReport compute_metrics(std::span<const double> actual, std::span<const double> predicted) {
  if (actual.size() != predicted.size()) {
    throw Error(ErrorKind::DimensionMismatch, "actual and predicted lengths differ");
  }
  if (actual.empty()) throw Error(ErrorKind::DimensionMismatch, "metrics need at least one point");
  const auto n = static_cast<double>(actual.size());
  double mean = 0.0, max_abs = 0.0;
  for (double a : actual) {
    mean += a;
    max_abs = std::max(max_abs, std::abs(a));
  }
  mean /= n;
  if (mean == 0.0) throw Error(ErrorKind::UndefinedMetric, "mean of actual values is zero");
  if (max_abs == 0.0) throw Error(ErrorKind::UndefinedMetric, "max |actual| is zero");

  double sse = 0.0, sae = 0.0, max_err = 0.0, sst = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double e = actual[i] - predicted[i];
    sse += e * e;
    sae += std::abs(e);
    max_err = std::max(max_err, std::abs(e));
    sst += (actual[i] - mean) * (actual[i] - mean);
  }
  MetricReport r;
  r.n_points = actual.size();
  r.nmse_percent = 100.0 * (sse / n) / mean;
  r.nmae_percent = 100.0 * (sae / n) / mean;
  r.nmaxe_percent = 100.0 * max_err / max_abs;
  if (sst > 0.0) {
    r.r2_percent = 100.0 * (1.0 - sse / sst);
  } else {
    // Constant actual values leave R^2 defined only for exact predictions.
    if (sse > 0.0) throw Error(ErrorKind::UndefinedMetric, "R^2 is undefined for constant actual values");
    r.r2_percent = 100.0;
  }
  return r;
}

MetricReport compute_metrics(const Eigen::VectorXd& actual, const Eigen::VectorXd& predicted) {
  return compute_metrics(std::span<const double>(actual.data(), static_cast<std::size_t>(actual.size())),
                         std::span<const double>(predicted.data(), static_cast<std::size_t>(predicted.size())));
}

void write_metrics_csv(std::ostream& out, const std::vector<std::string>& labels,
                       const std::vector<MetricReport>& reports) {
  out << "model,nMSE_percent,nMAE_percent,nMaxE_percent,R2_percent,n\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    out << labels.at(i) << ',' << fmt17(r.nmse_percent) << ',' << fmt17(r.nmae_percent) << ','
        << fmt17(r.nmaxe_percent) << ',' << fmt17(r.r2_percent) << ',' << r.n_points << '\n';
  }
}

void write_metrics_table(std::ostream& out, const std::vector<std::string>& labels,
                         const std::vector<MetricReport>& reports) {
  char line[160];
  std::snprintf(line, sizeof line, "%-16s %10s %10s %10s %10s %8s\n", "model", "nMSE%", "nMAE%",
                "nMaxE%", "R2%", "n");
  out << line;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    std::snprintf(line, sizeof line, "%-16s %10.4f %10.4f %10.4f %10.4f %8zu\n", labels.at(i).c_str(),
                  r.nmse_percent, r.nmae_percent, r.nmaxe_percent, r.r2_percent, r.n_points);
    out << line;
  }
}

void CostLedger::validate() const {
  for (double v : {t_pred_per_sample_s, t_fit_s, t_tune_s, t_database_s, mean_bem_time_s}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorKind::Validation, "cost ledger durations must be finite and non-negative");
    }
  }
}

double surrogate_total_cost(const CostLedger& ledger, std::uint64_t n_evals) {
  return ledger.fixed_cost() + static_cast<double>(n_evals) * ledger.t_pred_per_sample_s;
}

double reference_total_cost(const CostLedger& ledger, std::uint64_t n_evals) {
  return static_cast<double>(n_evals) * ledger.mean_bem_time_s;
}

std::optional<std::uint64_t> break_even(const CostLedger& ledger) {
  ledger.validate();
  const double margin = ledger.mean_bem_time_s - ledger.t_pred_per_sample_s;
  if (!(margin > 0.0)) return std::nullopt;
  const double estimate = std::ceil(ledger.fixed_cost() / margin);
  if (!(estimate < 9.0e18)) return std::nullopt;
  auto n = static_cast<std::uint64_t>(estimate);
  // The closed form can be off by one in floating point; settle it on the
  // cost functions themselves.
  while (n > 0 && reference_total_cost(ledger, n - 1) >= surrogate_total_cost(ledger, n - 1)) --n;
  while (reference_total_cost(ledger, n) < surrogate_total_cost(ledger, n)) ++n;
  return n;
}

double estimate_prediction_time(const std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>& predict,
                                const Eigen::MatrixXd& reference_inputs, std::uint64_t seed,
                                std::size_t count) {
  if (reference_inputs.rows() < 1 || count == 0) {
    throw Error(ErrorKind::Validation, "prediction timing needs reference inputs and a positive count");
  }
  const Eigen::RowVectorXd lo = reference_inputs.colwise().minCoeff();
  const Eigen::RowVectorXd hi = reference_inputs.colwise().maxCoeff();
  Rng rng(seed);
  Eigen::MatrixXd q(static_cast<Eigen::Index>(count), reference_inputs.cols());
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    for (Eigen::Index j = 0; j < q.cols(); ++j) q(i, j) = rng.uniform(lo(j), hi(j));
  }
  const auto t0 = std::chrono::steady_clock::now();
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    const Eigen::VectorXd y = predict(q.row(i));
    if (y.size() != 1) throw Error(ErrorKind::DimensionMismatch, "predictor returned the wrong size");
  }
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return total / static_cast<double>(count);
}

void write_break_even_curve(std::ostream& out, const CostLedger& ledger, std::uint64_t n_max,
                            std::uint64_t step) {
  if (step == 0) throw Error(ErrorKind::Validation, "curve step must be positive");
  out << "n,reference_s,surrogate_s\n";
  for (std::uint64_t n = 0; n <= n_max; n += step) {
    out << n << ',' << fmt17(reference_total_cost(ledger, n)) << ','
        << fmt17(surrogate_total_cost(ledger, n)) << '\n';
  }
}

}  // namespace roughsim
