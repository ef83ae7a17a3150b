#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace roughsim {

enum class KernelFamily { Rbf, Linear };

const char* to_string(KernelFamily family);
KernelFamily parse_kernel_family(const std::string& text);

/// rbf: exp(-gamma |x - x'|^2); linear: x . x'.
struct KernelSpec {
  KernelFamily family = KernelFamily::Rbf;
  double gamma = 1.0;  // rbf only

  void validate() const;
};

/// K(i, j) = k(X.row(i), X2.row(j)).
Eigen::MatrixXd gram(const Eigen::MatrixXd& x, const Eigen::MatrixXd& x2, const KernelSpec& spec);

struct KernelRidgeModel {
  KernelSpec kernel;
  double lambda = 0.0;
  Eigen::MatrixXd training_inputs;
  Eigen::VectorXd dual_alpha;
  double jitter = 0.0;      // diagonal shift beyond lambda needed to factorize
  double fit_time_s = 0.0;

  std::size_t dimension() const { return static_cast<std::size_t>(training_inputs.cols()); }
};

/// Solves (K + lambda I) alpha = y with a Cholesky factorization, escalating
/// a diagonal jitter when it fails, then refines against the unjittered
/// system. lambda = 0 gets no jitter; a singular K throws RankDeficiency.
KernelRidgeModel krr_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda,
                         const KernelSpec& spec);
Eigen::VectorXd krr_predict(const KernelRidgeModel& model, const Eigen::MatrixXd& xq);

struct GpModel {
  KernelSpec kernel;
  double noise_variance = 0.0;
  Eigen::MatrixXd training_inputs;
  Eigen::VectorXd dual_alpha;
  Eigen::LLT<Eigen::MatrixXd> factor;  // of K + (noise + jitter) I
  double jitter = 0.0;
  double fit_time_s = 0.0;

  std::size_t dimension() const { return static_cast<std::size_t>(training_inputs.cols()); }
};

struct GpPrediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

/// The mean uses the same dual solve as krr_fit. Jitter is always allowed;
/// failure at the largest jitter throws IllConditionedKernel.
GpModel gp_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double noise_variance,
               const KernelSpec& spec);
/// Rebuilds a fitted model from stored parts, refactorizing K + (noise +
/// jitter) I.
GpModel gp_restore(const KernelSpec& spec, double noise_variance, double jitter,
                   Eigen::MatrixXd training_inputs, Eigen::VectorXd dual_alpha);
GpPrediction gp_predict(const GpModel& model, const Eigen::MatrixXd& xq);
Eigen::VectorXd gp_predict_mean(const GpModel& model, const Eigen::MatrixXd& xq);

/// k validation folds partitioning a seeded shuffle of 0..N-1; the first
/// N % k folds hold one extra index.
std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, std::size_t k, std::uint64_t seed);

/// One named hyperparameter with its candidate values, kept as text so
/// categorical and numeric axes share a representation.
struct GridAxis {
  std::string name;
  std::vector<std::string> values;
};

using Combination = std::map<std::string, std::string>;

struct TuningGrid {
  std::vector<GridAxis> axes;
  std::size_t folds = 5;
  std::string metric = "nmse";

  void validate() const;
  std::size_t size() const;
  /// Cartesian product; the first axis varies slowest.
  std::vector<Combination> combinations() const;
};

/// Fits on (x_train, y_train) with the given hyperparameters and returns
/// predictions for x_val.
using Trainer = std::function<Eigen::VectorXd(const Eigen::MatrixXd& x_train, const Eigen::VectorXd& y_train,
                                              const Eigen::MatrixXd& x_val, const Combination& params)>;

struct CvRow {
  std::size_t id = 0;
  Combination params;
  std::vector<double> fold_scores;
  double mean_score = 0.0;  // +inf when any fold failed
  double fit_time_s = 0.0;
  std::string error;
};

struct GridSearchResult {
  std::size_t best = 0;  // index into rows
  std::vector<CvRow> rows;
  std::vector<std::string> axis_names;
  double total_time_s = 0.0;

  const CvRow& best_row() const { return rows.at(best); }
};

struct GridSearchOptions {
  std::uint64_t seed = 0;
  int jobs = 1;
  bool record_timing = true;
};

/// Scores every combination by mean validation nMSE over the folds. Ties go
/// to the earliest combination.
GridSearchResult grid_search(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const TuningGrid& grid,
                             const Trainer& trainer, const GridSearchOptions& options = {});

void write_cv_table(std::ostream& out, const GridSearchResult& result);

/// Grids used for the surface-area surrogate.
TuningGrid default_krr_grid();
TuningGrid default_gp_grid();

/// Trainers reading "kernel", "gamma", "lambda" (KRR) or "gamma", "alpha" (GP).
Trainer krr_trainer();
Trainer gp_trainer(double gamma);

}  // namespace roughsim
