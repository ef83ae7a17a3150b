#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <vector>

#include "roughsim/dataset.hpp"
#include "roughsim/regression.hpp"

namespace roughsim {

enum class ModelKind { Krr, Gp };
const char* to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& text);

/// Feature preprocessing fitted on training inputs.
struct Preprocessor {
  Normalization mode = Normalization::L2Row;
  Standardizer standardizer;  // used by Normalization::Standardize

  static Preprocessor fit(Normalization mode, const Eigen::MatrixXd& raw);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& raw, const std::vector<std::uint64_t>& ids = {}) const;
};

/// A fitted regressor together with the preprocessing of its inputs.
struct SurrogateModel {
  static constexpr int kFormatVersion = 1;

  ModelKind kind = ModelKind::Krr;
  Preprocessor prep;
  std::vector<std::string> feature_names;
  KernelRidgeModel krr;  // kind == Krr
  GpModel gp;            // kind == Gp

  const KernelSpec& kernel() const { return kind == ModelKind::Krr ? krr.kernel : gp.kernel; }
  double regularization() const { return kind == ModelKind::Krr ? krr.lambda : gp.noise_variance; }
  double fit_time_s() const { return kind == ModelKind::Krr ? krr.fit_time_s : gp.fit_time_s; }
  std::size_t training_size() const;

  /// Predictions for raw (unpreprocessed) feature rows.
  Eigen::VectorXd predict(const Eigen::MatrixXd& raw) const;
  /// GP only; KRR models report zero variance.
  GpPrediction predict_with_variance(const Eigen::MatrixXd& raw) const;
};

/// Fits a model on raw features; `regularization` is lambda for KRR and the
/// noise variance for GP.
SurrogateModel train_surrogate(ModelKind kind, const Eigen::MatrixXd& raw, const Eigen::VectorXd& y,
                               const KernelSpec& spec, double regularization, Normalization mode,
                               const std::vector<std::string>& feature_names = roughsim::feature_names());

/// Versioned text format; every number at 17 significant digits so a reload
/// predicts bit-identically.
void write_model(std::ostream& out, const SurrogateModel& model);
SurrogateModel read_model(std::istream& in);
void save_model(const std::string& path, const SurrogateModel& model);
SurrogateModel load_model(const std::string& path);

}  // namespace roughsim
