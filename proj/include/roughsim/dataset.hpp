#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "roughsim/bem.hpp"
#include "roughsim/topo_stats.hpp"

namespace roughsim {

enum class RecordStatus { Ok, SolverFailed, DegenerateSurface };

const char* to_string(RecordStatus status);
RecordStatus parse_record_status(const std::string& text);

/// One (surface, Δ) simulation. Statistics are NaN for degenerate surfaces
/// and the area is NaN for failed solves.
struct SampleRecord {
  std::uint64_t id = 0;
  std::uint64_t seed = 0;  // surface seed
  double hurst = 0.0;
  double sigma0_um = 0.0;
  double delta_um = 0.0;
  StatVector stats;
  double effective_area = 0.0;  // percent
  double sim_time_s = 0.0;
  RecordStatus status = RecordStatus::Ok;
};

struct Dataset {
  static constexpr int kSchemaVersion = 1;
  std::vector<SampleRecord> records;
  // Provenance; kept in a sidecar so the CSV stays byte-reproducible.
  std::string config_hash;
  std::string created_utc;
};

/// Δ range split into weighted sub-ranges.
struct SamplingPlan {
  struct Stratum {
    double lo = 0.0;
    double hi = 0.0;
    double weight = 0.0;
  };

  double lo = 5.0;
  double hi = 45.0;
  std::vector<Stratum> strata{{5.0, 25.0, 0.7}, {25.0, 45.0, 0.3}};
  std::size_t count = 0;
  std::uint64_t seed = 0;

  /// Throws PlanError unless weights are positive, sum to one and the
  /// sub-ranges tile [lo, hi] in order.
  void validate() const;
  /// Samples per stratum: round(weight * count) for every stratum except the
  /// heaviest, which takes the remainder so the total equals count.
  std::vector<std::size_t> allocation() const;
};

/// Uniform draws within each stratum, strata in declared order.
std::vector<double> sample_displacements(const SamplingPlan& plan);

struct DatabaseConfig {
  int iterations = 5;  // RMD passes; n = 2^k + 1
  double scan_length_um = 1000.0;
  double sigma0_lo = 3.0;
  double sigma0_hi = 16.0;
  double hurst_lo = 0.5;
  double hurst_hi = 0.8;
  std::size_t surfaces = 10;
  std::size_t deltas_per_surface = 2;
  std::vector<SamplingPlan::Stratum> strata{{5.0, 25.0, 0.7}, {25.0, 45.0, 0.3}};
  Material material;
  double tol = 1e-8;
  int max_sweeps = 100;
  std::uint64_t seed = 0;
  int jobs = 1;
  bool record_timing = true;

  void validate() const;
  std::size_t record_count() const { return surfaces * deltas_per_surface; }
  SamplingPlan plan() const;

  /// Parses key=value pairs; unknown keys are rejected.
  static DatabaseConfig from_key_values(const std::map<std::string, std::string>& kv);
  std::vector<std::pair<std::string, std::string>> to_key_values() const;
};

/// Seeds and parameters of surface s, derived from the master seed.
struct SurfaceDraw {
  std::uint64_t seed = 0;
  double hurst = 0.0;
  double sigma0_um = 0.0;
};
SurfaceDraw draw_surface(const DatabaseConfig& config, std::size_t surface_index);

/// The surface behind a record, rebuilt from its stored parameters.
HeightField surface_for_record(const DatabaseConfig& config, const SampleRecord& record);

/// Re-runs the contact solve of an ok record and returns its area.
double replay_effective_area(const DatabaseConfig& config, const SampleRecord& record);

/// One record per (surface, Δ) pair; ids run surface-major. Failures are kept
/// with a status flag. Runs config.jobs workers; output order is by id.
Dataset build_database(const DatabaseConfig& config);

struct CleanResult {
  Dataset dataset;
  std::size_t removed = 0;
};
CleanResult clean(const Dataset& ds);

/// Disjoint shuffled partition; the test side takes floor((1 - f) N) records
/// (at least one), the train side the rest. Each side keeps input order.
std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction,
                                  std::uint64_t seed);

inline constexpr std::size_t kFeatureCount = 1 + StatVector::kSize;

/// Δ followed by the 22 statistics.
std::vector<std::string> feature_names();
Eigen::MatrixXd feature_matrix(const Dataset& ds);
Eigen::VectorXd target_vector(const Dataset& ds);

/// Scales every row to unit Euclidean norm. Throws Normalization naming the
/// sample id of a zero row (ids default to row indices).
Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& features,
                               const std::vector<std::uint64_t>& ids = {});

enum class Normalization { L2Row, Standardize, None };
const char* to_string(Normalization n);
Normalization parse_normalization(const std::string& text);

/// Per-column z-scoring fitted on training rows. Not part of the reference
/// workflow; offered as an alternative preprocessing.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& features);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& features) const;
};

void write_dataset_csv(std::ostream& out, const Dataset& ds);
Dataset read_dataset_csv(std::istream& in);
void save_dataset(const std::string& path, const Dataset& ds);
Dataset load_dataset(const std::string& path);

/// FNV-1a over the key=value rendering of a config, as 16 hex digits.
std::string config_hash(const DatabaseConfig& config);
/// Writes "<path>.meta" with schema version, record counts and provenance.
void write_dataset_sidecar(const std::string& csv_path, const Dataset& ds);

std::vector<std::string> dataset_columns();

}  // namespace roughsim
