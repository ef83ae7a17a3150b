#include "roughsim/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <exception>
#include <limits>
#include <istream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "roughsim/error.hpp"
#include "roughsim/random.hpp"
#include "roughsim/text_io.hpp"

namespace roughsim {

namespace {

// Stream tags for derive_seed.
constexpr std::uint64_t kSurfaceSeedStream = 1;
constexpr std::uint64_t kSurfaceParamStream = 2;
constexpr std::uint64_t kDeltaDrawStream = 3;
constexpr std::uint64_t kDeltaShuffleStream = 4;

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

std::string field_or_empty(double v) { return std::isfinite(v) ? fmt17(v) : std::string(); }

double parse_optional(const std::string& token, const char* what) {
  return trim(token).empty() ? nan() : parse_double(token, what);
}

std::string format_strata(const std::vector<SamplingPlan::Stratum>& strata) {
  std::string out;
  for (std::size_t i = 0; i < strata.size(); ++i) {
    if (i) out += ';';
    out += fmt_short(strata[i].lo) + ':' + fmt_short(strata[i].hi) + ':' + fmt_short(strata[i].weight);
  }
  return out;
}

std::vector<SamplingPlan::Stratum> parse_strata(const std::string& text) {
  std::vector<SamplingPlan::Stratum> strata;
  for (const auto& part : split(text, ';')) {
    const auto f = split(part, ':');
    if (f.size() != 3) {
      throw Error(ErrorKind::PlanError, "stratum '" + part + "' is not lo:hi:weight");
    }
    strata.push_back({parse_double(f[0], "stratum lo"), parse_double(f[1], "stratum hi"),
                      parse_double(f[2], "stratum weight")});
  }
  return strata;
}

}  // namespace

const char* to_string(RecordStatus status) {
  switch (status) {
    case RecordStatus::Ok: return "ok";
    case RecordStatus::SolverFailed: return "solver-failed";
    case RecordStatus::DegenerateSurface: return "degenerate-surface";
  }
  return "?";
}

RecordStatus parse_record_status(const std::string& text) {
  const auto t = trim(text);
  if (t == "ok") return RecordStatus::Ok;
  if (t == "solver-failed") return RecordStatus::SolverFailed;
  if (t == "degenerate-surface") return RecordStatus::DegenerateSurface;
  throw Error(ErrorKind::Validation, "unknown record status '" + t + "'");
}

void SamplingPlan::validate() const {
  if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi)) {
    throw Error(ErrorKind::PlanError, "displacement range must satisfy lo < hi");
  }
  if (strata.empty()) throw Error(ErrorKind::PlanError, "sampling plan has no strata");
  double total = 0.0;
  double edge = lo;
  for (const auto& s : strata) {
    if (!(s.weight > 0.0) || !std::isfinite(s.weight)) {
      throw Error(ErrorKind::PlanError, "stratum weights must be positive");
    }
    if (std::abs(s.lo - edge) > 1e-9 * std::max(1.0, std::abs(edge)) || !(s.hi > s.lo)) {
      throw Error(ErrorKind::PlanError, "strata must tile the displacement range in order");
    }
    edge = s.hi;
    total += s.weight;
  }
  if (std::abs(edge - hi) > 1e-9 * std::max(1.0, std::abs(hi))) {
    throw Error(ErrorKind::PlanError, "strata must end at the top of the displacement range");
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorKind::PlanError, "stratum weights must sum to 1");
  }
}

std::vector<std::size_t> SamplingPlan::allocation() const {
  validate();
  if (count == 0) throw Error(ErrorKind::PlanError, "sampling plan asks for zero samples");
  std::size_t heaviest = 0;
  for (std::size_t i = 1; i < strata.size(); ++i) {
    if (strata[i].weight > strata[heaviest].weight) heaviest = i;
  }
  std::vector<std::size_t> counts(strata.size(), 0);
  std::size_t others = 0;
  for (std::size_t i = 0; i < strata.size(); ++i) {
    if (i == heaviest) continue;
    counts[i] = static_cast<std::size_t>(std::llround(strata[i].weight * static_cast<double>(count)));
    others += counts[i];
  }
  if (others > count) {
    throw Error(ErrorKind::PlanError, "rounded stratum counts exceed the sample count");
  }
  counts[heaviest] = count - others;
  if (counts[heaviest] == 0) {
    throw Error(ErrorKind::PlanError, "highest-weight stratum is empty after rounding");
  }
  return counts;
}

std::vector<double> sample_displacements(const SamplingPlan& plan) {
  const auto counts = plan.allocation();
  Rng rng(plan.seed);
  std::vector<double> out;
  out.reserve(plan.count);
  for (std::size_t s = 0; s < plan.strata.size(); ++s) {
    const auto& st = plan.strata[s];
    for (std::size_t i = 0; i < counts[s]; ++i) {
      // (lo, hi]: the upper edge belongs to this stratum.
      out.push_back(st.hi - (st.hi - st.lo) * rng.uniform());
    }
  }
  return out;
}

void DatabaseConfig::validate() const {
  if (iterations < 2 || iterations > 14) {
    throw Error(ErrorKind::InvalidSpec, "iterations must lie in 2..14");
  }
  if (!(scan_length_um > 0.0) || !std::isfinite(scan_length_um)) {
    throw Error(ErrorKind::InvalidSpec, "scan length must be positive");
  }
  if (!(sigma0_lo >= 0.0 && sigma0_lo <= sigma0_hi && std::isfinite(sigma0_hi))) {
    throw Error(ErrorKind::InvalidSpec, "sigma0 range must satisfy 0 <= lo <= hi");
  }
  if (!(hurst_lo > 0.0 && hurst_lo <= hurst_hi && hurst_hi < 1.0)) {
    throw Error(ErrorKind::InvalidSpec, "Hurst range must satisfy 0 < lo <= hi < 1");
  }
  if (surfaces == 0 || deltas_per_surface == 0) {
    throw Error(ErrorKind::InvalidSpec, "surfaces and deltas_per_surface must be positive");
  }
  if (!(tol > 0.0) || max_sweeps < 1) {
    throw Error(ErrorKind::InvalidSpec, "solver tolerance and sweep limit must be positive");
  }
  if (jobs < 1) throw Error(ErrorKind::InvalidSpec, "jobs must be at least 1");
  material.validate();
  plan().allocation();
}

SamplingPlan DatabaseConfig::plan() const {
  SamplingPlan p;
  p.strata = strata;
  p.lo = strata.empty() ? 0.0 : strata.front().lo;
  p.hi = strata.empty() ? 0.0 : strata.back().hi;
  p.count = record_count();
  p.seed = derive_seed(seed, kDeltaDrawStream, 0);
  return p;
}

DatabaseConfig DatabaseConfig::from_key_values(const std::map<std::string, std::string>& kv) {
  DatabaseConfig c;
  for (const auto& [key, value] : kv) {
    if (key == "iterations") c.iterations = static_cast<int>(parse_int(value, key));
    else if (key == "scan_length_um") c.scan_length_um = parse_double(value, key);
    else if (key == "sigma0_lo") c.sigma0_lo = parse_double(value, key);
    else if (key == "sigma0_hi") c.sigma0_hi = parse_double(value, key);
    else if (key == "hurst_lo") c.hurst_lo = parse_double(value, key);
    else if (key == "hurst_hi") c.hurst_hi = parse_double(value, key);
    else if (key == "surfaces") c.surfaces = parse_uint(value, key);
    else if (key == "deltas_per_surface") c.deltas_per_surface = parse_uint(value, key);
    else if (key == "strata") c.strata = parse_strata(value);
    else if (key == "youngs") c.material.youngs = parse_double(value, key);
    else if (key == "poisson") c.material.poisson = parse_double(value, key);
    else if (key == "tol") c.tol = parse_double(value, key);
    else if (key == "max_sweeps") c.max_sweeps = static_cast<int>(parse_int(value, key));
    else if (key == "seed") c.seed = parse_uint(value, key);
    else if (key == "jobs") c.jobs = static_cast<int>(parse_int(value, key));
    else throw Error(ErrorKind::InvalidSpec, "unknown config key '" + key + "'");
  }
  c.validate();
  return c;
}

std::vector<std::pair<std::string, std::string>> DatabaseConfig::to_key_values() const {
  return {
      {"iterations", std::to_string(iterations)},
      {"scan_length_um", fmt_short(scan_length_um)},
      {"sigma0_lo", fmt_short(sigma0_lo)},
      {"sigma0_hi", fmt_short(sigma0_hi)},
      {"hurst_lo", fmt_short(hurst_lo)},
      {"hurst_hi", fmt_short(hurst_hi)},
      {"surfaces", std::to_string(surfaces)},
      {"deltas_per_surface", std::to_string(deltas_per_surface)},
      {"strata", format_strata(strata)},
      {"youngs", fmt_short(material.youngs)},
      {"poisson", fmt_short(material.poisson)},
      {"tol", fmt_short(tol)},
      {"max_sweeps", std::to_string(max_sweeps)},
      {"seed", std::to_string(seed)},
  };
}

std::string config_hash(const DatabaseConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [k, v] : config.to_key_values()) {
    for (char ch : k + "=" + v + "\n") {
      h ^= static_cast<unsigned char>(ch);
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

SurfaceDraw draw_surface(const DatabaseConfig& config, std::size_t surface_index) {
  SurfaceDraw d;
  d.seed = derive_seed(config.seed, kSurfaceSeedStream, surface_index);
  Rng rng(derive_seed(config.seed, kSurfaceParamStream, surface_index));
  d.hurst = rng.uniform(config.hurst_lo, config.hurst_hi);
  d.sigma0_um = rng.uniform(config.sigma0_lo, config.sigma0_hi);
  return d;
}

HeightField surface_for_record(const DatabaseConfig& config, const SampleRecord& record) {
  SurfaceSpec spec;
  spec.scan_length_um = config.scan_length_um;
  spec.iterations = config.iterations;
  spec.hurst = record.hurst;
  spec.sigma0_um = record.sigma0_um;
  spec.seed = record.seed;
  return shift_to_datum(rmd_generate(spec));
}

double replay_effective_area(const DatabaseConfig& config, const SampleRecord& record) {
  const auto field = surface_for_record(config, record);
  const auto op = build_influence(field.n_points(), field.grid_spacing(), config.material);
  SolverOptions opt;
  opt.tol = config.tol;
  opt.max_sweeps = config.max_sweeps;
  return solve_contact(*op, field, LoadCase{record.delta_um}, opt).effective_area;
}

Dataset build_database(const DatabaseConfig& config) {
  config.validate();
  using clock = std::chrono::steady_clock;
  const std::size_t per = config.deltas_per_surface;

  auto deltas = sample_displacements(config.plan());
  Rng(derive_seed(config.seed, kDeltaShuffleStream, 0)).shuffle(deltas.begin(), deltas.end());

  const std::size_t n = (std::size_t{1} << config.iterations) + 1;
  const double g = config.scan_length_um / static_cast<double>(n - 1);
  const auto op = build_influence(n, g, config.material);
  SolverOptions opt;
  opt.tol = config.tol;
  opt.max_sweeps = config.max_sweeps;

  Dataset ds;
  ds.records.resize(config.record_count());

  auto run_surface = [&](std::size_t s) {
    const auto draw = draw_surface(config, s);
    const auto t0 = clock::now();
    std::vector<SampleRecord*> recs;
    for (std::size_t d = 0; d < per; ++d) {
      auto& r = ds.records[s * per + d];
      r.id = s * per + d;
      r.seed = draw.seed;
      r.hurst = draw.hurst;
      r.sigma0_um = draw.sigma0_um;
      r.delta_um = deltas[r.id];
      recs.push_back(&r);
    }
    bool degenerate = false;
    HeightField field(2, 1.0);
    StatVector stats;
    try {
      field = surface_for_record(config, *recs.front());
      stats = characterize(field);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateSurface && e.kind() != ErrorKind::DegenerateStatistics) throw;
      degenerate = true;
    }
    // Surface preparation is charged evenly to its records.
    const double prep = std::chrono::duration<double>(clock::now() - t0).count() / static_cast<double>(per);
    for (auto* r : recs) {
      if (degenerate) {
        r->stats = StatVector::from_array([] {
          std::array<double, StatVector::kSize> a;
          a.fill(std::numeric_limits<double>::quiet_NaN());
          return a;
        }());
        r->effective_area = nan();
        r->status = RecordStatus::DegenerateSurface;
        r->sim_time_s = config.record_timing ? prep : 0.0;
        continue;
      }
      r->stats = stats;
      const auto t1 = clock::now();
      try {
        r->effective_area = solve_contact(*op, field, LoadCase{r->delta_um}, opt).effective_area;
        r->status = RecordStatus::Ok;
      } catch (const SolverStall&) {
        r->effective_area = nan();
        r->status = RecordStatus::SolverFailed;
      }
      const double solve = std::chrono::duration<double>(clock::now() - t1).count();
      r->sim_time_s = config.record_timing ? prep + solve : 0.0;
    }
  };

  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(config.jobs), config.surfaces);
  if (workers <= 1) {
    for (std::size_t s = 0; s < config.surfaces; ++s) run_surface(s);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t s; (s = next.fetch_add(1)) < config.surfaces;) {
          try {
            run_surface(s);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = config.surfaces;
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  ds.config_hash = config_hash(config);
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  ds.created_utc = buf;
  return ds;
}

CleanResult clean(const Dataset& ds) {
  CleanResult out;
  out.dataset.config_hash = ds.config_hash;
  out.dataset.created_utc = ds.created_utc;
  for (const auto& r : ds.records) {
    if (r.status == RecordStatus::Ok) {
      out.dataset.records.push_back(r);
    } else {
      ++out.removed;
    }
  }
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
  const std::size_t n = ds.records.size();
  if (n < 2) throw Error(ErrorKind::Validation, "split needs at least 2 records");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorKind::Validation, "train fraction must lie in (0, 1)");
  }
  // The small offset keeps exact products such as 0.2 * 10 from flooring low.
  auto n_test = static_cast<std::size_t>(std::floor((1.0 - train_fraction) * static_cast<double>(n) + 1e-9));
  n_test = std::clamp<std::size_t>(n_test, 1, n - 1);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng(seed).shuffle(order.begin(), order.end());
  std::vector<std::uint8_t> in_test(n, 0);
  for (std::size_t i = 0; i < n_test; ++i) in_test[order[i]] = 1;

  Dataset train, test;
  for (auto* part : {&train, &test}) {
    part->config_hash = ds.config_hash;
    part->created_utc = ds.created_utc;
  }
  for (std::size_t i = 0; i < n; ++i) {
    (in_test[i] ? test : train).records.push_back(ds.records[i]);
  }
  return {std::move(train), std::move(test)};
}

std::vector<std::string> feature_names() {
  std::vector<std::string> names{"delta_um"};
  for (auto c : StatVector::column_names()) names.emplace_back(c);
  return names;
}

Eigen::MatrixXd feature_matrix(const Dataset& ds) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(ds.records.size()), static_cast<Eigen::Index>(kFeatureCount));
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const auto& r = ds.records[i];
    const auto row = static_cast<Eigen::Index>(i);
    x(row, 0) = r.delta_um;
    const auto a = r.stats.to_array();
    for (std::size_t j = 0; j < a.size(); ++j) x(row, static_cast<Eigen::Index>(j + 1)) = a[j];
  }
  return x;
}

Eigen::VectorXd target_vector(const Dataset& ds) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(ds.records.size()));
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    y(static_cast<Eigen::Index>(i)) = ds.records[i].effective_area;
  }
  return y;
}

Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& features, const std::vector<std::uint64_t>& ids) {
  if (!ids.empty() && ids.size() != static_cast<std::size_t>(features.rows())) {
    throw Error(ErrorKind::DimensionMismatch, "id list does not match feature rows");
  }
  Eigen::MatrixXd out = features;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double norm = out.row(i).norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      const auto id = ids.empty() ? static_cast<std::uint64_t>(i) : ids[static_cast<std::size_t>(i)];
      throw Error(ErrorKind::Normalization,
                  "feature row of sample " + std::to_string(id) + " has zero or non-finite norm");
    }
    out.row(i) /= norm;
  }
  return out;
}

const char* to_string(Normalization n) {
  switch (n) {
    case Normalization::L2Row: return "l2-row";
    case Normalization::Standardize: return "standardize";
    case Normalization::None: return "none";
  }
  return "?";
}

Normalization parse_normalization(const std::string& text) {
  if (text == "l2-row") return Normalization::L2Row;
  if (text == "standardize") return Normalization::Standardize;
  if (text == "none") return Normalization::None;
  throw Error(ErrorKind::Validation, "unknown normalization '" + text + "'");
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& features) {
  if (features.rows() < 1) throw Error(ErrorKind::Validation, "cannot standardize an empty matrix");
  Standardizer s;
  s.mean = features.colwise().mean().transpose();
  const Eigen::MatrixXd centred = features.rowwise() - s.mean.transpose();
  s.scale = (centred.array().square().colwise().sum() / static_cast<double>(features.rows())).sqrt().transpose();
  for (Eigen::Index j = 0; j < s.scale.size(); ++j) {
    if (!(s.scale(j) > 0.0)) s.scale(j) = 1.0;  // constant column
  }
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& features) const {
  if (features.cols() != mean.size()) {
    throw Error(ErrorKind::DimensionMismatch, "feature width does not match the standardizer");
  }
  return ((features.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array()).matrix();
}

std::vector<std::string> dataset_columns() {
  std::vector<std::string> cols{"id", "seed", "H", "sigma0_um", "delta_um"};
  for (auto c : StatVector::column_names()) cols.emplace_back(c);
  cols.insert(cols.end(), {"Ae_percent", "sim_time_s", "status"});
  return cols;
}

void write_dataset_csv(std::ostream& out, const Dataset& ds) {
  const auto cols = dataset_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& r : ds.records) {
    out << r.id << ',' << r.seed << ',' << fmt17(r.hurst) << ',' << fmt17(r.sigma0_um) << ','
        << fmt17(r.delta_um);
    for (double v : r.stats.to_array()) out << ',' << field_or_empty(v);
    out << ',' << field_or_empty(r.effective_area) << ',' << fmt17(r.sim_time_s) << ','
        << to_string(r.status) << '\n';
  }
}

Dataset read_dataset_csv(std::istream& in) {
  const auto cols = dataset_columns();
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Io, "dataset file is empty");
  const auto header = split(trim(line), ',');
  if (header != cols) throw Error(ErrorKind::Validation, "dataset header does not match the expected columns");
  Dataset ds;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split(trim(line), ',');
    if (f.size() != cols.size()) {
      throw Error(ErrorKind::Validation, "dataset line " + std::to_string(line_no) + " has " +
                                             std::to_string(f.size()) + " fields, expected " +
                                             std::to_string(cols.size()));
    }
    SampleRecord r;
    r.id = parse_uint(f[0], "id");
    r.seed = parse_uint(f[1], "seed");
    r.hurst = parse_double(f[2], "H");
    r.sigma0_um = parse_double(f[3], "sigma0_um");
    r.delta_um = parse_double(f[4], "delta_um");
    std::array<double, StatVector::kSize> a{};
    for (std::size_t j = 0; j < a.size(); ++j) a[j] = parse_optional(f[5 + j], "statistic");
    r.stats = StatVector::from_array(a);
    r.effective_area = parse_optional(f[5 + a.size()], "Ae_percent");
    r.sim_time_s = parse_double(f[6 + a.size()], "sim_time_s");
    r.status = parse_record_status(f[7 + a.size()]);
    ds.records.push_back(r);
  }
  std::vector<std::uint64_t> ids;
  for (const auto& r : ds.records) ids.push_back(r.id);
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw Error(ErrorKind::Validation, "dataset contains duplicate sample ids");
  }
  return ds;
}

void save_dataset(const std::string& path, const Dataset& ds) {
  auto out = open_output(path);
  write_dataset_csv(out, ds);
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path);
}

Dataset load_dataset(const std::string& path) {
  auto in = open_input(path);
  return read_dataset_csv(in);
}

void write_dataset_sidecar(const std::string& csv_path, const Dataset& ds) {
  std::size_t ok = 0;
  double total_time = 0.0;
  for (const auto& r : ds.records) {
    ok += r.status == RecordStatus::Ok;
    total_time += r.sim_time_s;
  }
  write_key_values(csv_path + ".meta",
                   {{"schema_version", std::to_string(Dataset::kSchemaVersion)},
                    {"records", std::to_string(ds.records.size())},
                    {"ok_records", std::to_string(ok)},
                    {"total_sim_time_s", fmt17(total_time)},
                    {"config_hash", ds.config_hash},
                    {"created_utc", ds.created_utc}});
}

}  // namespace roughsim
