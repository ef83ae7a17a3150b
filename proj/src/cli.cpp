#include "roughsim/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include "roughsim/bem.hpp"
#include "roughsim/dataset.hpp"
#include "roughsim/error.hpp"
#include "roughsim/evaluation.hpp"
#include "roughsim/random.hpp"
#include "roughsim/regression.hpp"
#include "roughsim/surface.hpp"
#include "roughsim/surrogate.hpp"
#include "roughsim/text_io.hpp"
#include "roughsim/topo_stats.hpp"

namespace roughsim::cli {

namespace {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

struct Context {
  std::vector<std::string> args;
  std::ostream& out;
  std::ostream& err;
};

bool is_stdout(const std::string& path) { return path.empty() || path == "-"; }

std::string join_args(const std::vector<std::string>& args) {
  std::string s = "roughsim";
  for (const auto& a : args) s += ' ' + a;
  return s;
}

// Seed given on the command line, or a fresh one that is reported.
std::uint64_t resolve_seed(const std::string& text, Context& ctx, bool& generated) {
  generated = text.empty();
  if (!generated) return parse_uint(text, "--seed");
  std::random_device rd;
  const std::uint64_t seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  ctx.err << "seed " << seed << '\n';
  return seed;
}

void write_provenance(const std::string& artifact, const Context& ctx, std::optional<std::uint64_t> seed,
                      bool seed_generated, KeyValues extra = {}) {
  if (is_stdout(artifact)) return;
  std::string replay = join_args(ctx.args);
  if (seed && seed_generated) replay += " --seed " + std::to_string(*seed);
  KeyValues kv{{"artifact", artifact}, {"command", replay}, {"version", kVersion}, {"prng", kPrngName}};
  if (seed) kv.emplace_back("seed", std::to_string(*seed));
  kv.insert(kv.end(), extra.begin(), extra.end());
  write_key_values(artifact + ".prov", kv);
}

// Writes through `fill` to a file or to ctx.out.
template <typename Fill>
void emit(const std::string& path, Context& ctx, Fill fill) {
  if (is_stdout(path)) {
    fill(ctx.out);
    return;
  }
  auto f = open_output(path);
  fill(f);
  f.flush();
  if (!f) throw Error(ErrorKind::Io, "failed writing " + path);
}

std::vector<std::uint64_t> ids_of(const Dataset& ds) {
  std::vector<std::uint64_t> ids;
  for (const auto& r : ds.records) ids.push_back(r.id);
  return ids;
}

void require_ok_records(const Dataset& ds, const std::string& what) {
  for (const auto& r : ds.records) {
    if (r.status != RecordStatus::Ok) {
      throw Error(ErrorKind::Validation, what + ": record " + std::to_string(r.id) + " has status " +
                                             to_string(r.status) + "; run clean first");
    }
  }
  if (ds.records.empty()) throw Error(ErrorKind::Validation, what + ": dataset has no records");
}

// Ordered axis=v1,v2 lines; '#' comments.
TuningGrid read_grid_file(const std::string& path) {
  auto in = open_input(path);
  TuningGrid grid;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::Validation, "grid line '" + line + "' lacks '='");
    GridAxis axis{trim(line.substr(0, eq)), {}};
    for (const auto& v : split(line.substr(eq + 1), ',')) axis.values.push_back(trim(v));
    grid.axes.push_back(std::move(axis));
  }
  return grid;
}

// ---- gen-surface ----------------------------------------------------------

struct GenSurfaceArgs {
  int k = 7;
  double L = 1000.0;
  double H = 0.7;
  double sigma0 = 10.0;
  std::string corners = "0,0,0,0";
  std::string seed;
  bool raw = false;
  std::string out;
};

int gen_surface(const GenSurfaceArgs& a, Context& ctx) {
  bool generated = false;
  SurfaceSpec spec;
  spec.iterations = a.k;
  spec.scan_length_um = a.L;
  spec.hurst = a.H;
  spec.sigma0_um = a.sigma0;
  const auto c = parse_double_list(a.corners, "--corners");
  if (c.size() != 4) throw Error(ErrorKind::InvalidSpec, "--corners needs four values");
  std::copy(c.begin(), c.end(), spec.corner_heights_um.begin());
  spec.seed = resolve_seed(a.seed, ctx, generated);
  spec.validate();
  auto field = rmd_generate(spec);
  if (!a.raw) field = shift_to_datum(field);
  SurfaceHeader header{spec.hurst, spec.sigma0_um, spec.seed, kPrngName, !a.raw};
  emit(a.out, ctx, [&](std::ostream& o) { write_surface(o, field, header); });
  write_provenance(a.out, ctx, spec.seed, generated);
  return kOk;
}

// ---- stats ---------------------------------------------------------------

int stats(const std::string& surface, const std::string& out, Context& ctx) {
  const auto file = load_surface(surface);
  const auto v = characterize(file.field).to_array();
  emit(out, ctx, [&](std::ostream& o) {
    o << "statistic,value\n";
    for (std::size_t i = 0; i < v.size(); ++i) o << StatVector::column_names()[i] << ',' << fmt17(v[i]) << '\n';
  });
  write_provenance(out, ctx, std::nullopt, false, {{"surface", surface}});
  return kOk;
}

// ---- solve ---------------------------------------------------------------

struct SolveArgs {
  std::string surface;
  double delta = 10.0;
  double E = 1.0;
  double nu = 0.3;
  double tol = 1e-8;
  int max_sweeps = 100;
  std::string init = "empty";
  std::string out;
};

int solve(const SolveArgs& a, Context& ctx) {
  const auto file = load_surface(a.surface);
  Material mat{a.E, a.nu};
  mat.validate();
  SolverOptions opt;
  opt.tol = a.tol;
  opt.max_sweeps = a.max_sweeps;
  if (a.init == "empty") opt.init = InitialActiveSet::Empty;
  else if (a.init == "positive") opt.init = InitialActiveSet::PositiveInterference;
  else throw Error(ErrorKind::Validation, "--init must be empty or positive");
  const auto op = build_influence(file.field.n_points(), file.field.grid_spacing(), mat);
  const auto sol = solve_contact(*op, file.field, LoadCase{a.delta}, opt);
  emit(a.out, ctx, [&](std::ostream& o) { write_solution_csv(o, file.field, sol); });
  ctx.err << "n_c " << sol.contact_count << "  A_e " << fmt6(sol.effective_area) << "%  F "
          << fmt6(sol.total_force) << " N  sweeps " << sol.iterations << '\n';
  write_provenance(a.out, ctx, std::nullopt, false, {{"surface", a.surface}});
  return kOk;
}

// ---- hertz-bench -----------------------------------------------------------

struct HertzArgs {
  double R = 5000.0;
  double L = 1000.0;
  std::size_t n = 129;
  double delta_max = 1.0;
  double delta_step = 0.1;
  double E = 1.0;
  double nu = 0.3;
  double tol = 1e-8;
  std::string out;
};

int hertz_bench(const HertzArgs& a, Context& ctx) {
  if (!(a.delta_step > 0.0) || !(a.delta_max >= a.delta_step)) {
    throw Error(ErrorKind::Validation, "need 0 < --delta-step <= --delta-max");
  }
  Material mat{a.E, a.nu};
  mat.validate();
  const auto field = paraboloid_field(a.R, a.L, a.n);
  const auto op = build_influence(field.n_points(), field.grid_spacing(), mat);
  SolverOptions opt;
  opt.tol = a.tol;
  const auto steps = static_cast<int>(std::floor(a.delta_max / a.delta_step + 1e-9));
  emit(a.out, ctx, [&](std::ostream& o) {
    o << "delta_um,F_bem,F_analytical,Ae_bem,An_analytical\n";
    for (int s = 1; s <= steps; ++s) {
      const double delta = s * a.delta_step;
      const auto sol = solve_contact(*op, field, LoadCase{delta}, opt);
      const auto ref = hertz_reference(a.R, delta, mat, a.L);
      o << fmt17(delta) << ',' << fmt17(sol.total_force) << ',' << fmt17(ref.force) << ','
        << fmt17(sol.effective_area) << ',' << fmt17(ref.area_percent) << '\n';
    }
  });
  write_provenance(a.out, ctx, std::nullopt, false);
  return kOk;
}

// ---- build-db --------------------------------------------------------------

struct BuildDbArgs {
  std::string config;
  std::string out;
  std::string seed;
  int jobs = 1;
  bool no_timing = false;
};

int build_db(const BuildDbArgs& a, Context& ctx) {
  std::map<std::string, std::string> kv;
  if (!a.config.empty()) kv = read_key_values(a.config);
  bool generated = false;
  if (!a.seed.empty() || !kv.count("seed")) {
    kv["seed"] = std::to_string(resolve_seed(a.seed, ctx, generated));
  }
  kv["jobs"] = std::to_string(a.jobs);
  auto config = DatabaseConfig::from_key_values(kv);
  config.record_timing = !a.no_timing;
  const auto ds = build_database(config);
  save_dataset(a.out, ds);
  write_dataset_sidecar(a.out, ds);
  std::size_t ok = 0;
  for (const auto& r : ds.records) ok += r.status == RecordStatus::Ok;
  ctx.err << ds.records.size() << " records, " << ok << " ok\n";
  auto prov = config.to_key_values();
  std::erase_if(prov, [](const auto& kv) { return kv.first == "seed"; });
  prov.emplace_back("config_hash", ds.config_hash);
  write_provenance(a.out, ctx, config.seed, generated, prov);
  return kOk;
}

// ---- clean / split ---------------------------------------------------------

int clean_cmd(const std::string& in, const std::string& out, Context& ctx) {
  const auto result = clean(load_dataset(in));
  save_dataset(out, result.dataset);
  ctx.err << "removed " << result.removed << " of " << result.removed + result.dataset.records.size()
          << " records\n";
  write_provenance(out, ctx, std::nullopt, false,
                   {{"input", in}, {"removed", std::to_string(result.removed)}});
  return kOk;
}

struct SplitArgs {
  std::string in;
  std::string train_out;
  std::string test_out;
  double fraction = 0.8;
  std::string seed;
};

int split_cmd(const SplitArgs& a, Context& ctx) {
  bool generated = false;
  const auto seed = resolve_seed(a.seed, ctx, generated);
  const auto [train, test] = split(load_dataset(a.in), a.fraction, seed);
  save_dataset(a.train_out, train);
  save_dataset(a.test_out, test);
  ctx.err << train.records.size() << " train, " << test.records.size() << " test\n";
  for (const auto& p : {a.train_out, a.test_out}) write_provenance(p, ctx, seed, generated, {{"input", a.in}});
  return kOk;
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string params;
  std::string model = "krr";
  std::string kernel = "rbf";
  double gamma = 5.0;
  double lambda = 1e-5;
  double alpha = 0.0374;
  std::string normalization = "l2-row";
  std::string out;
  bool no_timing = false;
};

int train_cmd(TrainArgs a, const CLI::App& sub, Context& ctx) {
  if (!a.params.empty()) {
    // Values from a tune summary, unless the flag was given explicitly.
    const auto kv = read_key_values(a.params);
    auto take = [&](const char* key, const char* flag, auto apply) {
      const auto it = kv.find(key);
      if (it != kv.end() && sub.count(flag) == 0) apply(it->second);
    };
    take("model", "--model", [&](const std::string& v) { a.model = v; });
    take("kernel", "--kernel", [&](const std::string& v) { a.kernel = v; });
    take("gamma", "--gamma", [&](const std::string& v) { a.gamma = parse_double(v, "gamma"); });
    take("lambda", "--lambda", [&](const std::string& v) { a.lambda = parse_double(v, "lambda"); });
    take("alpha", "--alpha", [&](const std::string& v) { a.alpha = parse_double(v, "alpha"); });
    take("normalization", "--normalization", [&](const std::string& v) { a.normalization = v; });
  }
  const auto ds = load_dataset(a.data);
  require_ok_records(ds, a.data);
  const auto kind = parse_model_kind(a.model);
  KernelSpec spec{parse_kernel_family(a.kernel), a.gamma};
  const double reg = kind == ModelKind::Krr ? a.lambda : a.alpha;
  const auto mode = parse_normalization(a.normalization);
  // Validates row norms with record ids before fitting.
  Preprocessor::fit(mode, feature_matrix(ds)).apply(feature_matrix(ds), ids_of(ds));
  const auto model = train_surrogate(kind, feature_matrix(ds), target_vector(ds), spec, reg, mode);
  save_model(a.out, model);
  const double fit = a.no_timing ? 0.0 : model.fit_time_s();
  ctx.err << "trained " << to_string(kind) << " on " << model.training_size() << " records in " << fmt6(fit)
          << " s\n";
  write_provenance(a.out, ctx, std::nullopt, false, {{"data", a.data}, {"fit_time_s", fmt17(fit)}});
  return kOk;
}

// ---- tune ------------------------------------------------------------------

struct TuneArgs {
  std::string data;
  std::string model = "krr";
  std::string grid;
  std::size_t folds = 5;
  double gamma = 5.0;
  std::string normalization = "l2-row";
  std::string seed;
  int jobs = 1;
  std::string out;
  std::string best_out;
  bool no_timing = false;
};

int tune_cmd(const TuneArgs& a, Context& ctx) {
  bool generated = false;
  const auto seed = resolve_seed(a.seed, ctx, generated);
  const auto ds = load_dataset(a.data);
  require_ok_records(ds, a.data);
  const auto kind = parse_model_kind(a.model);
  const auto mode = parse_normalization(a.normalization);
  TuningGrid grid = a.grid.empty() ? (kind == ModelKind::Krr ? default_krr_grid() : default_gp_grid())
                                   : read_grid_file(a.grid);
  grid.folds = a.folds;
  const Eigen::MatrixXd raw = feature_matrix(ds);
  const Eigen::MatrixXd x = Preprocessor::fit(mode, raw).apply(raw, ids_of(ds));
  const auto trainer = kind == ModelKind::Krr ? krr_trainer() : gp_trainer(a.gamma);
  GridSearchOptions opt{seed, a.jobs, !a.no_timing};
  const auto result = grid_search(x, target_vector(ds), grid, trainer, opt);
  emit(a.out, ctx, [&](std::ostream& o) { write_cv_table(o, result); });

  const auto& best = result.best_row();
  KeyValues summary{{"model", to_string(kind)}, {"normalization", to_string(mode)}};
  if (kind == ModelKind::Gp) {
    summary.emplace_back("kernel", "rbf");
    summary.emplace_back("gamma", fmt17(a.gamma));
  }
  for (const auto& [k, v] : best.params) summary.emplace_back(k, v);
  summary.emplace_back("cv_mean_nmse", fmt17(best.mean_score));
  summary.emplace_back("combinations", std::to_string(result.rows.size()));
  summary.emplace_back("tune_time_s", fmt17(result.total_time_s));
  if (!a.best_out.empty()) {
    write_key_values(a.best_out, summary);
    write_provenance(a.best_out, ctx, seed, generated, {{"data", a.data}});
  }
  ctx.err << "best combination " << best.id << ':';
  for (const auto& [k, v] : best.params) ctx.err << ' ' << k << '=' << v;
  ctx.err << "  cv nMSE " << fmt6(best.mean_score) << "%\n";
  write_provenance(a.out, ctx, seed, generated, {{"data", a.data}});
  return kOk;
}

// ---- predict / evaluate ----------------------------------------------------

int predict_cmd(const std::string& model_path, const std::string& data, const std::string& out, Context& ctx) {
  const auto model = load_model(model_path);
  const auto ds = load_dataset(data);
  require_ok_records(ds, data);
  const Eigen::MatrixXd raw = feature_matrix(ds);
  model.prep.apply(raw, ids_of(ds));
  const auto pred = model.predict_with_variance(raw);
  emit(out, ctx, [&](std::ostream& o) {
    o << "id,actual,predicted,variance\n";
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      o << ds.records[i].id << ',' << fmt17(ds.records[i].effective_area) << ',' << fmt17(pred.mean(row)) << ','
        << fmt17(pred.variance(row)) << '\n';
    }
  });
  write_provenance(out, ctx, std::nullopt, false, {{"model", model_path}, {"data", data}});
  return kOk;
}

int evaluate_cmd(const std::vector<std::string>& models, std::vector<std::string> labels, const std::string& data,
                 const std::string& out, Context& ctx) {
  if (!labels.empty() && labels.size() != models.size()) {
    throw Error(ErrorKind::Validation, "--label must be given once per --model");
  }
  const auto ds = load_dataset(data);
  require_ok_records(ds, data);
  const Eigen::MatrixXd raw = feature_matrix(ds);
  const Eigen::VectorXd y = target_vector(ds);
  std::vector<MetricReport> reports;
  for (std::size_t i = 0; i < models.size(); ++i) {
    const auto model = load_model(models[i]);
    model.prep.apply(raw, ids_of(ds));
    reports.push_back(compute_metrics(y, model.predict(raw)));
    if (labels.size() < models.size()) labels.push_back(to_string(model.kind) + std::to_string(i));
  }
  if (!is_stdout(out)) {
    emit(out, ctx, [&](std::ostream& o) { write_metrics_csv(o, labels, reports); });
    write_provenance(out, ctx, std::nullopt, false, {{"data", data}});
  }
  write_metrics_table(ctx.out, labels, reports);
  return kOk;
}

// ---- cost / break-even -----------------------------------------------------

struct LedgerArgs {
  std::optional<double> t_database, t_tune, t_fit, t_pred, t_bem;
  std::string db_meta;
  std::string tune_summary;
  std::string model;
  std::string data;
  std::string seed;
  std::size_t samples = 2000;
};

CostLedger assemble_ledger(const LedgerArgs& a, Context& ctx) {
  CostLedger l;
  if (!a.db_meta.empty()) {
    const auto kv = read_key_values(a.db_meta);
    const double total = parse_double(kv.at("total_sim_time_s"), "total_sim_time_s");
    const double n = parse_double(kv.at("records"), "records");
    l.t_database_s = total;
    l.mean_bem_time_s = n > 0 ? total / n : 0.0;
  }
  if (!a.tune_summary.empty()) {
    const auto kv = read_key_values(a.tune_summary);
    l.t_tune_s = parse_double(kv.at("tune_time_s"), "tune_time_s");
  }
  if (!a.model.empty()) {
    const auto model = load_model(a.model);
    const auto prov = a.model + ".prov";
    if (std::ifstream(prov)) {
      const auto kv = read_key_values(prov);
      if (kv.count("fit_time_s")) l.t_fit_s = parse_double(kv.at("fit_time_s"), "fit_time_s");
    }
    if (!a.t_pred) {
      if (a.data.empty()) throw Error(ErrorKind::Validation, "prediction timing needs --data with --model");
      bool generated = false;
      const auto seed = resolve_seed(a.seed, ctx, generated);
      const auto ds = load_dataset(a.data);
      require_ok_records(ds, a.data);
      l.t_pred_per_sample_s = estimate_prediction_time(
          [&](const Eigen::MatrixXd& q) { return model.predict(q); }, feature_matrix(ds), seed, a.samples);
    }
  }
  if (a.t_database) l.t_database_s = *a.t_database;
  if (a.t_tune) l.t_tune_s = *a.t_tune;
  if (a.t_fit) l.t_fit_s = *a.t_fit;
  if (a.t_pred) l.t_pred_per_sample_s = *a.t_pred;
  if (a.t_bem) l.mean_bem_time_s = *a.t_bem;
  l.validate();
  return l;
}

void add_ledger_options(CLI::App* sub, LedgerArgs& a) {
  sub->add_option("--t-database", a.t_database, "Database generation time t_d in s (overrides --db-meta)");
  sub->add_option("--t-tune", a.t_tune, "Hyperparameter tuning time t_h in s");
  sub->add_option("--t-fit", a.t_fit, "Final model fit time t_f in s");
  sub->add_option("--t-pred", a.t_pred, "Prediction time per sample t_p in s");
  sub->add_option("--t-bem", a.t_bem, "Mean reference simulation time in s (overrides --db-meta)");
  sub->add_option("--db-meta", a.db_meta, "Database sidecar (.meta) supplying t_d and the mean simulation time");
  sub->add_option("--tune-summary", a.tune_summary, "Tune summary file supplying t_h");
  sub->add_option("--model", a.model, "Model file; supplies t_f from its .prov and times predictions");
  sub->add_option("--data", a.data, "Dataset whose feature ranges bound the timing inputs");
  sub->add_option("--seed", a.seed, "Seed for the timing inputs (generated and printed if omitted)");
  sub->add_option("--samples", a.samples, "Number of timing inputs")->capture_default_str();
}

void print_ledger(std::ostream& o, const CostLedger& l) {
  o << "t_database_s=" << fmt17(l.t_database_s) << '\n'
    << "t_tune_s=" << fmt17(l.t_tune_s) << '\n'
    << "t_fit_s=" << fmt17(l.t_fit_s) << '\n'
    << "t_pred_per_sample_s=" << fmt17(l.t_pred_per_sample_s) << '\n'
    << "mean_bem_time_s=" << fmt17(l.mean_bem_time_s) << '\n';
}

int cost_cmd(const LedgerArgs& a, std::uint64_t n_max, std::uint64_t step, const std::string& curve, Context& ctx) {
  const auto l = assemble_ledger(a, ctx);
  print_ledger(ctx.out, l);
  const auto n_star = break_even(l);
  ctx.out << "break_even=" << (n_star ? std::to_string(*n_star) : std::string("never-profitable")) << '\n';
  if (!curve.empty()) {
    const std::uint64_t top = n_max > 0 ? n_max : (n_star ? 2 * *n_star : 1000);
    const std::uint64_t st = step > 0 ? step : std::max<std::uint64_t>(1, top / 200);
    emit(curve, ctx, [&](std::ostream& o) { write_break_even_curve(o, l, top, st); });
    write_provenance(curve, ctx, std::nullopt, false);
  }
  return kOk;
}

int break_even_cmd(const LedgerArgs& a, Context& ctx) {
  const auto n_star = break_even(assemble_ledger(a, ctx));
  ctx.out << (n_star ? std::to_string(*n_star) : std::string("never-profitable")) << '\n';
  return kOk;
}

int dispatch(Context& ctx) {
  CLI::App app{"Rough-surface contact simulation and kernel surrogate toolkit", "roughsim"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1, 1);

  GenSurfaceArgs gen;
  auto* s_gen = app.add_subcommand("gen-surface", "Generate a random-midpoint-displacement height field");
  s_gen->add_option("--k", gen.k, "Subdivision passes; grid is (2^k+1)^2")->capture_default_str();
  s_gen->add_option("--L", gen.L, "Scan length in um")->capture_default_str();
  s_gen->add_option("--H", gen.H, "Hurst exponent, 0 < H < 1")->capture_default_str();
  s_gen->add_option("--sigma0", gen.sigma0, "Initial noise standard deviation in um")->capture_default_str();
  s_gen->add_option("--corners", gen.corners, "Corner heights (0,0),(0,n-1),(n-1,0),(n-1,n-1)")->capture_default_str();
  s_gen->add_option("--seed", gen.seed, "Random seed (generated and printed if omitted)");
  s_gen->add_flag("--raw", gen.raw, "Keep raw heights instead of shifting the minimum to zero");
  s_gen->add_option("-o,--out", gen.out, "Output surface file (stdout if omitted)");

  std::string stats_surface, stats_out;
  auto* s_stats = app.add_subcommand("stats", "Compute the 22 topographic statistics of a surface");
  s_stats->add_option("--surface", stats_surface, "Surface file")->required();
  s_stats->add_option("-o,--out", stats_out, "Output CSV (stdout if omitted)");

  SolveArgs sol;
  auto* s_solve = app.add_subcommand("solve", "Solve rigid rough surface against elastic half-space contact");
  s_solve->add_option("--surface", sol.surface, "Surface file")->required();
  s_solve->add_option("--delta", sol.delta, "Far-field displacement in um")->capture_default_str();
  s_solve->add_option("--E", sol.E, "Young's modulus in N/um^2")->capture_default_str();
  s_solve->add_option("--nu", sol.nu, "Poisson ratio")->capture_default_str();
  s_solve->add_option("--tol", sol.tol, "Relative solver tolerance")->capture_default_str();
  s_solve->add_option("--max-sweeps", sol.max_sweeps, "Active-set sweep limit")->capture_default_str();
  s_solve->add_option("--init", sol.init, "Initial active set: empty or positive")->capture_default_str();
  s_solve->add_option("-o,--out", sol.out, "Per-node solution CSV (stdout if omitted)");

  HertzArgs hz;
  auto* s_hertz = app.add_subcommand("hertz-bench", "Compare the solver with Hertz theory for a paraboloid");
  s_hertz->add_option("--R", hz.R, "Paraboloid radius in um")->capture_default_str();
  s_hertz->add_option("--L", hz.L, "Scan length in um")->capture_default_str();
  s_hertz->add_option("--n", hz.n, "Grid points per side")->capture_default_str();
  s_hertz->add_option("--delta-max", hz.delta_max, "Largest displacement in um")->capture_default_str();
  s_hertz->add_option("--delta-step", hz.delta_step, "Displacement step in um")->capture_default_str();
  s_hertz->add_option("--E", hz.E, "Young's modulus in N/um^2")->capture_default_str();
  s_hertz->add_option("--nu", hz.nu, "Poisson ratio")->capture_default_str();
  s_hertz->add_option("--tol", hz.tol, "Relative solver tolerance")->capture_default_str();
  s_hertz->add_option("-o,--out", hz.out, "Output CSV (stdout if omitted)");

  BuildDbArgs db;
  auto* s_db = app.add_subcommand("build-db", "Generate a database of (statistics, displacement, area) records");
  s_db->add_option("--config", db.config,
                   "key=value config: iterations, scan_length_um, sigma0_lo, sigma0_hi, hurst_lo, hurst_hi, "
                   "surfaces, deltas_per_surface, strata (lo:hi:w;...), youngs, poisson, tol, max_sweeps, seed. "
                   "Unset keys take defaults: iterations=5, scan_length_um=1000, sigma0 3..16, H 0.5..0.8, "
                   "surfaces=10, deltas_per_surface=2, strata=5:25:0.7;25:45:0.3, youngs=1, poisson=0.3, "
                   "tol=1e-8, max_sweeps=100");
  s_db->add_option("-o,--out", db.out, "Output database CSV")->required();
  s_db->add_option("--seed", db.seed, "Master seed (overrides the config; generated and printed if absent)");
  s_db->add_option("--jobs", db.jobs, "Worker threads")->capture_default_str();
  s_db->add_flag("--no-timing", db.no_timing, "Write zero timings so output is byte-reproducible");

  std::string clean_in, clean_out;
  auto* s_clean = app.add_subcommand("clean", "Drop records whose simulation failed");
  s_clean->add_option("--in", clean_in, "Input database CSV")->required();
  s_clean->add_option("-o,--out", clean_out, "Output database CSV")->required();

  SplitArgs sp;
  auto* s_split = app.add_subcommand("split", "Shuffle and split a database into train and test sets");
  s_split->add_option("--in", sp.in, "Input database CSV")->required();
  s_split->add_option("--train-out", sp.train_out, "Training set CSV")->required();
  s_split->add_option("--test-out", sp.test_out, "Test set CSV")->required();
  s_split->add_option("--fraction", sp.fraction, "Training fraction")->capture_default_str();
  s_split->add_option("--seed", sp.seed, "Shuffle seed (generated and printed if omitted)");

  TrainArgs tr;
  auto* s_train = app.add_subcommand("train", "Fit a kernel ridge or Gaussian process model");
  s_train->add_option("--data", tr.data, "Training database CSV")->required();
  s_train->add_option("--params", tr.params, "Tune summary whose hyperparameters are used unless overridden");
  s_train->add_option("--model", tr.model, "krr or gp")->capture_default_str();
  s_train->add_option("--kernel", tr.kernel, "rbf or linear")->capture_default_str();
  s_train->add_option("--gamma", tr.gamma, "rbf width gamma")->capture_default_str();
  s_train->add_option("--lambda", tr.lambda, "KRR regularization")->capture_default_str();
  s_train->add_option("--alpha", tr.alpha, "GP noise variance")->capture_default_str();
  s_train->add_option("--normalization", tr.normalization, "l2-row, standardize or none")->capture_default_str();
  s_train->add_option("-o,--out", tr.out, "Output model file")->required();
  s_train->add_flag("--no-timing", tr.no_timing, "Record zero fit time in the provenance file");

  TuneArgs tu;
  auto* s_tune = app.add_subcommand("tune", "Grid search with k-fold cross-validation");
  s_tune->add_option("--data", tu.data, "Training database CSV")->required();
  s_tune->add_option("--model", tu.model, "krr or gp")->capture_default_str();
  s_tune->add_option("--grid", tu.grid,
                     "Grid file of ordered axis=v1,v2,... lines. Defaults: krr lambda (8 values in 1e-5..1) x "
                     "gamma (10 values in 0.01..150) x kernel {rbf,linear}; gp alpha (110 log-spaced in 1e-3..1)");
  s_tune->add_option("--folds", tu.folds, "Number of CV folds")->capture_default_str();
  s_tune->add_option("--gamma", tu.gamma, "rbf gamma used by gp tuning")->capture_default_str();
  s_tune->add_option("--normalization", tu.normalization, "l2-row, standardize or none")->capture_default_str();
  s_tune->add_option("--seed", tu.seed, "Fold seed (generated and printed if omitted)");
  s_tune->add_option("--jobs", tu.jobs, "Worker threads")->capture_default_str();
  s_tune->add_option("-o,--out", tu.out, "CV table CSV (stdout if omitted)");
  s_tune->add_option("--best-out", tu.best_out, "key=value summary of the best combination");
  s_tune->add_flag("--no-timing", tu.no_timing, "Write zero timings so output is byte-reproducible");

  std::string pr_model, pr_data, pr_out;
  auto* s_pred = app.add_subcommand("predict", "Predict effective areas for a database");
  s_pred->add_option("--model", pr_model, "Model file")->required();
  s_pred->add_option("--data", pr_data, "Database CSV")->required();
  s_pred->add_option("-o,--out", pr_out, "Predictions CSV (stdout if omitted)");

  std::vector<std::string> ev_models, ev_labels;
  std::string ev_data, ev_out;
  auto* s_eval = app.add_subcommand("evaluate", "Accuracy metrics of one or more models on a database");
  s_eval->add_option("--model", ev_models, "Model file (repeatable)")->required();
  s_eval->add_option("--label", ev_labels, "Label per model (repeatable)");
  s_eval->add_option("--data", ev_data, "Database CSV")->required();
  s_eval->add_option("-o,--out", ev_out, "Metrics CSV; a table is always printed");

  LedgerArgs cost_ledger;
  std::uint64_t n_max = 0, step = 0;
  std::string curve;
  auto* s_cost = app.add_subcommand("cost", "Cost ledger, break-even point and cost curves");
  add_ledger_options(s_cost, cost_ledger);
  s_cost->add_option("--curve", curve, "Break-even curve CSV (n, reference_s, surrogate_s)");
  s_cost->add_option("--n-max", n_max, "Largest n on the curve (0 means twice the break-even point)")
      ->capture_default_str();
  s_cost->add_option("--step", step, "Curve step (0 means n-max/200)")->capture_default_str();

  LedgerArgs be_ledger;
  auto* s_be = app.add_subcommand("break-even", "Smallest evaluation count where the surrogate pays off");
  add_ledger_options(s_be, be_ledger);

  std::vector<std::string> argv_store{"roughsim"};
  argv_store.insert(argv_store.end(), ctx.args.begin(), ctx.args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, ctx.out, ctx.err);
    return code == 0 ? kOk : kUsage;
  }

  if (s_gen->parsed()) return gen_surface(gen, ctx);
  if (s_stats->parsed()) return stats(stats_surface, stats_out, ctx);
  if (s_solve->parsed()) return solve(sol, ctx);
  if (s_hertz->parsed()) return hertz_bench(hz, ctx);
  if (s_db->parsed()) return build_db(db, ctx);
  if (s_clean->parsed()) return clean_cmd(clean_in, clean_out, ctx);
  if (s_split->parsed()) return split_cmd(sp, ctx);
  if (s_train->parsed()) return train_cmd(tr, *s_train, ctx);
  if (s_tune->parsed()) return tune_cmd(tu, ctx);
  if (s_pred->parsed()) return predict_cmd(pr_model, pr_data, pr_out, ctx);
  if (s_eval->parsed()) return evaluate_cmd(ev_models, ev_labels, ev_data, ev_out, ctx);
  if (s_cost->parsed()) return cost_cmd(cost_ledger, n_max, step, curve, ctx);
  if (s_be->parsed()) return break_even_cmd(be_ledger, ctx);
  return kUsage;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Context ctx{args, out, err};
  try {
    return dispatch(ctx);
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return e.is_validation() ? kValidation : kRuntime;
  } catch (const std::out_of_range& e) {
    err << "error: missing entry: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntime;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace roughsim::cli
