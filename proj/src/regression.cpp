#include "roughsim/regression.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

#include "roughsim/error.hpp"
#include "roughsim/evaluation.hpp"
#include "roughsim/random.hpp"
#include "roughsim/text_io.hpp"

namespace roughsim {

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

struct DualSolve {
  Eigen::VectorXd alpha;
  Eigen::LLT<Eigen::MatrixXd> factor;
  double jitter = 0.0;
};

bool factor_ok(const Eigen::LLT<Eigen::MatrixXd>& llt, Eigen::Index n) {
  return llt.info() == Eigen::Success &&
         llt.rcond() > static_cast<double>(n) * std::numeric_limits<double>::epsilon();
}

// (K + reg I) alpha = y. Jitter escalates from 1e-10 to 1e-4 of the mean
// diagonal; refinement steps pull alpha back toward the unjittered system.
DualSolve solve_dual(const Eigen::MatrixXd& k, const Eigen::VectorXd& y, double reg, bool allow_jitter) {
  const Eigen::Index n = k.rows();
  Eigen::MatrixXd a = k;
  a.diagonal().array() += reg;
  DualSolve out;
  out.factor.compute(a);
  if (!factor_ok(out.factor, n)) {
    if (!allow_jitter) {
      throw Error(ErrorKind::RankDeficiency, "kernel matrix is singular with zero regularization");
    }
    const double scale = std::max(a.trace() / static_cast<double>(n), std::numeric_limits<double>::min());
    bool done = false;
    for (double rel = 1e-10; rel <= 1e-4 * 1.0000001; rel *= 10.0) {
      Eigen::MatrixXd shifted = a;
      shifted.diagonal().array() += rel * scale;
      out.factor.compute(shifted);
      if (factor_ok(out.factor, n)) {
        out.jitter = rel * scale;
        done = true;
        break;
      }
    }
    if (!done) throw Error(ErrorKind::IllConditionedKernel, "kernel matrix stays singular at maximum jitter");
  }
  out.alpha = out.factor.solve(y);
  Eigen::VectorXd r = y - a * out.alpha;
  double rnorm = r.norm();
  for (int it = 0; it < 20 && rnorm > 1e-12 * y.norm(); ++it) {
    const Eigen::VectorXd next = out.alpha + out.factor.solve(r);
    const Eigen::VectorXd rn = y - a * next;
    if (!(rn.norm() < 0.5 * rnorm)) break;
    out.alpha = next;
    r = rn;
    rnorm = rn.norm();
  }
  return out;
}

void check_training_data(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.rows() < 1) throw Error(ErrorKind::Validation, "training set is empty");
  if (x.rows() != y.size()) throw Error(ErrorKind::DimensionMismatch, "inputs and targets differ in length");
  if (!x.allFinite() || !y.allFinite()) throw Error(ErrorKind::Validation, "training data is not finite");
}

double lookup(const Combination& params, const std::string& key) {
  const auto it = params.find(key);
  if (it == params.end()) throw Error(ErrorKind::Validation, "grid combination lacks '" + key + "'");
  return parse_double(it->second, key);
}

std::vector<std::string> log_spaced(double lo, double hi, std::size_t count) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", std::pow(10.0, std::log10(lo) + t * (std::log10(hi) - std::log10(lo))));
    out.emplace_back(buf);
  }
  return out;
}

}  // namespace

const char* to_string(KernelFamily family) {
  return family == KernelFamily::Rbf ? "rbf" : "linear";
}

KernelFamily parse_kernel_family(const std::string& text) {
  if (text == "rbf") return KernelFamily::Rbf;
  if (text == "linear") return KernelFamily::Linear;
  throw Error(ErrorKind::Validation, "unknown kernel '" + text + "'");
}

void KernelSpec::validate() const {
  if (family == KernelFamily::Rbf && !(gamma > 0.0 && std::isfinite(gamma))) {
    throw Error(ErrorKind::Validation, "rbf gamma must be positive");
  }
}

Eigen::MatrixXd gram(const Eigen::MatrixXd& x, const Eigen::MatrixXd& x2, const KernelSpec& spec) {
  spec.validate();
  if (x.cols() != x2.cols()) throw Error(ErrorKind::DimensionMismatch, "kernel inputs differ in width");
  if (spec.family == KernelFamily::Linear) return x * x2.transpose();
  // Column-per-point copies keep the distance loop contiguous.
  const Eigen::MatrixXd a = x.transpose();
  const Eigen::MatrixXd b = x2.transpose();
  Eigen::MatrixXd k(x.rows(), x2.rows());
  for (Eigen::Index j = 0; j < b.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.cols(); ++i) {
      k(i, j) = std::exp(-spec.gamma * (a.col(i) - b.col(j)).squaredNorm());
    }
  }
  return k;
}

KernelRidgeModel krr_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda,
                         const KernelSpec& spec) {
  check_training_data(x, y);
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error(ErrorKind::Validation, "lambda must be >= 0");
  const auto t0 = clock_type::now();
  auto solved = solve_dual(gram(x, x, spec), y, lambda, lambda > 0.0);
  KernelRidgeModel m;
  m.kernel = spec;
  m.lambda = lambda;
  m.training_inputs = x;
  m.dual_alpha = std::move(solved.alpha);
  m.jitter = solved.jitter;
  m.fit_time_s = seconds_since(t0);
  return m;
}

Eigen::VectorXd krr_predict(const KernelRidgeModel& model, const Eigen::MatrixXd& xq) {
  if (static_cast<std::size_t>(xq.cols()) != model.dimension()) {
    throw Error(ErrorKind::DimensionMismatch, "query width does not match the model");
  }
  return gram(xq, model.training_inputs, model.kernel) * model.dual_alpha;
}

GpModel gp_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double noise_variance,
               const KernelSpec& spec) {
  check_training_data(x, y);
  if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance)) {
    throw Error(ErrorKind::Validation, "noise variance must be >= 0");
  }
  const auto t0 = clock_type::now();
  auto solved = solve_dual(gram(x, x, spec), y, noise_variance, true);
  GpModel m;
  m.kernel = spec;
  m.noise_variance = noise_variance;
  m.training_inputs = x;
  m.dual_alpha = std::move(solved.alpha);
  m.factor = std::move(solved.factor);
  m.jitter = solved.jitter;
  m.fit_time_s = seconds_since(t0);
  return m;
}

GpModel gp_restore(const KernelSpec& spec, double noise_variance, double jitter,
                   Eigen::MatrixXd training_inputs, Eigen::VectorXd dual_alpha) {
  if (training_inputs.rows() != dual_alpha.size()) {
    throw Error(ErrorKind::DimensionMismatch, "stored inputs and coefficients differ in length");
  }
  GpModel m;
  m.kernel = spec;
  m.noise_variance = noise_variance;
  m.jitter = jitter;
  Eigen::MatrixXd a = gram(training_inputs, training_inputs, spec);
  a.diagonal().array() += noise_variance + jitter;
  m.factor.compute(a);
  if (m.factor.info() != Eigen::Success) {
    throw Error(ErrorKind::IllConditionedKernel, "stored GP system no longer factorizes");
  }
  m.training_inputs = std::move(training_inputs);
  m.dual_alpha = std::move(dual_alpha);
  return m;
}

Eigen::VectorXd gp_predict_mean(const GpModel& model, const Eigen::MatrixXd& xq) {
  if (static_cast<std::size_t>(xq.cols()) != model.dimension()) {
    throw Error(ErrorKind::DimensionMismatch, "query width does not match the model");
  }
  return gram(xq, model.training_inputs, model.kernel) * model.dual_alpha;
}

GpPrediction gp_predict(const GpModel& model, const Eigen::MatrixXd& xq) {
  if (static_cast<std::size_t>(xq.cols()) != model.dimension()) {
    throw Error(ErrorKind::DimensionMismatch, "query width does not match the model");
  }
  const Eigen::MatrixXd kq = gram(xq, model.training_inputs, model.kernel);
  GpPrediction out;
  out.mean = kq * model.dual_alpha;
  const Eigen::MatrixXd v = model.factor.matrixL().solve(kq.transpose());
  out.variance.resize(xq.rows());
  for (Eigen::Index i = 0; i < xq.rows(); ++i) {
    const double self = model.kernel.family == KernelFamily::Rbf ? 1.0 : xq.row(i).squaredNorm();
    out.variance(i) = std::max(0.0, self - v.col(i).squaredNorm());
  }
  return out;
}

std::vector<std::vector<std::size_t>> kfold_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorKind::Validation, "at least 2 folds are required");
  if (k > n) throw Error(ErrorKind::Validation, "more folds than samples");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng(seed).shuffle(order.begin(), order.end());
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = n / k + (f < n % k ? 1 : 0);
    folds[f].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                    order.begin() + static_cast<std::ptrdiff_t>(pos + size));
    pos += size;
  }
  return folds;
}

void TuningGrid::validate() const {
  if (axes.empty()) throw Error(ErrorKind::Validation, "tuning grid has no axes");
  for (const auto& a : axes) {
    if (a.values.empty()) throw Error(ErrorKind::Validation, "grid axis '" + a.name + "' is empty");
  }
  if (folds < 2) throw Error(ErrorKind::Validation, "at least 2 folds are required");
  if (metric != "nmse") throw Error(ErrorKind::Validation, "unsupported scoring metric '" + metric + "'");
}

std::size_t TuningGrid::size() const {
  std::size_t total = 1;
  for (const auto& a : axes) total *= a.values.size();
  return total;
}

std::vector<Combination> TuningGrid::combinations() const {
  validate();
  std::vector<Combination> out;
  const std::size_t total = size();
  out.reserve(total);
  for (std::size_t c = 0; c < total; ++c) {
    Combination combo;
    std::size_t rest = c;
    for (std::size_t a = axes.size(); a-- > 0;) {
      const auto& axis = axes[a];
      combo[axis.name] = axis.values[rest % axis.values.size()];
      rest /= axis.values.size();
    }
    out.push_back(std::move(combo));
  }
  return out;
}

GridSearchResult grid_search(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const TuningGrid& grid,
                             const Trainer& trainer, const GridSearchOptions& options) {
  check_training_data(x, y);
  const auto t_start = clock_type::now();
  const auto combos = grid.combinations();
  const auto folds = kfold_indices(static_cast<std::size_t>(x.rows()), grid.folds, options.seed);
  const std::size_t k = folds.size();

  GridSearchResult result;
  for (const auto& a : grid.axes) result.axis_names.push_back(a.name);
  result.rows.resize(combos.size());
  std::vector<double> scores(combos.size() * k, 0.0);
  std::vector<double> times(combos.size() * k, 0.0);
  std::vector<std::string> errors(combos.size() * k);

  auto run_task = [&](std::size_t task) {
    const std::size_t c = task / k;
    const std::size_t f = task % k;
    std::vector<std::uint8_t> is_val(static_cast<std::size_t>(x.rows()), 0);
    for (auto i : folds[f]) is_val[i] = 1;
    const auto n_val = static_cast<Eigen::Index>(folds[f].size());
    Eigen::MatrixXd xtr(x.rows() - n_val, x.cols()), xval(n_val, x.cols());
    Eigen::VectorXd ytr(x.rows() - n_val), yval(n_val);
    Eigen::Index it = 0, iv = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (is_val[static_cast<std::size_t>(i)]) {
        xval.row(iv) = x.row(i);
        yval(iv++) = y(i);
      } else {
        xtr.row(it) = x.row(i);
        ytr(it++) = y(i);
      }
    }
    const auto t0 = clock_type::now();
    try {
      const Eigen::VectorXd pred = trainer(xtr, ytr, xval, combos[c]);
      const double s = compute_metrics(yval, pred).nmse_percent;
      scores[task] = std::isfinite(s) ? s : std::numeric_limits<double>::infinity();
      if (!std::isfinite(s)) errors[task] = "non-finite score";
    } catch (const std::exception& e) {
      scores[task] = std::numeric_limits<double>::infinity();
      errors[task] = e.what();
    }
    times[task] = options.record_timing ? seconds_since(t0) : 0.0;
  };

  const std::size_t n_tasks = combos.size() * k;
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(options.jobs, 1)), n_tasks);
  if (workers <= 1) {
    for (std::size_t t = 0; t < n_tasks; ++t) run_task(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t t; (t = next.fetch_add(1)) < n_tasks;) run_task(t);
      });
    }
    for (auto& th : pool) th.join();
  }

  bool any = false;
  for (std::size_t c = 0; c < combos.size(); ++c) {
    auto& row = result.rows[c];
    row.id = c;
    row.params = combos[c];
    double sum = 0.0;
    for (std::size_t f = 0; f < k; ++f) {
      const std::size_t t = c * k + f;
      row.fold_scores.push_back(scores[t]);
      sum += scores[t];
      row.fit_time_s += times[t];
      if (!errors[t].empty() && row.error.empty()) row.error = errors[t];
    }
    row.mean_score = sum / static_cast<double>(k);
    if (row.mean_score < result.rows[result.best].mean_score || !any) {
      if (std::isfinite(row.mean_score)) {
        result.best = c;
        any = true;
      }
    }
  }
  if (!any) throw Error(ErrorKind::IllConditionedKernel, "every grid combination failed");
  result.total_time_s = options.record_timing ? seconds_since(t_start) : 0.0;
  return result;
}

void write_cv_table(std::ostream& out, const GridSearchResult& result) {
  const std::size_t k = result.rows.empty() ? 0 : result.rows.front().fold_scores.size();
  out << "combination";
  for (const auto& a : result.axis_names) out << ',' << a;
  for (std::size_t f = 0; f < k; ++f) out << ",fold" << f << "_nmse";
  out << ",mean_nmse,fit_time_s,best,error\n";
  for (const auto& row : result.rows) {
    out << row.id;
    for (const auto& a : result.axis_names) out << ',' << row.params.at(a);
    for (double s : row.fold_scores) out << ',' << fmt17(s);
    out << ',' << fmt17(row.mean_score) << ',' << fmt17(row.fit_time_s) << ','
        << (row.id == result.best ? 1 : 0) << ',';
    // Commas would break the table; messages are informational only.
    std::string msg = row.error;
    std::replace(msg.begin(), msg.end(), ',', ';');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    out << msg << '\n';
  }
}

TuningGrid default_krr_grid() {
  TuningGrid g;
  g.axes = {
      {"lambda", {"1e-05", "0.0001", "0.001", "0.01", "0.05", "0.1", "0.5", "1"}},
      {"gamma", {"0.01", "0.05", "0.1", "0.5", "1", "5", "10", "50", "100", "150"}},
      {"kernel", {"rbf", "linear"}},
  };
  return g;
}

TuningGrid default_gp_grid() {
  TuningGrid g;
  g.axes = {{"alpha", log_spaced(1e-3, 1.0, 110)}};
  return g;
}

Trainer krr_trainer() {
  return [](const Eigen::MatrixXd& xtr, const Eigen::VectorXd& ytr, const Eigen::MatrixXd& xval,
            const Combination& params) {
    KernelSpec spec;
    spec.family = parse_kernel_family(params.count("kernel") ? params.at("kernel") : "rbf");
    if (spec.family == KernelFamily::Rbf) spec.gamma = lookup(params, "gamma");
    return krr_predict(krr_fit(xtr, ytr, lookup(params, "lambda"), spec), xval);
  };
}

Trainer gp_trainer(double gamma) {
  return [gamma](const Eigen::MatrixXd& xtr, const Eigen::VectorXd& ytr, const Eigen::MatrixXd& xval,
                 const Combination& params) {
    KernelSpec spec{KernelFamily::Rbf, gamma};
    return gp_predict_mean(gp_fit(xtr, ytr, lookup(params, "alpha"), spec), xval);
  };
}

}  // namespace roughsim
