#include "roughsim/surrogate.hpp"

#include <istream>
#include <ostream>
#include <sstream>

#include "roughsim/error.hpp"
#include "roughsim/text_io.hpp"

namespace roughsim {

namespace {

std::string join_row(const Eigen::VectorXd& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += fmt17(v(i));
  }
  return out;
}

Eigen::VectorXd parse_row(const std::string& text, std::size_t expected, const char* what) {
  const auto values = parse_double_list(text, what);
  if (values.size() != expected) {
    throw Error(ErrorKind::Validation, std::string("model ") + what + " has the wrong length");
  }
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

// Reads "key value" and checks the key.
std::string expect_line(std::istream& in, const std::string& key) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Validation, "model file ends before '" + key + "'");
  line = trim(line);
  if (line == key) return {};
  if (line.rfind(key + ' ', 0) != 0) {
    throw Error(ErrorKind::Validation, "model file expected '" + key + "', found '" + line + "'");
  }
  return trim(line.substr(key.size() + 1));
}

}  // namespace

const char* to_string(ModelKind kind) { return kind == ModelKind::Krr ? "krr" : "gp"; }

ModelKind parse_model_kind(const std::string& text) {
  if (text == "krr") return ModelKind::Krr;
  if (text == "gp") return ModelKind::Gp;
  throw Error(ErrorKind::Validation, "unknown model '" + text + "'");
}

Preprocessor Preprocessor::fit(Normalization mode, const Eigen::MatrixXd& raw) {
  Preprocessor p;
  p.mode = mode;
  if (mode == Normalization::Standardize) p.standardizer = Standardizer::fit(raw);
  return p;
}

Eigen::MatrixXd Preprocessor::apply(const Eigen::MatrixXd& raw, const std::vector<std::uint64_t>& ids) const {
  switch (mode) {
    case Normalization::L2Row: return normalize_rows(raw, ids);
    case Normalization::Standardize: return standardizer.apply(raw);
    case Normalization::None: return raw;
  }
  return raw;
}

std::size_t SurrogateModel::training_size() const {
  return static_cast<std::size_t>(kind == ModelKind::Krr ? krr.training_inputs.rows() : gp.training_inputs.rows());
}

Eigen::VectorXd SurrogateModel::predict(const Eigen::MatrixXd& raw) const {
  if (static_cast<std::size_t>(raw.cols()) != feature_names.size()) {
    throw Error(ErrorKind::DimensionMismatch, "query has " + std::to_string(raw.cols()) +
                                                  " features, model expects " +
                                                  std::to_string(feature_names.size()));
  }
  const Eigen::MatrixXd x = prep.apply(raw);
  return kind == ModelKind::Krr ? krr_predict(krr, x) : gp_predict_mean(gp, x);
}

GpPrediction SurrogateModel::predict_with_variance(const Eigen::MatrixXd& raw) const {
  if (kind == ModelKind::Gp) {
    if (static_cast<std::size_t>(raw.cols()) != feature_names.size()) {
      throw Error(ErrorKind::DimensionMismatch, "query width does not match the model");
    }
    return gp_predict(gp, prep.apply(raw));
  }
  GpPrediction out;
  out.mean = predict(raw);
  out.variance = Eigen::VectorXd::Zero(out.mean.size());
  return out;
}

SurrogateModel train_surrogate(ModelKind kind, const Eigen::MatrixXd& raw, const Eigen::VectorXd& y,
                               const KernelSpec& spec, double regularization, Normalization mode,
                               const std::vector<std::string>& feature_names) {
  if (feature_names.size() != static_cast<std::size_t>(raw.cols())) {
    throw Error(ErrorKind::DimensionMismatch, "feature names do not match the input width");
  }
  SurrogateModel m;
  m.kind = kind;
  m.feature_names = feature_names;
  m.prep = Preprocessor::fit(mode, raw);
  const Eigen::MatrixXd x = m.prep.apply(raw);
  if (kind == ModelKind::Krr) {
    m.krr = krr_fit(x, y, regularization, spec);
  } else {
    m.gp = gp_fit(x, y, regularization, spec);
  }
  return m;
}

void write_model(std::ostream& out, const SurrogateModel& model) {
  const auto& x = model.kind == ModelKind::Krr ? model.krr.training_inputs : model.gp.training_inputs;
  const auto& alpha = model.kind == ModelKind::Krr ? model.krr.dual_alpha : model.gp.dual_alpha;
  const double jitter = model.kind == ModelKind::Krr ? model.krr.jitter : model.gp.jitter;
  out << "roughsim-model " << SurrogateModel::kFormatVersion << '\n';
  out << "model " << to_string(model.kind) << '\n';
  out << "kernel " << to_string(model.kernel().family) << '\n';
  out << "gamma " << fmt17(model.kernel().gamma) << '\n';
  out << "regularization " << fmt17(model.regularization()) << '\n';
  out << "jitter " << fmt17(jitter) << '\n';
  out << "normalization " << to_string(model.prep.mode) << '\n';
  out << "features ";
  for (std::size_t i = 0; i < model.feature_names.size(); ++i) out << (i ? "," : "") << model.feature_names[i];
  out << '\n';
  out << "n " << x.rows() << '\n';
  out << "d " << x.cols() << '\n';
  if (model.prep.mode == Normalization::Standardize) {
    out << "standardize_mean " << join_row(model.prep.standardizer.mean) << '\n';
    out << "standardize_scale " << join_row(model.prep.standardizer.scale) << '\n';
  }
  out << "inputs\n";
  for (Eigen::Index i = 0; i < x.rows(); ++i) out << join_row(x.row(i).transpose()) << '\n';
  out << "alpha\n";
  for (Eigen::Index i = 0; i < alpha.size(); ++i) out << fmt17(alpha(i)) << '\n';
  out << "end\n";
}

SurrogateModel read_model(std::istream& in) {
  const auto version = expect_line(in, "roughsim-model");
  if (parse_int(version, "model format version") != SurrogateModel::kFormatVersion) {
    throw Error(ErrorKind::Validation, "unsupported model format version " + version);
  }
  SurrogateModel m;
  m.kind = parse_model_kind(expect_line(in, "model"));
  KernelSpec spec;
  spec.family = parse_kernel_family(expect_line(in, "kernel"));
  spec.gamma = parse_double(expect_line(in, "gamma"), "gamma");
  const double reg = parse_double(expect_line(in, "regularization"), "regularization");
  const double jitter = parse_double(expect_line(in, "jitter"), "jitter");
  m.prep.mode = parse_normalization(expect_line(in, "normalization"));
  m.feature_names = split(expect_line(in, "features"), ',');
  const auto n = parse_uint(expect_line(in, "n"), "n");
  const auto d = parse_uint(expect_line(in, "d"), "d");
  if (d != m.feature_names.size() || n == 0) {
    throw Error(ErrorKind::Validation, "model dimensions do not match its feature list");
  }
  if (m.prep.mode == Normalization::Standardize) {
    m.prep.standardizer.mean = parse_row(expect_line(in, "standardize_mean"), d, "standardize_mean");
    m.prep.standardizer.scale = parse_row(expect_line(in, "standardize_scale"), d, "standardize_scale");
  }
  expect_line(in, "inputs");
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::string line;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (!std::getline(in, line)) throw Error(ErrorKind::Validation, "model file has too few input rows");
    x.row(i) = parse_row(line, d, "input row").transpose();
  }
  expect_line(in, "alpha");
  Eigen::VectorXd alpha(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    if (!std::getline(in, line)) throw Error(ErrorKind::Validation, "model file has too few coefficients");
    alpha(i) = parse_double(line, "dual coefficient");
  }
  expect_line(in, "end");
  spec.validate();
  if (m.kind == ModelKind::Krr) {
    m.krr.kernel = spec;
    m.krr.lambda = reg;
    m.krr.jitter = jitter;
    m.krr.training_inputs = std::move(x);
    m.krr.dual_alpha = std::move(alpha);
  } else {
    m.gp = gp_restore(spec, reg, jitter, std::move(x), std::move(alpha));
  }
  return m;
}

void save_model(const std::string& path, const SurrogateModel& model) {
  auto out = open_output(path);
  write_model(out, model);
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path);
}

SurrogateModel load_model(const std::string& path) {
  auto in = open_input(path);
  return read_model(in);
}

}  // namespace roughsim
