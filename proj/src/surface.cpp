#include "roughsim/surface.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "roughsim/error.hpp"
#include "roughsim/random.hpp"
#include "roughsim/text_io.hpp"

namespace roughsim {

HeightField::HeightField(std::size_t n_points, double scan_length_um)
    : HeightField(n_points, scan_length_um,
                  std::vector<double>(n_points * n_points, 0.0)) {}

HeightField::HeightField(std::size_t n_points, double scan_length_um,
                         std::vector<double> heights)
    : n_(n_points), length_(scan_length_um), z_(std::move(heights)) {
  if (n_ < 2) throw Error(ErrorKind::InvalidInput, "height field needs n >= 2");
  if (!(length_ > 0.0) || !std::isfinite(length_)) {
    throw Error(ErrorKind::InvalidInput, "scan length must be positive");
  }
  if (z_.size() != n_ * n_) {
    throw Error(ErrorKind::DimensionMismatch,
                "height field expects n*n = " + std::to_string(n_ * n_) +
                    " values, got " + std::to_string(z_.size()));
  }
  for (double v : z_) {
    if (!std::isfinite(v)) {
      throw Error(ErrorKind::InvalidInput, "height field contains non-finite value");
    }
  }
}

double HeightField::min() const { return *std::min_element(z_.begin(), z_.end()); }
double HeightField::max() const { return *std::max_element(z_.begin(), z_.end()); }

void SurfaceSpec::validate() const {
  if (iterations < 1) {
    throw Error(ErrorKind::InvalidSpec, "RMD needs at least one iteration");
  }
  if (iterations > 14) {
    throw Error(ErrorKind::InvalidSpec, "RMD iteration count above 14 is not supported");
  }
  if (!(sigma0_um >= 0.0) || !std::isfinite(sigma0_um)) {
    throw Error(ErrorKind::InvalidSpec, "sigma0 must be finite and >= 0");
  }
  if (!(hurst > 0.0 && hurst < 1.0)) {
    throw Error(ErrorKind::InvalidSpec, "Hurst exponent must lie in (0, 1)");
  }
  if (!(scan_length_um > 0.0) || !std::isfinite(scan_length_um)) {
    throw Error(ErrorKind::InvalidSpec, "scan length must be positive");
  }
  for (double c : corner_heights_um) {
    if (!std::isfinite(c)) {
      throw Error(ErrorKind::InvalidSpec, "corner heights must be finite");
    }
  }
}

HeightField rmd_generate(const SurfaceSpec& spec) {
  spec.validate();
  const std::size_t cells = std::size_t{1} << spec.iterations;
  const std::size_t n = cells + 1;
  HeightField field(n, spec.scan_length_um);
  field(0, 0) = spec.corner_heights_um[0];
  field(0, cells) = spec.corner_heights_um[1];
  field(cells, 0) = spec.corner_heights_um[2];
  field(cells, cells) = spec.corner_heights_um[3];

  Rng rng(spec.seed);
  for (int pass = 0; pass < spec.iterations; ++pass) {
    const std::size_t step = cells >> pass;
    const std::size_t half = step / 2;
    const double sigma = spec.sigma0_um * std::pow(2.0, -pass * spec.hurst);
    for (std::size_t i = 0; i < n; i += half) {
      const bool row_on_coarse = i % step == 0;
      for (std::size_t j = 0; j < n; j += half) {
        const bool col_on_coarse = j % step == 0;
        if (row_on_coarse && col_on_coarse) continue;
        double mean;
        if (row_on_coarse) {
          mean = 0.5 * (field(i, j - half) + field(i, j + half));
        } else if (col_on_coarse) {
          mean = 0.5 * (field(i - half, j) + field(i + half, j));
        } else {
          mean = 0.25 * (field(i - half, j - half) + field(i - half, j + half) +
                         field(i + half, j - half) + field(i + half, j + half));
        }
        field(i, j) = mean + sigma * rng.normal();
      }
    }
  }
  return field;
}

HeightField shift_to_datum(const HeightField& field) {
  HeightField out = field;
  const double lowest = field.min();
  for (double& v : out.heights()) v -= lowest;
  return out;
}

std::vector<double> structure_function(const HeightField& field,
                                       std::size_t max_lag) {
  const std::size_t n = field.n_points();
  if (max_lag == 0 || max_lag >= n) {
    throw Error(ErrorKind::InvalidInput, "structure function lag out of range");
  }
  std::vector<double> s(max_lag, 0.0);
  for (std::size_t lag = 1; lag <= max_lag; ++lag) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j + lag < n; ++j) {
        const double dx = field(i, j + lag) - field(i, j);
        const double dy = field(j + lag, i) - field(j, i);
        acc += dx * dx + dy * dy;
      }
    }
    s[lag - 1] = acc / static_cast<double>(2 * n * (n - lag));
  }
  return s;
}

double estimate_hurst(const HeightField& field) {
  const std::size_t n = field.n_points();
  if (n < 9) {
    throw Error(ErrorKind::InvalidInput, "Hurst estimate needs n >= 9");
  }
  const std::size_t max_lag = (n - 1) / 4;
  const auto s = structure_function(field, max_lag);
  const double g = field.grid_spacing();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t l = 1; l <= max_lag; ++l) {
    if (!(s[l - 1] > 0.0)) {
      throw Error(ErrorKind::DegenerateSurface,
                  "structure function vanishes; surface is constant");
    }
    const double x = std::log(static_cast<double>(l) * g);
    const double y = std::log(s[l - 1]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double m = static_cast<double>(max_lag);
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return 0.5 * slope;
}

void write_surface(std::ostream& out, const HeightField& field,
                   const SurfaceHeader& header) {
  const std::size_t n = field.n_points();
  out << "n " << n << '\n'
      << "elements " << n - 1 << '\n'
      << "L_um " << fmt17(field.scan_length()) << '\n'
      << "H " << fmt17(header.hurst) << '\n'
      << "sigma0_um " << fmt17(header.sigma0_um) << '\n'
      << "seed " << header.seed << '\n'
      << "prng " << (header.prng.empty() ? kPrngName : header.prng) << '\n'
      << "datum " << (header.datum_shifted ? "shifted" : "raw") << '\n'
      << "heights\n";
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j != 0) out << ' ';
      out << fmt17(field(i, j));
    }
    out << '\n';
  }
}

SurfaceFile read_surface(std::istream& in) {
  SurfaceFile file;
  std::size_t n = 0;
  double length = 0.0;
  std::string line;
  bool saw_heights = false;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t == "heights") {
      saw_heights = true;
      break;
    }
    std::istringstream ls(t);
    std::string key, value;
    ls >> key >> value;
    if (key == "n") {
      n = static_cast<std::size_t>(parse_uint(value, "n"));
    } else if (key == "elements") {
      // informational; derived from n
    } else if (key == "L_um") {
      length = parse_double(value, "L_um");
    } else if (key == "H") {
      file.header.hurst = parse_double(value, "H");
    } else if (key == "sigma0_um") {
      file.header.sigma0_um = parse_double(value, "sigma0_um");
    } else if (key == "seed") {
      file.header.seed = parse_uint(value, "seed");
    } else if (key == "prng") {
      file.header.prng = value;
    } else if (key == "datum") {
      file.header.datum_shifted = value == "shifted";
    } else {
      throw Error(ErrorKind::Validation, "unknown surface header key '" + key + "'");
    }
  }
  if (!saw_heights || n < 2) {
    throw Error(ErrorKind::Validation, "surface file is missing its header or heights");
  }
  std::vector<double> z;
  z.reserve(n * n);
  std::string token;
  while (z.size() < n * n && in >> token) {
    z.push_back(parse_double(token, "height"));
  }
  if (z.size() != n * n) {
    throw Error(ErrorKind::Validation, "surface file holds " + std::to_string(z.size()) +
                                           " heights, expected " +
                                           std::to_string(n * n));
  }
  file.field = HeightField(n, length, std::move(z));
  return file;
}

void save_surface(const std::string& path, const HeightField& field,
                  const SurfaceHeader& header) {
  auto out = open_output(path);
  write_surface(out, field, header);
  if (!out) throw Error(ErrorKind::Io, "failed writing '" + path + "'");
}

SurfaceFile load_surface(const std::string& path) {
  auto in = open_input(path);
  return read_surface(in);
}

}  // namespace roughsim
