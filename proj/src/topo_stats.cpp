#include "roughsim/topo_stats.hpp"

#include <cmath>
#include <string>

#include "roughsim/error.hpp"

namespace roughsim {
namespace {

void require_grid(const HeightField& field, std::size_t min_points) {
  if (field.n_points() < min_points) {
    throw Error(ErrorKind::InvalidInput, "field needs at least " +
                                             std::to_string(min_points) +
                                             " points per side");
  }
}

// Scans one profile given by a strided accessor.
template <typename At>
void scan_profile(std::size_t n, double inv_g2, At at, PeakSet& out) {
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double left = at(k - 1), mid = at(k), right = at(k + 1);
    if (left < mid && right < mid) {
      out.heights.push_back(mid);
      out.curvatures.push_back(-(left - 2.0 * mid + right) * inv_g2);
    }
  }
  out.candidate_count += n - 2;
}

}  // namespace

double SpectralMoments::bandwidth() const {
  if (!(m2 > 0.0)) {
    throw Error(ErrorKind::DegenerateStatistics,
                "zero mean-square slope; bandwidth parameter undefined");
  }
  return m0 * m4 / (m2 * m2);
}

SampleMoments sample_moments(const std::vector<double>& values,
                             std::string_view population) {
  if (values.empty()) {
    throw Error(ErrorKind::DegenerateStatistics,
                "empty population: " + std::string(population));
  }
  const double count = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / count;
  double c2 = 0.0, c3 = 0.0, c4 = 0.0;
  for (double v : values) {
    const double d = v - mean;
    const double d2 = d * d;
    c2 += d2;
    c3 += d2 * d;
    c4 += d2 * d2;
  }
  c2 /= count;
  c3 /= count;
  c4 /= count;
  if (!(c2 > 0.0)) {
    throw Error(ErrorKind::DegenerateStatistics,
                "zero variance in population: " + std::string(population));
  }
  SampleMoments m;
  m.mean = mean;
  m.rms = std::sqrt(c2);
  m.skewness = c3 / (c2 * m.rms);
  m.kurtosis = c4 / (c2 * c2) - 3.0;
  return m;
}

PeakSet detect_peaks(const HeightField& field, ProfileDirection direction) {
  require_grid(field, 3);
  const std::size_t n = field.n_points();
  const double g = field.grid_spacing();
  const double inv_g2 = 1.0 / (g * g);
  PeakSet peaks;
  peaks.direction = direction;
  if (direction != ProfileDirection::AlongY) {
    for (std::size_t i = 0; i < n; ++i) {
      scan_profile(n, inv_g2, [&](std::size_t j) { return field(i, j); }, peaks);
    }
  }
  if (direction != ProfileDirection::AlongX) {
    for (std::size_t j = 0; j < n; ++j) {
      scan_profile(n, inv_g2, [&](std::size_t i) { return field(i, j); }, peaks);
    }
  }
  return peaks;
}

SummitSet detect_summits(const HeightField& field) {
  require_grid(field, 3);
  const std::size_t n = field.n_points();
  const double g = field.grid_spacing();
  const double inv_g2 = 1.0 / (g * g);
  SummitSet summits;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    for (std::size_t j = 1; j + 1 < n; ++j) {
      const double z = field(i, j);
      bool is_max = true;
      for (int di = -1; di <= 1 && is_max; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          if (di == 0 && dj == 0) continue;
          if (!(field(i + di, j + dj) < z)) {
            is_max = false;
            break;
          }
        }
      }
      if (!is_max) continue;
      const double kxx = -(field(i, j - 1) - 2.0 * z + field(i, j + 1)) * inv_g2;
      const double kyy = -(field(i - 1, j) - 2.0 * z + field(i + 1, j)) * inv_g2;
      summits.heights.push_back(z);
      summits.curvatures.push_back(0.5 * (kxx + kyy));
    }
  }
  summits.candidate_count = (n - 2) * (n - 2);
  return summits;
}

SpectralMoments spectral_moments(const HeightField& field,
                                 ProfileDirection direction) {
  require_grid(field, 5);
  if (direction == ProfileDirection::Pooled) {
    throw Error(ErrorKind::InvalidInput, "spectral moments are per direction");
  }
  const std::size_t n = field.n_points();
  const double g = field.grid_spacing();
  const bool along_x = direction == ProfileDirection::AlongX;
  auto at = [&](std::size_t profile, std::size_t k) {
    return along_x ? field(profile, k) : field(k, profile);
  };
  SpectralMoments total;
  for (std::size_t p = 0; p < n; ++p) {
    double mean = 0.0;
    for (std::size_t k = 0; k < n; ++k) mean += at(p, k);
    mean /= static_cast<double>(n);
    double m0 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double d = at(p, k) - mean;
      m0 += d * d;
    }
    double m2 = 0.0, m4 = 0.0;
    for (std::size_t k = 1; k + 1 < n; ++k) {
      const double slope = (at(p, k + 1) - at(p, k - 1)) / (2.0 * g);
      const double curv = (at(p, k + 1) - 2.0 * at(p, k) + at(p, k - 1)) / (g * g);
      m2 += slope * slope;
      m4 += curv * curv;
    }
    total.m0 += m0 / static_cast<double>(n);
    total.m2 += m2 / static_cast<double>(n - 2);
    total.m4 += m4 / static_cast<double>(n - 2);
  }
  const double profiles = static_cast<double>(n);
  total.m0 /= profiles;
  total.m2 /= profiles;
  total.m4 /= profiles;
  if (!(total.m2 > 0.0)) {
    throw Error(ErrorKind::DegenerateStatistics,
                "zero mean-square slope; surface is flat along a direction");
  }
  return total;
}

std::array<double, StatVector::kSize> StatVector::to_array() const {
  return {peak_mean,          peak_rms,          peak_kurtosis,
          peak_skewness,      peak_density,      peak_curv_mean,
          peak_curv_kurtosis, peak_curv_skewness, bandwidth_x,
          bandwidth_y,        summit_mean,       summit_rms,
          summit_kurtosis,    summit_skewness,   summit_density,
          summit_curv_mean,   summit_curv_rms,   summit_curv_kurtosis,
          summit_curv_skewness, height_mean,     height_max,
          height_rms};
}

StatVector StatVector::from_array(const std::array<double, kSize>& v) {
  StatVector s;
  s.peak_mean = v[0];
  s.peak_rms = v[1];
  s.peak_kurtosis = v[2];
  s.peak_skewness = v[3];
  s.peak_density = v[4];
  s.peak_curv_mean = v[5];
  s.peak_curv_kurtosis = v[6];
  s.peak_curv_skewness = v[7];
  s.bandwidth_x = v[8];
  s.bandwidth_y = v[9];
  s.summit_mean = v[10];
  s.summit_rms = v[11];
  s.summit_kurtosis = v[12];
  s.summit_skewness = v[13];
  s.summit_density = v[14];
  s.summit_curv_mean = v[15];
  s.summit_curv_rms = v[16];
  s.summit_curv_kurtosis = v[17];
  s.summit_curv_skewness = v[18];
  s.height_mean = v[19];
  s.height_max = v[20];
  s.height_rms = v[21];
  return s;
}

const std::array<std::string_view, StatVector::kSize>& StatVector::column_names() {
  static const std::array<std::string_view, kSize> names{
      "zp_mean",     "zp_rms",      "zp_kurt",     "zp_skew",
      "rho_p",       "kp_mean",     "kp_kurt",     "kp_skew",
      "alpha_x",     "alpha_y",     "za_mean",     "za_rms",
      "za_kurt",     "za_skew",     "rho_a",       "ka_mean",
      "ka_rms",      "ka_kurt",     "ka_skew",     "z_mean",
      "z_max",       "z_rms"};
  return names;
}

StatVector characterize(const HeightField& field) {
  require_grid(field, 5);
  const PeakSet peaks = detect_peaks(field, ProfileDirection::Pooled);
  const SummitSet summits = detect_summits(field);
  if (peaks.heights.size() < 2) {
    throw Error(ErrorKind::DegenerateStatistics, "fewer than two peaks");
  }
  if (summits.heights.size() < 2) {
    throw Error(ErrorKind::DegenerateStatistics, "fewer than two summits");
  }
  const auto zp = sample_moments(peaks.heights, "peak heights");
  const auto kp = sample_moments(peaks.curvatures, "peak curvatures");
  const auto za = sample_moments(summits.heights, "summit heights");
  const auto ka = sample_moments(summits.curvatures, "summit curvatures");
  const std::vector<double> all(field.heights().begin(), field.heights().end());
  const auto z = sample_moments(all, "surface heights");

  StatVector s;
  s.peak_mean = zp.mean;
  s.peak_rms = zp.rms;
  s.peak_kurtosis = zp.kurtosis;
  s.peak_skewness = zp.skewness;
  s.peak_density = static_cast<double>(peaks.heights.size()) /
                   static_cast<double>(peaks.candidate_count);
  s.peak_curv_mean = kp.mean;
  s.peak_curv_kurtosis = kp.kurtosis;
  s.peak_curv_skewness = kp.skewness;
  s.bandwidth_x = spectral_moments(field, ProfileDirection::AlongX).bandwidth();
  s.bandwidth_y = spectral_moments(field, ProfileDirection::AlongY).bandwidth();
  s.summit_mean = za.mean;
  s.summit_rms = za.rms;
  s.summit_kurtosis = za.kurtosis;
  s.summit_skewness = za.skewness;
  s.summit_density = static_cast<double>(summits.heights.size()) /
                     static_cast<double>(summits.candidate_count);
  s.summit_curv_mean = ka.mean;
  s.summit_curv_rms = ka.rms;
  s.summit_curv_kurtosis = ka.kurtosis;
  s.summit_curv_skewness = ka.skewness;
  s.height_mean = z.mean;
  s.height_max = field.max();
  s.height_rms = z.rms;
  return s;
}

}  // namespace roughsim
