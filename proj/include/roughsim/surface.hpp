#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace roughsim {

/// Square n x n grid of heights in micrometres, stored row-major.
///
/// Row index i runs along y and column index j runs along x. Node (i, j) sits
/// at (x, y) = (j g, i g) where g = L / (n - 1).
class HeightField {
 public:
  HeightField() = default;
  HeightField(std::size_t n_points, double scan_length_um);
  HeightField(std::size_t n_points, double scan_length_um,
              std::vector<double> heights);

  std::size_t n_points() const noexcept { return n_; }
  double scan_length() const noexcept { return length_; }
  double grid_spacing() const noexcept {
    return length_ / static_cast<double>(n_ - 1);
  }

  double& operator()(std::size_t i, std::size_t j) { return z_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const {
    return z_[i * n_ + j];
  }

  std::span<const double> heights() const noexcept { return z_; }
  std::span<double> heights() noexcept { return z_; }

  double min() const;
  double max() const;

  bool operator==(const HeightField&) const = default;

 private:
  std::size_t n_ = 0;
  double length_ = 0.0;
  std::vector<double> z_;
};

struct SurfaceSpec {
  double scan_length_um = 1000.0;
  int iterations = 7;
  double hurst = 0.7;
  double sigma0_um = 10.0;
  /// Corner heights in order (0,0), (0,n-1), (n-1,0), (n-1,n-1).
  std::array<double, 4> corner_heights_um{0.0, 0.0, 0.0, 0.0};
  std::uint64_t seed = 0;

  /// Throws InvalidSpec on a malformed spec.
  void validate() const;
  /// True when H lies in the band the database generator samples from.
  bool hurst_in_sampled_band() const noexcept {
    return hurst >= 0.5 && hurst <= 0.8;
  }
};

/// Random Midpoint Displacement on a (2^k + 1)^2 grid.
///
/// Pass m (m = 0 .. k-1) splits every cell in four. Each new edge node takes
/// the mean of its two end nodes, each new centre node the mean of the four
/// cell corners, and both receive N(0, sigma0 * 2^(-m H)) noise. Noise is
/// drawn from one stream in row-major order of the new nodes of each pass.
HeightField rmd_generate(const SurfaceSpec& spec);

/// Subtracts the minimum height so the lowest node sits at zero.
HeightField shift_to_datum(const HeightField& field);

/// Structure function S(l) = mean |z(x + l g) - z(x)|^2 pooled over both
/// axes, for integer lags l = 1 .. max_lag.
std::vector<double> structure_function(const HeightField& field,
                                       std::size_t max_lag);

/// Least-squares slope / 2 of log S against log lag over lags g .. L/4.
double estimate_hurst(const HeightField& field);

struct SurfaceHeader {
  double hurst = 0.0;
  double sigma0_um = 0.0;
  std::uint64_t seed = 0;
  std::string prng;
  bool datum_shifted = false;
};

struct SurfaceFile {
  HeightField field;
  SurfaceHeader header;
};

void write_surface(std::ostream& out, const HeightField& field,
                   const SurfaceHeader& header);
SurfaceFile read_surface(std::istream& in);

void save_surface(const std::string& path, const HeightField& field,
                  const SurfaceHeader& header);
SurfaceFile load_surface(const std::string& path);

}  // namespace roughsim
