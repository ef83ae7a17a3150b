#pragma once

#include <array>
#include <cstddef>
#include <string_view>
#include <vector>

#include "roughsim/surface.hpp"

namespace roughsim {

enum class ProfileDirection { AlongX, AlongY, Pooled };

/// Strict 1D maxima of row and/or column profiles.
struct PeakSet {
  std::vector<double> heights;
  std::vector<double> curvatures;  // 1/um, positive at a maximum
  ProfileDirection direction = ProfileDirection::Pooled;
  std::size_t candidate_count = 0;  // interior profile nodes examined
};

/// Strict 2D maxima over the 8-neighbourhood.
struct SummitSet {
  std::vector<double> heights;
  std::vector<double> curvatures;
  std::size_t candidate_count = 0;
};

struct SpectralMoments {
  double m0 = 0.0;  // height variance
  double m2 = 0.0;  // mean squared slope
  double m4 = 0.0;  // mean squared curvature

  /// Bandwidth parameter m0 m4 / m2^2.
  double bandwidth() const;
};

/// Central moments of a sample, population convention.
struct SampleMoments {
  double mean = 0.0;
  double rms = 0.0;       // standard deviation about the mean
  double skewness = 0.0;  // third standardized moment
  double kurtosis = 0.0;  // excess: fourth standardized moment - 3
};

/// Throws DegenerateStatistics on empty input or zero variance.
SampleMoments sample_moments(const std::vector<double>& values,
                             std::string_view population);

PeakSet detect_peaks(const HeightField& field,
                     ProfileDirection direction = ProfileDirection::Pooled);
SummitSet detect_summits(const HeightField& field);
SpectralMoments spectral_moments(const HeightField& field,
                                 ProfileDirection direction);

/// The 22 surface descriptors used as surrogate features.
struct StatVector {
  static constexpr std::size_t kSize = 22;

  double peak_mean = 0;            // z̄_p
  double peak_rms = 0;             // RMS[z_p]
  double peak_kurtosis = 0;        // K[z_p]
  double peak_skewness = 0;        // Sk[z_p]
  double peak_density = 0;         // ρ_p
  double peak_curv_mean = 0;       // κ̄_p
  double peak_curv_kurtosis = 0;   // K[κ_p]
  double peak_curv_skewness = 0;   // Sk[κ_p]
  double bandwidth_x = 0;          // α_x
  double bandwidth_y = 0;          // α_y
  double summit_mean = 0;          // z̄_a
  double summit_rms = 0;           // RMS[z_a]
  double summit_kurtosis = 0;      // K[z_a]
  double summit_skewness = 0;      // Sk[z_a]
  double summit_density = 0;       // ρ_a
  double summit_curv_mean = 0;     // κ̄_a
  double summit_curv_rms = 0;      // RMS[κ_a]
  double summit_curv_kurtosis = 0; // K[κ_a]
  double summit_curv_skewness = 0; // Sk[κ_a]
  double height_mean = 0;          // z̄
  double height_max = 0;           // z^max
  double height_rms = 0;           // RMS[z]

  std::array<double, kSize> to_array() const;
  static StatVector from_array(const std::array<double, kSize>& values);
  /// CSV column names, in the same order as to_array().
  static const std::array<std::string_view, kSize>& column_names();

  bool operator==(const StatVector&) const = default;
};

/// Maps a height field to its 22 descriptors.
/// Throws DegenerateStatistics when fewer than two peaks or summits exist,
/// or when a population has zero variance.
StatVector characterize(const HeightField& field);

}  // namespace roughsim
