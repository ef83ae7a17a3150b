#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>

#include "roughsim/bem.hpp"
#include "roughsim/error.hpp"

namespace roughsim {
namespace {

// FFTW's planner is not reentrant; execution on fresh buffers is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// Antiderivative of 1/sqrt(x^2 + y^2) in both arguments.
double patch_primitive(double x, double y) {
  double value = 0.0;
  if (x != 0.0) value += x * std::asinh(y / std::abs(x));
  if (y != 0.0) value += y * std::asinh(x / std::abs(y));
  return value;
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t bytes) : data(fftw_malloc(bytes)) {
    if (data == nullptr) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;

  double* real() { return static_cast<double*>(data); }
  fftw_complex* complex() { return static_cast<fftw_complex*>(data); }

  void* data;
};

}  // namespace

void Material::validate() const {
  if (!(youngs > 0.0) || !std::isfinite(youngs)) {
    throw Error(ErrorKind::InvalidInput, "Young's modulus must be positive");
  }
  if (!(poisson >= 0.0 && poisson < 0.5)) {
    throw Error(ErrorKind::InvalidInput, "Poisson ratio must lie in [0, 0.5)");
  }
}

double rectangle_patch_displacement(double x, double y, double a, double b,
                                    const Material& material) {
  const double integral = patch_primitive(x + a, y + b) - patch_primitive(x + a, y - b) -
                          patch_primitive(x - a, y + b) + patch_primitive(x - a, y - b);
  return integral / (std::numbers::pi * material.composite_modulus());
}

struct InfluenceOperator::Fft {
  std::size_t m = 0;        // padded side
  std::size_t spectral = 0; // m * (m/2 + 1)
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  std::vector<std::complex<double>> kernel_hat;

  ~Fft() {
    std::lock_guard lock(planner_mutex());
    if (forward != nullptr) fftw_destroy_plan(forward);
    if (backward != nullptr) fftw_destroy_plan(backward);
  }
};

InfluenceOperator::InfluenceOperator(std::size_t n_points, double grid_spacing_um,
                                     const Material& material)
    : n_(n_points), g_(grid_spacing_um), material_(material) {
  if (n_ < 2) throw Error(ErrorKind::InvalidInput, "influence operator needs n >= 2");
  if (!(g_ > 0.0) || !std::isfinite(g_)) {
    throw Error(ErrorKind::InvalidInput, "grid spacing must be positive");
  }
  material_.validate();

  const double half = 0.5 * g_;
  table_.resize(n_ * n_);
  for (std::size_t di = 0; di < n_; ++di) {
    for (std::size_t dj = 0; dj <= di; ++dj) {
      const double c = rectangle_patch_displacement(
          static_cast<double>(dj) * g_, static_cast<double>(di) * g_, half, half, material_);
      table_[di * n_ + dj] = c;
      table_[dj * n_ + di] = c;
    }
  }

  fft_ = std::make_unique<Fft>();
  const std::size_t m = 2 * n_;
  fft_->m = m;
  fft_->spectral = m * (m / 2 + 1);
  FftwBuffer real(sizeof(double) * m * m);
  FftwBuffer spec(sizeof(fftw_complex) * fft_->spectral);
  {
    std::lock_guard lock(planner_mutex());
    const int mi = static_cast<int>(m);
    fft_->forward = fftw_plan_dft_r2c_2d(mi, mi, real.real(), spec.complex(), FFTW_ESTIMATE);
    fft_->backward = fftw_plan_dft_c2r_2d(mi, mi, spec.complex(), real.real(), FFTW_ESTIMATE);
  }
  if (fft_->forward == nullptr || fft_->backward == nullptr) {
    throw Error(ErrorKind::InvalidInput, "FFT planning failed");
  }
  // Circularly wrapped kernel; row index a maps to offset a or a - m.
  const auto wrap = [&](std::size_t a) -> std::ptrdiff_t {
    return a < n_ ? static_cast<std::ptrdiff_t>(a)
                  : static_cast<std::ptrdiff_t>(a) - static_cast<std::ptrdiff_t>(m);
  };
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      const auto da = wrap(a), db = wrap(b);
      real.real()[a * m + b] =
          (std::abs(da) < static_cast<std::ptrdiff_t>(n_) &&
           std::abs(db) < static_cast<std::ptrdiff_t>(n_))
              ? coefficient(da, db)
              : 0.0;
    }
  }
  fftw_execute_dft_r2c(fft_->forward, real.real(), spec.complex());
  fft_->kernel_hat.resize(fft_->spectral);
  const double scale = 1.0 / static_cast<double>(m * m);
  for (std::size_t k = 0; k < fft_->spectral; ++k) {
    fft_->kernel_hat[k] = std::complex<double>(spec.complex()[k][0], spec.complex()[k][1]) * scale;
  }
}

InfluenceOperator::~InfluenceOperator() = default;

double InfluenceOperator::coefficient(std::ptrdiff_t di, std::ptrdiff_t dj) const {
  const auto ai = static_cast<std::size_t>(std::abs(di));
  const auto aj = static_cast<std::size_t>(std::abs(dj));
  if (ai < n_ && aj < n_) return table_[ai * n_ + aj];
  const double half = 0.5 * g_;
  return rectangle_patch_displacement(static_cast<double>(aj) * g_,
                                      static_cast<double>(ai) * g_, half, half, material_);
}

void InfluenceOperator::apply(std::span<const double> pressure,
                              std::span<double> displacement) const {
  const std::size_t total = n_ * n_;
  if (pressure.size() != total || displacement.size() != total) {
    throw Error(ErrorKind::DimensionMismatch, "influence apply: wrong vector size");
  }
  const std::size_t m = fft_->m;
  FftwBuffer real(sizeof(double) * m * m);
  FftwBuffer spec(sizeof(fftw_complex) * fft_->spectral);
  double* r = real.real();
  std::fill(r, r + m * m, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    std::copy_n(pressure.data() + i * n_, n_, r + i * m);
  }
  fftw_execute_dft_r2c(fft_->forward, r, spec.complex());
  fftw_complex* s = spec.complex();
  for (std::size_t k = 0; k < fft_->spectral; ++k) {
    const std::complex<double> v = std::complex<double>(s[k][0], s[k][1]) * fft_->kernel_hat[k];
    s[k][0] = v.real();
    s[k][1] = v.imag();
  }
  fftw_execute_dft_c2r(fft_->backward, s, r);
  for (std::size_t i = 0; i < n_; ++i) {
    std::copy_n(r + i * m, n_, displacement.data() + i * n_);
  }
}

void InfluenceOperator::apply_direct(std::span<const double> pressure,
                                     std::span<double> displacement) const {
  const std::size_t total = n_ * n_;
  if (pressure.size() != total || displacement.size() != total) {
    throw Error(ErrorKind::DimensionMismatch, "influence apply: wrong vector size");
  }
  std::fill(displacement.begin(), displacement.end(), 0.0);
  for (std::size_t k = 0; k < total; ++k) {
    const double pk = pressure[k];
    if (pk == 0.0) continue;
    const auto ki = static_cast<std::ptrdiff_t>(k / n_);
    const auto kj = static_cast<std::ptrdiff_t>(k % n_);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        displacement[i * n_ + j] +=
            coefficient(static_cast<std::ptrdiff_t>(i) - ki,
                        static_cast<std::ptrdiff_t>(j) - kj) * pk;
      }
    }
  }
}

std::unique_ptr<InfluenceOperator> build_influence(std::size_t n_points,
                                                   double grid_spacing_um,
                                                   const Material& material) {
  return std::make_unique<InfluenceOperator>(n_points, grid_spacing_um, material);
}

}  // namespace roughsim
