#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "roughsim/surface.hpp"

namespace roughsim {

/// Composite elastic half-space. Young's modulus in N/um^2.
struct Material {
  double youngs = 1.0;
  double poisson = 0.3;

  void validate() const;
  /// E* = E / (1 - nu^2).
  double composite_modulus() const { return youngs / (1.0 - poisson * poisson); }
};

struct LoadCase {
  double delta_um = 0.0;  // far-field displacement
};

/// Translation-invariant compliance operator of the discretized half-space.
///
/// Each node carries a g x g cell of uniform pressure. The coefficient for an
/// offset (di, dj) is the closed-form vertical displacement at the centre of
/// the target cell due to unit pressure on the source cell. Products are
/// evaluated by zero-padded FFT convolution; the n^2 x n^2 matrix is never
/// formed. Immutable after construction and safe to share across threads.
class InfluenceOperator {
 public:
  InfluenceOperator(std::size_t n_points, double grid_spacing_um,
                    const Material& material);
  ~InfluenceOperator();
  InfluenceOperator(const InfluenceOperator&) = delete;
  InfluenceOperator& operator=(const InfluenceOperator&) = delete;

  std::size_t n_points() const noexcept { return n_; }
  double grid_spacing() const noexcept { return g_; }
  const Material& material() const noexcept { return material_; }

  /// Compliance for integer node offsets, um per (N/um^2).
  double coefficient(std::ptrdiff_t di, std::ptrdiff_t dj) const;

  /// u = H p over the full grid (row-major, n*n entries), via FFT.
  void apply(std::span<const double> pressure, std::span<double> displacement) const;
  /// Same product by direct summation; O(n^2 * nnz(p)).
  void apply_direct(std::span<const double> pressure,
                    std::span<double> displacement) const;

 private:
  std::size_t n_;
  double g_;
  Material material_;
  std::vector<double> table_;  // coefficient(|di|, |dj|), n x n
  struct Fft;
  std::unique_ptr<Fft> fft_;
};

std::unique_ptr<InfluenceOperator> build_influence(std::size_t n_points,
                                                   double grid_spacing_um,
                                                   const Material& material);

/// Closed-form displacement of a half-space at (x, y) under unit pressure on
/// the rectangle [-a, a] x [-b, b], scaled by (1 - nu^2) / (pi E).
double rectangle_patch_displacement(double x, double y, double a, double b,
                                    const Material& material);

/// ū_ij = z_ij - (max z - Δ). Its maximum equals Δ.
std::vector<double> interference(const HeightField& field, const LoadCase& load);

enum class InitialActiveSet { Empty, PositiveInterference };

struct SolverOptions {
  double tol = 1e-8;
  int max_sweeps = 100;
  InitialActiveSet init = InitialActiveSet::Empty;
  int max_cg_iterations = 20000;
};

struct ContactSolution {
  std::size_t n_points = 0;
  double grid_spacing = 0.0;
  double scan_length = 0.0;
  double delta = 0.0;
  std::vector<double> pressures;  // N/um^2, zero off contact
  std::vector<double> gaps;       // w = H p - ū, um
  std::vector<std::uint8_t> contact_mask;
  std::size_t contact_count = 0;
  double effective_area = 0.0;  // percent
  double total_force = 0.0;     // N
  int iterations = 0;           // active-set sweeps
  /// |p.w| / (||p||_2 Δ); zero when no node is in contact.
  double complementarity_residual = 0.0;
  double min_gap = 0.0;

  /// f = p g^2 per node.
  double nodal_force(std::size_t idx) const {
    return pressures[idx] * grid_spacing * grid_spacing;
  }
};

/// Solves the discrete frictionless contact LCP
///   w = H p - ū,  p >= 0,  w >= 0,  p.w = 0
/// with a feasible block active-set method. Each sweep solves H_AA p_A = ū_A
/// by conjugate gradients, steps back along the segment from the previous
/// pressures until all are non-negative and drops nodes that reach zero, then
/// admits free nodes whose gap is below -tol Δ. Terminates when no free node
/// is violated and min(w) >= -tol Δ, |p.w| <= tol ||p|| Δ.
/// Throws SolverStall after max_sweeps.
ContactSolution solve_contact(const InfluenceOperator& op, const HeightField& field,
                              const LoadCase& load, const SolverOptions& options = {});
ContactSolution solve_contact(const HeightField& field, const LoadCase& load,
                              const Material& material, double tol = 1e-8);

/// A_e = 100 n_c g^2 / L^2 percent.
double effective_area(std::size_t contact_count, double grid_spacing_um,
                      double scan_length_um);

/// z = z_apex - r^2 / (2R) about the grid centre, clamped at zero.
/// A negative z_apex selects L^2 / (4R), the drop at the grid corners.
HeightField paraboloid_field(double radius_um, double scan_length_um,
                             std::size_t n_points, double z_apex_um = -1.0);

struct HertzResult {
  double force = 0.0;  // N
  double area_percent = 0.0;
};

/// F = 4/3 E* sqrt(R Δ^3),  A_n = 100 π R Δ / L^2.
HertzResult hertz_reference(double radius_um, double delta_um,
                            const Material& material, double scan_length_um);

/// Per-node CSV (i, j, x_um, y_um, z_um, pressure, gap, in_contact) followed
/// by a '# summary' comment and a summary row.
void write_solution_csv(std::ostream& out, const HeightField& field,
                        const ContactSolution& solution);

}  // namespace roughsim
