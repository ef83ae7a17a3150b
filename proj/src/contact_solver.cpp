#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "roughsim/bem.hpp"
#include "roughsim/error.hpp"
#include "roughsim/text_io.hpp"

namespace roughsim {
namespace {

// H restricted to the active nodes. Small active sets use a dense block,
// large ones go through the FFT product on the full grid.
class ActiveBlock {
 public:
  ActiveBlock(const InfluenceOperator& op, const std::vector<std::size_t>& active)
      : op_(op), active_(active) {
    const std::size_t n = op.n_points();
    const std::size_t m = 2 * n;
    const double fft_cost = 5.0 * static_cast<double>(m * m) * std::log2(static_cast<double>(m * m));
    const double k = static_cast<double>(active.size());
    dense_ = active.size() <= 3000 && k * k <= fft_cost;
    if (dense_) {
      const std::size_t a = active.size();
      block_.resize(a * a);
      for (std::size_t r = 0; r < a; ++r) {
        const auto ri = static_cast<std::ptrdiff_t>(active[r] / n);
        const auto rj = static_cast<std::ptrdiff_t>(active[r] % n);
        for (std::size_t c = 0; c <= r; ++c) {
          const auto ci = static_cast<std::ptrdiff_t>(active[c] / n);
          const auto cj = static_cast<std::ptrdiff_t>(active[c] % n);
          const double v = op.coefficient(ri - ci, rj - cj);
          block_[r * a + c] = v;
          block_[c * a + r] = v;
        }
      }
    } else {
      full_in_.assign(n * n, 0.0);
      full_out_.assign(n * n, 0.0);
    }
  }

  void multiply(const std::vector<double>& x, std::vector<double>& y) {
    const std::size_t a = active_.size();
    if (dense_) {
      for (std::size_t r = 0; r < a; ++r) {
        const double* row = block_.data() + r * a;
        double acc = 0.0;
        for (std::size_t c = 0; c < a; ++c) acc += row[c] * x[c];
        y[r] = acc;
      }
      return;
    }
    for (std::size_t r = 0; r < a; ++r) full_in_[active_[r]] = x[r];
    op_.apply(full_in_, full_out_);
    for (std::size_t r = 0; r < a; ++r) y[r] = full_out_[active_[r]];
  }

 private:
  const InfluenceOperator& op_;
  const std::vector<std::size_t>& active_;
  bool dense_ = false;
  std::vector<double> block_;
  std::vector<double> full_in_, full_out_;
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Conjugate gradients on the SPD active block, warm-started from x.
void conjugate_gradient(ActiveBlock& block, const std::vector<double>& rhs,
                        std::vector<double>& x, double abs_tol, int max_iter) {
  const std::size_t a = rhs.size();
  std::vector<double> r(a), p(a), hp(a);
  block.multiply(x, hp);
  for (std::size_t i = 0; i < a; ++i) r[i] = rhs[i] - hp[i];
  p = r;
  double rr = dot(r, r);
  const double tol2 = abs_tol * abs_tol;
  for (int it = 0; it < max_iter && rr > tol2; ++it) {
    block.multiply(p, hp);
    const double php = dot(p, hp);
    if (!(php > 0.0)) break;
    const double step = rr / php;
    for (std::size_t i = 0; i < a; ++i) {
      x[i] += step * p[i];
      r[i] -= step * hp[i];
    }
    // Recompute the true residual now and then to stop drift.
    if ((it + 1) % 50 == 0) {
      block.multiply(x, hp);
      for (std::size_t i = 0; i < a; ++i) r[i] = rhs[i] - hp[i];
    }
    const double rr_new = dot(r, r);
    const double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t i = 0; i < a; ++i) p[i] = r[i] + beta * p[i];
  }
}

}  // namespace

std::vector<double> interference(const HeightField& field, const LoadCase& load) {
  const double reference = field.max() - load.delta_um;
  std::vector<double> ubar(field.heights().begin(), field.heights().end());
  for (double& v : ubar) v -= reference;
  return ubar;
}

double effective_area(std::size_t contact_count, double grid_spacing_um,
                      double scan_length_um) {
  return 100.0 * static_cast<double>(contact_count) * grid_spacing_um * grid_spacing_um /
         (scan_length_um * scan_length_um);
}

ContactSolution solve_contact(const InfluenceOperator& op, const HeightField& field,
                              const LoadCase& load, const SolverOptions& options) {
  if (!(load.delta_um > 0.0) || !std::isfinite(load.delta_um)) {
    throw Error(ErrorKind::InvalidLoad, "far-field displacement must be positive");
  }
  if (!(options.tol > 0.0)) {
    throw Error(ErrorKind::InvalidInput, "solver tolerance must be positive");
  }
  if (field.n_points() != op.n_points() ||
      std::abs(field.grid_spacing() - op.grid_spacing()) > 1e-12 * op.grid_spacing()) {
    throw Error(ErrorKind::DimensionMismatch, "influence operator does not match the field grid");
  }
  const std::size_t n = field.n_points();
  const std::size_t total = n * n;
  const double delta = load.delta_um;
  const double gap_tol = options.tol * delta;
  const std::vector<double> ubar = interference(field, load);

  std::vector<std::uint8_t> mask(total, 0);
  if (options.init == InitialActiveSet::PositiveInterference) {
    for (std::size_t k = 0; k < total; ++k) mask[k] = ubar[k] > 0.0;
  }

  // p stays feasible (p >= 0, zero off the active set) throughout.
  std::vector<double> pressure(total, 0.0), displacement(total, 0.0), gap(total, 0.0);
  double last_residual = INFINITY;
  std::vector<std::uint8_t> previous_mask;

  for (int sweep = 1; sweep <= options.max_sweeps; ++sweep) {
    // Inner loop: solve on the active set, step back to the feasible region
    // and release nodes whose pressure reaches zero.
    while (true) {
      std::vector<std::size_t> active;
      for (std::size_t k = 0; k < total; ++k) {
        if (mask[k]) active.push_back(k);
      }
      if (active.empty()) break;
      std::vector<double> rhs(active.size()), x(active.size());
      for (std::size_t r = 0; r < active.size(); ++r) {
        rhs[r] = ubar[active[r]];
        x[r] = pressure[active[r]];
      }
      ActiveBlock block(op, active);
      conjugate_gradient(block, rhs, x, 1e-3 * gap_tol, options.max_cg_iterations);
      // Admitted nodes still at zero pressure leave if the subproblem wants
      // them negative; they cannot limit the step.
      bool released = false;
      for (std::size_t r = 0; r < active.size(); ++r) {
        if (pressure[active[r]] == 0.0 && x[r] <= 0.0) {
          mask[active[r]] = 0;
          released = true;
        }
      }
      if (released) continue;
      double step = 1.0;
      for (std::size_t r = 0; r < active.size(); ++r) {
        if (x[r] <= 0.0) {
          const double p = pressure[active[r]];
          step = std::min(step, p / (p - x[r]));
        }
      }
      if (step >= 1.0) {
        for (std::size_t r = 0; r < active.size(); ++r) pressure[active[r]] = x[r];
        break;
      }
      for (std::size_t r = 0; r < active.size(); ++r) {
        const std::size_t k = active[r];
        const double p = pressure[k] + step * (x[r] - pressure[k]);
        if (x[r] <= 0.0 && p <= 1e-14 * pressure[k]) {
          pressure[k] = 0.0;
          mask[k] = 0;
        } else {
          pressure[k] = p;
        }
      }
    }

    op.apply(pressure, displacement);
    double p_norm = 0.0, pw = 0.0, min_gap = INFINITY;
    std::size_t worst = total;
    std::size_t contact_count = 0;
    for (std::size_t k = 0; k < total; ++k) {
      gap[k] = displacement[k] - ubar[k];
      p_norm += pressure[k] * pressure[k];
      pw += pressure[k] * gap[k];
      contact_count += mask[k];
      if (!mask[k] && (worst == total || gap[k] < gap[worst])) worst = k;
      min_gap = std::min(min_gap, gap[k]);
    }
    p_norm = std::sqrt(p_norm);
    const double residual = p_norm > 0.0 ? std::abs(pw) / (p_norm * delta) : 0.0;
    last_residual = residual;

    const bool violated = worst != total && gap[worst] < -gap_tol;
    if (!violated) {
      if (min_gap < -gap_tol || residual > options.tol) {
        throw SolverStall("active set settled but complementarity residual " +
                              fmt6(residual) + " exceeds tolerance",
                          residual);
      }
      ContactSolution s;
      s.n_points = n;
      s.grid_spacing = field.grid_spacing();
      s.scan_length = field.scan_length();
      s.delta = delta;
      s.pressures = std::move(pressure);
      s.gaps = std::move(gap);
      s.contact_mask = std::move(mask);
      s.contact_count = contact_count;
      s.effective_area = effective_area(s.contact_count, s.grid_spacing, s.scan_length);
      double force = 0.0;
      for (double p : s.pressures) force += p;
      s.total_force = force * s.grid_spacing * s.grid_spacing;
      s.iterations = sweep;
      s.complementarity_residual = residual;
      s.min_gap = min_gap;
      return s;
    }
    // A block admission that was entirely undone makes no progress; admit
    // only the most violated node in that case.
    const bool block_undone = mask == previous_mask;
    if (block_undone) {
      mask[worst] = 1;
    } else {
      previous_mask = mask;
      for (std::size_t k = 0; k < total; ++k) {
        if (!mask[k] && gap[k] < -gap_tol) mask[k] = 1;
      }
    }
  }
  throw SolverStall("contact solver did not converge within " +
                        std::to_string(options.max_sweeps) + " active-set sweeps",
                    last_residual);
}

ContactSolution solve_contact(const HeightField& field, const LoadCase& load,
                              const Material& material, double tol) {
  const InfluenceOperator op(field.n_points(), field.grid_spacing(), material);
  SolverOptions options;
  options.tol = tol;
  return solve_contact(op, field, load, options);
}

HeightField paraboloid_field(double radius_um, double scan_length_um,
                             std::size_t n_points, double z_apex_um) {
  if (!(radius_um > 0.0)) throw Error(ErrorKind::InvalidInput, "radius must be positive");
  HeightField field(n_points, scan_length_um);
  const double apex =
      z_apex_um < 0.0 ? scan_length_um * scan_length_um / (4.0 * radius_um) : z_apex_um;
  const double g = field.grid_spacing();
  const double centre = 0.5 * static_cast<double>(n_points - 1);
  for (std::size_t i = 0; i < n_points; ++i) {
    for (std::size_t j = 0; j < n_points; ++j) {
      const double x = (static_cast<double>(j) - centre) * g;
      const double y = (static_cast<double>(i) - centre) * g;
      field(i, j) = std::max(0.0, apex - (x * x + y * y) / (2.0 * radius_um));
    }
  }
  return field;
}

HertzResult hertz_reference(double radius_um, double delta_um, const Material& material,
                            double scan_length_um) {
  if (!(radius_um > 0.0) || !(scan_length_um > 0.0) || delta_um < 0.0) {
    throw Error(ErrorKind::InvalidInput, "Hertz reference needs R, L > 0 and delta >= 0");
  }
  HertzResult r;
  r.force = 4.0 / 3.0 * material.composite_modulus() *
            std::sqrt(radius_um * delta_um * delta_um * delta_um);
  r.area_percent = 100.0 * std::numbers::pi * radius_um * delta_um /
                   (scan_length_um * scan_length_um);
  return r;
}

void write_solution_csv(std::ostream& out, const HeightField& field,
                        const ContactSolution& s) {
  const std::size_t n = s.n_points;
  const double g = s.grid_spacing;
  out << "i,j,x_um,y_um,z_um,pressure,gap,in_contact\n";
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t k = i * n + j;
      out << i << ',' << j << ',' << fmt17(static_cast<double>(j) * g) << ','
          << fmt17(static_cast<double>(i) * g) << ',' << fmt17(field(i, j)) << ','
          << fmt17(s.pressures[k]) << ',' << fmt17(s.gaps[k]) << ','
          << static_cast<int>(s.contact_mask[k]) << '\n';
    }
  }
  out << "# summary\n"
      << "n_c,A_e_percent,total_force,iterations,residual\n"
      << s.contact_count << ',' << fmt17(s.effective_area) << ','
      << fmt17(s.total_force) << ',' << s.iterations << ','
      << fmt17(s.complementarity_residual) << '\n';
}

}  // namespace roughsim
