#include "dequant/deformation.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>

namespace dequant {

namespace {

using cplx = std::complex<double>;
constexpr cplx I{0.0, 1.0};

// (-i hbar d/dx + sign * i u) f
ComplexField shifted_momentum(const ComplexField& f, const RealField& u, double hbar, double sign) {
  require_same_grid(f.grid(), u.grid(), "deformed momentum");
  const auto df = derivative(f);
  std::vector<cplx> out(f.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = -I * hbar * df[i] + sign * I * u[i] * f[i];
  return ComplexField(f.grid(), std::move(out));
}

double half_inverse_mass_integral(const Grid& grid, std::span<const double> samples, double mass) {
  return integrate(grid, samples) / (2.0 * mass);
}

double mean_square(const ComplexField& f, double mass) {
  std::vector<double> sq(f.size());
  for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = std::norm(f[i]);
  return half_inverse_mass_integral(f.grid(), sq, mass);
}

double overlap_real(const ComplexField& a, const ComplexField& b, double mass) {
  std::vector<double> re(a.size());
  for (std::size_t i = 0; i < re.size(); ++i) re[i] = std::real(std::conj(a[i]) * b[i]);
  return half_inverse_mass_integral(a.grid(), re, mass);
}

void require_compatible(const WaveFunction& wf, const DeformationField& u) {
  require_same_grid(wf.grid(), u.grid(), "deformation");
  if (!(wf.constants() == u.constants())) {
    throw std::invalid_argument("wavefunction and deformation carry different physical constants");
  }
}

double floored(double rho, double rho_floor) { return std::max(rho, rho_floor); }

}  // namespace

DeformationField::DeformationField(RealField u, PhysicalConstants constants)
    : u_(std::move(u)), constants_(constants) {
  constants_.validate();
}

DeformationField DeformationField::zero(const Grid& grid, const PhysicalConstants& constants) {
  return constant(grid, constants, 0.0);
}

DeformationField DeformationField::constant(const Grid& grid, const PhysicalConstants& constants, double c) {
  return DeformationField(RealField::constant(grid, c), constants);
}

ComplexField apply_deformed_momentum(const WaveFunction& wf, const DeformationField& u) {
  require_compatible(wf, u);
  return shifted_momentum(wf.psi(), u.u(), wf.constants().hbar, -1.0);
}

ComplexField adjoint_deformed_momentum(const WaveFunction& wf, const DeformationField& u) {
  require_compatible(wf, u);
  return shifted_momentum(wf.psi(), u.u(), wf.constants().hbar, +1.0);
}

double kinetic_quantum(const WaveFunction& wf) {
  const auto zero = RealField::constant(wf.grid(), 0.0);
  return mean_square(shifted_momentum(wf.psi(), zero, wf.constants().hbar, -1.0), wf.constants().mass);
}

double kinetic_quantum_operator_form(const WaveFunction& wf) {
  const auto zero = RealField::constant(wf.grid(), 0.0);
  const double hbar = wf.constants().hbar;
  const auto p_psi = shifted_momentum(wf.psi(), zero, hbar, -1.0);
  const auto p2_psi = shifted_momentum(p_psi, zero, hbar, -1.0);
  return overlap_real(wf.psi(), p2_psi, wf.constants().mass);
}

double kinetic_deformed_direct(const WaveFunction& wf, const DeformationField& u) {
  return mean_square(apply_deformed_momentum(wf, u), wf.constants().mass);
}

double kinetic_deformed_expanded(const WaveFunction& wf, const DeformationField& u) {
  require_compatible(wf, u);
  const double hbar = wf.constants().hbar;
  const auto rho = density(wf);
  const auto du = derivative(u.u());
  std::vector<double> integrand(rho.size());
  for (std::size_t i = 0; i < integrand.size(); ++i) {
    integrand[i] = rho[i] * (-hbar * du[i] + u.u()[i] * u.u()[i]);
  }
  return kinetic_quantum(wf) + half_inverse_mass_integral(wf.grid(), integrand, wf.constants().mass);
}

double kinetic_deformed_operator_form(const WaveFunction& wf, const DeformationField& u) {
  const auto pu_psi = apply_deformed_momentum(wf, u);
  const auto adjoint = shifted_momentum(pu_psi, u.u(), wf.constants().hbar, +1.0);
  return overlap_real(wf.psi(), adjoint, wf.constants().mass);
}

RealField functional_gradient(const WaveFunction& wf, const DeformationField& u) {
  require_compatible(wf, u);
  const double hbar = wf.constants().hbar;
  const double mass = wf.constants().mass;
  const auto rho = density(wf);
  const auto drho = derivative(rho);
  std::vector<double> g(rho.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = (2.0 * rho[i] * u.u()[i] + hbar * drho[i]) / (2.0 * mass);
  return RealField(wf.grid(), std::move(g));
}

DeformationField critical_deformation(const RealField& rho, const PhysicalConstants& constants, double rho_floor) {
  const auto mask = floor_mask(rho, rho_floor);
  const auto drho = derivative(rho);
  std::vector<double> u(rho.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = -0.5 * constants.hbar * drho[i] / floored(rho[i], rho_floor);
  return DeformationField(RealField(rho.grid(), fill_masked(rho.grid(), std::move(u), mask)), constants);
}

DeformationField critical_deformation(const RealField& rho, const PhysicalConstants& constants) {
  return critical_deformation(rho, constants, default_rho_floor(rho));
}

double fisher_information(const RealField& rho, double rho_floor) {
  const auto drho = derivative(rho);
  std::vector<double> integrand(rho.size());
  for (std::size_t i = 0; i < integrand.size(); ++i) {
    integrand[i] = drho[i] * drho[i] / floored(rho[i], rho_floor);
  }
  return integrate(rho.grid(), integrand);
}

double fisher_information(const RealField& rho) { return fisher_information(rho, default_rho_floor(rho)); }

RealField osmotic_momentum(const RealField& rho, const PhysicalConstants& constants, double rho_floor) {
  const auto mask = floor_mask(rho, rho_floor);
  const auto drho = derivative(rho);
  std::vector<double> p(rho.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double log_slope = drho[i] / floored(rho[i], rho_floor);
    p[i] = constants.hbar * log_slope / 2.0;
  }
  return RealField(rho.grid(), fill_masked(rho.grid(), std::move(p), mask));
}

RealField osmotic_momentum(const RealField& rho, const PhysicalConstants& constants) {
  return osmotic_momentum(rho, constants, default_rho_floor(rho));
}

RealField classical_momentum_field(const WaveFunction& wf, double rho_floor) {
  return polar_decompose(wf, rho_floor).momentum();
}

RealField classical_momentum_field(const WaveFunction& wf) { return polar_decompose(wf).momentum(); }

double kinetic_classical(const ClassicalEnsemble& ens) {
  const auto& rho = ens.rho();
  const auto& p = ens.momentum();
  std::vector<double> integrand(rho.size());
  for (std::size_t i = 0; i < integrand.size(); ++i) integrand[i] = rho[i] * p[i] * p[i];
  return half_inverse_mass_integral(ens.grid(), integrand, ens.constants().mass);
}

KineticReport kinetic_report(const WaveFunction& wf, const std::optional<DeformationField>& u, double rho_floor) {
  const auto& c = wf.constants();
  const auto rho = density(wf);
  const auto u_c = critical_deformation(rho, c, rho_floor);
  const auto& at = u ? *u : u_c;

  KineticReport report;
  report.T = kinetic_quantum(wf);
  report.T_u = kinetic_deformed_direct(wf, at);
  report.T_uc = kinetic_deformed_direct(wf, u_c);
  report.fisher_I = fisher_information(rho, rho_floor);
  report.identity_residual =
      std::abs(report.T_uc - (report.T - c.hbar * c.hbar * report.fisher_I / (8.0 * c.mass)));
  report.form_residual = std::abs(report.T_u - kinetic_deformed_expanded(wf, at));
  return report;
}

KineticReport kinetic_report(const WaveFunction& wf, const std::optional<DeformationField>& u) {
  return kinetic_report(wf, u, default_rho_floor(density(wf)));
}

double rho_weighted_norm(const RealField& rho, const RealField& f) {
  require_same_grid(rho.grid(), f.grid(), "rho_weighted_norm");
  std::vector<double> integrand(rho.size());
  for (std::size_t i = 0; i < integrand.size(); ++i) integrand[i] = rho[i] * f[i] * f[i];
  return std::sqrt(integrate(rho.grid(), integrand));
}

MinimizationResult minimize_deformation(const WaveFunction& wf, const DeformationField& u0,
                                        const MinimizerOptions& options) {
  require_compatible(wf, u0);
  const Grid& grid = wf.grid();
  const auto& c = wf.constants();
  const auto rho = density(wf);
  const double rho_floor = options.rho_floor > 0.0 ? options.rho_floor : default_rho_floor(rho);
  const double T = kinetic_quantum(wf);
  const double threshold = options.tol * (1.0 + std::abs(T)) / grid.length();

  std::vector<double> u(u0.u().values().begin(), u0.u().values().end());
  auto field = [&](const std::vector<double>& v) { return DeformationField(RealField(grid, v), c); };

  std::vector<MinimizerStep> trace;
  double value = kinetic_deformed_direct(wf, field(u));
  int iteration = 0;
  double gradient_norm = 0.0;
  for (;; ++iteration) {
    const auto gradient = functional_gradient(wf, field(u));
    gradient_norm = l2_norm(gradient);
    trace.push_back({iteration, value, gradient_norm, 0.0});
    if (gradient_norm <= threshold) break;
    if (iteration >= options.max_iter) {
      throw ConvergenceError("minimize_deformation: no convergence after " + std::to_string(iteration) +
                                 " iterations, gradient norm " + std::to_string(gradient_norm),
                             gradient_norm, iteration);
    }

    std::vector<double> direction(u.size());
    std::vector<double> slope_terms(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
      direction[i] = -c.mass * gradient[i] / floored(rho[i], rho_floor);
      slope_terms[i] = gradient[i] * direction[i];
    }
    const double slope = integrate(grid, slope_terms);

    // Slack for round-off in T_u once the decrease drops below machine precision.
    const double slack = 8.0 * std::numeric_limits<double>::epsilon() * std::abs(value);
    double step = options.initial_step;
    std::vector<double> trial(u.size());
    double trial_value = value;
    for (int halvings = 0;; ++halvings) {
      for (std::size_t i = 0; i < u.size(); ++i) trial[i] = u[i] + step * direction[i];
      trial_value = kinetic_deformed_direct(wf, field(trial));
      if (trial_value <= value + options.armijo * step * slope + slack) break;
      if (halvings >= 60) {
        throw ConvergenceError("minimize_deformation: line search failed, gradient norm " +
                                   std::to_string(gradient_norm),
                               gradient_norm, iteration);
      }
      step *= options.backtrack;
    }
    trace.back().step = step;
    u.swap(trial);
    value = trial_value;
  }

  // Below the floor T_u barely depends on u, so descent leaves those samples
  // wherever they started. Replace them by interpolation, as u_c does.
  u = fill_masked(grid, std::move(u), floor_mask(rho, rho_floor));
  value = kinetic_deformed_direct(wf, field(u));
  auto u_star = field(u);
  KineticReport report;
  report.T = T;
  report.T_u = value;
  report.T_uc = value;
  report.fisher_I = fisher_information(rho, rho_floor);
  report.identity_residual = std::abs(value - (T - c.hbar * c.hbar * report.fisher_I / (8.0 * c.mass)));
  report.form_residual = std::abs(value - kinetic_deformed_expanded(wf, u_star));
  return MinimizationResult{std::move(u_star), report, iteration, std::move(trace)};
}

}  // namespace dequant
