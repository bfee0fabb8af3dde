#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "dequant/grid.hpp"
#include "dequant/state.hpp"

namespace dequant {

/// Real deformation u of the momentum operator, P_u = P - i u.
///
/// A general deformation w is complex; only its imaginary part u is modeled.
/// The real part enters like a vector potential and does not affect the
/// kinetic minimum.
class DeformationField {
 public:
  DeformationField(RealField u, PhysicalConstants constants);

  static DeformationField zero(const Grid& grid, const PhysicalConstants& constants);
  static DeformationField constant(const Grid& grid, const PhysicalConstants& constants, double c);

  const RealField& u() const noexcept { return u_; }
  const PhysicalConstants& constants() const noexcept { return constants_; }
  const Grid& grid() const noexcept { return u_.grid(); }

 private:
  RealField u_;
  PhysicalConstants constants_;
};

struct KineticReport {
  double T = 0.0;
  double T_u = 0.0;
  double T_uc = 0.0;
  double fisher_I = 0.0;
  /// |T_uc - (T - hbar^2 I / 8m)|
  double identity_residual = 0.0;
  /// |T_u(direct) - T_u(expanded)|
  double form_residual = 0.0;
};

/// (-i hbar d/dx - i u) psi
ComplexField apply_deformed_momentum(const WaveFunction& wf, const DeformationField& u);
/// (-i hbar d/dx + i u) psi
ComplexField adjoint_deformed_momentum(const WaveFunction& wf, const DeformationField& u);

/// T = (1/2m) ∫ |P psi|^2
double kinetic_quantum(const WaveFunction& wf);
/// T = (1/2m) Re ∫ conj(psi) P^2 psi, the integrated-by-parts form.
double kinetic_quantum_operator_form(const WaveFunction& wf);

/// T_u = (1/2m) ∫ |P_u psi|^2
double kinetic_deformed_direct(const WaveFunction& wf, const DeformationField& u);
/// T_u = T + (1/2m) ∫ rho (-hbar u' + u^2)
double kinetic_deformed_expanded(const WaveFunction& wf, const DeformationField& u);
/// T_u = (1/2m) Re ∫ conj(psi) P_u^† P_u psi
double kinetic_deformed_operator_form(const WaveFunction& wf, const DeformationField& u);

/// δT_u/δu = (2 rho u + hbar rho') / 2m
RealField functional_gradient(const WaveFunction& wf, const DeformationField& u);

/// u_c = -(hbar/2) rho' / max(rho, floor); sub-floor points interpolated.
DeformationField critical_deformation(const RealField& rho, const PhysicalConstants& constants, double rho_floor);
DeformationField critical_deformation(const RealField& rho, const PhysicalConstants& constants);

/// I = ∫ rho'^2 / max(rho, floor)
double fisher_information(const RealField& rho, double rho_floor);
double fisher_information(const RealField& rho);

/// Nelson's osmotic momentum (hbar/2) rho' / max(rho, floor).
RealField osmotic_momentum(const RealField& rho, const PhysicalConstants& constants, double rho_floor);
RealField osmotic_momentum(const RealField& rho, const PhysicalConstants& constants);

/// grad S of the polar decomposition of wf.
RealField classical_momentum_field(const WaveFunction& wf);
RealField classical_momentum_field(const WaveFunction& wf, double rho_floor);

/// (1/2m) ∫ rho (grad S)^2
double kinetic_classical(const ClassicalEnsemble& ens);

/// T, T_u at `u` (u_c when absent), T_uc, Fisher information and the
/// residuals of T_uc = T - hbar^2 I / 8m and of the two T_u forms.
KineticReport kinetic_report(const WaveFunction& wf, const std::optional<DeformationField>& u = std::nullopt);
KineticReport kinetic_report(const WaveFunction& wf, const std::optional<DeformationField>& u, double rho_floor);

/// Thrown when minimize_deformation exhausts its iteration budget.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double gradient_norm, int iterations)
      : std::runtime_error(what), gradient_norm_(gradient_norm), iterations_(iterations) {}

  double gradient_norm() const noexcept { return gradient_norm_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double gradient_norm_;
  int iterations_;
};

struct MinimizerStep {
  int iteration = 0;
  double T_u = 0.0;
  double gradient_norm = 0.0;
  double step = 0.0;
};

struct MinimizationResult {
  DeformationField u;
  /// T_uc holds the numerically minimized value T_{u*}.
  KineticReport report;
  int iterations = 0;
  std::vector<MinimizerStep> trace;
};

struct MinimizerOptions {
  double tol = 1e-8;
  int max_iter = 500;
  /// Absolute density floor for the preconditioner; <= 0 selects 1e-12 max(rho).
  double rho_floor = 0.0;
  double initial_step = 0.5;
  double backtrack = 0.5;
  double armijo = 1e-4;
};

/// Minimizes T_u over u by backtracking gradient descent, independently of
/// the closed-form critical point. The search direction is the functional
/// gradient rescaled by m / max(rho, floor), i.e. steepest descent in the
/// rho-weighted metric in which the minimizer is unique. Stops once
/// ||δT_u/δu||_2 <= tol (1 + |T|) / L.
MinimizationResult minimize_deformation(const WaveFunction& wf, const DeformationField& u0,
                                        const MinimizerOptions& options = {});

/// sqrt(∫ rho f^2)
double rho_weighted_norm(const RealField& rho, const RealField& f);

}  // namespace dequant
