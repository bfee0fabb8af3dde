#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "dequant/deformation.hpp"
#include "dequant/grid.hpp"
#include "dequant/state.hpp"

namespace dequant {

/// External potential V with its gradient.
///
/// The gradient is carried explicitly because the classical propagator needs
/// grad V, and potentials such as the harmonic well are not periodic: a
/// spectral derivative would ring across the seam.
class Potential {
 public:
  Potential(RealField values, RealField gradient);

  static Potential free(const Grid& grid);
  /// V = m omega^2 (x - center)^2 / 2
  static Potential harmonic(const Grid& grid, const PhysicalConstants& constants, double omega,
                            double center = 0.0);
  /// Custom samples; the gradient uses local 4th-order differences (wrapped
  /// on periodic grids).
  static Potential from_samples(RealField values);

  const RealField& values() const noexcept { return values_; }
  const RealField& gradient() const noexcept { return gradient_; }
  const Grid& grid() const noexcept { return values_.grid(); }

 private:
  RealField values_;
  RealField gradient_;
};

enum class Regime { quantum, classical, deformed };
std::string to_string(Regime regime);

struct EnergySample {
  double kinetic = 0.0;
  double potential = 0.0;
  double total = 0.0;
};

struct StepDiagnostics {
  bool caustic = false;
  /// Classical runs: points with rho below the initial floor.
  std::size_t masked_points = 0;
};

using Snapshot = std::variant<WaveFunction, ClassicalEnsemble>;

struct TrajectoryRecord {
  TrajectoryRecord(Regime regime, Potential potential, std::optional<DeformationField> deformation = std::nullopt)
      : regime(regime), potential(std::move(potential)), deformation(std::move(deformation)) {}

  Regime regime;
  Potential potential;
  std::optional<DeformationField> deformation;

  std::vector<double> times;
  std::vector<Snapshot> snapshots;
  std::vector<EnergySample> energies;
  /// ∫|psi|^2 for quantum and deformed runs, ∫rho for classical runs.
  std::vector<double> norms;
  std::vector<StepDiagnostics> diagnostics;

  bool halted = false;
  double halt_time = 0.0;
  std::size_t halt_step = 0;
  std::string halt_reason;

  RealField density_at(std::size_t index) const;
};

/// dt and step count. A negative dt runs the propagator backwards in time.
struct EvolutionOptions {
  double dt = 1e-3;
  std::size_t n_steps = 0;
  std::size_t record_every = 1;
};

struct ClassicalOptions : EvolutionOptions {
  /// Halt when max|S''| exceeds this; <= 0 selects 50 m / |dt|.
  double caustic_threshold = 0.0;
  /// Halt when min rho drops below this.
  double negative_density = -1e-8;
};

/// Raised for a NaN or Inf during propagation.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::size_t step) : std::runtime_error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Raised when a time step cannot be resolved on the grid.
class StepSizeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Strang split-step Fourier propagation of i hbar psi_t = -(hbar^2/2m) psi'' + V psi.
TrajectoryRecord evolve_schrodinger(const WaveFunction& wf0, const Potential& potential,
                                    const EvolutionOptions& options);

/// Classical Hamilton-Jacobi plus continuity, RK4 in time with spectral
/// derivatives. The momentum field p = S' is advanced in conservation form
/// p_t = -(p^2/2m + V)', alongside rho_t = -(rho p/m)' and S_t = -p^2/2m - V.
/// Quadratic products pass through spectral_filter before differentiation. A caustic halts the run and
/// is reported in the record; it is not an error.
TrajectoryRecord evolve_classical(const ClassicalEnsemble& ens0, const Potential& potential,
                                  const ClassicalOptions& options);

/// V + (u^2 - hbar u') / 2m. u' uses local 4th-order differences: the
/// deformations of interest (u_c = x for the oscillator ground state) are
/// not periodic, and a spectral derivative would ring across the seam.
RealField effective_potential(const Potential& potential, const DeformationField& u);

/// Split-step propagation with the frozen-u effective potential.
TrajectoryRecord evolve_deformed_fixed_u(const WaveFunction& wf0, const Potential& potential,
                                         const DeformationField& u, const EvolutionOptions& options);

/// Kinetic, potential and total energy of every snapshot: T for quantum runs,
/// T + ∫rho (u^2 - hbar u')/2m (T_u in expanded form, with the propagator's
/// u') for deformed runs, the classical kinetic term for classical runs.
std::vector<EnergySample> energy_audit(const TrajectoryRecord& record);

/// max |E_total(t) - E_total(0)| / max(|E_total(0)|, tiny)
double relative_energy_drift(const std::vector<EnergySample>& energies);

struct GapSample {
  double t = 0.0;
  /// L2 distance between quantum and classical densities.
  double density_distance = 0.0;
  /// T_quantum - T_classical
  double kinetic_gap = 0.0;
};

struct GapSeries {
  std::vector<GapSample> samples;
  bool truncated = false;
  double halt_time = 0.0;
  TrajectoryRecord quantum;
  TrajectoryRecord classical;
};

/// Runs the quantum and classical propagators from matched initial data
/// (the polar decomposition of wf0) and tracks how far apart they drift.
GapSeries dequantization_gap(const WaveFunction& wf0, const Potential& potential, const ClassicalOptions& options);

/// 0.1 m dx^2 / hbar
double quantum_dt_bound(const Grid& grid, const PhysicalConstants& constants);
/// 0.2 dx / max|p/m|; infinity for an ensemble at rest.
double classical_dt_bound(const ClassicalEnsemble& ens);

}  // namespace dequant
