#include "dequant/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <future>
#include <limits>
#include <numbers>

#include "grid_internal.hpp"

namespace dequant {

namespace {

using cplx = std::complex<double>;

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

bool all_finite(std::span<const cplx> v) {
  return std::all_of(v.begin(), v.end(), [](cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

// Local 4th-order derivative; wraps on periodic grids.
RealField local_gradient(const RealField& f) {
  const Grid& grid = f.grid();
  if (!grid.periodic()) return derivative(f);
  const std::size_t n = f.size();
  const double h = 12.0 * grid.dx();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto at = [&](std::ptrdiff_t offset) {
      return f[static_cast<std::size_t>((static_cast<std::ptrdiff_t>(i + n) + offset) % static_cast<std::ptrdiff_t>(n))];
    };
    d[i] = (at(-2) - 8.0 * at(-1) + 8.0 * at(1) - at(2)) / h;
  }
  return RealField(grid, std::move(d));
}

void require_periodic(const Grid& grid, const char* what) {
  if (!grid.periodic()) throw std::invalid_argument(std::string(what) + " requires a periodic grid");
}

void require_options(const EvolutionOptions& options) {
  if (!(options.dt != 0.0) || !std::isfinite(options.dt)) throw StepSizeError("dt must be finite and non-zero");
  if (options.record_every == 0) throw std::invalid_argument("record_every must be at least 1");
}

RealField deformation_shift(const DeformationField& u) {
  const auto& c = u.constants();
  const auto du = local_gradient(u.u());
  std::vector<double> v(du.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = (u.u()[i] * u.u()[i] - c.hbar * du[i]) / (2.0 * c.mass);
  return RealField(u.grid(), std::move(v));
}

// Deformed runs book T + ∫rho (u^2 - hbar u')/2m, the expanded T_u with the
// same divergence the propagator sees, so the audited total is the conserved one.
EnergySample quantum_energy(const WaveFunction& wf, const Potential& potential,
                            const std::optional<DeformationField>& u) {
  EnergySample e;
  const auto rho = density(wf);
  e.kinetic = kinetic_quantum(wf);
  if (u) e.kinetic += integrate(rho * deformation_shift(*u));
  e.potential = integrate(rho * potential.values());
  e.total = e.kinetic + e.potential;
  return e;
}

EnergySample classical_energy(const ClassicalEnsemble& ens, const Potential& potential) {
  EnergySample e;
  e.kinetic = kinetic_classical(ens);
  e.potential = integrate(ens.rho() * potential.values());
  e.total = e.kinetic + e.potential;
  return e;
}

// Shared by the quantum and frozen-u runs; `u` only affects bookkeeping.
TrajectoryRecord split_step(Regime regime, const WaveFunction& wf0, const Potential& potential,
                            const RealField& step_potential, const std::optional<DeformationField>& u,
                            const EvolutionOptions& options) {
  const Grid& grid = wf0.grid();
  require_periodic(grid, "split-step propagation");
  require_same_grid(grid, potential.grid(), "split-step propagation");
  require_options(options);

  const auto& c = wf0.constants();
  const auto& data = grid_data(grid);
  const std::size_t n = grid.n();
  const double dt = options.dt;

  double k_max = 0.0;
  for (double k : data.wavenumbers) k_max = std::max(k_max, std::abs(k));
  if (k_max * k_max * c.hbar * std::abs(dt) / (2.0 * c.mass) >= std::numbers::pi) {
    throw StepSizeError("time step too large for the grid: max|k|^2 hbar dt / 2m must stay below pi");
  }

  std::vector<cplx> half_kick(n), drift(n);
  for (std::size_t i = 0; i < n; ++i) {
    half_kick[i] = std::polar(1.0, -step_potential[i] * dt / (2.0 * c.hbar));
  }
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double k = data.wavenumbers[j];
    drift[j] = std::polar(scale, -c.hbar * k * k * dt / (2.0 * c.mass));
  }

  TrajectoryRecord record(regime, potential, u);
  auto push = [&](const WaveFunction& wf, double t) {
    record.times.push_back(t);
    record.norms.push_back(norm_squared(wf));
    record.energies.push_back(quantum_energy(wf, potential, u));
    record.diagnostics.push_back({});
    record.snapshots.emplace_back(wf);
  };

  std::vector<cplx> psi(wf0.psi().values().begin(), wf0.psi().values().end());
  std::vector<cplx> spectrum(n);
  push(wf0, 0.0);
  for (std::size_t step = 1; step <= options.n_steps; ++step) {
    for (std::size_t i = 0; i < n; ++i) psi[i] *= half_kick[i];
    data.fft->forward(psi, spectrum);
    for (std::size_t j = 0; j < n; ++j) spectrum[j] *= drift[j];
    data.fft->backward(spectrum, psi);
    for (std::size_t i = 0; i < n; ++i) psi[i] *= half_kick[i];

    if (!all_finite(psi)) {
      throw NumericalError("non-finite wavefunction at step " + std::to_string(step), step);
    }
    if (step % options.record_every == 0 || step == options.n_steps) {
      push(WaveFunction(ComplexField(grid, psi), c), static_cast<double>(step) * dt);
    }
  }
  return record;
}

struct ClassicalState {
  std::vector<double> rho;
  std::vector<double> p;
  std::vector<double> S;
};

ClassicalState axpy(const ClassicalState& y, double a, const ClassicalState& k) {
  ClassicalState out = y;
  for (std::size_t i = 0; i < y.rho.size(); ++i) {
    out.rho[i] += a * k.rho[i];
    out.p[i] += a * k.p[i];
    out.S[i] += a * k.S[i];
  }
  return out;
}

ClassicalState hamilton_jacobi_rhs(const Grid& grid, const ClassicalState& y, const Potential& potential,
                                   double mass, std::size_t step) {
  const std::size_t n = y.rho.size();
  std::vector<double> flux(n), energy_density(n);
  for (std::size_t i = 0; i < n; ++i) {
    flux[i] = y.rho[i] * y.p[i] / mass;
    energy_density[i] = y.p[i] * y.p[i] / (2.0 * mass);
  }
  // A blow-up can surface inside an intermediate stage before the step completes.
  if (!all_finite(flux) || !all_finite(energy_density) || !all_finite(y.S)) {
    throw NumericalError("non-finite classical state at step " + std::to_string(step), step);
  }
  const auto dflux = derivative(spectral_filter(RealField(grid, flux)));
  const auto denergy = derivative(spectral_filter(RealField(grid, energy_density)));
  ClassicalState dy{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    dy.rho[i] = -dflux[i];
    dy.p[i] = -denergy[i] - potential.gradient()[i];
    dy.S[i] = -energy_density[i] - potential.values()[i];
  }
  return dy;
}

}  // namespace

Potential::Potential(RealField values, RealField gradient) : values_(std::move(values)), gradient_(std::move(gradient)) {
  require_same_grid(values_.grid(), gradient_.grid(), "Potential");
}

Potential Potential::free(const Grid& grid) {
  return Potential(RealField::constant(grid, 0.0), RealField::constant(grid, 0.0));
}

Potential Potential::harmonic(const Grid& grid, const PhysicalConstants& constants, double omega, double center) {
  if (!(omega > 0.0)) throw std::invalid_argument("harmonic frequency must be positive");
  const double k = constants.mass * omega * omega;
  return Potential(RealField::sample(grid, [&](double x) { return 0.5 * k * (x - center) * (x - center); }),
                   RealField::sample(grid, [&](double x) { return k * (x - center); }));
}

Potential Potential::from_samples(RealField values) {
  auto gradient = local_gradient(values);
  return Potential(std::move(values), std::move(gradient));
}

std::string to_string(Regime regime) {
  switch (regime) {
    case Regime::quantum: return "quantum";
    case Regime::classical: return "classical";
    case Regime::deformed: return "deformed";
  }
  return "unknown";
}

RealField TrajectoryRecord::density_at(std::size_t index) const {
  const auto& snapshot = snapshots.at(index);
  if (const auto* wf = std::get_if<WaveFunction>(&snapshot)) return density(*wf);
  return std::get<ClassicalEnsemble>(snapshot).rho();
}

TrajectoryRecord evolve_schrodinger(const WaveFunction& wf0, const Potential& potential,
                                    const EvolutionOptions& options) {
  return split_step(Regime::quantum, wf0, potential, potential.values(), std::nullopt, options);
}

RealField effective_potential(const Potential& potential, const DeformationField& u) {
  require_same_grid(potential.grid(), u.grid(), "effective_potential");
  return potential.values() + deformation_shift(u);
}

TrajectoryRecord evolve_deformed_fixed_u(const WaveFunction& wf0, const Potential& potential,
                                         const DeformationField& u, const EvolutionOptions& options) {
  require_same_grid(wf0.grid(), u.grid(), "evolve_deformed_fixed_u");
  if (!(wf0.constants() == u.constants())) {
    throw std::invalid_argument("wavefunction and deformation carry different physical constants");
  }
  return split_step(Regime::deformed, wf0, potential, effective_potential(potential, u), u, options);
}

TrajectoryRecord evolve_classical(const ClassicalEnsemble& ens0, const Potential& potential,
                                  const ClassicalOptions& options) {
  const Grid& grid = ens0.grid();
  require_periodic(grid, "evolve_classical");
  require_same_grid(grid, potential.grid(), "evolve_classical");
  require_options(options);

  const auto& c = ens0.constants();
  const double dt = options.dt;
  const double caustic_threshold =
      options.caustic_threshold > 0.0 ? options.caustic_threshold : 50.0 * c.mass / std::abs(dt);
  const double initial_floor = default_rho_floor(ens0.rho());

  TrajectoryRecord record(Regime::classical, potential);
  auto push = [&](const ClassicalState& y, double t, bool caustic) {
    ClassicalEnsemble ens(RealField(grid, y.rho), RealField(grid, y.S), RealField(grid, y.p),
                          std::vector<std::uint8_t>(y.rho.size(), 0), c, ens0.seam_jump());
    StepDiagnostics diag;
    diag.caustic = caustic;
    diag.masked_points = static_cast<std::size_t>(
        std::count_if(y.rho.begin(), y.rho.end(), [&](double r) { return r < initial_floor; }));
    record.times.push_back(t);
    record.norms.push_back(integrate(ens.rho()));
    record.energies.push_back(classical_energy(ens, potential));
    record.diagnostics.push_back(diag);
    record.snapshots.emplace_back(std::move(ens));
  };

  ClassicalState y{{ens0.rho().values().begin(), ens0.rho().values().end()},
                   {ens0.momentum().values().begin(), ens0.momentum().values().end()},
                   {ens0.action().values().begin(), ens0.action().values().end()}};
  push(y, 0.0, false);

  const double m = c.mass;
  for (std::size_t step = 1; step <= options.n_steps; ++step) {
    const auto k1 = hamilton_jacobi_rhs(grid, y, potential, m, step);
    const auto k2 = hamilton_jacobi_rhs(grid, axpy(y, 0.5 * dt, k1), potential, m, step);
    const auto k3 = hamilton_jacobi_rhs(grid, axpy(y, 0.5 * dt, k2), potential, m, step);
    const auto k4 = hamilton_jacobi_rhs(grid, axpy(y, dt, k3), potential, m, step);
    for (std::size_t i = 0; i < y.rho.size(); ++i) {
      y.rho[i] += dt / 6.0 * (k1.rho[i] + 2.0 * k2.rho[i] + 2.0 * k3.rho[i] + k4.rho[i]);
      y.p[i] += dt / 6.0 * (k1.p[i] + 2.0 * k2.p[i] + 2.0 * k3.p[i] + k4.p[i]);
      y.S[i] += dt / 6.0 * (k1.S[i] + 2.0 * k2.S[i] + 2.0 * k3.S[i] + k4.S[i]);
    }
    if (!all_finite(y.rho) || !all_finite(y.p) || !all_finite(y.S)) {
      throw NumericalError("non-finite classical state at step " + std::to_string(step), step);
    }

    const double t = static_cast<double>(step) * dt;
    const double min_rho = *std::min_element(y.rho.begin(), y.rho.end());
    const double max_curvature = max_abs(derivative(RealField(grid, y.p)));
    std::string reason;
    if (min_rho < options.negative_density) {
      reason = "density went negative (min rho = " + std::to_string(min_rho) + ")";
    } else if (max_curvature > caustic_threshold) {
      reason = "max|S''| = " + std::to_string(max_curvature) + " exceeded " + std::to_string(caustic_threshold);
    }
    if (!reason.empty()) {
      record.halted = true;
      record.halt_time = t;
      record.halt_step = step;
      record.halt_reason = "caustic: " + reason;
      push(y, t, true);
      break;
    }
    if (step % options.record_every == 0 || step == options.n_steps) push(y, t, false);
  }
  return record;
}

std::vector<EnergySample> energy_audit(const TrajectoryRecord& record) {
  std::vector<EnergySample> out;
  out.reserve(record.snapshots.size());
  for (const auto& snapshot : record.snapshots) {
    if (const auto* wf = std::get_if<WaveFunction>(&snapshot)) {
      out.push_back(quantum_energy(*wf, record.potential, record.deformation));
    } else {
      out.push_back(classical_energy(std::get<ClassicalEnsemble>(snapshot), record.potential));
    }
  }
  return out;
}

double relative_energy_drift(const std::vector<EnergySample>& energies) {
  if (energies.empty()) return 0.0;
  const double e0 = energies.front().total;
  double drift = 0.0;
  for (const auto& e : energies) drift = std::max(drift, std::abs(e.total - e0));
  return drift / std::max(std::abs(e0), std::numeric_limits<double>::min());
}

GapSeries dequantization_gap(const WaveFunction& wf0, const Potential& potential, const ClassicalOptions& options) {
  const auto ens0 = polar_decompose(wf0);
  auto quantum_run = std::async(std::launch::async, [&] { return evolve_schrodinger(wf0, potential, options); });
  auto classical = evolve_classical(ens0, potential, options);
  auto quantum = quantum_run.get();

  GapSeries series{{}, classical.halted, classical.halt_time, std::move(quantum), std::move(classical)};
  const auto& q = series.quantum;
  const auto& cl = series.classical;
  // Both runs record on the same schedule; a caustic cuts the classical one short.
  const std::size_t count = std::min(q.times.size(), cl.times.size());
  for (std::size_t i = 0; i < count; ++i) {
    if (cl.diagnostics[i].caustic) break;
    GapSample s;
    s.t = q.times[i];
    s.density_distance = l2_norm(q.density_at(i) - cl.density_at(i));
    s.kinetic_gap = q.energies[i].kinetic - cl.energies[i].kinetic;
    series.samples.push_back(s);
  }
  return series;
}

double quantum_dt_bound(const Grid& grid, const PhysicalConstants& constants) {
  return 0.1 * constants.mass * grid.dx() * grid.dx() / constants.hbar;
}

double classical_dt_bound(const ClassicalEnsemble& ens) {
  const double v_max = max_abs(ens.momentum()) / ens.constants().mass;
  if (v_max == 0.0) return std::numeric_limits<double>::infinity();
  return 0.2 * ens.grid().dx() / v_max;
}

}  // namespace dequant
