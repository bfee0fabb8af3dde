#include <doctest.h>

#include <cmath>

#include "dequant/dynamics.hpp"
#include "support.hpp"

using namespace dequant;
using testing::max_diff;
using testing::pi;

namespace {

const PhysicalConstants unit{};

double variance(const RealField& rho) {
  const Grid& g = rho.grid();
  const auto x = RealField::sample(g, [](double v) { return v; });
  const double mean = integrate(x * rho);
  return integrate(x * x * rho) - mean * mean;
}

ClassicalOptions classical(double dt, std::size_t steps, std::size_t every) {
  ClassicalOptions o;
  o.dt = dt;
  o.n_steps = steps;
  o.record_every = every;
  return o;
}

EvolutionOptions quantum(double dt, std::size_t steps, std::size_t every) { return {dt, steps, every}; }

const ClassicalEnsemble& last_ensemble(const TrajectoryRecord& r) {
  return std::get<ClassicalEnsemble>(r.snapshots.back());
}

const WaveFunction& last_wave(const TrajectoryRecord& r) { return std::get<WaveFunction>(r.snapshots.back()); }

}  // namespace

TEST_CASE("potentials") {
  const Grid g(-8.0, 8.0, 256, Boundary::periodic);
  const auto h = Potential::harmonic(g, PhysicalConstants{1.0, 2.0}, 1.5, 0.5);
  CHECK(h.values()[100] == doctest::Approx(0.5 * 2.0 * 2.25 * std::pow(g.x(100) - 0.5, 2)));
  CHECK(h.gradient()[100] == doctest::Approx(2.0 * 2.25 * (g.x(100) - 0.5)));
  const auto s = Potential::from_samples(h.values());
  // Local differences are exact on quadratics away from the seam.
  for (std::size_t i = 2; i + 2 < g.n(); ++i) CHECK(std::abs(s.gradient()[i] - h.gradient()[i]) <= 1e-10);
  CHECK(max_abs(Potential::free(g).values()) == 0.0);
}

TEST_CASE("free gaussian spreads") {
  const Grid g(-16.0, 16.0, 512, Boundary::periodic);
  const auto wf = gaussian_packet(g, unit, 0.0, 1.0, 0.0);
  const auto r = evolve_schrodinger(wf, Potential::free(g), quantum(2.5e-4, 8000, 4000));
  CHECK(r.times.back() == doctest::Approx(2.0));
  CHECK(std::abs(variance(r.density_at(r.times.size() - 1)) - 2.0) <= 1e-4);
  CHECK(std::abs(r.norms.back() - 1.0) <= 1e-10);
}

TEST_CASE("harmonic ground state is stationary") {
  const Grid g(-8.0, 8.0, 256, Boundary::periodic);
  const auto wf = gaussian_packet(g, unit, 0.0, std::sqrt(0.5), 0.0);
  const auto V = Potential::harmonic(g, unit, 1.0);
  const auto r = evolve_schrodinger(wf, V, quantum(2.5e-4, 40000, 4000));
  const auto rho0 = density(wf);
  double worst = 0.0;
  for (std::size_t i = 0; i < r.times.size(); ++i) worst = std::max(worst, testing::l2_distance(r.density_at(i), rho0));
  CHECK(r.times.back() == doctest::Approx(10.0));
  CHECK(worst <= 1e-8);
  const auto e = energy_audit(r);
  for (const auto& s : e) CHECK(std::abs(s.total - 0.5) <= 1e-8);
  CHECK(relative_energy_drift(e) <= 1e-8);
}

TEST_CASE("plane wave phase advances at hbar k^2 / 2m") {
  const Grid g(0.0, 2.0 * pi, 64, Boundary::periodic);
  const auto wf = plane_wave(g, unit, 1.0);
  const auto r = evolve_schrodinger(wf, Potential::free(g), quantum(1e-3, 1000, 250));
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    const auto& psi = std::get<WaveFunction>(r.snapshots[i]).psi();
    const auto expected = std::polar(1.0, -r.times[i] / 2.0) * wf.psi();
    CHECK(max_diff(psi.values(), expected.values()) <= 1e-12);
    CHECK(max_diff(r.density_at(i).values(), density(wf).values()) <= 1e-12);
  }
}

TEST_CASE("split-step rejects unresolved steps and dirichlet grids") {
  const Grid g(-8.0, 8.0, 256, Boundary::periodic);
  const auto wf = gaussian_packet(g, unit, 0.0, 1.0, 0.0);
  CHECK_THROWS_AS(evolve_schrodinger(wf, Potential::free(g), quantum(0.1, 10, 1)), StepSizeError);
  CHECK_THROWS_AS(evolve_schrodinger(wf, Potential::free(g), quantum(0.0, 10, 1)), StepSizeError);
  const Grid d(-8.0, 8.0, 257, Boundary::dirichlet);
  CHECK_THROWS_AS(evolve_schrodinger(gaussian_packet(d, unit, 0.0, 1.0, 0.0), Potential::free(d), quantum(1e-4, 1, 1)),
                  std::invalid_argument);
  CHECK(quantum_dt_bound(g, unit) == doctest::Approx(0.1 * g.dx() * g.dx()));
}

TEST_CASE("norm conservation and time reversal, quantum and deformed") {
  const Grid g(-8.0, 8.0, 256, Boundary::periodic);
  std::mt19937_64 rng(31);
  const auto wf = testing::random_mixture(rng, g);
  const auto V = Potential::harmonic(g, unit, 1.0);
  const DeformationField u(testing::smooth_field(rng, g, 0.5), unit);
  for (bool deformed : {false, true}) {
    auto run = [&](const WaveFunction& start, double dt) {
      return deformed ? evolve_deformed_fixed_u(start, V, u, quantum(dt, 1000, 1000))
                      : evolve_schrodinger(start, V, quantum(dt, 1000, 1000));
    };
    const auto fwd = run(wf, 2e-4);
    CHECK(std::abs(fwd.norms.back() - 1.0) <= 1e-9);
    const auto back = run(last_wave(fwd), -2e-4);
    CHECK(back.times.back() == doctest::Approx(-0.2));
    CHECK(back.times.front() > back.times.back());
    CHECK(l2_norm(last_wave(back).psi() - wf.psi()) <= 1e-7);
  }
}

TEST_CASE("deformed evolution") {
  const Grid g(-8.0, 8.0, 256, Boundary::periodic);
  std::mt19937_64 rng(37);
  const auto wf = testing::random_mixture(rng, g);
  const auto V = Potential::harmonic(g, unit, 1.0);

  SUBCASE("u = 0 reproduces the quantum run bit for bit") {
    const auto q = evolve_schrodinger(wf, V, quantum(2e-4, 500, 100));
    const auto d = evolve_deformed_fixed_u(wf, V, DeformationField::zero(g, unit), quantum(2e-4, 500, 100));
    REQUIRE(q.snapshots.size() == d.snapshots.size());
    for (std::size_t i = 0; i < q.snapshots.size(); ++i) {
      const auto a = std::get<WaveFunction>(q.snapshots[i]).psi().values();
      const auto b = std::get<WaveFunction>(d.snapshots[i]).psi().values();
      CHECK(std::equal(a.begin(), a.end(), b.begin()));
    }
  }

  SUBCASE("constant u shifts the phase by c^2 t / 2m") {
    const Grid ring(0.0, 2.0 * pi, 64, Boundary::periodic);
    const auto pw = plane_wave(ring, unit, 2.0);
    const double c = 0.8;
    const auto u = DeformationField::constant(ring, unit, c);
    const auto q = evolve_schrodinger(pw, Potential::free(ring), quantum(1e-3, 1000, 1000));
    const auto d = evolve_deformed_fixed_u(pw, Potential::free(ring), u, quantum(1e-3, 1000, 1000));
    const auto expected = std::polar(1.0, -c * c / 2.0 * d.times.back()) * last_wave(q).psi();
    CHECK(max_diff(last_wave(d).psi().values(), expected.values()) <= 1e-12);
    CHECK(max_diff(d.density_at(1).values(), density(pw).values()) <= 1e-12);
    const auto e = energy_audit(d);
    for (const auto& s : e) CHECK(std::abs(s.total - (2.0 + c * c / 2)) <= 1e-12);
  }

  SUBCASE("frozen u_c of the ground state gives V_eff = 2V - hbar omega / 2") {
    const auto ground = gaussian_packet(g, unit, 0.0, std::sqrt(0.5), 0.0);
    const auto rho = density(ground);
    const auto v_eff = effective_potential(V, critical_deformation(rho, unit));
    // u_c = x holds to ~1e-12 only where rho is well above the floor.
    double worst = 0.0;
    for (std::size_t i = 0; i < g.n(); ++i) {
      if (rho[i] >= 1e-4 * max_abs(rho)) worst = std::max(worst, std::abs(v_eff[i] - (2.0 * V.values()[i] - 0.5)));
    }
    CHECK(worst <= 1e-10);
  }
}

TEST_CASE("classical ensemble at rest is a fixed point") {
  const Grid g(-8.0, 8.0, 256, Boundary::periodic);
  const auto rho = density(gaussian_packet(g, unit, 0.0, 1.0, 0.0));
  const ClassicalEnsemble ens(rho, RealField::constant(g, 0.0), unit);
  const auto r = evolve_classical(ens, Potential::free(g), classical(1e-2, 200, 50));
  CHECK_FALSE(r.halted);
  CHECK(max_diff(last_ensemble(r).rho().values(), rho.values()) == 0.0);
  CHECK(max_abs(last_ensemble(r).action()) == 0.0);
  CHECK(std::isinf(classical_dt_bound(ens)));
}

TEST_CASE("classical uniform drift translates the density") {
  const Grid g(-8.0, 8.0, 512, Boundary::periodic);
  const double v = 1.0;
  const auto rho0 = density(gaussian_packet(g, unit, -1.0, 1.0, 0.0));
  const ClassicalEnsemble ens(rho0, RealField::sample(g, [v](double x) { return v * x; }), unit, v * g.length());
  CHECK(classical_dt_bound(ens) == doctest::Approx(0.2 * g.dx()));
  const auto r = evolve_classical(ens, Potential::free(g), classical(1e-3, 2000, 1000));
  CHECK_FALSE(r.halted);
  const auto expected = density(gaussian_packet(g, unit, 1.0, 1.0, 0.0));
  CHECK(testing::l2_distance(last_ensemble(r).rho(), expected) <= 1e-6);
  const auto e = energy_audit(r);
  for (const auto& s : e) CHECK(std::abs(s.total - 0.5) <= 1e-8);
  CHECK(std::abs(r.norms.back() - 1.0) <= 1e-8);

  const auto back = evolve_classical(last_ensemble(r), Potential::free(g), classical(-1e-3, 2000, 2000));
  CHECK(testing::l2_distance(last_ensemble(back).rho(), rho0) <= 1e-7);
}

TEST_CASE("classical harmonic flow follows x0 cos t until it focuses") {
  const Grid g(-12.0, 12.0, 768, Boundary::periodic);
  const auto V = Potential::harmonic(g, unit, 1.0);
  const auto rho0 = density(gaussian_packet(g, unit, 2.0, 1.0, 0.0));
  const ClassicalEnsemble ens(rho0, RealField::constant(g, 0.0), unit);

  const double t = pi / 4;
  const auto r = evolve_classical(ens, V, classical(t / 800, 800, 800));
  CHECK_FALSE(r.halted);
  // Every trajectory is x0 cos t, so rho(x, t) = rho0(x / cos t) / cos t.
  const double c = std::cos(t);
  const auto expected = RealField::sample(g, [c](double x) {
    const double z = x / c - 2.0;
    return std::exp(-z * z / 2) / std::sqrt(2 * pi) / c;
  });
  CHECK(testing::l2_distance(last_ensemble(r).rho(), expected) <= 1e-6);

  // All trajectories meet at x = 0 when t = pi/2.
  const auto full = evolve_classical(ens, V, classical(pi / 4000, 4000, 100));
  CHECK(full.halted);
  CHECK(full.halt_time < pi / 2 + 0.05);
  CHECK(full.halt_time > pi / 2 - 0.25);
}

TEST_CASE("converging flow halts with a caustic near t = m / rate") {
  const Grid g(-8.0, 8.0, 512, Boundary::periodic);
  const auto ens = converging_flow(g, unit, 1.0, 1.0, 5.0);
  const auto r = evolve_classical(ens, Potential::free(g), classical(1e-3, 2000, 100));
  CHECK(r.halted);
  CHECK(std::abs(r.halt_time - 1.0) <= 0.1);
  CHECK(r.diagnostics.back().caustic);
  CHECK(r.times.back() == r.halt_time);
  CHECK_FALSE(r.halt_reason.empty());
}

TEST_CASE("classical blow-up without caustic checks raises NumericalError") {
  const Grid g(-8.0, 8.0, 256, Boundary::periodic);
  const auto ens = converging_flow(g, unit, 1.0, 1.0, 5.0);
  auto o = classical(5e-3, 4000, 4000);
  o.caustic_threshold = 1e300;
  o.negative_density = -1e300;
  CHECK_THROWS_AS(evolve_classical(ens, Potential::free(g), o), NumericalError);
}

TEST_CASE("dequantization gap") {
  SUBCASE("plane wave") {
    const Grid ring(0.0, 2.0 * pi, 64, Boundary::periodic);
    const auto gap = dequantization_gap(plane_wave(ring, unit, 1.0), Potential::free(ring), classical(1e-3, 500, 100));
    CHECK_FALSE(gap.truncated);
    for (const auto& s : gap.samples) {
      CHECK(s.density_distance <= 1e-13);
      CHECK(std::abs(s.kinetic_gap) <= 1e-12);
    }
  }
  SUBCASE("free gaussian at rest") {
    const Grid g(-16.0, 16.0, 512, Boundary::periodic);
    const auto wf = gaussian_packet(g, unit, 0.0, 1.0, 0.0);
    const auto gap = dequantization_gap(wf, Potential::free(g), classical(2.5e-4, 8000, 2000));
    CHECK(std::abs(gap.samples.front().kinetic_gap - 0.125) <= 1e-8);
    CHECK(gap.samples.front().density_distance == 0.0);
    CHECK(gap.samples.back().t == doctest::Approx(2.0));
    CHECK(gap.samples.back().density_distance > 1e-2);
    CHECK(testing::l2_distance(last_ensemble(gap.classical).rho(), density(wf)) <= 1e-7);
  }
}
