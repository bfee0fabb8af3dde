#include <doctest.h>

#include <cmath>
#include <random>

#include "dequant/deformation.hpp"
#include "support.hpp"

using namespace dequant;
using testing::max_diff;
using testing::pi;
using cplx = std::complex<double>;

namespace {

const PhysicalConstants unit{};
const Grid ring(0.0, 2.0 * pi, 64, Boundary::periodic);
const Grid box(-8.0, 8.0, 512, Boundary::periodic);

RealField x_times(const Grid& g, double a) {
  return RealField::sample(g, [a](double x) { return a * x; });
}

// max |f - g| over points where rho >= threshold * max(rho).
double max_diff_where(const RealField& f, const RealField& g, const RealField& rho, double threshold) {
  const double cut = threshold * max_abs(rho);
  double m = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (rho[i] >= cut) m = std::max(m, std::abs(f[i] - g[i]));
  }
  return m;
}

cplx inner(const ComplexField& a, const ComplexField& b) {
  std::vector<double> re(a.size()), im(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto z = std::conj(a[i]) * b[i];
    re[i] = z.real();
    im[i] = z.imag();
  }
  return {integrate(a.grid(), re), integrate(a.grid(), im)};
}

}  // namespace

TEST_CASE("deformation fields are real and share constants") {
  const auto u = DeformationField::constant(box, unit, 0.3);
  CHECK(u.u()[17] == 0.3);
  CHECK(max_abs(DeformationField::zero(box, unit).u()) == 0.0);
  const auto wf = gaussian_packet(box, PhysicalConstants{2.0, 1.0}, 0.0, 1.0, 0.0);
  CHECK_THROWS_AS(apply_deformed_momentum(wf, u), std::invalid_argument);
  const auto other = DeformationField::zero(Grid(-8.0, 8.0, 256, Boundary::periodic), unit);
  CHECK_THROWS_AS(apply_deformed_momentum(gaussian_packet(box, unit, 0.0, 1.0, 0.0), other), GridMismatch);
}

TEST_CASE("apply_deformed_momentum") {
  const auto pw = plane_wave(ring, unit, 1.0);
  CHECK(max_diff(apply_deformed_momentum(pw, DeformationField::zero(ring, unit)).values(), pw.psi().values()) <= 1e-13);

  const auto g = gaussian_packet(box, unit, 0.0, 1.0, 0.0);
  const auto p = apply_deformed_momentum(g, DeformationField::zero(box, unit));
  double real_part = 0.0;
  for (auto z : p.values()) real_part = std::max(real_part, std::abs(z.real()));
  CHECK(real_part <= 1e-14);

  // P_c psi = grad S psi = 0 for a real positive state, where u_c is not
  // interpolated. On [-8, 8) a sigma = 1 packet has |psi'| ~ 3e-7 at the seam;
  // the wider box keeps the periodic extension smooth to round-off.
  const Grid wide(-12.0, 12.0, 768, Boundary::periodic);
  const auto gw = gaussian_packet(wide, unit, 0.0, 1.0, 0.0);
  const auto ens = polar_decompose(gw);
  const auto pc = apply_deformed_momentum(gw, critical_deformation(ens.rho(), unit));
  double worst = 0.0;
  for (std::size_t i = 0; i < wide.n(); ++i) {
    if (!ens.mask()[i]) worst = std::max(worst, std::abs(pc[i]));
  }
  // The two cancelling terms are each of size hbar |psi'|; rho'/rho near the
  // floor carries ~1e-15 / 1e-6 of round-off.
  CHECK(worst <= 1e-8 * max_abs(derivative(gw.psi())));
}

TEST_CASE("adjoint_deformed_momentum") {
  const auto g = gaussian_packet(box, unit, 0.5, 0.8, 1.0);
  const auto zero = DeformationField::zero(box, unit);
  CHECK(max_diff(adjoint_deformed_momentum(g, zero).values(), apply_deformed_momentum(g, zero).values()) == 0.0);

  const auto pw = plane_wave(ring, unit, 1.0);
  const double c = 0.7;
  const auto shifted = adjoint_deformed_momentum(pw, DeformationField::constant(ring, unit, c));
  CHECK(max_diff(shifted.values(), (cplx(1.0, c) * pw.psi()).values()) <= 1e-13);

  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const auto psi = testing::random_mixture(rng, box);
    const auto phi = testing::random_mixture(rng, box);
    const DeformationField u(testing::smooth_field(rng, box), unit);
    const auto lhs = inner(phi.psi(), apply_deformed_momentum(psi, u));
    const auto rhs = inner(adjoint_deformed_momentum(phi, u), psi.psi());
    CHECK(std::abs(lhs - rhs) <= 1e-10);
  }
}

TEST_CASE("kinetic_quantum") {
  CHECK(kinetic_quantum(plane_wave(ring, unit, 0.0)) <= 1e-28);
  CHECK(kinetic_quantum(plane_wave(ring, unit, 1.0)) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(std::abs(kinetic_quantum(gaussian_packet(box, unit, 0.0, 1.0, 0.0)) - 0.125) <= 1e-10);
  CHECK(std::abs(kinetic_quantum(gaussian_packet(box, unit, 0.0, 1.0, 2.0)) - 2.125) <= 1e-9);

  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const auto wf = testing::random_mixture(rng, box);
    CHECK(std::abs(kinetic_quantum(wf) - kinetic_quantum_operator_form(wf)) <= 1e-10);
  }
}

TEST_CASE("superposition kinetic terms against quadrature oracles") {
  // Values from tests/oracles/kinetic_oracles.py (40-digit quadrature).
  const std::vector<GaussianComponent> two{{-2.0, 0.7, 0.0, 1.0}, {2.0, 0.7, 0.0, 1.0}};
  const auto a = gaussian_superposition(box, unit, two);
  const auto ra = kinetic_report(a, std::nullopt);
  CHECK(std::abs(ra.T - 0.22053377047933322) <= 1e-10);
  CHECK(std::abs(ra.fisher_I - 1.7642701638346657) <= 1e-9);
  CHECK(std::abs(ra.T_uc) <= 1e-10);

  const std::vector<GaussianComponent> phased{{-1.5, 0.8, 1.0, 1.0}, {1.0, 1.1, -0.5, {0.5, 0.5}}};
  const Grid wide(-16.0, 16.0, 1024, Boundary::periodic);
  const auto b = gaussian_superposition(wide, unit, phased);
  const auto rb = kinetic_report(b, std::nullopt);
  CHECK(std::abs(rb.T - 0.52356333316975616) <= 1e-10);
  CHECK(std::abs(rb.fisher_I - 0.64958272414069285) <= 1e-9);
  CHECK(std::abs(rb.T_uc - 0.44236549265216955) <= 1e-10);
  CHECK(std::abs(kinetic_classical(polar_decompose(b)) - 0.44236549265216955) <= 1e-8);
}

TEST_CASE("kinetic_deformed_direct and expanded") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const auto wf = testing::random_mixture(rng, box);
    const double T = kinetic_quantum(wf);
    const auto zero = DeformationField::zero(box, unit);
    CHECK(kinetic_deformed_direct(wf, zero) == doctest::Approx(T).epsilon(1e-14));
    CHECK(kinetic_deformed_expanded(wf, zero) == T);

    const double c = 0.9;
    const auto cu = DeformationField::constant(box, unit, c);
    CHECK(std::abs(kinetic_deformed_direct(wf, cu) - (T + c * c / 2)) <= 1e-10);
    CHECK(std::abs(kinetic_deformed_expanded(wf, cu) - (T + c * c / 2)) <= 1e-10);

    const DeformationField u(testing::smooth_field(rng, box), unit);
    const double direct = kinetic_deformed_direct(wf, u);
    CHECK(direct >= 0.0);
    CHECK(std::abs(direct - kinetic_deformed_expanded(wf, u)) <= 1e-9 * (1.0 + direct));
    CHECK(std::abs(direct - kinetic_deformed_operator_form(wf, u)) <= 1e-9 * (1.0 + direct));
  }
  const auto g = gaussian_packet(box, unit, 0.0, 1.0, 0.0);
  const auto u_c = critical_deformation(density(g), unit);
  CHECK(kinetic_deformed_direct(g, u_c) <= 1e-10);
  CHECK(std::abs(kinetic_deformed_expanded(g, u_c)) <= 1e-10);
}

TEST_CASE("first-order variation of T_u") {
  std::mt19937_64 rng(12);
  const auto wf = testing::random_mixture(rng, box);
  const auto rho = density(wf);
  const auto du = testing::smooth_field(rng, box);
  const double T = kinetic_quantum(wf);
  const double linear = -0.5 * integrate(rho * derivative(du));
  const double curvature = 0.5 * integrate(rho * du * du);
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    const double change = kinetic_deformed_direct(wf, DeformationField(eps * du, unit)) - T;
    const double remainder = change - eps * linear;
    CHECK(std::abs(remainder / (eps * eps) - curvature) <= 1e-6 * curvature + 1e-12 / (eps * eps));
  }
}

TEST_CASE("dirichlet form equivalence") {
  const Grid d(-10.0, 10.0, 1001, Boundary::dirichlet);
  const auto wf = gaussian_packet(d, unit, 0.3, 0.9, 1.2);
  const DeformationField u(RealField::sample(d, [](double x) { return 0.4 * std::sin(x) + 0.1 * x; }), unit);
  const double direct = kinetic_deformed_direct(wf, u);
  CHECK(std::abs(direct - kinetic_deformed_expanded(wf, u)) <= 1e-6 * (1.0 + direct));
}

TEST_CASE("functional_gradient") {
  const auto g = gaussian_packet(box, unit, 0.0, 1.0, 0.0);
  const auto rho = density(g);
  const auto u_c = critical_deformation(rho, unit);
  CHECK(max_abs(functional_gradient(g, u_c)) <= 1e-10 * max_abs(rho * u_c.u()));
  CHECK(max_diff(functional_gradient(g, DeformationField::zero(box, unit)).values(),
                 (0.5 * derivative(rho)).values()) <= 1e-15);

  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 5; ++trial) {
    const auto wf = testing::random_mixture(rng, box);
    const DeformationField u(testing::smooth_field(rng, box), unit);
    const auto grad = functional_gradient(wf, u);
    for (int d = 0; d < 4; ++d) {
      const auto v = testing::smooth_field(rng, box);
      const double eps = 1e-5;
      const double fd = (kinetic_deformed_direct(wf, DeformationField(u.u() + eps * v, unit)) -
                         kinetic_deformed_direct(wf, DeformationField(u.u() - eps * v, unit))) /
                        (2 * eps);
      const double analytic = integrate(grad * v);
      CHECK(std::abs(fd - analytic) <= 1e-6 * std::abs(analytic));
    }
  }
}

TEST_CASE("critical_deformation") {
  const auto uniform = density(plane_wave(ring, unit, 2.0));
  CHECK(max_abs(critical_deformation(uniform, unit).u()) <= 1e-13);

  const auto rho1 = density(gaussian_packet(box, unit, 0.0, 1.0, 0.0));
  CHECK(max_diff_where(critical_deformation(rho1, unit).u(), x_times(box, 0.5), rho1, 1e-6) <= 1e-8);

  const auto ground = density(gaussian_packet(box, unit, 0.0, std::sqrt(0.5), 0.0));
  CHECK(max_diff_where(critical_deformation(ground, unit).u(), x_times(box, 1.0), ground, 1e-6) <= 1e-8);

  CHECK_THROWS_AS(critical_deformation(RealField::constant(box, 0.0), unit, 1e-12), ResolutionError);
}

TEST_CASE("fisher_information") {
  CHECK(fisher_information(density(plane_wave(ring, unit, 1.0))) <= 1e-26);
  CHECK(std::abs(fisher_information(density(gaussian_packet(box, unit, 0.0, 1.0, 0.0))) - 1.0) <= 1e-9);
  CHECK(std::abs(fisher_information(density(gaussian_packet(box, unit, 0.0, 1.0 / std::sqrt(2.0), 0.0))) - 2.0) <= 1e-9);
}

TEST_CASE("minimize_deformation") {
  SUBCASE("plane wave from sin") {
    const auto pw = plane_wave(ring, unit, 1.0);
    const DeformationField u0(RealField::sample(ring, [](double x) { return std::sin(x); }), unit);
    const auto r = minimize_deformation(pw, u0, {});
    CHECK(rho_weighted_norm(density(pw), r.u.u()) <= 1e-7);
    CHECK(std::abs(r.report.T_uc - kinetic_quantum(pw)) <= 1e-12);
  }
  SUBCASE("gaussian from zero") {
    const auto g = gaussian_packet(box, unit, 0.0, 1.0, 0.0);
    const auto rho = density(g);
    MinimizerOptions options;
    const auto r = minimize_deformation(g, DeformationField::zero(box, unit), options);
    CHECK(rho_weighted_norm(rho, r.u.u() - critical_deformation(rho, unit).u()) <= 10 * options.tol);
    CHECK(r.report.T_uc <= 1e-10);
    CHECK(r.iterations > 0);
    CHECK(r.trace.size() == static_cast<std::size_t>(r.iterations) + 1);
    for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i].T_u <= r.trace[i - 1].T_u + 1e-15);
  }
  SUBCASE("two gaussians reach T - I/8") {
    const std::vector<GaussianComponent> two{{-2.0, 0.7, 0.0, 1.0}, {2.0, 0.7, 0.0, 1.0}};
    const auto wf = gaussian_superposition(box, unit, two);
    const auto r = minimize_deformation(wf, DeformationField::zero(box, unit), {});
    const double target = kinetic_quantum(wf) - fisher_information(density(wf)) / 8.0;
    CHECK(std::abs(r.report.T_uc - target) <= 1e-6 * std::max(1.0, std::abs(target)));
  }
  SUBCASE("iteration cap") {
    const auto g = gaussian_packet(box, unit, 0.0, 1.0, 0.0);
    MinimizerOptions options;
    options.max_iter = 2;
    try {
      minimize_deformation(g, DeformationField::zero(box, unit), options);
      FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
      CHECK(e.iterations() == 2);
      CHECK(e.gradient_norm() > 0.0);
    }
  }
}

TEST_CASE("classical momentum") {
  // Im(conj(psi) psi') / rho: at the floor, |psi| ~ 1e-6 max amplifies the
  // derivative's round-off a millionfold.
  CHECK(max_abs(classical_momentum_field(gaussian_packet(box, unit, 0.0, 1.0, 0.0))) <= 1e-8);
  CHECK(max_diff(classical_momentum_field(plane_wave(ring, unit, 1.0)).values(),
                 RealField::constant(ring, 1.0).values()) <= 1e-12);

  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const auto wf = testing::random_mixture(rng, box);
    const auto ens = polar_decompose(wf);
    const auto lhs = apply_deformed_momentum(wf, critical_deformation(ens.rho(), unit));
    const auto rhs = ens.momentum() * wf.psi();
    const double scale = max_abs(rhs);
    double worst = 0.0;
    for (std::size_t i = 0; i < box.n(); ++i) {
      if (!ens.mask()[i]) worst = std::max(worst, std::abs(lhs[i] - rhs[i]));
    }
    CHECK(worst <= 1e-8 * scale);
  }
}

TEST_CASE("kinetic_classical") {
  const auto rho = density(gaussian_packet(box, unit, 0.0, 1.0, 0.0));
  CHECK(kinetic_classical(ClassicalEnsemble(rho, RealField::constant(box, 0.0), unit)) == 0.0);

  const auto uniform = RealField::constant(ring, 1.0 / (2 * pi));
  CHECK(kinetic_classical(ClassicalEnsemble(uniform, x_times(ring, 1.0), unit, 2 * pi)) ==
        doctest::Approx(0.5).epsilon(1e-13));

  const double v = 3.0;
  const ClassicalEnsemble drift(rho, x_times(box, v), unit, v * box.length());
  CHECK(std::abs(kinetic_classical(drift) - 4.5) <= 1e-10);
}

TEST_CASE("osmotic momentum") {
  const auto uniform = density(plane_wave(ring, unit, 1.0));
  CHECK(max_abs(osmotic_momentum(uniform, unit)) <= 1e-13);
  const auto rho = density(gaussian_packet(box, unit, 0.0, 1.0, 0.0));
  CHECK(max_diff_where(osmotic_momentum(rho, unit), x_times(box, -0.5), rho, 1e-6) <= 1e-8);

  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 10; ++trial) {
    const auto r = density(testing::random_mixture(rng, box));
    CHECK(max_abs(osmotic_momentum(r, unit) + critical_deformation(r, unit).u()) <= 1e-12);
  }
}

TEST_CASE("kinetic_report") {
  const auto pw = kinetic_report(plane_wave(ring, unit, 1.0), std::nullopt);
  CHECK(pw.T == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(pw.fisher_I <= 1e-26);
  CHECK(pw.T_uc == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(pw.identity_residual <= 1e-13);
  CHECK(pw.form_residual <= 1e-13);

  const auto g = kinetic_report(gaussian_packet(box, unit, 0.0, 1.0, 0.0), std::nullopt);
  CHECK(std::abs(g.T - 0.125) <= 1e-10);
  CHECK(std::abs(g.fisher_I - 1.0) <= 1e-9);
  CHECK(g.T_uc <= 1e-8);

  const Grid wide(-12.0, 12.0, 768, Boundary::periodic);
  const auto k = kinetic_report(gaussian_packet(wide, unit, 0.0, 1.0, 2.0), std::nullopt);
  CHECK(std::abs(k.T - 2.125) <= 1e-9);
  CHECK(std::abs(k.fisher_I - 1.0) <= 1e-9);
  CHECK(std::abs(k.T_uc - 2.0) <= 1e-9);
  CHECK(k.identity_residual <= 1e-8 * (1 + k.T));
}

TEST_CASE("quadratic expansion, nonnegativity and scale covariance") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const auto wf = testing::random_mixture(rng, box);
    const auto rho = density(wf);
    const auto u_c = critical_deformation(rho, unit);
    const double T_uc = kinetic_deformed_direct(wf, u_c);
    CHECK(T_uc >= 0.0);
    const auto du = testing::smooth_field(rng, box);
    for (double eps : {1e-1, 1e-2, 1e-3}) {
      const double q = eps * eps * integrate(rho * du * du) / 2;
      const double T = kinetic_deformed_direct(wf, DeformationField(u_c.u() + eps * du, unit));
      CHECK(T >= T_uc);
      CHECK(std::abs(T - T_uc - q) <= 1e-8 * q);
    }

    const double lambda = 1.7;
    const PhysicalConstants scaled{lambda, 1.0};
    const auto u_scaled = critical_deformation(rho, scaled);
    CHECK(max_diff(u_scaled.u().values(), (lambda * u_c.u()).values()) <= 1e-12 * lambda * max_abs(u_c.u()));
    CHECK(fisher_information(rho) == fisher_information(density(WaveFunction(wf.psi(), scaled))));
  }
}
