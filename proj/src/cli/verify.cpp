#include "dequant/cli/verify.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "dequant/cli/config.hpp"
#include "dequant/deformation.hpp"
#include "dequant/state.hpp"

namespace dequant::cli {

namespace {

enum Family : std::size_t {
  minimum_property,
  fisher_identity,
  form_equivalence,
  gradient_consistency,
  nonnegativity,
  scale_covariance,
  osmotic_identity,
  family_count
};

constexpr const char* family_names[family_count] = {
    "MINIMUM PROPERTY",    "FISHER IDENTITY",  "FORM EQUIVALENCE", "GRADIENT CONSISTENCY",
    "NONNEGATIVITY",       "SCALE COVARIANCE", "OSMOTIC IDENTITY",
};

constexpr double family_tolerances[family_count] = {1e-8, 1e-8, 1e-9, 1e-6, 1e-12, 1e-12, 1e-12};

struct CaseResult {
  double worst[family_count] = {};
  std::size_t checks[family_count] = {};
  void record(Family f, double residual) {
    // NaN must count as a failure, so compare with !(<=).
    if (!(residual <= worst[f])) worst[f] = residual;
    ++checks[f];
  }
};

// Components decay below round-off before the seam of [-8, 8), so the
// mixture is smooth as a periodic function.
WaveFunction random_state(std::mt19937_64& rng, const Grid& grid, const PhysicalConstants& c) {
  std::uniform_int_distribution<int> count(1, 3);
  std::uniform_real_distribution<double> center(-1.5, 1.5), width(0.4, 0.55), wavenumber(-2.0, 2.0),
      magnitude(0.5, 1.5), phase(0.0, 2.0 * std::numbers::pi);
  std::vector<GaussianComponent> components(static_cast<std::size_t>(count(rng)));
  for (auto& g : components) {
    g.x0 = center(rng);
    g.sigma = width(rng);
    g.k0 = wavenumber(rng);
    g.weight = std::polar(magnitude(rng), phase(rng));
  }
  return gaussian_superposition(grid, c, components);
}

// A few low Fourier modes plus a constant: smooth and periodic.
RealField random_field(std::mt19937_64& rng, const Grid& grid, double amplitude) {
  std::uniform_real_distribution<double> coefficient(-amplitude, amplitude);
  const double base = 2.0 * std::numbers::pi / grid.length();
  double a[5], b[5];
  for (int j = 0; j < 5; ++j) {
    a[j] = coefficient(rng);
    b[j] = coefficient(rng);
  }
  return RealField::sample(grid, [&](double x) {
    double v = a[0];
    for (int j = 1; j < 5; ++j) v += a[j] * std::cos(base * j * (x - grid.x_min())) + b[j] * std::sin(base * j * (x - grid.x_min()));
    return v;
  });
}

CaseResult run_case(const VerifyOptions& options, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint64_t>(options.seed), static_cast<std::uint64_t>(index)};
  std::mt19937_64 rng(seq);
  const Grid grid(-8.0, 8.0, 256, Boundary::periodic);
  const PhysicalConstants c{};
  const auto wf = random_state(rng, grid, c);
  const auto rho = density(wf);
  const double floor = default_rho_floor(rho);

  auto suite_uc = [&](const RealField& r, const PhysicalConstants& k) {
    auto u = critical_deformation(r, k, floor);
    if (!options.inject_uc_sign_error) return u;
    return DeformationField(-u.u(), k);
  };

  CaseResult out;
  const auto u_c = suite_uc(rho, c);
  const double T = kinetic_quantum(wf);
  const double T_uc = kinetic_deformed_direct(wf, u_c);
  const double I = fisher_information(rho, floor);

  out.record(fisher_identity, std::abs(T_uc - (T - c.hbar * c.hbar * I / (8.0 * c.mass))) / (1.0 + T));

  const auto du = random_field(rng, grid, 1.0);
  for (double eps : {1e-1, 1e-2, 1e-3}) {
    const DeformationField shifted(u_c.u() + eps * du, c);
    const double quadratic = eps * eps * integrate(rho * du * du) / (2.0 * c.mass);
    const double excess = kinetic_deformed_direct(wf, shifted) - T_uc;
    out.record(minimum_property, std::abs(excess - quadratic) / quadratic);
  }

  const DeformationField u(random_field(rng, grid, 1.0), c);
  const double T_u = kinetic_deformed_direct(wf, u);
  out.record(form_equivalence, std::abs(T_u - kinetic_deformed_expanded(wf, u)) / (1.0 + std::abs(T_u)));
  out.record(nonnegativity, std::max({0.0, T_uc - T_u, -T_uc}) / (1.0 + T));

  const auto g = functional_gradient(wf, u);
  for (int direction = 0; direction < 4; ++direction) {
    const auto v = random_field(rng, grid, 1.0);
    constexpr double eps = 1e-5;
    const double plus = kinetic_deformed_direct(wf, DeformationField(u.u() + eps * v, c));
    const double minus = kinetic_deformed_direct(wf, DeformationField(u.u() - eps * v, c));
    const double fd = (plus - minus) / (2.0 * eps);
    const double analytic = integrate(g * v);
    // Guard against a direction that happens to be orthogonal to g.
    const double scale = std::max(std::abs(analytic), 1e-3 * l2_norm(g) * l2_norm(v));
    out.record(gradient_consistency, std::abs(fd - analytic) / scale);
  }

  std::uniform_real_distribution<double> lambda_dist(0.5, 2.0);
  const double lambda = lambda_dist(rng);
  const PhysicalConstants scaled{lambda * c.hbar, c.mass};
  const auto u_scaled = suite_uc(rho, scaled);
  const double u_scale = std::max(lambda * max_abs(u_c.u()), 1e-300);
  out.record(scale_covariance, max_abs(u_scaled.u() - lambda * u_c.u()) / u_scale);
  out.record(scale_covariance, std::abs(fisher_information(rho, floor) - I) / std::max(I, 1e-300));

  out.record(osmotic_identity, max_abs(osmotic_momentum(rho, c, floor) + u_c.u()));
  return out;
}

}  // namespace

bool VerifyReport::passed() const {
  return std::all_of(families.begin(), families.end(), [](const FamilyResult& f) { return f.passed; });
}

std::string VerifyReport::text() const {
  std::ostringstream o;
  o << "verify seed=" << seed << " cases=" << cases << "\n";
  for (const auto& f : families) {
    o << (f.passed ? "PASS " : "FAIL ") << f.name << ": worst=" << format_double(f.worst)
      << " tol=" << format_double(f.tolerance) << " case=" << f.worst_case << " checks=" << f.checks << "\n";
  }
  o << (passed() ? "ALL PASS" : "FAILURES") << " (" << families.size() << " families)\n";
  return o.str();
}

VerifyReport run_verify(const VerifyOptions& options) {
  std::vector<CaseResult> results(options.cases);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < options.cases; i = next++) results[i] = run_case(options, i);
  };
  const std::size_t n_threads =
      std::max<std::size_t>(1, std::min<std::size_t>(options.cases, std::thread::hardware_concurrency()));
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();

  VerifyReport report;
  report.seed = options.seed;
  report.cases = options.cases;
  for (std::size_t f = 0; f < family_count; ++f) {
    FamilyResult fr;
    fr.name = family_names[f];
    fr.tolerance = family_tolerances[f];
    for (std::size_t i = 0; i < results.size(); ++i) {
      const double w = results[i].worst[f];
      if (!(w <= fr.worst)) {
        fr.worst = w;
        fr.worst_case = i;
      }
      fr.checks += results[i].checks[f];
    }
    fr.passed = fr.worst <= fr.tolerance && options.cases > 0;
    report.families.push_back(fr);
  }
  return report;
}

}  // namespace dequant::cli
