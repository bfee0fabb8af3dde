#include "dequant/state.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace dequant {

void PhysicalConstants::validate() const {
  if (!(hbar > 0.0) || !std::isfinite(hbar)) throw std::invalid_argument("hbar must be positive and finite");
  if (!(mass > 0.0) || !std::isfinite(mass)) throw std::invalid_argument("mass must be positive and finite");
}

WaveFunction::WaveFunction(ComplexField psi, PhysicalConstants constants)
    : psi_(std::move(psi)), constants_(constants) {
  constants_.validate();
}

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

double wrap_phase(double d) {
  d = std::remainder(d, two_pi);
  return d == -std::numbers::pi ? std::numbers::pi : d;
}

RealField winding_gradient(const RealField& action, double seam_jump) {
  const Grid& grid = action.grid();
  if (!grid.periodic()) return derivative(action);
  const std::size_t n = grid.n();
  const auto s = action.values();
  const double slope = seam_jump / grid.length();
  std::vector<double> periodic_part(n);
  for (std::size_t i = 0; i < n; ++i) periodic_part[i] = s[i] - slope * (grid.x(i) - grid.x_min());
  auto d = std::move(derivative(RealField(grid, std::move(periodic_part)))).release();
  for (auto& v : d) v += slope;
  return RealField(grid, std::move(d));
}

}  // namespace

ClassicalEnsemble::ClassicalEnsemble(RealField rho, RealField action, PhysicalConstants constants,
                                     double seam_jump)
    : ClassicalEnsemble(rho, action, winding_gradient(action, seam_jump), std::vector<std::uint8_t>(rho.size(), 0),
                        constants, seam_jump) {}

ClassicalEnsemble::ClassicalEnsemble(RealField rho, RealField action, RealField momentum,
                                     std::vector<std::uint8_t> mask, PhysicalConstants constants, double seam_jump)
    : rho_(std::move(rho)),
      action_(std::move(action)),
      momentum_(std::move(momentum)),
      mask_(std::move(mask)),
      constants_(constants),
      seam_jump_(seam_jump) {
  constants_.validate();
  require_same_grid(rho_.grid(), action_.grid(), "ClassicalEnsemble");
  require_same_grid(rho_.grid(), momentum_.grid(), "ClassicalEnsemble");
  if (mask_.size() != rho_.size()) throw std::invalid_argument("ClassicalEnsemble: mask length mismatch");
}

std::size_t ClassicalEnsemble::masked_count() const noexcept {
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
}

void ClassicalEnsemble::validate(double mass_tolerance) const {
  for (std::size_t i = 0; i < rho_.size(); ++i) {
    if (rho_[i] < 0.0) throw std::invalid_argument("density is negative at index " + std::to_string(i));
  }
  const double mass = integrate(rho_);
  if (std::abs(mass - 1.0) > mass_tolerance) {
    throw std::invalid_argument("density integrates to " + std::to_string(mass) + ", expected 1");
  }
}

WaveFunction gaussian_superposition(const Grid& grid, const PhysicalConstants& constants,
                                    std::span<const GaussianComponent> components) {
  if (components.empty()) throw std::invalid_argument("superposition needs at least one component");
  std::vector<std::complex<double>> psi(grid.n());
  for (const auto& c : components) {
    if (!(c.sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    if (c.sigma < 3.0 * grid.dx()) {
      throw std::invalid_argument("sigma " + std::to_string(c.sigma) + " is under-resolved (needs >= 3 dx = " +
                                  std::to_string(3.0 * grid.dx()) + ")");
    }
    if (!grid.periodic() && (c.x0 - 5.0 * c.sigma < grid.x_min() || c.x0 + 5.0 * c.sigma > grid.x_max())) {
      throw std::invalid_argument("packet support x0 +/- 5 sigma leaves the dirichlet domain");
    }
    for (std::size_t i = 0; i < grid.n(); ++i) {
      const double d = grid.x(i) - c.x0;
      psi[i] += c.weight * std::exp(std::complex<double>(-d * d / (4.0 * c.sigma * c.sigma), c.k0 * grid.x(i)));
    }
  }
  return normalize(WaveFunction(ComplexField(grid, std::move(psi)), constants));
}

WaveFunction gaussian_packet(const Grid& grid, const PhysicalConstants& constants, double x0, double sigma,
                             double k0) {
  const GaussianComponent c{x0, sigma, k0, 1.0};
  return gaussian_superposition(grid, constants, std::span(&c, 1));
}

WaveFunction plane_wave(const Grid& grid, const PhysicalConstants& constants, double k) {
  if (!grid.periodic()) throw std::invalid_argument("plane_wave requires a periodic grid");
  const double mode = k * grid.length() / two_pi;
  if (std::abs(mode - std::round(mode)) > 1e-9 * std::max(1.0, std::abs(mode))) {
    throw std::invalid_argument("wavenumber " + std::to_string(k) +
                                " is not a multiple of 2 pi / L on this grid");
  }
  const double amplitude = 1.0 / std::sqrt(grid.length());
  auto psi = ComplexField::sample(grid, [&](double x) { return std::polar(amplitude, k * x); });
  return WaveFunction(std::move(psi), constants);
}

ClassicalEnsemble converging_flow(const Grid& grid, const PhysicalConstants& constants, double sigma, double rate,
                                  double width) {
  constants.validate();
  if (!grid.periodic()) throw std::invalid_argument("converging_flow requires a periodic grid");
  if (!(sigma >= 3.0 * grid.dx())) throw std::invalid_argument("converging_flow: sigma is under-resolved");
  if (!(rate > 0.0)) throw std::invalid_argument("converging_flow: rate must be positive");
  if (!(width > 0.0)) throw std::invalid_argument("converging_flow: width must be positive");
  const double center = 0.5 * (grid.x_min() + grid.x_max());
  auto rho = RealField::sample(grid, [&](double x) {
    const double z = (x - center) / sigma;
    return std::exp(-0.5 * z * z);
  });
  rho = (1.0 / integrate(rho)) * rho;
  auto momentum = RealField::sample(grid, [&](double x) {
    const double r = x - center;
    return -rate * r * std::exp(-std::pow(r / width, 8));
  });
  auto action = antiderivative(momentum);
  return ClassicalEnsemble(std::move(rho), std::move(action), std::move(momentum),
                           std::vector<std::uint8_t>(grid.n(), 0), constants);
}

double norm_squared(const WaveFunction& wf) { return integrate(density(wf)); }

WaveFunction normalize(const WaveFunction& wf) {
  const double norm2 = norm_squared(wf);
  if (!(norm2 > 0.0)) throw std::invalid_argument("cannot normalize a zero-norm wavefunction");
  return WaveFunction(std::complex<double>(1.0 / std::sqrt(norm2)) * wf.psi(), wf.constants());
}

RealField density(const WaveFunction& wf) {
  std::vector<double> rho(wf.psi().size());
  for (std::size_t i = 0; i < rho.size(); ++i) rho[i] = std::norm(wf.psi()[i]);
  return RealField(wf.grid(), std::move(rho));
}

double default_rho_floor(const RealField& rho) {
  double m = 0.0;
  for (double v : rho.values()) m = std::max(m, v);
  return 1e-12 * m;
}

std::vector<std::uint8_t> floor_mask(const RealField& rho, double rho_floor) {
  std::vector<std::uint8_t> mask(rho.size());
  std::size_t valid = 0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    mask[i] = rho[i] < rho_floor ? 1 : 0;
    valid += mask[i] == 0 ? 1 : 0;
  }
  if (valid < 2) throw ResolutionError("state below resolution floor");
  return mask;
}

std::vector<double> fill_masked(const Grid& grid, std::vector<double> values, std::span<const std::uint8_t> mask,
                                double seam_jump) {
  const std::size_t n = values.size();
  std::vector<std::size_t> valid;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) valid.push_back(i);
  }
  if (valid.size() == n) return values;
  if (valid.size() < 2) throw ResolutionError("state below resolution floor");

  auto interpolate = [](double x_left, double x_right, double v_left, double v_right, double x) {
    const double t = (x - x_left) / (x_right - x_left);
    return v_left + t * (v_right - v_left);
  };

  for (std::size_t j = 0; j + 1 < valid.size(); ++j) {
    const std::size_t a = valid[j];
    const std::size_t b = valid[j + 1];
    for (std::size_t i = a + 1; i < b; ++i) {
      values[i] = interpolate(grid.x(a), grid.x(b), values[a], values[b], grid.x(i));
    }
  }

  const std::size_t first = valid.front();
  const std::size_t last = valid.back();
  if (grid.periodic()) {
    const double x_left = grid.x(last);
    const double x_right = grid.x(first) + grid.length();
    const double v_left = values[last];
    const double v_right = values[first] + seam_jump;
    for (std::size_t i = last + 1; i < n; ++i) {
      values[i] = interpolate(x_left, x_right, v_left, v_right, grid.x(i));
    }
    for (std::size_t i = 0; i < first; ++i) {
      values[i] = interpolate(x_left, x_right, v_left, v_right, grid.x(i) + grid.length()) -
                  seam_jump;
    }
  } else {
    for (std::size_t i = 0; i < first; ++i) values[i] = values[first];
    for (std::size_t i = last + 1; i < n; ++i) values[i] = values[last];
  }
  return values;
}

ClassicalEnsemble polar_decompose(const WaveFunction& wf, double rho_floor) {
  const Grid& grid = wf.grid();
  const double hbar = wf.constants().hbar;
  auto rho = density(wf);
  auto mask = floor_mask(rho, rho_floor);
  const auto psi = wf.psi().values();
  const std::size_t n = psi.size();

  std::vector<double> phase(n, 0.0);
  bool started = false;
  std::size_t previous = 0;
  double unwrapped = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i]) continue;
    if (started) unwrapped += wrap_phase(std::arg(psi[i]) - std::arg(psi[previous]));
    phase[i] = unwrapped;
    previous = i;
    started = true;
  }

  double seam_jump = 0.0;
  if (grid.periodic()) {
    const auto first = static_cast<std::size_t>(std::find(mask.begin(), mask.end(), 0) - mask.begin());
    // Total winding: last unwrapped value plus the step back across the seam.
    seam_jump = hbar * (unwrapped + wrap_phase(std::arg(psi[first]) - std::arg(psi[previous])));
  }
  for (auto& p : phase) p *= hbar;
  auto action = fill_masked(grid, std::move(phase), mask, seam_jump);

  // grad S = hbar Im(conj(psi) psi') / rho on the supported region.
  const auto dpsi = derivative(wf.psi());
  std::vector<double> momentum(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!mask[i]) momentum[i] = hbar * std::imag(std::conj(psi[i]) * dpsi[i]) / rho[i];
  }
  momentum = fill_masked(grid, std::move(momentum), mask);

  return ClassicalEnsemble(std::move(rho), RealField(grid, std::move(action)), RealField(grid, std::move(momentum)),
                           std::move(mask), wf.constants(), seam_jump);
}

ClassicalEnsemble polar_decompose(const WaveFunction& wf) {
  return polar_decompose(wf, default_rho_floor(density(wf)));
}

WaveFunction from_polar(const ClassicalEnsemble& ens) {
  const double hbar = ens.constants().hbar;
  std::vector<std::complex<double>> psi(ens.rho().size());
  for (std::size_t i = 0; i < psi.size(); ++i) {
    psi[i] = std::polar(std::sqrt(std::max(ens.rho()[i], 0.0)), ens.action()[i] / hbar);
  }
  return normalize(WaveFunction(ComplexField(ens.grid(), std::move(psi)), ens.constants()));
}

}  // namespace dequant
