#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "dequant/state.hpp"

namespace testing {

inline constexpr double pi = std::numbers::pi;

inline double max_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_diff(std::span<const std::complex<double>> a, std::span<const std::complex<double>> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Smooth periodic field: a few low Fourier modes.
inline dequant::RealField smooth_field(std::mt19937_64& rng, const dequant::Grid& grid, double amplitude = 1.0) {
  std::uniform_real_distribution<double> coef(-amplitude, amplitude);
  std::vector<double> a(5), b(5);
  for (auto& v : a) v = coef(rng);
  for (auto& v : b) v = coef(rng);
  const double base = 2.0 * pi / grid.length();
  return dequant::RealField::sample(grid, [&](double x) {
    double v = a[0];
    for (int j = 1; j < 5; ++j) v += a[j] * std::cos(base * j * (x - grid.x_min())) + b[j] * std::sin(base * j * (x - grid.x_min()));
    return v;
  });
}

// Random Gaussian mixture with random complex weights. On the reference box
// [-8, 8) every component decays below round-off before the seam, so the
// state is smooth as a periodic function.
inline dequant::WaveFunction random_mixture(std::mt19937_64& rng, const dequant::Grid& grid,
                                            const dequant::PhysicalConstants& c = {}) {
  std::uniform_int_distribution<int> count(1, 3);
  std::uniform_real_distribution<double> x0(-1.5, 1.5), sigma(0.4, 0.55), k0(-2.0, 2.0), mag(0.5, 1.5),
      phase(0.0, 2.0 * pi);
  std::vector<dequant::GaussianComponent> parts(static_cast<std::size_t>(count(rng)));
  for (auto& p : parts) p = {x0(rng), sigma(rng), k0(rng), std::polar(mag(rng), phase(rng))};
  return dequant::gaussian_superposition(grid, c, parts);
}

inline double l2_distance(const dequant::RealField& a, const dequant::RealField& b) { return dequant::l2_norm(a - b); }

}  // namespace testing
