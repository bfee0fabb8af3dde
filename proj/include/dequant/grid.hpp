#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dequant {

enum class Boundary { periodic, dirichlet };

/// Quadrature rule backing Grid::weights().
enum class QuadratureRule { riemann, simpson, trapezoid };

std::string to_string(Boundary boundary);
std::string to_string(QuadratureRule rule);

/// Thrown when two fields (or a field and an operator) live on different grids.
class GridMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Uniform 1D mesh.
///
/// Periodic grids hold n points on [x_min, x_max) with x_max identified with
/// x_min; dirichlet grids hold n points on [x_min, x_max] including both
/// endpoints. The grid owns the quadrature weights and, for periodic grids,
/// the FFT wavenumbers, so every module integrates and differentiates the
/// same way. Copies share the immutable internals.
class Grid {
 public:
  static constexpr std::size_t min_points = 8;

  Grid(double x_min, double x_max, std::size_t n, Boundary boundary);

  double x_min() const noexcept;
  double x_max() const noexcept;
  std::size_t n() const noexcept;
  Boundary boundary() const noexcept;
  bool periodic() const noexcept { return boundary() == Boundary::periodic; }
  double dx() const noexcept;
  double length() const noexcept { return x_max() - x_min(); }

  double x(std::size_t i) const noexcept { return x_min() + static_cast<double>(i) * dx(); }
  std::span<const double> coordinates() const noexcept;

  std::span<const double> weights() const noexcept;
  QuadratureRule quadrature() const noexcept;

  /// Angular wavenumbers in FFT order (periodic grids only; empty otherwise).
  std::span<const double> wavenumbers() const noexcept;

  /// Grids compare equal when they describe the same mesh.
  friend bool operator==(const Grid& a, const Grid& b) noexcept;

  struct Data;

 private:
  std::shared_ptr<const Data> data_;

  friend const Data& grid_data(const Grid& grid) noexcept;
};

void require_same_grid(const Grid& a, const Grid& b, const char* context);

/// Samples of a real or complex quantity on a Grid. Values are finite by
/// construction.
template <typename T>
class Field {
 public:
  using value_type = T;

  Field(Grid grid, std::vector<T> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.n()) {
      throw std::invalid_argument("field length " + std::to_string(values_.size()) +
                                  " does not match grid size " + std::to_string(grid_.n()));
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!is_finite(values_[i])) {
        throw std::invalid_argument("non-finite field sample at index " + std::to_string(i));
      }
    }
  }

  static Field constant(const Grid& grid, T value) {
    return Field(grid, std::vector<T>(grid.n(), value));
  }

  template <typename F>
  static Field sample(const Grid& grid, F&& f) {
    std::vector<T> values(grid.n());
    for (std::size_t i = 0; i < grid.n(); ++i) values[i] = static_cast<T>(f(grid.x(i)));
    return Field(grid, std::move(values));
  }

  const Grid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const T> values() const noexcept { return values_; }
  const T& operator[](std::size_t i) const noexcept { return values_[i]; }

  std::vector<T> release() && { return std::move(values_); }

 private:
  static bool is_finite(double v) { return std::isfinite(v); }
  static bool is_finite(const std::complex<double>& v) {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
  }

  Grid grid_;
  std::vector<T> values_;
};

using RealField = Field<double>;
using ComplexField = Field<std::complex<double>>;

RealField operator+(const RealField& a, const RealField& b);
RealField operator-(const RealField& a, const RealField& b);
RealField operator*(const RealField& a, const RealField& b);
RealField operator*(double s, const RealField& a);
RealField operator-(const RealField& a);

ComplexField operator+(const ComplexField& a, const ComplexField& b);
ComplexField operator-(const ComplexField& a, const ComplexField& b);
ComplexField operator*(std::complex<double> s, const ComplexField& a);
ComplexField operator*(const RealField& a, const ComplexField& b);

/// First derivative. Fourier collocation on periodic grids (Nyquist mode
/// dropped), 4th-order finite differences with one-sided 5-point stencils at
/// the edges on dirichlet grids.
RealField derivative(const RealField& f);
ComplexField derivative(const ComplexField& f);

/// Quadrature with the grid's weights, compensated summation.
double integrate(const RealField& f);
double integrate(const Grid& grid, std::span<const double> samples);

/// Discrete L2 norm sqrt(integrate(|f|^2)).
double l2_norm(const RealField& f);
double l2_norm(const ComplexField& f);

/// Spectral antiderivative on a periodic grid, zero at x_min. A nonzero mean
/// of f contributes the linear ramp mean * (x - x_min), so the result winds by
/// mean * L across the seam. Periodic grids only.
RealField antiderivative(const RealField& f);

/// Exponential spectral filter exp(-36 (|k|/k_nyquist)^36). Leaves the lower
/// ~60% of modes untouched to round-off and damps the aliased top band
/// without the ringing of a sharp cutoff. Periodic grids only.
RealField spectral_filter(const RealField& f);

double max_abs(const RealField& f);
double max_abs(const ComplexField& f);

}  // namespace dequant
