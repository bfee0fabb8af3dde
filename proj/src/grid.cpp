#include "dequant/grid.hpp"

#include <algorithm>
#include <functional>
#include <numbers>

#include "grid_internal.hpp"

namespace dequant {

std::string to_string(Boundary boundary) {
  return boundary == Boundary::periodic ? "periodic" : "dirichlet";
}

std::string to_string(QuadratureRule rule) {
  switch (rule) {
    case QuadratureRule::riemann: return "riemann";
    case QuadratureRule::simpson: return "simpson";
    case QuadratureRule::trapezoid: return "trapezoid";
  }
  return "unknown";
}

Grid::Grid(double x_min, double x_max, std::size_t n, Boundary boundary) {
  if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_max > x_min)) {
    throw std::invalid_argument("grid bounds must be finite with x_max > x_min");
  }
  if (n < min_points) {
    throw std::invalid_argument("grid needs at least " + std::to_string(min_points) + " points, got " +
                                std::to_string(n));
  }
  auto data = std::make_shared<Data>();
  data->x_min = x_min;
  data->x_max = x_max;
  data->n = n;
  data->boundary = boundary;
  const double length = x_max - x_min;
  data->dx = boundary == Boundary::periodic ? length / static_cast<double>(n)
                                            : length / static_cast<double>(n - 1);
  data->coordinates.resize(n);
  for (std::size_t i = 0; i < n; ++i) data->coordinates[i] = x_min + static_cast<double>(i) * data->dx;

  data->weights.assign(n, data->dx);
  if (boundary == Boundary::periodic) {
    data->rule = QuadratureRule::riemann;
    data->wavenumbers.resize(n);
    const double dk = 2.0 * std::numbers::pi / length;
    for (std::size_t j = 0; j < n; ++j) {
      const auto sj = static_cast<double>(j);
      data->wavenumbers[j] = (2 * j < n ? sj : sj - static_cast<double>(n)) * dk;
    }
    data->fft = std::make_unique<detail::FftPlan>(n);
  } else if (n % 2 == 1) {
    data->rule = QuadratureRule::simpson;
    for (std::size_t i = 1; i + 1 < n; ++i) data->weights[i] = (i % 2 == 1 ? 4.0 : 2.0) * data->dx / 3.0;
    data->weights.front() = data->weights.back() = data->dx / 3.0;
  } else {
    data->rule = QuadratureRule::trapezoid;
    data->weights.front() = data->weights.back() = 0.5 * data->dx;
  }
  data_ = std::move(data);
}

double Grid::x_min() const noexcept { return data_->x_min; }
double Grid::x_max() const noexcept { return data_->x_max; }
std::size_t Grid::n() const noexcept { return data_->n; }
Boundary Grid::boundary() const noexcept { return data_->boundary; }
double Grid::dx() const noexcept { return data_->dx; }
std::span<const double> Grid::coordinates() const noexcept { return data_->coordinates; }
std::span<const double> Grid::weights() const noexcept { return data_->weights; }
QuadratureRule Grid::quadrature() const noexcept { return data_->rule; }
std::span<const double> Grid::wavenumbers() const noexcept { return data_->wavenumbers; }

bool operator==(const Grid& a, const Grid& b) noexcept {
  if (a.data_ == b.data_) return true;
  return a.x_min() == b.x_min() && a.x_max() == b.x_max() && a.n() == b.n() &&
         a.boundary() == b.boundary();
}

const Grid::Data& grid_data(const Grid& grid) noexcept { return *grid.data_; }

void require_same_grid(const Grid& a, const Grid& b, const char* context) {
  if (!(a == b)) throw GridMismatch(std::string(context) + ": fields live on different grids");
}

namespace {

template <typename T, typename Op>
Field<T> zip(const Field<T>& a, const Field<T>& b, Op op, const char* context) {
  require_same_grid(a.grid(), b.grid(), context);
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = op(a[i], b[i]);
  return Field<T>(a.grid(), std::move(out));
}

template <typename T>
std::vector<std::complex<double>> to_complex(std::span<const T> v) {
  return {v.begin(), v.end()};
}

// d/dx by Fourier collocation; the Nyquist mode carries no odd derivative.
std::vector<std::complex<double>> spectral_derivative(const Grid& grid,
                                                      std::vector<std::complex<double>> values) {
  const auto& data = grid_data(grid);
  const std::size_t n = data.n;
  std::vector<std::complex<double>> spectrum(n);
  data.fft->forward(values, spectrum);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (n % 2 == 0 && j == n / 2) {
      spectrum[j] = 0.0;
    } else {
      spectrum[j] *= std::complex<double>(0.0, data.wavenumbers[j] * scale);
    }
  }
  data.fft->backward(spectrum, values);
  return values;
}

template <typename T>
std::vector<T> stencil_derivative(const Grid& grid, std::span<const T> f) {
  const std::size_t n = f.size();
  const double h = 12.0 * grid.dx();
  std::vector<T> d(n);
  d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / h;
  d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / h;
  for (std::size_t i = 2; i + 2 < n; ++i) {
    d[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / h;
  }
  d[n - 2] = (3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5]) / h;
  d[n - 1] = (25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4] + 3.0 * f[n - 5]) / h;
  return d;
}

}  // namespace

RealField operator+(const RealField& a, const RealField& b) {
  return zip(a, b, std::plus<>{}, "operator+");
}
RealField operator-(const RealField& a, const RealField& b) {
  return zip(a, b, std::minus<>{}, "operator-");
}
RealField operator*(const RealField& a, const RealField& b) {
  return zip(a, b, std::multiplies<>{}, "operator*");
}
RealField operator*(double s, const RealField& a) {
  std::vector<double> out(a.values().begin(), a.values().end());
  for (auto& v : out) v *= s;
  return RealField(a.grid(), std::move(out));
}
RealField operator-(const RealField& a) { return -1.0 * a; }

ComplexField operator+(const ComplexField& a, const ComplexField& b) {
  return zip(a, b, std::plus<>{}, "operator+");
}
ComplexField operator-(const ComplexField& a, const ComplexField& b) {
  return zip(a, b, std::minus<>{}, "operator-");
}
ComplexField operator*(std::complex<double> s, const ComplexField& a) {
  std::vector<std::complex<double>> out(a.values().begin(), a.values().end());
  for (auto& v : out) v *= s;
  return ComplexField(a.grid(), std::move(out));
}
ComplexField operator*(const RealField& a, const ComplexField& b) {
  require_same_grid(a.grid(), b.grid(), "operator*");
  std::vector<std::complex<double>> out(b.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return ComplexField(b.grid(), std::move(out));
}

RealField derivative(const RealField& f) {
  const Grid& grid = f.grid();
  if (!grid.periodic()) return RealField(grid, stencil_derivative(grid, f.values()));
  auto d = spectral_derivative(grid, to_complex(f.values()));
  std::vector<double> out(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) out[i] = d[i].real();
  return RealField(grid, std::move(out));
}

ComplexField derivative(const ComplexField& f) {
  const Grid& grid = f.grid();
  if (!grid.periodic()) return ComplexField(grid, stencil_derivative(grid, f.values()));
  return ComplexField(grid, spectral_derivative(grid, to_complex(f.values())));
}

double integrate(const Grid& grid, std::span<const double> samples) {
  if (samples.size() != grid.n()) throw GridMismatch("integrate: sample count does not match grid");
  const auto w = grid.weights();
  // Neumaier summation
  double sum = 0.0;
  double carry = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double term = w[i] * samples[i];
    const double t = sum + term;
    carry += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
    sum = t;
  }
  return sum + carry;
}

double integrate(const RealField& f) { return integrate(f.grid(), f.values()); }

double l2_norm(const RealField& f) {
  std::vector<double> sq(f.size());
  for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = f[i] * f[i];
  return std::sqrt(integrate(f.grid(), sq));
}

double l2_norm(const ComplexField& f) {
  std::vector<double> sq(f.size());
  for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = std::norm(f[i]);
  return std::sqrt(integrate(f.grid(), sq));
}

RealField antiderivative(const RealField& f) {
  const Grid& grid = f.grid();
  if (!grid.periodic()) throw std::invalid_argument("antiderivative requires a periodic grid");
  const auto& data = grid_data(grid);
  const std::size_t n = data.n;
  auto values = to_complex(f.values());
  std::vector<std::complex<double>> spectrum(n);
  data.fft->forward(values, spectrum);
  const double mean = spectrum[0].real() / static_cast<double>(n);
  const double scale = 1.0 / static_cast<double>(n);
  spectrum[0] = 0.0;
  if (n % 2 == 0) spectrum[n / 2] = 0.0;
  for (std::size_t j = 1; j < n; ++j) {
    const double k = data.wavenumbers[j];
    if (k != 0.0) spectrum[j] *= scale / std::complex<double>(0.0, k);
  }
  data.fft->backward(spectrum, values);
  std::vector<double> out(n);
  const double offset = values[0].real();
  for (std::size_t i = 0; i < n; ++i) out[i] = values[i].real() - offset + mean * (grid.x(i) - grid.x_min());
  return RealField(grid, std::move(out));
}

RealField spectral_filter(const RealField& f) {
  const Grid& grid = f.grid();
  if (!grid.periodic()) throw std::invalid_argument("spectral_filter requires a periodic grid");
  const auto& data = grid_data(grid);
  const std::size_t n = data.n;
  auto values = to_complex(f.values());
  std::vector<std::complex<double>> spectrum(n);
  data.fft->forward(values, spectrum);
  const double nyquist = static_cast<double>(n) / 2.0;
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double r = static_cast<double>(std::min(j, n - j)) / nyquist;
    spectrum[j] *= scale * std::exp(-36.0 * std::pow(r, 36));
  }
  data.fft->backward(spectrum, values);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = values[i].real();
  return RealField(grid, std::move(out));
}

double max_abs(const RealField& f) {
  double m = 0.0;
  for (double v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

double max_abs(const ComplexField& f) {
  double m = 0.0;
  for (const auto& v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace dequant
