#pragma once

#include <memory>
#include <vector>

#include "dequant/grid.hpp"
#include "fft.hpp"

namespace dequant {

struct Grid::Data {
  double x_min;
  double x_max;
  std::size_t n;
  Boundary boundary;
  double dx;
  QuadratureRule rule;
  std::vector<double> coordinates;
  std::vector<double> weights;
  std::vector<double> wavenumbers;
  std::unique_ptr<detail::FftPlan> fft;  // periodic grids only
};

const Grid::Data& grid_data(const Grid& grid) noexcept;

}  // namespace dequant
