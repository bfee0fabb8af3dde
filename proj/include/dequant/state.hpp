#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "dequant/grid.hpp"

namespace dequant {

/// Reduced Planck constant and particle mass, in whatever unit system the
/// caller chooses.
struct PhysicalConstants {
  double hbar = 1.0;
  double mass = 1.0;

  void validate() const;
  friend bool operator==(const PhysicalConstants&, const PhysicalConstants&) = default;
};

/// Raised when a density has too few points above the floor to define a
/// phase or a deformation.
class ResolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class WaveFunction {
 public:
  WaveFunction(ComplexField psi, PhysicalConstants constants);

  const ComplexField& psi() const noexcept { return psi_; }
  const PhysicalConstants& constants() const noexcept { return constants_; }
  const Grid& grid() const noexcept { return psi_.grid(); }

 private:
  ComplexField psi_;
  PhysicalConstants constants_;
};

/// Polar pair (rho, S) with the momentum field grad S.
///
/// S carries an arbitrary global constant. Points flagged in mask() had rho
/// below the floor when the ensemble was built from a wavefunction; their S
/// and grad S values are interpolated, not physical.
class ClassicalEnsemble {
 public:
  /// grad S is computed from S. On periodic grids S may wind,
  /// S(x + L) = S(x) + seam_jump (e.g. m v L for a uniform drift v); the
  /// linear part is differentiated exactly and the periodic remainder
  /// spectrally.
  ClassicalEnsemble(RealField rho, RealField action, PhysicalConstants constants, double seam_jump = 0.0);

  ClassicalEnsemble(RealField rho, RealField action, RealField momentum, std::vector<std::uint8_t> mask,
                    PhysicalConstants constants, double seam_jump = 0.0);

  const RealField& rho() const noexcept { return rho_; }
  const RealField& action() const noexcept { return action_; }
  /// grad S.
  const RealField& momentum() const noexcept { return momentum_; }
  /// S(x + L) - S(x) on periodic grids.
  double seam_jump() const noexcept { return seam_jump_; }
  std::span<const std::uint8_t> mask() const noexcept { return mask_; }
  std::size_t masked_count() const noexcept;
  const PhysicalConstants& constants() const noexcept { return constants_; }
  const Grid& grid() const noexcept { return rho_.grid(); }

  /// Checks rho >= 0 and integrate(rho) == 1 within `mass_tolerance`.
  void validate(double mass_tolerance = 1e-10) const;

 private:
  RealField rho_;
  RealField action_;
  RealField momentum_;
  std::vector<std::uint8_t> mask_;
  PhysicalConstants constants_;
  double seam_jump_;
};

struct GaussianComponent {
  double x0 = 0.0;
  double sigma = 1.0;
  double k0 = 0.0;
  std::complex<double> weight{1.0, 0.0};
};

/// psi ∝ exp(-(x-x0)^2 / (4 sigma^2) + i k0 x), normalized. rho has standard
/// deviation sigma.
WaveFunction gaussian_packet(const Grid& grid, const PhysicalConstants& constants, double x0, double sigma,
                             double k0);

/// Normalized sum of Gaussian packets with complex weights.
WaveFunction gaussian_superposition(const Grid& grid, const PhysicalConstants& constants,
                                    std::span<const GaussianComponent> components);

/// psi = exp(i k x) / sqrt(L). Periodic grids only; k must be a multiple of
/// 2 pi / L.
WaveFunction plane_wave(const Grid& grid, const PhysicalConstants& constants, double k);

/// Ensemble at rest in density (Gaussian, std sigma, centered mid-domain)
/// with momentum p = -rate (x - c) exp(-((x - c)/width)^8): the focusing
/// flow S = -rate (x - c)^2 / 2 near the center, flattened to zero before the
/// seam so it can live on a periodic grid. Characteristics from the core cross
/// at t = m / rate.
ClassicalEnsemble converging_flow(const Grid& grid, const PhysicalConstants& constants, double sigma, double rate,
                                  double width);

double norm_squared(const WaveFunction& wf);
WaveFunction normalize(const WaveFunction& wf);
RealField density(const WaveFunction& wf);

/// 1e-12 * max(rho).
double default_rho_floor(const RealField& rho);

ClassicalEnsemble polar_decompose(const WaveFunction& wf, double rho_floor);
ClassicalEnsemble polar_decompose(const WaveFunction& wf);

WaveFunction from_polar(const ClassicalEnsemble& ens);

/// Replaces masked samples by linear interpolation between the flanking
/// unmasked samples. On periodic grids a gap may wrap around the seam, in
/// which case `seam_jump` is added to values read across it (S winds, u does
/// not). On dirichlet grids edge gaps take the nearest unmasked value.
std::vector<double> fill_masked(const Grid& grid, std::vector<double> values,
                                std::span<const std::uint8_t> mask, double seam_jump = 0.0);

/// Floor mask: 1 where rho < floor. Throws ResolutionError when fewer than
/// two samples reach the floor.
std::vector<std::uint8_t> floor_mask(const RealField& rho, double rho_floor);

}  // namespace dequant
