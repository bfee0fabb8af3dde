#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "dequant/deformation.hpp"
#include "dequant/dynamics.hpp"
#include "dequant/grid.hpp"
#include "dequant/state.hpp"

namespace dequant::cli {

/// Bad or missing configuration. `where` names the field and, when known,
/// the line it was read from.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string where, const std::string& message)
      : std::runtime_error(where + ": " + message), where_(std::move(where)) {}
  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

struct GridSpec {
  double x_min = -8.0;
  double x_max = 8.0;
  std::size_t n = 512;
  Boundary boundary = Boundary::periodic;
  bool operator==(const GridSpec&) const = default;
};

struct GaussianSpec {
  double x0 = 0.0;
  double sigma = 1.0;
  double k0 = 0.0;
  bool operator==(const GaussianSpec&) const = default;
};

struct PlaneWaveSpec {
  double k = 0.0;
  bool operator==(const PlaneWaveSpec&) const = default;
};

struct SuperpositionSpec {
  std::vector<GaussianComponent> components;
  bool operator==(const SuperpositionSpec& o) const;
};

/// rho and S read from two-column (x, value) files.
struct PolarSpec {
  std::filesystem::path rho_file;
  std::filesystem::path action_file;
  double seam_jump = 0.0;
  bool operator==(const PolarSpec&) const = default;
};

/// See dequant::converging_flow.
struct ConvergingFlowSpec {
  double sigma = 1.0;
  double rate = 1.0;
  double width = 5.0;
  bool operator==(const ConvergingFlowSpec&) const = default;
};

using StateSpec = std::variant<GaussianSpec, PlaneWaveSpec, SuperpositionSpec, PolarSpec, ConvergingFlowSpec>;

struct FreePotential {
  bool operator==(const FreePotential&) const = default;
};
struct HarmonicPotential {
  double omega = 1.0;
  double center = 0.0;
  bool operator==(const HarmonicPotential&) const = default;
};
struct FilePotential {
  std::filesystem::path file;
  bool operator==(const FilePotential&) const = default;
};
using PotentialSpec = std::variant<FreePotential, HarmonicPotential, FilePotential>;

struct NoDeformation {
  bool operator==(const NoDeformation&) const = default;
};
struct CriticalDeformation {
  bool operator==(const CriticalDeformation&) const = default;
};
struct ConstantDeformation {
  double c = 0.0;
  bool operator==(const ConstantDeformation&) const = default;
};
struct FileDeformation {
  std::filesystem::path file;
  bool operator==(const FileDeformation&) const = default;
};
using DeformationSpec = std::variant<NoDeformation, CriticalDeformation, ConstantDeformation, FileDeformation>;

struct EvolutionSpec {
  double dt = 1e-4;
  std::size_t n_steps = 1000;
  std::size_t record_every = 100;
  /// <= 0 selects the default 50 m / |dt|.
  double caustic_threshold = 0.0;
  bool operator==(const EvolutionSpec&) const = default;
};

struct ToleranceSpec {
  /// Relative: the floor is rho_floor * max(rho).
  double rho_floor = 1e-12;
  double minimizer_tol = 1e-8;
  int max_iter = 500;
  bool operator==(const ToleranceSpec&) const = default;
};

struct ReportSpec {
  bool minimize = true;
  bool trace = false;
  bool operator==(const ReportSpec&) const = default;
};

struct RunConfig {
  GridSpec grid;
  PhysicalConstants constants;
  StateSpec state = GaussianSpec{};
  PotentialSpec potential = FreePotential{};
  DeformationSpec deformation = NoDeformation{};
  EvolutionSpec evolution;
  ToleranceSpec tolerances;
  ReportSpec report;
  std::uint64_t seed = 42;
  bool operator==(const RunConfig&) const = default;
};

/// Parses the INI text. Relative file paths are resolved against
/// `base_dir` and stored absolute, so the echo re-parses from anywhere.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Canonical INI form; parse_config(to_ini(c)) == c.
std::string to_ini(const RunConfig& config);

/// Materialized inputs. Building them checks that files exist and match the grid.
Grid build_grid(const RunConfig& config);
WaveFunction build_wavefunction(const RunConfig& config, const Grid& grid);
/// Ensemble for classical runs: read directly for polar and converging-flow
/// states, otherwise the polar decomposition of the wavefunction.
ClassicalEnsemble build_ensemble(const RunConfig& config, const Grid& grid);
Potential build_potential(const RunConfig& config, const Grid& grid);
/// nullopt for `none`; `critical` uses u_c of the initial density.
std::optional<DeformationField> build_deformation(const RunConfig& config, const WaveFunction& wf);
double absolute_rho_floor(const RunConfig& config, const RealField& rho);

/// Two-column text: x, value per line; '#' starts a comment.
RealField read_samples(const std::filesystem::path& path, const Grid& grid, const std::string& field);

/// A double printed with 17 significant digits.
std::string format_double(double v);

}  // namespace dequant::cli
