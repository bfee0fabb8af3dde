#include "dequant/cli/commands.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace dequant::cli {

using json = nlohmann::ordered_json;

EvolveMode parse_mode(const std::string& text) {
  if (text == "quantum") return EvolveMode::quantum;
  if (text == "classical") return EvolveMode::classical;
  if (text == "deformed") return EvolveMode::deformed;
  if (text == "gap") return EvolveMode::gap;
  throw ConfigError("--mode", "expected quantum, classical, deformed or gap, got '" + text + "'");
}

std::string to_string(EvolveMode mode) {
  switch (mode) {
    case EvolveMode::quantum: return "quantum";
    case EvolveMode::classical: return "classical";
    case EvolveMode::deformed: return "deformed";
    case EvolveMode::gap: return "gap";
  }
  return "?";
}

namespace {

void dump(const json& v, int indent, int depth, std::string& out) {
  const auto newline = [&](int d) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (v.type()) {
    case json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += json(it.key()).dump();
        out += indent < 0 ? ":" : ": ";
        dump(it.value(), indent, depth + 1, out);
      }
      newline(depth);
      out += '}';
      return;
    }
    case json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      out += '[';
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        newline(depth + 1);
        dump(v[i], indent, depth + 1, out);
      }
      newline(depth);
      out += ']';
      return;
    }
    case json::value_t::number_float: {
      const double d = v.get<double>();
      out += std::isfinite(d) ? format_double(d) : "null";
      return;
    }
    default:
      out += v.dump();
  }
}

bool all_finite(const json& v) {
  if (v.is_number_float()) return std::isfinite(v.get<double>());
  if (v.is_structured()) {
    for (const auto& child : v) {
      if (!all_finite(child)) return false;
    }
  }
  return true;
}

json report_json(const KineticReport& r) {
  return json{{"T", r.T},
              {"T_u", r.T_u},
              {"T_uc", r.T_uc},
              {"fisher_I", r.fisher_I},
              {"identity_residual", r.identity_residual},
              {"form_residual", r.form_residual}};
}

std::string csv_grid_header(const Grid& grid) {
  std::string h = "t";
  for (std::size_t i = 0; i < grid.n(); ++i) h += "," + format_double(grid.x(i));
  return h + "\n";
}

class Csv {
 public:
  explicit Csv(std::string header) : text_(std::move(header)) {}
  void row(double t, std::span<const double> values) {
    text_ += format_double(t);
    for (double v : values) text_ += "," + format_double(v);
    text_ += '\n';
  }
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

struct Outputs {
  std::filesystem::path dir;
  json files = json::array();
  void write(const std::string& name, const std::string& text) {
    write_file(dir / name, text);
    files.push_back(name);
  }
};

void write_trajectory(Outputs& out, const std::string& prefix, const TrajectoryRecord& record) {
  const Grid& grid = record.potential.grid();
  Csv density(csv_grid_header(grid)), energy("t,kinetic,potential,total\n"), norm("t,norm\n");
  std::optional<Csv> action, momentum;
  const auto energies = energy_audit(record);
  for (std::size_t i = 0; i < record.times.size(); ++i) {
    const double t = record.times[i];
    density.row(t, record.density_at(i).values());
    const double e[3] = {energies[i].kinetic, energies[i].potential, energies[i].total};
    energy.row(t, e);
    norm.row(t, std::span<const double>(&record.norms[i], 1));
    if (const auto* ens = std::get_if<ClassicalEnsemble>(&record.snapshots[i])) {
      if (!action) action.emplace(csv_grid_header(grid));
      if (!momentum) momentum.emplace(csv_grid_header(grid));
      action->row(t, ens->action().values());
      momentum->row(t, ens->momentum().values());
    }
  }
  out.write(prefix + "density.csv", density.text());
  out.write(prefix + "energy.csv", energy.text());
  out.write(prefix + "norm.csv", norm.text());
  if (action) out.write(prefix + "action.csv", action->text());
  if (momentum) out.write(prefix + "momentum.csv", momentum->text());
}

double norm_drift(const TrajectoryRecord& record) {
  double worst = 0.0;
  for (double n : record.norms) worst = std::max(worst, std::abs(n - record.norms.front()));
  return worst;
}

json trajectory_summary(const TrajectoryRecord& record) {
  const auto energies = energy_audit(record);
  std::size_t masked = 0;
  for (const auto& d : record.diagnostics) masked = std::max(masked, d.masked_points);
  json s{{"regime", to_string(record.regime)},
         {"recorded", record.times.size()},
         {"t_start", record.times.front()},
         {"t_end", record.times.back()},
         {"energy_initial", energies.front().total},
         {"energy_final", energies.back().total},
         {"relative_energy_drift", relative_energy_drift(energies)},
         {"norm_drift", norm_drift(record)},
         {"max_masked_points", masked},
         {"halted", record.halted}};
  if (record.halted) {
    s["halt_time"] = record.halt_time;
    s["halt_step"] = record.halt_step;
    s["halt_reason"] = record.halt_reason;
  }
  return s;
}

json bound_json(double b) { return std::isfinite(b) ? json(b) : json(nullptr); }

std::string bound_text(double b) { return std::isfinite(b) ? format_double(b) : "unbounded"; }

void finish(CommandResult& result) {
  if (!all_finite(result.envelope)) {
    result.exit_code = exit_numerical;
    result.diagnostics += "non-finite value in result envelope\n";
  }
  const char* status = result.exit_code == exit_ok          ? "ok"
                       : result.exit_code == exit_tolerance ? "tolerance_failure"
                       : result.exit_code == exit_numerical ? "numerical_failure"
                                                            : "config_error";
  result.envelope["status"] = status;
  result.envelope["exit_code"] = result.exit_code;
}

}  // namespace

std::string dump_json(const json& value, int indent) {
  std::string out;
  dump(value, indent, 0, out);
  return out + "\n";
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

CommandResult cmd_report(const RunConfig& config) {
  CommandResult result;
  auto& env = result.envelope;
  env["command"] = "report";
  env["config"] = to_ini(config);

  const Grid grid = build_grid(config);
  const auto wf = build_wavefunction(config, grid);
  const auto rho = density(wf);
  const double floor = absolute_rho_floor(config, rho);
  const auto u = build_deformation(config, wf);
  const auto report = kinetic_report(wf, u, floor);
  const auto& c = config.constants;

  const double identity_tol = 1e-8 * (1.0 + report.T);
  const double form_tol = (grid.periodic() ? 1e-9 : 1e-6) * (1.0 + std::abs(report.T_u));
  env["quadrature"] = to_string(grid.quadrature());
  env["rho_floor"] = floor;
  env["report"] = report_json(report);

  json residuals{{"identity_residual", report.identity_residual},
                 {"form_residual", report.form_residual},
                 {"minimizer_distance", 0.0},
                 {"minimizer_value_residual", 0.0}};
  json tolerances{{"identity_residual", identity_tol}, {"form_residual", form_tol}};
  bool ok = report.identity_residual <= identity_tol && report.form_residual <= form_tol;

  if (config.report.minimize) {
    MinimizerOptions options;
    options.tol = config.tolerances.minimizer_tol;
    options.max_iter = config.tolerances.max_iter;
    options.rho_floor = floor;
    try {
      const auto m = minimize_deformation(wf, DeformationField::zero(grid, c), options);
      // The closed form is only used here, to grade the minimizer.
      const auto u_c = critical_deformation(rho, c, floor);
      const double distance = rho_weighted_norm(rho, m.u.u() - u_c.u());
      const double value_residual = std::abs(m.report.T_uc - report.T_uc) / std::max(1.0, std::abs(report.T_uc));
      json mj{{"iterations", m.iterations}, {"T_u_star", m.report.T_uc}, {"rho_weighted_distance", distance}};
      if (config.report.trace) {
        json trace = json::array();
        for (const auto& s : m.trace) {
          trace.push_back({{"iteration", s.iteration}, {"T_u", s.T_u}, {"gradient_norm", s.gradient_norm}, {"step", s.step}});
        }
        mj["trace"] = std::move(trace);
      }
      env["minimizer"] = std::move(mj);
      residuals["minimizer_distance"] = distance;
      residuals["minimizer_value_residual"] = value_residual;
      tolerances["minimizer_distance"] = 10.0 * options.tol;
      tolerances["minimizer_value_residual"] = 1e-7;
      ok = ok && distance <= 10.0 * options.tol && value_residual <= 1e-7;
    } catch (const ConvergenceError& e) {
      env["minimizer"] = json{{"error", e.what()}, {"gradient_norm", e.gradient_norm()}, {"iterations", e.iterations()}};
      result.diagnostics += std::string(e.what()) + "\n";
      result.exit_code = exit_numerical;
    }
  }
  env["residuals"] = std::move(residuals);
  env["tolerances"] = std::move(tolerances);
  if (result.exit_code == exit_ok && !ok) result.exit_code = exit_tolerance;
  finish(result);
  return result;
}

CommandResult cmd_evolve(const RunConfig& config, EvolveMode mode, const std::filesystem::path& out_dir) {
  CommandResult result;
  auto& env = result.envelope;
  env["command"] = "evolve";
  env["mode"] = to_string(mode);
  env["config"] = to_ini(config);

  const Grid grid = build_grid(config);
  if (!grid.periodic()) throw ConfigError("[grid] boundary", "time evolution requires a periodic grid");
  const auto potential = build_potential(config, grid);
  const auto& ev = config.evolution;
  const double dt = std::abs(ev.dt);

  const bool quantum_side = mode != EvolveMode::classical;
  const bool classical_side = mode == EvolveMode::classical || mode == EvolveMode::gap;
  const double q_bound = quantum_dt_bound(grid, config.constants);
  const ClassicalEnsemble ens = build_ensemble(config, grid);
  const double c_bound = classical_dt_bound(ens);
  env["dt_bounds"] = json{{"quantum", bound_json(q_bound)}, {"classical", bound_json(c_bound)}};
  result.diagnostics += "dt = " + format_double(ev.dt) + "; bounds: quantum |dt| <= " + bound_text(q_bound) +
                        ", classical |dt| <= " + bound_text(c_bound) + "\n";
  if ((quantum_side && dt > q_bound) || (classical_side && dt > c_bound)) {
    throw ConfigError("[evolution] dt", "|dt| = " + format_double(dt) + " exceeds the " +
                                            (quantum_side && dt > q_bound ? "quantum" : "classical") +
                                            " bound (quantum |dt| <= " + bound_text(q_bound) +
                                            ", classical |dt| <= " + bound_text(c_bound) + ")");
  }

  ClassicalOptions options;
  options.dt = ev.dt;
  options.n_steps = ev.n_steps;
  options.record_every = ev.record_every;
  options.caustic_threshold = ev.caustic_threshold;

  Outputs out{out_dir};
  json residuals{{"norm_drift", 0.0}};
  json tolerances = json::object();
  bool ok = true;
  const double steps_per_thousand = std::max(1.0, static_cast<double>(ev.n_steps) / 1000.0);

  try {
    switch (mode) {
      case EvolveMode::quantum:
      case EvolveMode::deformed: {
        const auto wf = build_wavefunction(config, grid);
        std::optional<DeformationField> u;
        if (mode == EvolveMode::deformed) {
          u = build_deformation(config, wf);
          if (!u) throw ConfigError("[deformation] kind", "mode deformed needs a deformation other than none");
        }
        const auto record = u ? evolve_deformed_fixed_u(wf, potential, *u, options)
                              : evolve_schrodinger(wf, potential, options);
        write_trajectory(out, "", record);
        env["summary"] = trajectory_summary(record);
        const double drift = norm_drift(record);
        residuals["norm_drift"] = drift;
        tolerances["norm_drift"] = 1e-6;
        ok = drift <= 1e-6;
        break;
      }
      case EvolveMode::classical: {
        const auto record = evolve_classical(ens, potential, options);
        write_trajectory(out, "", record);
        env["summary"] = trajectory_summary(record);
        const double drift = norm_drift(record);
        residuals["norm_drift"] = drift;
        tolerances["norm_drift"] = 1e-8 * steps_per_thousand;
        ok = drift <= 1e-8 * steps_per_thousand;
        break;
      }
      case EvolveMode::gap: {
        const auto wf = build_wavefunction(config, grid);
        const auto gap = dequantization_gap(wf, potential, options);
        Csv series("t,density_distance,kinetic_gap\n");
        for (const auto& s : gap.samples) {
          const double v[2] = {s.density_distance, s.kinetic_gap};
          series.row(s.t, v);
        }
        out.write("gap.csv", series.text());
        write_trajectory(out, "quantum_", gap.quantum);
        write_trajectory(out, "classical_", gap.classical);
        const auto rho = density(wf);
        const auto& c = config.constants;
        const double predicted =
            c.hbar * c.hbar * fisher_information(rho, absolute_rho_floor(config, rho)) / (8.0 * c.mass);
        const double initial = gap.samples.front().kinetic_gap;
        const double residual = std::abs(initial - predicted) / std::max(std::abs(predicted), 1.0);
        env["summary"] = json{{"samples", gap.samples.size()},
                              {"truncated", gap.truncated},
                              {"halt_time", gap.halt_time},
                              {"initial_kinetic_gap", initial},
                              {"predicted_kinetic_gap", predicted},
                              {"final_density_distance", gap.samples.back().density_distance},
                              {"quantum", trajectory_summary(gap.quantum)},
                              {"classical", trajectory_summary(gap.classical)}};
        residuals["initial_gap_residual"] = residual;
        residuals["norm_drift"] = norm_drift(gap.quantum);
        tolerances["initial_gap_residual"] = 1e-8;
        tolerances["norm_drift"] = 1e-6;
        ok = residual <= 1e-8 && norm_drift(gap.quantum) <= 1e-6;
        break;
      }
    }
  } catch (const NumericalError& e) {
    env["error"] = json{{"message", e.what()}, {"step", e.step()}};
    result.diagnostics += std::string(e.what()) + " at step " + std::to_string(e.step()) + "\n";
    result.exit_code = exit_numerical;
  }

  env["residuals"] = std::move(residuals);
  env["tolerances"] = std::move(tolerances);
  env["files"] = out.files;
  if (result.exit_code == exit_ok && !ok) result.exit_code = exit_tolerance;
  finish(result);
  write_file(out_dir / "summary.json", dump_json(env));
  return result;
}

CommandResult cmd_verify(const VerifyOptions& options) {
  CommandResult result;
  const auto report = run_verify(options);
  auto& env = result.envelope;
  env["command"] = "verify";
  env["seed"] = report.seed;
  env["cases"] = report.cases;
  json families = json::array();
  for (const auto& f : report.families) {
    families.push_back({{"name", f.name},
                        {"passed", f.passed},
                        {"worst", f.worst},
                        {"tolerance", f.tolerance},
                        {"worst_case", f.worst_case},
                        {"checks", f.checks}});
  }
  env["families"] = std::move(families);
  env["report"] = report.text();
  if (!report.passed()) result.exit_code = exit_tolerance;
  finish(result);
  return result;
}

}  // namespace dequant::cli
