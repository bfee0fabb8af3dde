#include "dequant/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace dequant::cli {

namespace pt = boost::property_tree;

bool SuperpositionSpec::operator==(const SuperpositionSpec& o) const {
  return std::equal(components.begin(), components.end(), o.components.begin(), o.components.end(),
                    [](const GaussianComponent& a, const GaussianComponent& b) {
                      return a.x0 == b.x0 && a.sigma == b.sigma && a.k0 == b.k0 && a.weight == b.weight;
                    });
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

const std::map<std::string, std::set<std::string>> common_keys = {
    {"grid", {"x_min", "x_max", "n", "boundary"}},
    {"constants", {"hbar", "mass"}},
    {"state", {"kind"}},
    {"potential", {"kind"}},
    {"deformation", {"kind"}},
    {"evolution", {"dt", "n_steps", "record_every", "caustic_threshold"}},
    {"tolerances", {"rho_floor", "minimizer_tol", "max_iter"}},
    {"report", {"minimize", "trace"}},
    {"run", {"seed"}},
};

const std::map<std::string, std::set<std::string>> kind_keys = {
    {"state.gaussian", {"x0", "sigma", "k0"}},
    {"state.plane_wave", {"k"}},
    {"state.superposition", {"components"}},
    {"state.polar", {"rho_file", "action_file", "seam_jump"}},
    {"state.converging_flow", {"sigma", "rate", "width"}},
    {"potential.free", {}},
    {"potential.harmonic", {"omega", "center"}},
    {"potential.file", {"file"}},
    {"deformation.none", {}},
    {"deformation.critical", {}},
    {"deformation.constant", {"c"}},
    {"deformation.file", {"file"}},
};

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Inline comments start at a ';' or '#' preceded by whitespace.
std::string strip_comment(const std::string& value) {
  for (std::size_t i = 1; i < value.size(); ++i) {
    if ((value[i] == ';' || value[i] == '#') && (value[i - 1] == ' ' || value[i - 1] == '\t')) {
      return trim(value.substr(0, i));
    }
  }
  return trim(value);
}

// Where each "section.key" was written, for diagnostics.
std::map<std::string, int> key_lines(const std::string& text) {
  std::map<std::string, int> lines;
  std::istringstream in(text);
  std::string line, section;
  for (int number = 1; std::getline(in, line); ++number) {
    line = trim(line);
    if (line.empty() || line[0] == ';' || line[0] == '#') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      lines.emplace(section, number);
    } else if (const auto eq = line.find('='); eq != std::string::npos) {
      lines.emplace(section + "." + trim(line.substr(0, eq)), number);
    }
  }
  return lines;
}

class Reader {
 public:
  Reader(const pt::ptree& tree, std::map<std::string, int> lines, std::filesystem::path base_dir)
      : tree_(tree), lines_(std::move(lines)), base_dir_(std::move(base_dir)) {}

  std::string where(const std::string& section, const std::string& key) const {
    std::string w = "[" + section + "] " + key;
    if (auto it = lines_.find(section + "." + key); it != lines_.end()) w += " (line " + std::to_string(it->second) + ")";
    return w;
  }

  std::optional<std::string> raw(const std::string& section, const std::string& key) const {
    const auto sec = tree_.get_child_optional(section);
    if (!sec) return std::nullopt;
    auto v = sec->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return strip_comment(*v);
  }

  double real(const std::string& section, const std::string& key, double fallback) const {
    const auto text = raw(section, key);
    if (!text) return fallback;
    return parse_real(*text, where(section, key));
  }

  std::size_t count(const std::string& section, const std::string& key, std::size_t fallback) const {
    const auto text = raw(section, key);
    if (!text) return fallback;
    std::uint64_t v = 0;
    const auto* end = text->data() + text->size();
    const auto [ptr, ec] = std::from_chars(text->data(), end, v);
    if (ec != std::errc() || ptr != end) throw ConfigError(where(section, key), "expected a non-negative integer, got '" + *text + "'");
    return static_cast<std::size_t>(v);
  }

  bool boolean(const std::string& section, const std::string& key, bool fallback) const {
    const auto text = raw(section, key);
    if (!text) return fallback;
    if (*text == "true") return true;
    if (*text == "false") return false;
    throw ConfigError(where(section, key), "expected true or false, got '" + *text + "'");
  }

  std::string word(const std::string& section, const std::string& key, const std::string& fallback) const {
    return raw(section, key).value_or(fallback);
  }

  std::filesystem::path path(const std::string& section, const std::string& key) const {
    const auto text = raw(section, key);
    if (!text || text->empty()) throw ConfigError(where(section, key), "file path is required");
    std::filesystem::path p(*text);
    if (p.is_relative()) p = base_dir_ / p;
    p = p.lexically_normal();
    if (!std::filesystem::exists(p)) throw ConfigError(where(section, key), "file not found: " + p.string());
    return std::filesystem::absolute(p);
  }

  static double parse_real(const std::string& text, const std::string& where) {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ConfigError(where, "expected a number, got '" + text + "'");
    if (!std::isfinite(v)) throw ConfigError(where, "value must be finite");
    return v;
  }

  void check_keys(const std::string& section, const std::set<std::string>& allowed, const std::string& kind) const {
    const auto sec = tree_.get_child_optional(section);
    if (!sec) return;
    for (const auto& [key, value] : *sec) {
      if (!value.empty()) throw ConfigError(where(section, key), "nested keys are not supported");
      if (allowed.count(key) == 0) {
        throw ConfigError(where(section, key),
                          kind.empty() ? "unknown key" : "not used by kind = " + kind);
      }
    }
  }

 private:
  const pt::ptree& tree_;
  std::map<std::string, int> lines_;
  std::filesystem::path base_dir_;
};

void require(bool ok, const std::string& where, const std::string& message) {
  if (!ok) throw ConfigError(where, message);
}

std::vector<GaussianComponent> parse_components(const std::string& text, const std::string& where) {
  std::vector<GaussianComponent> out;
  std::istringstream groups(text);
  std::string group;
  while (std::getline(groups, group, '|')) {
    group = trim(group);
    if (group.empty()) continue;
    std::istringstream fields(group);
    std::vector<double> v;
    for (std::string token; fields >> token;) v.push_back(Reader::parse_real(token, where));
    if (v.size() != 5) {
      throw ConfigError(where, "each component needs 'x0 sigma k0 weight_re weight_im', got '" + group + "'");
    }
    require(v[1] > 0.0, where, "component sigma must be positive");
    out.push_back({v[0], v[1], v[2], {v[3], v[4]}});
  }
  require(!out.empty(), where, "at least one component is required");
  return out;
}

StateSpec parse_state(const Reader& r) {
  const std::string kind = r.word("state", "kind", "gaussian");
  const auto known = kind_keys.find("state." + kind);
  if (known == kind_keys.end()) {
    throw ConfigError(r.where("state", "kind"),
                      "unknown kind '" + kind + "' (gaussian, plane_wave, superposition, polar, converging_flow)");
  }
  auto allowed = known->second;
  allowed.insert("kind");
  r.check_keys("state", allowed, kind);

  if (kind == "gaussian") {
    GaussianSpec s{r.real("state", "x0", 0.0), r.real("state", "sigma", 1.0), r.real("state", "k0", 0.0)};
    require(s.sigma > 0.0, r.where("state", "sigma"), "sigma must be positive");
    return s;
  }
  if (kind == "plane_wave") return PlaneWaveSpec{r.real("state", "k", 0.0)};
  if (kind == "superposition") {
    const auto text = r.raw("state", "components");
    if (!text) throw ConfigError(r.where("state", "components"), "components are required");
    return SuperpositionSpec{parse_components(*text, r.where("state", "components"))};
  }
  if (kind == "polar") {
    return PolarSpec{r.path("state", "rho_file"), r.path("state", "action_file"), r.real("state", "seam_jump", 0.0)};
  }
  ConvergingFlowSpec s{r.real("state", "sigma", 1.0), r.real("state", "rate", 1.0), r.real("state", "width", 5.0)};
  require(s.sigma > 0.0, r.where("state", "sigma"), "sigma must be positive");
  require(s.rate > 0.0, r.where("state", "rate"), "rate must be positive");
  require(s.width > 0.0, r.where("state", "width"), "width must be positive");
  return s;
}

PotentialSpec parse_potential(const Reader& r) {
  const std::string kind = r.word("potential", "kind", "free");
  const auto known = kind_keys.find("potential." + kind);
  if (known == kind_keys.end()) throw ConfigError(r.where("potential", "kind"), "unknown kind '" + kind + "' (free, harmonic, file)");
  auto allowed = known->second;
  allowed.insert("kind");
  r.check_keys("potential", allowed, kind);
  if (kind == "free") return FreePotential{};
  if (kind == "harmonic") {
    HarmonicPotential h{r.real("potential", "omega", 1.0), r.real("potential", "center", 0.0)};
    require(h.omega > 0.0, r.where("potential", "omega"), "omega must be positive");
    return h;
  }
  return FilePotential{r.path("potential", "file")};
}

DeformationSpec parse_deformation(const Reader& r) {
  const std::string kind = r.word("deformation", "kind", "none");
  const auto known = kind_keys.find("deformation." + kind);
  if (known == kind_keys.end()) {
    throw ConfigError(r.where("deformation", "kind"), "unknown kind '" + kind + "' (none, critical, constant, file)");
  }
  auto allowed = known->second;
  allowed.insert("kind");
  r.check_keys("deformation", allowed, kind);
  if (kind == "none") return NoDeformation{};
  if (kind == "critical") return CriticalDeformation{};
  if (kind == "constant") return ConstantDeformation{r.real("deformation", "c", 0.0)};
  return FileDeformation{r.path("deformation", "file")};
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("line " + std::to_string(e.line()), e.message());
  }
  const Reader r(tree, key_lines(text), base_dir);
  for (const auto& [section, value] : tree) {
    if (common_keys.count(section) == 0) throw ConfigError("[" + section + "]", "unknown section");
    if (section != "state" && section != "potential" && section != "deformation") {
      r.check_keys(section, common_keys.at(section), "");
    }
  }

  RunConfig c;
  c.grid.x_min = r.real("grid", "x_min", c.grid.x_min);
  c.grid.x_max = r.real("grid", "x_max", c.grid.x_max);
  c.grid.n = r.count("grid", "n", c.grid.n);
  const std::string boundary = r.word("grid", "boundary", "periodic");
  if (boundary == "periodic") {
    c.grid.boundary = Boundary::periodic;
  } else if (boundary == "dirichlet") {
    c.grid.boundary = Boundary::dirichlet;
  } else {
    throw ConfigError(r.where("grid", "boundary"), "expected periodic or dirichlet, got '" + boundary + "'");
  }
  require(c.grid.x_max > c.grid.x_min, r.where("grid", "x_max"), "x_max must exceed x_min");
  require(c.grid.n >= Grid::min_points, r.where("grid", "n"), "n must be at least 8");

  c.constants.hbar = r.real("constants", "hbar", 1.0);
  c.constants.mass = r.real("constants", "mass", 1.0);
  require(c.constants.hbar > 0.0, r.where("constants", "hbar"), "hbar must be positive");
  require(c.constants.mass > 0.0, r.where("constants", "mass"), "mass must be positive");

  c.state = parse_state(r);
  c.potential = parse_potential(r);
  c.deformation = parse_deformation(r);

  c.evolution.dt = r.real("evolution", "dt", c.evolution.dt);
  c.evolution.n_steps = r.count("evolution", "n_steps", c.evolution.n_steps);
  c.evolution.record_every = r.count("evolution", "record_every", c.evolution.record_every);
  c.evolution.caustic_threshold = r.real("evolution", "caustic_threshold", c.evolution.caustic_threshold);
  require(c.evolution.dt != 0.0, r.where("evolution", "dt"), "dt must be non-zero");
  require(c.evolution.n_steps >= 1, r.where("evolution", "n_steps"), "n_steps must be at least 1");
  require(c.evolution.record_every >= 1, r.where("evolution", "record_every"), "record_every must be at least 1");

  c.tolerances.rho_floor = r.real("tolerances", "rho_floor", c.tolerances.rho_floor);
  c.tolerances.minimizer_tol = r.real("tolerances", "minimizer_tol", c.tolerances.minimizer_tol);
  const std::size_t max_iter = r.count("tolerances", "max_iter", static_cast<std::size_t>(c.tolerances.max_iter));
  require(c.tolerances.rho_floor > 0.0 && c.tolerances.rho_floor < 1.0, r.where("tolerances", "rho_floor"),
          "rho_floor is relative to max(rho) and must lie in (0, 1)");
  require(c.tolerances.minimizer_tol > 0.0, r.where("tolerances", "minimizer_tol"), "minimizer_tol must be positive");
  require(max_iter >= 1 && max_iter <= 1000000, r.where("tolerances", "max_iter"), "max_iter must be in [1, 1000000]");
  c.tolerances.max_iter = static_cast<int>(max_iter);

  c.report.minimize = r.boolean("report", "minimize", c.report.minimize);
  c.report.trace = r.boolean("report", "trace", c.report.trace);
  c.seed = r.count("run", "seed", c.seed);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open config file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), std::filesystem::absolute(path).parent_path());
}

std::string to_ini(const RunConfig& c) {
  std::ostringstream o;
  const auto d = [](double v) { return format_double(v); };
  o << "[grid]\n"
    << "x_min = " << d(c.grid.x_min) << "\n"
    << "x_max = " << d(c.grid.x_max) << "\n"
    << "n = " << c.grid.n << "\n"
    << "boundary = " << to_string(c.grid.boundary) << "\n\n"
    << "[constants]\n"
    << "hbar = " << d(c.constants.hbar) << "\n"
    << "mass = " << d(c.constants.mass) << "\n\n"
    << "[state]\n";
  std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, GaussianSpec>) {
          o << "kind = gaussian\nx0 = " << d(s.x0) << "\nsigma = " << d(s.sigma) << "\nk0 = " << d(s.k0) << "\n";
        } else if constexpr (std::is_same_v<S, PlaneWaveSpec>) {
          o << "kind = plane_wave\nk = " << d(s.k) << "\n";
        } else if constexpr (std::is_same_v<S, SuperpositionSpec>) {
          o << "kind = superposition\ncomponents =";
          for (std::size_t i = 0; i < s.components.size(); ++i) {
            const auto& g = s.components[i];
            o << (i ? " | " : " ") << d(g.x0) << " " << d(g.sigma) << " " << d(g.k0) << " " << d(g.weight.real())
              << " " << d(g.weight.imag());
          }
          o << "\n";
        } else if constexpr (std::is_same_v<S, PolarSpec>) {
          o << "kind = polar\nrho_file = " << s.rho_file.string() << "\naction_file = " << s.action_file.string()
            << "\nseam_jump = " << d(s.seam_jump) << "\n";
        } else {
          o << "kind = converging_flow\nsigma = " << d(s.sigma) << "\nrate = " << d(s.rate) << "\nwidth = " << d(s.width)
            << "\n";
        }
      },
      c.state);
  o << "\n[potential]\n";
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, FreePotential>) {
          o << "kind = free\n";
        } else if constexpr (std::is_same_v<P, HarmonicPotential>) {
          o << "kind = harmonic\nomega = " << d(p.omega) << "\ncenter = " << d(p.center) << "\n";
        } else {
          o << "kind = file\nfile = " << p.file.string() << "\n";
        }
      },
      c.potential);
  o << "\n[deformation]\n";
  std::visit(
      [&](const auto& u) {
        using U = std::decay_t<decltype(u)>;
        if constexpr (std::is_same_v<U, NoDeformation>) {
          o << "kind = none\n";
        } else if constexpr (std::is_same_v<U, CriticalDeformation>) {
          o << "kind = critical\n";
        } else if constexpr (std::is_same_v<U, ConstantDeformation>) {
          o << "kind = constant\nc = " << d(u.c) << "\n";
        } else {
          o << "kind = file\nfile = " << u.file.string() << "\n";
        }
      },
      c.deformation);
  o << "\n[evolution]\n"
    << "dt = " << d(c.evolution.dt) << "\n"
    << "n_steps = " << c.evolution.n_steps << "\n"
    << "record_every = " << c.evolution.record_every << "\n"
    << "caustic_threshold = " << d(c.evolution.caustic_threshold) << "\n\n"
    << "[tolerances]\n"
    << "rho_floor = " << d(c.tolerances.rho_floor) << "\n"
    << "minimizer_tol = " << d(c.tolerances.minimizer_tol) << "\n"
    << "max_iter = " << c.tolerances.max_iter << "\n\n"
    << "[report]\n"
    << "minimize = " << (c.report.minimize ? "true" : "false") << "\n"
    << "trace = " << (c.report.trace ? "true" : "false") << "\n\n"
    << "[run]\n"
    << "seed = " << c.seed << "\n";
  return o.str();
}

Grid build_grid(const RunConfig& config) {
  try {
    return Grid(config.grid.x_min, config.grid.x_max, config.grid.n, config.grid.boundary);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("[grid]", e.what());
  }
}

RealField read_samples(const std::filesystem::path& path, const Grid& grid, const std::string& field) {
  std::ifstream in(path);
  if (!in) throw ConfigError(field, "cannot open " + path.string());
  std::vector<double> values;
  std::string line;
  for (int number = 1; std::getline(in, line); ++number) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    std::vector<std::string> tokens;
    for (std::string t; fields >> t;) tokens.push_back(t);
    if (tokens.empty()) continue;
    const std::string where = field + " " + path.filename().string() + ":" + std::to_string(number);
    if (tokens.size() != 2) throw ConfigError(where, "expected two columns (x, value)");
    const double x = Reader::parse_real(tokens[0], where);
    const double v = Reader::parse_real(tokens[1], where);
    const std::size_t i = values.size();
    if (i >= grid.n()) throw ConfigError(where, "more samples than grid points (" + std::to_string(grid.n()) + ")");
    if (std::abs(x - grid.x(i)) > 1e-9 * grid.length()) {
      throw ConfigError(where, "x = " + tokens[0] + " does not match grid point " + format_double(grid.x(i)));
    }
    values.push_back(v);
  }
  if (values.size() != grid.n()) {
    throw ConfigError(field, path.string() + " has " + std::to_string(values.size()) + " samples, grid has " +
                                 std::to_string(grid.n()));
  }
  return RealField(grid, std::move(values));
}

WaveFunction build_wavefunction(const RunConfig& config, const Grid& grid) {
  try {
    return std::visit(
        [&](const auto& s) -> WaveFunction {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, GaussianSpec>) {
            return gaussian_packet(grid, config.constants, s.x0, s.sigma, s.k0);
          } else if constexpr (std::is_same_v<S, PlaneWaveSpec>) {
            return plane_wave(grid, config.constants, s.k);
          } else if constexpr (std::is_same_v<S, SuperpositionSpec>) {
            return gaussian_superposition(grid, config.constants, s.components);
          } else {
            return from_polar(build_ensemble(config, grid));
          }
        },
        config.state);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("[state]", e.what());
  }
}

ClassicalEnsemble build_ensemble(const RunConfig& config, const Grid& grid) {
  try {
    if (const auto* s = std::get_if<PolarSpec>(&config.state)) {
      auto rho = read_samples(s->rho_file, grid, "[state] rho_file");
      auto action = read_samples(s->action_file, grid, "[state] action_file");
      for (std::size_t i = 0; i < rho.size(); ++i) {
        if (rho[i] < 0.0) throw ConfigError("[state] rho_file", "negative density at sample " + std::to_string(i));
      }
      const double mass = integrate(rho);
      require(mass > 0.0, "[state] rho_file", "density integrates to zero");
      rho = (1.0 / mass) * rho;
      return ClassicalEnsemble(std::move(rho), std::move(action), config.constants, s->seam_jump);
    }
    if (const auto* s = std::get_if<ConvergingFlowSpec>(&config.state)) {
      return converging_flow(grid, config.constants, s->sigma, s->rate, s->width);
    }
    const auto wf = build_wavefunction(config, grid);
    return polar_decompose(wf, absolute_rho_floor(config, density(wf)));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("[state]", e.what());
  }
}

Potential build_potential(const RunConfig& config, const Grid& grid) {
  try {
    return std::visit(
        [&](const auto& p) -> Potential {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, FreePotential>) {
            return Potential::free(grid);
          } else if constexpr (std::is_same_v<P, HarmonicPotential>) {
            return Potential::harmonic(grid, config.constants, p.omega, p.center);
          } else {
            return Potential::from_samples(read_samples(p.file, grid, "[potential] file"));
          }
        },
        config.potential);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("[potential]", e.what());
  }
}

std::optional<DeformationField> build_deformation(const RunConfig& config, const WaveFunction& wf) {
  try {
    return std::visit(
        [&](const auto& u) -> std::optional<DeformationField> {
          using U = std::decay_t<decltype(u)>;
          if constexpr (std::is_same_v<U, NoDeformation>) {
            return std::nullopt;
          } else if constexpr (std::is_same_v<U, CriticalDeformation>) {
            const auto rho = density(wf);
            return critical_deformation(rho, wf.constants(), absolute_rho_floor(config, rho));
          } else if constexpr (std::is_same_v<U, ConstantDeformation>) {
            return DeformationField::constant(wf.grid(), wf.constants(), u.c);
          } else {
            return DeformationField(read_samples(u.file, wf.grid(), "[deformation] file"), wf.constants());
          }
        },
        config.deformation);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("[deformation]", e.what());
  }
}

double absolute_rho_floor(const RunConfig& config, const RealField& rho) {
  return config.tolerances.rho_floor * max_abs(rho);
}

}  // namespace dequant::cli
