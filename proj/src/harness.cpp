#include "superrad/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include <boost/crc.hpp>
#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include "superrad/cloud.hpp"
#include "superrad/correlation_solver.hpp"
#include "superrad/eigenmodes.hpp"
#include "superrad/errors.hpp"
#include "superrad/parallel.hpp"
#include "superrad/semiclassical.hpp"

#ifndef SUPERRAD_VERSION
#define SUPERRAD_VERSION "0.0.0"
#endif

namespace superrad {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

const char* to_string(SolverKind s) {
  switch (s) {
    case SolverKind::kExact: return "exact";
    case SolverKind::kCorrelation: return "correlation";
    case SolverKind::kSemiclassical: return "semiclassical";
    case SolverKind::kEigenmode: return "eigenmode";
  }
  return "correlation";
}

SolverKind solver_from_string(const std::string& name) {
  if (name == "exact") return SolverKind::kExact;
  if (name == "correlation") return SolverKind::kCorrelation;
  if (name == "semiclassical") return SolverKind::kSemiclassical;
  if (name == "eigenmode") return SolverKind::kEigenmode;
  throw InvalidArgument("unknown solver '" + name +
                        "' (expected exact, correlation, semiclassical or eigenmode)");
}

const char* to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::kNone: return "none";
    case SweepAxis::kDensity: return "density";
    case SweepAxis::kNAtoms: return "n_atoms";
    case SweepAxis::kGammaRatio: return "gamma_ratio";
  }
  return "none";
}

std::string toolkit_version() { return SUPERRAD_VERSION; }

std::string config_hash(const std::string& text) {
  boost::crc_32_type crc;
  crc.process_bytes(text.data(), text.size());
  std::ostringstream os;
  os << std::hex << std::setw(8) << std::setfill('0') << crc.checksum();
  return os.str();
}

void write_text_atomic(const fs::path& file, const std::string& text) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  const fs::path tmp = file.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot write " + tmp.string());
    os << text;
    os.flush();
    if (!os) throw Error("short write to " + tmp.string());
  }
  fs::rename(tmp, file);
}

int standard_runs(int n_atoms) {
  if (n_atoms < 1) throw InvalidArgument("standard_runs: n_atoms must be >= 1");
  return std::max(1, 15360 / n_atoms);
}

std::size_t ScenarioConfig::reference_index() const {
  for (std::size_t i = 0; i < transitions.size(); ++i)
    if (transitions[i].label == units.reference) return i;
  return 0;
}

int ScenarioConfig::resolved_runs() const {
  return ensemble.auto_runs ? standard_runs(n_atoms) : ensemble.n_runs;
}

double ScenarioConfig::cloud_sigma() const {
  if (sigma) return *sigma;
  if (lambda3_density) return sigma_from_density(n_atoms, *lambda3_density);
  throw ConfigError("scenario has neither a density nor a sigma");
}

ConfigValidationError::ConfigValidationError(std::vector<ConfigIssue> issues)
    : ConfigError([&] {
        std::ostringstream os;
        os << "invalid config:";
        for (const auto& i : issues) os << "\n  " << (i.field.empty() ? "<root>" : i.field) << ": " << i.message;
        return os.str();
      }()),
      issues_(std::move(issues)) {}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

class Parser {
 public:
  std::vector<ConfigIssue> issues;

  void fail(const std::string& field, const std::string& msg) { issues.push_back({field, msg}); }

  void check_keys(const YAML::Node& node, const std::string& where, const std::set<std::string>& allowed) {
    if (!node.IsMap()) {
      fail(where, "expected a mapping");
      return;
    }
    std::set<std::string> seen;
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      const auto field = where.empty() ? key : where + "." + key;
      if (!allowed.count(key)) fail(field, "unknown key");
      if (!seen.insert(key).second) fail(field, "duplicate key");
    }
  }

  template <class T>
  std::optional<T> get(const YAML::Node& node, const std::string& key, const std::string& field) {
    const auto v = node[key];
    if (!v) return std::nullopt;
    try {
      return v.as<T>();
    } catch (const YAML::Exception&) {
      fail(field, "could not read value '" + YAML::Dump(v) + "'");
      return std::nullopt;
    }
  }

  std::optional<double> positive(const YAML::Node& node, const std::string& key, const std::string& field,
                                 bool allow_zero = false) {
    auto v = get<double>(node, key, field);
    if (v && !(allow_zero ? *v >= 0.0 : *v > 0.0) ) {
      fail(field, allow_zero ? "must be >= 0" : "must be > 0");
      return std::nullopt;
    }
    if (v && !std::isfinite(*v)) {
      fail(field, "must be finite");
      return std::nullopt;
    }
    return v;
  }
};

std::vector<double> parse_grid(Parser& p, const YAML::Node& node, const std::string& field) {
  std::vector<double> out;
  if (node.IsSequence()) {
    for (std::size_t i = 0; i < node.size(); ++i) {
      try {
        out.push_back(node[i].as<double>());
      } catch (const YAML::Exception&) {
        p.fail(field + "[" + std::to_string(i) + "]", "not a number");
      }
    }
    return out;
  }
  if (node.IsMap()) {
    p.check_keys(node, field, {"from", "to", "points", "spacing"});
    const auto from = p.get<double>(node, "from", field + ".from");
    const auto to = p.get<double>(node, "to", field + ".to");
    const auto pts = p.get<int>(node, "points", field + ".points");
    const auto spacing = p.get<std::string>(node, "spacing", field + ".spacing").value_or("log");
    if (!from || !to || !pts) {
      p.fail(field, "grid needs from, to and points");
      return out;
    }
    if (*pts < 2) {
      p.fail(field + ".points", "must be >= 2");
      return out;
    }
    if (spacing == "log") {
      if (!(*from > 0.0 && *to > 0.0)) {
        p.fail(field, "log spacing needs positive end points");
        return out;
      }
      const double a = std::log(*from), b = std::log(*to);
      for (int i = 0; i < *pts; ++i) out.push_back(std::exp(a + (b - a) * i / (*pts - 1)));
    } else if (spacing == "linear") {
      for (int i = 0; i < *pts; ++i) out.push_back(*from + (*to - *from) * i / (*pts - 1));
    } else {
      p.fail(field + ".spacing", "expected log or linear");
    }
    return out;
  }
  p.fail(field, "expected a list of values or a {from, to, points} grid");
  return out;
}

ScenarioConfig parse_node(const YAML::Node& root, const std::string& text, const fs::path& base_dir) {
  Parser p;
  ScenarioConfig cfg;
  cfg.source_text = text;
  p.check_keys(root, "",
               {"name", "solver", "mode", "units", "reference", "transitions", "n_atoms", "density",
                "lambda3_density", "sigma", "time", "integrator", "ensemble", "sweep", "output",
                "min_separation_fraction", "memory_cap_mb"});
  if (!p.issues.empty() && !root.IsMap()) throw ConfigValidationError(p.issues);

  cfg.name = p.get<std::string>(root, "name", "name").value_or("scenario");

  // Solvers: a single name or a list.
  if (const auto s = root["solver"]) {
    std::vector<std::string> names;
    if (s.IsSequence()) {
      for (const auto& e : s) names.push_back(e.as<std::string>());
    } else {
      names.push_back(s.as<std::string>());
    }
    for (const auto& n : names) {
      try {
        const auto k = solver_from_string(n);
        if (std::find(cfg.solvers.begin(), cfg.solvers.end(), k) == cfg.solvers.end()) cfg.solvers.push_back(k);
      } catch (const InvalidArgument& e) {
        p.fail("solver", e.what());
      }
    }
    if (names.empty()) p.fail("solver", "at least one solver is required");
  } else {
    p.fail("solver", "missing (exact, correlation, semiclassical or eigenmode)");
  }

  if (const auto m = p.get<std::string>(root, "mode", "mode")) {
    try {
      cfg.mode = coupling_mode_from_string(*m);
    } catch (const InvalidArgument& e) {
      p.fail("mode", e.what());
    }
  }

  const std::string units = p.get<std::string>(root, "units", "units").value_or("natural");
  if (units != "natural" && units != "si") p.fail("units", "expected natural or si");
  cfg.units.system = units;

  // Transitions in input units.
  struct RawTransition {
    std::string label;
    double gamma = 0.0, lambda = 0.0;
    Vec3 dipole = Vec3::UnitX();
  };
  std::vector<RawTransition> raw;
  if (const auto t = root["transitions"]; t && t.IsSequence() && t.size() > 0) {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const std::string f = "transitions[" + std::to_string(i) + "]";
      const auto& node = t[i];
      p.check_keys(node, f, {"label", "gamma", "lambda", "dipole"});
      if (!node.IsMap()) continue;
      RawTransition r;
      r.label = p.get<std::string>(node, "label", f + ".label").value_or("t" + std::to_string(i));
      if (!seen.insert(r.label).second) p.fail(f + ".label", "duplicate label '" + r.label + "'");
      const auto g = p.positive(node, "gamma", f + ".gamma");
      if (!node["gamma"]) p.fail(f + ".gamma", "missing");
      const auto l = p.positive(node, "lambda", f + ".lambda", true);
      if (!node["lambda"]) p.fail(f + ".lambda", "missing (use 0 for a non-interacting channel)");
      r.gamma = g.value_or(1.0);
      r.lambda = l.value_or(0.0);
      if (const auto d = node["dipole"]) {
        if (!d.IsSequence() || d.size() != 3) {
          p.fail(f + ".dipole", "expected three components");
        } else {
          try {
            r.dipole = Vec3(d[0].as<double>(), d[1].as<double>(), d[2].as<double>());
            if (!(r.dipole.norm() > 0.0)) p.fail(f + ".dipole", "must be non-zero");
          } catch (const YAML::Exception&) {
            p.fail(f + ".dipole", "components must be numbers");
          }
        }
      }
      raw.push_back(r);
    }
  } else {
    p.fail("transitions", "need a non-empty list of transitions");
  }

  // Reference transition: explicit, else first interacting, else first.
  std::size_t ref = 0;
  if (!raw.empty()) {
    bool found = false;
    if (const auto r = p.get<std::string>(root, "reference", "reference")) {
      for (std::size_t i = 0; i < raw.size(); ++i)
        if (raw[i].label == *r) {
          ref = i;
          found = true;
        }
      if (!found) p.fail("reference", "no transition labelled '" + *r + "'");
    } else {
      for (std::size_t i = 0; i < raw.size() && !found; ++i)
        if (raw[i].lambda > 0.0) {
          ref = i;
          found = true;
        }
    }
    cfg.units.reference = raw[ref].label;
    cfg.units.rate_unit = raw[ref].gamma;
    cfg.units.length_unit = raw[ref].lambda > 0.0 ? raw[ref].lambda : 1.0;
    cfg.units.time_unit = 1.0 / raw[ref].gamma;
    for (const auto& r : raw) {
      TransitionSpec s;
      s.label = r.label;
      s.gamma = r.gamma / cfg.units.rate_unit;
      s.lambda = r.lambda / cfg.units.length_unit;
      s.dipole_dir = r.dipole;
      cfg.transitions.push_back(s);
    }
  }
  const double len = cfg.units.length_unit;

  if (const auto n = p.get<int>(root, "n_atoms", "n_atoms")) {
    if (*n < 1) p.fail("n_atoms", "must be >= 1");
    cfg.n_atoms = *n;
  } else if (!root["n_atoms"]) {
    p.fail("n_atoms", "missing");
  }

  // Geometry: exactly one of density, lambda3_density and sigma.
  int geometry = 0;
  for (const char* k : {"density", "lambda3_density", "sigma"})
    if (root[k]) ++geometry;
  if (geometry > 1) p.fail("density", "give exactly one of density, lambda3_density and sigma, not several");
  if (geometry == 0 && !(root["sweep"] && root["sweep"]["axis"] &&
                         root["sweep"]["axis"].as<std::string>("") == "density"))
    p.fail("density", "missing: give one of density, lambda3_density or sigma");
  if (const auto d = p.positive(root, "density", "density")) {
    // si densities are per cm^3.
    const double per_len3 = units == "si" ? *d * 1e6 : *d;
    cfg.lambda3_density = per_len3 * len * len * len;
  }
  if (const auto d = p.positive(root, "lambda3_density", "lambda3_density")) cfg.lambda3_density = *d;
  if (const auto s = p.positive(root, "sigma", "sigma")) cfg.sigma = *s / len;

  const double tscale = 1.0 / cfg.units.time_unit;  // input time -> internal time
  if (const auto t = root["time"]) {
    p.check_keys(t, "time", {"dt", "t_max", "t_min", "stop_fraction"});
    if (const auto v = p.positive(t, "dt", "time.dt")) cfg.horizon.dt = *v * tscale;
    if (const auto v = p.positive(t, "t_max", "time.t_max")) cfg.horizon.t_cap = *v * tscale;
    if (const auto v = p.positive(t, "t_min", "time.t_min", true)) cfg.horizon.t_min = *v * tscale;
    if (const auto v = p.positive(t, "stop_fraction", "time.stop_fraction", true)) {
      if (*v >= 1.0) p.fail("time.stop_fraction", "must be < 1");
      cfg.horizon.stop_fraction = *v;
    }
  }
  if (const auto t = root["integrator"]) {
    p.check_keys(t, "integrator", {"rel_tol", "abs_tol", "min_step", "max_steps"});
    if (const auto v = p.positive(t, "rel_tol", "integrator.rel_tol")) cfg.integrator.rel_tol = *v;
    if (const auto v = p.positive(t, "abs_tol", "integrator.abs_tol")) cfg.integrator.abs_tol = *v;
    if (const auto v = p.positive(t, "min_step", "integrator.min_step")) cfg.integrator.min_step = *v;
    if (const auto v = p.get<std::size_t>(t, "max_steps", "integrator.max_steps")) cfg.integrator.max_steps = *v;
  }
  if (const auto v = p.positive(root, "min_separation_fraction", "min_separation_fraction", true))
    cfg.min_separation_fraction = *v;
  if (const auto v = p.positive(root, "memory_cap_mb", "memory_cap_mb"))
    cfg.memory_cap_bytes = static_cast<std::size_t>(*v * 1024.0 * 1024.0);

  if (const auto e = root["ensemble"]) {
    p.check_keys(e, "ensemble", {"n_runs", "base_seed"});
    if (const auto r = e["n_runs"]) {
      if (r.IsScalar() && r.as<std::string>() == "auto") {
        cfg.ensemble.auto_runs = true;
      } else if (const auto n = p.get<int>(e, "n_runs", "ensemble.n_runs")) {
        if (*n < 1) p.fail("ensemble.n_runs", "must be >= 1 or 'auto'");
        cfg.ensemble.n_runs = *n;
      }
    }
    if (const auto s = p.get<std::uint64_t>(e, "base_seed", "ensemble.base_seed")) cfg.ensemble.base_seed = *s;
  }

  if (const auto s = root["sweep"]) {
    p.check_keys(s, "sweep", {"axis", "values", "numerator", "denominator"});
    const auto axis = p.get<std::string>(s, "axis", "sweep.axis").value_or("");
    if (axis == "density") {
      cfg.sweep.axis = SweepAxis::kDensity;
    } else if (axis == "n_atoms") {
      cfg.sweep.axis = SweepAxis::kNAtoms;
    } else if (axis == "gamma_ratio") {
      cfg.sweep.axis = SweepAxis::kGammaRatio;
    } else {
      p.fail("sweep.axis", "expected density, n_atoms or gamma_ratio");
    }
    if (const auto v = s["values"]) {
      cfg.sweep.values = parse_grid(p, v, "sweep.values");
      if (cfg.sweep.values.size() < 2) p.fail("sweep.values", "a sweep needs at least two points");
      for (double x : cfg.sweep.values)
        if (!(x > 0.0)) p.fail("sweep.values", "values must be positive");
      if (cfg.sweep.axis == SweepAxis::kNAtoms)
        for (double x : cfg.sweep.values)
          if (x != std::floor(x)) p.fail("sweep.values", "n_atoms values must be integers");
    } else {
      p.fail("sweep.values", "missing");
    }
    if (cfg.sweep.axis == SweepAxis::kGammaRatio) {
      cfg.sweep.numerator = p.get<std::string>(s, "numerator", "sweep.numerator").value_or("");
      cfg.sweep.denominator = p.get<std::string>(s, "denominator", "sweep.denominator").value_or("");
      for (const auto* lbl : {&cfg.sweep.numerator, &cfg.sweep.denominator}) {
        const bool known = std::any_of(cfg.transitions.begin(), cfg.transitions.end(),
                                       [&](const TransitionSpec& t) { return t.label == *lbl; });
        if (!known) p.fail(lbl == &cfg.sweep.numerator ? "sweep.numerator" : "sweep.denominator",
                           "must name a transition");
      }
    }
  }

  if (const auto o = root["output"]) {
    p.check_keys(o, "output", {"dir", "per_run"});
    if (const auto d = p.get<std::string>(o, "dir", "output.dir")) cfg.output_dir = *d;
    cfg.write_runs = p.get<bool>(o, "per_run", "output.per_run").value_or(false);
  }
  if (cfg.output_dir.is_relative() && !base_dir.empty()) cfg.output_dir = base_dir / cfg.output_dir;

  // Cross-field checks.
  const bool has_eigen = std::find(cfg.solvers.begin(), cfg.solvers.end(), SolverKind::kEigenmode) != cfg.solvers.end();
  if (has_eigen && !cfg.transitions.empty() && !cfg.transitions[cfg.reference_index()].interacting())
    p.fail("solver", "the eigenmode solver needs an interacting reference transition");

  if (!p.issues.empty()) throw ConfigValidationError(p.issues);
  return cfg;
}

}  // namespace

ScenarioConfig parse_config(const std::string& text, const fs::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigValidationError(std::vector<ConfigIssue>{{"", std::string("YAML syntax error: ") + e.what()}});
  }
  if (!root || root.IsNull()) throw ConfigValidationError(std::vector<ConfigIssue>{{"", "empty config"}});
  try {
    return parse_node(root, text, base_dir);
  } catch (const YAML::Exception& e) {
    throw ConfigValidationError(std::vector<ConfigIssue>{{"", std::string("malformed config: ") + e.what()}});
  }
}

ScenarioConfig load_config(const fs::path& file) {
  std::ifstream is(file);
  if (!is) throw ConfigValidationError(std::vector<ConfigIssue>{{"", "cannot open config file " + file.string()}});
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

ValidationResult validate_config(const std::string& text) {
  ValidationResult r;
  try {
    r.config = parse_config(text);
  } catch (const ConfigValidationError& e) {
    r.issues = e.issues();
  }
  return r;
}

int effective_runs(const ScenarioConfig& cfg, const RunControl& ctl) {
  if (!(ctl.scale >= 1.0)) throw InvalidArgument("--scale must be >= 1");
  const int base = cfg.resolved_runs();
  return std::max(1, static_cast<int>(std::floor(base / ctl.scale)));
}

// ---------------------------------------------------------------------------
// Running

namespace {

std::vector<double> semiclassical_mu(const ScenarioConfig& cfg) {
  std::vector<double> mu;
  const double sigma = cfg.cloud_sigma();
  for (const auto& t : cfg.transitions) {
    if (!t.interacting()) {
      mu.push_back(0.0);
    } else if (cfg.mode == CouplingMode::kDicke) {
      mu.push_back(1.0);
    } else {
      mu.push_back(shape_mu(t.wavenumber() * sigma));
    }
  }
  return mu;
}

void finish_trajectory_result(SolverResult& out, std::vector<Trajectory>& runs, bool keep_runs) {
  out.mean = ensemble_mean(runs);
  out.peaks = peak_stats(out.mean);
  std::vector<double> peaks;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    peaks.push_back(peak_stats(runs[r]).total.gamma_prime_max);
    out.run_final_times.push_back(runs[r].t.empty() ? 0.0 : runs[r].t.back());
    for (const auto& w : runs[r].warnings) out.warnings.push_back("run " + std::to_string(r) + ": " + w);
  }
  double s = 0.0;
  for (double v : peaks) s += v;
  out.run_peak_mean = s / static_cast<double>(peaks.size());
  double s2 = 0.0;
  for (double v : peaks) s2 += (v - out.run_peak_mean) * (v - out.run_peak_mean);
  if (peaks.size() > 1)
    out.run_peak_stderr = std::sqrt(s2 / static_cast<double>(peaks.size() - 1) / static_cast<double>(peaks.size()));
  if (keep_runs) out.runs = std::move(runs);
}

}  // namespace

const SolverResult& PointResult::result(SolverKind s) const {
  for (const auto& r : solvers)
    if (r.solver == s) return r;
  throw InvalidArgument(std::string("no result for solver ") + to_string(s));
}

PointResult run_point(const ScenarioConfig& cfg, const RunControl& ctl, bool keep_runs) {
  if (cfg.solvers.empty()) throw ConfigError("no solver configured");
  if (cfg.n_atoms < 1) throw ConfigError("n_atoms must be >= 1");
  PointResult out;
  out.config = cfg;
  if (ctl.seed) out.config.ensemble.base_seed = *ctl.seed;
  const std::uint64_t base_seed = out.config.ensemble.base_seed;
  const int n_runs = effective_runs(cfg, ctl);
  const double sigma = cfg.cloud_sigma();
  for (int r = 0; r < n_runs; ++r) out.seeds.push_back(base_seed + static_cast<std::uint64_t>(r));

  // Refuse oversized exact runs before sampling anything.
  if (std::find(cfg.solvers.begin(), cfg.solvers.end(), SolverKind::kExact) != cfg.solvers.end()) {
    const auto levels = static_cast<int>(cfg.transitions.size()) + 1;
    const auto bytes = estimated_memory_bytes(count_basis_pairs(cfg.n_atoms, levels));
    if (bytes > cfg.memory_cap_bytes) (void)enumerate_basis(cfg.n_atoms, levels, cfg.memory_cap_bytes);
  }

  auto make_cloud = [&](std::size_t r) {
    return sample_cloud(cfg.n_atoms, sigma, out.seeds[r], cfg.min_separation_fraction * sigma);
  };
  const auto runs = static_cast<std::size_t>(n_runs);

  for (const auto solver : cfg.solvers) {
    SolverResult res;
    res.solver = solver;
    switch (solver) {
      case SolverKind::kSemiclassical: {
        const auto mu = semiclassical_mu(cfg);
        std::vector<RateChannel> ch;
        for (std::size_t a = 0; a < cfg.transitions.size(); ++a)
          ch.push_back({cfg.transitions[a].label, cfg.transitions[a].gamma, mu[a]});
        RateRunOptions ro{cfg.horizon, cfg.integrator};
        std::vector<Trajectory> one{evolve_rate_equations(cfg.n_atoms, ch, ro)};
        res.n_runs = 1;
        finish_trajectory_result(res, one, keep_runs);
        break;
      }
      case SolverKind::kEigenmode: {
        const auto& ref = cfg.transitions[cfg.reference_index()];
        std::vector<double> slots(runs);
        rethrow_first(parallel_for(runs, ctl.workers, [&](std::size_t r) {
          slots[r] = max_decay_rate(build_G(make_cloud(r), ref, cfg.mode)) / ref.gamma;
        }));
        res.n_runs = n_runs;
        double s = 0.0;
        for (double v : slots) s += v;
        res.mean_gamma_max = s / static_cast<double>(runs);
        double s2 = 0.0;
        for (double v : slots) s2 += (v - res.mean_gamma_max) * (v - res.mean_gamma_max);
        if (runs > 1) res.stderr_gamma_max = std::sqrt(s2 / static_cast<double>(runs - 1) / static_cast<double>(runs));
        break;
      }
      case SolverKind::kExact:
      case SolverKind::kCorrelation: {
        std::vector<Trajectory> trajs(runs);
        std::optional<LiouvilleBasis> basis;
        if (solver == SolverKind::kExact)
          basis = enumerate_basis(cfg.n_atoms, static_cast<int>(cfg.transitions.size()) + 1, cfg.memory_cap_bytes);
        auto errors = parallel_for(runs, ctl.workers, [&](std::size_t r) {
          const auto cloud = make_cloud(r);
          const auto set = build_coupling_set(cloud, cfg.transitions, cfg.mode);
          if (solver == SolverKind::kExact) {
            ExactRunOptions o;
            o.horizon = cfg.horizon;
            o.integrator = cfg.integrator;
            o.integrator.rel_tol = std::min(o.integrator.rel_tol, 1e-8);
            o.integrator.abs_tol = std::min(o.integrator.abs_tol, 1e-10);
            o.memory_cap_bytes = cfg.memory_cap_bytes;
            trajs[r] = evolve_exact(ExactState::inverted(*basis), set, cfg.transitions, o).trajectory;
          } else {
            CorrelationRunOptions o;
            o.horizon = cfg.horizon;
            o.integrator = cfg.integrator;
            trajs[r] = evolve_correlations(set, cfg.transitions, o).trajectory;
          }
        });
        for (std::size_t r = 0; r < runs; ++r) {
          if (!errors[r]) continue;
          try {
            std::rethrow_exception(errors[r]);
          } catch (const StiffnessError& e) {
            throw StiffnessError(std::string(to_string(solver)) + " run " + std::to_string(r) + " (seed " +
                                 std::to_string(out.seeds[r]) + "): " + e.what());
          }
        }
        res.n_runs = n_runs;
        finish_trajectory_result(res, trajs, keep_runs);
        break;
      }
    }
    out.solvers.push_back(std::move(res));
  }
  return out;
}

double headline(const SolverResult& r) {
  return r.solver == SolverKind::kEigenmode ? r.mean_gamma_max : r.peaks.total.gamma_prime_max;
}

SolverSummary summarize(const SolverResult& r) {
  SolverSummary s;
  s.solver = r.solver;
  s.n_runs = r.n_runs;
  s.headline = headline(r);
  if (r.solver == SolverKind::kEigenmode) return s;
  s.t_d = r.peaks.total.t_d;
  s.labels = r.mean.labels;
  const double n = static_cast<double>(r.mean.n_atoms);
  for (std::size_t a = 0; a < r.mean.n_channels(); ++a) {
    s.channel_peak.push_back(r.peaks.channel[a].gamma_prime_max);
    s.channel_t_d.push_back(r.peaks.channel[a].t_d);
    s.final_population.push_back(r.mean.n_channel[a].empty() ? 0.0 : r.mean.n_channel[a].back() / n);
  }
  return s;
}

namespace {

json summary_json(const SolverSummary& s) {
  json j;
  j["solver"] = to_string(s.solver);
  j["n_runs"] = s.n_runs;
  j["headline"] = s.headline;
  j["t_d"] = s.t_d;
  j["labels"] = s.labels;
  j["channel_peak"] = s.channel_peak;
  j["channel_t_d"] = s.channel_t_d;
  j["final_population"] = s.final_population;
  return j;
}

SolverSummary summary_from_json(const json& j) {
  SolverSummary s;
  s.solver = solver_from_string(j.at("solver").get<std::string>());
  s.n_runs = j.at("n_runs").get<int>();
  s.headline = j.at("headline").get<double>();
  s.t_d = j.at("t_d").get<double>();
  s.labels = j.at("labels").get<std::vector<std::string>>();
  s.channel_peak = j.at("channel_peak").get<std::vector<double>>();
  s.channel_t_d = j.at("channel_t_d").get<std::vector<double>>();
  s.final_population = j.at("final_population").get<std::vector<double>>();
  return s;
}

std::string to_text(const Trajectory& t) {
  std::ostringstream os;
  write_trajectory_csv(os, t);
  return os.str();
}

json peak_json(const PeakStats& p) {
  return {{"gamma_prime_max", p.gamma_prime_max}, {"t_d", p.t_d}, {"at_origin", p.at_origin}, {"at_end", p.at_end}};
}

void write_dataset(const PointResult& pr, const RunControl& ctl, const fs::path& dir,
                   std::optional<double> sweep_value) {
  const auto& cfg = pr.config;
  fs::create_directories(dir);
  json summary;
  summary["name"] = cfg.name;
  if (sweep_value) summary["sweep_value"] = *sweep_value;
  summary["n_atoms"] = cfg.n_atoms;
  summary["sigma"] = cfg.cloud_sigma();
  summary["lambda3_density"] = density_from_sigma(cfg.n_atoms, cfg.cloud_sigma());
  summary["solvers"] = json::array();
  json horizons = json::object();
  for (const auto& r : pr.solvers) {
    json s = summary_json(summarize(r));
    if (r.solver == SolverKind::kEigenmode) {
      s["mean_gamma_max"] = r.mean_gamma_max;
      s["stderr_gamma_max"] = r.stderr_gamma_max;
    } else {
      s["total_peak"] = peak_json(r.peaks.total);
      s["channel_peaks"] = json::array();
      for (const auto& c : r.peaks.channel) s["channel_peaks"].push_back(peak_json(c));
      s["run_peak_mean"] = r.run_peak_mean;
      s["run_peak_stderr"] = r.run_peak_stderr;
      s["warnings"] = r.warnings;
      write_text_atomic(dir / (std::string(to_string(r.solver)) + "_mean.csv"), to_text(r.mean));
      for (std::size_t k = 0; k < r.runs.size(); ++k) {
        std::ostringstream name;
        name << to_string(r.solver) << "_runs/run_" << std::setw(5) << std::setfill('0') << k << ".csv";
        write_text_atomic(dir / name.str(), to_text(r.runs[k]));
      }
      horizons[to_string(r.solver)] = r.run_final_times;
    }
    summary["solvers"].push_back(s);
  }
  write_text_atomic(dir / "summary.json", summary.dump(2) + "\n");

  json m;
  m["toolkit"] = "superrad";
  m["version"] = toolkit_version();
  m["name"] = cfg.name;
  m["config_hash"] = config_hash(cfg.source_text);
  m["config"] = cfg.source_text;
  if (sweep_value) m["sweep_value"] = *sweep_value;
  m["scale"] = ctl.scale;
  m["base_seed"] = cfg.ensemble.base_seed;
  m["seeds"] = pr.seeds;
  m["units"] = {{"system", cfg.units.system},
                {"reference_transition", cfg.units.reference},
                {"rate_unit", cfg.units.rate_unit},
                {"length_unit", cfg.units.length_unit},
                {"time_unit", cfg.units.time_unit},
                {"note", "internal rates in units of the reference gamma, lengths in reference "
                         "wavelengths, time in inverse reference gamma"}};
  m["horizon"] = {{"dt", cfg.horizon.dt}, {"t_cap", cfg.horizon.t_cap}, {"t_min", cfg.horizon.t_min},
                  {"stop_fraction", cfg.horizon.stop_fraction}};
  m["run_horizons"] = horizons;
  m["integrator"] = {{"method", "dopri5"}, {"rel_tol", cfg.integrator.rel_tol}, {"abs_tol", cfg.integrator.abs_tol}};
  write_text_atomic(dir / "manifest.json", m.dump(2) + "\n");
}

}  // namespace

PointResult run_scenario(const ScenarioConfig& cfg, const RunControl& ctl) {
  auto pr = run_point(cfg, ctl, cfg.write_runs);
  write_dataset(pr, ctl, cfg.output_dir, std::nullopt);
  return pr;
}

ScenarioConfig sweep_point_config(const ScenarioConfig& cfg, double value) {
  ScenarioConfig c = cfg;
  switch (cfg.sweep.axis) {
    case SweepAxis::kNone: throw ConfigError("config has no sweep axis");
    case SweepAxis::kDensity:
      c.lambda3_density = value;
      c.sigma.reset();
      break;
    case SweepAxis::kNAtoms:
      c.n_atoms = static_cast<int>(value);
      break;
    case SweepAxis::kGammaRatio: {
      double den = 0.0;
      for (const auto& t : c.transitions)
        if (t.label == cfg.sweep.denominator) den = t.gamma;
      for (auto& t : c.transitions)
        if (t.label == cfg.sweep.numerator) t.gamma = value * den;
      break;
    }
  }
  return c;
}

const SolverSummary& SweepPoint::of(SolverKind s) const {
  for (const auto& r : summary)
    if (r.solver == s) return r;
  throw InvalidArgument(std::string("sweep point has no result for ") + to_string(s));
}

std::vector<double> SweepResult::curve(SolverKind s) const {
  std::vector<double> out;
  for (const auto& p : points) out.push_back(p.ok ? p.of(s).headline : std::numeric_limits<double>::quiet_NaN());
  return out;
}

std::size_t argmax_index(const std::vector<double>& v) {
  if (v.empty()) throw InvalidArgument("argmax_index: empty input");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best] || std::isnan(v[best])) best = i;
  return best;
}

bool single_peaked(const std::vector<double>& v, double tol) {
  if (v.size() < 3) return false;
  for (double x : v)
    if (!std::isfinite(x)) return false;
  const std::size_t k = argmax_index(v);
  if (k == 0 || k + 1 == v.size()) return false;
  const double slack = tol * std::abs(v[k]);
  for (std::size_t i = 1; i <= k; ++i)
    if (v[i] < v[i - 1] - slack) return false;
  for (std::size_t i = k + 1; i < v.size(); ++i)
    if (v[i] > v[i - 1] + slack) return false;
  return true;
}

namespace {

void fill_argmax(SweepResult& out, const ScenarioConfig& cfg) {
  for (const auto s : cfg.solvers) {
    const auto c = out.curve(s);
    bool any = false;
    for (double x : c) any = any || std::isfinite(x);
    if (any) out.argmax.emplace_back(s, argmax_index(c));
  }
}

std::string point_hash(const ScenarioConfig& cfg, const RunControl& ctl, double value) {
  std::ostringstream os;
  os << cfg.source_text << "|value=" << std::setprecision(17) << value << "|scale=" << ctl.scale
     << "|seed=" << (ctl.seed ? std::to_string(*ctl.seed) : std::string("config"));
  return config_hash(os.str());
}

SweepResult sweep_impl(const ScenarioConfig& cfg, const RunControl& ctl, bool write) {
  if (cfg.sweep.axis == SweepAxis::kNone) throw ConfigError("config has no sweep section");
  if (cfg.sweep.values.size() < 2) throw ConfigError("sweep needs at least two points");
  SweepResult out;
  for (std::size_t i = 0; i < cfg.sweep.values.size(); ++i) {
    const double value = cfg.sweep.values[i];
    SweepPoint pt;
    pt.value = value;
    std::ostringstream dname;
    dname << "point_" << std::setw(3) << std::setfill('0') << i;
    const fs::path dir = cfg.output_dir / dname.str();
    const fs::path ckpt = dir / "checkpoint.json";
    const std::string hash = point_hash(cfg, ctl, value);
    if (write && ctl.resume && fs::exists(ckpt)) {
      try {
        std::ifstream is(ckpt);
        const auto j = json::parse(is);
        if (j.at("hash").get<std::string>() == hash && j.at("ok").get<bool>()) {
          pt.ok = true;
          pt.resumed = true;
          for (const auto& s : j.at("summary")) pt.summary.push_back(summary_from_json(s));
          out.points.push_back(std::move(pt));
          continue;
        }
      } catch (const std::exception&) {
        // Unreadable checkpoint: recompute the point.
      }
    }
    try {
      const auto pcfg = sweep_point_config(cfg, value);
      auto pr = run_point(pcfg, ctl, write && cfg.write_runs);
      for (const auto& r : pr.solvers) pt.summary.push_back(summarize(r));
      pt.ok = true;
      if (write) write_dataset(pr, ctl, dir, value);
      pt.result = std::move(pr);
    } catch (const std::exception& e) {
      pt.ok = false;
      pt.error = e.what();
    }
    if (write) {
      json j;
      j["hash"] = hash;
      j["value"] = value;
      j["ok"] = pt.ok;
      j["error"] = pt.error;
      j["summary"] = json::array();
      for (const auto& s : pt.summary) j["summary"].push_back(summary_json(s));
      write_text_atomic(ckpt, j.dump(2) + "\n");
    }
    out.points.push_back(std::move(pt));
  }
  fill_argmax(out, cfg);

  if (write) {
    std::ostringstream csv;
    csv << std::setprecision(12) << to_string(cfg.sweep.axis);
    if (cfg.sweep.axis == SweepAxis::kDensity) csv << ",one_over_lambda_n13";
    csv << ",solver,status,n_runs,headline,t_d";
    std::vector<std::string> labels;
    for (const auto& t : cfg.transitions) labels.push_back(t.label);
    for (const auto& l : labels) csv << ",peak_" << l << ",t_d_" << l << ",final_N_" << l;
    csv << ",error\n";
    for (const auto& p : out.points) {
      for (const auto s : cfg.solvers) {
        csv << p.value;
        if (cfg.sweep.axis == SweepAxis::kDensity) csv << ',' << 1.0 / std::cbrt(p.value);
        csv << ',' << to_string(s) << ',' << (p.ok ? "ok" : "failed");
        if (p.ok) {
          const auto& r = p.of(s);
          csv << ',' << r.n_runs << ',' << r.headline << ',' << r.t_d;
          for (std::size_t a = 0; a < labels.size(); ++a) {
            if (a < r.channel_peak.size())
              csv << ',' << r.channel_peak[a] << ',' << r.channel_t_d[a] << ',' << r.final_population[a];
            else
              csv << ",,,";
          }
          csv << ",\n";
        } else {
          csv << ",,,";
          for (std::size_t a = 0; a < labels.size(); ++a) csv << ",,,";
          std::string err = p.error;
          std::replace(err.begin(), err.end(), '"', '\'');
          csv << ",\"" << err << "\"\n";
        }
      }
    }
    write_text_atomic(cfg.output_dir / "sweep_summary.csv", csv.str());
    json j;
    j["name"] = cfg.name;
    j["axis"] = to_string(cfg.sweep.axis);
    j["values"] = cfg.sweep.values;
    j["argmax"] = json::array();
    for (const auto& [s, idx] : out.argmax)
      j["argmax"].push_back({{"solver", to_string(s)}, {"index", idx}, {"value", cfg.sweep.values[idx]}});
    j["failed_points"] = json::array();
    for (const auto& p : out.points)
      if (!p.ok) j["failed_points"].push_back({{"value", p.value}, {"error", p.error}});
    write_text_atomic(cfg.output_dir / "sweep_summary.json", j.dump(2) + "\n");
  }
  return out;
}

}  // namespace

SweepResult run_sweep(const ScenarioConfig& cfg, const RunControl& ctl) { return sweep_impl(cfg, ctl, true); }

SweepResult run_sweep_in_memory(const ScenarioConfig& cfg, const RunControl& ctl) {
  return sweep_impl(cfg, ctl, false);
}

}  // namespace superrad
