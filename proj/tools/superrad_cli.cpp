#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "superrad/errors.hpp"
#include "superrad/harness.hpp"
#include "superrad/oracle.hpp"
#include "superrad/parallel.hpp"

namespace {

using namespace superrad;

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kCapacity = 3, kNumerical = 4 };

struct Common {
  int workers = 1;
  std::optional<std::uint64_t> seed;
  double scale = 1.0;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--workers", c.workers, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", c.seed, "Override the base seed");
  cmd->add_option("--scale", c.scale, "Divide the ensemble size by this factor")->check(CLI::Range(1.0, 1e12));
  cmd->add_option("--out", c.out, "Override the output directory");
}

RunControl control(const Common& c) {
  RunControl ctl;
  ctl.workers = resolve_workers(c.workers);
  ctl.scale = c.scale;
  ctl.seed = c.seed;
  return ctl;
}

ScenarioConfig load(const std::string& file, const Common& c) {
  auto cfg = load_config(file);
  if (!c.out.empty()) cfg.output_dir = c.out;
  return cfg;
}

void print_summary(const SolverSummary& s) {
  std::printf("  %-13s runs=%d headline=%.6g", to_string(s.solver), s.n_runs, s.headline);
  if (s.solver != SolverKind::kEigenmode) {
    std::printf(" t_d=%.6g", s.t_d);
    for (std::size_t a = 0; a < s.labels.size(); ++a)
      std::printf(" [%s peak=%.6g final_N/N=%.6g]", s.labels[a].c_str(), s.channel_peak[a], s.final_population[a]);
  }
  std::printf("\n");
}

int cmd_run(const std::string& file, const Common& c) {
  const auto cfg = load(file, c);
  const auto pr = run_scenario(cfg, control(c));
  std::printf("%s: N=%d written to %s\n", cfg.name.c_str(), cfg.n_atoms, cfg.output_dir.string().c_str());
  for (const auto& r : pr.solvers) print_summary(summarize(r));
  return kOk;
}

int cmd_sweep(const std::string& file, const Common& c) {
  const auto cfg = load(file, c);
  const auto res = run_sweep(cfg, control(c));
  int failed = 0;
  for (const auto& p : res.points) {
    std::printf("%s=%.6g %s%s\n", to_string(cfg.sweep.axis), p.value, p.ok ? "ok" : "FAILED",
                p.resumed ? " (resumed)" : "");
    if (!p.ok) {
      ++failed;
      std::printf("  error: %s\n", p.error.c_str());
      continue;
    }
    for (const auto& s : p.summary) print_summary(s);
  }
  for (const auto& [s, i] : res.argmax)
    std::printf("argmax %s: %s=%.6g\n", to_string(s), to_string(cfg.sweep.axis), cfg.sweep.values[i]);
  std::printf("summary: %s\n", (cfg.output_dir / "sweep_summary.csv").string().c_str());
  return failed ? kNumerical : kOk;
}

int cmd_validate(const std::string& file) {
  std::ifstream is(file);
  if (!is) {
    std::fprintf(stderr, "cannot open %s\n", file.c_str());
    return kConfig;
  }
  std::stringstream ss;
  ss << is.rdbuf();
  const auto r = validate_config(ss.str());
  if (!r.config) {
    for (const auto& i : r.issues)
      std::fprintf(stderr, "%s: %s\n", i.field.empty() ? "<root>" : i.field.c_str(), i.message.c_str());
    return kConfig;
  }
  const auto& cfg = *r.config;
  std::printf("%s: valid\n", cfg.name.c_str());
  std::printf("  solvers:");
  for (auto s : cfg.solvers) std::printf(" %s", to_string(s));
  std::printf("\n  mode: %s\n  n_atoms: %d  runs: %d\n", to_string(cfg.mode), cfg.n_atoms, cfg.resolved_runs());
  std::printf("  units: %s, reference %s (rate unit %.6g, length unit %.6g, time unit %.6g)\n",
              cfg.units.system.c_str(), cfg.units.reference.c_str(), cfg.units.rate_unit, cfg.units.length_unit,
              cfg.units.time_unit);
  for (const auto& t : cfg.transitions)
    std::printf("  transition %s: gamma=%.6g lambda=%.6g\n", t.label.c_str(), t.gamma, t.lambda);
  if (cfg.lambda3_density || cfg.sigma) {
    const double sigma = cfg.cloud_sigma();
    std::printf("  sigma=%.6g lambda_ref^3 density=%.6g\n", sigma, density_from_sigma(cfg.n_atoms, sigma));
    for (const auto& t : cfg.transitions)
      if (t.interacting())
        std::printf("  lambda_%s^3 density=%.6g\n", t.label.c_str(),
                    density_from_sigma(cfg.n_atoms, sigma / t.lambda));
  }
  if (cfg.sweep.axis != SweepAxis::kNone)
    std::printf("  sweep over %s: %zu points\n", to_string(cfg.sweep.axis), cfg.sweep.values.size());
  return kOk;
}

int cmd_oracle(const std::vector<int>& n_atoms, const std::vector<double>& densities, int clouds,
               std::uint64_t seed, int workers) {
  const auto res = oracle_suite(n_atoms, densities, clouds, seed, resolve_workers(workers));
  int failed = 0;
  for (const auto& o : res) {
    std::printf("%s\n", describe(o).c_str());
    failed += o.pass ? 0 : 1;
  }
  std::printf("%zu cases, %d failed\n", res.size(), failed);
  return failed ? kNumerical : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collective emission of dipole-coupled atomic clouds"};
  app.set_version_flag("--version", toolkit_version());
  app.require_subcommand(1);

  Common common;
  std::string config;
  auto* run = app.add_subcommand("run", "Run one scenario and write its dataset");
  run->add_option("config", config, "Scenario file")->required();
  add_common(run, common);

  auto* sweep = app.add_subcommand("sweep", "Run a resumable parameter sweep");
  sweep->add_option("config", config, "Scenario file")->required();
  add_common(sweep, common);

  auto* validate = app.add_subcommand("validate", "Check a scenario file and echo the normalized values");
  validate->add_option("config", config, "Scenario file")->required();

  std::vector<int> o_n{4, 6, 8};
  std::vector<double> o_d{37, 125, 1000};
  int o_clouds = 20;
  std::uint64_t o_seed = 1;
  auto* oracle = app.add_subcommand("oracle-check", "Compare the exact and correlation solvers on random clouds");
  oracle->add_option("--n-atoms", o_n, "Atom numbers")->capture_default_str();
  oracle->add_option("--densities", o_d, "Values of lambda^3 density")->capture_default_str();
  oracle->add_option("--clouds", o_clouds, "Clouds per case")->capture_default_str()->check(CLI::PositiveNumber);
  oracle->add_option("--seed", o_seed, "Base seed")->capture_default_str();
  oracle->add_option("--workers", common.workers, "Worker threads (0 = all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*run) return cmd_run(config, common);
    if (*sweep) return cmd_sweep(config, common);
    if (*validate) return cmd_validate(config);
    if (*oracle) return cmd_oracle(o_n, o_d, o_clouds, o_seed, common.workers);
  } catch (const ConfigValidationError& e) {
    for (const auto& i : e.issues())
      std::cerr << (i.field.empty() ? "<root>" : i.field) << ": " << i.message << "\n";
    return kConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << "\n";
    return kCapacity;
  } catch (const StiffnessError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const AccuracyError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const CouplingOverflow& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const GenerationError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}
