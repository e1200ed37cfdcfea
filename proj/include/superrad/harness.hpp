#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "superrad/couplings.hpp"
#include "superrad/exact_solver.hpp"
#include "superrad/trajectory.hpp"

namespace superrad {

enum class SolverKind { kExact, kCorrelation, kSemiclassical, kEigenmode };
const char* to_string(SolverKind s);
SolverKind solver_from_string(const std::string& name);

enum class SweepAxis { kNone, kDensity, kNAtoms, kGammaRatio };
const char* to_string(SweepAxis a);

// Factors that map the config's units onto the internal system, where the
// reference transition has gamma = 1 and lambda = 1.
struct UnitConversion {
  std::string system = "natural";
  std::string reference;     // label of the reference transition
  double rate_unit = 1.0;    // input rate per internal rate (s^-1 for si)
  double length_unit = 1.0;  // input length per internal length (m for si)
  double time_unit = 1.0;    // input time per internal time (s for si)
};

struct EnsembleSpec {
  int n_runs = 1;
  bool auto_runs = false;
  std::uint64_t base_seed = 1;
};

struct SweepSpec {
  SweepAxis axis = SweepAxis::kNone;
  std::vector<double> values;
  // gamma_ratio axis: gamma[numerator] = value * gamma[denominator].
  std::string numerator;
  std::string denominator;
};

// Fully validated scenario in internal units.
struct ScenarioConfig {
  std::string name = "scenario";
  std::vector<SolverKind> solvers;
  CouplingMode mode = CouplingMode::kFull;
  std::vector<TransitionSpec> transitions;
  int n_atoms = 0;
  // Exactly one geometry source survives validation.
  std::optional<double> lambda3_density;  // reference lambda^3 times density
  std::optional<double> sigma;            // in reference wavelengths
  HorizonOptions horizon;
  IntegratorOptions integrator;
  double min_separation_fraction = kDefaultMinSeparationFraction;
  std::size_t memory_cap_bytes = kDefaultMemoryCap;
  EnsembleSpec ensemble;
  SweepSpec sweep;
  std::filesystem::path output_dir = "out";
  bool write_runs = false;
  UnitConversion units;
  std::string source_text;  // raw config, kept for the manifest

  std::size_t reference_index() const;
  int resolved_runs() const;  // applies the automatic run count
  double cloud_sigma() const;  // in reference wavelengths
};

struct ConfigIssue {
  std::string field;
  std::string message;
};

// Thrown by parse_config; carries every problem found, one per field.
class ConfigValidationError : public ConfigError {
 public:
  explicit ConfigValidationError(std::vector<ConfigIssue> issues);
  const std::vector<ConfigIssue>& issues() const { return issues_; }

 private:
  std::vector<ConfigIssue> issues_;
};

/// Parses YAML text. `base_dir` anchors a relative output directory.
ScenarioConfig parse_config(const std::string& text,
                            const std::filesystem::path& base_dir = std::filesystem::path());
ScenarioConfig load_config(const std::filesystem::path& file);

/// Either a config or the list of problems; never throws on bad input.
struct ValidationResult {
  std::optional<ScenarioConfig> config;
  std::vector<ConfigIssue> issues;
};
ValidationResult validate_config(const std::string& text);

/// max(1, floor(15360 / N)).
int standard_runs(int n_atoms);

struct RunControl {
  int workers = 1;
  double scale = 1.0;  // ensemble reduction factor
  std::optional<std::uint64_t> seed;
  bool resume = true;
};

int effective_runs(const ScenarioConfig& cfg, const RunControl& ctl);

struct SolverResult {
  SolverKind solver = SolverKind::kCorrelation;
  int n_runs = 0;
  Trajectory mean;  // empty for the eigenmode solver
  PeakSummary peaks;
  // Mean and standard error over runs of the per-run total-rate peak.
  double run_peak_mean = 0.0;
  double run_peak_stderr = 0.0;
  // Eigenmode solver: ensemble mean of Gamma_max / Gamma_ref.
  double mean_gamma_max = 0.0;
  double stderr_gamma_max = 0.0;
  std::vector<double> run_final_times;
  std::vector<std::string> warnings;
  std::vector<Trajectory> runs;  // kept only when requested
};

struct PointResult {
  ScenarioConfig config;
  std::vector<std::uint64_t> seeds;
  std::vector<SolverResult> solvers;
  const SolverResult& result(SolverKind s) const;
};

/// Runs every configured solver at the config's single parameter point.
/// Clouds are shared across solvers: run r uses seed base_seed + r.
PointResult run_point(const ScenarioConfig& cfg, const RunControl& ctl, bool keep_runs = false);

/// run_point plus dataset emission (mean trajectories, optional per-run
/// trajectories, summary.json, manifest.json) under cfg.output_dir.
PointResult run_scenario(const ScenarioConfig& cfg, const RunControl& ctl);

// Scalars kept per solver in checkpoints and the sweep table.
struct SolverSummary {
  SolverKind solver = SolverKind::kCorrelation;
  int n_runs = 0;
  double headline = 0.0;  // see headline()
  double t_d = 0.0;
  std::vector<std::string> labels;
  std::vector<double> channel_peak;  // gamma'_(a)max
  std::vector<double> channel_t_d;
  std::vector<double> final_population;  // N_a / N at the last common sample
};

SolverSummary summarize(const SolverResult& r);

struct SweepPoint {
  double value = 0.0;
  bool ok = false;
  bool resumed = false;
  std::string error;
  std::vector<SolverSummary> summary;
  std::optional<PointResult> result;  // absent for resumed points
  const SolverSummary& of(SolverKind s) const;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  // Per solver: grid index of the largest headline value over the points
  // that succeeded.
  std::vector<std::pair<SolverKind, std::size_t>> argmax;
  // Headline values of one solver along the grid (NaN for failed points).
  std::vector<double> curve(SolverKind s) const;
};

/// Applies one sweep value to a copy of the config.
ScenarioConfig sweep_point_config(const ScenarioConfig& cfg, double value);

/// Runs every sweep point (each with its own subdirectory under
/// cfg.output_dir), checkpointing finished points atomically and skipping
/// them on rerun. A failing point records its error and the sweep carries on.
SweepResult run_sweep(const ScenarioConfig& cfg, const RunControl& ctl);

/// In-memory sweep without any file output.
SweepResult run_sweep_in_memory(const ScenarioConfig& cfg, const RunControl& ctl);

/// Index of the largest value; requires a non-empty input.
std::size_t argmax_index(const std::vector<double>& v);

/// True if v rises (weakly) to a single interior maximum and then falls.
/// Differences smaller than `tol` times the maximum are treated as ties.
bool single_peaked(const std::vector<double>& v, double tol = 0.0);

/// Headline scalar for a solver result: gamma'_max of the total rate, or
/// <Gamma_max> for the eigenmode solver.
double headline(const SolverResult& r);

void write_text_atomic(const std::filesystem::path& file, const std::string& text);
std::string config_hash(const std::string& text);
std::string toolkit_version();

}  // namespace superrad
