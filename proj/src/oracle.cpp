#include "superrad/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "superrad/cloud.hpp"
#include "superrad/correlation_solver.hpp"
#include "superrad/exact_solver.hpp"
#include "superrad/parallel.hpp"

namespace superrad {

OracleOutcome compare_exact_correlation(const OracleCase& c, const OracleTolerance& tol) {
  const std::vector<TransitionSpec> tr{{"g", 1.0, 1.0, Vec3::UnitX()}};
  const auto cloud = sample_cloud(c.n_atoms, sigma_from_density(c.n_atoms, c.lambda3_density), c.seed);
  const auto set = build_coupling_set(cloud, tr, c.mode);

  HorizonOptions h;
  h.stop_fraction = 0.5;
  ExactRunOptions eo;
  eo.horizon = h;
  CorrelationRunOptions co;
  co.horizon = h;
  co.integrator = {1e-9, 1e-12};
  const auto ex = evolve_exact(set, tr, eo).trajectory;
  const auto cr = evolve_correlations(set, tr, co).trajectory;

  OracleOutcome out;
  out.input = c;
  // The comparison window runs through the later of the two emission peaks.
  const auto pe = peak_stats(ex).total;
  const auto pc = peak_stats(cr).total;
  out.t_peak = std::max(pe.at_origin ? 0.0 : pe.t_d, pc.at_origin ? 0.0 : pc.t_d);
  const double n = c.n_atoms;
  const std::size_t m = std::min(ex.n_samples(), cr.n_samples());
  bool early = true;
  for (std::size_t k = 0; k < m; ++k) {
    const double dev = std::abs(cr.n_excited[k] - ex.n_excited[k]) / n;
    if (early && (n - ex.n_excited[k]) / n >= tol.early_fraction) early = false;
    if (early) {
      out.early_deviation = std::max(out.early_deviation, dev);
      out.t_early = ex.t[k];
    }
    if (ex.t[k] <= out.t_peak + 0.5 * h.dt) out.peak_deviation = std::max(out.peak_deviation, dev);
  }
  out.pass = out.early_deviation < tol.early && out.peak_deviation < tol.through_peak;
  return out;
}

std::vector<OracleOutcome> oracle_suite(const std::vector<int>& n_atoms,
                                        const std::vector<double>& densities, int n_clouds,
                                        std::uint64_t base_seed, int workers,
                                        const OracleTolerance& tol) {
  std::vector<OracleCase> cases;
  for (int n : n_atoms)
    for (double d : densities)
      for (int r = 0; r < n_clouds; ++r)
        cases.push_back({n, d, base_seed + static_cast<std::uint64_t>(r), CouplingMode::kFull});
  std::vector<OracleOutcome> out(cases.size());
  rethrow_first(parallel_for(cases.size(), workers,
                             [&](std::size_t i) { out[i] = compare_exact_correlation(cases[i], tol); }));
  return out;
}

std::string describe(const OracleOutcome& o) {
  std::ostringstream os;
  os << "N=" << o.input.n_atoms << " lambda3_density=" << o.input.lambda3_density << " seed=" << o.input.seed
     << " early_dev=" << o.early_deviation << " (t<=" << o.t_early << ") peak_dev=" << o.peak_deviation
     << " (t_peak=" << o.t_peak << ") " << (o.pass ? "PASS" : "FAIL");
  return os.str();
}

}  // namespace superrad
