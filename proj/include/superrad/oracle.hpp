#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "superrad/couplings.hpp"

namespace superrad {

// Exact-versus-correlation comparison of N_e(t) for one two-level cloud.
struct OracleCase {
  int n_atoms = 4;
  double lambda3_density = 125.0;
  std::uint64_t seed = 1;
  CouplingMode mode = CouplingMode::kFull;
};

struct OracleTolerance {
  // |N_e^corr - N_e^exact| / N while fewer than `early_fraction` of the
  // atoms have decayed.
  double early = 1e-3;
  double early_fraction = 0.05;
  // Same deviation from t = 0 through the later of the two emission peaks.
  double through_peak = 0.03;
};

struct OracleOutcome {
  OracleCase input;
  double early_deviation = 0.0;
  double peak_deviation = 0.0;
  double t_early = 0.0;  // last sample of the early window
  double t_peak = 0.0;   // end of the through-peak window
  bool pass = false;
};

OracleOutcome compare_exact_correlation(const OracleCase& c, const OracleTolerance& tol = {});

/// Every (N, density, seed) combination with seeds base_seed + r for r < n_clouds.
std::vector<OracleOutcome> oracle_suite(const std::vector<int>& n_atoms,
                                        const std::vector<double>& densities, int n_clouds,
                                        std::uint64_t base_seed, int workers,
                                        const OracleTolerance& tol = {});

std::string describe(const OracleOutcome& o);

}  // namespace superrad
