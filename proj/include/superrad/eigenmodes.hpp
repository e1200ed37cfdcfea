#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "superrad/couplings.hpp"

namespace superrad {

// Spectrum of the classical coupled-dipole matrix G for one cloud. Each
// eigenvalue is Gamma_j / 2 + i eps_j.
struct EigenmodeReport {
  std::vector<Complex> eigenvalues;
  double gamma_max = 0.0;  // 2 max_j Re(lambda_j)
  int n_atoms = 0;
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

/// G_mn = Gamma_mn / 2 + i f_mn for m != n, G_mm = Gamma / 2.
ComplexMatrix build_G(const Cloud& cloud, const TransitionSpec& transition,
                      CouplingMode mode = CouplingMode::kFull);

/// Eigenvalues from the general complex eigensolver (G is complex symmetric,
/// not Hermitian). Throws AccuracyError if the solver fails.
std::vector<Complex> decay_spectrum(const ComplexMatrix& g);
double max_decay_rate(const ComplexMatrix& g);

EigenmodeReport eigenmode_report(const Cloud& cloud, const TransitionSpec& transition,
                                 CouplingMode mode = CouplingMode::kFull);

struct GammaMaxRow {
  double lambda3_density = 0.0;
  double one_over_lambda_n13 = 0.0;
  double mean_gamma_max = 0.0;  // in units of the single-atom rate
  double stderr_gamma_max = 0.0;
  int n_runs = 0;
};

struct GammaMaxTable {
  int n_atoms = 0;
  std::vector<GammaMaxRow> rows;
  std::size_t argmax = 0;
  double lambda3_density_max = 0.0;
};

/// Ensemble mean of Gamma_max over clouds with seeds seed, seed + 1, ...
/// at every grid density (lambda^3 n, wavelength = transition.lambda).
/// Per-run results land in fixed slots, so the table does not depend on
/// `workers`.
GammaMaxTable averaged_gamma_max(int n_atoms, const std::vector<double>& lambda3_density_grid,
                                 int n_runs, std::uint64_t seed, const TransitionSpec& transition,
                                 CouplingMode mode = CouplingMode::kFull, int workers = 1);

void write_gamma_max_csv(std::ostream& os, const GammaMaxTable& table);

}  // namespace superrad
