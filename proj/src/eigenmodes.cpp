#include "superrad/eigenmodes.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include <complex>
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include "superrad/errors.hpp"
#include "superrad/parallel.hpp"

namespace superrad {

ComplexMatrix build_G(const Cloud& cloud, const TransitionSpec& transition, CouplingMode mode) {
  if (cloud.size() < 1) throw InvalidArgument("build_G: empty cloud");
  const auto set = build_coupling_set(cloud, {transition}, mode);
  ComplexMatrix g = set.g.front();
  g.diagonal().setConstant(Complex(0.5 * transition.gamma, 0.0));
  return g;
}

std::vector<Complex> decay_spectrum(const ComplexMatrix& g) {
  if (g.rows() != g.cols() || g.rows() == 0) throw InvalidArgument("decay_spectrum: need a square matrix");
  // LAPACK zgeev: Eigen's complex Schur iteration stalls on the rank-one
  // Dicke matrix for N >= 80.
  ComplexMatrix a = g;
  const auto n = static_cast<lapack_int>(a.rows());
  std::vector<Complex> ev(static_cast<std::size_t>(n));
  const lapack_int info =
      LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'N', n, a.data(), n, ev.data(), nullptr, 1, nullptr, 1);
  if (info != 0) throw AccuracyError("zgeev failed with info " + std::to_string(info));
  return ev;
}

double max_decay_rate(const ComplexMatrix& g) {
  const auto ev = decay_spectrum(g);
  double best = -HUGE_VAL;
  for (const auto& l : ev) best = std::max(best, l.real());
  return 2.0 * best;
}

EigenmodeReport eigenmode_report(const Cloud& cloud, const TransitionSpec& transition, CouplingMode mode) {
  EigenmodeReport r;
  r.eigenvalues = decay_spectrum(build_G(cloud, transition, mode));
  double best = -HUGE_VAL;
  for (const auto& l : r.eigenvalues) best = std::max(best, l.real());
  r.gamma_max = 2.0 * best;
  r.n_atoms = static_cast<int>(cloud.size());
  r.sigma = cloud.sigma;
  r.seed = cloud.seed;
  return r;
}

GammaMaxTable averaged_gamma_max(int n_atoms, const std::vector<double>& lambda3_density_grid,
                                 int n_runs, std::uint64_t seed, const TransitionSpec& transition,
                                 CouplingMode mode, int workers) {
  if (n_runs < 1) throw InvalidArgument("averaged_gamma_max: n_runs must be >= 1");
  if (lambda3_density_grid.empty()) throw InvalidArgument("averaged_gamma_max: empty density grid");
  if (!transition.interacting()) throw InvalidArgument("averaged_gamma_max: transition needs lambda > 0");
  const std::size_t nd = lambda3_density_grid.size();
  const auto runs = static_cast<std::size_t>(n_runs);
  const double lam = transition.lambda;
  std::vector<double> slots(nd * runs, 0.0);
  auto errors = parallel_for(nd * runs, workers, [&](std::size_t job) {
    const std::size_t d = job / runs, r = job % runs;
    const double density = lambda3_density_grid[d] / (lam * lam * lam);
    const auto cloud = sample_cloud(n_atoms, sigma_from_density(n_atoms, density), seed + r);
    slots[job] = max_decay_rate(build_G(cloud, transition, mode)) / transition.gamma;
  });
  rethrow_first(errors);

  GammaMaxTable table;
  table.n_atoms = n_atoms;
  double best = -HUGE_VAL;
  for (std::size_t d = 0; d < nd; ++d) {
    GammaMaxRow row;
    row.lambda3_density = lambda3_density_grid[d];
    row.one_over_lambda_n13 = 1.0 / std::cbrt(row.lambda3_density);
    row.n_runs = n_runs;
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t r = 0; r < runs; ++r) sum += slots[d * runs + r];
    row.mean_gamma_max = sum / static_cast<double>(runs);
    for (std::size_t r = 0; r < runs; ++r) {
      const double dv = slots[d * runs + r] - row.mean_gamma_max;
      sum2 += dv * dv;
    }
    if (runs > 1)
      row.stderr_gamma_max = std::sqrt(sum2 / static_cast<double>(runs - 1) / static_cast<double>(runs));
    if (row.mean_gamma_max > best) {
      best = row.mean_gamma_max;
      table.argmax = d;
    }
    table.rows.push_back(row);
  }
  table.lambda3_density_max = table.rows[table.argmax].lambda3_density;
  return table;
}

void write_gamma_max_csv(std::ostream& os, const GammaMaxTable& table) {
  os << "density,one_over_lambda_n13,mean_gamma_max,stderr,n_runs\n" << std::setprecision(12);
  for (const auto& r : table.rows)
    os << r.lambda3_density << ',' << r.one_over_lambda_n13 << ',' << r.mean_gamma_max << ','
       << r.stderr_gamma_max << ',' << r.n_runs << '\n';
}

}  // namespace superrad
