#pragma once

#include <vector>

#include "superrad/cloud.hpp"
#include "superrad/trajectory.hpp"

namespace superrad {

/// Shape parameter of an isotropic Gaussian cloud of x-polarised atoms as a
/// function of k*sigma. Below k*sigma = 0.1 a Taylor series in (k sigma)^2
/// replaces the closed form.
double shape_mu(double k_sigma);

/// k*sigma for a cloud of `n_atoms` whose dimensionless density is
/// lambda^3 * density.
double k_sigma_for(int n_atoms, double lambda3_density);

struct QuadratureOptions {
  double rel_tol = 1e-8;
  int max_depth = 12;
};

/// Discrete shape parameter: the solid-angle integral of
/// (1 - (k.d)^2) sum_{m != n} exp(i k (khat - khat_ref).(r_m - r_n)),
/// scaled by 3 / (8 pi N (N - 1)). Throws AccuracyError when the nested
/// adaptive quadrature does not converge.
double shape_mu_quadrature(const Cloud& cloud, double k, const Vec3& dipole_dir = Vec3::UnitX(),
                           const Vec3& k_hat_ref = Vec3::UnitZ(), const QuadratureOptions& opts = {});

/// Emission rate of the two-level rate equation
/// dN_e/dt = -Gamma (N_e + mu N_e N_g) started from N_e = N.
double gamma_profile(int n_atoms, double gamma, double mu, double t);

struct DelayTime {
  double t_d = 0.0;
  // N mu <= 1: the emission rate is largest at t = 0.
  bool at_origin = false;
};

DelayTime delay_time(int n_atoms, double gamma, double mu);

/// gamma(t_d) / (N Gamma); 1 when the maximum is at the origin.
double peak_rate_per_atom(int n_atoms, double mu);

// One decay channel of the rate-equation model. `mu` = 0 turns off the
// collective term.
struct RateChannel {
  std::string label;
  double gamma = 1.0;
  double mu = 0.0;
};

struct RateRunOptions {
  HorizonOptions horizon;
  IntegratorOptions integrator;
};

/// dN_e/dt = -sum_a Gamma_a (N_e + mu_a N_e N_a), dN_a/dt = Gamma_a (N_e + mu_a N_e N_a)
/// from N_e = N. The trajectory's gamma[a] is dN_a/dt.
Trajectory evolve_rate_equations(int n_atoms, const std::vector<RateChannel>& channels,
                                 const RateRunOptions& opts);

/// Three-level case: channel "g" without collective term and channel "a"
/// with shape parameter mu_a.
Trajectory evolve_three_level(int n_atoms, double gamma_g, double gamma_a, double mu_a,
                              const RateRunOptions& opts);

}  // namespace superrad
