#include "superrad/semiclassical.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/trapezoidal.hpp>

#include "superrad/errors.hpp"

namespace superrad {

namespace {

// mu = sum_k c_k u^k with u = (k sigma)^2.
constexpr int kTaylorTerms = 8;

std::array<double, kTaylorTerms> taylor_coefficients() {
  std::array<double, kTaylorTerms + 3> a{};
  a[0] = 1.0;
  for (std::size_t n = 1; n < a.size(); ++n) a[n] = a[n - 1] * -4.0 / static_cast<double>(n);
  std::array<double, kTaylorTerms> c{};
  for (std::size_t k = 0; k < c.size(); ++k) {
    const std::size_t n = k + 3;
    c[k] = -3.0 / 32.0 * (a[n] + 2.0 * a[n - 1] + 4.0 * a[n - 2]);
  }
  return c;
}

}  // namespace

double shape_mu(double k_sigma) {
  if (!(k_sigma > 0.0) || !std::isfinite(k_sigma))
    throw InvalidArgument("shape_mu: k_sigma must be positive and finite");
  const double u = k_sigma * k_sigma;
  if (k_sigma < 0.1) {
    static const auto c = taylor_coefficients();
    double mu = 0.0;
    for (int k = kTaylorTerms - 1; k >= 0; --k) mu = mu * u + c[static_cast<std::size_t>(k)];
    return mu;
  }
  // 1 - 2u + 4u^2 - e^{-4u}(1 + 2u + 4u^2) rewritten around expm1.
  const double e = std::expm1(-4.0 * u);
  const double bracket = -4.0 * u - e * (1.0 + 2.0 * u + 4.0 * u * u);
  return 3.0 / (32.0 * u * u * u) * bracket;
}

double k_sigma_for(int n_atoms, double lambda3_density) {
  if (n_atoms < 1 || !(lambda3_density > 0.0))
    throw InvalidArgument("k_sigma_for: need n_atoms >= 1 and a positive density");
  // sigma / lambda = (N / lambda^3 n)^{1/3} / (2 sqrt(pi)).
  const double sigma_over_lambda = std::cbrt(n_atoms / lambda3_density) / (2.0 * std::sqrt(kPi));
  return kTwoPi * sigma_over_lambda;
}

double shape_mu_quadrature(const Cloud& cloud, double k, const Vec3& dipole_dir,
                           const Vec3& k_hat_ref, const QuadratureOptions& opts) {
  namespace q = boost::math::quadrature;
  const auto n = cloud.size();
  if (n < 2) throw InvalidArgument("shape_mu_quadrature: need at least two atoms");
  if (!(k > 0.0)) throw InvalidArgument("shape_mu_quadrature: k must be positive");
  const Vec3 d = dipole_dir.normalized();
  const Vec3 kref = k_hat_ref.normalized();

  auto integrand = [&](double cos_t, double phi) {
    const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
    const Vec3 khat(sin_t * std::cos(phi), sin_t * std::sin(phi), cos_t);
    const Vec3 qv = k * (khat - kref);
    double re = 0.0, im = 0.0;
    for (const auto& r : cloud.positions) {
      const double ph = qv.dot(r);
      re += std::cos(ph);
      im += std::sin(ph);
    }
    const double kd = khat.dot(d);
    return (1.0 - kd * kd) * (re * re + im * im - static_cast<double>(n));
  };

  auto outer = [&](double cos_t) {
    return q::trapezoidal([&](double phi) { return integrand(cos_t, phi); }, 0.0, kTwoPi,
                          opts.rel_tol, static_cast<std::size_t>(opts.max_depth + 4));
  };
  double err = 0.0;
  const double total = q::gauss_kronrod<double, 31>::integrate(
      outer, -1.0, 1.0, static_cast<unsigned>(opts.max_depth), opts.rel_tol, &err);
  const double mu = 3.0 * total / (8.0 * kPi * static_cast<double>(n) * static_cast<double>(n - 1));
  const double scale = std::max(std::abs(total), 1e-12 * static_cast<double>(n * n));
  if (!std::isfinite(total) || err > 100.0 * opts.rel_tol * scale) {
    std::ostringstream msg;
    msg << "shape_mu_quadrature did not converge: estimate " << mu << ", relative error "
        << err / scale;
    throw AccuracyError(msg.str());
  }
  return mu;
}

double gamma_profile(int n_atoms, double gamma, double mu, double t) {
  if (n_atoms < 1 || !(gamma > 0.0) || !(mu >= 0.0) || !(t >= 0.0))
    throw InvalidArgument("gamma_profile: need N >= 1, gamma > 0, mu >= 0, t >= 0");
  const double n = static_cast<double>(n_atoms);
  const double nmu = n * mu;
  const double x = gamma * t * (1.0 + nmu);
  // e^x / (N mu + e^x)^2 = 1 / (N mu e^{-x/2} + e^{x/2})^2, free of overflow.
  const double q = (1.0 + nmu) / (nmu * std::exp(-0.5 * x) + std::exp(0.5 * x));
  return n * gamma * (q * q);
}

DelayTime delay_time(int n_atoms, double gamma, double mu) {
  if (n_atoms < 1 || !(gamma > 0.0) || !(mu > 0.0))
    throw InvalidArgument("delay_time: need N >= 1, gamma > 0 and N mu > 0");
  const double nmu = n_atoms * mu;
  DelayTime d;
  if (nmu <= 1.0) {
    d.at_origin = true;
    return d;
  }
  d.t_d = std::log(nmu) / (gamma * (1.0 + nmu));
  return d;
}

double peak_rate_per_atom(int n_atoms, double mu) {
  const double nmu = n_atoms * mu;
  if (nmu <= 1.0) return 1.0;
  return (1.0 + nmu) * (1.0 + nmu) / (4.0 * nmu);
}

Trajectory evolve_rate_equations(int n_atoms, const std::vector<RateChannel>& channels,
                                 const RateRunOptions& opts) {
  if (n_atoms < 1) throw InvalidArgument("evolve_rate_equations: n_atoms must be >= 1");
  if (channels.empty()) throw InvalidArgument("evolve_rate_equations: no channels");
  for (const auto& c : channels)
    if (!(c.gamma >= 0.0) || !(c.mu >= 0.0))
      throw InvalidArgument("evolve_rate_equations: channel '" + c.label + "' needs gamma >= 0, mu >= 0");

  const std::size_t nc = channels.size();
  using State = std::vector<double>;  // [N_e, N_1, ..., N_L]
  auto rates = [&](const State& x, std::vector<double>& r) {
    for (std::size_t a = 0; a < nc; ++a)
      r[a] = channels[a].gamma * (x[0] + channels[a].mu * x[0] * x[a + 1]);
  };

  Trajectory traj;
  traj.n_atoms = n_atoms;
  std::vector<std::string> labels;
  std::vector<double> g0;
  for (const auto& c : channels) {
    labels.push_back(c.label);
    g0.push_back(c.gamma);
  }
  traj.reset_channels(labels, g0);

  std::vector<double> r(nc), pops(nc);
  HorizonTracker horizon(opts.horizon);
  auto system = [&](const State& x, State& dxdt, double) {
    std::vector<double> rr(nc);
    rates(x, rr);
    dxdt[0] = 0.0;
    for (std::size_t a = 0; a < nc; ++a) {
      dxdt[a + 1] = rr[a];
      dxdt[0] -= rr[a];
    }
  };
  auto observer = [&](double t, const State& x) {
    rates(x, r);
    double total = 0.0;
    for (std::size_t a = 0; a < nc; ++a) {
      pops[a] = x[a + 1];
      total += r[a];
    }
    traj.append(t, x[0], pops, r);
    return horizon.keep_going(t, total);
  };
  State x0(nc + 1, 0.0);
  x0[0] = static_cast<double>(n_atoms);
  traj.stats = integrate_sampled(system, x0, opts.horizon.dt, opts.horizon.t_cap, opts.integrator, observer);
  return traj;
}

Trajectory evolve_three_level(int n_atoms, double gamma_g, double gamma_a, double mu_a,
                              const RateRunOptions& opts) {
  return evolve_rate_equations(n_atoms, {{"g", gamma_g, 0.0}, {"a", gamma_a, mu_a}}, opts);
}

}  // namespace superrad
