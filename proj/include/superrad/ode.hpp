#pragma once

#include <cmath>
#include <cstddef>
#include <sstream>

#include <boost/numeric/odeint.hpp>

#include "superrad/errors.hpp"

namespace superrad {

struct IntegratorOptions {
  double rel_tol = 1e-6;
  double abs_tol = 1e-9;
  double initial_step = 1e-4;
  // Accepted steps shorter than this raise StiffnessError.
  double min_step = 1e-13;
  std::size_t max_steps = 100'000'000;
};

struct IntegrationStats {
  std::size_t steps = 0;
  std::size_t rhs_calls = 0;
  double smallest_step = 0.0;
  double final_time = 0.0;
};

// Drives an adaptive Dormand-Prince 5(4) pair with dense output and hands the
// interpolated state to `observer(t, x)` at t = 0, dt, 2 dt, ... until the
// observer returns false or t would exceed t_cap.
//
// `system(x, dxdt, t)` follows the odeint signature.
template <class State, class System, class Observer>
IntegrationStats integrate_sampled(System&& system, State x0, double dt_sample, double t_cap,
                                   const IntegratorOptions& opts, Observer&& observer) {
  namespace odeint = boost::numeric::odeint;
  if (!(dt_sample > 0.0)) throw InvalidArgument("integrate_sampled: sample spacing must be > 0");

  IntegrationStats stats;
  auto counted = [&](const State& x, State& dxdt, double t) {
    ++stats.rhs_calls;
    system(x, dxdt, t);
  };

  if (!observer(0.0, static_cast<const State&>(x0))) return stats;

  auto stepper = odeint::make_dense_output(opts.abs_tol, opts.rel_tol,
                                           odeint::runge_kutta_dopri5<State>());
  stepper.initialize(x0, 0.0, std::min(opts.initial_step, dt_sample));

  State x = x0;
  std::size_t next_sample = 1;
  stats.smallest_step = HUGE_VAL;
  while (true) {
    std::pair<double, double> span;
    try {
      span = stepper.do_step(counted);
    } catch (const odeint::step_adjustment_error& e) {
      std::ostringstream msg;
      msg << "step size control failed near t=" << stepper.current_time() << ": " << e.what();
      throw StiffnessError(msg.str());
    }
    ++stats.steps;
    const double h = span.second - span.first;
    stats.smallest_step = std::min(stats.smallest_step, h);
    stats.final_time = span.second;
    if (h < opts.min_step) {
      std::ostringstream msg;
      msg << "step size underflow: h=" << h << " at t=" << span.first
          << " (min_step=" << opts.min_step << "); the coupling spectrum is too stiff for the "
          << "explicit integrator";
      throw StiffnessError(msg.str());
    }
    if (stats.steps > opts.max_steps) {
      std::ostringstream msg;
      msg << "exceeded max_steps=" << opts.max_steps << " at t=" << span.second;
      throw StiffnessError(msg.str());
    }
    while (true) {
      const double ts = static_cast<double>(next_sample) * dt_sample;
      if (ts > span.second) break;
      if (ts > t_cap) return stats;
      stepper.calc_state(ts, x);
      ++next_sample;
      if (!observer(ts, static_cast<const State&>(x))) return stats;
    }
    if (span.second >= t_cap) return stats;
  }
}

}  // namespace superrad
