#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "superrad/ode.hpp"

namespace superrad {

// Sampled observables of one evolution (or of an ensemble mean).
// `gamma[a][k]` is the photon emission rate dN_a/dt on channel a at t[k].
struct Trajectory {
  int n_atoms = 0;
  std::vector<std::string> labels;
  std::vector<double> channel_gamma;  // single-atom rate per channel
  std::vector<double> t;
  std::vector<double> n_excited;
  std::vector<std::vector<double>> n_channel;
  std::vector<std::vector<double>> gamma;
  std::vector<std::string> warnings;
  IntegrationStats stats;

  std::size_t n_samples() const { return t.size(); }
  std::size_t n_channels() const { return labels.size(); }
  std::vector<double> total_gamma() const;
  std::size_t channel_index(const std::string& label) const;

  void reset_channels(const std::vector<std::string>& channel_labels,
                      const std::vector<double>& single_atom_rates);
  void append(double time, double ne, std::span<const double> populations,
              std::span<const double> rates);
};

void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

// Sample-wise mean over runs sharing the same sample spacing. Runs may stop at
// different horizons; the mean covers the common prefix.
Trajectory ensemble_mean(std::span<const Trajectory> runs);

// Sampled-horizon rule shared by the ODE-based solvers: integrate until the
// total emission rate has passed its maximum and fallen below
// stop_fraction * maximum (and t >= t_min), or until t_cap.
struct HorizonOptions {
  double dt = 0.01;
  double t_min = 0.0;
  double t_cap = 1e4;
  double stop_fraction = 0.01;
};

class HorizonTracker {
 public:
  explicit HorizonTracker(const HorizonOptions& opts) : opts_(opts) {}
  // Returns false once the horizon rule is satisfied.
  bool keep_going(double t, double total_rate);

 private:
  HorizonOptions opts_;
  double peak_ = 0.0;
  bool passed_peak_ = false;
};

struct PeakStats {
  double gamma_prime_max = 0.0;  // rate at the peak / (N * normalisation rate)
  double t_d = 0.0;
  bool at_origin = false;  // emission is maximal at t = 0 (no delayed peak)
  bool at_end = false;     // maximum on the last sample: horizon too short
};

/// Locates the maximum of a sampled rate curve by fitting a parabola through
/// the three samples bracketing the discrete maximum.
PeakStats locate_peak(std::span<const double> t, std::span<const double> rate, double norm);

struct PeakSummary {
  std::vector<PeakStats> channel;  // normalised by N * Gamma_channel
  PeakStats total;                 // normalised by N (internal rate unit)
};

PeakSummary peak_stats(const Trajectory& traj);

}  // namespace superrad
