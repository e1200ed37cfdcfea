#include "superrad/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "superrad/errors.hpp"

namespace superrad {

std::vector<double> Trajectory::total_gamma() const {
  std::vector<double> out(t.size(), 0.0);
  for (const auto& g : gamma)
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += g[k];
  return out;
}

std::size_t Trajectory::channel_index(const std::string& label) const {
  const auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) throw InvalidArgument("trajectory has no channel '" + label + "'");
  return static_cast<std::size_t>(it - labels.begin());
}

void Trajectory::reset_channels(const std::vector<std::string>& channel_labels,
                                const std::vector<double>& single_atom_rates) {
  labels = channel_labels;
  channel_gamma = single_atom_rates;
  t.clear();
  n_excited.clear();
  n_channel.assign(labels.size(), {});
  gamma.assign(labels.size(), {});
}

void Trajectory::append(double time, double ne, std::span<const double> populations,
                        std::span<const double> rates) {
  t.push_back(time);
  n_excited.push_back(ne);
  for (std::size_t a = 0; a < labels.size(); ++a) {
    n_channel[a].push_back(populations[a]);
    gamma[a].push_back(rates[a]);
  }
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "t,N_e";
  for (const auto& l : traj.labels) os << ",N_" << l;
  for (const auto& l : traj.labels) os << ",gamma_" << l;
  os << ",gamma_total\n";
  const auto total = traj.total_gamma();
  os << std::setprecision(12);
  for (std::size_t k = 0; k < traj.t.size(); ++k) {
    os << traj.t[k] << ',' << traj.n_excited[k];
    for (const auto& n : traj.n_channel) os << ',' << n[k];
    for (const auto& g : traj.gamma) os << ',' << g[k];
    os << ',' << total[k] << '\n';
  }
}

Trajectory ensemble_mean(std::span<const Trajectory> runs) {
  if (runs.empty()) throw InvalidArgument("ensemble_mean: no runs");
  std::size_t len = runs.front().n_samples();
  for (const auto& r : runs) {
    if (r.labels != runs.front().labels) throw InvalidArgument("ensemble_mean: channel mismatch");
    if (r.n_atoms != runs.front().n_atoms) throw InvalidArgument("ensemble_mean: atom number mismatch");
    len = std::min(len, r.n_samples());
  }
  Trajectory mean;
  mean.n_atoms = runs.front().n_atoms;
  mean.reset_channels(runs.front().labels, runs.front().channel_gamma);
  const double w = 1.0 / static_cast<double>(runs.size());
  const std::size_t nc = mean.labels.size();
  mean.t.assign(runs.front().t.begin(), runs.front().t.begin() + static_cast<long>(len));
  mean.n_excited.assign(len, 0.0);
  for (std::size_t a = 0; a < nc; ++a) {
    mean.n_channel[a].assign(len, 0.0);
    mean.gamma[a].assign(len, 0.0);
  }
  // Summation in run-index order keeps the mean independent of worker scheduling.
  for (const auto& r : runs) {
    for (std::size_t k = 0; k < len; ++k) {
      mean.n_excited[k] += w * r.n_excited[k];
      for (std::size_t a = 0; a < nc; ++a) {
        mean.n_channel[a][k] += w * r.n_channel[a][k];
        mean.gamma[a][k] += w * r.gamma[a][k];
      }
    }
    mean.stats.steps += r.stats.steps;
    mean.stats.rhs_calls += r.stats.rhs_calls;
  }
  return mean;
}

bool HorizonTracker::keep_going(double t, double total_rate) {
  if (total_rate > peak_) {
    peak_ = total_rate;
  } else if (total_rate < peak_) {
    passed_peak_ = true;
  }
  if (t >= opts_.t_cap) return false;
  if (t < opts_.t_min) return true;
  return !(passed_peak_ && total_rate <= opts_.stop_fraction * peak_);
}

PeakStats locate_peak(std::span<const double> t, std::span<const double> rate, double norm) {
  if (t.size() != rate.size() || t.empty()) throw InvalidArgument("locate_peak: bad sample arrays");
  if (!(norm > 0.0)) throw InvalidArgument("locate_peak: normalisation must be > 0");
  const auto k = static_cast<std::size_t>(std::max_element(rate.begin(), rate.end()) - rate.begin());
  PeakStats p;
  if (k == 0) {
    p.at_origin = true;
    p.t_d = t[0];
    p.gamma_prime_max = rate[0] / norm;
    return p;
  }
  if (k + 1 == rate.size()) {
    p.at_end = true;
    p.t_d = t[k];
    p.gamma_prime_max = rate[k] / norm;
    return p;
  }
  // Parabola through (t[k-1], t[k], t[k+1]); handles non-uniform spacing.
  const double x0 = t[k - 1], x1 = t[k], x2 = t[k + 1];
  const double y0 = rate[k - 1], y1 = rate[k], y2 = rate[k + 1];
  const double d01 = (y1 - y0) / (x1 - x0);
  const double d12 = (y2 - y1) / (x2 - x1);
  const double a = (d12 - d01) / (x2 - x0);
  if (a >= 0.0) {
    p.t_d = x1;
    p.gamma_prime_max = y1 / norm;
    return p;
  }
  // Newton form y0 + d01 (x - x0) + a (x - x0)(x - x1).
  const double tv = std::clamp(0.5 * (x0 + x1) - d01 / (2.0 * a), x0, x2);
  p.t_d = tv;
  p.gamma_prime_max = (y0 + d01 * (tv - x0) + a * (tv - x0) * (tv - x1)) / norm;
  return p;
}

PeakSummary peak_stats(const Trajectory& traj) {
  PeakSummary s;
  const double n = static_cast<double>(traj.n_atoms);
  for (std::size_t a = 0; a < traj.n_channels(); ++a) {
    const double rate = traj.channel_gamma[a] > 0.0 ? traj.channel_gamma[a] : 1.0;
    s.channel.push_back(locate_peak(traj.t, traj.gamma[a], n * rate));
  }
  const auto total = traj.total_gamma();
  s.total = locate_peak(traj.t, total, n);
  return s;
}

}  // namespace superrad
