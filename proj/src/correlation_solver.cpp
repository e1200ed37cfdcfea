#include "superrad/correlation_solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "superrad/errors.hpp"

namespace superrad {

CorrelationState::CorrelationState(int n_atoms, int n_channels)
    : n_atoms_(n_atoms), n_channels_(n_channels) {
  if (n_atoms < 1 || n_channels < 1)
    throw InvalidArgument("CorrelationState: need at least one atom and one channel");
  data_.assign(static_cast<std::size_t>(n_channels) * n_atoms * n_atoms, Complex(0.0, 0.0));
}

Eigen::Map<ComplexMatrix> CorrelationState::channel(int a) {
  return {data_.data() + static_cast<std::size_t>(a) * n_atoms_ * n_atoms_, n_atoms_, n_atoms_};
}

Eigen::Map<const ComplexMatrix> CorrelationState::channel(int a) const {
  return {data_.data() + static_cast<std::size_t>(a) * n_atoms_ * n_atoms_, n_atoms_, n_atoms_};
}

double CorrelationState::excited_population(int i) const {
  double pe = 1.0;
  for (int a = 0; a < n_channels_; ++a) pe -= population(a, i);
  return pe;
}

double CorrelationState::n_channel(int a) const { return channel(a).diagonal().real().sum(); }

double CorrelationState::n_excited() const {
  double total = 0.0;
  for (int a = 0; a < n_channels_; ++a) total += n_channel(a);
  return static_cast<double>(n_atoms_) - total;
}

double CorrelationState::hermiticity_defect() const {
  double worst = 0.0;
  for (int a = 0; a < n_channels_; ++a) {
    const auto c = channel(a);
    worst = std::max(worst, (c - c.adjoint()).cwiseAbs().maxCoeff());
  }
  return worst;
}

CorrelationModel::CorrelationModel(const CouplingSet& couplings,
                                   std::vector<TransitionSpec> transitions)
    : n_atoms_(static_cast<int>(couplings.n_atoms())),
      n_channels_(static_cast<int>(couplings.n_channels())),
      transitions_(std::move(transitions)) {
  if (transitions_.size() != couplings.n_channels())
    throw InvalidArgument("CorrelationModel: transitions and coupling matrices differ in count");
  if (n_atoms_ < 1) throw InvalidArgument("CorrelationModel: empty coupling set");
  for (const auto& t : transitions_) {
    validate_transition(t);
    gamma_sum_ += t.gamma;
  }
  for (int a = 0; a < n_channels_; ++a) {
    ComplexMatrix g = couplings.g[static_cast<std::size_t>(a)];
    if (g.rows() != n_atoms_ || g.cols() != n_atoms_)
      throw InvalidArgument("CorrelationModel: coupling matrix dimension mismatch");
    g.diagonal().setZero();
    g_conj_.push_back(g.conjugate());
    g_.push_back(std::move(g));
    active_.push_back(couplings.active[static_cast<std::size_t>(a)]);
    prod_.emplace_back(ComplexMatrix::Zero(n_atoms_, n_atoms_));
    acc_.emplace_back(Eigen::VectorXcd::Zero(n_atoms_));
  }
  excited_.resize(n_atoms_);
}

void CorrelationModel::accumulate_pair_sums(const Complex* c) const {
  const int n = n_atoms_;
  excited_.setOnes();
  for (int a = 0; a < n_channels_; ++a) {
    Eigen::Map<const ComplexMatrix> ca(c + static_cast<std::size_t>(a) * n * n, n, n);
    excited_ -= ca.diagonal().real();
    if (active_[a]) {
      prod_[a].noalias() = ca * g_conj_[a];
      // acc(n) = sum_j g_nj C[j][n] = conj((C conj(G))[n][n]) for Hermitian C.
      acc_[a] = prod_[a].diagonal().conjugate();
    } else {
      acc_[a].setZero();
    }
  }
}

void CorrelationModel::rhs(const Complex* c, Complex* dc) const {
  const int n = n_atoms_;
  accumulate_pair_sums(c);

  Eigen::VectorXcd acc_total = Eigen::VectorXcd::Zero(n);
  for (int a = 0; a < n_channels_; ++a) acc_total += acc_[a];

  // Sum over channels of 2 Re(g^b_nm) C^b[m][n], needed by the cross-channel
  // damping terms (upper triangle only).
  ComplexMatrix cross_pair = ComplexMatrix::Zero(n, n);
  for (int b = 0; b < n_channels_; ++b) {
    if (!active_[b]) continue;
    Eigen::Map<const ComplexMatrix> cb(c + static_cast<std::size_t>(b) * n * n, n, n);
    for (int m = 0; m < n; ++m)
      for (int i = 0; i < m; ++i) cross_pair(i, m) += 2.0 * g_[b](i, m).real() * cb(m, i);
  }

  for (int a = 0; a < n_channels_; ++a) {
    Eigen::Map<const ComplexMatrix> ca(c + static_cast<std::size_t>(a) * n * n, n, n);
    Eigen::Map<ComplexMatrix> da(dc + static_cast<std::size_t>(a) * n * n, n, n);
    const double gamma_a = transitions_[a].gamma;
    const auto& g = g_[a];
    const auto& prod = prod_[a];
    const auto& acc = acc_[a];
    const bool act = active_[a];

    for (int i = 0; i < n; ++i)
      da(i, i) = Complex(gamma_a * excited_(i) + 2.0 * acc(i).real(), 0.0);

    for (int m = 0; m < n; ++m) {
      const double pe_m = excited_(m);
      const double pa_m = ca(m, m).real();
      const Complex other_m = std::conj(acc_total(m) - acc(m));
      for (int i = 0; i < m; ++i) {
        // (n, m) in the pair equation is (i, m) here.
        const Complex c_nm = ca(i, m);
        const double pe_n = excited_(i);
        const double pa_n = ca(i, i).real();

        const Complex own_pair = act ? 2.0 * g(i, m).real() * ca(m, i) : Complex(0.0, 0.0);
        const Complex cross = (acc_total(i) - acc(i)) + other_m - (cross_pair(i, m) - own_pair);
        Complex v = -gamma_sum_ * c_nm - c_nm * cross;

        if (act) {
          const Complex g_nm = g(i, m);
          const Complex g_nm_c = std::conj(g_nm);
          const double w_m = pe_m - pa_m;
          const double w_n = pe_n - pa_n;
          v += w_m * (prod(i, m) - ca(i, i) * g_nm_c);
          v += w_n * (std::conj(prod(m, i)) - g_nm * ca(m, m));
          v += 2.0 * g_nm.real() * pe_n * pe_m;
          v -= g_nm * pa_n * pe_m;
          v -= g_nm_c * pa_m * pe_n;
        }
        da(i, m) = v;
        da(m, i) = std::conj(v);
      }
    }
  }
}

void CorrelationModel::rhs(const CorrelationState& state, CorrelationState& deriv) const {
  if (state.n_atoms() != n_atoms_ || state.n_channels() != n_channels_)
    throw InvalidArgument("correlation_rhs: state dimension mismatch");
  if (deriv.n_atoms() != n_atoms_ || deriv.n_channels() != n_channels_)
    deriv = CorrelationState(n_atoms_, n_channels_);
  rhs(state.data().data(), deriv.data().data());
}

std::vector<double> CorrelationModel::emission_rates(const Complex* c) const {
  const int n = n_atoms_;
  Eigen::VectorXd pe = Eigen::VectorXd::Ones(n);
  for (int a = 0; a < n_channels_; ++a) {
    Eigen::Map<const ComplexMatrix> ca(c + static_cast<std::size_t>(a) * n * n, n, n);
    pe -= ca.diagonal().real();
  }
  const double n_e = pe.sum();
  std::vector<double> rates(static_cast<std::size_t>(n_channels_), 0.0);
  for (int a = 0; a < n_channels_; ++a) {
    double r = transitions_[a].gamma * n_e;
    if (active_[a]) {
      Eigen::Map<const ComplexMatrix> ca(c + static_cast<std::size_t>(a) * n * n, n, n);
      for (int i = 0; i < n; ++i) r += 2.0 * (g_[a].col(i).cwiseProduct(ca.col(i))).sum().real();
    }
    rates[static_cast<std::size_t>(a)] = r;
  }
  return rates;
}

CorrelationState correlation_rhs(const CorrelationState& state, const CouplingSet& couplings,
                                 const std::vector<TransitionSpec>& transitions) {
  CorrelationModel model(couplings, transitions);
  CorrelationState deriv(state.n_atoms(), state.n_channels());
  model.rhs(state, deriv);
  return deriv;
}

CorrelationRun evolve_correlations(const CouplingSet& couplings,
                                   const std::vector<TransitionSpec>& transitions,
                                   const CorrelationRunOptions& opts) {
  const CorrelationModel model(couplings, transitions);
  const int n = model.n_atoms();
  const int nc = model.n_channels();

  CorrelationRun run;
  auto& traj = run.trajectory;
  traj.n_atoms = n;
  std::vector<std::string> labels;
  std::vector<double> rates0;
  for (const auto& t : transitions) {
    labels.push_back(t.label);
    rates0.push_back(t.gamma);
  }
  traj.reset_channels(labels, rates0);

  HorizonTracker horizon(opts.horizon);
  std::vector<double> pops(static_cast<std::size_t>(nc));
  std::size_t n_rising = 0;
  double first_rising = -1.0;
  double min_pop = 0.0;
  CorrelationState::Buffer last;

  auto observer = [&](double t, const CorrelationState::Buffer& x) {
    double n_e = static_cast<double>(n);
    for (int a = 0; a < nc; ++a) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) {
        const double p = x[static_cast<std::size_t>(a) * n * n + static_cast<std::size_t>(i) * (n + 1)].real();
        s += p;
        min_pop = std::min(min_pop, p);
      }
      pops[static_cast<std::size_t>(a)] = s;
      n_e -= s;
    }
    for (int i = 0; i < n; ++i) {
      double pe = 1.0;
      for (int a = 0; a < nc; ++a)
        pe -= x[static_cast<std::size_t>(a) * n * n + static_cast<std::size_t>(i) * (n + 1)].real();
      min_pop = std::min(min_pop, pe);
    }
    const auto rates = model.emission_rates(x.data());
    double total = 0.0;
    for (double r : rates) total += r;
    if (total < -opts.diagnostic_tol * n) {
      if (n_rising++ == 0) first_rising = t;
    }
    traj.append(t, n_e, pops, rates);
    for (int a = 0; a < nc; ++a) {
      Eigen::Map<const ComplexMatrix> ca(x.data() + static_cast<std::size_t>(a) * n * n, n, n);
      run.max_hermiticity_defect =
          std::max(run.max_hermiticity_defect, (ca - ca.adjoint()).cwiseAbs().maxCoeff());
    }
    last = x;
    return horizon.keep_going(t, total);
  };

  auto system = [&](const CorrelationState::Buffer& x, CorrelationState::Buffer& dxdt, double) {
    model.rhs(x.data(), dxdt.data());
  };

  CorrelationState init = CorrelationState::inverted(n, nc);
  traj.stats = integrate_sampled(system, init.data(), opts.horizon.dt, opts.horizon.t_cap,
                                 opts.integrator, observer);

  run.final_state = CorrelationState(n, nc);
  run.final_state.data() = std::move(last);
  run.min_population = min_pop;
  if (run.max_hermiticity_defect > opts.diagnostic_tol) {
    std::ostringstream msg;
    msg << "hermiticity defect " << run.max_hermiticity_defect << " exceeds tolerance";
    traj.warnings.push_back(msg.str());
  }
  if (n_rising > 0) {
    std::ostringstream msg;
    msg << "factorization breakdown: N_e increased at " << n_rising << " samples (first at t="
        << first_rising << ")";
    traj.warnings.push_back(msg.str());
  }
  if (min_pop < -opts.diagnostic_tol) {
    std::ostringstream msg;
    msg << "factorization breakdown: population reached " << min_pop;
    traj.warnings.push_back(msg.str());
  }
  return run;
}

}  // namespace superrad
