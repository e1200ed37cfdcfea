#include "superrad/exact_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "superrad/errors.hpp"

namespace superrad {

namespace {

constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

std::uint64_t ipow(std::uint64_t base, int exp) {
  std::uint64_t r = 1;
  for (int i = 0; i < exp; ++i) {
    if (r > std::numeric_limits<std::uint64_t>::max() / base)
      throw CapacityError("basis encoding overflows 64 bits");
    r *= base;
  }
  return r;
}

// Visits every composition of n_atoms into n_levels non-negative parts.
template <class F>
void for_each_composition(int n_atoms, int n_levels, F&& f) {
  std::vector<int> counts(static_cast<std::size_t>(n_levels), 0);
  auto rec = [&](auto&& self, int level, int remaining) -> void {
    if (level == n_levels - 1) {
      counts[static_cast<std::size_t>(level)] = remaining;
      f(counts);
      return;
    }
    for (int c = remaining; c >= 0; --c) {
      counts[static_cast<std::size_t>(level)] = c;
      self(self, level + 1, remaining - c);
    }
  };
  rec(rec, 0, n_atoms);
}

double multinomial(const std::vector<int>& counts) {
  int n = 0;
  double lg = 0.0;
  for (int c : counts) {
    n += c;
    lg -= std::lgamma(c + 1.0);
  }
  lg += std::lgamma(n + 1.0);
  return std::round(std::exp(lg));
}

void check_sizes(int n_atoms, int n_levels) {
  if (n_atoms < 1) throw InvalidArgument("enumerate_basis: n_atoms must be >= 1");
  if (n_levels < 2) throw InvalidArgument("enumerate_basis: n_levels must be >= 2");
}

}  // namespace

std::size_t OccupationBlock::index_of(std::uint64_t code) const {
  const auto it = std::lower_bound(states.begin(), states.end(), code);
  if (it == states.end() || *it != code) throw InvalidArgument("state not in occupation block");
  return static_cast<std::size_t>(it - states.begin());
}

int LiouvilleBasis::level_of(std::uint64_t code, int atom) const {
  for (int i = 0; i < atom; ++i) code /= static_cast<std::uint64_t>(n_levels);
  return static_cast<int>(code % static_cast<std::uint64_t>(n_levels));
}

std::uint64_t LiouvilleBasis::with_level(std::uint64_t code, int atom, int level) const {
  const std::uint64_t place = ipow(static_cast<std::uint64_t>(n_levels), atom);
  const auto old = static_cast<std::uint64_t>(level_of(code, atom));
  return code - old * place + static_cast<std::uint64_t>(level) * place;
}

std::size_t LiouvilleBasis::block_of(const std::vector<int>& counts) const {
  for (std::size_t k = 0; k < blocks.size(); ++k)
    if (blocks[k].counts == counts) return k;
  throw InvalidArgument("no occupation block with the requested counts");
}

std::size_t count_basis_pairs(int n_atoms, int n_levels) {
  check_sizes(n_atoms, n_levels);
  double total = 0.0;
  for_each_composition(n_atoms, n_levels, [&](const std::vector<int>& c) {
    const double m = multinomial(c);
    total += m * m;
  });
  if (total > 1e18) {
    std::ostringstream msg;
    msg << "exact solver for N=" << n_atoms << " with " << n_levels
        << " levels needs more than 1e18 retained pairs";
    throw CapacityError(msg.str());
  }
  return static_cast<std::size_t>(total);
}

std::size_t estimated_memory_bytes(std::size_t n_pairs) {
  // State, derivative, seven Runge-Kutta stages and dense-output buffers.
  return n_pairs * sizeof(Complex) * 14;
}

LiouvilleBasis enumerate_basis(int n_atoms, int n_levels, std::size_t memory_cap_bytes) {
  check_sizes(n_atoms, n_levels);
  const std::size_t pairs = count_basis_pairs(n_atoms, n_levels);
  const std::size_t bytes = estimated_memory_bytes(pairs);
  if (bytes > memory_cap_bytes) {
    std::ostringstream msg;
    msg << "exact solver for N=" << n_atoms << " with " << n_levels << " levels needs " << pairs
        << " retained pairs, about " << (bytes >> 20) << " MiB, above the cap of "
        << (memory_cap_bytes >> 20) << " MiB";
    throw CapacityError(msg.str());
  }

  LiouvilleBasis basis;
  basis.n_atoms = n_atoms;
  basis.n_levels = n_levels;
  const std::uint64_t n_codes = ipow(static_cast<std::uint64_t>(n_levels), n_atoms);

  // Ordering key: more excited atoms first, then lexicographically larger
  // counts (so (N,0,..) < (N-1,1,0) < (N-1,0,1) ...).
  std::map<std::vector<int>, std::vector<std::uint64_t>, std::greater<>> classes;
  std::vector<int> counts(static_cast<std::size_t>(n_levels));
  for (std::uint64_t code = 0; code < n_codes; ++code) {
    std::fill(counts.begin(), counts.end(), 0);
    std::uint64_t c = code;
    for (int i = 0; i < n_atoms; ++i) {
      ++counts[c % static_cast<std::uint64_t>(n_levels)];
      c /= static_cast<std::uint64_t>(n_levels);
    }
    classes[counts].push_back(code);
  }
  std::size_t offset = 0;
  for (auto& [cnt, states] : classes) {
    OccupationBlock b;
    b.counts = cnt;
    b.states = std::move(states);
    b.offset = offset;
    offset += b.dim() * b.dim();
    basis.blocks.push_back(std::move(b));
  }
  basis.n_pairs = offset;
  return basis;
}

ExactState ExactState::zeros(const LiouvilleBasis& basis) {
  ExactState s;
  s.basis = &basis;
  s.coeffs.assign(basis.n_pairs, Complex(0.0, 0.0));
  return s;
}

ExactState ExactState::inverted(const LiouvilleBasis& basis) {
  ExactState s = zeros(basis);
  // Block 0 is the single all-excited state.
  s.coeffs[basis.blocks.front().offset] = Complex(1.0, 0.0);
  return s;
}

Eigen::Map<ComplexMatrix> ExactState::block(std::size_t k) {
  const auto& b = basis->blocks[k];
  const auto d = static_cast<Eigen::Index>(b.dim());
  return {coeffs.data() + b.offset, d, d};
}

Eigen::Map<const ComplexMatrix> ExactState::block(std::size_t k) const {
  const auto& b = basis->blocks[k];
  const auto d = static_cast<Eigen::Index>(b.dim());
  return {coeffs.data() + b.offset, d, d};
}

Complex ExactState::trace() const {
  Complex tr(0.0, 0.0);
  for (std::size_t k = 0; k < basis->blocks.size(); ++k) tr += block(k).trace();
  return tr;
}

double ExactState::hermiticity_defect() const {
  double worst = 0.0;
  for (std::size_t k = 0; k < basis->blocks.size(); ++k) {
    const auto b = block(k);
    worst = std::max(worst, (b - b.adjoint()).cwiseAbs().maxCoeff());
  }
  return worst;
}

bool ExactState::is_inverted(double tol) const {
  const auto ref = inverted(*basis);
  for (std::size_t i = 0; i < coeffs.size(); ++i)
    if (std::abs(coeffs[i] - ref.coeffs[i]) > tol) return false;
  return true;
}

ComplexMatrix ExactState::to_dense() const {
  const auto dim = static_cast<Eigen::Index>(
      ipow(static_cast<std::uint64_t>(basis->n_levels), basis->n_atoms));
  if (dim > 4096) throw CapacityError("to_dense: full density matrix too large");
  ComplexMatrix rho = ComplexMatrix::Zero(dim, dim);
  for (std::size_t k = 0; k < basis->blocks.size(); ++k) {
    const auto& b = basis->blocks[k];
    const auto blk = block(k);
    for (std::size_t r = 0; r < b.dim(); ++r)
      for (std::size_t c = 0; c < b.dim(); ++c)
        rho(static_cast<Eigen::Index>(b.states[r]), static_cast<Eigen::Index>(b.states[c])) =
            blk(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  }
  return rho;
}

ExactModel::ExactModel(const LiouvilleBasis& basis, const CouplingSet& couplings,
                       std::vector<TransitionSpec> transitions)
    : basis_(&basis), transitions_(std::move(transitions)),
      n_channels_(static_cast<int>(transitions_.size())) {
  const int n = basis.n_atoms;
  if (basis.n_levels != n_channels_ + 1)
    throw InvalidArgument("ExactModel: basis levels must equal channels + 1");
  if (static_cast<int>(couplings.n_atoms()) != n ||
      static_cast<int>(couplings.n_channels()) != n_channels_)
    throw InvalidArgument("ExactModel: coupling set does not match basis");

  double gamma_sum = 0.0;
  for (int a = 0; a < n_channels_; ++a) {
    const auto& t = transitions_[static_cast<std::size_t>(a)];
    validate_transition(t);
    gamma_sum += t.gamma;
    Eigen::MatrixXd gp = 2.0 * couplings.g[static_cast<std::size_t>(a)].real();
    gp.diagonal().setConstant(t.gamma);
    gamma_pair_.push_back(std::move(gp));
  }

  // Effective non-Hermitian Hamiltonian, block by block.
  for (const auto& blk : basis.blocks) {
    const auto d = static_cast<Eigen::Index>(blk.dim());
    std::vector<Eigen::Triplet<Complex>> trip;
    const double diag = 0.5 * gamma_sum * blk.counts[0];
    for (std::size_t s = 0; s < blk.dim(); ++s) {
      const auto code = blk.states[s];
      if (diag != 0.0)
        trip.emplace_back(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(s), Complex(diag, 0.0));
      for (int j = 0; j < n; ++j) {
        if (basis.level_of(code, j) != 0) continue;
        for (int i = 0; i < n; ++i) {
          if (i == j) continue;
          const int lvl = basis.level_of(code, i);
          if (lvl == 0) continue;
          const auto& g = couplings.g[static_cast<std::size_t>(lvl - 1)];
          const Complex gij = g(i, j);
          if (gij == Complex(0.0, 0.0)) continue;
          // b+_i b-_j |s>: atom j drops to lvl, atom i is raised to e.
          const auto t = basis.with_level(basis.with_level(code, j, lvl), i, 0);
          trip.emplace_back(static_cast<Eigen::Index>(blk.index_of(t)), static_cast<Eigen::Index>(s), gij);
        }
      }
    }
    Eigen::SparseMatrix<Complex, Eigen::RowMajor> h(d, d);
    h.setFromTriplets(trip.begin(), trip.end());
    h.makeCompressed();
    heff_.push_back(std::move(h));
  }

  // Lowering tables for every channel and every block with an excited atom.
  jumps_.resize(static_cast<std::size_t>(n_channels_));
  for (int a = 0; a < n_channels_; ++a) {
    for (std::size_t k = 0; k < basis.blocks.size(); ++k) {
      const auto& src = basis.blocks[k];
      if (src.counts[0] == 0) continue;
      auto tc = src.counts;
      --tc[0];
      ++tc[static_cast<std::size_t>(a + 1)];
      JumpTable jt;
      jt.source = k;
      jt.target = basis.block_of(tc);
      jt.lowered = src.counts[0];
      const auto& dst = basis.blocks[jt.target];
      for (std::size_t s = 0; s < src.dim(); ++s) {
        const auto code = src.states[s];
        for (int j = 0; j < n; ++j) {
          if (basis.level_of(code, j) != 0) continue;
          jt.atom.push_back(j);
          jt.dest.push_back(static_cast<std::uint32_t>(dst.index_of(basis.with_level(code, j, a + 1))));
        }
      }
      jumps_[static_cast<std::size_t>(a)].push_back(std::move(jt));
    }
  }
}

void ExactModel::rhs(const Complex* rho, Complex* drho) const {
  const auto& basis = *basis_;
  std::fill(drho, drho + basis.n_pairs, Complex(0.0, 0.0));

  for (std::size_t k = 0; k < basis.blocks.size(); ++k) {
    const auto& blk = basis.blocks[k];
    const auto d = static_cast<Eigen::Index>(blk.dim());
    Eigen::Map<const ComplexMatrix> r(rho + blk.offset, d, d);
    Eigen::Map<ComplexMatrix> dr(drho + blk.offset, d, d);
    scratch_.resize(d, d);
    scratch_.noalias() = heff_[k] * r;
    dr.noalias() -= scratch_;
    dr.noalias() -= scratch_.adjoint();
  }

  for (int a = 0; a < n_channels_; ++a) {
    const auto& gp = gamma_pair_[static_cast<std::size_t>(a)];
    for (const auto& jt : jumps_[static_cast<std::size_t>(a)]) {
      const auto& src = basis.blocks[jt.source];
      const auto& dst = basis.blocks[jt.target];
      const auto ds = static_cast<Eigen::Index>(src.dim());
      const auto dd = static_cast<Eigen::Index>(dst.dim());
      Eigen::Map<const ComplexMatrix> r(rho + src.offset, ds, ds);
      Eigen::Map<ComplexMatrix> dr(drho + dst.offset, dd, dd);
      const int ne = jt.lowered;
      for (Eigen::Index s2 = 0; s2 < ds; ++s2) {
        for (int q2 = 0; q2 < ne; ++q2) {
          const auto idx2 = static_cast<std::size_t>(s2) * static_cast<std::size_t>(ne) + static_cast<std::size_t>(q2);
          const int i = jt.atom[idx2];
          const auto t2 = static_cast<Eigen::Index>(jt.dest[idx2]);
          const double* gcol = gp.data() + static_cast<std::size_t>(i) * gp.rows();
          Complex* out = dr.data() + t2 * dd;
          for (Eigen::Index s1 = 0; s1 < ds; ++s1) {
            const Complex c = r(s1, s2);
            if (c == Complex(0.0, 0.0)) continue;
            const std::size_t base = static_cast<std::size_t>(s1) * static_cast<std::size_t>(ne);
            for (int q1 = 0; q1 < ne; ++q1) {
              const double w = gcol[jt.atom[base + static_cast<std::size_t>(q1)]];
              if (w != 0.0) out[jt.dest[base + static_cast<std::size_t>(q1)]] += w * c;
            }
          }
        }
      }
    }
  }
}

ExactState ExactModel::rhs(const ExactState& state) const {
  if (state.basis != basis_ || state.coeffs.size() != basis_->n_pairs)
    throw InvalidArgument("ExactModel::rhs: state built on a different basis");
  ExactState d = ExactState::zeros(*basis_);
  rhs(state.coeffs.data(), d.coeffs.data());
  return d;
}

std::vector<double> ExactModel::channel_populations(const Complex* rho) const {
  std::vector<double> pops(static_cast<std::size_t>(n_channels_), 0.0);
  for (const auto& blk : basis_->blocks) {
    const auto d = static_cast<Eigen::Index>(blk.dim());
    const double tr = Eigen::Map<const ComplexMatrix>(rho + blk.offset, d, d).trace().real();
    for (int a = 0; a < n_channels_; ++a) pops[static_cast<std::size_t>(a)] += blk.counts[static_cast<std::size_t>(a + 1)] * tr;
  }
  return pops;
}

double ExactModel::excited_population(const Complex* rho) const {
  double ne = 0.0;
  for (const auto& blk : basis_->blocks) {
    const auto d = static_cast<Eigen::Index>(blk.dim());
    ne += blk.counts[0] * Eigen::Map<const ComplexMatrix>(rho + blk.offset, d, d).trace().real();
  }
  return ne;
}

CorrelationState ExactModel::correlations(const Complex* rho) const {
  const auto& basis = *basis_;
  const int n = basis.n_atoms;
  CorrelationState cs(n, n_channels_);
  for (const auto& blk : basis.blocks) {
    const auto d = static_cast<Eigen::Index>(blk.dim());
    Eigen::Map<const ComplexMatrix> r(rho + blk.offset, d, d);
    for (std::size_t s = 0; s < blk.dim(); ++s) {
      const auto code = blk.states[s];
      const auto si = static_cast<Eigen::Index>(s);
      for (int m = 0; m < n; ++m) {
        const int lm = basis.level_of(code, m);
        if (lm == 0) continue;
        auto c = cs.channel(lm - 1);
        c(m, m) += r(si, si).real();
        // <b-_n b+_m> = sum_s' rho(s', s) where s = b-_n b+_m s'.
        for (int nn = 0; nn < n; ++nn) {
          if (nn == m || basis.level_of(code, nn) != 0) continue;
          const auto t = basis.with_level(basis.with_level(code, m, 0), nn, lm);
          c(nn, m) += r(si, static_cast<Eigen::Index>(blk.index_of(t)));
        }
      }
    }
  }
  return cs;
}

ExactObservables ExactModel::observables(const ExactState& state) const {
  ExactObservables obs;
  obs.n_excited = excited_population(state.coeffs.data());
  obs.n_channel = channel_populations(state.coeffs.data());
  const auto d = rhs(state);
  obs.gamma = channel_populations(d.coeffs.data());
  obs.correlations = correlations(state.coeffs.data());
  return obs;
}

ExactRun evolve_exact(const ExactState& initial, const CouplingSet& couplings,
                      const std::vector<TransitionSpec>& transitions, const ExactRunOptions& opts) {
  if (initial.basis == nullptr || !initial.is_inverted())
    throw InvalidArgument(
        "evolve_exact: only the fully inverted initial state is supported; the occupation-class "
        "truncation is not valid for other states");
  const ExactModel model(*initial.basis, couplings, transitions);
  const double n = static_cast<double>(initial.basis->n_atoms);

  ExactRun run;
  auto& traj = run.trajectory;
  traj.n_atoms = initial.basis->n_atoms;
  std::vector<std::string> labels;
  std::vector<double> rates0;
  for (const auto& t : transitions) {
    labels.push_back(t.label);
    rates0.push_back(t.gamma);
  }
  traj.reset_channels(labels, rates0);

  HorizonTracker horizon(opts.horizon);
  std::vector<Complex> deriv(initial.coeffs.size());
  ExactState view;
  view.basis = initial.basis;

  auto observer = [&](double t, const std::vector<Complex>& x) {
    model.rhs(x.data(), deriv.data());
    const auto pops = model.channel_populations(x.data());
    const auto rates = model.channel_populations(deriv.data());
    const double ne = model.excited_population(x.data());
    double tr = 0.0;
    for (const auto& blk : initial.basis->blocks) {
      const auto d = static_cast<Eigen::Index>(blk.dim());
      tr += Eigen::Map<const ComplexMatrix>(x.data() + blk.offset, d, d).trace().real();
    }
    double pop_sum = ne;
    for (double p : pops) pop_sum += p;
    run.max_trace_error = std::max(run.max_trace_error, std::abs(tr - 1.0));
    run.max_population_error = std::max(run.max_population_error, std::abs(pop_sum - n));
    view.coeffs = x;
    run.max_hermiticity_defect = std::max(run.max_hermiticity_defect, view.hermiticity_defect());
    traj.append(t, ne, pops, rates);
    double total = 0.0;
    for (double r : rates) total += r;
    return horizon.keep_going(t, total);
  };
  auto system = [&](const std::vector<Complex>& x, std::vector<Complex>& dxdt, double) {
    model.rhs(x.data(), dxdt.data());
  };
  traj.stats = integrate_sampled(system, initial.coeffs, opts.horizon.dt, opts.horizon.t_cap,
                                 opts.integrator, observer);
  return run;
}

ExactRun evolve_exact(const CouplingSet& couplings, const std::vector<TransitionSpec>& transitions,
                      const ExactRunOptions& opts) {
  const auto basis = enumerate_basis(static_cast<int>(couplings.n_atoms()),
                                     static_cast<int>(transitions.size()) + 1, opts.memory_cap_bytes);
  return evolve_exact(ExactState::inverted(basis), couplings, transitions, opts);
}

}  // namespace superrad
