#pragma once

#include <vector>

#include "superrad/couplings.hpp"
#include "superrad/trajectory.hpp"

namespace superrad {

// Quadratic correlations C^a[n][m] = <b^{a-}_n b^{a+}_m> for every channel a.
// The diagonal holds the lower-level populations P_a(i); the excited-state
// population is the complement P_e(i) = 1 - sum_a P_a(i).
//
// Storage is one contiguous buffer of n_channels column-major N x N blocks so
// the state can be handed to the ODE stepper directly.
class CorrelationState {
 public:
  using Buffer = std::vector<Complex>;

  CorrelationState() = default;
  CorrelationState(int n_atoms, int n_channels);

  // The fully inverted state |ee...e>: every correlation is zero.
  static CorrelationState inverted(int n_atoms, int n_channels) { return {n_atoms, n_channels}; }

  int n_atoms() const { return n_atoms_; }
  int n_channels() const { return n_channels_; }

  Eigen::Map<ComplexMatrix> channel(int a);
  Eigen::Map<const ComplexMatrix> channel(int a) const;

  double population(int a, int i) const { return channel(a)(i, i).real(); }
  double excited_population(int i) const;
  double n_channel(int a) const;
  double n_excited() const;
  // Largest |C - C^dagger| entry over all channels.
  double hermiticity_defect() const;

  Buffer& data() { return data_; }
  const Buffer& data() const { return data_; }

 private:
  int n_atoms_ = 0;
  int n_channels_ = 0;
  Buffer data_;
};

// Right-hand side of the closed factorised correlation system. Holds the
// couplings and scratch space; one instance per concurrent integration.
class CorrelationModel {
 public:
  CorrelationModel(const CouplingSet& couplings, std::vector<TransitionSpec> transitions);

  int n_atoms() const { return n_atoms_; }
  int n_channels() const { return n_channels_; }
  const std::vector<TransitionSpec>& transitions() const { return transitions_; }

  // Populations evolve by the exact single-index equation; off-diagonal
  // entries by the factorised pair equation. Only n < m is computed and the
  // lower triangle is mirrored, so Hermitian input gives Hermitian output
  // bit-for-bit.
  void rhs(const Complex* c, Complex* dc) const;
  void rhs(const CorrelationState& state, CorrelationState& deriv) const;

  // Per-channel emission rates gamma_a = sum_i dC^a[i][i]/dt. Costs O(N^2)
  // per channel (no matrix product).
  std::vector<double> emission_rates(const Complex* c) const;

 private:
  void accumulate_pair_sums(const Complex* c) const;

  int n_atoms_;
  int n_channels_;
  std::vector<TransitionSpec> transitions_;
  std::vector<ComplexMatrix> g_;       // zero-diagonal couplings
  std::vector<ComplexMatrix> g_conj_;
  std::vector<bool> active_;
  double gamma_sum_ = 0.0;

  // Scratch.
  mutable std::vector<ComplexMatrix> prod_;    // C^a * conj(G^a)
  mutable std::vector<Eigen::VectorXcd> acc_;  // acc^a(n) = sum_j g^a_nj C^a[j][n]
  mutable Eigen::VectorXd excited_;            // P_e(i)
};

/// One-shot derivative (allocates a model).
CorrelationState correlation_rhs(const CorrelationState& state, const CouplingSet& couplings,
                                 const std::vector<TransitionSpec>& transitions);

struct CorrelationRunOptions {
  HorizonOptions horizon;
  IntegratorOptions integrator;
  // Tolerance for the Hermiticity and population-monotonicity diagnostics.
  double diagnostic_tol = 1e-10;
};

struct CorrelationRun {
  Trajectory trajectory;
  CorrelationState final_state;
  double max_hermiticity_defect = 0.0;
  double min_population = 0.0;
};

/// Evolves the fully inverted cloud. Emission rates come from the analytic
/// right-hand side. N_e increases above tolerance and negative populations are
/// recorded as factorisation-breakdown warnings on the trajectory.
CorrelationRun evolve_correlations(const CouplingSet& couplings,
                                   const std::vector<TransitionSpec>& transitions,
                                   const CorrelationRunOptions& opts);

}  // namespace superrad
