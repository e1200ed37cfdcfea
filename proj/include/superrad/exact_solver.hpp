#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/SparseCore>

#include "superrad/correlation_solver.hpp"
#include "superrad/couplings.hpp"
#include "superrad/trajectory.hpp"

namespace superrad {

// Product states of N atoms with levels {e, alpha_1, ..., alpha_L} are encoded
// as base-(L+1) integers, atom i contributing level * (L+1)^i; level 0 is the
// excited state.
//
// Starting from |ee...e><ee...e| without a drive, the master equation only
// couples |m><n| where |m> and |n> have the same number of atoms in every
// level. The retained Liouville space is therefore a direct sum of dense
// blocks, one per occupation class.
struct OccupationBlock {
  std::vector<int> counts;           // atoms per level, sums to N
  std::vector<std::uint64_t> states; // sorted encodings
  std::size_t offset = 0;            // into the flat coefficient vector

  std::size_t dim() const { return states.size(); }
  std::size_t index_of(std::uint64_t code) const;  // throws if absent
};

struct LiouvilleBasis {
  int n_atoms = 0;
  int n_levels = 0;
  std::vector<OccupationBlock> blocks;
  std::size_t n_pairs = 0;  // sum of dim^2 over blocks

  int level_of(std::uint64_t code, int atom) const;
  std::uint64_t with_level(std::uint64_t code, int atom, int level) const;
  // Block holding the given counts vector.
  std::size_t block_of(const std::vector<int>& counts) const;
};

/// Number of retained pairs without enumerating them.
std::size_t count_basis_pairs(int n_atoms, int n_levels);

/// Rough bytes needed to integrate a state of `n_pairs` coefficients.
std::size_t estimated_memory_bytes(std::size_t n_pairs);

inline constexpr std::size_t kDefaultMemoryCap = std::size_t{2} << 30;

/// Deterministic ordering: classes by decreasing excited count then
/// lexicographic counts; states by increasing code. Throws CapacityError when
/// the estimated integration memory exceeds `memory_cap_bytes`.
LiouvilleBasis enumerate_basis(int n_atoms, int n_levels,
                               std::size_t memory_cap_bytes = kDefaultMemoryCap);

// Coefficients c_mn over the retained pairs, each block stored column-major.
struct ExactState {
  const LiouvilleBasis* basis = nullptr;
  std::vector<Complex> coeffs;

  static ExactState inverted(const LiouvilleBasis& basis);
  static ExactState zeros(const LiouvilleBasis& basis);

  Eigen::Map<ComplexMatrix> block(std::size_t k);
  Eigen::Map<const ComplexMatrix> block(std::size_t k) const;

  Complex trace() const;
  double hermiticity_defect() const;
  bool is_inverted(double tol = 0.0) const;
  // Full L^N x L^N density matrix; only sensible for a handful of atoms.
  ComplexMatrix to_dense() const;
};

struct ExactObservables {
  double n_excited = 0.0;
  std::vector<double> n_channel;
  std::vector<double> gamma;  // dN_a/dt from the analytic right-hand side
  CorrelationState correlations;
};

// Precomputed operator tables for one cloud.
class ExactModel {
 public:
  ExactModel(const LiouvilleBasis& basis, const CouplingSet& couplings,
             std::vector<TransitionSpec> transitions);

  const LiouvilleBasis& basis() const { return *basis_; }
  const std::vector<TransitionSpec>& transitions() const { return transitions_; }

  // d rho/dt = -(H rho + rho H^dagger) + sum_a sum_ij Gamma^a_ij b^a-_j rho b^a+_i
  // with H = sum_a sum_ij g^a_ij b^a+_i b^a-_j and g^a_ii = Gamma_a / 2.
  // rho must be Hermitian: rho H^dagger is formed as (H rho)^dagger.
  void rhs(const Complex* rho, Complex* drho) const;
  ExactState rhs(const ExactState& state) const;

  // Populations and correlations are linear in the state, so these also map a
  // derivative onto the derivative of the observables.
  std::vector<double> channel_populations(const Complex* rho) const;
  double excited_population(const Complex* rho) const;
  CorrelationState correlations(const Complex* rho) const;

  ExactObservables observables(const ExactState& state) const;

 private:
  struct JumpTable {
    std::size_t source = 0;
    std::size_t target = 0;
    int lowered = 0;                    // number of excited atoms per state
    std::vector<int> atom;              // [state * lowered + q]
    std::vector<std::uint32_t> dest;    // matching target-block index
  };

  const LiouvilleBasis* basis_;
  std::vector<TransitionSpec> transitions_;
  int n_channels_;
  std::vector<Eigen::MatrixXd> gamma_pair_;  // Gamma^a_ij, diagonal Gamma_a
  std::vector<Eigen::SparseMatrix<Complex, Eigen::RowMajor>> heff_;
  std::vector<std::vector<JumpTable>> jumps_;  // [channel][...]
  mutable ComplexMatrix scratch_;
};

struct ExactRunOptions {
  HorizonOptions horizon;
  IntegratorOptions integrator{1e-8, 1e-10};
  std::size_t memory_cap_bytes = kDefaultMemoryCap;
};

struct ExactRun {
  Trajectory trajectory;
  double max_trace_error = 0.0;
  double max_hermiticity_defect = 0.0;
  double max_population_error = 0.0;
};

/// Evolves `initial`, which must be the fully inverted state; any other state
/// is rejected because the truncation is only valid from |ee...e>.
ExactRun evolve_exact(const ExactState& initial, const CouplingSet& couplings,
                      const std::vector<TransitionSpec>& transitions, const ExactRunOptions& opts);

/// Convenience overload that enumerates the basis itself.
ExactRun evolve_exact(const CouplingSet& couplings, const std::vector<TransitionSpec>& transitions,
                      const ExactRunOptions& opts);

}  // namespace superrad
