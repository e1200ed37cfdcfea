#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "superrad/cloud.hpp"
#include "superrad/types.hpp"

namespace superrad {

// One decay channel e -> alpha. A zero wavelength marks a channel whose
// atoms do not interact (all pairwise couplings vanish).
struct TransitionSpec {
  std::string label;
  double gamma = 1.0;
  double lambda = 1.0;
  Vec3 dipole_dir = Vec3::UnitX();

  bool interacting() const { return lambda > 0.0; }
  double wavenumber() const { return interacting() ? kTwoPi / lambda : 0.0; }
};

void validate_transition(const TransitionSpec& t);

// Elastic (virtual-photon) coupling f(xi, phi). Diverges as 1/xi^3.
double elastic_f(double xi, double phi, double gamma);

// Inelastic (real-photon) coupling Gamma_ij(xi, phi). Tends to gamma as
// xi -> 0, so Re g_ij = Gamma_ij / 2 tends to gamma / 2.
double inelastic_gamma(double xi, double phi, double gamma);

// g_ij = i f_ij + Gamma_ij / 2.
Complex complex_g(double xi, double phi, double gamma);

// Per-transition N x N complex symmetric matrices of pairwise couplings g_ij.
// The diagonal is zero: single-atom decay is carried by TransitionSpec::gamma,
// and the eigenmode module adds gamma/2 on the diagonal itself.
struct CouplingSet {
  CouplingMode mode = CouplingMode::kFull;
  std::vector<ComplexMatrix> g;
  // False for channels whose matrix is identically zero (lambda = 0).
  std::vector<bool> active;

  std::size_t n_atoms() const { return g.empty() ? 0 : static_cast<std::size_t>(g.front().rows()); }
  std::size_t n_channels() const { return g.size(); }
};

/// Assembles coupling matrices for every transition. Each unordered pair is
/// evaluated once and mirrored, so the matrices are exactly symmetric.
/// Throws CouplingOverflow if any pair is closer than `min_separation`
/// (defaults to the cloud's exclusion radius).
CouplingSet build_coupling_set(const Cloud& cloud, const std::vector<TransitionSpec>& transitions,
                               CouplingMode mode, double min_separation = -1.0);

/// Debug dump: rows of (channel, row, col, re, im).
void write_coupling_csv(std::ostream& os, const CouplingSet& set,
                        const std::vector<TransitionSpec>& transitions);

}  // namespace superrad
