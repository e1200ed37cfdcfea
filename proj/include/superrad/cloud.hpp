#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "superrad/types.hpp"

namespace superrad {

// Frozen atomic positions drawn from an isotropic Gaussian of width sigma.
// Lengths are in whatever unit the caller uses consistently (the harness
// uses the reference wavelength).
struct Cloud {
  std::vector<Vec3> positions;
  double sigma = 1.0;
  std::uint64_t seed = 0;

  std::size_t size() const { return positions.size(); }
};

// Dimensionless separation xi = k|r_i - r_j| and the angle between the
// dipole axis and r_i - r_j.
struct PairGeometry {
  double xi = 0.0;
  double phi = 0.0;
};

/// Default exclusion radius as a fraction of sigma.
inline constexpr double kDefaultMinSeparationFraction = 1e-3;

/// Gaussian width whose mean density N/(4 pi sigma^2)^{3/2} equals `density`.
double sigma_from_density(int n_atoms, double density);

/// Inverse of sigma_from_density.
double density_from_sigma(int n_atoms, double sigma);

/// Samples a cloud. Each coordinate is an independent N(0, sigma^2) deviate;
/// an atom landing closer than `min_separation` to an already placed atom is
/// redrawn. Bit-reproducible for identical (n_atoms, sigma, seed,
/// min_separation). Throws GenerationError after `max_attempts` redraws of a
/// single atom.
Cloud sample_cloud(int n_atoms, double sigma, std::uint64_t seed, double min_separation,
                   int max_attempts = 10000);

/// Same as above with min_separation = kDefaultMinSeparationFraction * sigma.
Cloud sample_cloud(int n_atoms, double sigma, std::uint64_t seed);

PairGeometry pair_geometry(const Cloud& cloud, std::size_t i, std::size_t j, double k,
                           const Vec3& dipole_dir);

/// Smallest pairwise distance (infinity for fewer than two atoms).
double min_pair_distance(const Cloud& cloud);

// Plain-text table: a header carrying N, sigma and seed, then N rows of x y z.
void write_cloud(std::ostream& os, const Cloud& cloud);
Cloud read_cloud(std::istream& is);

}  // namespace superrad
