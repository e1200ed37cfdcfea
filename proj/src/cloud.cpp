#include "superrad/cloud.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include <boost/random/normal_distribution.hpp>

#include "superrad/errors.hpp"

namespace superrad {

double sigma_from_density(int n_atoms, double density) {
  if (n_atoms < 1) throw InvalidArgument("sigma_from_density: n_atoms must be >= 1");
  if (!(density > 0.0)) throw InvalidArgument("sigma_from_density: density must be > 0");
  return std::cbrt(static_cast<double>(n_atoms) / density) / (2.0 * std::sqrt(kPi));
}

double density_from_sigma(int n_atoms, double sigma) {
  if (n_atoms < 1) throw InvalidArgument("density_from_sigma: n_atoms must be >= 1");
  if (!(sigma > 0.0)) throw InvalidArgument("density_from_sigma: sigma must be > 0");
  return static_cast<double>(n_atoms) / std::pow(4.0 * kPi * sigma * sigma, 1.5);
}

Cloud sample_cloud(int n_atoms, double sigma, std::uint64_t seed, double min_separation,
                   int max_attempts) {
  if (n_atoms < 1) throw InvalidArgument("sample_cloud: n_atoms must be >= 1");
  if (!(sigma > 0.0)) throw InvalidArgument("sample_cloud: sigma must be > 0");
  if (!(min_separation >= 0.0)) throw InvalidArgument("sample_cloud: min_separation must be >= 0");

  // mt19937_64 output is fixed by the standard; boost's normal_distribution is
  // used instead of std:: because the latter is implementation-defined.
  std::mt19937_64 engine(seed);
  boost::random::normal_distribution<double> normal(0.0, sigma);

  Cloud cloud;
  cloud.sigma = sigma;
  cloud.seed = seed;
  cloud.positions.reserve(static_cast<std::size_t>(n_atoms));
  const double min_sq = min_separation * min_separation;

  for (int a = 0; a < n_atoms; ++a) {
    bool placed = false;
    for (int attempt = 0; attempt < max_attempts && !placed; ++attempt) {
      Vec3 r;
      r.x() = normal(engine);
      r.y() = normal(engine);
      r.z() = normal(engine);
      placed = true;
      for (const auto& other : cloud.positions) {
        if ((r - other).squaredNorm() < min_sq) {
          placed = false;
          break;
        }
      }
      if (placed) cloud.positions.push_back(r);
    }
    if (!placed) {
      std::ostringstream msg;
      msg << "sample_cloud: could not place atom " << a << " of " << n_atoms << " after "
          << max_attempts << " attempts (min_separation=" << min_separation
          << ", sigma=" << sigma << ")";
      throw GenerationError(msg.str());
    }
  }
  return cloud;
}

Cloud sample_cloud(int n_atoms, double sigma, std::uint64_t seed) {
  return sample_cloud(n_atoms, sigma, seed, kDefaultMinSeparationFraction * sigma);
}

PairGeometry pair_geometry(const Cloud& cloud, std::size_t i, std::size_t j, double k,
                           const Vec3& dipole_dir) {
  if (i == j) throw InvalidArgument("pair_geometry: i == j");
  if (i >= cloud.size() || j >= cloud.size())
    throw InvalidArgument("pair_geometry: atom index out of range");
  if (!(k > 0.0)) throw InvalidArgument("pair_geometry: k must be > 0");
  const Vec3 d = cloud.positions[j] - cloud.positions[i];
  const double dist = d.norm();
  PairGeometry g;
  g.xi = k * dist;
  if (dist > 0.0) {
    const double c = std::clamp(dipole_dir.dot(d) / (dipole_dir.norm() * dist), -1.0, 1.0);
    g.phi = std::acos(c);
  }
  return g;
}

double min_pair_distance(const Cloud& cloud) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cloud.size(); ++i)
    for (std::size_t j = i + 1; j < cloud.size(); ++j)
      best = std::min(best, (cloud.positions[i] - cloud.positions[j]).norm());
  return best;
}

void write_cloud(std::ostream& os, const Cloud& cloud) {
  os << "# N=" << cloud.size() << " sigma=" << std::setprecision(17) << cloud.sigma
     << " seed=" << cloud.seed << "\n";
  os << "# x y z\n";
  for (const auto& r : cloud.positions)
    os << std::setprecision(17) << r.x() << ' ' << r.y() << ' ' << r.z() << '\n';
}

Cloud read_cloud(std::istream& is) {
  Cloud cloud;
  std::string line;
  long expected = -1;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string tok;
      while (hs >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const auto key = tok.substr(0, eq);
        const auto val = tok.substr(eq + 1);
        if (key == "N") expected = std::stol(val);
        else if (key == "sigma") cloud.sigma = std::stod(val);
        else if (key == "seed") cloud.seed = std::stoull(val);
      }
      continue;
    }
    std::istringstream ls(line);
    Vec3 r;
    if (!(ls >> r.x() >> r.y() >> r.z())) throw InvalidArgument("read_cloud: malformed row: " + line);
    cloud.positions.push_back(r);
  }
  if (expected >= 0 && static_cast<std::size_t>(expected) != cloud.size())
    throw InvalidArgument("read_cloud: header N does not match row count");
  return cloud;
}

}  // namespace superrad
