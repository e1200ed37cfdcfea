#include "superrad/couplings.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "superrad/errors.hpp"

namespace superrad {

const char* to_string(CouplingMode mode) {
  switch (mode) {
    case CouplingMode::kFull: return "full";
    case CouplingMode::kInelasticOnly: return "inelastic_only";
    case CouplingMode::kDicke: return "dicke";
  }
  return "full";
}

CouplingMode coupling_mode_from_string(const std::string& name) {
  if (name == "full") return CouplingMode::kFull;
  if (name == "inelastic_only") return CouplingMode::kInelasticOnly;
  if (name == "dicke") return CouplingMode::kDicke;
  throw InvalidArgument("unknown coupling mode '" + name + "' (expected full, inelastic_only or dicke)");
}

void validate_transition(const TransitionSpec& t) {
  if (!(t.gamma > 0.0)) throw InvalidArgument("transition '" + t.label + "': gamma must be > 0");
  if (!(t.lambda >= 0.0)) throw InvalidArgument("transition '" + t.label + "': lambda must be >= 0");
  if (!(t.dipole_dir.norm() > 0.0))
    throw InvalidArgument("transition '" + t.label + "': dipole direction must be non-zero");
}

// Both functions follow the printed formulas term for term so that other
// implementations can be compared bit-for-bit at the 1e-12 level.
double elastic_f(double xi, double phi, double gamma) {
  if (!(xi > 0.0)) throw InvalidArgument("elastic_f: xi must be > 0");
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  return 3.0 * gamma / 4.0 *
         ((1.0 - 3.0 * c * c) * (std::sin(xi) / (xi * xi) + std::cos(xi) / (xi * xi * xi)) -
          s * s * std::cos(xi) / xi);
}

double inelastic_gamma(double xi, double phi, double gamma) {
  if (!(xi > 0.0)) throw InvalidArgument("inelastic_gamma: xi must be > 0");
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  return 3.0 * gamma / 2.0 *
         ((1.0 - 3.0 * c * c) * (std::cos(xi) / (xi * xi) - std::sin(xi) / (xi * xi * xi)) +
          s * s * std::sin(xi) / xi);
}

Complex complex_g(double xi, double phi, double gamma) {
  return {inelastic_gamma(xi, phi, gamma) / 2.0, elastic_f(xi, phi, gamma)};
}

CouplingSet build_coupling_set(const Cloud& cloud, const std::vector<TransitionSpec>& transitions,
                               CouplingMode mode, double min_separation) {
  if (transitions.empty()) throw InvalidArgument("build_coupling_set: no transitions");
  if (cloud.size() == 0) throw InvalidArgument("build_coupling_set: empty cloud");
  for (const auto& t : transitions) validate_transition(t);
  if (min_separation < 0.0) min_separation = kDefaultMinSeparationFraction * cloud.sigma;

  const auto n = static_cast<Eigen::Index>(cloud.size());
  CouplingSet set;
  set.mode = mode;
  for (const auto& t : transitions) {
    ComplexMatrix g = ComplexMatrix::Zero(n, n);
    const bool active = t.interacting() && n > 1;
    if (active) {
      const double k = t.wavenumber();
      const Vec3 dip = t.dipole_dir.normalized();
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
          const double dist = (cloud.positions[i] - cloud.positions[j]).norm();
          if (dist < min_separation || dist == 0.0) {
            std::ostringstream msg;
            msg << "build_coupling_set: atoms " << i << " and " << j << " are " << dist
                << " apart, below the minimum separation " << min_separation;
            throw CouplingOverflow(msg.str());
          }
          Complex gij;
          if (mode == CouplingMode::kDicke) {
            gij = Complex(t.gamma / 2.0, 0.0);
          } else {
            const auto pg = pair_geometry(cloud, static_cast<std::size_t>(i),
                                          static_cast<std::size_t>(j), k, dip);
            gij = complex_g(pg.xi, pg.phi, t.gamma);
            if (mode == CouplingMode::kInelasticOnly) gij = Complex(gij.real(), 0.0);
          }
          if (!std::isfinite(gij.real()) || !std::isfinite(gij.imag()))
            throw CouplingOverflow("build_coupling_set: non-finite coupling");
          g(i, j) = gij;
          g(j, i) = gij;
        }
      }
    }
    set.g.push_back(std::move(g));
    set.active.push_back(active);
  }
  return set;
}

void write_coupling_csv(std::ostream& os, const CouplingSet& set,
                        const std::vector<TransitionSpec>& transitions) {
  os << "channel,row,col,re,im\n";
  for (std::size_t a = 0; a < set.n_channels(); ++a) {
    const auto& g = set.g[a];
    const std::string label = a < transitions.size() ? transitions[a].label : std::to_string(a);
    for (Eigen::Index i = 0; i < g.rows(); ++i)
      for (Eigen::Index j = 0; j < g.cols(); ++j)
        os << label << ',' << i << ',' << j << ',' << std::setprecision(17) << g(i, j).real()
           << ',' << g(i, j).imag() << '\n';
  }
}

}  // namespace superrad
