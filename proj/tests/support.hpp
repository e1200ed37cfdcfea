#pragma once

#include <random>
#include <vector>

#include <unsupported/Eigen/KroneckerProduct>

#include "superrad/cloud.hpp"
#include "superrad/correlation_solver.hpp"
#include "superrad/couplings.hpp"

namespace superrad::testing {

inline std::vector<TransitionSpec> two_level(double lambda = 1.0) {
  return {{"g", 1.0, lambda, Vec3::UnitX()}};
}

// Channels with distinct rates, wavelengths and dipole axes; the last one
// is non-interacting when `with_dark` is set.
inline std::vector<TransitionSpec> multi_level(int n_channels, bool with_dark = false) {
  std::vector<TransitionSpec> t;
  const Vec3 dirs[] = {Vec3::UnitX(), Vec3(0.3, 1.0, 0.2), Vec3(0.0, 0.4, 1.0)};
  for (int a = 0; a < n_channels; ++a) {
    TransitionSpec s;
    s.label = std::string(1, static_cast<char>('a' + a));
    s.gamma = 1.0 / (1.0 + 0.7 * a);
    s.lambda = 1.0 + 0.45 * a;
    s.dipole_dir = dirs[a % 3];
    t.push_back(s);
  }
  if (with_dark) t.back().lambda = 0.0;
  return t;
}

// Random Hermitian correlation blocks with small, physically shaped
// populations (each atom's lower-level populations sum below 1).
inline CorrelationState random_correlations(int n, int channels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.2, 0.2), p(0.0, 0.8);
  CorrelationState c(n, channels);
  for (int i = 0; i < n; ++i) {
    double left = 1.0;
    for (int a = 0; a < channels; ++a) {
      const double v = p(rng) * left / channels;
      c.channel(a)(i, i) = v;
      left -= v;
    }
  }
  for (int a = 0; a < channels; ++a)
    for (int m = 0; m < n; ++m)
      for (int i = 0; i < m; ++i) {
        const Complex z(u(rng), u(rng));
        c.channel(a)(i, m) = z;
        c.channel(a)(m, i) = std::conj(z);
      }
  return c;
}

// Closed factorised pair equation written as plain loops over the printed
// terms; independent of the GEMM-based production kernel.
inline CorrelationState naive_correlation_rhs(const CorrelationState& c, const CouplingSet& set,
                                              const std::vector<TransitionSpec>& tr) {
  const int n = c.n_atoms(), L = c.n_channels();
  double gsum = 0.0;
  for (const auto& t : tr) gsum += t.gamma;
  auto P = [&](int a, int i) { return c.channel(a)(i, i).real(); };
  auto Pe = [&](int i) {
    double s = 1.0;
    for (int b = 0; b < L; ++b) s -= P(b, i);
    return s;
  };
  CorrelationState d(n, L);
  for (int a = 0; a < L; ++a) {
    const auto& g = set.g[static_cast<std::size_t>(a)];
    const auto C = c.channel(a);
    for (int i = 0; i < n; ++i) {
      Complex s = 0.0;
      for (int j = 0; j < n; ++j)
        if (j != i) s += g(i, j) * C(j, i);
      d.channel(a)(i, i) = tr[static_cast<std::size_t>(a)].gamma * Pe(i) + 2.0 * s.real();
    }
    for (int nn = 0; nn < n; ++nn)
      for (int m = 0; m < n; ++m) {
        if (nn == m) continue;
        Complex v = -C(nn, m) * gsum;
        for (int j = 0; j < n; ++j) {
          if (j == m || j == nn) continue;
          v += std::conj(g(j, m)) * C(nn, j) * (1.0 - P(a, m) - (1.0 - Pe(m)));
          v += g(nn, j) * C(j, m) * (1.0 - P(a, nn) - (1.0 - Pe(nn)));
          for (int b = 0; b < L; ++b) {
            if (b == a) continue;
            const auto& gb = set.g[static_cast<std::size_t>(b)];
            const auto Cb = c.channel(b);
            v -= gb(nn, j) * C(nn, m) * Cb(j, nn);
            v -= std::conj(gb(j, m)) * C(nn, m) * Cb(m, j);
          }
        }
        v += 2.0 * g(nn, m).real() * Pe(nn) * Pe(m);
        v -= g(nn, m) * P(a, nn) * Pe(m);
        v -= std::conj(g(nn, m)) * P(a, m) * Pe(nn);
        d.channel(a)(nn, m) = v;
      }
  }
  return d;
}

// Full (L+1)^N Hilbert space operators built from Kronecker products.
// Atom i sits at place value (L+1)^i, level 0 is the excited state.
struct DenseModel {
  int n = 0, levels = 0;
  Eigen::Index dim = 1;
  std::vector<std::vector<ComplexMatrix>> lower;  // [channel][atom]
  std::vector<ComplexMatrix> gfull;               // g with diagonal Gamma/2
  std::vector<TransitionSpec> tr;

  DenseModel(const CouplingSet& set, const std::vector<TransitionSpec>& transitions)
      : n(static_cast<int>(set.n_atoms())), levels(static_cast<int>(transitions.size()) + 1),
        tr(transitions) {
    for (int i = 0; i < n; ++i) dim *= levels;
    for (std::size_t a = 0; a < tr.size(); ++a) {
      std::vector<ComplexMatrix> ops;
      for (int i = 0; i < n; ++i) {
        ComplexMatrix op = ComplexMatrix::Identity(1, 1);
        for (int site = n - 1; site >= 0; --site) {
          ComplexMatrix s = ComplexMatrix::Identity(levels, levels);
          if (site == i) {
            s.setZero();
            s(static_cast<Eigen::Index>(a + 1), 0) = 1.0;
          }
          ComplexMatrix next = Eigen::kroneckerProduct(op, s).eval();
          op = std::move(next);
        }
        ops.push_back(std::move(op));
      }
      lower.push_back(std::move(ops));
      ComplexMatrix g = set.g[a];
      g.diagonal().setConstant(tr[a].gamma / 2.0);
      gfull.push_back(std::move(g));
    }
  }

  // Hermitian elastic Hamiltonian plus Lindblad dissipator.
  ComplexMatrix rhs(const ComplexMatrix& rho) const {
    ComplexMatrix d = ComplexMatrix::Zero(dim, dim);
    const Complex I(0.0, 1.0);
    for (std::size_t a = 0; a < tr.size(); ++a) {
      const auto& g = gfull[a];
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const ComplexMatrix& bi = lower[a][static_cast<std::size_t>(i)];
          const ComplexMatrix& bj = lower[a][static_cast<std::size_t>(j)];
          const ComplexMatrix up_down = bi.adjoint() * bj;
          const double gam = 2.0 * g(i, j).real();
          if (i != j) {
            const double f = g(i, j).imag();
            d += -I * f * (up_down * rho - rho * up_down);
          }
          d += gam * (bj * rho * bi.adjoint() - 0.5 * up_down * rho - 0.5 * rho * up_down);
        }
    }
    return d;
  }

  ComplexMatrix inverted() const {
    ComplexMatrix r = ComplexMatrix::Zero(dim, dim);
    r(0, 0) = 1.0;
    return r;
  }

  // <b-_n b+_m> = Tr(b-_n b+_m rho).
  Complex correlation(const ComplexMatrix& rho, int a, int nn, int m) const {
    const auto& bn = lower[static_cast<std::size_t>(a)][static_cast<std::size_t>(nn)];
    const auto& bm = lower[static_cast<std::size_t>(a)][static_cast<std::size_t>(m)];
    return (bn * bm.adjoint() * rho).trace();
  }
};

}  // namespace superrad::testing
