#pragma once

#include "fanomech/hilbert.hpp"
#include "fanomech/model.hpp"

#include <random>

namespace testing {

inline fanomech::DenseMatrix random_density(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  const auto m = static_cast<Eigen::Index>(n);
  fanomech::DenseMatrix g(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) g(i, j) = fanomech::Complex(nd(rng), nd(rng));
  fanomech::DenseMatrix r = g * g.adjoint();
  return r / r.trace();
}

inline double max_abs(const fanomech::SparseMatrix& m) {
  double v = 0.0;
  for (int k = 0; k < m.outerSize(); ++k)
    for (fanomech::SparseMatrix::InnerIterator it(m, k); it; ++it) v = std::max(v, std::abs(it.value()));
  return v;
}

// Fig. 2 optical parameter set, rates in kappa_a units.
inline fanomech::SystemParams optical_set() {
  fanomech::SystemParams p;
  p.omega_a = 200.0;
  p.omega_d = 195.0;
  p.Lambda = 0.2;
  p.kappa_a = 1.0;
  p.kappa_d = 1.6e-3;
  p.gamma_a = 1e-4;
  p.Omega_m = 1.5e-6;
  p.gamma_m = 8e-14;
  return p;
}

}  // namespace testing
