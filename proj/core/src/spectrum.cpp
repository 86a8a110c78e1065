#include "fanomech/errors.hpp"
#include "fanomech/solver.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <random>

namespace fanomech {

namespace {

void sort_by_real_part(std::vector<Complex>& ev) {
  std::sort(ev.begin(), ev.end(), [](const Complex& a, const Complex& b) {
    const double ra = std::abs(a.real()), rb = std::abs(b.real());
    if (ra != rb) return ra < rb;
    return std::abs(a.imag()) < std::abs(b.imag());
  });
}

// Shift-invert Arnoldi: Ritz values of (L - sigma)^-1 mapped back to L.
std::vector<Complex> arnoldi_near_zero(const SparseMatrix& L, std::size_t m_req, double scale) {
  const Eigen::Index n = L.rows();
  const auto m = static_cast<Eigen::Index>(std::min<std::size_t>(m_req, static_cast<std::size_t>(n)));
  SparseMatrix id(n, n);
  id.setIdentity();
  const double sigma = 1e-9 * scale;
  SparseMatrix shifted = L - id * Complex(sigma, 0.0);
  shifted.makeCompressed();
  Eigen::SparseLU<SparseMatrix> lu;
  lu.compute(shifted);
  if (lu.info() != Eigen::Success) throw Error("shift-invert factorization failed: " + lu.lastErrorMessage());

  DenseMatrix V(n, m + 1);
  DenseMatrix H = DenseMatrix::Zero(m + 1, m);
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> nd;
  Vector v0(n);
  for (Eigen::Index i = 0; i < n; ++i) v0(i) = Complex(nd(rng), nd(rng));
  V.col(0) = v0 / v0.norm();
  Eigen::Index built = m;
  for (Eigen::Index j = 0; j < m; ++j) {
    Vector w = lu.solve(V.col(j));
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index i = 0; i <= j; ++i) {
        const Complex h = V.col(i).dot(w);
        H(i, j) += h;
        w -= h * V.col(i);
      }
    const double hn = w.norm();
    H(j + 1, j) = hn;
    if (hn < 1e-14 * std::abs(H(j, j)) || hn == 0.0) {
      built = j + 1;
      break;
    }
    V.col(j + 1) = w / hn;
  }
  Eigen::ComplexEigenSolver<DenseMatrix> es(H.topLeftCorner(built, built), false);
  std::vector<Complex> out;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const Complex theta = es.eigenvalues()(i);
    if (std::abs(theta) == 0.0) continue;
    out.push_back(Complex(sigma, 0.0) + 1.0 / theta);
  }
  return out;
}

}  // namespace

std::vector<Complex> spectrum(const Liouvillian& L, std::size_t k, const SpectrumOptions& opts) {
  if (!L.is_static()) throw ValidationError("spectrum requires a static Liouvillian");
  if (!L.is_assembled()) throw ValidationError("spectrum requires an assembled Liouvillian");
  const auto n = static_cast<std::size_t>(L.matrix.rows());
  std::vector<Complex> ev;
  if (n <= opts.dense_limit) {
    Eigen::ComplexEigenSolver<DenseMatrix> es(DenseMatrix(L.matrix), false);
    ev.assign(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  } else {
    const std::size_t m = opts.krylov_dim ? opts.krylov_dim : std::max<std::size_t>(4 * k + 20, 60);
    ev = arnoldi_near_zero(L.matrix, m, std::max(L.max_abs(), 1e-300));
  }
  sort_by_real_part(ev);
  if (ev.size() > k) ev.resize(k);
  return ev;
}

}  // namespace fanomech
