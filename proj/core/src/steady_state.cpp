#include "fanomech/errors.hpp"
#include "fanomech/solver.hpp"

#include <Eigen/SparseLU>
#include <unsupported/Eigen/IterativeSolvers>

#include <cmath>
#include <sstream>

namespace fanomech {

namespace {

using cld = std::complex<long double>;

// rhs - A x accumulated in extended precision.
Vector residual(const SparseMatrix& A, const Vector& x, const Vector& rhs) {
  std::vector<cld> r(static_cast<std::size_t>(rhs.size()));
  for (Eigen::Index i = 0; i < rhs.size(); ++i) r[static_cast<std::size_t>(i)] = rhs(i);
  for (Eigen::Index k = 0; k < A.outerSize(); ++k) {
    const cld xk = x(k);
    for (SparseMatrix::InnerIterator it(A, k); it; ++it)
      r[static_cast<std::size_t>(it.row())] -= cld(it.value()) * xk;
  }
  Vector out(rhs.size());
  for (Eigen::Index i = 0; i < rhs.size(); ++i) {
    const cld& v = r[static_cast<std::size_t>(i)];
    out(i) = Complex(static_cast<double>(v.real()), static_cast<double>(v.imag()));
  }
  return out;
}

// L with row 0 replaced by the trace functional.
SparseMatrix with_trace_row(const SparseMatrix& L, std::size_t D) {
  std::vector<Eigen::Triplet<Complex>> trips;
  trips.reserve(static_cast<std::size_t>(L.nonZeros()) + D);
  for (Eigen::Index k = 0; k < L.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(L, k); it; ++it)
      if (it.row() != 0) trips.emplace_back(it.row(), it.col(), it.value());
  for (std::size_t i = 0; i < D; ++i)
    trips.emplace_back(0, static_cast<Eigen::Index>(i * (D + 1)), Complex(1.0));
  SparseMatrix A(L.rows(), L.cols());
  A.setFromTriplets(trips.begin(), trips.end());
  A.makeCompressed();
  return A;
}

double max_abs(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

DensityMatrix to_density(const SpaceLayout& layout, const Vector& x) {
  DenseMatrix rho = unvectorize(x, layout.total_dim());
  rho = 0.5 * (rho + rho.adjoint()).eval();
  const Complex tr = rho.trace();
  if (std::abs(tr) == 0.0) throw MultipleSteadyStatesError("steady-state solve returned a traceless matrix");
  rho /= tr;
  return DensityMatrix(layout, std::move(rho));
}

template <class Solver>
Vector solve_refined(const Solver& solver, const SparseMatrix& A, const Vector& rhs, int steps) {
  Vector x = solver.solve(rhs);
  for (int s = 0; s < steps; ++s) {
    const Vector r = residual(A, x, rhs);
    if (max_abs(r) == 0.0) break;
    x += solver.solve(r);
  }
  return x;
}

// Inverse iteration towards the eigenvector of L closest to zero.
Vector inverse_iteration(const SparseMatrix& L, std::size_t D, double scale) {
  const Eigen::Index n = L.rows();
  SparseMatrix id(n, n);
  id.setIdentity();
  SparseMatrix shifted = L - id * Complex(1e-13 * scale, 0.0);
  shifted.makeCompressed();
  Eigen::SparseLU<SparseMatrix> lu;
  lu.compute(shifted);
  if (lu.info() != Eigen::Success)
    throw MultipleSteadyStatesError("steady-state fallback factorization failed");
  Vector x = Vector::Zero(n);
  for (std::size_t i = 0; i < D; ++i) x(static_cast<Eigen::Index>(i * (D + 1))) = 1.0 / static_cast<double>(D);
  for (int it = 0; it < 12; ++it) {
    x = lu.solve(x);
    x /= x.norm();
  }
  return x;
}

// Sparse LU of A without the entries that move the last mode's index by more than `band`
// on either side of rho. Hamiltonians and jumps built from ladder operators stay inside
// the band; functions of a quadrature (exact position-dependent rates) do not.
class BandedLU {
 public:
  void set_structure(std::size_t D, std::size_t block, std::size_t band) {
    D_ = static_cast<Eigen::Index>(D);
    block_ = static_cast<Eigen::Index>(block);
    band_ = static_cast<Eigen::Index>(band);
  }
  BandedLU& analyzePattern(const SparseMatrix&) { return *this; }
  BandedLU& factorize(const SparseMatrix& A) { return compute(A); }
  BandedLU& compute(const SparseMatrix& A) {
    auto m = [&](Eigen::Index i) { return i % block_; };
    std::vector<Eigen::Triplet<Complex>> trips;
    for (Eigen::Index c = 0; c < A.outerSize(); ++c)
      for (SparseMatrix::InnerIterator it(A, c); it; ++it) {
        const Eigen::Index r = it.row();
        if (r == 0 || (std::abs(m(r % D_) - m(c % D_)) <= band_ && std::abs(m(r / D_) - m(c / D_)) <= band_))
          trips.emplace_back(r, c, it.value());
      }
    SparseMatrix P(A.rows(), A.cols());
    P.setFromTriplets(trips.begin(), trips.end());
    P.makeCompressed();
    lu_.compute(P);
    return *this;
  }
  Eigen::ComputationInfo info() const { return lu_.info(); }
  template <class Rhs>
  Vector solve(const Rhs& b) const {
    return lu_.solve(Vector(b));
  }

 private:
  Eigen::Index D_ = 1, block_ = 1, band_ = 0;
  Eigen::SparseLU<SparseMatrix> lu_;
};

}  // namespace

SteadyStateResult steady_state_detailed(const Liouvillian& L, const SteadyStateOptions& opts) {
  if (!L.is_static())
    throw ValidationError("steady_state requires a static Liouvillian (model has rotating terms)");
  if (!L.is_assembled()) throw ValidationError("steady_state requires an assembled Liouvillian");
  const std::size_t D = L.dim();
  const Eigen::Index n = L.matrix.rows();
  const double scale = std::max(L.max_abs(), 1e-300);
  const SparseMatrix A = with_trace_row(L.matrix, D);
  Vector rhs = Vector::Zero(n);
  rhs(0) = 1.0;

  SteadyStateResult res;
  Vector x;
  if (static_cast<std::size_t>(n) <= opts.dense_limit) {
    const DenseMatrix Ad(A);
    Eigen::PartialPivLU<DenseMatrix> lu(Ad);
    x = solve_refined(lu, A, rhs, opts.refinement_steps);
    res.method = "dense LU";
    // A kernel of dimension > 1 shows up as a rank deficit of L itself.
    Eigen::FullPivLU<DenseMatrix> full{DenseMatrix(L.matrix)};
    full.setThreshold(1e-12);
    if (n - full.rank() > 1)
      throw MultipleSteadyStatesError("steady state is not unique: Liouvillian kernel has dimension " +
                                      std::to_string(n - full.rank()));
  } else if (const std::size_t block = L.layout.dims().back();
             static_cast<double>(A.nonZeros()) > opts.dense_column_threshold * static_cast<double>(n) &&
             block > 2 * opts.preconditioner_band + 1) {
    Eigen::GMRES<SparseMatrix, BandedLU> gmres;
    gmres.preconditioner().set_structure(D, block, opts.preconditioner_band);
    gmres.setTolerance(1e-14);
    gmres.setMaxIterations(opts.max_iterations);
    gmres.set_restart(opts.max_iterations);
    gmres.compute(A);
    if (gmres.info() != Eigen::Success)
      throw MultipleSteadyStatesError("sparse LU of the banded preconditioner failed");
    x = solve_refined(gmres, A, rhs, opts.refinement_steps);
    res.method = "GMRES (banded sparse LU preconditioner)";
  } else {
    Eigen::SparseLU<SparseMatrix> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success)
      throw MultipleSteadyStatesError("sparse LU of the trace-constrained Liouvillian failed: " +
                                      lu.lastErrorMessage());
    x = solve_refined(lu, A, rhs, opts.refinement_steps);
    res.method = "sparse LU";
  }
  if (!x.allFinite()) throw MultipleSteadyStatesError("steady-state solve produced non-finite values");

  auto rel_residual = [&](const Vector& v) {
    const Vector r = residual(L.matrix, v, Vector::Zero(n));
    return max_abs(r) / scale;
  };
  DensityMatrix rho = to_density(L.layout, x);
  double rr = rel_residual(vectorize(rho.matrix()));
  if (rr > 1e-10) {
    try {
      Vector y = inverse_iteration(L.matrix, D, scale);
      DensityMatrix alt = to_density(L.layout, y);
      const double rr2 = rel_residual(vectorize(alt.matrix()));
      if (rr2 < rr) {
        rho = std::move(alt);
        rr = rr2;
        res.method += " + inverse iteration";
      }
    } catch (const MultipleSteadyStatesError&) {
    }
  }
  if (rr > 1e-10) {
    std::ostringstream os;
    os << "steady-state relative residual " << rr << " exceeds 1e-10 (" << res.method << ")";
    warn(os.str());
  }
  res.rho = std::move(rho);
  res.relative_residual = rr;
  return res;
}

DensityMatrix steady_state(const Liouvillian& L) { return steady_state_detailed(L).rho; }

}  // namespace fanomech
