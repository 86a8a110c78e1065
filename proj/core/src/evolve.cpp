#include "fanomech/errors.hpp"
#include "fanomech/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace fanomech {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

// Right-hand side, optionally in the interaction picture of the diagonal of H.
class Rhs {
 public:
  // Row-major copies: the gather form of the product is several times faster here.
  Rhs(const Liouvillian& L, bool interaction) : L_(L), D_(L.dim()), interaction_(interaction) {
    for (const auto& r : L.rotating) rotating_.emplace_back(r.matrix);
    main_ = L.matrix;
    if (!interaction_) return;
    h_ = L.hamiltonian_diagonal;
    if (h_.cwiseAbs().maxCoeff() == 0.0) {
      interaction_ = false;
      return;
    }
    // Remove -i[H_0, .], which is diagonal in the vectorized basis.
    const auto D = static_cast<Eigen::Index>(D_);
    SparseMatrix diag(D * D, D * D);
    diag.reserve(Eigen::VectorXi::Constant(D * D, 1));
    for (Eigen::Index j = 0; j < D; ++j)
      for (Eigen::Index i = 0; i < D; ++i) diag.insert(i + j * D, i + j * D) = Complex(0.0, -(h_(i) - h_(j)));
    SparseMatrix reduced = L.matrix - diag;
    reduced.prune(Complex(0.0), 0.0);
    main_ = reduced;
    p_.resize(D);
  }

  bool interaction() const { return interaction_; }

  // Phases u_{ij}(t) = exp(-i (h_i - h_j) t) of the diagonal propagator.
  void phases(double t, Vector& u) const {
    const auto D = static_cast<Eigen::Index>(D_);
    for (Eigen::Index i = 0; i < D; ++i) p_(i) = std::exp(Complex(0.0, -h_(i) * t));
    u.resize(D * D);
    for (Eigen::Index j = 0; j < D; ++j) {
      const Complex cj = std::conj(p_(j));
      for (Eigen::Index i = 0; i < D; ++i) u(i + j * D) = p_(i) * cj;
    }
  }

  void operator()(double t, const Vector& y, Vector& out) {
    if (!interaction_) {
      out.noalias() = main_ * y;
      for (std::size_t k = 0; k < rotating_.size(); ++k)
        out.noalias() += std::exp(Complex(0.0, L_.rotating[k].frequency * t)) * (rotating_[k] * y);
      apply_sandwiches(L_, y, out);
      return;
    }
    phases(t, u_);
    tmp_ = u_.cwiseProduct(y);
    out.noalias() = main_ * tmp_;
    for (std::size_t k = 0; k < rotating_.size(); ++k)
      out.noalias() += std::exp(Complex(0.0, L_.rotating[k].frequency * t)) * (rotating_[k] * tmp_);
    apply_sandwiches(L_, tmp_, out);
    out = out.cwiseProduct(u_.conjugate());
  }

  Vector to_schrodinger(double t, const Vector& y) const {
    if (!interaction_) return y;
    Vector u;
    phases(t, u);
    return u.cwiseProduct(y);
  }

  Vector from_schrodinger(double t, const Vector& y) const {
    if (!interaction_) return y;
    Vector u;
    phases(t, u);
    return u.conjugate().cwiseProduct(y);
  }

 private:
  const Liouvillian& L_;
  std::size_t D_;
  bool interaction_;
  Eigen::VectorXd h_;
  Eigen::SparseMatrix<Complex, Eigen::RowMajor> main_;
  std::vector<Eigen::SparseMatrix<Complex, Eigen::RowMajor>> rotating_;
  mutable Vector p_;
  Vector u_, tmp_;
};

Complex trace_of(const Vector& y, std::size_t D) {
  Complex t = 0.0;
  for (std::size_t i = 0; i < D; ++i) t += y(static_cast<Eigen::Index>(i * (D + 1)));
  return t;
}

void record(EvolutionResult& res, const SpaceLayout& layout, double t, const Vector& v,
            const std::vector<Observable>& observables, bool store, bool hermitize) {
  DenseMatrix rho = unvectorize(v, layout.total_dim());
  if (hermitize) rho = 0.5 * (rho + rho.adjoint()).eval();
  DensityMatrix dm(layout, std::move(rho));
  res.times.push_back(t);
  for (const auto& o : observables) res.observables[o.label].push_back(o.fn(dm));
  if (store) res.states.push_back(std::move(dm));
}

void check_grid(const std::vector<double>& t_grid) {
  if (t_grid.empty()) throw ValidationError("time grid is empty");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (!std::isfinite(t_grid[i])) throw ValidationError("time grid contains non-finite values");
    if (i && t_grid[i] < t_grid[i - 1]) throw ValidationError("time grid must be non-decreasing");
  }
}

double frequency_scale(const Liouvillian& L) {
  double m = L.max_abs();
  for (const auto& r : L.rotating) m = std::max(m, std::abs(r.frequency));
  return m;
}

}  // namespace

EvolutionResult evolve(const LindbladModel& model, const DensityMatrix& rho0,
                       const std::vector<double>& t_grid, const std::vector<Observable>& observables,
                       const EvolveOptions& opts) {
  if (model.lab_frame)
    throw StiffnessError("time evolution in the lab frame is rejected: optical frequencies exceed the "
                         "mechanical and decay scales by many orders of magnitude; use the rotating frame");
  return evolve(build_liouvillian(model, {.factor_dense_jumps = true}), rho0, t_grid, observables, opts);
}

EvolutionResult evolve(const Liouvillian& L, const DensityMatrix& rho0, const std::vector<double>& t_grid,
                       const std::vector<Observable>& observables, const EvolveOptions& opts) {
  if (L.lab_frame)
    throw StiffnessError("time evolution in the lab frame is rejected: optical frequencies exceed the "
                         "mechanical and decay scales by many orders of magnitude; use the rotating frame");
  if (!(rho0.layout() == L.layout)) throw LayoutError("initial state layout differs from the Liouvillian");
  rho0.validate();
  check_grid(t_grid);
  if (opts.exact_if_possible && L.is_static() && L.is_assembled() &&
      static_cast<std::size_t>(L.matrix.rows()) <= opts.exact_limit)
    return evolve_exact(L, rho0, t_grid, observables);

  const std::size_t D = L.dim();
  EvolutionResult res;
  res.time_unit_label = L.time_unit_label;
  Rhs f(L, opts.interaction_picture);
  res.method = f.interaction() ? "dopri5 (interaction picture)" : "dopri5";

  double t = t_grid.front();
  Vector y = f.from_schrodinger(t, vectorize(rho0.matrix()));
  const double span = t_grid.back() - t_grid.front();
  std::size_t next = 0;
  while (next < t_grid.size() && t_grid[next] <= t) {
    record(res, L.layout, t_grid[next], f.to_schrodinger(t, y), observables, opts.store_states, opts.hermitize_states);
    ++next;
  }
  if (next == t_grid.size()) return res;

  const Eigen::Index n = y.size();
  Vector k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), err(n);
  f(t, y, k1);

  // sqrt(norm) instead of std::abs: hypot dominates the cost at this vector size.
  auto norm = [&](const Vector& e, const Vector& a, const Vector& b) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double sc = opts.atol + opts.rtol * std::sqrt(std::max(std::norm(a(i)), std::norm(b(i))));
      s += std::norm(e(i)) / (sc * sc);
    }
    return std::sqrt(s / static_cast<double>(n));
  };

  double h = opts.initial_step;
  if (h <= 0.0) {
    const Vector zero = Vector::Zero(n);
    const double d0 = norm(y, zero, zero), d1 = norm(k1, zero, zero);
    h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h = std::min(h, span);
  }
  if (opts.max_step > 0.0) h = std::min(h, opts.max_step);
  const double h_min = opts.min_step * std::max(span, 1e-300);

  while (next < t_grid.size()) {
    const double target = t_grid[next];
    bool hit = false;
    double h_step = h;
    if (t + h_step >= target) {
      h_step = target - t;
      hit = true;
    }
    ytmp = y + h_step * (a21 * k1);
    f(t + c2 * h_step, ytmp, k2);
    ytmp = y + h_step * (a31 * k1 + a32 * k2);
    f(t + c3 * h_step, ytmp, k3);
    ytmp = y + h_step * (a41 * k1 + a42 * k2 + a43 * k3);
    f(t + c4 * h_step, ytmp, k4);
    ytmp = y + h_step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    f(t + c5 * h_step, ytmp, k5);
    ytmp = y + h_step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    f(t + h_step, ytmp, k6);
    ynew = y + h_step * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    f(t + h_step, ynew, k7);
    err = h_step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double en = norm(err, y, ynew);

    if (!std::isfinite(en)) {
      h = 0.1 * h_step;
    } else if (en <= 1.0) {
      t = hit ? target : t + h_step;
      y.swap(ynew);
      const Complex tr = trace_of(y, D);
      res.max_trace_drift = std::max(res.max_trace_drift, std::abs(tr - 1.0));
      // The generator is linear, so the last stage rescales with the state.
      k1.swap(k7);
      if (tr != Complex(0.0) && tr != Complex(1.0)) {
        y /= tr;
        k1 /= tr;
      }
      ++res.steps_accepted;
      const double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
      const double proposal = h_step * fac;
      // Do not let a short step that only reached a grid point shrink the step size.
      h = hit ? std::max(h, proposal) : proposal;
      if (opts.max_step > 0.0) h = std::min(h, opts.max_step);
      while (next < t_grid.size() && t_grid[next] <= t) {
        record(res, L.layout, t_grid[next], f.to_schrodinger(t, y), observables, opts.store_states, opts.hermitize_states);
        ++next;
      }
    } else {
      ++res.steps_rejected;
      h = h_step * std::clamp(0.9 * std::pow(en, -0.2), 0.1, 1.0);
    }
    if (h < h_min) {
      std::ostringstream os;
      os << "step size underflow at t = " << t << " (h = " << h << "); the generator carries frequency "
         << "scale " << frequency_scale(L) << " in units of " << L.time_unit_label
         << ", too stiff for the explicit integrator";
      throw StiffnessError(os.str());
    }
  }
  return res;
}

EvolutionResult evolve_exact(const Liouvillian& L, const DensityMatrix& rho0,
                             const std::vector<double>& t_grid, const std::vector<Observable>& observables) {
  if (!L.is_static()) throw ValidationError("exact propagation requires a static Liouvillian");
  if (!L.is_assembled()) throw ValidationError("exact propagation requires an assembled Liouvillian");
  if (!(rho0.layout() == L.layout)) throw LayoutError("initial state layout differs from the Liouvillian");
  check_grid(t_grid);
  Eigen::ComplexEigenSolver<DenseMatrix> es(DenseMatrix(L.matrix));
  if (es.info() != Eigen::Success) throw Error("Liouvillian eigendecomposition failed");
  const DenseMatrix& V = es.eigenvectors();
  const Vector& lam = es.eigenvalues();
  Eigen::PartialPivLU<DenseMatrix> lu(V);
  const Vector c = lu.solve(vectorize(rho0.matrix()));
  EvolutionResult res;
  res.time_unit_label = L.time_unit_label;
  res.method = "eigendecomposition";
  const double t0 = t_grid.front();
  for (double t : t_grid) {
    Vector e(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i) e(i) = std::exp(lam(i) * (t - t0)) * c(i);
    Vector y = V * e;
    const Complex tr = trace_of(y, L.dim());
    res.max_trace_drift = std::max(res.max_trace_drift, std::abs(tr - 1.0));
    y /= tr;
    record(res, L.layout, t, y, observables, true, true);
  }
  return res;
}

}  // namespace fanomech
