#pragma once

// Liouvillian construction, steady states, spectra and time evolution.
//
// Vectorization convention (fixed repo-wide): column stacking,
// vec(rho)[i + j*D] = rho(i, j), so vec(A X B) = (B^T kron A) vec(X).

#include "fanomech/hilbert.hpp"
#include "fanomech/model.hpp"

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace fanomech {

using Vector = Eigen::VectorXcd;

Vector vectorize(const DenseMatrix& rho);
DenseMatrix unvectorize(const Vector& v, std::size_t dim);

struct Liouvillian {
  SpaceLayout layout;
  SparseMatrix matrix;
  /// Superoperator -i[op, .] multiplying exp(i frequency t).
  struct Rotating {
    SparseMatrix matrix;
    double frequency = 0.0;
  };
  std::vector<Rotating> rotating;
  /// Operator stored as dense blocks over the last layout mode. An operator
  /// without blocks stands for the identity.
  struct BlockOperator {
    Eigen::Index block = 0;
    std::vector<std::pair<Eigen::Index, Eigen::Index>> index;
    std::vector<DenseMatrix> blocks;
    /// Filled instead of `blocks` when every block is real.
    std::vector<Eigen::MatrixXd> real_blocks;
    bool is_identity() const noexcept { return index.empty(); }
  };
  /// coeff * left rho right, applied as matrix products. Only present when
  /// built with factor_dense_jumps; `matrix` then omits these terms.
  struct Sandwich {
    BlockOperator left, right;
    Complex coeff;
  };
  std::vector<Sandwich> sandwiches;
  /// Diagonal of the static Hamiltonian, used for the interaction picture.
  Eigen::VectorXd hamiltonian_diagonal;
  bool lab_frame = false;
  double time_unit = 1.0;
  std::string time_unit_label = "1/kappa_a";

  std::size_t dim() const noexcept { return layout.total_dim(); }
  bool is_static() const noexcept { return rotating.empty(); }
  bool is_assembled() const noexcept { return sandwiches.empty(); }
  double max_abs() const;
  /// L(t) v.
  Vector apply(const Vector& v, double t = 0.0) const;
};

/// Upper bound on superoperator side length D^2.
inline constexpr std::size_t kMaxSuperoperatorSide = 1'000'000;

struct LiouvillianOptions {
  /// Keep c_i rho c_j^dagger terms as products when their Kronecker form would
  /// be denser than two sparse-dense products (e.g. position-dependent rates).
  bool factor_dense_jumps = false;
};

Liouvillian build_liouvillian(const LindbladModel& model, const LiouvillianOptions& opts = {});
/// out += the factored terms of L applied to v.
void apply_sandwiches(const Liouvillian& L, const Vector& v, Vector& out);

/// Matrix-form evaluation of the master-equation right-hand side (test oracle).
DenseMatrix apply_lindblad_direct(const LindbladModel& model, const DenseMatrix& rho, double t = 0.0);

struct SteadyStateOptions {
  /// Side length D^2 up to which dense LU is used.
  std::size_t dense_limit = 400;
  int refinement_steps = 4;
  /// Above this mean number of nonzeros per column, sparse systems are solved by GMRES
  /// preconditioned with the LU of the part that moves the last mode by at most
  /// `preconditioner_band` quanta.
  double dense_column_threshold = 64.0;
  std::size_t preconditioner_band = 2;
  int max_iterations = 100;
};

struct SteadyStateResult {
  DensityMatrix rho;
  /// max |L rho| / max |L|.
  double relative_residual = 0.0;
  std::string method;
};

SteadyStateResult steady_state_detailed(const Liouvillian& L, const SteadyStateOptions& opts = {});
DensityMatrix steady_state(const Liouvillian& L);

struct SpectrumOptions {
  /// Dense eigensolver up to this side length, shift-invert Arnoldi above.
  std::size_t dense_limit = 4096;
  std::size_t krylov_dim = 0;  // 0: automatic
};

/// k eigenvalues with the smallest |Re|, sorted by |Re| (ties by |Im|).
std::vector<Complex> spectrum(const Liouvillian& L, std::size_t k, const SpectrumOptions& opts = {});

struct Observable {
  std::string label;
  std::function<Complex(const DensityMatrix&)> fn;
};

struct EvolveOptions {
  double rtol = 1e-8;
  double atol = 1e-12;
  double max_step = 0.0;      // 0: unlimited
  double initial_step = 0.0;  // 0: automatic
  double min_step = 1e-14;    // relative to the span; below this: StiffnessError
  bool store_states = true;
  /// Report (rho + rho^dagger)/2 instead of the raw integrator state.
  bool hermitize_states = true;
  /// Integrate exp(iH_0 t) rho exp(-iH_0 t) with H_0 the diagonal of the static
  /// Hamiltonian; states are transformed back before they are reported.
  bool interaction_picture = true;
  /// Use the Liouvillian eigendecomposition for static models up to this side length.
  bool exact_if_possible = false;
  std::size_t exact_limit = 4096;
};

struct EvolutionResult {
  std::vector<double> times;
  std::string time_unit_label;
  std::vector<DensityMatrix> states;
  std::map<std::string, std::vector<Complex>> observables;
  std::size_t steps_accepted = 0, steps_rejected = 0;
  double max_trace_drift = 0.0;
  std::string method;
};

EvolutionResult evolve(const LindbladModel& model, const DensityMatrix& rho0,
                       const std::vector<double>& t_grid, const std::vector<Observable>& observables = {},
                       const EvolveOptions& opts = {});
EvolutionResult evolve(const Liouvillian& L, const DensityMatrix& rho0,
                       const std::vector<double>& t_grid, const std::vector<Observable>& observables = {},
                       const EvolveOptions& opts = {});

/// Propagation by full eigendecomposition of a static Liouvillian.
EvolutionResult evolve_exact(const Liouvillian& L, const DensityMatrix& rho0,
                             const std::vector<double>& t_grid,
                             const std::vector<Observable>& observables = {});

}  // namespace fanomech
