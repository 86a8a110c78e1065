#pragma once

// Truncated Fock-space operator algebra on tensor products of bosonic modes.
//
// Basis ordering: the first label of a SpaceLayout is the most significant
// Kronecker factor, so |n_0, n_1, ...> has flat index sum_k n_k * stride_k.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <complex>
#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace fanomech {

using Complex = std::complex<double>;
using DenseMatrix = Eigen::MatrixXcd;
using SparseMatrix = Eigen::SparseMatrix<Complex>;
using Ket = Eigen::VectorXcd;

/// Ordered list of bosonic modes with their truncation dimensions.
class SpaceLayout {
 public:
  SpaceLayout() = default;
  SpaceLayout(std::vector<std::size_t> dims, std::vector<std::string> labels);

  static SpaceLayout single(std::string label, std::size_t dim) {
    return SpaceLayout({dim}, {std::move(label)});
  }

  std::size_t num_modes() const noexcept { return dims_.size(); }
  std::size_t total_dim() const noexcept { return total_; }
  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  bool contains(std::string_view label) const noexcept;
  std::size_t index_of(std::string_view label) const;
  std::size_t dim_of(std::string_view label) const { return dims_[index_of(label)]; }
  std::size_t stride(std::size_t mode) const;

  /// Layout restricted to `keep`, in this layout's order.
  SpaceLayout subset(const std::vector<std::string>& keep) const;

  /// Same labels with every dimension replaced.
  SpaceLayout with_dims(std::vector<std::size_t> dims) const;

  std::string describe() const;

  friend bool operator==(const SpaceLayout&, const SpaceLayout&) = default;

 private:
  std::vector<std::size_t> dims_;
  std::vector<std::string> labels_;
  std::size_t total_ = 0;
};

/// Complex operator on a SpaceLayout. Stored dense up to kDenseLimit total
/// dimension and compressed-column sparse above; both views are available.
class Operator {
 public:
  static constexpr std::size_t kDenseLimit = 256;

  Operator() = default;
  Operator(SpaceLayout layout, SparseMatrix m);
  Operator(SpaceLayout layout, DenseMatrix m);

  static Operator zero(const SpaceLayout& layout);
  static Operator identity(const SpaceLayout& layout);

  const SpaceLayout& layout() const noexcept { return layout_; }
  std::size_t dim() const noexcept { return layout_.total_dim(); }
  bool is_sparse() const noexcept { return std::holds_alternative<SparseMatrix>(m_); }

  DenseMatrix dense() const;
  SparseMatrix sparse() const;
  Complex coeff(std::size_t row, std::size_t col) const;

  Operator adjoint() const;
  bool is_hermitian(double tol = 1e-12) const;
  double max_abs() const;

  Operator& operator+=(const Operator& rhs);
  Operator& operator-=(const Operator& rhs);
  Operator& operator*=(Complex s);

  friend Operator operator+(Operator lhs, const Operator& rhs) { return lhs += rhs; }
  friend Operator operator-(Operator lhs, const Operator& rhs) { return lhs -= rhs; }
  friend Operator operator*(Operator lhs, Complex s) { return lhs *= s; }
  friend Operator operator*(Complex s, Operator rhs) { return rhs *= s; }
  friend Operator operator*(const Operator& lhs, const Operator& rhs);

 private:
  void check_same_layout(const Operator& other) const;

  SpaceLayout layout_;
  std::variant<DenseMatrix, SparseMatrix> m_;
};

/// Density matrix on a SpaceLayout. Construction does not validate; call
/// validate() (or checks()) where the invariants matter.
class DensityMatrix {
 public:
  struct Checks {
    double hermiticity_defect;  // max |rho - rho^dagger|
    double trace_defect;        // |Tr rho - 1|
    double min_eigenvalue;
  };

  DensityMatrix() = default;
  DensityMatrix(SpaceLayout layout, DenseMatrix entries);

  /// |psi><psi| / <psi|psi>.
  static DensityMatrix from_ket(SpaceLayout layout, const Ket& psi);

  const SpaceLayout& layout() const noexcept { return layout_; }
  const DenseMatrix& matrix() const noexcept { return rho_; }
  std::size_t dim() const noexcept { return layout_.total_dim(); }

  Complex trace() const { return rho_.trace(); }
  double purity() const;
  Checks checks() const;

  void validate(double hermiticity_tol = 1e-10, double trace_tol = 1e-8,
                double positivity_tol = 1e-8) const;

 private:
  SpaceLayout layout_;
  DenseMatrix rho_;
};

enum class CatParity { even, odd };

SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b);

/// Lifts a single-mode matrix onto `layout`, identity on every other factor.
Operator embed(const SpaceLayout& layout, std::string_view mode, const SparseMatrix& local);

SparseMatrix local_annihilation(std::size_t dim);

Operator identity_op(const SpaceLayout& layout);
Operator annihilation_op(const SpaceLayout& layout, std::string_view mode);
Operator creation_op(const SpaceLayout& layout, std::string_view mode);
Operator number_op(const SpaceLayout& layout, std::string_view mode);
/// x = (b + b^dagger)/sqrt(2).
Operator position_op(const SpaceLayout& layout, std::string_view mode);
/// p = (b - b^dagger)/(i sqrt(2)).
Operator momentum_op(const SpaceLayout& layout, std::string_view mode);
/// (-1)^n on the named mode.
Operator parity_op(const SpaceLayout& layout, std::string_view mode);

/// D(alpha) = exp(alpha b^dagger - alpha^* b) by scaling and squaring on the
/// truncated generator. Warns when |alpha|^2 exceeds a quarter of the mode dimension.
Operator displacement_op(const SpaceLayout& layout, std::string_view mode, Complex alpha);

Ket fock_ket(std::size_t dim, std::size_t n);
/// Poisson amplitudes, renormalized after truncation.
Ket coherent_ket(std::size_t dim, Complex alpha);
Ket cat_ket(std::size_t dim, Complex chi, CatParity parity);

/// Pure state with the named mode in the given ket and vacuum elsewhere.
DensityMatrix mode_state(const SpaceLayout& layout, std::string_view mode, const Ket& local);
DensityMatrix fock_state(const SpaceLayout& layout, std::string_view mode, std::size_t n);
DensityMatrix coherent_state(const SpaceLayout& layout, std::string_view mode, Complex alpha);
DensityMatrix cat_state(const SpaceLayout& layout, std::string_view mode, Complex chi,
                        CatParity parity);
/// Bose-Einstein populations with mean nbar on the named mode, renormalized.
DensityMatrix thermal_state(const SpaceLayout& layout, std::string_view mode, double nbar);
DensityMatrix vacuum_state(const SpaceLayout& layout);

/// Tensor product of per-mode density matrices, one per layout mode in order.
DensityMatrix product_state(const SpaceLayout& layout, const std::vector<DenseMatrix>& factors);

DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<std::string>& keep);

/// Tr(rho op).
Complex expectation(const DensityMatrix& rho, const Operator& op);

}  // namespace fanomech
