#include "fanomech/errors.hpp"
#include "fanomech/solver.hpp"

#include <cmath>
#include <map>
#include <sstream>

namespace fanomech {

Vector vectorize(const DenseMatrix& rho) {
  return Eigen::Map<const Vector>(rho.data(), rho.size());
}

DenseMatrix unvectorize(const Vector& v, std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  if (v.size() != n * n) throw DimensionError("vector length does not match dimension squared");
  return Eigen::Map<const DenseMatrix>(v.data(), n, n);
}

namespace {

SparseMatrix sparse_identity(Eigen::Index n) {
  SparseMatrix id(n, n);
  id.setIdentity();
  return id;
}

// -i (I kron H - H^T kron I)
SparseMatrix commutator_super(const SparseMatrix& H, const SparseMatrix& id) {
  SparseMatrix Ht = H.transpose();
  SparseMatrix s = kron(id, H) - kron(Ht, id);
  return s * Complex(0.0, -1.0);
}

}  // namespace

double Liouvillian::max_abs() const {
  double m = 0.0;
  for (Eigen::Index k = 0; k < matrix.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(matrix, k); it; ++it) m = std::max(m, std::abs(it.value()));
  return m;
}

Vector Liouvillian::apply(const Vector& v, double t) const {
  Vector out = matrix * v;
  for (const auto& r : rotating) out += std::exp(Complex(0.0, r.frequency * t)) * (r.matrix * v);
  apply_sandwiches(*this, v, out);
  return out;
}

namespace {

using BlockOperator = Liouvillian::BlockOperator;

BlockOperator to_blocks(const SparseMatrix& m, Eigen::Index block) {
  std::map<std::pair<Eigen::Index, Eigen::Index>, DenseMatrix> found;
  for (Eigen::Index k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
      auto [pos, fresh] = found.try_emplace({it.row() / block, it.col() / block});
      if (fresh) pos->second = DenseMatrix::Zero(block, block);
      pos->second(it.row() % block, it.col() % block) = it.value();
    }
  bool real = true;
  for (const auto& [key, b] : found) real = real && b.imag().isZero(0.0);
  BlockOperator out;
  out.block = block;
  for (auto& [key, b] : found) {
    out.index.push_back(key);
    if (real)
      out.real_blocks.push_back(b.real());
    else
      out.blocks.push_back(std::move(b));
  }
  return out;
}

// Real blocks with a real coefficient take the cheaper real-by-complex product.
// out += c * op x
template <class In, class Out>
void left_multiply(const BlockOperator& op, Complex c, const In& x, Out& out) {
  const Eigen::Index b = op.block;
  for (std::size_t k = 0; k < op.index.size(); ++k) {
    const auto [r, col] = op.index[k];
    if (op.blocks.empty() && c.imag() == 0.0)
      out.middleRows(r * b, b).noalias() += (c.real() * op.real_blocks[k]) * x.middleRows(col * b, b);
    else if (op.blocks.empty())
      out.middleRows(r * b, b).noalias() += (c * op.real_blocks[k].cast<Complex>()) * x.middleRows(col * b, b);
    else
      out.middleRows(r * b, b).noalias() += (c * op.blocks[k]) * x.middleRows(col * b, b);
  }
}

// out += c * x op
template <class In, class Out>
void right_multiply(const BlockOperator& op, Complex c, const In& x, Out& out) {
  const Eigen::Index b = op.block;
  for (std::size_t k = 0; k < op.index.size(); ++k) {
    const auto [r, col] = op.index[k];
    if (op.blocks.empty() && c.imag() == 0.0)
      out.middleCols(col * b, b).noalias() += x.middleCols(r * b, b) * (c.real() * op.real_blocks[k]);
    else if (op.blocks.empty())
      out.middleCols(col * b, b).noalias() += x.middleCols(r * b, b) * (c * op.real_blocks[k].cast<Complex>());
    else
      out.middleCols(col * b, b).noalias() += x.middleCols(r * b, b) * (c * op.blocks[k]);
  }
}

}  // namespace

void apply_sandwiches(const Liouvillian& L, const Vector& v, Vector& out) {
  if (L.sandwiches.empty()) return;
  const auto n = static_cast<Eigen::Index>(L.dim());
  const Eigen::Map<const DenseMatrix> rho(v.data(), n, n);
  Eigen::Map<DenseMatrix> acc(out.data(), n, n);
  DenseMatrix tmp;
  for (const auto& s : L.sandwiches) {
    if (s.right.is_identity()) {
      left_multiply(s.left, s.coeff, rho, acc);
    } else if (s.left.is_identity()) {
      right_multiply(s.right, s.coeff, rho, acc);
    } else {
      tmp.setZero(n, n);
      left_multiply(s.left, Complex(1.0), rho, tmp);
      right_multiply(s.right, s.coeff, tmp, acc);
    }
  }
}

Liouvillian build_liouvillian(const LindbladModel& model, const LiouvillianOptions& opts) {
  model.validate();
  const std::size_t D = model.layout.total_dim();
  if (D * D > kMaxSuperoperatorSide) {
    std::ostringstream os;
    os << "Liouvillian side " << D * D << " exceeds " << kMaxSuperoperatorSide << " for layout "
       << model.layout.describe() << "; reduce the truncation (D must stay <= 1000)";
    throw DimensionError(os.str());
  }
  const auto n = static_cast<Eigen::Index>(D);
  const SparseMatrix id = sparse_identity(n);

  Liouvillian L;
  L.layout = model.layout;
  L.lab_frame = model.lab_frame;
  L.time_unit = model.time_unit;
  L.time_unit_label = model.time_unit_label;

  const SparseMatrix H = model.hamiltonian.sparse();
  SparseMatrix acc = commutator_super(H, id);
  L.hamiltonian_diagonal = model.hamiltonian.dense().diagonal().real();
  if (L.hamiltonian_diagonal.size() != n) L.hamiltonian_diagonal = Eigen::VectorXd::Zero(n);

  const DenseMatrix gam = model.dissipation_matrix();
  std::vector<SparseMatrix> ops;
  ops.reserve(model.jumps.size());
  for (const auto& j : model.jumps) ops.push_back(j.op.sparse());

  // sum_ij G_ij (c_i rho c_j^dag - {c_j^dag c_i, rho}/2)
  const Eigen::Index block = static_cast<Eigen::Index>(model.layout.dims().back());
  SparseMatrix factored_prod(n, n);
  for (std::size_t i = 0; i < ops.size(); ++i)
    for (std::size_t j = 0; j < ops.size(); ++j) {
      const Complex g = gam(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (g == Complex(0.0)) continue;
      SparseMatrix cj_adj = ops[j].adjoint();
      SparseMatrix prod = cj_adj * ops[i];
      // Kronecker form costs nnz_i nnz_j per application, the factored form about (nnz_i + nnz_j) D.
      const double ni = static_cast<double>(ops[i].nonZeros()), nj = static_cast<double>(ops[j].nonZeros());
      if (opts.factor_dense_jumps && ni * nj > 2.0 * static_cast<double>(D) * (ni + nj)) {
        L.sandwiches.push_back({to_blocks(ops[i], block), to_blocks(cj_adj, block), g});
        factored_prod += prod * g;
        continue;
      }
      SparseMatrix prod_t = prod.transpose();
      acc -= (kron(id, prod) + kron(prod_t, id)) * (0.5 * g);
      acc += kron(SparseMatrix(ops[j].conjugate()), ops[i]) * g;
    }
  if (!L.sandwiches.empty()) {
    const BlockOperator m = to_blocks(factored_prod, block);
    L.sandwiches.push_back({m, {}, Complex(-0.5)});
    L.sandwiches.push_back({{}, m, Complex(-0.5)});
  }
  acc.prune(Complex(0.0), 0.0);
  acc.makeCompressed();
  L.matrix = std::move(acc);

  for (const auto& r : model.rotating) {
    SparseMatrix s = commutator_super(r.op.sparse(), id);
    s.makeCompressed();
    L.rotating.push_back({std::move(s), r.frequency});
  }
  return L;
}

DenseMatrix apply_lindblad_direct(const LindbladModel& model, const DenseMatrix& rho, double t) {
  const Complex I(0.0, 1.0);
  DenseMatrix H = model.hamiltonian.dense();
  for (const auto& r : model.rotating) H += std::exp(I * (r.frequency * t)) * r.op.dense();
  DenseMatrix out = -I * (H * rho - rho * H);
  const DenseMatrix gam = model.dissipation_matrix();
  std::vector<DenseMatrix> c;
  for (const auto& j : model.jumps) c.push_back(j.op.dense());
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t j = 0; j < c.size(); ++j) {
      const Complex g = gam(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (g == Complex(0.0)) continue;
      const DenseMatrix cjd = c[j].adjoint();
      const DenseMatrix prod = cjd * c[i];
      out += g * (c[i] * rho * cjd - 0.5 * (prod * rho + rho * prod));
    }
  return out;
}

}  // namespace fanomech
