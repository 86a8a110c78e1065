#include "fanomech/hilbert.hpp"

#include "fanomech/errors.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace fanomech {

// SpaceLayout

SpaceLayout::SpaceLayout(std::vector<std::size_t> dims, std::vector<std::string> labels)
    : dims_(std::move(dims)), labels_(std::move(labels)) {
  if (dims_.empty()) throw LayoutError("layout needs at least one mode");
  if (dims_.size() != labels_.size())
    throw LayoutError("layout has " + std::to_string(dims_.size()) + " dimensions but " +
                      std::to_string(labels_.size()) + " labels");
  std::set<std::string> seen;
  total_ = 1;
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (dims_[i] < 2)
      throw LayoutError("mode '" + labels_[i] + "' has dimension " + std::to_string(dims_[i]) +
                        "; every dimension must be >= 2");
    if (!seen.insert(labels_[i]).second)
      throw LayoutError("duplicate mode label '" + labels_[i] + "'");
    total_ *= dims_[i];
  }
}

bool SpaceLayout::contains(std::string_view label) const noexcept {
  return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

std::size_t SpaceLayout::index_of(std::string_view label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end())
    throw LayoutError("unknown mode label '" + std::string(label) + "' in layout " + describe());
  return static_cast<std::size_t>(it - labels_.begin());
}

std::size_t SpaceLayout::stride(std::size_t mode) const {
  if (mode >= dims_.size()) throw LayoutError("mode index out of range");
  std::size_t s = 1;
  for (std::size_t k = mode + 1; k < dims_.size(); ++k) s *= dims_[k];
  return s;
}

SpaceLayout SpaceLayout::subset(const std::vector<std::string>& keep) const {
  if (keep.empty()) throw LayoutError("subset needs at least one label");
  for (const auto& k : keep) index_of(k);
  std::vector<std::size_t> d;
  std::vector<std::string> l;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (std::find(keep.begin(), keep.end(), labels_[i]) != keep.end()) {
      d.push_back(dims_[i]);
      l.push_back(labels_[i]);
    }
  }
  return SpaceLayout(std::move(d), std::move(l));
}

SpaceLayout SpaceLayout::with_dims(std::vector<std::size_t> dims) const {
  return SpaceLayout(std::move(dims), labels_);
}

std::string SpaceLayout::describe() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (i) os << " x ";
    os << labels_[i] << ':' << dims_[i];
  }
  return os.str();
}

// Operator

Operator::Operator(SpaceLayout layout, SparseMatrix m) : layout_(std::move(layout)) {
  const auto n = static_cast<Eigen::Index>(layout_.total_dim());
  if (m.rows() != n || m.cols() != n)
    throw DimensionError("operator is " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + " but layout " + layout_.describe() +
                         " has dimension " + std::to_string(n));
  if (layout_.total_dim() <= kDenseLimit) {
    m_ = DenseMatrix(m);
  } else {
    m.makeCompressed();
    m_ = std::move(m);
  }
}

Operator::Operator(SpaceLayout layout, DenseMatrix m) : layout_(std::move(layout)) {
  const auto n = static_cast<Eigen::Index>(layout_.total_dim());
  if (m.rows() != n || m.cols() != n)
    throw DimensionError("operator is " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + " but layout " + layout_.describe() +
                         " has dimension " + std::to_string(n));
  if (layout_.total_dim() <= kDenseLimit)
    m_ = std::move(m);
  else
    m_ = SparseMatrix(m.sparseView());
}

Operator Operator::zero(const SpaceLayout& layout) {
  const auto n = static_cast<Eigen::Index>(layout.total_dim());
  return Operator(layout, SparseMatrix(n, n));
}

Operator Operator::identity(const SpaceLayout& layout) {
  const auto n = static_cast<Eigen::Index>(layout.total_dim());
  SparseMatrix id(n, n);
  id.setIdentity();
  return Operator(layout, std::move(id));
}

DenseMatrix Operator::dense() const {
  if (auto* d = std::get_if<DenseMatrix>(&m_)) return *d;
  return DenseMatrix(std::get<SparseMatrix>(m_));
}

SparseMatrix Operator::sparse() const {
  if (auto* s = std::get_if<SparseMatrix>(&m_)) return *s;
  SparseMatrix s = std::get<DenseMatrix>(m_).sparseView();
  s.makeCompressed();
  return s;
}

Complex Operator::coeff(std::size_t row, std::size_t col) const {
  const auto r = static_cast<Eigen::Index>(row), c = static_cast<Eigen::Index>(col);
  if (auto* d = std::get_if<DenseMatrix>(&m_)) return (*d)(r, c);
  return std::get<SparseMatrix>(m_).coeff(r, c);
}

Operator Operator::adjoint() const {
  if (auto* d = std::get_if<DenseMatrix>(&m_)) return Operator(layout_, DenseMatrix(d->adjoint()));
  return Operator(layout_, SparseMatrix(std::get<SparseMatrix>(m_).adjoint()));
}

bool Operator::is_hermitian(double tol) const {
  if (auto* d = std::get_if<DenseMatrix>(&m_))
    return d->rows() == 0 || (*d - d->adjoint()).cwiseAbs().maxCoeff() <= tol;
  const auto& s = std::get<SparseMatrix>(m_);
  SparseMatrix diff = s - SparseMatrix(s.adjoint());
  for (Eigen::Index k = 0; k < diff.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(diff, k); it; ++it)
      if (std::abs(it.value()) > tol) return false;
  return true;
}

double Operator::max_abs() const {
  if (auto* d = std::get_if<DenseMatrix>(&m_)) return d->size() ? d->cwiseAbs().maxCoeff() : 0.0;
  const auto& s = std::get<SparseMatrix>(m_);
  double m = 0.0;
  for (Eigen::Index k = 0; k < s.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(s, k); it; ++it) m = std::max(m, std::abs(it.value()));
  return m;
}

void Operator::check_same_layout(const Operator& other) const {
  if (!(layout_ == other.layout_))
    throw LayoutError("layout mismatch: " + layout_.describe() + " vs " +
                      other.layout_.describe());
}

Operator& Operator::operator+=(const Operator& rhs) {
  check_same_layout(rhs);
  if (auto* d = std::get_if<DenseMatrix>(&m_))
    *d += std::get<DenseMatrix>(rhs.m_);
  else
    std::get<SparseMatrix>(m_) += std::get<SparseMatrix>(rhs.m_);
  return *this;
}

Operator& Operator::operator-=(const Operator& rhs) {
  check_same_layout(rhs);
  if (auto* d = std::get_if<DenseMatrix>(&m_))
    *d -= std::get<DenseMatrix>(rhs.m_);
  else
    std::get<SparseMatrix>(m_) -= std::get<SparseMatrix>(rhs.m_);
  return *this;
}

Operator& Operator::operator*=(Complex s) {
  std::visit([s](auto& m) { m *= s; }, m_);
  return *this;
}

Operator operator*(const Operator& lhs, const Operator& rhs) {
  lhs.check_same_layout(rhs);
  if (auto* d = std::get_if<DenseMatrix>(&lhs.m_))
    return Operator(lhs.layout_, DenseMatrix(*d * std::get<DenseMatrix>(rhs.m_)));
  SparseMatrix p = std::get<SparseMatrix>(lhs.m_) * std::get<SparseMatrix>(rhs.m_);
  return Operator(lhs.layout_, std::move(p));
}

// DensityMatrix

DensityMatrix::DensityMatrix(SpaceLayout layout, DenseMatrix entries)
    : layout_(std::move(layout)), rho_(std::move(entries)) {
  const auto n = static_cast<Eigen::Index>(layout_.total_dim());
  if (rho_.rows() != n || rho_.cols() != n)
    throw DimensionError("density matrix is " + std::to_string(rho_.rows()) + "x" +
                         std::to_string(rho_.cols()) + " but layout " + layout_.describe() +
                         " has dimension " + std::to_string(n));
}

DensityMatrix DensityMatrix::from_ket(SpaceLayout layout, const Ket& psi) {
  const double nrm = psi.norm();
  if (!(nrm > 0.0)) throw InvalidStateError("cannot build a density matrix from a zero ket");
  Ket u = psi / nrm;
  return DensityMatrix(std::move(layout), u * u.adjoint());
}

double DensityMatrix::purity() const { return (rho_ * rho_).trace().real(); }

DensityMatrix::Checks DensityMatrix::checks() const {
  Checks c{};
  c.hermiticity_defect = (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff();
  c.trace_defect = std::abs(rho_.trace() - Complex(1.0, 0.0));
  DenseMatrix h = 0.5 * (rho_ + rho_.adjoint());
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(h, Eigen::EigenvaluesOnly);
  c.min_eigenvalue = es.eigenvalues().minCoeff();
  return c;
}

void DensityMatrix::validate(double hermiticity_tol, double trace_tol,
                             double positivity_tol) const {
  const Checks c = checks();
  std::ostringstream os;
  if (c.hermiticity_defect > hermiticity_tol)
    os << "hermiticity defect " << c.hermiticity_defect << " > " << hermiticity_tol << "; ";
  if (c.trace_defect > trace_tol)
    os << "trace defect " << c.trace_defect << " > " << trace_tol << "; ";
  if (c.min_eigenvalue < -positivity_tol)
    os << "minimum eigenvalue " << c.min_eigenvalue << " < " << -positivity_tol << "; ";
  const std::string msg = os.str();
  if (!msg.empty()) throw InvalidStateError("invalid density matrix: " + msg.substr(0, msg.size() - 2));
}

// Construction helpers

SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b) {
  std::vector<Eigen::Triplet<Complex>> trips;
  trips.reserve(static_cast<std::size_t>(a.nonZeros() * b.nonZeros()));
  for (Eigen::Index ka = 0; ka < a.outerSize(); ++ka)
    for (SparseMatrix::InnerIterator ia(a, ka); ia; ++ia)
      for (Eigen::Index kb = 0; kb < b.outerSize(); ++kb)
        for (SparseMatrix::InnerIterator ib(b, kb); ib; ++ib)
          trips.emplace_back(ia.row() * b.rows() + ib.row(), ia.col() * b.cols() + ib.col(),
                             ia.value() * ib.value());
  SparseMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

Operator embed(const SpaceLayout& layout, std::string_view mode, const SparseMatrix& local) {
  const std::size_t idx = layout.index_of(mode);
  const auto d = static_cast<Eigen::Index>(layout.dims()[idx]);
  if (local.rows() != d || local.cols() != d)
    throw DimensionError("local operator for mode '" + std::string(mode) + "' must be " +
                         std::to_string(d) + "x" + std::to_string(d));
  std::size_t before = 1, after = 1;
  for (std::size_t k = 0; k < idx; ++k) before *= layout.dims()[k];
  for (std::size_t k = idx + 1; k < layout.num_modes(); ++k) after *= layout.dims()[k];
  SparseMatrix m = local;
  if (before > 1) {
    SparseMatrix id(static_cast<Eigen::Index>(before), static_cast<Eigen::Index>(before));
    id.setIdentity();
    m = kron(id, m);
  }
  if (after > 1) {
    SparseMatrix id(static_cast<Eigen::Index>(after), static_cast<Eigen::Index>(after));
    id.setIdentity();
    m = kron(m, id);
  }
  return Operator(layout, std::move(m));
}

SparseMatrix local_annihilation(std::size_t dim) {
  const auto n = static_cast<Eigen::Index>(dim);
  SparseMatrix b(n, n);
  b.reserve(Eigen::VectorXi::Constant(n, 1));
  for (Eigen::Index k = 1; k < n; ++k) b.insert(k - 1, k) = std::sqrt(static_cast<double>(k));
  b.makeCompressed();
  return b;
}

Operator identity_op(const SpaceLayout& layout) { return Operator::identity(layout); }

Operator annihilation_op(const SpaceLayout& layout, std::string_view mode) {
  return embed(layout, mode, local_annihilation(layout.dim_of(mode)));
}

Operator creation_op(const SpaceLayout& layout, std::string_view mode) {
  return embed(layout, mode, SparseMatrix(local_annihilation(layout.dim_of(mode)).adjoint()));
}

Operator number_op(const SpaceLayout& layout, std::string_view mode) {
  const auto n = static_cast<Eigen::Index>(layout.dim_of(mode));
  SparseMatrix m(n, n);
  for (Eigen::Index k = 1; k < n; ++k) m.insert(k, k) = static_cast<double>(k);
  return embed(layout, mode, m);
}

Operator position_op(const SpaceLayout& layout, std::string_view mode) {
  SparseMatrix b = local_annihilation(layout.dim_of(mode));
  SparseMatrix x = (b + SparseMatrix(b.adjoint())) * Complex(1.0 / std::sqrt(2.0), 0.0);
  return embed(layout, mode, x);
}

Operator momentum_op(const SpaceLayout& layout, std::string_view mode) {
  SparseMatrix b = local_annihilation(layout.dim_of(mode));
  SparseMatrix p = (b - SparseMatrix(b.adjoint())) * Complex(0.0, -1.0 / std::sqrt(2.0));
  return embed(layout, mode, p);
}

Operator parity_op(const SpaceLayout& layout, std::string_view mode) {
  const auto n = static_cast<Eigen::Index>(layout.dim_of(mode));
  SparseMatrix m(n, n);
  for (Eigen::Index k = 0; k < n; ++k) m.insert(k, k) = (k % 2 == 0) ? 1.0 : -1.0;
  return embed(layout, mode, m);
}

Operator displacement_op(const SpaceLayout& layout, std::string_view mode, Complex alpha) {
  const std::size_t dim = layout.dim_of(mode);
  if (std::norm(alpha) > static_cast<double>(dim) / 4.0) {
    std::ostringstream os;
    os << "displacement |alpha|^2 = " << std::norm(alpha) << " exceeds dim/4 = "
       << static_cast<double>(dim) / 4.0 << " for mode '" << mode << "'; truncation error likely";
    warn(os.str());
  }
  DenseMatrix b(local_annihilation(dim));
  DenseMatrix gen = alpha * b.adjoint() - std::conj(alpha) * b;
  DenseMatrix d = gen.exp();
  SparseMatrix ds = d.sparseView(1.0, 1e-300);
  return embed(layout, mode, ds);
}

Ket fock_ket(std::size_t dim, std::size_t n) {
  if (n >= dim)
    throw DimensionError("Fock level " + std::to_string(n) + " outside truncation dimension " +
                         std::to_string(dim));
  Ket k = Ket::Zero(static_cast<Eigen::Index>(dim));
  k(static_cast<Eigen::Index>(n)) = 1.0;
  return k;
}

namespace {

// Untruncated-normalization Poisson amplitudes e^{-|a|^2/2} a^n / sqrt(n!).
Ket poisson_amplitudes(std::size_t dim, Complex alpha) {
  Ket c(static_cast<Eigen::Index>(dim));
  c(0) = std::exp(-0.5 * std::norm(alpha));
  for (Eigen::Index n = 1; n < c.size(); ++n)
    c(n) = c(n - 1) * alpha / std::sqrt(static_cast<double>(n));
  return c;
}

}  // namespace

Ket coherent_ket(std::size_t dim, Complex alpha) {
  Ket c = poisson_amplitudes(dim, alpha);
  return c / c.norm();
}

Ket cat_ket(std::size_t dim, Complex chi, CatParity parity) {
  const double sign = parity == CatParity::even ? 1.0 : -1.0;
  const double denom = 2.0 * (1.0 + sign * std::exp(-2.0 * std::norm(chi)));
  if (denom < 1e-14)
    throw DegenerateCatError("odd cat with chi = 0 has vanishing normalization");
  Ket c = poisson_amplitudes(dim, chi);
  for (Eigen::Index n = 0; n < c.size(); ++n) {
    const bool odd = (n % 2) != 0;
    c(n) = (odd ? (1.0 - sign) : (1.0 + sign)) * c(n);
  }
  const double nrm = c.norm();
  if (!(nrm > 0.0)) throw DegenerateCatError("cat state has no support within truncation");
  return c / nrm;
}

DensityMatrix mode_state(const SpaceLayout& layout, std::string_view mode, const Ket& local) {
  const std::size_t idx = layout.index_of(mode);
  if (static_cast<std::size_t>(local.size()) != layout.dims()[idx])
    throw DimensionError("local ket size does not match mode '" + std::string(mode) + "'");
  std::vector<DenseMatrix> factors;
  for (std::size_t k = 0; k < layout.num_modes(); ++k) {
    const auto d = static_cast<Eigen::Index>(layout.dims()[k]);
    if (k == idx) {
      Ket u = local / local.norm();
      factors.emplace_back(u * u.adjoint());
    } else {
      DenseMatrix v = DenseMatrix::Zero(d, d);
      v(0, 0) = 1.0;
      factors.push_back(std::move(v));
    }
  }
  return product_state(layout, factors);
}

DensityMatrix fock_state(const SpaceLayout& layout, std::string_view mode, std::size_t n) {
  return mode_state(layout, mode, fock_ket(layout.dim_of(mode), n));
}

DensityMatrix coherent_state(const SpaceLayout& layout, std::string_view mode, Complex alpha) {
  return mode_state(layout, mode, coherent_ket(layout.dim_of(mode), alpha));
}

DensityMatrix cat_state(const SpaceLayout& layout, std::string_view mode, Complex chi,
                        CatParity parity) {
  return mode_state(layout, mode, cat_ket(layout.dim_of(mode), chi, parity));
}

DensityMatrix thermal_state(const SpaceLayout& layout, std::string_view mode, double nbar) {
  if (!(nbar >= 0.0)) throw InvalidStateError("thermal occupation must be >= 0");
  const std::size_t idx = layout.index_of(mode);
  std::vector<DenseMatrix> factors;
  for (std::size_t k = 0; k < layout.num_modes(); ++k) {
    const auto d = static_cast<Eigen::Index>(layout.dims()[k]);
    DenseMatrix v = DenseMatrix::Zero(d, d);
    if (k == idx) {
      const double q = nbar / (1.0 + nbar);
      double p = 1.0, sum = 0.0;
      for (Eigen::Index n = 0; n < d; ++n) {
        v(n, n) = p;
        sum += p;
        p *= q;
      }
      v /= sum;
    } else {
      v(0, 0) = 1.0;
    }
    factors.push_back(std::move(v));
  }
  return product_state(layout, factors);
}

DensityMatrix vacuum_state(const SpaceLayout& layout) {
  DenseMatrix v = DenseMatrix::Zero(static_cast<Eigen::Index>(layout.total_dim()),
                                    static_cast<Eigen::Index>(layout.total_dim()));
  v(0, 0) = 1.0;
  return DensityMatrix(layout, std::move(v));
}

DensityMatrix product_state(const SpaceLayout& layout, const std::vector<DenseMatrix>& factors) {
  if (factors.size() != layout.num_modes())
    throw DimensionError("product_state needs one factor per mode");
  DenseMatrix out = DenseMatrix::Ones(1, 1);
  for (std::size_t k = 0; k < factors.size(); ++k) {
    const auto& f = factors[k];
    const auto d = static_cast<Eigen::Index>(layout.dims()[k]);
    if (f.rows() != d || f.cols() != d)
      throw DimensionError("factor for mode '" + layout.labels()[k] + "' has wrong size");
    DenseMatrix next(out.rows() * d, out.cols() * d);
    for (Eigen::Index i = 0; i < out.rows(); ++i)
      for (Eigen::Index j = 0; j < out.cols(); ++j)
        next.block(i * d, j * d, d, d) = out(i, j) * f;
    out = std::move(next);
  }
  return DensityMatrix(layout, std::move(out));
}

DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<std::string>& keep) {
  const SpaceLayout& full = rho.layout();
  const SpaceLayout kept = full.subset(keep);
  const std::size_t n_modes = full.num_modes();
  std::vector<bool> is_kept(n_modes);
  for (std::size_t k = 0; k < n_modes; ++k) is_kept[k] = kept.contains(full.labels()[k]);

  const std::size_t K = kept.total_dim();
  const std::size_t T = full.total_dim() / K;
  // flat[k * T + t] = full index with kept multi-index k and traced multi-index t
  std::vector<std::size_t> flat(full.total_dim());
  std::vector<std::size_t> digits(n_modes);
  for (std::size_t f = 0; f < full.total_dim(); ++f) {
    std::size_t r = f;
    for (std::size_t m = n_modes; m-- > 0;) {
      digits[m] = r % full.dims()[m];
      r /= full.dims()[m];
    }
    std::size_t ki = 0, ti = 0;
    for (std::size_t m = 0; m < n_modes; ++m) {
      if (is_kept[m])
        ki = ki * full.dims()[m] + digits[m];
      else
        ti = ti * full.dims()[m] + digits[m];
    }
    flat[ki * T + ti] = f;
  }
  const DenseMatrix& R = rho.matrix();
  DenseMatrix out = DenseMatrix::Zero(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(K));
  for (std::size_t j = 0; j < K; ++j)
    for (std::size_t i = 0; i < K; ++i) {
      Complex s = 0.0;
      for (std::size_t t = 0; t < T; ++t)
        s += R(static_cast<Eigen::Index>(flat[i * T + t]), static_cast<Eigen::Index>(flat[j * T + t]));
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s;
    }
  return DensityMatrix(kept, std::move(out));
}

Complex expectation(const DensityMatrix& rho, const Operator& op) {
  if (!(rho.layout() == op.layout()))
    throw LayoutError("expectation layout mismatch: " + rho.layout().describe() + " vs " +
                      op.layout().describe());
  const DenseMatrix& R = rho.matrix();
  Complex s = 0.0;
  if (!op.is_sparse()) {
    // Tr(R A) = sum_ij R_ij A_ji
    s = R.cwiseProduct(op.dense().transpose()).sum();
  } else {
    const SparseMatrix A = op.sparse();
    for (Eigen::Index k = 0; k < A.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(A, k); it; ++it) s += R(it.col(), it.row()) * it.value();
  }
  return s;
}

}  // namespace fanomech
