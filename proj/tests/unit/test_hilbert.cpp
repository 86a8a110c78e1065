#include "fanomech/errors.hpp"
#include "fanomech/hilbert.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace fanomech;

namespace {

double factorial(int n) { return std::tgamma(n + 1.0); }

}  // namespace

TEST_CASE("layout invariants") {
  const SpaceLayout l({2, 3, 4}, {"a", "d", "b"});
  CHECK(l.total_dim() == 24);
  CHECK(l.index_of("d") == 1);
  CHECK(l.stride(0) == 12);
  CHECK(l.stride(2) == 1);
  CHECK_THROWS_AS(SpaceLayout({1, 3}, {"a", "b"}), LayoutError);
  CHECK_THROWS_AS(SpaceLayout({2, 3}, {"a", "a"}), LayoutError);
  CHECK_THROWS_AS(l.index_of("x"), LayoutError);
  CHECK(l.subset({"b", "a"}).labels() == std::vector<std::string>{"a", "b"});
}

TEST_CASE("annihilation operator matrix elements") {
  const auto l = SpaceLayout::single("b", 3);
  const DenseMatrix b = annihilation_op(l, "b").dense();
  CHECK(std::abs(b(0, 1) - 1.0) < 1e-15);
  CHECK(std::abs(b(1, 2) - std::sqrt(2.0)) < 1e-15);
  CHECK(b.cwiseAbs().sum() == doctest::Approx(1.0 + std::sqrt(2.0)));
  CHECK_THROWS_AS(annihilation_op(l, "x"), LayoutError);
}

TEST_CASE("truncated commutator has the corner defect only") {
  const auto l = SpaceLayout::single("b", 4);
  const DenseMatrix b = annihilation_op(l, "b").dense();
  const DenseMatrix c = b * b.adjoint() - b.adjoint() * b;
  for (int i = 0; i < 3; ++i) CHECK(std::abs(c(i, i) - 1.0) < 1e-14);
  CHECK(std::abs(c(3, 3) + 3.0) < 1e-14);
  CHECK((c - c.diagonal().asDiagonal().toDenseMatrix()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("embedding follows the Kronecker order") {
  const SpaceLayout l({2, 3}, {"a", "b"});
  const DenseMatrix b = annihilation_op(l, "b").dense();
  const DenseMatrix b3 = annihilation_op(SpaceLayout::single("b", 3), "b").dense();
  DenseMatrix expect = DenseMatrix::Zero(6, 6);
  expect.block(0, 0, 3, 3) = b3;
  expect.block(3, 3, 3, 3) = b3;
  CHECK((b - expect).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("tensor construction is associative") {
  const SpaceLayout l({2, 3, 2}, {"p", "q", "r"});
  const SparseMatrix a2 = local_annihilation(2), a3 = local_annihilation(3);
  const SparseMatrix left = kron(kron(a2, a3), a2), right = kron(a2, kron(a3, a2));
  CHECK(DenseMatrix(left - right).cwiseAbs().maxCoeff() == 0.0);
  const DenseMatrix q = annihilation_op(l, "q").dense();
  SparseMatrix i2(2, 2);
  i2.setIdentity();
  CHECK((q - DenseMatrix(kron(kron(i2, a3), i2))).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("quadratures") {
  const auto l = SpaceLayout::single("b", 6);
  const DenseMatrix x = position_op(l, "b").dense(), p = momentum_op(l, "b").dense();
  CHECK(position_op(l, "b").is_hermitian(1e-12));
  CHECK(momentum_op(l, "b").is_hermitian(1e-12));
  const DensityMatrix vac = vacuum_state(l);
  CHECK(expectation(vac, position_op(l, "b") * position_op(l, "b")).real() == doctest::Approx(0.5).epsilon(1e-14));
  const DenseMatrix comm = x * p - p * x;
  for (int i = 0; i < 5; ++i) CHECK(std::abs(comm(i, i) - Complex(0, 1)) < 1e-13);
  const auto big = SpaceLayout::single("b", 40);
  const Complex alpha(0.8, -0.3);
  CHECK(expectation(coherent_state(big, "b", alpha), position_op(big, "b")).real() ==
        doctest::Approx(std::sqrt(2.0) * alpha.real()).epsilon(1e-10));
}

TEST_CASE("displacement operator") {
  const auto l = SpaceLayout::single("b", 20);
  CHECK((displacement_op(l, "b", 0.0).dense() - DenseMatrix::Identity(20, 20)).cwiseAbs().maxCoeff() < 1e-14);
  const Ket psi = displacement_op(l, "b", 0.5).dense().col(0);
  for (int n = 0; n < 12; ++n) {
    const double amp = std::exp(-0.125) * std::pow(0.5, n) / std::sqrt(factorial(n));
    CHECK(std::abs(psi(n) - amp) < 1e-10);
  }
  const auto l30 = SpaceLayout::single("b", 30);
  const DenseMatrix prod = displacement_op(l30, "b", 1.0).dense() * displacement_op(l30, "b", -1.0).dense();
  CHECK((prod.topLeftCorner(20, 20) - DenseMatrix::Identity(20, 20)).cwiseAbs().maxCoeff() < 1e-8);

  const auto l80 = SpaceLayout::single("b", 80);
  const Complex a(0.6, 0.2), b(-0.3, 0.7);
  const DenseMatrix lhs = displacement_op(l80, "b", a).dense() * displacement_op(l80, "b", b).dense();
  const DenseMatrix rhs = std::exp((a * std::conj(b) - std::conj(a) * b) / 2.0) * displacement_op(l80, "b", a + b).dense();
  CHECK((lhs - rhs).topLeftCorner(20, 20).cwiseAbs().maxCoeff() < 1e-8);
  const DenseMatrix D = displacement_op(l30, "b", Complex(1.0, 0.5)).dense();
  const int keep = 30 - static_cast<int>(std::ceil(4 * std::abs(Complex(1.0, 0.5))));
  CHECK(((D.adjoint() * D) - DenseMatrix::Identity(30, 30)).topLeftCorner(keep, keep).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("displacement warns for large amplitudes") {
  int warnings = 0;
  auto old = set_warning_handler([&](std::string_view) { ++warnings; });
  (void)displacement_op(SpaceLayout::single("b", 8), "b", 2.0);
  set_warning_handler(old);
  CHECK(warnings == 1);
}

TEST_CASE("coherent and Fock states") {
  const auto l = SpaceLayout::single("b", 40);
  CHECK((coherent_state(l, "b", 0.0).matrix() - fock_state(l, "b", 0).matrix()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(expectation(coherent_state(l, "b", 1.54), number_op(l, "b")).real() == doctest::Approx(2.3716).epsilon(1e-4 / 2.37));
  const Ket plus = coherent_ket(40, 1.54), minus = coherent_ket(40, -1.54);
  CHECK(std::abs(plus.dot(minus).real() - std::exp(-2 * 1.54 * 1.54)) < 1e-5);
  CHECK_THROWS_AS(fock_state(l, "b", 40), DimensionError);
  CHECK(std::abs(coherent_state(l, "b", Complex(1, 1)).trace() - 1.0) < 1e-10);
}

TEST_CASE("cat states") {
  const auto l = SpaceLayout::single("b", 40);
  CHECK((cat_state(l, "b", 0.0, CatParity::even).matrix() - vacuum_state(l).matrix()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK_THROWS_AS(cat_state(l, "b", 0.0, CatParity::odd), DegenerateCatError);
  const double chi = 1.54, x2 = chi * chi;
  const Ket cat = cat_ket(40, chi, CatParity::even);
  double odd = 0.0;
  for (int n = 1; n < 40; n += 2) odd += std::norm(cat(n));
  CHECK(odd < 1e-12);
  for (int k = 0; k < 12; ++k) {
    const int n = 2 * k;
    const double p = std::pow(x2, n) / factorial(n) / std::cosh(x2);
    CHECK(std::abs(std::norm(cat(n)) - p) < 1e-8);
  }
}

TEST_CASE("partial trace") {
  const SpaceLayout l({3, 4}, {"A-", "b"});
  const DenseMatrix r1 = testing::random_density(3, 1), r2 = testing::random_density(4, 2);
  const DensityMatrix prod = product_state(l, {r1, r2});
  CHECK((partial_trace(prod, {"A-"}).matrix() - r1).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((partial_trace(prod, {"b"}).matrix() - r2).cwiseAbs().maxCoeff() < 1e-14);

  const SpaceLayout q({2, 2}, {"a", "b"});
  Ket bell = Ket::Zero(4);
  bell(0) = bell(3) = 1.0 / std::sqrt(2.0);
  const DensityMatrix red = partial_trace(DensityMatrix::from_ket(q, bell), {"a"});
  CHECK((red.matrix() - 0.5 * DenseMatrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-15);

  const DensityMatrix random(l, testing::random_density(12, 7));
  CHECK(std::abs(partial_trace(random, {"b"}).trace() - random.trace()) < 1e-12);
  CHECK_THROWS_AS(partial_trace(random, {}), LayoutError);
  CHECK_THROWS_AS(partial_trace(random, {"x"}), LayoutError);
}

TEST_CASE("expectation values") {
  const auto l = SpaceLayout::single("b", 30);
  const DensityMatrix rho = coherent_state(l, "b", 0.7);
  CHECK(std::abs(expectation(rho, identity_op(l)) - 1.0) < 1e-12);
  CHECK(expectation(fock_state(l, "b", 3), number_op(l, "b")).real() == doctest::Approx(3.0));
  const Operator n = number_op(l, "b");
  const double a2 = 0.49;
  CHECK(expectation(rho, n * n).real() == doctest::Approx(a2 * a2 + a2).epsilon(1e-10));
  CHECK(std::abs(expectation(rho, n).imag()) < 1e-10);
  CHECK_THROWS_AS(expectation(rho, number_op(SpaceLayout::single("b", 5), "b")), LayoutError);
}

TEST_CASE("density-matrix invariants") {
  const auto l = SpaceLayout::single("b", 10);
  for (const auto& rho : {vacuum_state(l), thermal_state(l, "b", 0.5), cat_state(l, "b", 1.0, CatParity::odd),
                          coherent_state(l, "b", Complex(0.3, 0.4))})
    CHECK_NOTHROW(rho.validate());
  DenseMatrix bad = DenseMatrix::Zero(10, 10);
  bad(0, 0) = 2.0;
  CHECK_THROWS_AS(DensityMatrix(l, bad).validate(), InvalidStateError);
  bad(0, 0) = 1.0;
  bad(0, 1) = 0.5;
  CHECK_THROWS_AS(DensityMatrix(l, bad).validate(), InvalidStateError);
}

TEST_CASE("dense and sparse storage agree") {
  const SpaceLayout l({4, 80}, {"A-", "b"});
  const Operator b = annihilation_op(l, "b");
  CHECK(b.is_sparse());
  const Operator x = (b + b.adjoint()) * number_op(l, "A-");
  CHECK(std::abs(x.coeff(80 + 1, 80) - 1.0) < 1e-15);
  CHECK((DenseMatrix(x.sparse()) - x.dense()).cwiseAbs().maxCoeff() == 0.0);
  const SpaceLayout s({2, 3}, {"A-", "b"});
  const Operator small = annihilation_op(s, "b");
  CHECK(!small.is_sparse());
  CHECK((DenseMatrix(small.sparse()) - small.dense()).cwiseAbs().maxCoeff() == 0.0);
}
