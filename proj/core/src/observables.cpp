#include "fanomech/observables.hpp"

#include "fanomech/errors.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace fanomech {

namespace {

void require_single_mode(const DensityMatrix& rho, const char* what) {
  if (rho.layout().num_modes() != 1)
    throw LayoutError(std::string(what) + " expects a single-mode state, got layout " +
                      rho.layout().describe());
}

std::vector<double> axis(double lo, double hi, std::size_t n) {
  if (n < 2 || !(hi > lo)) throw ValidationError("grid axis needs at least two points and max > min");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

double trapezoid_2d(const std::vector<double>& xs, const std::vector<double>& ps, const Eigen::MatrixXd& f) {
  const double dx = xs[1] - xs[0], dp = ps[1] - ps[0];
  double s = 0.0;
  const auto nx = static_cast<Eigen::Index>(xs.size()), np = static_cast<Eigen::Index>(ps.size());
  for (Eigen::Index i = 0; i < nx; ++i) {
    const double wx = (i == 0 || i == nx - 1) ? 0.5 : 1.0;
    for (Eigen::Index j = 0; j < np; ++j) {
      const double wp = (j == 0 || j == np - 1) ? 0.5 : 1.0;
      s += wx * wp * f(i, j);
    }
  }
  return s * dx * dp;
}

// Laguerre-type recursion over Fock matrix elements of the displaced parity.
double wigner_point(const DenseMatrix& rho, Complex A, std::vector<Complex>& w) {
  const auto M = static_cast<std::size_t>(rho.rows());
  w.assign(M, Complex(0.0));
  w[0] = std::exp(-2.0 * std::norm(A)) / std::numbers::pi;
  double W = rho(0, 0).real() * w[0].real();
  for (std::size_t n = 1; n < M; ++n) {
    w[n] = 2.0 * A * w[n - 1] / std::sqrt(static_cast<double>(n));
    W += 2.0 * (rho(0, static_cast<Eigen::Index>(n)) * w[n]).real();
  }
  for (std::size_t m = 1; m < M; ++m) {
    const double sm = std::sqrt(static_cast<double>(m));
    Complex temp = w[m];
    w[m] = (2.0 * std::conj(A) * temp - sm * w[m - 1]) / sm;
    W += (rho(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m)) * w[m]).real();
    for (std::size_t n = m + 1; n < M; ++n) {
      const Complex next = (2.0 * A * w[n - 1] - sm * temp) / std::sqrt(static_cast<double>(n));
      temp = w[n];
      w[n] = next;
      W += 2.0 * (rho(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)) * w[n]).real();
    }
  }
  return W;
}

}  // namespace

double g2_equal_time(const DensityMatrix& rho, std::string_view mode) {
  const Operator a = annihilation_op(rho.layout(), mode);
  const Operator ad = a.adjoint();
  const double n = expectation(rho, ad * a).real();
  if (!(n > 1e-14)) {
    std::ostringstream os;
    os << "g2 undefined for mode '" << mode << "': <n> = " << n << " is below 1e-14";
    throw UndefinedStatisticsError(os.str());
  }
  const double num = expectation(rho, ad * ad * a * a).real();
  return num / (n * n);
}

GridSpec GridSpec::for_cat(Complex chi, std::size_t n) {
  const double c = std::max(4.0, std::abs(chi) * std::numbers::sqrt2 + 4.0);
  return GridSpec{-c, c, -c, c, n, n};
}

double WignerGrid::integral() const { return trapezoid_2d(x_axis, p_axis, values); }

WignerGrid wigner(const DensityMatrix& rho, const GridSpec& grid) {
  require_single_mode(rho, "wigner");
  WignerGrid out;
  out.x_axis = axis(grid.x_min, grid.x_max, grid.nx);
  out.p_axis = axis(grid.p_min, grid.p_max, grid.np);
  out.values.resize(static_cast<Eigen::Index>(grid.nx), static_cast<Eigen::Index>(grid.np));
  const DenseMatrix& r = rho.matrix();
  std::vector<Complex> work;
  for (std::size_t i = 0; i < grid.nx; ++i)
    for (std::size_t j = 0; j < grid.np; ++j) {
      const Complex A = Complex(out.x_axis[i], out.p_axis[j]) / std::numbers::sqrt2;
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = wigner_point(r, A, work);
    }

  double nbar = 0.0;
  for (Eigen::Index k = 0; k < r.rows(); ++k) nbar += static_cast<double>(k) * r(k, k).real();
  const double reach = std::sqrt(2.0 * nbar + 1.0) + 3.0;
  const double half_width = std::min({-grid.x_min, grid.x_max, -grid.p_min, grid.p_max});
  const double integral = out.integral();
  if (half_width < reach || std::abs(integral - 1.0) > 2e-2) {
    std::ostringstream os;
    os << "Wigner grid may not cover the state: half-width " << half_width << ", suggested " << reach
       << ", integral of W = " << integral;
    warn(os.str());
  }
  return out;
}

double wigner_log_negativity(const WignerGrid& w) {
  return std::log(trapezoid_2d(w.x_axis, w.p_axis, w.values.cwiseAbs()));
}

double fidelity_to_cat(const DensityMatrix& rho, Complex chi, CatParity parity) {
  require_single_mode(rho, "fidelity_to_cat");
  const Ket cat = cat_ket(rho.layout().total_dim(), chi, parity);
  const double overlap = (cat.adjoint() * rho.matrix() * cat)(0, 0).real();
  return std::sqrt(std::max(0.0, overlap));
}

std::map<std::string, double> mean_occupations(const DensityMatrix& rho) {
  std::map<std::string, double> out;
  for (const auto& label : rho.layout().labels()) out[label] = expectation(rho, number_op(rho.layout(), label)).real();
  return out;
}

DensityMatrix rotate_mode(const DensityMatrix& rho, double phi) {
  require_single_mode(rho, "rotate_mode");
  DenseMatrix r = rho.matrix();
  for (Eigen::Index j = 0; j < r.cols(); ++j)
    for (Eigen::Index i = 0; i < r.rows(); ++i)
      r(i, j) *= std::exp(Complex(0.0, phi * static_cast<double>(i - j)));
  return DensityMatrix(rho.layout(), std::move(r));
}

double odd_population(const DensityMatrix& rho) {
  require_single_mode(rho, "odd_population");
  double s = 0.0;
  for (Eigen::Index k = 1; k < rho.matrix().rows(); k += 2) s += rho.matrix()(k, k).real();
  return s;
}

}  // namespace fanomech
