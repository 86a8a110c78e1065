#pragma once

// Quantities computed from density matrices: correlation functions, Wigner
// functions, cat fidelities and occupations.
//
// Quadratures follow x = (b + b^dagger)/sqrt(2), p = (b - b^dagger)/(i sqrt(2)),
// so the vacuum Wigner function is exp(-x^2 - p^2)/pi.

#include "fanomech/hilbert.hpp"

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace fanomech {

/// Tr(rho o^dag o^dag o o) / Tr(rho o^dag o)^2 for the named mode.
double g2_equal_time(const DensityMatrix& rho, std::string_view mode);

struct GridSpec {
  double x_min = -4.0, x_max = 4.0;
  double p_min = -4.0, p_max = 4.0;
  std::size_t nx = 201, np = 201;

  /// Square grid [-c, c]^2 with c = max(4, |chi| sqrt(2) + 4).
  static GridSpec for_cat(Complex chi, std::size_t n = 201);
};

struct WignerGrid {
  std::vector<double> x_axis, p_axis;
  /// values(ix, ip) = W(x_axis[ix], p_axis[ip]).
  Eigen::MatrixXd values;

  /// 2-D trapezoidal integral of W.
  double integral() const;
};

/// Single-mode Wigner function in the Fock basis. Warns when the grid does
/// not cover the state support or the integral of W deviates from one by more than 2e-2.
WignerGrid wigner(const DensityMatrix& rho, const GridSpec& grid = {});

/// ln of the trapezoidal integral of |W|.
double wigner_log_negativity(const WignerGrid& w);

/// sqrt(<cat|rho|cat>) for a single-mode rho.
double fidelity_to_cat(const DensityMatrix& rho, Complex chi, CatParity parity = CatParity::even);

/// Real part of <n> for every mode of the layout.
std::map<std::string, double> mean_occupations(const DensityMatrix& rho);

/// exp(i phi n) rho exp(-i phi n) on a single mode; phi = Omega_m t moves a
/// reduced mechanical state into the frame co-rotating with the oscillator.
DensityMatrix rotate_mode(const DensityMatrix& rho, double phi);

/// Sum of odd-Fock populations of a single-mode state.
double odd_population(const DensityMatrix& rho);

}  // namespace fanomech
