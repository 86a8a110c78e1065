#pragma once

// Physical parameters, derived normal-mode quantities and master-equation
// builders for the cavity / Fano-mode / mechanics system.
//
// Every frequency and rate in SystemParams is expressed in units of kappa_a.
// Models that involve the mechanics through the effective A_- mode are built
// in units of Omega_m (LindbladModel::time_unit records the conversion).

#include "fanomech/hilbert.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fanomech {

struct SystemParams {
  double omega_a = 200.0;
  double omega_d = 195.0;
  double Lambda = 0.2;
  double kappa_a = 1.0;
  double kappa_d = 1.6e-3;
  double gamma_a = 1e-4;
  double Omega_m = 1.5e-6;
  double gamma_m = 8e-14;
  double g_a_omega = 0.0;
  double g_d_omega = 0.0;
  double g_a_kappa = 0.0;
  double g_d_kappa = 0.0;
  double n_th_b = 0.0;

  double Gamma_a() const noexcept { return kappa_a + gamma_a; }

  /// One message per violated invariant, naming the field and constraint.
  std::vector<std::string> violations() const;
  void validate() const;

  friend bool operator==(const SystemParams&, const SystemParams&) = default;
};

struct NormalModeParams {
  double theta = 0.0;
  double omega_plus = 0.0, omega_minus = 0.0;
  double G_plus = 0.0, G_minus = 0.0, G_mix = 0.0;
  double kappa_eff_plus = 0.0, kappa_eff_minus = 0.0;
  /// Rate of the A_+ A_- cross dissipator.
  double kappa_cross = 0.0;
  double Delta_pm = 0.0;
  double Gamma_can_plus = 0.0, Gamma_can_minus = 0.0;
  /// Normalized (a, d) coefficients of the canonical jump operators.
  std::array<double, 2> x_vec_plus{}, x_vec_minus{};
  double G_kappa_plus = 0.0, G_kappa_minus = 0.0;
  /// sqrt(2) g_d^kappa [1 - sin(2 theta) sqrt(kappa_a/kappa_d)/2], reported for comparison.
  double G_kappa_minus_approx = 0.0;
  double eta = 0.0;
};

NormalModeParams normal_mode_params(const SystemParams& p);

/// Mixing angle in (0, pi/2) with the branch convention described in the README.
double mixing_angle(double omega_a, double omega_d, double Lambda);

struct LangevinParams {
  Complex Omega_prime_plus, Omega_prime_minus;
  double omega_prime_plus = 0.0, omega_prime_minus = 0.0;
  double kappa_eff_prime_plus = 0.0, kappa_eff_prime_minus = 0.0;
  double Delta_pm_prime = 0.0;
};

LangevinParams langevin_params(const SystemParams& p);

/// Returns a copy of `p` whose g_d_omega is chosen so that -G_minus/Omega_m == eta.
SystemParams with_eta(const SystemParams& p, double eta);

struct DriveParams {
  double epsilon_p = 0.0;
  double omega_p = 0.0;
};

enum class Frame { lab, rotating_at_drive };

struct JumpTerm {
  Operator op;
  double rate = 1.0;
  std::string label;
};

/// Off-diagonal entry of the dissipation matrix between jumps i and j:
/// rate * (L_i rho L_j^dagger - {L_j^dagger L_i, rho}/2) + H.c.
struct CrossTerm {
  std::size_t i = 0, j = 0;
  Complex rate;
  std::string label;
};

/// Hamiltonian contribution op * exp(i frequency t).
struct RotatingTerm {
  Operator op;
  double frequency = 0.0;
};

struct LindbladModel {
  SpaceLayout layout;
  Operator hamiltonian;
  std::vector<RotatingTerm> rotating;
  std::vector<JumpTerm> jumps;
  std::vector<CrossTerm> cross;
  bool lab_frame = false;
  /// Model time unit expressed in 1/kappa_a.
  double time_unit = 1.0;
  std::string time_unit_label = "1/kappa_a";
  std::map<std::string, double> diagnostics;

  bool is_static() const noexcept { return rotating.empty(); }

  /// Hermitian coefficient matrix over `jumps` (diagonal = rates).
  DenseMatrix dissipation_matrix() const;

  /// Checks layouts, Hermiticity of H and of the dissipation matrix, and
  /// its positivity (eigenvalues >= -1e-12 after normalization).
  void validate() const;
};

/// Truncation dimensions for the optical-only, three-mode and two-mode builders.
struct ThreeModeDims {
  std::size_t a = 3, d = 3, b = 12;
};
struct OpticalDims {
  std::size_t a = 3, d = 3;
};
struct TwoModeDims {
  std::size_t A = 4, b = 15;
};

/// Cavity plus Fano mode with coherent and cross dissipation, driven on a.
LindbladModel build_optical_only_model(const SystemParams& p, const DriveParams& drive,
                                       Frame frame, OpticalDims dims = {});

LindbladModel build_three_mode_model(const SystemParams& p, const DriveParams& drive, Frame frame,
                                     ThreeModeDims dims = {});

/// Delta_minus = omega_minus - omega_p, in kappa_a units.
LindbladModel build_effective_two_mode_model(const SystemParams& p, const DriveParams& drive,
                                             double Delta_minus, TwoModeDims dims = {});

enum class RateSubstitution { exact, linearized };

/// Two-mode model with the A_- jump replaced by sqrt(kappa_eff,-(x)) A_-.
LindbladModel build_position_dependent_model(const SystemParams& p, const DriveParams& drive,
                                             double Delta_minus, TwoModeDims dims = {},
                                             RateSubstitution sub = RateSubstitution::exact);

/// k_B T / (hbar Omega_m) consistent with a Bose-Einstein occupation n_th (0 for n_th = 0).
double kT_over_Omega_from_nth(double n_th);

LindbladModel build_dressed_state_model(const SystemParams& p, const DriveParams& drive,
                                        double Delta_minus, double kT_over_Omega,
                                        TwoModeDims dims = {});

struct BichromaticParams {
  Complex epsilon_l, epsilon_s;
  double omega_l = 0.0, omega_s = 0.0;
  Complex chi;
  Complex alpha_minus;
  Complex beta;
  double delta_minus = 0.0;
  double Delta_s = 0.0;
  double Delta_sl = 0.0;
  Complex G_tilde;
  double Gamma_tilde = 0.0;
};

/// Which amplitude to use for the resonant drive of the cat protocol.
enum class CatDriveRule {
  /// epsilon_l from drive_amplitude_for_cat, with all rates in Omega_m units.
  literal,
  /// epsilon_l sin(theta) = G_tilde chi^2, the two-phonon steady-state balance.
  two_phonon_balance,
};

/// Principal square root of G_-^2 alpha_- chi / Omega_m (inputs in kappa_a units).
Complex drive_amplitude_for_cat(const NormalModeParams& nm, const SystemParams& p,
                                const BichromaticParams& bp);

/// Fills every derived field from chi and alpha_minus: beta, delta_-, Delta_s =
/// -2 Omega_m - delta_-, Delta_sl = -2 Omega_m, G_tilde, Gamma_tilde, epsilon_s,
/// frequencies, and epsilon_l by `rule`.
BichromaticParams resolve_bichromatic(const SystemParams& p, Complex chi, Complex alpha_minus,
                                      CatDriveRule rule = CatDriveRule::two_phonon_balance);

enum class Dissipation { standard, position_dependent, position_dependent_linearized, dressed };

/// Displaced, rotating-frame cat-protocol model (Omega_m units).
LindbladModel build_bichromatic_model(const SystemParams& p, const BichromaticParams& bp,
                                      TwoModeDims dims = {},
                                      Dissipation dissipation = Dissipation::standard,
                                      double kT_over_Omega = 0.0);

struct KerrLevel {
  std::size_t n = 0, m = 0;
  double energy = 0.0;
};

/// E(n, m) = omega n + Omega_m m - n^2 G^2 / Omega_m, row-major over n then m.
std::vector<KerrLevel> kerr_spectrum_analytic(double omega, double G, double Omega_m,
                                              std::size_t n_max, std::size_t m_max);
std::vector<KerrLevel> kerr_spectrum_analytic(const NormalModeParams& nm, double Omega_m,
                                              std::size_t n_max, std::size_t m_max);

/// Diagonalizes the dissipation matrix; eigen-jumps with non-negative rates.
/// Terms not connected by cross terms are returned unchanged.
std::vector<JumpTerm> canonical_lindblad_decomposition(const LindbladModel& model);

/// A_+/A_- jumps and their cross term, expressed through the a and d operators of `layout`.
LindbladModel normal_mode_dissipators(const SystemParams& p, const SpaceLayout& layout,
                                      const std::string& a_label = "a",
                                      const std::string& d_label = "d");

}  // namespace fanomech
