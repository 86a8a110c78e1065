#pragma once

// Declarative scenario description and its JSON config format.
//
// Every rate in `params` is in units of kappa_a. Couplings given in
// `couplings_over_Omega` and the detuning `Delta_minus_over_Omega` are in
// units of Omega_m. The grammar is documented in README.md.

#include "fanomech/model.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fanomech {

enum class Variant { three_mode, two_mode_effective, position_dependent, dressed_state, optical_only, bichromatic };

std::string to_string(Variant v);
std::string to_string(Frame f);
std::string to_string(CatDriveRule r);
std::string to_string(Dissipation d);
std::string to_string(RateSubstitution r);

struct CouplingsOverOmega {
  std::optional<double> g_a_omega, g_d_omega, g_a_kappa, g_d_kappa;
  friend bool operator==(const CouplingsOverOmega&, const CouplingsOverOmega&) = default;
};

struct CatSettings {
  double chi = 1.54;
  double alpha_minus = 0.31622776601683794;
  CatDriveRule rule = CatDriveRule::two_phonon_balance;
  friend bool operator==(const CatSettings&, const CatSettings&) = default;
};

struct Truncation {
  std::size_t a = 3, d = 3, b = 12, A = 4;
  friend bool operator==(const Truncation&, const Truncation&) = default;
};

enum class SolveMode { steady, evolve, none };

/// Unit of t_end and wigner_times.
enum class TimeUnit { model, kappa_a, Omega_m, Gamma_tilde };

std::string to_string(SolveMode m);
std::string to_string(TimeUnit u);

struct SolverSettings {
  SolveMode mode = SolveMode::steady;
  double t_end = 0.0;
  std::size_t n_points = 101;
  TimeUnit t_unit = TimeUnit::model;
  double rtol = 1e-8, atol = 1e-12;
  std::size_t spectrum_count = 10;
  friend bool operator==(const SolverSettings&, const SolverSettings&) = default;
};

/// Parameter path (see README) and the values it takes.
struct Axis {
  std::string path;
  std::vector<double> values;
  friend bool operator==(const Axis&, const Axis&) = default;
};

struct Scenario {
  std::string name;
  Variant variant = Variant::two_mode_effective;
  SystemParams params;
  CouplingsOverOmega couplings_over_Omega;
  /// When set, g_d_omega is solved so that -G_-/Omega_m equals this value.
  std::optional<double> eta;
  double epsilon_p = 0.0;
  /// Drive detuning omega_- - omega_p in Omega_m units; unset means G_-^2/Omega_m^2.
  std::optional<double> Delta_minus_over_Omega;
  Frame frame = Frame::rotating_at_drive;
  RateSubstitution rate_substitution = RateSubstitution::exact;
  Dissipation dissipation = Dissipation::standard;
  CatSettings cat;
  Truncation dims;
  SolverSettings solver;
  std::vector<std::string> observables;
  std::vector<double> wigner_times;
  /// Outer axis: each value produces an independent series.
  std::optional<Axis> series;
  /// Inner axis swept for every series value.
  std::optional<Axis> sweep;
  /// Overrides (path, JSON value) defining a baseline computed alongside every point.
  std::vector<std::pair<std::string, std::string>> reference;
  bool convergence_check = true;
  std::string output = "out";

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Observable names accepted in `observables`.
const std::vector<std::string>& known_observables();

struct ValidationIssue {
  std::string field;
  std::string message;
};

/// Result of parsing and validating config text: either a scenario or every problem found.
struct ParseResult {
  std::optional<Scenario> scenario;
  std::vector<ValidationIssue> issues;
  bool ok() const { return scenario.has_value() && issues.empty(); }
};

ParseResult parse_scenario(const std::string& text);
/// Throws ValidationError listing every issue.
Scenario load_scenario(const std::string& text);
std::string serialize_scenario(const Scenario& s);

/// Structural and physical checks on an in-memory scenario.
std::vector<ValidationIssue> validate_scenario(const Scenario& s);

/// Sets `path` (dotted, e.g. "params.kappa_d" or "dims.b") to a JSON literal value.
Scenario with_override(const Scenario& s, const std::string& path, const std::string& json_value);
Scenario with_value(const Scenario& s, const std::string& path, double value);

/// SystemParams with couplings and eta applied.
SystemParams resolved_params(const Scenario& s);
/// Delta_- in kappa_a units.
double resolved_Delta_minus(const Scenario& s);

}  // namespace fanomech
