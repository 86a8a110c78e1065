#include "fanomech/presets.hpp"

#include "fanomech/errors.hpp"

#include <algorithm>
#include <cmath>

namespace fanomech {

namespace {

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

std::vector<double> logspace(double a, double b, std::size_t n) {
  std::vector<double> v = linspace(std::log10(a), std::log10(b), n);
  for (double& x : v) x = std::pow(10.0, x);
  return v;
}

// Shared optical set: omega_a = 200, omega_d = 195, Lambda = 0.2, gamma_a = 1e-4 (kappa_a units).
SystemParams optical_base(double Omega_m) {
  SystemParams p;
  p.omega_a = 200.0;
  p.omega_d = 195.0;
  p.Lambda = 0.2;
  p.kappa_a = 1.0;
  p.kappa_d = 1.6e-3;
  p.gamma_a = 1e-4;
  p.Omega_m = Omega_m;
  p.gamma_m = 8e-14;
  p.n_th_b = 0.0;
  return p;
}

Scenario fig2_base(const std::string& name) {
  Scenario s;
  s.name = name;
  s.params = optical_base(1.5e-6);
  s.couplings_over_Omega.g_a_omega = 0.25;
  s.output = "out/" + name;
  return s;
}

Scenario fig3_base(const std::string& name) {
  Scenario s;
  s.name = name;
  s.variant = Variant::two_mode_effective;
  s.params = optical_base(2e-6);
  s.couplings_over_Omega.g_a_omega = 0.25;
  s.eta = 0.5;
  s.epsilon_p = 2e-9;
  s.dims = {3, 3, 20, 4};
  s.observables = {"g2", "occupations"};
  s.output = "out/" + name;
  return s;
}

Scenario fig4_base(const std::string& name) {
  Scenario s;
  s.name = name;
  s.variant = Variant::bichromatic;
  s.params = optical_base(4e-6);
  s.couplings_over_Omega.g_a_omega = 0.12;
  s.eta = 0.15;
  s.cat = {1.54, std::sqrt(0.1), CatDriveRule::two_phonon_balance};
  s.dims = {3, 3, 35, 4};
  s.solver.mode = SolveMode::evolve;
  s.solver.t_unit = TimeUnit::Gamma_tilde;
  s.solver.t_end = 10.0;
  s.solver.n_points = 81;
  s.observables = {"fidelity", "wigner_log_negativity", "odd_population", "occupations"};
  s.output = "out/" + name;
  return s;
}

std::vector<Scenario> build() {
  std::vector<Scenario> out;

  {
    Scenario s = fig2_base("fig2a");
    s.variant = Variant::optical_only;
    s.solver.mode = SolveMode::none;
    s.observables = {"effective_params"};
    s.sweep = Axis{"params.kappa_d", logspace(1e-3, 1e-2, 61)};
    s.convergence_check = false;
    out.push_back(s);
  }
  {
    Scenario s = fig2_base("fig2b");
    s.variant = Variant::optical_only;
    s.Delta_minus_over_Omega = 0.0;
    s.epsilon_p = 5e-7;
    s.solver.mode = SolveMode::evolve;
    s.solver.t_unit = TimeUnit::kappa_a;
    s.solver.t_end = 4e7;
    s.solver.n_points = 201;
    s.observables = {"normal_mode_occupations"};
    s.series = Axis{"epsilon_p", {2.5e-7, 5e-7, 1e-6}};
    out.push_back(s);
  }
  {
    Scenario s = fig2_base("fig2c");
    s.variant = Variant::optical_only;
    s.Delta_minus_over_Omega = 0.0;
    s.epsilon_p = 5e-7;
    s.solver.mode = SolveMode::steady;
    s.solver.spectrum_count = 20;
    s.observables = {"spectrum", "normal_mode_occupations"};
    out.push_back(s);
  }
  {
    Scenario s = fig2_base("fig2d");
    s.variant = Variant::three_mode;
    s.Delta_minus_over_Omega = 0.0;
    s.epsilon_p = 1e-8;
    s.dims = {3, 3, 12, 3};
    s.couplings_over_Omega.g_d_omega = -0.05;
    s.observables = {"occupations"};
    s.sweep = Axis{"couplings_over_Omega.g_d_omega", linspace(-0.05, -0.5, 19)};
    s.reference = {{"variant", "\"two_mode_effective\""}};
    out.push_back(s);
  }
  {
    Scenario s = fig3_base("fig3a");
    s.Delta_minus_over_Omega = 0.25;
    s.sweep = Axis{"Delta_minus_over_Omega", linspace(-0.5, 1.0, 61)};
    s.series = Axis{"params.kappa_d", {1.6e-3, 2.0e-3}};
    out.push_back(s);
  }
  {
    Scenario s = fig3_base("fig3b");
    s.dims = {3, 3, 30, 4};
    s.sweep = Axis{"eta", linspace(0.1, 1.5, 57)};
    out.push_back(s);
  }
  {
    Scenario s = fig3_base("fig3c");
    s.solver.mode = SolveMode::evolve;
    s.solver.t_unit = TimeUnit::Omega_m;
    s.solver.t_end = 200.0;
    s.solver.n_points = 201;
    s.series = Axis{"params.n_th_b", {0.0, 10.0, 100.0}};
    out.push_back(s);
  }
  {
    Scenario s = fig3_base("fig3d");
    s.solver.mode = SolveMode::evolve;
    s.solver.t_unit = TimeUnit::Omega_m;
    s.solver.t_end = 200.0;
    s.solver.n_points = 2;
    s.sweep = Axis{"params.n_th_b", {0.0, 1.0, 3.0, 10.0, 30.0, 100.0, 300.0, 1000.0}};
    out.push_back(s);
  }
  {
    Scenario s = fig4_base("fig4");
    s.observables.push_back("wigner");
    s.wigner_times = {0.0, 2.0, 10.0};
    s.series = Axis{"eta", {0.15, 0.35}};
    out.push_back(s);
  }
  {
    Scenario s = fig3_base("fig5a");
    s.variant = Variant::position_dependent;
    s.Delta_minus_over_Omega = 0.25;
    s.couplings_over_Omega.g_a_kappa = 0.25;
    s.couplings_over_Omega.g_d_kappa = 0.92;
    s.observables = {"g2"};
    s.sweep = Axis{"Delta_minus_over_Omega", linspace(-0.5, 1.0, 61)};
    s.reference = {{"variant", "\"two_mode_effective\""}};
    out.push_back(s);
  }
  {
    Scenario s = fig4_base("fig5b");
    s.dissipation = Dissipation::position_dependent;
    s.couplings_over_Omega.g_a_kappa = 0.25;
    s.couplings_over_Omega.g_d_kappa = 0.92;
    s.observables = {"fidelity"};
    s.reference = {{"dissipation", "\"standard\""}};
    out.push_back(s);
  }
  {
    Scenario s = fig2_base("figB1a");
    s.variant = Variant::optical_only;
    s.solver.mode = SolveMode::none;
    s.observables = {"effective_params"};
    s.sweep = Axis{"params.kappa_d", logspace(1e-3, 1e-2, 61)};
    s.convergence_check = false;
    out.push_back(s);
  }
  {
    Scenario s = fig2_base("figB1b");
    s.variant = Variant::optical_only;
    s.params.gamma_a = 6.4e-8;
    s.params.omega_a = 200.0;
    s.params.omega_d = 200.0;
    s.params.Lambda = 2.0;
    s.params.Omega_m = 6.38e-7;
    s.params.kappa_d = 1.0;
    s.solver.mode = SolveMode::none;
    s.observables = {"effective_params"};
    s.sweep = Axis{"params.kappa_d", linspace(0.995, 1.005, 41)};
    s.convergence_check = false;
    out.push_back(s);
  }
  for (const auto& [name, gamma_m] : {std::pair<const char*, double>{"figC1a", 8e-14},
                                      std::pair<const char*, double>{"figC1c", 8e-9},
                                      std::pair<const char*, double>{"figC1d", 8e-7}}) {
    Scenario s = fig3_base(name);
    s.variant = Variant::dressed_state;
    s.params.gamma_m = gamma_m;
    s.observables = {"g2"};
    s.sweep = Axis{"eta", linspace(0.1, 0.7, 25)};
    s.reference = {{"variant", "\"two_mode_effective\""}};
    out.push_back(s);
  }
  {
    Scenario s = fig4_base("figC1b");
    s.dissipation = Dissipation::dressed;
    s.observables = {"fidelity"};
    s.reference = {{"dissipation", "\"standard\""}};
    out.push_back(s);
  }
  std::stable_sort(out.begin(), out.end(), [](const Scenario& a, const Scenario& b) { return a.name < b.name; });
  return out;
}

}  // namespace

const std::vector<Scenario>& presets() {
  static const std::vector<Scenario> all = build();
  return all;
}

const Scenario& preset(const std::string& name) {
  for (const auto& s : presets())
    if (s.name == name) return s;
  std::string known;
  for (const auto& s : presets()) known += (known.empty() ? "" : ", ") + s.name;
  throw ValidationError("unknown preset '" + name + "' (known: " + known + ")");
}

std::vector<std::string> preset_names() {
  std::vector<std::string> v;
  for (const auto& s : presets()) v.push_back(s.name);
  return v;
}

}  // namespace fanomech
