#include "fanomech/errors.hpp"
#include "fanomech/model.hpp"
#include "fanomech/solver.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace fanomech;
using testing::max_abs;
using testing::optical_set;

namespace {

using ld = long double;

// Direct three-term expression in extended precision.
ld kappa_minus_naive(ld ka, ld kd, ld ga, ld theta) {
  return (ka + ga) * std::sin(theta) * std::sin(theta) + kd * std::cos(theta) * std::cos(theta) -
         std::sqrt(ka * kd) * std::sin(2 * theta);
}

double liouvillian_diff(const LindbladModel& a, const LindbladModel& b) {
  return max_abs(build_liouvillian(a).matrix - build_liouvillian(b).matrix);
}

LindbladModel jumps_only(const LindbladModel& m) {
  LindbladModel out = m;
  out.hamiltonian = Operator::zero(m.layout);
  out.rotating.clear();
  return out;
}

}  // namespace

TEST_CASE("normal-mode parameters of the optical set") {
  const auto nm = normal_mode_params(optical_set());
  CHECK(nm.theta == doctest::Approx(0.0399).epsilon(0.0005 / 0.0399));
  CHECK(nm.kappa_eff_minus == doctest::Approx(1.63e-7).epsilon(0.005 / 1.63));
  const ld th = 0.5L * std::atan(0.4L / 5.0L);
  CHECK(std::abs(nm.theta - static_cast<double>(th)) < 1e-15);
  const ld naive = kappa_minus_naive(1.0L, 1.6e-3L, 1e-4L, th);
  CHECK(std::abs(nm.kappa_eff_minus - static_cast<double>(naive)) < 1e-9 * nm.kappa_eff_minus);
  CHECK(nm.kappa_eff_plus + nm.kappa_eff_minus == doctest::Approx(1.0 + 1e-4 + 1.6e-3).epsilon(1e-14));
  CHECK(nm.omega_plus - nm.omega_minus == doctest::Approx(std::sqrt(25.0 + 0.16)).epsilon(1e-14));
}

TEST_CASE("effective decay over Omega_m for the blockade set") {
  SystemParams p = optical_set();
  p.Omega_m = 2e-6;
  CHECK(std::abs(normal_mode_params(p).kappa_eff_minus / p.Omega_m - 0.0817) < 6e-5);
  p.kappa_d = 2.0e-3;
  CHECK(std::abs(normal_mode_params(p).kappa_eff_minus / p.Omega_m - 11.51) < 6e-3);
}

TEST_CASE("degenerate detuning") {
  SystemParams p = optical_set();
  p.omega_d = p.omega_a;
  p.g_a_omega = 0.3;
  p.g_d_omega = -0.1;
  const auto nm = normal_mode_params(p);
  CHECK(nm.theta == doctest::Approx(std::numbers::pi / 4).epsilon(1e-15));
  CHECK(nm.omega_plus == doctest::Approx(200.2).epsilon(1e-15));
  CHECK(nm.omega_minus == doctest::Approx(199.8).epsilon(1e-15));
  CHECK(nm.G_plus == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(nm.G_minus == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(nm.G_mix == doctest::Approx(-0.2).epsilon(1e-14));
}

TEST_CASE("mixing-angle branch") {
  CHECK(mixing_angle(200, 195, 0.2) > 0.0);
  CHECK(mixing_angle(200, 195, 0.2) < std::numbers::pi / 4);
  CHECK(mixing_angle(195, 200, 0.2) > std::numbers::pi / 4);
  CHECK(mixing_angle(195, 200, 0.2) < std::numbers::pi / 2);
  CHECK(mixing_angle(200, 195, 0.2) + mixing_angle(195, 200, 0.2) == doctest::Approx(std::numbers::pi / 2));
}

TEST_CASE("canonical rates") {
  SystemParams p = optical_set();
  auto nm = normal_mode_params(p);
  DenseMatrix g(2, 2);
  g << 1.0 + 1e-4, std::sqrt(1.6e-3), std::sqrt(1.6e-3), 1.6e-3;
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(g);
  CHECK(std::abs(nm.Gamma_can_minus - es.eigenvalues()(0)) < 1e-12);
  CHECK(std::abs(nm.Gamma_can_plus - es.eigenvalues()(1)) < 1e-12);
  CHECK(nm.Gamma_can_minus >= 0.0);

  p.kappa_d = 0.0;
  nm = normal_mode_params(p);
  CHECK(nm.Gamma_can_plus == doctest::Approx(p.Gamma_a()));
  CHECK(nm.Gamma_can_minus == 0.0);

  const auto m = build_optical_only_model(optical_set(), {}, Frame::rotating_at_drive);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> ms(m.dissipation_matrix());
  nm = normal_mode_params(optical_set());
  CHECK(std::abs(ms.eigenvalues()(0) - nm.Gamma_can_minus) < 1e-12);
  CHECK(std::abs(ms.eigenvalues()(1) - nm.Gamma_can_plus) < 1e-12);
}

TEST_CASE("Langevin eigenfrequencies") {
  {
    SystemParams p = optical_set();
    p.omega_d = p.omega_a;
    p.kappa_a = 1e-20;
    p.gamma_a = 0.5;
    p.kappa_d = 0.5;
    const auto lp = langevin_params(p);
    CHECK(std::abs(lp.Omega_prime_plus - Complex(200.2, -0.25)) < 1e-9);
    CHECK(std::abs(lp.Omega_prime_minus - Complex(199.8, -0.25)) < 1e-9);
  }
  for (double kd : {1e-3, 2e-3, 4e-3, 1e-2}) {
    SystemParams p = optical_set();
    p.kappa_d = kd;
    const auto nm = normal_mode_params(p);
    const auto lp = langevin_params(p);
    CAPTURE(kd);
    CHECK(std::abs(nm.kappa_eff_minus - lp.kappa_eff_prime_minus) < 0.05 * lp.kappa_eff_prime_minus);
    CHECK(std::abs(nm.kappa_eff_plus - lp.kappa_eff_prime_plus) < 0.05 * lp.kappa_eff_prime_plus);
    CHECK(std::abs(nm.Delta_pm - lp.Delta_pm_prime) < 0.01 * lp.Delta_pm_prime);
    CHECK(lp.omega_prime_plus >= lp.omega_prime_minus);
  }
  SystemParams b = optical_set();
  b.gamma_a = 6.4e-8;
  b.omega_d = b.omega_a;
  b.Lambda = 2.0;
  b.Omega_m = 6.38e-7;
  b.kappa_d = 1.0;
  const auto lp = langevin_params(b);
  CHECK(lp.kappa_eff_prime_minus < 0.1 * b.Omega_m);
  CHECK(lp.Delta_pm_prime > lp.kappa_eff_prime_plus);
}

TEST_CASE("parameter validation names the constraint") {
  SystemParams p = optical_set();
  p.kappa_d = -1.0;
  p.Omega_m = 0.0;
  const auto v = p.violations();
  REQUIRE(v.size() == 2);
  CHECK(v[0].find("kappa_d >= 0") != std::string::npos);
  CHECK(v[1].find("Omega_m > 0") != std::string::npos);
  CHECK_THROWS_AS(p.validate(), ValidationError);
}

TEST_CASE("with_eta") {
  SystemParams p = optical_set();
  p.Omega_m = 2e-6;
  p.g_a_omega = 0.25 * p.Omega_m;
  for (double eta : {0.0, 0.15, 0.5, 1.2}) {
    const auto q = with_eta(p, eta);
    CHECK(normal_mode_params(q).eta == doctest::Approx(eta).epsilon(1e-12));
    CHECK(q.g_a_omega == p.g_a_omega);
  }
}

TEST_CASE("three-mode model") {
  SystemParams p = optical_set();
  p.g_a_omega = 0.25 * p.Omega_m;
  p.g_d_omega = -0.3 * p.Omega_m;
  const auto m = build_three_mode_model(p, {0.0, normal_mode_params(p).omega_minus},
                                        Frame::rotating_at_drive, {3, 3, 6});
  CHECK_NOTHROW(m.validate());
  const auto L = build_liouvillian(m);
  const DensityMatrix vac = vacuum_state(m.layout);
  CHECK(L.apply(vectorize(vac.matrix())).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(m.jumps.size() == 3);
  CHECK(m.cross.size() == 1);
  const auto nm = normal_mode_params(p);
  DenseMatrix g = m.dissipation_matrix().topLeftCorner(2, 2);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(g);
  CHECK(std::abs(es.eigenvalues()(0) - nm.Gamma_can_minus) < 1e-12);
  CHECK(std::abs(es.eigenvalues()(1) - nm.Gamma_can_plus) < 1e-12);

  p.n_th_b = 2.0;
  const auto hot = build_three_mode_model(p, {}, Frame::rotating_at_drive, {2, 2, 4});
  REQUIRE(hot.jumps.size() == 4);
  CHECK(hot.jumps[2].rate == doctest::Approx(3.0 * p.gamma_m));
  CHECK(hot.jumps[3].rate == doctest::Approx(2.0 * p.gamma_m));
}

TEST_CASE("Kerr spectrum") {
  const auto flat = kerr_spectrum_analytic(1.0, 0.0, 1.0, 0, 5);
  for (const auto& l : flat) CHECK(l.energy == static_cast<double>(l.m));
  const auto lv = kerr_spectrum_analytic(3.0, 0.5, 2.0, 1, 0);
  CHECK(lv[1].energy == doctest::Approx(3.0 - 0.125));

  SystemParams p = with_eta([] {
    SystemParams q = optical_set();
    q.Omega_m = 2e-6;
    q.g_a_omega = 0.25 * q.Omega_m;
    return q;
  }(), 0.5);
  const auto nm = normal_mode_params(p);
  const double Delta = 0.3 * p.Omega_m;
  const auto m = build_effective_two_mode_model(p, {}, Delta, {5, 40});
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(m.hamiltonian.dense(), Eigen::EigenvaluesOnly);
  const auto levels = kerr_spectrum_analytic(Delta / p.Omega_m, nm.G_minus / p.Omega_m, 1.0, 4, 8);
  for (const auto& l : levels) {
    const double dist = (es.eigenvalues().array() - l.energy).abs().minCoeff();
    CAPTURE(l.n);
    CAPTURE(l.m);
    CHECK(dist < 1e-8);
  }
}

TEST_CASE("drive amplitude for the cat protocol") {
  SystemParams p = optical_set();
  p.Omega_m = 4e-6;
  p.g_a_omega = 0.12 * p.Omega_m;
  p = with_eta(p, 0.15);
  const auto nm = normal_mode_params(p);
  BichromaticParams bp;
  bp.alpha_minus = std::sqrt(0.1);
  bp.chi = 1.54;
  const Complex eps = drive_amplitude_for_cat(nm, p, bp);
  const Complex target = nm.G_minus * nm.G_minus * bp.alpha_minus * bp.chi / p.Omega_m;
  CHECK(std::abs(eps * eps - target) < 1e-14 * std::abs(target));
  NormalModeParams doubled = nm;
  doubled.G_minus *= 2.0;
  CHECK(std::abs(drive_amplitude_for_cat(doubled, p, bp) - 2.0 * eps) < 1e-14 * std::abs(eps));
  bp.chi = 0.0;
  CHECK(drive_amplitude_for_cat(nm, p, bp) == Complex(0.0));

  const auto r = resolve_bichromatic(p, 1.54, std::sqrt(0.1));
  CHECK(r.Delta_sl == doctest::Approx(-2.0 * p.Omega_m).epsilon(1e-9));
  CHECK(r.Delta_s == doctest::Approx(-2.0 * p.Omega_m - r.delta_minus));
  CHECK(r.delta_minus == doctest::Approx(2.0 * nm.G_minus * nm.G_minus * 0.1 / p.Omega_m));
  CHECK(r.Gamma_tilde == doctest::Approx(4.0 * std::norm(r.G_tilde) / nm.kappa_eff_minus));
  CHECK(std::abs(r.epsilon_l * std::sin(nm.theta) - r.G_tilde * 1.54 * 1.54) < 1e-12 * std::abs(r.epsilon_l));
  const auto lit = resolve_bichromatic(p, 1.54, std::sqrt(0.1), CatDriveRule::literal);
  const double g = nm.G_minus / p.Omega_m;
  CHECK(std::abs(lit.epsilon_l - std::sqrt(g * g * std::sqrt(0.1) * 1.54) * p.Omega_m) < 1e-12 * std::abs(lit.epsilon_l));
}

TEST_CASE("bichromatic model without drive or coupling keeps the vacuum") {
  SystemParams p = optical_set();
  p.Omega_m = 4e-6;
  BichromaticParams bp;
  bp.Delta_s = -2.0 * p.Omega_m;
  bp.Delta_sl = -2.0 * p.Omega_m;
  const auto m = build_bichromatic_model(p, bp, {3, 8});
  CHECK(m.is_static());
  const auto L = build_liouvillian(m);
  CHECK(L.apply(vectorize(vacuum_state(m.layout).matrix())).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("position-dependent rates") {
  SystemParams p = with_eta([] {
    SystemParams q = optical_set();
    q.Omega_m = 2e-6;
    q.g_a_omega = 0.25 * q.Omega_m;
    return q;
  }(), 0.5);
  const DriveParams drive{2e-9, 0.0};
  const double Delta = 0.25 * p.Omega_m;
  const auto base = build_effective_two_mode_model(p, drive, Delta, {4, 12});
  const auto pd = build_position_dependent_model(p, drive, Delta, {4, 12});
  CHECK(liouvillian_diff(base, pd) < 1e-14);

  p.g_a_kappa = 0.25 * p.Omega_m;
  p.g_d_kappa = 0.92 * p.Omega_m;
  const auto nm = normal_mode_params(p);
  CHECK(std::abs(nm.G_kappa_minus) < 0.1 * std::abs(nm.G_minus));

  // Central difference of kappa_eff,-(x) with x = (b + b^dagger)/sqrt(2).
  const ld h = 1e-3L;
  auto k_of = [&](ld x) {
    return kappa_minus_naive(p.kappa_a + std::sqrt(2.0L) * p.g_a_kappa * x,
                             p.kappa_d + std::sqrt(2.0L) * p.g_d_kappa * x, p.gamma_a, nm.theta);
  };
  const double slope = static_cast<double>((k_of(h) - k_of(-h)) / (2 * h) / std::sqrt(2.0L));
  CHECK(nm.G_kappa_minus == doctest::Approx(slope).epsilon(1e-6));

  const auto exact = build_position_dependent_model(p, drive, Delta, {4, 12});
  const auto lin = build_position_dependent_model(p, drive, Delta, {4, 12}, RateSubstitution::linearized);
  CHECK_NOTHROW(exact.validate());
  CHECK(exact.diagnostics.at("clamped_eigenvalues") == 0.0);
  CHECK(liouvillian_diff(exact, lin) > 0.0);
}

TEST_CASE("dressed-state model") {
  SystemParams p = optical_set();
  p.Omega_m = 2e-6;
  p.gamma_m = 8e-7;
  p.n_th_b = 3.0;
  const DriveParams drive{2e-9, 0.0};
  const SystemParams zero = with_eta(p, 0.0);
  const double kT = kT_over_Omega_from_nth(3.0);
  CHECK(1.0 / std::expm1(1.0 / kT) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(kT_over_Omega_from_nth(0.0) == 0.0);
  const auto dressed = build_dressed_state_model(zero, drive, 0.1 * p.Omega_m, kT, {3, 8});
  const auto standard = build_effective_two_mode_model(zero, drive, 0.1 * p.Omega_m, {3, 8});
  CHECK(liouvillian_diff(dressed, standard) < 1e-14);

  const SystemParams q = with_eta(p, 0.4);
  const auto m = build_dressed_state_model(q, drive, 0.1 * p.Omega_m, kT, {3, 8});
  REQUIRE(m.jumps.size() == 4);
  CHECK(m.jumps[3].rate == doctest::Approx(4.0 * p.gamma_m / p.Omega_m * kT * 0.16).epsilon(1e-10));
  const DenseMatrix shifted = (annihilation_op(m.layout, "b") - number_op(m.layout, "A-") * Complex(0.4)).dense();
  CHECK((m.jumps[0].op.dense() - shifted).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("canonical decomposition preserves the Liouvillian") {
  const auto m = jumps_only(build_optical_only_model(optical_set(), {}, Frame::rotating_at_drive));
  const auto jumps = canonical_lindblad_decomposition(m);
  REQUIRE(jumps.size() == 2);
  LindbladModel c = m;
  c.jumps = jumps;
  c.cross.clear();
  CHECK(liouvillian_diff(m, c) < 1e-12);
  for (const auto& j : jumps) CHECK(j.rate >= 0.0);

  // [c_s, c_t^dagger] = delta_st away from the truncation edge: vacuum and single-excitation block.
  for (std::size_t s = 0; s < 2; ++s)
    for (std::size_t t = 0; t < 2; ++t) {
      const DenseMatrix cs = jumps[s].op.dense(), ct = jumps[t].op.dense();
      const DenseMatrix comm = cs * ct.adjoint() - ct.adjoint() * cs;
      for (Eigen::Index k : {0, 1, 3}) CHECK(std::abs(comm(k, k) - (s == t ? 1.0 : 0.0)) < 1e-12);
    }

  const auto three = build_three_mode_model(optical_set(), {}, Frame::rotating_at_drive, {2, 2, 3});
  const auto split = canonical_lindblad_decomposition(three);
  CHECK(split.size() == 3);
  CHECK(split.back().label == "b");

  LindbladModel bad = m;
  bad.cross[0].rate = 2.0;
  CHECK_THROWS_AS(canonical_lindblad_decomposition(bad), NonMarkovianError);
  CHECK_THROWS_AS(bad.validate(), NonMarkovianError);
}

TEST_CASE("normal-mode dissipators") {
  const auto original = jumps_only(build_optical_only_model(optical_set(), {}, Frame::rotating_at_drive));
  const auto rotated = normal_mode_dissipators(optical_set(), original.layout);
  CHECK(liouvillian_diff(original, rotated) < 1e-12);
  CHECK(rotated.jumps[1].rate == normal_mode_params(optical_set()).kappa_eff_minus);

  SystemParams p = optical_set();
  p.Lambda = 0.0;
  const auto nm = normal_mode_params(p);
  CHECK(nm.theta == 0.0);
  const auto zero = normal_mode_dissipators(p, original.layout);
  const auto orig0 = jumps_only(build_optical_only_model(p, {}, Frame::rotating_at_drive));
  CHECK((zero.jumps[0].op.dense() - annihilation_op(original.layout, "a").dense()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((zero.jumps[1].op.dense() - annihilation_op(original.layout, "d").dense()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(zero.jumps[0].rate == doctest::Approx(p.Gamma_a()).epsilon(1e-15));
  CHECK(zero.jumps[1].rate == doctest::Approx(p.kappa_d).epsilon(1e-12));
  CHECK(zero.cross[0].rate.real() == doctest::Approx(std::sqrt(p.kappa_a * p.kappa_d)).epsilon(1e-15));
  CHECK(liouvillian_diff(orig0, zero) < 1e-14);

  const auto tr_orig = original.dissipation_matrix().trace().real();
  const auto tr_rot = rotated.dissipation_matrix().trace().real();
  CHECK(tr_orig == doctest::Approx(tr_rot).epsilon(1e-14));
}
