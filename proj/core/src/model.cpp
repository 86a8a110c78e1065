#include "fanomech/model.hpp"

#include "fanomech/errors.hpp"
#include "detail.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <sstream>

namespace fanomech {

namespace {

using ld = long double;

void require(std::vector<std::string>& out, bool ok, const std::string& msg) {
  if (!ok) out.push_back(msg);
}

bool finite_all(const SystemParams& p) {
  for (double v : {p.omega_a, p.omega_d, p.Lambda, p.kappa_a, p.kappa_d, p.gamma_a, p.Omega_m,
                   p.gamma_m, p.g_a_omega, p.g_d_omega, p.g_a_kappa, p.g_d_kappa, p.n_th_b})
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace

std::vector<std::string> SystemParams::violations() const {
  std::vector<std::string> v;
  require(v, finite_all(*this), "params: all values must be finite");
  require(v, kappa_a > 0.0, "params.kappa_a: kappa_a > 0");
  require(v, kappa_d >= 0.0, "params.kappa_d: kappa_d >= 0");
  require(v, gamma_a >= 0.0, "params.gamma_a: gamma_a >= 0");
  require(v, Omega_m > 0.0, "params.Omega_m: Omega_m > 0");
  require(v, gamma_m >= 0.0, "params.gamma_m: gamma_m >= 0");
  require(v, n_th_b >= 0.0, "params.n_th_b: n_th_b >= 0");
  return v;
}

void SystemParams::validate() const {
  const auto v = violations();
  if (v.empty()) return;
  std::string msg = "invalid system parameters:";
  for (const auto& s : v) msg += "\n  " + s;
  throw ValidationError(msg);
}

double mixing_angle(double omega_a, double omega_d, double Lambda) {
  // atan2 picks the branch that makes (cos, sin) the upper eigenvector; for
  // Lambda >= 0 this is the principal arctan, plus pi/2 when omega_a < omega_d.
  return static_cast<double>(0.5L * std::atan2(2.0L * static_cast<ld>(Lambda),
                                                static_cast<ld>(omega_a) - static_cast<ld>(omega_d)));
}

namespace detail {

// (sqrt(ka) s - sqrt(kd) c)^2 + gamma_a s^2, i.e. Gamma_a s^2 + kd c^2 - sqrt(ka kd) sin 2theta
// without the cancellation between its three terms.
long double kappa_eff_minus_of(long double ka, long double kd, long double gamma_a,
                               long double theta) {
  const ld s = std::sin(theta), c = std::cos(theta);
  const ld diff = std::sqrt(std::max(ka, 0.0L)) * s - std::sqrt(std::max(kd, 0.0L)) * c;
  return diff * diff + gamma_a * s * s;
}

long double kappa_eff_plus_of(long double ka, long double kd, long double gamma_a,
                              long double theta) {
  const ld s = std::sin(theta), c = std::cos(theta);
  const ld sum = std::sqrt(std::max(ka, 0.0L)) * c + std::sqrt(std::max(kd, 0.0L)) * s;
  return sum * sum + gamma_a * c * c;
}

}  // namespace detail

NormalModeParams normal_mode_params(const SystemParams& p) {
  NormalModeParams nm;
  const ld wa = p.omega_a, wd = p.omega_d, L = p.Lambda;
  const ld ka = p.kappa_a, kd = p.kappa_d, ga = p.gamma_a;
  const ld Ga = ka + ga;
  const ld theta = 0.5L * std::atan2(2.0L * L, wa - wd);
  const ld s = std::sin(theta), c = std::cos(theta), s2 = std::sin(2.0L * theta),
           c2 = std::cos(2.0L * theta);
  nm.theta = static_cast<double>(theta);

  const ld mean = 0.5L * (wa + wd);
  const ld half = 0.5L * (wa - wd);
  const ld split = std::sqrt(half * half + L * L);
  nm.omega_plus = static_cast<double>(mean + split);
  nm.omega_minus = static_cast<double>(mean - split);
  nm.Delta_pm = static_cast<double>(2.0L * split);

  const ld gaw = p.g_a_omega, gdw = p.g_d_omega;
  nm.G_plus = static_cast<double>(gaw * c * c + gdw * s * s);
  nm.G_minus = static_cast<double>(gaw * s * s + gdw * c * c);
  nm.G_mix = static_cast<double>(0.5L * (gdw - gaw) * s2);

  nm.kappa_eff_minus = static_cast<double>(detail::kappa_eff_minus_of(ka, kd, ga, theta));
  nm.kappa_eff_plus = static_cast<double>(detail::kappa_eff_plus_of(ka, kd, ga, theta));
  const ld skk = std::sqrt(ka * kd);
  nm.kappa_cross = static_cast<double>(c2 * skk + 0.5L * s2 * (kd - Ga));

  // Canonical rates of [[Gamma_a, sqrt(ka kd)], [sqrt(ka kd), kd]].
  const ld tr = Ga + kd;
  const ld disc = (Ga - kd) * (Ga - kd) + 4.0L * ka * kd;
  const ld root = std::sqrt(disc);
  const ld Gp = 0.5L * (tr + root);
  const ld Gm = (tr + root) > 0 ? 2.0L * ga * kd / (tr + root) : 0.0L;
  nm.Gamma_can_plus = static_cast<double>(Gp);
  nm.Gamma_can_minus = static_cast<double>(Gm);

  auto normalize = [](ld x1, ld x2) {
    const ld n = std::sqrt(x1 * x1 + x2 * x2);
    if (x1 < 0 || (x1 == 0 && x2 < 0)) {
      x1 = -x1;
      x2 = -x2;
    }
    return std::array<double, 2>{static_cast<double>(x1 / n), static_cast<double>(x2 / n)};
  };
  if (skk == 0.0L) {
    // Diagonal matrix: the larger rate belongs to the plus branch.
    if (Ga >= kd) {
      nm.x_vec_plus = {1.0, 0.0};
      nm.x_vec_minus = {0.0, 1.0};
    } else {
      nm.x_vec_plus = {0.0, 1.0};
      nm.x_vec_minus = {1.0, 0.0};
    }
  } else if (Ga >= kd) {
    nm.x_vec_plus = normalize(1.0L, skk / (Gp - kd));
    nm.x_vec_minus = normalize(1.0L, (Gm - Ga) / skk);
  } else {
    nm.x_vec_plus = normalize(1.0L, (Gp - Ga) / skk);
    nm.x_vec_minus = normalize(1.0L, skk / (Gm - kd));
  }

  // d kappa_eff,pm / dx at x = 0 with kappa_j(x) = kappa_j + sqrt(2) g_j^kappa x, divided by sqrt(2).
  const ld gak = p.g_a_kappa, gdk = p.g_d_kappa;
  ld Gkm = 0.0L, Gkp = 0.0L;
  if (gak != 0.0L) {
    Gkm += gak * (s * s - s2 * std::sqrt(kd) / (2.0L * std::sqrt(ka)));
    Gkp += gak * (c * c + s2 * std::sqrt(kd) / (2.0L * std::sqrt(ka)));
  }
  if (gdk != 0.0L) {
    Gkm += gdk * (c * c - s2 * std::sqrt(ka) / (2.0L * std::sqrt(kd)));
    Gkp += gdk * (s * s + s2 * std::sqrt(ka) / (2.0L * std::sqrt(kd)));
  }
  nm.G_kappa_minus = static_cast<double>(Gkm);
  nm.G_kappa_plus = static_cast<double>(Gkp);
  nm.G_kappa_minus_approx =
      gdk == 0.0L ? 0.0
                  : static_cast<double>(std::sqrt(2.0L) * gdk *
                                        (1.0L - 0.5L * s2 * std::sqrt(ka / kd)));
  nm.eta = -nm.G_minus / p.Omega_m;
  return nm;
}

LangevinParams langevin_params(const SystemParams& p) {
  using cld = std::complex<long double>;
  const ld wa = p.omega_a, wd = p.omega_d;
  const ld ka = p.kappa_a, kd = p.kappa_d, Ga = ka + p.gamma_a;
  const cld I(0.0L, 1.0L);
  const cld coupling = cld(p.Lambda, 0.0L) - I * std::sqrt(ka * kd) / 2.0L;
  const cld centre = (wa + wd) / 2.0L - I * (Ga + kd) / 4.0L;
  const cld inner = (wa - wd) / 2.0L - I * (Ga - kd) / 4.0L;
  const cld root = std::sqrt(inner * inner + coupling * coupling);
  cld e1 = centre + root, e2 = centre - root;
  if (e1.real() < e2.real()) std::swap(e1, e2);

  LangevinParams lp;
  lp.Omega_prime_plus = Complex(static_cast<double>(e1.real()), static_cast<double>(e1.imag()));
  lp.Omega_prime_minus = Complex(static_cast<double>(e2.real()), static_cast<double>(e2.imag()));
  lp.omega_prime_plus = static_cast<double>(e1.real());
  lp.omega_prime_minus = static_cast<double>(e2.real());
  lp.kappa_eff_prime_plus = static_cast<double>(-2.0L * e1.imag());
  lp.kappa_eff_prime_minus = static_cast<double>(-2.0L * e2.imag());
  lp.Delta_pm_prime = static_cast<double>(std::abs(e1.real() - e2.real()));
  return lp;
}

SystemParams with_eta(const SystemParams& p, double eta) {
  const ld theta = 0.5L * std::atan2(2.0L * static_cast<ld>(p.Lambda),
                                     static_cast<ld>(p.omega_a) - static_cast<ld>(p.omega_d));
  const ld s = std::sin(theta), c = std::cos(theta);
  if (c * c < 1e-300L)
    throw ValidationError("eta cannot be set through g_d_omega when cos(theta) = 0");
  SystemParams q = p;
  const ld target = -static_cast<ld>(eta) * static_cast<ld>(p.Omega_m);
  q.g_d_omega = static_cast<double>((target - static_cast<ld>(p.g_a_omega) * s * s) / (c * c));
  return q;
}

std::vector<KerrLevel> kerr_spectrum_analytic(double omega, double G, double Omega_m,
                                              std::size_t n_max, std::size_t m_max) {
  std::vector<KerrLevel> out;
  out.reserve((n_max + 1) * (m_max + 1));
  const double kerr = G * G / Omega_m;
  for (std::size_t n = 0; n <= n_max; ++n)
    for (std::size_t m = 0; m <= m_max; ++m) {
      const double dn = static_cast<double>(n);
      out.push_back({n, m, omega * dn + Omega_m * static_cast<double>(m) - dn * dn * kerr});
    }
  return out;
}

std::vector<KerrLevel> kerr_spectrum_analytic(const NormalModeParams& nm, double Omega_m,
                                              std::size_t n_max, std::size_t m_max) {
  return kerr_spectrum_analytic(nm.omega_minus, nm.G_minus, Omega_m, n_max, m_max);
}

Complex drive_amplitude_for_cat(const NormalModeParams& nm, const SystemParams& p,
                                const BichromaticParams& bp) {
  return std::sqrt(Complex(nm.G_minus * nm.G_minus / p.Omega_m, 0.0) * bp.alpha_minus * bp.chi);
}

BichromaticParams resolve_bichromatic(const SystemParams& p, Complex chi, Complex alpha_minus,
                                      CatDriveRule rule) {
  const NormalModeParams nm = normal_mode_params(p);
  const double G = nm.G_minus, Om = p.Omega_m;
  const double s = std::sin(nm.theta);
  BichromaticParams bp;
  bp.chi = chi;
  bp.alpha_minus = alpha_minus;
  bp.beta = -G * std::norm(alpha_minus) / Om;
  bp.delta_minus = 2.0 * G * G * std::norm(alpha_minus) / Om;
  bp.Delta_s = -2.0 * Om - bp.delta_minus;
  bp.omega_s = nm.omega_minus + bp.Delta_s;
  bp.omega_l = nm.omega_minus - bp.delta_minus;
  bp.Delta_sl = bp.omega_s - bp.omega_l;
  bp.G_tilde = G * G * alpha_minus / Om;
  bp.Gamma_tilde = 4.0 * std::norm(bp.G_tilde) / nm.kappa_eff_minus;
  if (s != 0.0)
    bp.epsilon_s = alpha_minus * Complex(bp.Delta_s, 0.5 * nm.kappa_eff_minus) / s;
  switch (rule) {
    case CatDriveRule::literal: {
      // Same formula with every rate measured in Omega_m, converted back to kappa_a.
      const double g = G / Om;
      bp.epsilon_l = std::sqrt(Complex(g * g, 0.0) * alpha_minus * chi) * Om;
      break;
    }
    case CatDriveRule::two_phonon_balance:
      bp.epsilon_l = s != 0.0 ? bp.G_tilde * chi * chi / s : Complex(0.0);
      break;
  }
  return bp;
}

DenseMatrix LindbladModel::dissipation_matrix() const {
  const auto n = static_cast<Eigen::Index>(jumps.size());
  DenseMatrix g = DenseMatrix::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) g(k, k) = jumps[static_cast<std::size_t>(k)].rate;
  for (const auto& ct : cross) {
    if (ct.i >= jumps.size() || ct.j >= jumps.size() || ct.i == ct.j)
      throw ValidationError("cross term '" + ct.label + "' references invalid jump indices");
    const auto i = static_cast<Eigen::Index>(ct.i), j = static_cast<Eigen::Index>(ct.j);
    g(i, j) += ct.rate;
    g(j, i) += std::conj(ct.rate);
  }
  return g;
}

void LindbladModel::validate() const {
  if (!(hamiltonian.layout() == layout)) throw LayoutError("hamiltonian layout differs from model");
  const double hscale = std::max(1.0, hamiltonian.max_abs());
  if (!hamiltonian.is_hermitian(1e-10 * hscale))
    throw ValidationError("static hamiltonian is not Hermitian");
  for (const auto& rt : rotating)
    if (!(rt.op.layout() == layout)) throw LayoutError("rotating term layout differs from model");
  for (const auto& j : jumps) {
    if (!(j.op.layout() == layout))
      throw LayoutError("jump '" + j.label + "' layout differs from model");
    if (!std::isfinite(j.rate)) throw ValidationError("jump '" + j.label + "' has non-finite rate");
  }
  if (jumps.empty()) return;
  const DenseMatrix g = dissipation_matrix();
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(g, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  if (lo < -1e-8)
    throw NonMarkovianError("dissipation matrix has eigenvalue " + std::to_string(lo) + " < -1e-8");
}

std::vector<JumpTerm> canonical_lindblad_decomposition(const LindbladModel& model) {
  const std::size_t n = model.jumps.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& ct : model.cross) {
    if (ct.i >= n || ct.j >= n)
      throw ValidationError("cross term '" + ct.label + "' references invalid jump indices");
    parent[find(ct.i)] = find(ct.j);
  }
  const DenseMatrix g = model.dissipation_matrix();

  std::vector<JumpTerm> out;
  std::vector<bool> done(n, false);
  for (std::size_t root = 0; root < n; ++root) {
    if (done[root]) continue;
    std::vector<std::size_t> members;
    for (std::size_t k = 0; k < n; ++k)
      if (find(k) == find(root)) members.push_back(k);
    for (auto k : members) done[k] = true;

    if (members.size() == 1) {
      JumpTerm jt = model.jumps[members[0]];
      if (jt.rate < -1e-8)
        throw NonMarkovianError("jump '" + jt.label + "' has negative rate " + std::to_string(jt.rate));
      jt.rate = std::max(jt.rate, 0.0);
      out.push_back(std::move(jt));
      continue;
    }
    const auto m = static_cast<Eigen::Index>(members.size());
    DenseMatrix sub(m, m);
    for (Eigen::Index r = 0; r < m; ++r)
      for (Eigen::Index c = 0; c < m; ++c)
        sub(r, c) = g(static_cast<Eigen::Index>(members[static_cast<std::size_t>(r)]),
                      static_cast<Eigen::Index>(members[static_cast<std::size_t>(c)]));
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(sub);
    for (Eigen::Index k = m; k-- > 0;) {
      const double lam = es.eigenvalues()(k);
      if (lam < -1e-8)
        throw NonMarkovianError("dissipation matrix eigenvalue " + std::to_string(lam) + " < -1e-8");
      Operator op = Operator::zero(model.layout);
      for (Eigen::Index r = 0; r < m; ++r)
        op += model.jumps[members[static_cast<std::size_t>(r)]].op * es.eigenvectors()(r, k);
      out.push_back({std::move(op), std::max(lam, 0.0), "canonical[" + std::to_string(out.size()) + "]"});
    }
  }
  return out;
}

}  // namespace fanomech
