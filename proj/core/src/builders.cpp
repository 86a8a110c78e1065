#include "detail.hpp"
#include "fanomech/errors.hpp"
#include "fanomech/model.hpp"

#include <cmath>
#include <sstream>

namespace fanomech {

namespace {

void add_jump(LindbladModel& m, Operator op, double rate, std::string label) {
  if (rate > 0.0) m.jumps.push_back({std::move(op), rate, std::move(label)});
}

void add_mechanical_bath(LindbladModel& m, const Operator& b, double gamma_m, double n_th) {
  add_jump(m, b, gamma_m * (n_th + 1.0), "b");
  add_jump(m, b.adjoint(), gamma_m * n_th, "b_dag");
}

// Two-mode operators on the (A-, b) layout.
struct TwoMode {
  SpaceLayout layout;
  Operator A, Ad, n, b, bd, x;
};

TwoMode two_mode_ops(TwoModeDims dims) {
  TwoMode t;
  t.layout = SpaceLayout({dims.A, dims.b}, {"A-", "b"});
  t.A = annihilation_op(t.layout, "A-");
  t.Ad = t.A.adjoint();
  t.n = number_op(t.layout, "A-");
  t.b = annihilation_op(t.layout, "b");
  t.bd = t.b.adjoint();
  t.x = t.b + t.bd;
  return t;
}

// sqrt(kappa_eff,-(x)) on the mechanical factor, in units of sqrt(Omega_m).
Operator position_dependent_root(const SystemParams& p, const NormalModeParams& nm,
                                 const TwoMode& t, bool linearized, LindbladModel& m) {
  const std::size_t db = t.layout.dim_of("b");
  DenseMatrix bl(local_annihilation(db));
  DenseMatrix xl = (bl + bl.adjoint()) / std::sqrt(2.0);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(xl);
  const Eigen::VectorXd xi = es.eigenvalues();
  Eigen::VectorXd root(xi.size());
  std::size_t clamped = 0;
  const long double th = nm.theta;
  for (Eigen::Index k = 0; k < xi.size(); ++k) {
    long double kap;
    if (linearized) {
      kap = static_cast<long double>(nm.kappa_eff_minus) +
            std::sqrt(2.0L) * static_cast<long double>(nm.G_kappa_minus) * xi(k);
    } else {
      const long double ka = p.kappa_a + std::sqrt(2.0L) * p.g_a_kappa * xi(k);
      const long double kd = p.kappa_d + std::sqrt(2.0L) * p.g_d_kappa * xi(k);
      if (ka < 0.0L || kd < 0.0L) ++clamped;
      kap = detail::kappa_eff_minus_of(ka, kd, p.gamma_a, th);
    }
    if (kap < 0.0L) {
      ++clamped;
      kap = 0.0L;
    }
    root(k) = static_cast<double>(std::sqrt(kap / static_cast<long double>(p.Omega_m)));
  }
  const double frac = static_cast<double>(clamped) / static_cast<double>(xi.size());
  m.diagnostics["clamped_eigenvalues"] = static_cast<double>(clamped);
  m.diagnostics["clamped_fraction"] = frac;
  if (frac > 0.01) {
    std::ostringstream os;
    os << "position-dependent decay rate clamped on " << clamped << " of " << xi.size()
       << " mechanical position eigenvalues";
    warn(os.str());
  }
  DenseMatrix K = es.eigenvectors() * root.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
  SparseMatrix Ks = K.sparseView(1.0, 1e-300);
  return t.A * embed(t.layout, "b", Ks);
}

void add_two_mode_dissipation(LindbladModel& m, const SystemParams& p, const NormalModeParams& nm,
                              const TwoMode& t, Dissipation kind, double kT_over_Omega) {
  const double Om = p.Omega_m;
  const double kappa = nm.kappa_eff_minus / Om;
  const double gm = p.gamma_m / Om;
  switch (kind) {
    case Dissipation::standard:
      add_jump(m, t.A, kappa, "A-");
      add_mechanical_bath(m, t.b, gm, p.n_th_b);
      break;
    case Dissipation::position_dependent:
    case Dissipation::position_dependent_linearized:
      m.jumps.push_back({position_dependent_root(p, nm, t,
                                                 kind == Dissipation::position_dependent_linearized, m),
                         1.0, "sqrt(kappa_eff(x)) A-"});
      add_mechanical_bath(m, t.b, gm, p.n_th_b);
      break;
    case Dissipation::dressed: {
      const double eta = -nm.G_minus / Om;
      Operator shift = t.n * Complex(eta, 0.0);
      add_jump(m, t.b - shift, gm * (p.n_th_b + 1.0), "b - eta n");
      add_jump(m, t.bd - shift, gm * p.n_th_b, "b_dag - eta n");
      add_jump(m, t.A, kappa, "A-");
      add_jump(m, t.n, 4.0 * gm * kT_over_Omega * eta * eta, "n");
      m.diagnostics["kT_over_Omega"] = kT_over_Omega;
      break;
    }
  }
}

LindbladModel two_mode_model(const SystemParams& p, const DriveParams& drive, double Delta_minus,
                             TwoModeDims dims, Dissipation kind, double kT_over_Omega) {
  p.validate();
  const NormalModeParams nm = normal_mode_params(p);
  const double Om = p.Omega_m;
  const TwoMode t = two_mode_ops(dims);
  LindbladModel m;
  m.layout = t.layout;
  m.time_unit = 1.0 / Om;
  m.time_unit_label = "1/Omega_m";
  const double eps = drive.epsilon_p * std::sin(nm.theta) / Om;
  m.hamiltonian = t.n * Complex(Delta_minus / Om) + t.bd * t.b +
                  (t.n * t.x) * Complex(nm.G_minus / Om) - (t.A + t.Ad) * Complex(eps);
  add_two_mode_dissipation(m, p, nm, t, kind, kT_over_Omega);
  m.diagnostics["eta"] = nm.eta;
  m.diagnostics["kappa_eff_minus_over_Omega_m"] = nm.kappa_eff_minus / Om;
  return m;
}

}  // namespace

LindbladModel build_optical_only_model(const SystemParams& p, const DriveParams& drive,
                                       Frame frame, OpticalDims dims) {
  p.validate();
  LindbladModel m;
  m.layout = SpaceLayout({dims.a, dims.d}, {"a", "d"});
  const Operator a = annihilation_op(m.layout, "a"), d = annihilation_op(m.layout, "d");
  const Operator na = number_op(m.layout, "a"), nd = number_op(m.layout, "d");
  const Operator hop = a.adjoint() * d + d.adjoint() * a;
  if (frame == Frame::lab) {
    m.lab_frame = true;
    m.hamiltonian = na * Complex(p.omega_a) + nd * Complex(p.omega_d) + hop * Complex(p.Lambda);
    if (drive.epsilon_p != 0.0) {
      m.rotating.push_back({a.adjoint() * Complex(drive.epsilon_p), -drive.omega_p});
      m.rotating.push_back({a * Complex(drive.epsilon_p), drive.omega_p});
    }
  } else {
    m.hamiltonian = na * Complex(p.omega_a - drive.omega_p) + nd * Complex(p.omega_d - drive.omega_p) +
                    hop * Complex(p.Lambda) + (a + a.adjoint()) * Complex(drive.epsilon_p);
  }
  m.jumps.push_back({a, p.Gamma_a(), "a"});
  m.jumps.push_back({d, p.kappa_d, "d"});
  m.cross.push_back({0, 1, Complex(std::sqrt(p.kappa_a * p.kappa_d)), "ad"});
  return m;
}

LindbladModel build_three_mode_model(const SystemParams& p, const DriveParams& drive, Frame frame,
                                     ThreeModeDims dims) {
  p.validate();
  LindbladModel m;
  m.layout = SpaceLayout({dims.a, dims.d, dims.b}, {"a", "d", "b"});
  const Operator a = annihilation_op(m.layout, "a"), d = annihilation_op(m.layout, "d");
  const Operator b = annihilation_op(m.layout, "b");
  const Operator na = number_op(m.layout, "a"), nd = number_op(m.layout, "d");
  const Operator nb = number_op(m.layout, "b");
  const Operator hop = a.adjoint() * d + d.adjoint() * a;
  const Operator om = (na * Complex(p.g_a_omega) + nd * Complex(p.g_d_omega)) * (b + b.adjoint());
  const double shift = frame == Frame::lab ? 0.0 : drive.omega_p;
  m.hamiltonian = na * Complex(p.omega_a - shift) + nd * Complex(p.omega_d - shift) +
                  hop * Complex(p.Lambda) + nb * Complex(p.Omega_m) - om;
  if (frame == Frame::lab) {
    m.lab_frame = true;
    if (drive.epsilon_p != 0.0) {
      m.rotating.push_back({a.adjoint() * Complex(drive.epsilon_p), -drive.omega_p});
      m.rotating.push_back({a * Complex(drive.epsilon_p), drive.omega_p});
    }
  } else if (drive.epsilon_p != 0.0) {
    m.hamiltonian += (a + a.adjoint()) * Complex(drive.epsilon_p);
  }
  m.jumps.push_back({a, p.Gamma_a(), "a"});
  m.jumps.push_back({d, p.kappa_d, "d"});
  m.cross.push_back({0, 1, Complex(std::sqrt(p.kappa_a * p.kappa_d)), "ad"});
  add_mechanical_bath(m, b, p.gamma_m, p.n_th_b);
  return m;
}

LindbladModel build_effective_two_mode_model(const SystemParams& p, const DriveParams& drive,
                                             double Delta_minus, TwoModeDims dims) {
  return two_mode_model(p, drive, Delta_minus, dims, Dissipation::standard, 0.0);
}

LindbladModel build_position_dependent_model(const SystemParams& p, const DriveParams& drive,
                                             double Delta_minus, TwoModeDims dims,
                                             RateSubstitution sub) {
  return two_mode_model(p, drive, Delta_minus, dims,
                        sub == RateSubstitution::exact ? Dissipation::position_dependent
                                                       : Dissipation::position_dependent_linearized,
                        0.0);
}

double kT_over_Omega_from_nth(double n_th) {
  if (n_th <= 0.0) return 0.0;
  return 1.0 / std::log1p(1.0 / n_th);
}

LindbladModel build_dressed_state_model(const SystemParams& p, const DriveParams& drive,
                                        double Delta_minus, double kT_over_Omega,
                                        TwoModeDims dims) {
  return two_mode_model(p, drive, Delta_minus, dims, Dissipation::dressed, kT_over_Omega);
}

LindbladModel build_bichromatic_model(const SystemParams& p, const BichromaticParams& bp,
                                      TwoModeDims dims, Dissipation dissipation,
                                      double kT_over_Omega) {
  p.validate();
  const NormalModeParams nm = normal_mode_params(p);
  const double Om = p.Omega_m;
  const TwoMode t = two_mode_ops(dims);
  LindbladModel m;
  m.layout = t.layout;
  m.time_unit = 1.0 / Om;
  m.time_unit_label = "1/Omega_m";
  const double g = nm.G_minus / Om;
  const Complex al = bp.alpha_minus;
  // The beta displacement shifts the A- frequency by -delta_-; the remaining
  // constant energy offset is dropped.
  const double detuning = -(bp.Delta_s + bp.delta_minus) / Om;
  m.hamiltonian = t.n * Complex(detuning) + t.bd * t.b + (t.n * t.x) * Complex(g) +
                  ((t.Ad * al + t.A * std::conj(al)) * t.x) * Complex(g);
  const Complex drive = bp.epsilon_l * std::sin(nm.theta) / Om;
  if (drive != Complex(0.0)) {
    m.rotating.push_back({t.Ad * drive, bp.Delta_sl / Om});
    m.rotating.push_back({t.A * std::conj(drive), -bp.Delta_sl / Om});
  }
  add_two_mode_dissipation(m, p, nm, t, dissipation, kT_over_Omega);
  m.diagnostics["eta"] = nm.eta;
  m.diagnostics["Gamma_tilde_over_Omega_m"] = bp.Gamma_tilde / Om;
  return m;
}

LindbladModel normal_mode_dissipators(const SystemParams& p, const SpaceLayout& layout,
                                      const std::string& a_label, const std::string& d_label) {
  const NormalModeParams nm = normal_mode_params(p);
  const double s = std::sin(nm.theta), c = std::cos(nm.theta);
  const Operator a = annihilation_op(layout, a_label), d = annihilation_op(layout, d_label);
  LindbladModel m;
  m.layout = layout;
  m.hamiltonian = Operator::zero(layout);
  m.jumps.push_back({a * Complex(c) + d * Complex(s), nm.kappa_eff_plus, "A+"});
  m.jumps.push_back({a * Complex(-s) + d * Complex(c), nm.kappa_eff_minus, "A-"});
  m.cross.push_back({0, 1, Complex(nm.kappa_cross), "A+A-"});
  return m;
}

}  // namespace fanomech
