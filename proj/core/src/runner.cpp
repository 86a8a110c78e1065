#include "fanomech/runner.hpp"

#include "fanomech/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#ifndef FANOMECH_VERSION_STRING
#define FANOMECH_VERSION_STRING "unknown"
#endif

namespace fanomech {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Rows produced by one observable at one point. The first `keys` columns
// (time or eigenvalue index) identify the row; the rest are values.
struct Block {
  std::vector<std::string> columns;
  std::size_t keys = 0;
  std::vector<std::vector<double>> rows;
};

struct PointResult {
  std::map<std::string, Block> blocks;
  std::vector<WignerSnapshot> wigner;
  json info;
};

struct Point {
  std::optional<double> series, sweep;
  Scenario scenario;
};

double bichromatic_Gamma_tilde(const Scenario& s, const SystemParams& p) {
  return resolve_bichromatic(p, s.cat.chi, s.cat.alpha_minus, s.cat.rule).Gamma_tilde;
}

TwoModeDims two_dims(const Scenario& s) { return {s.dims.A, s.dims.b}; }

std::string time_column(TimeUnit u, const std::string& model_label) {
  switch (u) {
    case TimeUnit::kappa_a: return "t*kappa_a";
    case TimeUnit::Omega_m: return "t*Omega_m";
    case TimeUnit::Gamma_tilde: return "t*Gamma_tilde";
    case TimeUnit::model: break;
  }
  return "t[" + model_label + "]";
}

// One unit of `u` expressed in model time.
double unit_in_model_time(TimeUnit u, const Scenario& s, const SystemParams& p, const LindbladModel& m) {
  switch (u) {
    case TimeUnit::model: return 1.0;
    case TimeUnit::kappa_a: return 1.0 / m.time_unit;
    case TimeUnit::Omega_m: return 1.0 / (p.Omega_m * m.time_unit);
    case TimeUnit::Gamma_tilde: return 1.0 / (bichromatic_Gamma_tilde(s, p) * m.time_unit);
  }
  return 1.0;
}

Operator dark_mode(const SpaceLayout& layout, const SystemParams& p) {
  const double th = normal_mode_params(p).theta;
  return annihilation_op(layout, "a") * Complex(-std::sin(th)) + annihilation_op(layout, "d") * Complex(std::cos(th));
}

Operator bright_mode(const SpaceLayout& layout, const SystemParams& p) {
  const double th = normal_mode_params(p).theta;
  return annihilation_op(layout, "a") * Complex(std::cos(th)) + annihilation_op(layout, "d") * Complex(std::sin(th));
}

double g2_of(const DensityMatrix& rho, const Operator& A) {
  const Operator Ad = A.adjoint();
  const double n = expectation(rho, Ad * A).real();
  if (!(n > 1e-14)) return kNaN;
  return expectation(rho, Ad * Ad * A * A).real() / (n * n);
}

json normal_mode_json(const NormalModeParams& nm) {
  return {{"theta", nm.theta},
          {"omega_plus", nm.omega_plus},
          {"omega_minus", nm.omega_minus},
          {"G_plus", nm.G_plus},
          {"G_minus", nm.G_minus},
          {"G_mix", nm.G_mix},
          {"kappa_eff_plus", nm.kappa_eff_plus},
          {"kappa_eff_minus", nm.kappa_eff_minus},
          {"kappa_cross", nm.kappa_cross},
          {"Delta_pm", nm.Delta_pm},
          {"Gamma_can_plus", nm.Gamma_can_plus},
          {"Gamma_can_minus", nm.Gamma_can_minus},
          {"x_vec_plus", nm.x_vec_plus},
          {"x_vec_minus", nm.x_vec_minus},
          {"G_kappa_plus", nm.G_kappa_plus},
          {"G_kappa_minus", nm.G_kappa_minus},
          {"G_kappa_minus_approx", nm.G_kappa_minus_approx},
          {"eta", nm.eta}};
}

json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

json langevin_json(const LangevinParams& lp) {
  return {{"Omega_prime_plus", complex_json(lp.Omega_prime_plus)},
          {"Omega_prime_minus", complex_json(lp.Omega_prime_minus)},
          {"omega_prime_plus", lp.omega_prime_plus},
          {"omega_prime_minus", lp.omega_prime_minus},
          {"kappa_eff_prime_plus", lp.kappa_eff_prime_plus},
          {"kappa_eff_prime_minus", lp.kappa_eff_prime_minus},
          {"Delta_pm_prime", lp.Delta_pm_prime}};
}

json params_json(const SystemParams& p) {
  return {{"omega_a", p.omega_a},     {"omega_d", p.omega_d},     {"Lambda", p.Lambda},
          {"kappa_a", p.kappa_a},     {"kappa_d", p.kappa_d},     {"gamma_a", p.gamma_a},
          {"Omega_m", p.Omega_m},     {"gamma_m", p.gamma_m},     {"g_a_omega", p.g_a_omega},
          {"g_d_omega", p.g_d_omega}, {"g_a_kappa", p.g_a_kappa}, {"g_d_kappa", p.g_d_kappa},
          {"n_th_b", p.n_th_b}};
}

json bichromatic_json(const BichromaticParams& bp) {
  return {{"epsilon_l", complex_json(bp.epsilon_l)},
          {"epsilon_l_phase_convention", "principal square root"},
          {"epsilon_s", complex_json(bp.epsilon_s)},
          {"omega_l", bp.omega_l},
          {"omega_s", bp.omega_s},
          {"chi", complex_json(bp.chi)},
          {"alpha_minus", complex_json(bp.alpha_minus)},
          {"beta", complex_json(bp.beta)},
          {"delta_minus", bp.delta_minus},
          {"Delta_s", bp.Delta_s},
          {"Delta_sl", bp.Delta_sl},
          {"G_tilde", complex_json(bp.G_tilde)},
          {"Gamma_tilde", bp.Gamma_tilde}};
}

json derived_json(const Scenario& s) {
  const SystemParams p = resolved_params(s);
  json j;
  j["params"] = params_json(p);
  j["normal_mode"] = normal_mode_json(normal_mode_params(p));
  j["langevin"] = langevin_json(langevin_params(p));
  j["Delta_minus"] = resolved_Delta_minus(s);
  if (s.variant == Variant::bichromatic) {
    const BichromaticParams bp = resolve_bichromatic(p, s.cat.chi, s.cat.alpha_minus, s.cat.rule);
    j["bichromatic"] = bichromatic_json(bp);
    j["drive_amplitude_for_cat"] = complex_json(drive_amplitude_for_cat(normal_mode_params(p), p, bp));
  }
  return j;
}

Block effective_params_block(const SystemParams& p) {
  const NormalModeParams nm = normal_mode_params(p);
  const LangevinParams lp = langevin_params(p);
  Block b;
  b.columns = {"theta",
               "Delta_pm/kappa_a",
               "kappa_eff_plus/kappa_a",
               "kappa_eff_minus/kappa_a",
               "zeta/kappa_a",
               "Delta_pm_langevin/kappa_a",
               "kappa_eff_plus_langevin/kappa_a",
               "kappa_eff_minus_langevin/kappa_a",
               "zeta_langevin/kappa_a",
               "kappa_eff_minus/Omega_m",
               "G_minus/Omega_m"};
  b.rows.push_back({nm.theta, nm.Delta_pm, nm.kappa_eff_plus, nm.kappa_eff_minus, nm.Delta_pm - nm.kappa_eff_plus,
                    lp.Delta_pm_prime, lp.kappa_eff_prime_plus, lp.kappa_eff_prime_minus,
                    lp.Delta_pm_prime - lp.kappa_eff_prime_plus, nm.kappa_eff_minus / p.Omega_m,
                    nm.G_minus / p.Omega_m});
  return b;
}

// Evaluates every per-state observable of `s` on rho at model time t.
class StateObservables {
 public:
  StateObservables(const Scenario& s, const SystemParams& p, const LindbladModel& m) : s_(s), p_(p), m_(m) {
    const bool optical = s.variant == Variant::optical_only || s.variant == Variant::three_mode;
    for (const auto& o : s.observables) want_.insert(o);
    if (optical) {
      dark_ = dark_mode(m.layout, p);
      bright_ = bright_mode(m.layout, p);
    }
    grid_ = GridSpec::for_cat(s.cat.chi);
  }

  std::map<std::string, std::vector<std::string>> columns() const {
    std::map<std::string, std::vector<std::string>> c;
    if (want_.count("occupations"))
      for (const auto& l : m_.layout.labels()) c["occupations"].push_back("n_" + l);
    if (want_.count("normal_mode_occupations")) c["normal_mode_occupations"] = {"n_A_plus", "n_A_minus"};
    if (want_.count("g2")) c["g2"] = {"g2"};
    if (want_.count("fidelity")) c["fidelity"] = {"fidelity"};
    if (want_.count("wigner_log_negativity")) c["wigner_log_negativity"] = {"wigner_log_negativity"};
    if (want_.count("odd_population")) c["odd_population"] = {"odd_population"};
    return c;
  }

  std::map<std::string, std::vector<double>> evaluate(const DensityMatrix& rho, double t_model) const {
    std::map<std::string, std::vector<double>> v;
    if (want_.count("occupations")) {
      const auto occ = mean_occupations(rho);
      for (const auto& l : m_.layout.labels()) v["occupations"].push_back(occ.at(l));
    }
    if (want_.count("normal_mode_occupations"))
      v["normal_mode_occupations"] = {expectation(rho, bright_.adjoint() * bright_).real(),
                                      expectation(rho, dark_.adjoint() * dark_).real()};
    if (want_.count("g2")) {
      if (m_.layout.contains("A-")) {
        try {
          v["g2"] = {g2_equal_time(rho, "A-")};
        } catch (const UndefinedStatisticsError&) {
          v["g2"] = {kNaN};
        }
      } else {
        v["g2"] = {g2_of(rho, dark_)};
      }
    }
    if (want_.count("fidelity") || want_.count("wigner_log_negativity") || want_.count("odd_population")) {
      const DensityMatrix rb = mechanical_frame(rho, t_model);
      if (want_.count("fidelity")) v["fidelity"] = {fidelity_to_cat(rb, s_.cat.chi, CatParity::even)};
      if (want_.count("wigner_log_negativity")) v["wigner_log_negativity"] = {wigner_log_negativity(wigner(rb, grid_))};
      if (want_.count("odd_population")) v["odd_population"] = {odd_population(rb)};
    }
    return v;
  }

  // Reduced mechanical state in the frame co-rotating at Omega_m.
  DensityMatrix mechanical_frame(const DensityMatrix& rho, double t_model) const {
    const double phi = t_model * p_.Omega_m * m_.time_unit;
    return rotate_mode(partial_trace(rho, {"b"}), phi);
  }

  const GridSpec& grid() const { return grid_; }

 private:
  const Scenario& s_;
  const SystemParams& p_;
  const LindbladModel& m_;
  std::set<std::string> want_;
  Operator dark_, bright_;
  GridSpec grid_;
};

// Eigenvalues converted from model units to kappa_a.
Block spectrum_block(const Liouvillian& L, std::size_t count) {
  Block b;
  b.columns = {"k", "re_lambda/kappa_a", "im_lambda/kappa_a"};
  b.keys = 1;
  const auto ev = spectrum(L, count);
  for (std::size_t k = 0; k < ev.size(); ++k)
    b.rows.push_back({static_cast<double>(k + 1), ev[k].real() / L.time_unit, ev[k].imag() / L.time_unit});
  return b;
}

PointResult compute_point(const Scenario& s) {
  PointResult r;
  const SystemParams p = resolved_params(s);
  r.info["eta"] = normal_mode_params(p).eta;
  r.info["G_minus/Omega_m"] = normal_mode_params(p).G_minus / p.Omega_m;
  r.info["kappa_eff_minus/Omega_m"] = normal_mode_params(p).kappa_eff_minus / p.Omega_m;
  std::set<std::string> want(s.observables.begin(), s.observables.end());
  if (want.count("effective_params")) r.blocks["effective_params"] = effective_params_block(p);

  const bool needs_model = std::any_of(want.begin(), want.end(), [](const std::string& o) { return o != "effective_params"; });
  if (!needs_model) return r;

  const LindbladModel model = build_scenario_model(s);
  for (const auto& [k, v] : model.diagnostics) r.info["diagnostics"][k] = v;
  const StateObservables obs(s, p, model);

  if (s.solver.mode == SolveMode::evolve) {
    const double unit = unit_in_model_time(s.solver.t_unit, s, p, model);
    std::set<double> grid_set;
    for (std::size_t i = 0; i < s.solver.n_points; ++i)
      grid_set.insert(s.solver.t_end * static_cast<double>(i) / static_cast<double>(s.solver.n_points - 1));
    for (double t : s.wigner_times) grid_set.insert(t);
    const std::vector<double> grid_user(grid_set.begin(), grid_set.end());
    std::vector<double> grid_model;
    for (double t : grid_user) grid_model.push_back(t * unit);

    const Liouvillian L = build_liouvillian(model, {.factor_dense_jumps = true});
    EvolveOptions eo;
    eo.rtol = s.solver.rtol;
    eo.atol = s.solver.atol;
    eo.exact_if_possible = true;
    const EvolutionResult ev = evolve(L, vacuum_state(model.layout), grid_model, {}, eo);
    r.info["method"] = ev.method;
    r.info["steps_accepted"] = ev.steps_accepted;
    r.info["steps_rejected"] = ev.steps_rejected;
    r.info["max_trace_drift"] = ev.max_trace_drift;

    const std::string tcol = time_column(s.solver.t_unit, model.time_unit_label);
    for (const auto& [name, cols] : obs.columns()) {
      Block& b = r.blocks[name];
      b.columns = {tcol};
      b.columns.insert(b.columns.end(), cols.begin(), cols.end());
      b.keys = 1;
    }
    for (std::size_t i = 0; i < ev.states.size(); ++i) {
      const auto vals = obs.evaluate(ev.states[i], ev.times[i]);
      for (const auto& [name, v] : vals) {
        std::vector<double> row = {grid_user[i]};
        row.insert(row.end(), v.begin(), v.end());
        r.blocks[name].rows.push_back(std::move(row));
      }
      if (want.count("wigner") &&
          std::find(s.wigner_times.begin(), s.wigner_times.end(), grid_user[i]) != s.wigner_times.end()) {
        WignerSnapshot w;
        w.time = grid_user[i];
        w.grid = wigner(obs.mechanical_frame(ev.states[i], ev.times[i]), obs.grid());
        r.wigner.push_back(std::move(w));
      }
    }
    return r;
  }

  if (s.solver.mode == SolveMode::none) {
    if (want.count("spectrum")) {
      r.blocks["spectrum"] = spectrum_block(build_liouvillian(model), s.solver.spectrum_count);
    }
    return r;
  }

  const Liouvillian L = build_liouvillian(model);
  if (want.count("spectrum")) {
    r.blocks["spectrum"] = spectrum_block(L, s.solver.spectrum_count);
  }
  const SteadyStateResult ss = steady_state_detailed(L);
  r.info["method"] = ss.method;
  r.info["relative_residual"] = ss.relative_residual;
  const auto vals = obs.evaluate(ss.rho, 0.0);
  for (const auto& [name, cols] : obs.columns()) {
    Block& b = r.blocks[name];
    b.columns = cols;
    b.rows.push_back(vals.at(name));
  }
  return r;
}

std::string context(const Point& pt, const Scenario& s) {
  std::ostringstream os;
  os << "scenario '" << s.name << "'";
  if (pt.series) os << ", " << s.series->path << " = " << *pt.series;
  if (pt.sweep) os << ", " << s.sweep->path << " = " << *pt.sweep;
  return os.str();
}

PointResult compute_with_context(const Point& pt, const Scenario& base) {
  try {
    return compute_point(pt.scenario);
  } catch (const ValidationError& e) {
    throw ValidationError(context(pt, base) + ": " + e.what());
  } catch (const Error& e) {
    throw Error(context(pt, base) + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(context(pt, base) + ": " + e.what());
  }
}

Scenario apply_reference(const Scenario& s) {
  Scenario r = s;
  for (const auto& [path, value] : s.reference) r = with_override(r, path, value);
  r.reference.clear();
  return r;
}

Scenario scaled_truncation(const Scenario& s) {
  auto up = [](std::size_t n) { return static_cast<std::size_t>(std::ceil(1.25 * static_cast<double>(n))); };
  Scenario r = s;
  r.dims = {up(s.dims.a), up(s.dims.d), up(s.dims.b), up(s.dims.A)};
  return r;
}

// Max deltas between matching value columns of two results.
json convergence_deltas(const PointResult& base, const PointResult& fine) {
  json j = json::object();
  for (const auto& [name, b] : base.blocks) {
    auto it = fine.blocks.find(name);
    if (it == fine.blocks.end() || name == "spectrum") continue;
    const Block& f = it->second;
    if (f.rows.size() != b.rows.size()) continue;
    double max_abs = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < b.rows.size(); ++i)
      for (std::size_t c = b.keys; c < b.rows[i].size() && c < f.rows[i].size(); ++c) {
        const double x = b.rows[i][c], y = f.rows[i][c];
        if (!std::isfinite(x) || !std::isfinite(y)) continue;
        max_abs = std::max(max_abs, std::abs(x - y));
        scale = std::max(scale, std::abs(x));
      }
    const double rel = scale > 0.0 ? max_abs / scale : 0.0;
    j[name] = {{"max_abs_delta", max_abs}, {"max_rel_delta", rel}, {"converged", rel < 1e-2}};
  }
  return j;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open " + tmp.string() + " for writing");
    f << content;
    if (!f) throw Error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

std::string axis_tag(const char* prefix, std::optional<double> v, std::size_t idx) {
  return v ? std::string("_") + prefix + std::to_string(idx) : std::string();
}

}  // namespace

std::size_t Table::column(const std::string& n) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == n) return i;
  throw LayoutError("table '" + name + "' has no column '" + n + "'");
}

std::vector<double> Table::column_values(const std::string& n) const {
  const std::size_t c = column(n);
  std::vector<double> v;
  v.reserve(rows.size());
  for (const auto& r : rows) v.push_back(r[c]);
  return v;
}

const Table& RunOutput::table(const std::string& n) const {
  for (const auto& t : tables)
    if (t.name == n) return t;
  throw LayoutError("run output has no table '" + n + "'");
}

LindbladModel build_scenario_model(const Scenario& s) {
  const SystemParams p = resolved_params(s);
  const NormalModeParams nm = normal_mode_params(p);
  const double Delta = resolved_Delta_minus(s);
  const DriveParams drive{s.epsilon_p, nm.omega_minus - Delta};
  switch (s.variant) {
    case Variant::optical_only: return build_optical_only_model(p, drive, s.frame, {s.dims.a, s.dims.d});
    case Variant::three_mode: return build_three_mode_model(p, drive, s.frame, {s.dims.a, s.dims.d, s.dims.b});
    case Variant::two_mode_effective: return build_effective_two_mode_model(p, drive, Delta, two_dims(s));
    case Variant::position_dependent:
      return build_position_dependent_model(p, drive, Delta, two_dims(s), s.rate_substitution);
    case Variant::dressed_state:
      return build_dressed_state_model(p, drive, Delta, kT_over_Omega_from_nth(p.n_th_b), two_dims(s));
    case Variant::bichromatic: {
      const BichromaticParams bp = resolve_bichromatic(p, s.cat.chi, s.cat.alpha_minus, s.cat.rule);
      return build_bichromatic_model(p, bp, two_dims(s), s.dissipation, kT_over_Omega_from_nth(p.n_th_b));
    }
  }
  throw ValidationError("unknown variant");
}

std::size_t workers_from_env() {
  if (const char* env = std::getenv("FANOMECH_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::string version_string() { return FANOMECH_VERSION_STRING; }

RunOutput run(const Scenario& scenario, const RunOptions& opts) {
  {
    const auto issues = validate_scenario(scenario);
    if (!issues.empty()) {
      std::string msg = "invalid scenario:";
      for (const auto& i : issues) msg += "\n  " + i.field + ": " + i.message;
      throw ValidationError(msg);
    }
  }
  std::vector<std::string> warnings;
  std::mutex warn_mutex;
  auto previous = set_warning_handler([&](std::string_view m) {
    std::lock_guard lock(warn_mutex);
    warnings.emplace_back(m);
  });
  struct Restore {
    WarningHandler h;
    ~Restore() { set_warning_handler(std::move(h)); }
  } restore{std::move(previous)};

  std::vector<Point> points;
  const std::vector<std::optional<double>> series_vals = [&] {
    std::vector<std::optional<double>> v;
    if (scenario.series)
      for (double x : scenario.series->values) v.emplace_back(x);
    else
      v.emplace_back(std::nullopt);
    return v;
  }();
  const std::vector<std::optional<double>> sweep_vals = [&] {
    std::vector<std::optional<double>> v;
    if (scenario.sweep)
      for (double x : scenario.sweep->values) v.emplace_back(x);
    else
      v.emplace_back(std::nullopt);
    return v;
  }();
  for (const auto& sv : series_vals)
    for (const auto& wv : sweep_vals) {
      Scenario s = scenario;
      if (sv) s = with_value(s, scenario.series->path, *sv);
      if (wv) s = with_value(s, scenario.sweep->path, *wv);
      points.push_back({sv, wv, std::move(s)});
    }

  const bool with_ref = !scenario.reference.empty();
  std::vector<PointResult> results(points.size()), refs(with_ref ? points.size() : 0);
  std::vector<std::exception_ptr> errors(points.size());
  const std::size_t workers = std::min(points.size(), opts.workers ? opts.workers : workers_from_env());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < points.size();) {
      try {
        results[i] = compute_with_context(points[i], scenario);
        if (with_ref) refs[i] = compute_with_context({points[i].series, points[i].sweep, apply_reference(points[i].scenario)}, scenario);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  RunOutput out;
  out.name = scenario.name;
  std::vector<std::string> prefix;
  if (scenario.series) prefix.push_back(scenario.series->path);
  if (scenario.sweep) prefix.push_back(scenario.sweep->path);

  std::vector<std::string> names;
  for (const auto& o : scenario.observables)
    if (o != "wigner") names.push_back(o);
  for (const auto& name : names) {
    Table t;
    t.name = name;
    const Block* first = nullptr;
    for (const auto& r : results)
      if (auto it = r.blocks.find(name); it != r.blocks.end()) {
        first = &it->second;
        break;
      }
    if (!first) continue;
    t.columns = prefix;
    t.columns.insert(t.columns.end(), first->columns.begin(), first->columns.end());
    if (with_ref)
      for (std::size_t c = first->keys; c < first->columns.size(); ++c) t.columns.push_back("reference:" + first->columns[c]);
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto it = results[i].blocks.find(name);
      if (it == results[i].blocks.end()) continue;
      const Block& b = it->second;
      const Block* rb = nullptr;
      if (with_ref)
        if (auto jt = refs[i].blocks.find(name); jt != refs[i].blocks.end()) rb = &jt->second;
      for (std::size_t k = 0; k < b.rows.size(); ++k) {
        std::vector<double> row;
        if (points[i].series) row.push_back(*points[i].series);
        if (points[i].sweep) row.push_back(*points[i].sweep);
        row.insert(row.end(), b.rows[k].begin(), b.rows[k].end());
        if (with_ref) {
          // Matched by name: the reference model may have a different layout.
          for (std::size_t c = b.keys; c < b.columns.size(); ++c) {
            double v = kNaN;
            if (rb && k < rb->rows.size()) {
              const auto jt = std::find(rb->columns.begin(), rb->columns.end(), b.columns[c]);
              if (jt != rb->columns.end()) v = rb->rows[k][static_cast<std::size_t>(jt - rb->columns.begin())];
            }
            row.push_back(v);
          }
        }
        t.rows.push_back(std::move(row));
      }
    }
    out.tables.push_back(std::move(t));
  }

  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::size_t series_idx = i / sweep_vals.size(), sweep_idx = i % sweep_vals.size();
    for (auto& w : results[i].wigner) {
      std::ostringstream stem;
      stem << "wigner" << axis_tag("s", points[i].series, series_idx) << axis_tag("p", points[i].sweep, sweep_idx)
           << "_t" << w.time;
      w.stem = stem.str();
      w.series_value = points[i].series;
      w.sweep_value = points[i].sweep;
      out.wigner.push_back(std::move(w));
    }
  }

  json meta;
  meta["name"] = scenario.name;
  meta["version"] = version_string();
  meta["scenario"] = json::parse(serialize_scenario(scenario));
  meta["derived"] = derived_json(scenario);
  meta["units"] = {{"rates", "kappa_a unless a column name says otherwise"},
                   {"mechanical_frame", "cat observables use the reduced mechanical state rotated by exp(i Omega_m t b^dag b)"}};
  json pts = json::array();
  for (std::size_t i = 0; i < points.size(); ++i) {
    json pj = results[i].info;
    if (points[i].series) pj["series_value"] = *points[i].series;
    if (points[i].sweep) pj["sweep_value"] = *points[i].sweep;
    pj["resolved"] = derived_json(points[i].scenario)["params"];
    if (with_ref) pj["reference"] = refs[i].info;
    pts.push_back(std::move(pj));
  }
  meta["points"] = std::move(pts);

  const bool check = opts.convergence_check.value_or(scenario.convergence_check);
  if (check) {
    std::vector<std::size_t> picks;
    if (scenario.solver.mode == SolveMode::evolve || points.size() <= 1) {
      picks = {0};
    } else {
      picks = {0, points.size() / 2, points.size() - 1};
      picks.erase(std::unique(picks.begin(), picks.end()), picks.end());
    }
    json conv = json::array();
    bool all_ok = true;
    for (std::size_t i : picks) {
      const Scenario fine = scaled_truncation(points[i].scenario);
      const PointResult fr = compute_with_context({points[i].series, points[i].sweep, fine}, scenario);
      json c;
      if (points[i].series) c["series_value"] = *points[i].series;
      if (points[i].sweep) c["sweep_value"] = *points[i].sweep;
      c["dims"] = {{"a", fine.dims.a}, {"d", fine.dims.d}, {"b", fine.dims.b}, {"A", fine.dims.A}};
      c["deltas"] = convergence_deltas(results[i], fr);
      for (const auto& [k, v] : c["deltas"].items()) {
        (void)k;
        if (!v["converged"].get<bool>()) all_ok = false;
      }
      conv.push_back(std::move(c));
    }
    meta["truncation_convergence"] = {{"scale", 1.25}, {"tolerance", 1e-2}, {"converged", all_ok}, {"points", conv}};
    if (!all_ok) warn("truncation convergence check above 1% for scenario '" + scenario.name + "'");
  }
  {
    std::lock_guard lock(warn_mutex);
    meta["warnings"] = warnings;
  }
  json wl = json::array();
  for (const auto& w : out.wigner) wl.push_back({{"stem", w.stem}, {"time", w.time}});
  meta["wigner_snapshots"] = wl;
  out.meta_json = meta.dump(2) + "\n";
  return out;
}

std::string to_csv(const Table& t) {
  std::string s;
  for (std::size_t i = 0; i < t.columns.size(); ++i) s += (i ? "," : "") + t.columns[i];
  s += '\n';
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + fmt(r[i]);
    s += '\n';
  }
  return s;
}

void write_outputs(const RunOutput& out, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& t : out.tables) write_atomic(dir / (t.name + ".csv"), to_csv(t));
  for (const auto& w : out.wigner) {
    std::string m;
    for (Eigen::Index i = 0; i < w.grid.values.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.grid.values.cols(); ++j) m += (j ? "," : "") + fmt(w.grid.values(i, j));
      m += '\n';
    }
    write_atomic(dir / (w.stem + ".csv"), m);
    std::string xs = "x\n", ps = "p\n";
    for (double x : w.grid.x_axis) xs += fmt(x) + "\n";
    for (double p : w.grid.p_axis) ps += fmt(p) + "\n";
    write_atomic(dir / (w.stem + "_x.csv"), xs);
    write_atomic(dir / (w.stem + "_p.csv"), ps);
  }
  write_atomic(dir / "meta.json", out.meta_json);
}

}  // namespace fanomech
