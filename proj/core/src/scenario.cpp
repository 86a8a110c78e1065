#include "fanomech/scenario.hpp"

#include "fanomech/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace fanomech {

using nlohmann::json;

namespace {

template <class E>
struct EnumName {
  E value;
  const char* name;
};

constexpr EnumName<Variant> kVariants[] = {
    {Variant::three_mode, "three_mode"},
    {Variant::two_mode_effective, "two_mode_effective"},
    {Variant::position_dependent, "position_dependent"},
    {Variant::dressed_state, "dressed_state"},
    {Variant::optical_only, "optical_only"},
    {Variant::bichromatic, "bichromatic"},
};
constexpr EnumName<Frame> kFrames[] = {{Frame::lab, "lab"}, {Frame::rotating_at_drive, "rotating_at_drive"}};
constexpr EnumName<CatDriveRule> kRules[] = {{CatDriveRule::literal, "literal"},
                                             {CatDriveRule::two_phonon_balance, "two_phonon_balance"}};
constexpr EnumName<Dissipation> kDissipations[] = {
    {Dissipation::standard, "standard"},
    {Dissipation::position_dependent, "position_dependent"},
    {Dissipation::position_dependent_linearized, "position_dependent_linearized"},
    {Dissipation::dressed, "dressed"},
};
constexpr EnumName<RateSubstitution> kSubstitutions[] = {{RateSubstitution::exact, "exact"},
                                                         {RateSubstitution::linearized, "linearized"}};
constexpr EnumName<SolveMode> kModes[] = {
    {SolveMode::steady, "steady"}, {SolveMode::evolve, "evolve"}, {SolveMode::none, "none"}};
constexpr EnumName<TimeUnit> kUnits[] = {{TimeUnit::model, "model"},
                                         {TimeUnit::kappa_a, "kappa_a"},
                                         {TimeUnit::Omega_m, "Omega_m"},
                                         {TimeUnit::Gamma_tilde, "Gamma_tilde"}};

template <class E, std::size_t N>
std::string name_of(const EnumName<E> (&table)[N], E v) {
  for (const auto& e : table)
    if (e.value == v) return e.name;
  return "?";
}

template <class E, std::size_t N>
std::string choices(const EnumName<E> (&table)[N]) {
  std::string s;
  for (const auto& e : table) s += (s.empty() ? "" : ", ") + std::string(e.name);
  return s;
}

// Reads JSON into a Scenario, recording every problem instead of stopping at the first.
class Reader {
 public:
  std::vector<ValidationIssue> issues;

  void issue(const std::string& field, const std::string& msg) { issues.push_back({field, msg}); }

  void check_keys(const json& obj, const std::string& prefix, std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; }))
        issue(prefix + it.key(), "unknown field");
    }
  }

  bool object(const json& j, const std::string& field) {
    if (!j.is_object()) {
      issue(field, "must be an object");
      return false;
    }
    return true;
  }

  void number(const json& obj, const char* key, const std::string& prefix, double& out) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (!v.is_number()) {
      issue(prefix + key, "must be a number");
      return;
    }
    out = v.get<double>();
    if (!std::isfinite(out)) issue(prefix + key, "must be finite");
  }

  void optional_number(const json& obj, const char* key, const std::string& prefix, std::optional<double>& out) {
    if (!obj.contains(key) || obj.at(key).is_null()) return;
    double v = 0.0;
    number(obj, key, prefix, v);
    out = v;
  }

  void size(const json& obj, const char* key, const std::string& prefix, std::size_t& out) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      issue(prefix + key, "must be a non-negative integer");
      return;
    }
    out = v.get<std::size_t>();
  }

  void boolean(const json& obj, const char* key, const std::string& prefix, bool& out) {
    if (!obj.contains(key)) return;
    if (!obj.at(key).is_boolean()) {
      issue(prefix + key, "must be true or false");
      return;
    }
    out = obj.at(key).get<bool>();
  }

  void string(const json& obj, const char* key, const std::string& prefix, std::string& out) {
    if (!obj.contains(key)) return;
    if (!obj.at(key).is_string()) {
      issue(prefix + key, "must be a string");
      return;
    }
    out = obj.at(key).get<std::string>();
  }

  template <class E, std::size_t N>
  void enumeration(const json& obj, const char* key, const std::string& prefix, const EnumName<E> (&table)[N],
                   E& out) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    if (v.is_string())
      for (const auto& e : table)
        if (v.get<std::string>() == e.name) {
          out = e.value;
          return;
        }
    issue(prefix + key, "must be one of: " + choices(table));
  }

  void numbers(const json& v, const std::string& field, std::vector<double>& out) {
    if (!v.is_array()) {
      issue(field, "must be an array of numbers");
      return;
    }
    out.clear();
    for (const auto& x : v) {
      if (!x.is_number()) {
        issue(field, "must be an array of numbers");
        return;
      }
      out.push_back(x.get<double>());
      if (!std::isfinite(out.back())) issue(field, "values must be finite");
    }
  }

  std::optional<Axis> axis(const json& obj, const char* key) {
    if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
    const json& v = obj.at(key);
    const std::string f = key;
    if (!object(v, f)) return std::nullopt;
    check_keys(v, f + ".", {"path", "values"});
    Axis a;
    string(v, "path", f + ".", a.path);
    if (a.path.empty()) issue(f + ".path", "is required");
    if (v.contains("values"))
      numbers(v.at("values"), f + ".values", a.values);
    else
      issue(f + ".values", "is required");
    return a;
  }
};

std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json to_json(const Scenario& s) {
  const SystemParams& p = s.params;
  json j;
  j["name"] = s.name;
  j["variant"] = to_string(s.variant);
  j["params"] = {{"omega_a", p.omega_a},     {"omega_d", p.omega_d},     {"Lambda", p.Lambda},
                 {"kappa_a", p.kappa_a},     {"kappa_d", p.kappa_d},     {"gamma_a", p.gamma_a},
                 {"Omega_m", p.Omega_m},     {"gamma_m", p.gamma_m},     {"g_a_omega", p.g_a_omega},
                 {"g_d_omega", p.g_d_omega}, {"g_a_kappa", p.g_a_kappa}, {"g_d_kappa", p.g_d_kappa},
                 {"n_th_b", p.n_th_b}};
  j["couplings_over_Omega"] = {{"g_a_omega", opt(s.couplings_over_Omega.g_a_omega)},
                               {"g_d_omega", opt(s.couplings_over_Omega.g_d_omega)},
                               {"g_a_kappa", opt(s.couplings_over_Omega.g_a_kappa)},
                               {"g_d_kappa", opt(s.couplings_over_Omega.g_d_kappa)}};
  j["eta"] = opt(s.eta);
  j["epsilon_p"] = s.epsilon_p;
  j["Delta_minus_over_Omega"] = opt(s.Delta_minus_over_Omega);
  j["frame"] = to_string(s.frame);
  j["rate_substitution"] = to_string(s.rate_substitution);
  j["dissipation"] = to_string(s.dissipation);
  j["cat"] = {{"chi", s.cat.chi}, {"alpha_minus", s.cat.alpha_minus}, {"rule", to_string(s.cat.rule)}};
  j["dims"] = {{"a", s.dims.a}, {"d", s.dims.d}, {"b", s.dims.b}, {"A", s.dims.A}};
  j["solver"] = {{"mode", to_string(s.solver.mode)}, {"t_end", s.solver.t_end},
                 {"n_points", s.solver.n_points},    {"t_unit", to_string(s.solver.t_unit)},
                 {"rtol", s.solver.rtol},            {"atol", s.solver.atol},
                 {"spectrum_count", s.solver.spectrum_count}};
  j["observables"] = s.observables;
  j["wigner_times"] = s.wigner_times;
  auto axis = [](const std::optional<Axis>& a) {
    return a ? json{{"path", a->path}, {"values", a->values}} : json(nullptr);
  };
  j["series"] = axis(s.series);
  j["sweep"] = axis(s.sweep);
  json ref = json::object();
  for (const auto& [path, value] : s.reference) ref[path] = json::parse(value);
  j["reference"] = ref;
  j["convergence_check"] = s.convergence_check;
  j["output"] = s.output;
  return j;
}

ParseResult from_json(const json& j) {
  Reader r;
  ParseResult out;
  if (!j.is_object()) {
    out.issues.push_back({"<root>", "config must be a JSON object"});
    return out;
  }
  r.check_keys(j, "", {"name", "variant", "params", "couplings_over_Omega", "eta", "epsilon_p",
                       "Delta_minus_over_Omega", "frame", "rate_substitution", "dissipation", "cat", "dims",
                       "solver", "observables", "wigner_times", "series", "sweep", "reference", "convergence_check",
                       "output"});
  Scenario s;
  r.string(j, "name", "", s.name);
  if (!j.contains("variant"))
    r.issue("variant", "is required (one of: " + choices(kVariants) + ")");
  else
    r.enumeration(j, "variant", "", kVariants, s.variant);

  if (j.contains("params") && r.object(j.at("params"), "params")) {
    const json& p = j.at("params");
    r.check_keys(p, "params.", {"omega_a", "omega_d", "Lambda", "kappa_a", "kappa_d", "gamma_a", "Omega_m",
                                "gamma_m", "g_a_omega", "g_d_omega", "g_a_kappa", "g_d_kappa", "n_th_b"});
    SystemParams& q = s.params;
    r.number(p, "omega_a", "params.", q.omega_a);
    r.number(p, "omega_d", "params.", q.omega_d);
    r.number(p, "Lambda", "params.", q.Lambda);
    r.number(p, "kappa_a", "params.", q.kappa_a);
    r.number(p, "kappa_d", "params.", q.kappa_d);
    r.number(p, "gamma_a", "params.", q.gamma_a);
    r.number(p, "Omega_m", "params.", q.Omega_m);
    r.number(p, "gamma_m", "params.", q.gamma_m);
    r.number(p, "g_a_omega", "params.", q.g_a_omega);
    r.number(p, "g_d_omega", "params.", q.g_d_omega);
    r.number(p, "g_a_kappa", "params.", q.g_a_kappa);
    r.number(p, "g_d_kappa", "params.", q.g_d_kappa);
    r.number(p, "n_th_b", "params.", q.n_th_b);
  }
  if (j.contains("couplings_over_Omega") && r.object(j.at("couplings_over_Omega"), "couplings_over_Omega")) {
    const json& c = j.at("couplings_over_Omega");
    const std::string pre = "couplings_over_Omega.";
    r.check_keys(c, pre, {"g_a_omega", "g_d_omega", "g_a_kappa", "g_d_kappa"});
    r.optional_number(c, "g_a_omega", pre, s.couplings_over_Omega.g_a_omega);
    r.optional_number(c, "g_d_omega", pre, s.couplings_over_Omega.g_d_omega);
    r.optional_number(c, "g_a_kappa", pre, s.couplings_over_Omega.g_a_kappa);
    r.optional_number(c, "g_d_kappa", pre, s.couplings_over_Omega.g_d_kappa);
  }
  r.optional_number(j, "eta", "", s.eta);
  r.number(j, "epsilon_p", "", s.epsilon_p);
  r.optional_number(j, "Delta_minus_over_Omega", "", s.Delta_minus_over_Omega);
  r.enumeration(j, "frame", "", kFrames, s.frame);
  r.enumeration(j, "rate_substitution", "", kSubstitutions, s.rate_substitution);
  r.enumeration(j, "dissipation", "", kDissipations, s.dissipation);
  if (j.contains("cat") && r.object(j.at("cat"), "cat")) {
    const json& c = j.at("cat");
    r.check_keys(c, "cat.", {"chi", "alpha_minus", "rule"});
    r.number(c, "chi", "cat.", s.cat.chi);
    r.number(c, "alpha_minus", "cat.", s.cat.alpha_minus);
    r.enumeration(c, "rule", "cat.", kRules, s.cat.rule);
  }
  if (j.contains("dims") && r.object(j.at("dims"), "dims")) {
    const json& d = j.at("dims");
    r.check_keys(d, "dims.", {"a", "d", "b", "A"});
    r.size(d, "a", "dims.", s.dims.a);
    r.size(d, "d", "dims.", s.dims.d);
    r.size(d, "b", "dims.", s.dims.b);
    r.size(d, "A", "dims.", s.dims.A);
  }
  if (j.contains("solver") && r.object(j.at("solver"), "solver")) {
    const json& v = j.at("solver");
    r.check_keys(v, "solver.", {"mode", "t_end", "n_points", "t_unit", "rtol", "atol", "spectrum_count"});
    r.enumeration(v, "mode", "solver.", kModes, s.solver.mode);
    r.number(v, "t_end", "solver.", s.solver.t_end);
    r.size(v, "n_points", "solver.", s.solver.n_points);
    r.enumeration(v, "t_unit", "solver.", kUnits, s.solver.t_unit);
    r.number(v, "rtol", "solver.", s.solver.rtol);
    r.number(v, "atol", "solver.", s.solver.atol);
    r.size(v, "spectrum_count", "solver.", s.solver.spectrum_count);
  }
  if (j.contains("observables")) {
    const json& o = j.at("observables");
    if (!o.is_array()) {
      r.issue("observables", "must be an array of strings");
    } else {
      for (const auto& x : o) {
        if (!x.is_string()) {
          r.issue("observables", "must be an array of strings");
          break;
        }
        s.observables.push_back(x.get<std::string>());
      }
    }
  }
  if (j.contains("wigner_times")) r.numbers(j.at("wigner_times"), "wigner_times", s.wigner_times);
  s.series = r.axis(j, "series");
  s.sweep = r.axis(j, "sweep");
  if (j.contains("reference") && !j.at("reference").is_null() && r.object(j.at("reference"), "reference"))
    for (auto it = j.at("reference").begin(); it != j.at("reference").end(); ++it)
      s.reference.emplace_back(it.key(), it.value().dump());
  r.boolean(j, "convergence_check", "", s.convergence_check);
  r.string(j, "output", "", s.output);

  out.issues = std::move(r.issues);
  for (auto& i : validate_scenario(s)) out.issues.push_back(std::move(i));
  if (out.issues.empty()) out.scenario = std::move(s);
  return out;
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::stringstream ss(path);
  std::string part;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  return parts;
}

[[noreturn]] void throw_issues(const std::vector<ValidationIssue>& issues) {
  std::string msg = "invalid scenario:";
  for (const auto& i : issues) msg += "\n  " + i.field + ": " + i.message;
  throw ValidationError(msg);
}

}  // namespace

std::string to_string(Variant v) { return name_of(kVariants, v); }
std::string to_string(Frame f) { return name_of(kFrames, f); }
std::string to_string(CatDriveRule r) { return name_of(kRules, r); }
std::string to_string(Dissipation d) { return name_of(kDissipations, d); }
std::string to_string(RateSubstitution r) { return name_of(kSubstitutions, r); }
std::string to_string(SolveMode m) { return name_of(kModes, m); }
std::string to_string(TimeUnit u) { return name_of(kUnits, u); }

const std::vector<std::string>& known_observables() {
  static const std::vector<std::string> names = {
      "effective_params", "spectrum",  "occupations",           "normal_mode_occupations",
      "g2",               "fidelity",  "wigner_log_negativity", "odd_population",
      "wigner"};
  return names;
}

std::vector<ValidationIssue> validate_scenario(const Scenario& s) {
  std::vector<ValidationIssue> out;
  auto add = [&](const std::string& f, const std::string& m) { out.push_back({f, m}); };
  for (const auto& v : s.params.violations()) {
    const auto colon = v.find(':');
    if (colon == std::string::npos)
      add("params", v);
    else
      add(v.substr(0, colon), v.substr(colon + 2));
  }
  if (s.name.empty()) add("name", "must be a non-empty string");
  if (s.eta && s.couplings_over_Omega.g_d_omega)
    add("eta", "conflicts with couplings_over_Omega.g_d_omega; set only one");
  if (s.epsilon_p < 0.0) add("epsilon_p", "epsilon_p >= 0");
  const bool optical = s.variant == Variant::optical_only || s.variant == Variant::three_mode;
  if (optical && (s.dims.a < 2 || s.dims.d < 2)) add("dims", "a >= 2 and d >= 2 for optical modes");
  if (s.variant != Variant::optical_only && s.dims.b < 2) add("dims.b", "b >= 2");
  if (!optical && s.dims.A < 2) add("dims.A", "A >= 2");
  if (s.variant == Variant::bichromatic) {
    if (s.solver.mode != SolveMode::evolve) add("solver.mode", "bichromatic models are time dependent; use evolve");
    if (!(s.cat.alpha_minus > 0.0)) add("cat.alpha_minus", "alpha_minus > 0");
  } else if (s.solver.t_unit == TimeUnit::Gamma_tilde) {
    add("solver.t_unit", "Gamma_tilde is defined only for the bichromatic variant");
  }
  if (s.frame == Frame::lab && s.solver.mode != SolveMode::none)
    add("frame", "lab-frame models are time dependent and too stiff to evolve; use rotating_at_drive");
  if (s.frame == Frame::lab && !optical) add("frame", "lab frame is available only for optical_only and three_mode");
  if (s.solver.mode == SolveMode::evolve) {
    if (!(s.solver.t_end > 0.0)) add("solver.t_end", "t_end > 0 for evolve");
    if (s.solver.n_points < 2) add("solver.n_points", "n_points >= 2");
  }
  if (!(s.solver.rtol > 0.0)) add("solver.rtol", "rtol > 0");
  if (!(s.solver.atol > 0.0)) add("solver.atol", "atol > 0");
  for (const auto& o : s.observables)
    if (std::find(known_observables().begin(), known_observables().end(), o) == known_observables().end())
      add("observables", "unknown observable '" + o + "'");
  const std::set<std::string> uniq(s.observables.begin(), s.observables.end());
  if (uniq.size() != s.observables.size()) add("observables", "duplicate entries");
  auto needs = [&](const char* obs, bool ok, const char* why) {
    if (uniq.count(obs) && !ok) add("observables", std::string(obs) + ": " + why);
  };
  const bool two_mode = !optical;
  needs("g2", two_mode || s.variant == Variant::three_mode, "requires an A_- mode");
  needs("normal_mode_occupations", optical, "requires the a and d modes");
  const bool cat = s.variant == Variant::bichromatic;
  needs("fidelity", cat, "requires the bichromatic variant");
  needs("wigner_log_negativity", cat, "requires the bichromatic variant");
  needs("odd_population", cat, "requires the bichromatic variant");
  needs("wigner", cat, "requires the bichromatic variant");
  needs("spectrum", s.variant != Variant::bichromatic, "requires a static model");
  for (double t : s.wigner_times)
    if (t < 0.0 || t > s.solver.t_end) add("wigner_times", "values must lie in [0, solver.t_end]");
  for (const auto* ax : {&s.series, &s.sweep}) {
    if (!*ax) continue;
    const std::string f = ax == &s.series ? "series" : "sweep";
    if ((*ax)->values.empty()) add(f + ".values", "must not be empty");
    for (double v : (*ax)->values)
      if (!std::isfinite(v)) add(f + ".values", "values must be finite");
    const auto parts = split_path((*ax)->path);
    const std::set<std::string> roots = {"params", "couplings_over_Omega", "eta", "epsilon_p",
                                         "Delta_minus_over_Omega", "cat", "dims", "solver"};
    if (parts.empty() || !roots.count(parts.front())) add(f + ".path", "unsupported path '" + (*ax)->path + "'");
  }
  return out;
}

ParseResult parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    ParseResult r;
    std::string what = e.what();
    const auto pos = what.find("; ");
    r.issues.push_back({"<parse>", line_col(text, e.byte) + ": " + (pos == std::string::npos ? what : what.substr(pos + 2))});
    return r;
  }
  return from_json(j);
}

Scenario load_scenario(const std::string& text) {
  ParseResult r = parse_scenario(text);
  if (!r.ok()) throw_issues(r.issues);
  return *r.scenario;
}

std::string serialize_scenario(const Scenario& s) { return to_json(s).dump(2) + "\n"; }

Scenario with_override(const Scenario& s, const std::string& path, const std::string& json_value) {
  json value;
  try {
    value = json::parse(json_value);
  } catch (const json::parse_error&) {
    value = json_value;  // bare strings such as enum names
  }
  json j = to_json(s);
  json* node = &j;
  const auto parts = split_path(path);
  if (parts.empty()) throw ValidationError("override path is empty");
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->is_object() || !node->contains(parts[i]))
      throw ValidationError("override path '" + path + "' does not name a scenario field");
    node = &(*node)[parts[i]];
    if (node->is_null()) *node = json::object();
  }
  if (!node->is_object() || !node->contains(parts.back()))
    throw ValidationError("override path '" + path + "' does not name a scenario field");
  (*node)[parts.back()] = value;
  ParseResult r = from_json(j);
  if (!r.ok()) throw_issues(r.issues);
  return *r.scenario;
}

Scenario with_value(const Scenario& s, const std::string& path, double value) {
  const bool integral = path.rfind("dims.", 0) == 0 || path == "solver.n_points" || path == "solver.spectrum_count";
  std::ostringstream os;
  if (integral)
    os << static_cast<long long>(std::llround(value));
  else
    os << json(value).dump();
  return with_override(s, path, os.str());
}

SystemParams resolved_params(const Scenario& s) {
  SystemParams p = s.params;
  const auto& c = s.couplings_over_Omega;
  if (c.g_a_omega) p.g_a_omega = *c.g_a_omega * p.Omega_m;
  if (c.g_d_omega) p.g_d_omega = *c.g_d_omega * p.Omega_m;
  if (c.g_a_kappa) p.g_a_kappa = *c.g_a_kappa * p.Omega_m;
  if (c.g_d_kappa) p.g_d_kappa = *c.g_d_kappa * p.Omega_m;
  if (s.eta) p = with_eta(p, *s.eta);
  return p;
}

double resolved_Delta_minus(const Scenario& s) {
  const SystemParams p = resolved_params(s);
  if (s.Delta_minus_over_Omega) return *s.Delta_minus_over_Omega * p.Omega_m;
  const NormalModeParams nm = normal_mode_params(p);
  return nm.G_minus * nm.G_minus / p.Omega_m;
}

}  // namespace fanomech
