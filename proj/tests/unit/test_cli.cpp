#include "fanomech/errors.hpp"
#include "fanomech/presets.hpp"
#include "fanomech/runner.hpp"
#include "fanomech/scenario.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace fanomech;
namespace fs = std::filesystem;

namespace {

bool has_issue(const ParseResult& r, const std::string& field, const std::string& text) {
  for (const auto& i : r.issues)
    if (i.field == field && (i.message.find(text) != std::string::npos)) return true;
  return false;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fanomech_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Scenario small_blockade() {
  Scenario s = preset("fig3a");
  s.series.reset();
  s.sweep = Axis{"Delta_minus_over_Omega", {0.0, 0.25, 0.5}};
  s.dims.A = 3;
  s.dims.b = 6;
  s.convergence_check = false;
  return s;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FANOMECH_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("preset catalogue") {
  const std::vector<std::string> expect{"fig2a", "fig2b", "fig2c", "fig2d", "fig3a", "fig3b",
                                        "fig3c", "fig3d", "fig4", "fig5a", "fig5b", "figB1a",
                                        "figB1b", "figC1a", "figC1b", "figC1c", "figC1d"};
  auto names = preset_names();
  std::sort(names.begin(), names.end());
  auto sorted = expect;
  std::sort(sorted.begin(), sorted.end());
  CHECK(names == sorted);
  CHECK_THROWS_AS(preset("fig9"), ValidationError);

  const auto& c = preset("fig3c");
  CHECK(c.params.Omega_m == 2e-6);
  REQUIRE(c.series.has_value());
  CHECK(c.series->path == "params.n_th_b");
  CHECK(preset("figC1d").params.gamma_m == 8e-7);
  CHECK(preset("fig5a").couplings_over_Omega.g_a_kappa == 0.25);
  CHECK(preset("fig5a").couplings_over_Omega.g_d_kappa == 0.92);
  const auto& f2 = preset("fig2a");
  CHECK(f2.params.gamma_a == 1e-4);
  CHECK(f2.params.omega_a == 200.0);
  CHECK(f2.params.omega_d == 195.0);
  CHECK(f2.params.Lambda == 0.2);
  CHECK(preset("fig4").cat.chi == 1.54);
  CHECK(preset("fig4").cat.alpha_minus == doctest::Approx(std::sqrt(0.1)));
}

TEST_CASE("every preset validates and round-trips") {
  for (const auto& s : presets()) {
    CAPTURE(s.name);
    CHECK(validate_scenario(s).empty());
    const auto text = serialize_scenario(s);
    const auto parsed = parse_scenario(text);
    REQUIRE(parsed.ok());
    CHECK(*parsed.scenario == s);
    CHECK(serialize_scenario(*parsed.scenario) == text);
  }
}

TEST_CASE("validation reports every problem") {
  auto j = nlohmann::json::parse(serialize_scenario(preset("fig3a")));
  j["params"]["kappa_d"] = -1.0;
  j["params"]["Omega_m"] = -2.0;
  j["dims"]["b"] = 1;
  const auto r = parse_scenario(j.dump());
  CHECK(!r.ok());
  CHECK(has_issue(r, "params.kappa_d", "kappa_d >= 0"));
  CHECK(has_issue(r, "params.Omega_m", "Omega_m > 0"));
  CHECK(r.issues.size() >= 3);
  CHECK_THROWS_AS(load_scenario(j.dump()), ValidationError);

  auto missing = nlohmann::json::parse(serialize_scenario(preset("fig3a")));
  missing.erase("variant");
  CHECK(has_issue(parse_scenario(missing.dump()), "variant", ""));

  auto unknown = nlohmann::json::parse(serialize_scenario(preset("fig3a")));
  unknown["params"]["kapa_d"] = 1.0;
  unknown["variant"] = "four_mode";
  const auto u = parse_scenario(unknown.dump());
  CHECK(has_issue(u, "params.kapa_d", ""));
  CHECK(has_issue(u, "variant", ""));

  const auto bad = parse_scenario("{\n  \"name\": \"x\",\n  \"variant\": }\n");
  REQUIRE(bad.issues.size() == 1);
  CHECK(bad.issues[0].message.find("line 3") != std::string::npos);
  CHECK(bad.issues[0].message.find("column") != std::string::npos);
}

TEST_CASE("cross-field checks") {
  Scenario s = preset("fig4");
  s.solver.mode = SolveMode::steady;
  CHECK(!validate_scenario(s).empty());

  s = preset("fig3a");
  s.observables.push_back("fidelity");
  CHECK(!validate_scenario(s).empty());

  s = preset("fig3c");
  s.solver.t_end = 0.0;
  CHECK(!validate_scenario(s).empty());

  s = preset("fig3a");
  s.couplings_over_Omega.g_d_omega = -0.3;
  CHECK(!validate_scenario(s).empty());

  s = preset("fig3a");
  s.sweep = Axis{"params.kappa_d", {1e-3, std::nan("")}};
  CHECK(!validate_scenario(s).empty());

  s = preset("fig3a");
  s.sweep = Axis{"name", {1.0}};
  CHECK(!validate_scenario(s).empty());
}

TEST_CASE("overrides") {
  const Scenario s = preset("fig3a");
  CHECK(with_override(s, "dims.b", "25").dims.b == 25);
  CHECK(with_override(s, "variant", "three_mode").variant == Variant::three_mode);
  CHECK(with_override(s, "variant", "\"dressed_state\"").variant == Variant::dressed_state);
  CHECK(!with_override(s, "series", "null").series.has_value());
  CHECK(with_value(s, "params.n_th_b", 3.0).params.n_th_b == 3.0);
  CHECK(with_value(s, "dims.b", 17.0).dims.b == 17);
  CHECK_THROWS_AS(with_override(s, "params.kappa_d", "-1"), ValidationError);
  CHECK_THROWS_AS(with_override(s, "params.nope", "1"), ValidationError);
}

TEST_CASE("resolved parameters") {
  const Scenario s = preset("fig3a");
  const auto p = resolved_params(s);
  const auto nm = normal_mode_params(p);
  CHECK(nm.eta == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p.g_a_omega == doctest::Approx(0.25 * 2e-6));
  Scenario t = s;
  t.Delta_minus_over_Omega.reset();
  CHECK(resolved_Delta_minus(t) == doctest::Approx(nm.G_minus * nm.G_minus / p.Omega_m));
  CHECK(resolved_Delta_minus(s) == doctest::Approx(0.25 * 2e-6));
}

TEST_CASE("effective-parameter sweep output") {
  const auto out = run(preset("fig2a"), {1, std::nullopt});
  const Table& t = out.table("effective_params");
  CHECK(t.rows.size() == 61);
  CHECK(t.columns.front() == "params.kappa_d");
  const auto kd = t.column_values("params.kappa_d");
  CHECK(kd.front() == doctest::Approx(1e-3));
  CHECK(kd.back() == doctest::Approx(1e-2));
  const auto me = t.column_values("kappa_eff_minus/kappa_a");
  const auto lg = t.column_values("kappa_eff_minus_langevin/kappa_a");
  for (std::size_t k = 0; k < me.size(); ++k) CHECK(std::abs(me[k] - lg[k]) < 0.05 * lg[k]);
  CHECK_THROWS_AS(out.table("nope"), LayoutError);
  CHECK_THROWS_AS(t.column("nope"), LayoutError);
}

TEST_CASE("steady sweep is deterministic across worker counts and writes files") {
  const Scenario s = small_blockade();
  const auto one = run(s, {1, std::nullopt});
  const auto two = run(s, {2, std::nullopt});
  REQUIRE(one.tables.size() == two.tables.size());
  for (std::size_t k = 0; k < one.tables.size(); ++k) CHECK(to_csv(one.tables[k]) == to_csv(two.tables[k]));
  const auto g2 = one.table("g2").column_values("g2");
  REQUIRE(g2.size() == 3);
  for (double v : g2) CHECK(std::isfinite(v));

  const fs::path dir = scratch("blockade");
  write_outputs(one, dir);
  CHECK(fs::exists(dir / "g2.csv"));
  CHECK(fs::exists(dir / "occupations.csv"));
  const std::string csv = read_file(dir / "g2.csv");
  CHECK(csv.rfind("Delta_minus_over_Omega,g2\n", 0) == 0);
  CHECK(csv.find('\r') == std::string::npos);
  const auto meta = nlohmann::json::parse(read_file(dir / "meta.json"));
  CHECK(meta.at("name") == "fig3a");
  CHECK(meta.contains("version"));
  CHECK(meta.at("derived").contains("normal_mode"));
  CHECK(meta.at("derived").contains("langevin"));
  for (const auto& e : fs::directory_iterator(dir)) CHECK(e.path().extension() != ".tmp");
  fs::remove_all(dir);
}

TEST_CASE("occupation columns follow the layout order") {
  Scenario s = preset("fig2d");
  s.sweep.reset();
  s.epsilon_p = 0.0;
  s.params.n_th_b = 1.0;
  s.dims = {2, 2, 10, 4};
  s.convergence_check = false;
  const auto out = run(s, {1, std::nullopt});
  const Table& t = out.table("occupations");
  CHECK(t.columns == std::vector<std::string>{"n_a", "n_d", "n_b", "reference:n_a", "reference:n_d", "reference:n_b"});
  CHECK(t.column_values("n_b")[0] > 0.9);
  CHECK(std::abs(t.column_values("n_a")[0]) < 1e-12);
  CHECK(std::abs(t.column_values("n_d")[0]) < 1e-12);
  // The two-mode reference has no a or d mode; its b column is matched by name.
  CHECK(std::isnan(t.column_values("reference:n_a")[0]));
  CHECK(std::isnan(t.column_values("reference:n_d")[0]));
  CHECK(t.column_values("reference:n_b")[0] == doctest::Approx(t.column_values("n_b")[0]).epsilon(1e-6));
}

TEST_CASE("truncation convergence is recorded") {
  Scenario s = small_blockade();
  s.sweep = Axis{"Delta_minus_over_Omega", {0.25}};
  s.convergence_check = true;
  const auto out = run(s, {1, std::nullopt});
  const auto meta = nlohmann::json::parse(out.meta_json);
  REQUIRE(meta.contains("truncation_convergence"));
  CHECK(!meta.at("truncation_convergence").empty());
}

TEST_CASE("worker count from the environment") {
  setenv("FANOMECH_WORKERS", "3", 1);
  CHECK(workers_from_env() == 3);
  unsetenv("FANOMECH_WORKERS");
  CHECK(workers_from_env() >= 1);
}

TEST_CASE("command-line exit codes") {
  const fs::path dir = scratch("cli");
  CHECK(run_cli("list-presets") == 0);
  {
    std::ofstream(dir / "good.json") << serialize_scenario(preset("fig2a"));
    auto j = nlohmann::json::parse(serialize_scenario(preset("fig2a")));
    j["params"]["kappa_d"] = -1.0;
    std::ofstream(dir / "bad.json") << j.dump(2);
    std::ofstream(dir / "broken.json") << "{ \"name\": ";
  }
  CHECK(run_cli("check " + (dir / "good.json").string()) == 0);
  CHECK(run_cli("check " + (dir / "bad.json").string()) == 1);
  CHECK(run_cli("check " + (dir / "broken.json").string()) == 1);
  CHECK(run_cli("preset fig9") == 1);
  CHECK(run_cli("preset figB1b --out " + (dir / "b1").string()) == 0);
  CHECK(fs::exists(dir / "b1" / "effective_params.csv"));
  CHECK(run_cli("run " + (dir / "good.json").string() + " --out " + (dir / "r").string() +
                " --override params.kappa_d=2e-3 sweep=null") == 0);
  fs::remove_all(dir);
}
