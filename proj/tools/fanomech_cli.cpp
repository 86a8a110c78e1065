#include "fanomech/errors.hpp"
#include "fanomech/presets.hpp"
#include "fanomech/runner.hpp"
#include "fanomech/scenario.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kSolver = 2;

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw fanomech::ValidationError("cannot read config file '" + path + "'");
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

fanomech::Scenario apply_overrides(fanomech::Scenario s, const std::vector<std::string>& overrides) {
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      throw fanomech::ValidationError("override '" + kv + "' must have the form key=value");
    s = fanomech::with_override(s, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return s;
}

int execute(const fanomech::Scenario& s, const std::string& out_dir, std::size_t workers) {
  fanomech::RunOptions opts;
  opts.workers = workers;
  const fanomech::RunOutput out = fanomech::run(s, opts);
  const std::filesystem::path dir = out_dir.empty() ? std::filesystem::path(s.output) : std::filesystem::path(out_dir);
  fanomech::write_outputs(out, dir);
  std::cout << "wrote " << out.tables.size() << " table(s) and " << out.wigner.size() << " Wigner snapshot(s) to "
            << dir.string() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Master-equation simulations of a Fano-mirror optomechanical system"};
  app.require_subcommand(1);
  app.set_version_flag("--version", fanomech::version_string());

  std::string config_path, out_dir, preset_name;
  std::vector<std::string> overrides;
  std::size_t workers = 0;

  auto* run_cmd = app.add_subcommand("run", "Run a scenario from a JSON config file");
  run_cmd->add_option("config", config_path, "Scenario config (JSON)")->required();
  run_cmd->add_option("--out", out_dir, "Output directory (default: the config's output field)");
  run_cmd->add_option("--override", overrides, "Set a field, e.g. params.kappa_d=2e-3")->take_all();
  run_cmd->add_option("--workers", workers, "Worker threads (default: FANOMECH_WORKERS or all cores)");

  auto* preset_cmd = app.add_subcommand("preset", "Run a built-in figure preset");
  preset_cmd->add_option("name", preset_name, "Preset name (see list-presets)")->required();
  preset_cmd->add_option("--out", out_dir, "Output directory (default: out/<name>)");
  preset_cmd->add_option("--override", overrides, "Set a field, e.g. dims.b=40")->take_all();
  preset_cmd->add_option("--workers", workers, "Worker threads (default: FANOMECH_WORKERS or all cores)");

  auto* list_cmd = app.add_subcommand("list-presets", "List built-in presets");
  bool show_json = false;
  list_cmd->add_flag("--json", show_json, "Print every preset as a config");

  auto* check_cmd = app.add_subcommand("check", "Validate a config file and report every problem");
  check_cmd->add_option("config", config_path, "Scenario config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kValidation;
  }

  try {
    if (*list_cmd) {
      for (const auto& s : fanomech::presets()) {
        if (show_json)
          std::cout << fanomech::serialize_scenario(s);
        else
          std::cout << s.name << "  (" << fanomech::to_string(s.variant) << ")\n";
      }
      return kOk;
    }
    if (*check_cmd) {
      const fanomech::ParseResult r = fanomech::parse_scenario(read_file(config_path));
      if (r.ok()) {
        std::cout << config_path << ": ok\n";
        return kOk;
      }
      for (const auto& i : r.issues) std::cerr << config_path << ": " << i.field << ": " << i.message << '\n';
      return kValidation;
    }
    if (*run_cmd) {
      const fanomech::Scenario s = apply_overrides(fanomech::load_scenario(read_file(config_path)), overrides);
      return execute(s, out_dir, workers);
    }
    if (*preset_cmd) {
      const fanomech::Scenario s = apply_overrides(fanomech::preset(preset_name), overrides);
      return execute(s, out_dir, workers);
    }
  } catch (const fanomech::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kSolver;
  }
  return kOk;
}
