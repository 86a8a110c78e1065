#pragma once

// Executes scenarios and writes plot-ready CSV files plus meta.json.

#include "fanomech/observables.hpp"
#include "fanomech/scenario.hpp"
#include "fanomech/solver.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace fanomech {

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  /// Index of a column by exact name; throws LayoutError if missing.
  std::size_t column(const std::string& name) const;
  std::vector<double> column_values(const std::string& name) const;
};

struct WignerSnapshot {
  /// File stem, e.g. "wigner_s0_p0_t2".
  std::string stem;
  std::optional<double> series_value, sweep_value;
  double time = 0.0;
  WignerGrid grid;
};

struct RunOptions {
  /// 0: FANOMECH_WORKERS, else the hardware concurrency.
  std::size_t workers = 0;
  std::optional<bool> convergence_check;
};

struct RunOutput {
  std::string name;
  std::vector<Table> tables;
  std::vector<WignerSnapshot> wigner;
  std::string meta_json;

  const Table& table(const std::string& name) const;
};

/// Builds the master-equation model of a scenario (no sweep applied).
LindbladModel build_scenario_model(const Scenario& s);

RunOutput run(const Scenario& s, const RunOptions& opts = {});

/// Writes <dir>/meta.json, <dir>/<observable>.csv and Wigner matrices with
/// _x.csv / _p.csv axis sidecars. Each file is written to a temporary name
/// and renamed into place.
void write_outputs(const RunOutput& out, const std::filesystem::path& dir);

std::string to_csv(const Table& t);

std::size_t workers_from_env();

/// Version string recorded in meta.json.
std::string version_string();

}  // namespace fanomech
