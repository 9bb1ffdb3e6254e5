#pragma once

#include "polyrom/basis.hpp"
#include "polyrom/ecsw.hpp"
#include "polyrom/fomsolve.hpp"
#include "polyrom/models.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace polyrom {

struct ExperimentConfig {
  std::string name = "custom";
  std::string model = "burgers";  // "burgers" or "heat-cubic"
  GridSpec grid;
  std::string scheme = "backward-euler";
  double dt = 1e-3;
  Index n_steps = 500;      // online horizon
  Index train_steps = 500;  // training horizon
  std::vector<ParamVector> training_mus;
  std::vector<ParamVector> test_mus;
  std::vector<double> eps_pod{1e-1, 1e-2, 1e-3, 1e-4};
  std::vector<std::string> methods;
  std::vector<double> eps_ecsw{1e-5, 1e-7, 1e-9};
  std::size_t ecsw_snapshots = 5000;
  std::uint64_t seed = 2024;
  int repeats = 10;
  bool include_initial = false;  // put x_0 columns into the POD snapshots
  NewtonSettings newton;
  std::string output_dir = "results";
  std::string cache_dir;  // empty: <output_dir>/cache

  void validate() const;
};

/// fom, galerkin-rom, lspg-rom, hrf-g, hrf-lspg, ecsw-g, ecsw-lspg and, for the heat
/// model, galerkin-rom-lifted, lspg-rom-lifted, hrf-g-lifted, hrf-lspg-lifted.
const std::vector<std::string>& known_methods();

/// "burgers-paper" or "heat-paper".
ExperimentConfig builtin_config(const std::string& name);

ExperimentConfig parse_config(const std::string& json_text);
std::string config_to_text(const ExperimentConfig& cfg);
/// A built-in name or a path to a JSON config file.
ExperimentConfig load_config(const std::string& name_or_path);

struct MetricsRow {
  std::string model;
  std::string method;
  ParamVector mu;
  std::optional<double> eps_pod;
  std::optional<double> eps_ecsw;
  Index n = 0;
  std::vector<Index> block_modes;
  std::optional<double> state_error;
  std::optional<double> projection_error;
  std::optional<double> rom_eval_error;
  std::optional<double> mean_time;
  std::vector<double> times;
  std::optional<double> speedup;
  std::optional<Index> samples;
  std::optional<double> training_ratio;
  std::string status = "converged";  // "converged", "failed(<step>)" or "error(<what>)"

  bool converged() const { return status == "converged"; }
  bool errored() const { return status.rfind("error", 0) == 0; }
  bool operator==(const MetricsRow&) const = default;
};

struct BasisSummary {
  std::string variant;  // "state" or "lifted"
  double eps_pod = 0.0;
  Index n = 0;
  std::vector<Index> block_modes;

  bool operator==(const BasisSummary&) const = default;
};

struct MetricsReport {
  std::string config_name;
  std::vector<MetricsRow> rows;
  std::vector<BasisSummary> bases;

  /// First row matching; eps values compared exactly.
  const MetricsRow* find(const std::string& method, const ParamVector& mu,
                         std::optional<double> eps_pod = std::nullopt,
                         std::optional<double> eps_ecsw = std::nullopt) const;
  const BasisSummary* basis(const std::string& variant, double eps_pod) const;
  bool has_errors() const;
};

/// Training FOM runs (cached on disk), bases per eps_pod, every method per test mu.
/// Per-cell failures become row statuses; the sweep never aborts on them.
MetricsReport run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);

std::string report_csv(const MetricsReport& report);
MetricsReport parse_report_csv(const std::string& text);

/// results.csv, summary.json and the figure series files inside `dir`.
void emit_results(const MetricsReport& report, const std::filesystem::path& dir);

/// Runs (or loads from `cache_dir`) one FOM trajectory.
Trajectory cached_fom_run(const PolynomialSystem& sys, const MultistepScheme& scheme,
                          const NewtonSettings& settings, const ParamVector& mu, Index n_steps,
                          const std::filesystem::path& cache_dir, const GridSpec& grid);

}  // namespace polyrom
