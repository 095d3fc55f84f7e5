#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "thermofield/grid.hpp"
#include "thermofield/metrics.hpp"
#include "thermofield/pod.hpp"
#include "thermofield/sensing.hpp"
#include "thermofield/sparse.hpp"
#include "thermofield/synth.hpp"

namespace thermofield {

enum class Method { gappy_pod, sparse_raw, sparse_pod, robust_sparse };

std::string method_name(Method method);
Method method_from_name(const std::string& name);
bool method_uses_pod_basis(Method method);

/// Synthetic data source: a seeded library drawn around base parameters,
/// plus per-(condition, trial) test fields with the intake depth forced to
/// the condition value.
struct SyntheticSource {
  std::optional<std::string> grid_spec_path; // default reservoir when unset
  StratificationParams base;
  LibraryVariation variation;
  int train_snapshots = 50;
};

/// File data source: one snapshot CSV split into train and test rows.
/// test_indices pairs up with the config's conditions list.
struct FileSource {
  std::string grid_spec;
  std::string snapshots_csv;
  std::vector<int> train_indices;
  std::vector<int> test_indices;
};

struct EpsilonPolicy {
  enum class Mode { automatic, fixed };
  Mode mode = Mode::automatic;
  double scale = 1.0; // automatic: scale * sigma * sqrt(p)
  double value = 0.0; // fixed
};

struct ExperimentConfig {
  bool synthetic = true;
  SyntheticSource synth;
  FileSource files;
  std::vector<Method> methods;
  std::vector<int> k_list;
  std::vector<int> p_list;
  Placement placement = Placement::random_points;
  std::vector<double> conditions; // intake depths in meters
  int trials = 20;
  std::uint64_t base_seed = 0;
  NoiseModel noise; // seed field ignored; per-trial seeds are derived
  EpsilonPolicy epsilon;
  bool rescale = false;
  SolverOptions solver;
  std::string output_dir = "out";
};

/// Strict JSON config reader; unknown keys anywhere are rejected.
ExperimentConfig load_config(const std::string& path);

/// Config sanity checks shared by load_config and the run entry points.
void validate_config(const ExperimentConfig& config);

/// Canonical JSON dump of a config (stable key order, normalized values).
std::string canonical_config(const ExperimentConfig& config);

/// FNV-1a 64-bit hash of the canonical config, as fixed-width hex.
std::string config_hash(const ExperimentConfig& config);

/// One sweep cell result. Skipped cells keep the reason instead of errors.
struct ErrorRecord {
  Method method = Method::gappy_pod;
  int k = 0;
  int p = 0;
  double condition = 0.0;
  int trial = 0;
  std::uint64_t seed = 0; // derived noise-stream seed for this cell
  Placement placement = Placement::random_points;
  bool ok = false;
  std::string skip_reason;
  double error1 = 0.0;
  double error2 = 0.0;
  double residual_norm = 0.0;
  double ridge_mu = 0.0;     // gappy
  double lambda = 0.0;       // sparse penalty actually used
  double epsilon_used = 0.0; // sparse tolerance actually used
  long iterations = 0;
  bool converged = true;
};

struct AggregateRecord {
  Method method = Method::gappy_pod;
  int k = 0;
  int p = 0;
  double condition = 0.0;
  Placement placement = Placement::random_points;
  double mean_error1 = 0.0;
  double mean_error2 = 0.0;
  int count = 0;
};

/// Cross-placement spread: |err_surface - err_vertical| / min as percent.
struct SpreadRecord {
  Method method = Method::gappy_pod;
  int k = 0;
  int p = 0;
  double condition = 0.0;
  double err_surface = 0.0;
  double err_vertical = 0.0;
  double spread_pct = 0.0;
};

/// Trial-averaged error map and its depth-band stats for one cell.
struct MapRecord {
  Method method = Method::gappy_pod;
  int k = 0;
  int p = 0;
  double condition = 0.0;
  Placement placement = Placement::random_points;
  Eigen::VectorXd mean_abs_error;
  std::vector<DepthBandStats> bands;
  Eigen::VectorXd example_reconstruction; // trial 0
};

struct ExperimentReport {
  ExperimentConfig config;
  GridPtr grid;
  bool fixed_mode = false;
  int library_r = 0;
  double library_energy = 0.0;
  std::uint64_t library_seed = 0;
  std::vector<ErrorRecord> records;
  std::vector<AggregateRecord> aggregates;
  std::vector<SpreadRecord> spreads;        // fixed runs only
  std::vector<MapRecord> maps;              // fixed runs only
  std::vector<Snapshot> condition_truths;   // trial-0 truth per condition
};

/// Sweep over methods x k_list x p_list x conditions x trials with the
/// configured placement. Infeasible cells are recorded as skipped.
ExperimentReport run_sweep(const ExperimentConfig& config);

/// Fixed-sensor study: runs both line placements, adds per-cell error
/// maps, depth-band stats and the cross-placement spread statistic.
/// Requires at least one POD method and one sparse method.
ExperimentReport run_fixed_sensors(const ExperimentConfig& config);

enum class ExportFormat { csv, json, all };

/// Writes report files under `dir` (created if needed). Identical
/// (config, base_seed) runs produce byte-identical files.
void export_report(const ExperimentReport& report, const std::string& dir,
                   ExportFormat format = ExportFormat::all);

/// Data tables parsed back from an exported report.json.
struct LoadedReport {
  std::vector<ErrorRecord> records;
  std::vector<AggregateRecord> aggregates;
  std::vector<SpreadRecord> spreads;
};

LoadedReport load_report(const std::string& json_path);

/// Writes the synthetic library of `config` as grid.json + snapshots.csv.
void generate_dataset(const ExperimentConfig& config, const std::string& dir);

/// Human-readable validation summary; throws on any config/data problem.
std::string validate_run_inputs(const ExperimentConfig& config);

} // namespace thermofield
