#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "thermofield/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

thermofield::ExportFormat parse_format(const std::string& name) {
  if (name == "csv") return thermofield::ExportFormat::csv;
  if (name == "json") return thermofield::ExportFormat::json;
  if (name == "all") return thermofield::ExportFormat::all;
  throw thermofield::ParameterError("unknown export format '" + name + "'");
}

int run(int argc, char** argv) {
  CLI::App app{"Reservoir temperature field reconstruction toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  std::string format = "all";

  CLI::App* sweep = app.add_subcommand(
      "sweep", "Error sweep over methods, POD bases, sensor counts and conditions");
  sweep->add_option("-c,--config", config_path, "Experiment config (JSON)")
      ->required();
  sweep->add_option("-o,--output-dir", output_dir, "Override config output_dir");
  sweep->add_option("--format", format, "Report files to write: csv, json or all");

  CLI::App* fixed = app.add_subcommand(
      "fixed", "Fixed-sensor study: surface and dam-front vertical lines, "
               "error maps and depth-band stats");
  fixed->add_option("-c,--config", config_path, "Experiment config (JSON)")
      ->required();
  fixed->add_option("-o,--output-dir", output_dir, "Override config output_dir");
  fixed->add_option("--format", format, "Report files to write: csv, json or all");

  CLI::App* gen = app.add_subcommand(
      "gen-data", "Write the config's synthetic library as grid.json + snapshots.csv");
  gen->add_option("-c,--config", config_path, "Experiment config (JSON)")
      ->required();
  gen->add_option("-o,--output-dir", output_dir, "Override config output_dir");

  CLI::App* validate =
      app.add_subcommand("validate", "Check a config and its data files");
  validate->add_option("-c,--config", config_path, "Experiment config (JSON)")
      ->required();

  CLI11_PARSE(app, argc, argv);

  thermofield::ExperimentConfig config = thermofield::load_config(config_path);
  if (!output_dir.empty()) config.output_dir = output_dir;

  if (sweep->parsed()) {
    const auto report = thermofield::run_sweep(config);
    thermofield::export_report(report, config.output_dir, parse_format(format));
    std::cout << "sweep: " << report.records.size() << " records -> "
              << config.output_dir << "\n";
  } else if (fixed->parsed()) {
    const auto report = thermofield::run_fixed_sensors(config);
    thermofield::export_report(report, config.output_dir, parse_format(format));
    std::cout << "fixed: " << report.records.size() << " records, "
              << report.spreads.size() << " spread stats -> " << config.output_dir
              << "\n";
  } else if (gen->parsed()) {
    thermofield::generate_dataset(config, config.output_dir);
    std::cout << "gen-data: wrote grid.json and snapshots.csv -> "
              << config.output_dir << "\n";
  } else if (validate->parsed()) {
    std::cout << thermofield::validate_run_inputs(config) << "\n";
  }
  return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const thermofield::FormatError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const thermofield::ParameterError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const thermofield::StateError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const thermofield::ShapeError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const thermofield::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const thermofield::IoError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const thermofield::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}
