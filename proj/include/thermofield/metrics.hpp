#pragma once

#include <vector>

#include "thermofield/grid.hpp"

namespace thermofield {

/// Normalized reconstruction error ||x - xhat||_2 / ||x||_2.
double error1(const Eigen::VectorXd& x, const Eigen::VectorXd& xhat);
double error1(const Snapshot& x, const Snapshot& xhat);

/// Fluctuation-relative error ||x' - xhat'||_2 / ||x' + mean||_2, where the
/// primed fields are mean-subtracted. The denominator is the full-field norm.
double error2(const Eigen::VectorXd& x_fluct, const Eigen::VectorXd& xhat_fluct,
              const Eigen::VectorXd& mean);

/// Per-wet-cell absolute error |x - xhat|.
Eigen::VectorXd error_map(const Eigen::VectorXd& x, const Eigen::VectorXd& xhat);

/// Five-number summary plus mean and count of the cell errors whose layer
/// mid-depth falls in [lo_m, hi_m). Quartiles use linear interpolation.
struct DepthBandStats {
  double lo_m = 0.0;
  double hi_m = 0.0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double mean = 0.0;
  int count = 0;
};

/// Default band edges {0, 10, ..., ceil(depth/10)*10} in meters.
std::vector<double> default_band_edges(const FieldGrid& grid);

/// Assigns every wet cell to the half-open band [edge_i, edge_{i+1})
/// containing its layer mid-depth; edges must be strictly increasing and
/// cover the water column. Empty bands report zeros with count 0.
std::vector<DepthBandStats> depth_band_stats(const Eigen::VectorXd& cell_abs_error,
                                             const FieldGrid& grid,
                                             const std::vector<double>& band_edges);

/// Bundled metrics for one reconstruction.
struct ErrorReport {
  double error1 = 0.0;
  double error2 = 0.0;
  Eigen::VectorXd cell_abs_error;
  std::vector<DepthBandStats> depth_band_stats;
};

/// Computes all metrics of one reconstruction against the truth. `mean` is
/// the library mean the fluctuations are measured against; pass band edges
/// to fill the per-band stats (empty list skips them).
ErrorReport make_error_report(const Snapshot& truth, const Snapshot& xhat,
                              const Eigen::VectorXd& mean, const FieldGrid& grid,
                              const std::vector<double>& band_edges = {});

} // namespace thermofield
