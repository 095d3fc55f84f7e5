#include "thermofield/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace thermofield {

namespace {

void require_same_size(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                       const char* who) {
  if (a.size() != b.size())
    throw ShapeError(std::string(who) + ": size mismatch (" +
                     std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
                     ")");
}

/// Linearly interpolated quantile (numpy default) of sorted data.
double quantile_sorted(const std::vector<double>& sorted, double q) {
  const std::size_t count = sorted.size();
  if (count == 1) return sorted[0];
  const double pos = q * static_cast<double>(count - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

} // namespace

double error1(const Eigen::VectorXd& x, const Eigen::VectorXd& xhat) {
  require_same_size(x, xhat, "error1");
  const double denom = x.norm();
  if (denom == 0.0)
    throw NumericalError("error1: reference field has zero norm");
  return (x - xhat).norm() / denom;
}

double error1(const Snapshot& x, const Snapshot& xhat) {
  return error1(x.values, xhat.values);
}

double error2(const Eigen::VectorXd& x_fluct, const Eigen::VectorXd& xhat_fluct,
              const Eigen::VectorXd& mean) {
  require_same_size(x_fluct, xhat_fluct, "error2");
  require_same_size(x_fluct, mean, "error2");
  const double denom = (x_fluct + mean).norm();
  if (denom == 0.0)
    throw NumericalError("error2: full field has zero norm");
  return (x_fluct - xhat_fluct).norm() / denom;
}

Eigen::VectorXd error_map(const Eigen::VectorXd& x, const Eigen::VectorXd& xhat) {
  require_same_size(x, xhat, "error_map");
  return (x - xhat).cwiseAbs();
}

std::vector<double> default_band_edges(const FieldGrid& grid) {
  std::vector<double> edges;
  const double top = std::ceil(grid.max_depth_m() / 10.0) * 10.0;
  for (double e = 0.0; e <= top + 0.5; e += 10.0) edges.push_back(e);
  return edges;
}

std::vector<DepthBandStats> depth_band_stats(const Eigen::VectorXd& cell_abs_error,
                                             const FieldGrid& grid,
                                             const std::vector<double>& band_edges) {
  if (cell_abs_error.size() != grid.n())
    throw ShapeError("depth_band_stats: error map has " +
                     std::to_string(cell_abs_error.size()) +
                     " entries, grid has " + std::to_string(grid.n()));
  if (band_edges.size() < 2)
    throw ParameterError("depth_band_stats: need at least two band edges");
  for (std::size_t i = 1; i < band_edges.size(); ++i)
    if (!(band_edges[i] > band_edges[i - 1]))
      throw ParameterError("depth_band_stats: band edges must be strictly increasing");

  // Edges must cover every wet layer's mid-depth; a cell outside the bands
  // would silently vanish from the distribution otherwise.
  double shallowest = grid.max_depth_m();
  double deepest = 0.0;
  for (int col = 0; col < grid.nx(); ++col) {
    const int depth = grid.wet_depth(col);
    if (depth == 0) continue;
    shallowest = std::min(shallowest, grid.layer_mid_depth_m(0));
    deepest = std::max(deepest, grid.layer_mid_depth_m(depth - 1));
  }
  if (band_edges.front() > shallowest || band_edges.back() <= deepest)
    throw ParameterError("depth_band_stats: band edges do not cover the water column");

  const std::size_t n_bands = band_edges.size() - 1;
  std::vector<std::vector<double>> bucket(n_bands);
  for (int state = 0; state < grid.n(); ++state) {
    const auto [col, layer] = grid.cell_of(state);
    const double mid = grid.layer_mid_depth_m(layer);
    // half-open [lo, hi): a cell exactly on an edge joins the deeper band
    const auto it = std::upper_bound(band_edges.begin(), band_edges.end(), mid);
    const auto band = static_cast<std::size_t>(it - band_edges.begin()) - 1;
    bucket[band].push_back(cell_abs_error[state]);
  }

  std::vector<DepthBandStats> stats(n_bands);
  for (std::size_t b = 0; b < n_bands; ++b) {
    DepthBandStats& s = stats[b];
    s.lo_m = band_edges[b];
    s.hi_m = band_edges[b + 1];
    s.count = static_cast<int>(bucket[b].size());
    if (s.count == 0) continue;
    std::sort(bucket[b].begin(), bucket[b].end());
    s.min = bucket[b].front();
    s.max = bucket[b].back();
    s.q1 = quantile_sorted(bucket[b], 0.25);
    s.median = quantile_sorted(bucket[b], 0.5);
    s.q3 = quantile_sorted(bucket[b], 0.75);
    double total = 0.0;
    for (double v : bucket[b]) total += v;
    s.mean = total / s.count;
  }
  return stats;
}

ErrorReport make_error_report(const Snapshot& truth, const Snapshot& xhat,
                              const Eigen::VectorXd& mean, const FieldGrid& grid,
                              const std::vector<double>& band_edges) {
  validate_snapshot(truth, grid);
  if (xhat.values.size() != truth.values.size())
    throw ShapeError("make_error_report: reconstruction size mismatch");
  require_same_size(truth.values, mean, "make_error_report");

  ErrorReport report;
  report.error1 = error1(truth.values, xhat.values);
  report.error2 = error2(truth.values - mean, xhat.values - mean, mean);
  report.cell_abs_error = error_map(truth.values, xhat.values);
  if (!band_edges.empty())
    report.depth_band_stats = depth_band_stats(report.cell_abs_error, grid, band_edges);
  return report;
}

} // namespace thermofield
