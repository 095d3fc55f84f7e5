#pragma once

#include <cstdint>

#include "thermofield/grid.hpp"

namespace thermofield {

/// Parameters of one stratified temperature snapshot. Vertical profile is
/// logistic between t_bottom and t_surface around the thermocline;
/// withdrawal at intake_depth carves a Gaussian dip; a seeded smooth
/// perturbation adds snapshot-to-snapshot texture.
struct StratificationParams {
  double t_surface_c = 22.0;
  double t_bottom_c = 6.0;
  double thermocline_depth_m = 12.0;
  double thermocline_width_m = 4.0;
  double longitudinal_gradient_c_per_km = 0.01;
  double intake_depth_m = 25.0;
  double intake_strength_c = 0.0;
  double perturbation_amplitude_c = 0.1;
  std::uint64_t seed = 0;
};

/// Uniform half-widths applied around the base parameters when drawing
/// library snapshots. Zero everywhere means duplicated columns.
struct LibraryVariation {
  double t_surface_c = 0.0;
  double t_bottom_c = 0.0;
  double thermocline_depth_m = 0.0;
  double thermocline_width_m = 0.0;
  double longitudinal_gradient_c_per_km = 0.0;
  double intake_depth_m = 0.0;
  double intake_strength_c = 0.0;
};

/// Deterministic in (grid, params): same inputs give bit-identical output.
/// For intake_strength_c = 0 every column is non-increasing with depth.
Snapshot generate_snapshot(const FieldGrid& grid, const StratificationParams& params);

/// r = n_snapshots columns drawn from the seeded spread around `base`.
/// Uncentered; labels record the snapshot index and intake depth.
SnapshotLibrary generate_library(GridPtr grid, const StratificationParams& base,
                                 int n_snapshots, const LibraryVariation& variation,
                                 std::uint64_t seed);

/// The per-snapshot parameters generate_library uses for column `index`
/// (exposed so experiment configs can build matching test fields).
StratificationParams library_member_params(const StratificationParams& base,
                                           const LibraryVariation& variation,
                                           std::uint64_t seed, int index,
                                           const FieldGrid& grid);

} // namespace thermofield
