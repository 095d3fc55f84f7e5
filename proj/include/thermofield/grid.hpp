#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "thermofield/errors.hpp"

namespace thermofield {

/// Structured 2-D reservoir grid: nx longitudinal columns by nz depth
/// layers, with a wet-cell mask describing the water body. Only wet cells
/// enter the state vector. Ordering is column-major by longitudinal
/// position, surface to bottom within a column, so a vertical sensor line
/// is a contiguous index range.
///
/// Immutable after construction; share via shared_ptr across workers.
class FieldGrid {
public:
  /// Builds a grid from an explicit mask. `wet_rows` holds nz rows
  /// (surface first) of nx flags each. Within every column the wet cells
  /// must form one contiguous run starting at the surface layer.
  static FieldGrid from_mask(int nx, int nz, double dx_m, double dz_m,
                             const std::vector<std::vector<bool>>& wet_rows,
                             double surface_elevation_m = 0.0);

  /// Desk-scale default reservoir: 60 columns x 30 layers, dz = 2 m
  /// (0-60 m water column), dx = 3 km, wet depth growing linearly from
  /// one layer upstream to the full column at the dam end.
  static FieldGrid default_reservoir();

  int nx() const { return nx_; }
  int nz() const { return nz_; }
  double dx_m() const { return dx_m_; }
  double dz_m() const { return dz_m_; }
  double surface_elevation_m() const { return surface_elevation_m_; }

  /// Number of wet cells = state-vector length.
  int n() const { return n_; }

  bool is_wet(int col, int layer) const {
    check_cell(col, layer);
    return cell_to_state_[flat(col, layer)] >= 0;
  }

  /// State index of a wet cell; ParameterError for dry cells.
  int state_index(int col, int layer) const;

  /// (column, layer) of a state index.
  std::pair<int, int> cell_of(int state) const;

  /// Wet layers in a column (contiguous run from the surface).
  int wet_depth(int col) const;

  /// Column with the deepest water (ties break toward the higher column
  /// index); sensors "at the dam front" live here.
  int dam_column() const { return dam_column_; }

  /// Mid-depth in meters of a layer, measured down from the surface.
  double layer_mid_depth_m(int layer) const { return (layer + 0.5) * dz_m_; }

  /// Longitudinal cell-centre position in meters from the upstream end.
  double column_mid_position_m(int col) const { return (col + 0.5) * dx_m_; }

  double max_depth_m() const { return nz_ * dz_m_; }

  /// Layer-major mask rows, as accepted by from_mask.
  std::vector<std::vector<bool>> mask_rows() const;

  bool same_layout(const FieldGrid& other) const;

private:
  FieldGrid() = default;

  std::size_t flat(int col, int layer) const {
    return static_cast<std::size_t>(col) * static_cast<std::size_t>(nz_) +
           static_cast<std::size_t>(layer);
  }
  void check_cell(int col, int layer) const;

  int nx_ = 0;
  int nz_ = 0;
  double dx_m_ = 0.0;
  double dz_m_ = 0.0;
  double surface_elevation_m_ = 0.0;
  int n_ = 0;
  int dam_column_ = 0;
  std::vector<int> cell_to_state_;              // -1 for dry cells
  std::vector<std::pair<int, int>> state_to_cell_;
};

using GridPtr = std::shared_ptr<const FieldGrid>;

/// One field state: temperature in degC per wet cell, plus a condition tag.
struct Snapshot {
  Eigen::VectorXd values;
  std::string label;
};

/// Validates a snapshot against a grid (length and finiteness).
void validate_snapshot(const Snapshot& snapshot, const FieldGrid& grid);

/// Snapshot matrix (n x r), one column per snapshot. `centered` libraries
/// store fluctuations and carry the subtracted mean.
struct SnapshotLibrary {
  GridPtr grid;
  Eigen::MatrixXd columns;
  std::vector<std::string> labels;
  std::optional<Eigen::VectorXd> mean;
  bool centered = false;

  int n() const { return static_cast<int>(columns.rows()); }
  int r() const { return static_cast<int>(columns.cols()); }
};

SnapshotLibrary make_library(GridPtr grid, Eigen::MatrixXd columns,
                             std::vector<std::string> labels);

/// Subtracts the column-wise mean; the result stores fluctuations and the
/// mean needed to undo the shift. StateError if already centered.
SnapshotLibrary center_library(const SnapshotLibrary& lib);

/// Adds the stored mean back; inverse of center_library.
SnapshotLibrary uncenter_library(const SnapshotLibrary& lib);

/// Dense nz x nx array (row = layer, surface first); dry cells hold NaN.
Eigen::MatrixXd snapshot_to_grid(const Snapshot& snapshot, const FieldGrid& grid);

/// Gathers wet cells of a dense nz x nx array back into a state vector.
Snapshot snapshot_from_grid(const Eigen::MatrixXd& dense, const FieldGrid& grid,
                            std::string label = {});

} // namespace thermofield
