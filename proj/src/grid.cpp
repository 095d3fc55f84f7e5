#include "thermofield/grid.hpp"

#include <cmath>
#include <limits>

namespace thermofield {

FieldGrid FieldGrid::from_mask(int nx, int nz, double dx_m, double dz_m,
                               const std::vector<std::vector<bool>>& wet_rows,
                               double surface_elevation_m) {
  if (nx < 1 || nz < 1)
    throw ParameterError("FieldGrid: nx and nz must be positive");
  if (!(dx_m > 0.0) || !(dz_m > 0.0))
    throw ParameterError("FieldGrid: dx_m and dz_m must be positive");
  if (static_cast<int>(wet_rows.size()) != nz)
    throw ShapeError("FieldGrid: wet mask must have nz rows, got " +
                     std::to_string(wet_rows.size()));
  for (int layer = 0; layer < nz; ++layer) {
    if (static_cast<int>(wet_rows[static_cast<std::size_t>(layer)].size()) != nx)
      throw ShapeError("FieldGrid: wet mask row " + std::to_string(layer) +
                       " must have nx entries");
  }

  FieldGrid grid;
  grid.nx_ = nx;
  grid.nz_ = nz;
  grid.dx_m_ = dx_m;
  grid.dz_m_ = dz_m;
  grid.surface_elevation_m_ = surface_elevation_m;
  grid.cell_to_state_.assign(static_cast<std::size_t>(nx) * static_cast<std::size_t>(nz), -1);

  int next = 0;
  int deepest = -1;
  for (int col = 0; col < nx; ++col) {
    bool seen_dry = false;
    int depth = 0;
    for (int layer = 0; layer < nz; ++layer) {
      const bool wet = wet_rows[static_cast<std::size_t>(layer)][static_cast<std::size_t>(col)];
      if (wet) {
        if (seen_dry)
          throw ParameterError(
              "FieldGrid: column " + std::to_string(col) +
              " has a wet cell below a dry one; wet cells must be a "
              "contiguous run from the surface");
        grid.cell_to_state_[grid.flat(col, layer)] = next++;
        grid.state_to_cell_.emplace_back(col, layer);
        ++depth;
      } else {
        seen_dry = true;
      }
    }
    if (depth >= deepest) { // ties break toward the dam (higher column)
      deepest = depth;
      grid.dam_column_ = col;
    }
  }
  grid.n_ = next;
  if (grid.n_ == 0) throw ParameterError("FieldGrid: mask has no wet cells");
  return grid;
}

FieldGrid FieldGrid::default_reservoir() {
  const int nx = 60;
  const int nz = 30;
  std::vector<std::vector<bool>> rows(nz, std::vector<bool>(nx, false));
  for (int col = 0; col < nx; ++col) {
    const int depth = 1 + (col * (nz - 1)) / (nx - 1);
    for (int layer = 0; layer < depth; ++layer)
      rows[static_cast<std::size_t>(layer)][static_cast<std::size_t>(col)] = true;
  }
  return from_mask(nx, nz, 3000.0, 2.0, rows);
}

void FieldGrid::check_cell(int col, int layer) const {
  if (col < 0 || col >= nx_ || layer < 0 || layer >= nz_)
    throw ParameterError("FieldGrid: cell (" + std::to_string(col) + ", " +
                         std::to_string(layer) + ") outside " +
                         std::to_string(nx_) + "x" + std::to_string(nz_) +
                         " grid");
}

int FieldGrid::state_index(int col, int layer) const {
  check_cell(col, layer);
  const int idx = cell_to_state_[flat(col, layer)];
  if (idx < 0)
    throw ParameterError("FieldGrid: cell (" + std::to_string(col) + ", " +
                         std::to_string(layer) + ") is dry");
  return idx;
}

std::pair<int, int> FieldGrid::cell_of(int state) const {
  if (state < 0 || state >= n_)
    throw ParameterError("FieldGrid: state index " + std::to_string(state) +
                         " outside [0, " + std::to_string(n_) + ")");
  return state_to_cell_[static_cast<std::size_t>(state)];
}

int FieldGrid::wet_depth(int col) const {
  check_cell(col, 0);
  int depth = 0;
  while (depth < nz_ && cell_to_state_[flat(col, depth)] >= 0) ++depth;
  return depth;
}

std::vector<std::vector<bool>> FieldGrid::mask_rows() const {
  std::vector<std::vector<bool>> rows(
      static_cast<std::size_t>(nz_),
      std::vector<bool>(static_cast<std::size_t>(nx_), false));
  for (int col = 0; col < nx_; ++col)
    for (int layer = 0; layer < nz_; ++layer)
      rows[static_cast<std::size_t>(layer)][static_cast<std::size_t>(col)] =
          cell_to_state_[flat(col, layer)] >= 0;
  return rows;
}

bool FieldGrid::same_layout(const FieldGrid& other) const {
  return nx_ == other.nx_ && nz_ == other.nz_ && dx_m_ == other.dx_m_ &&
         dz_m_ == other.dz_m_ && cell_to_state_ == other.cell_to_state_;
}

void validate_snapshot(const Snapshot& snapshot, const FieldGrid& grid) {
  if (snapshot.values.size() != grid.n())
    throw ShapeError("Snapshot '" + snapshot.label + "' has " +
                     std::to_string(snapshot.values.size()) +
                     " values, grid has " + std::to_string(grid.n()) +
                     " wet cells");
  for (Eigen::Index i = 0; i < snapshot.values.size(); ++i)
    if (!std::isfinite(snapshot.values[i]))
      throw DataError("Snapshot '" + snapshot.label +
                      "' has a non-finite value at state index " +
                      std::to_string(i));
}

SnapshotLibrary make_library(GridPtr grid, Eigen::MatrixXd columns,
                             std::vector<std::string> labels) {
  if (!grid) throw ParameterError("make_library: null grid");
  if (columns.rows() != grid->n())
    throw ShapeError("make_library: columns have " +
                     std::to_string(columns.rows()) + " rows, grid has " +
                     std::to_string(grid->n()) + " wet cells");
  if (columns.cols() < 1)
    throw ParameterError("make_library: need at least one snapshot");
  if (labels.size() != static_cast<std::size_t>(columns.cols()))
    throw ShapeError("make_library: label count does not match column count");
  if (!columns.allFinite())
    throw DataError("make_library: non-finite value in snapshot matrix");
  SnapshotLibrary lib;
  lib.grid = std::move(grid);
  lib.columns = std::move(columns);
  lib.labels = std::move(labels);
  lib.centered = false;
  return lib;
}

SnapshotLibrary center_library(const SnapshotLibrary& lib) {
  if (lib.centered)
    throw StateError("center_library: library is already centered");
  SnapshotLibrary out = lib;
  const Eigen::VectorXd mean = lib.columns.rowwise().mean();
  out.columns.colwise() -= mean;
  out.mean = mean;
  out.centered = true;
  return out;
}

SnapshotLibrary uncenter_library(const SnapshotLibrary& lib) {
  if (!lib.centered || !lib.mean)
    throw StateError("uncenter_library: library is not centered");
  SnapshotLibrary out = lib;
  out.columns.colwise() += *lib.mean;
  out.mean.reset();
  out.centered = false;
  return out;
}

Eigen::MatrixXd snapshot_to_grid(const Snapshot& snapshot, const FieldGrid& grid) {
  if (snapshot.values.size() != grid.n())
    throw ShapeError("snapshot_to_grid: snapshot has " +
                     std::to_string(snapshot.values.size()) +
                     " values, grid has " + std::to_string(grid.n()));
  Eigen::MatrixXd dense = Eigen::MatrixXd::Constant(
      grid.nz(), grid.nx(), std::numeric_limits<double>::quiet_NaN());
  for (int state = 0; state < grid.n(); ++state) {
    const auto [col, layer] = grid.cell_of(state);
    dense(layer, col) = snapshot.values[state];
  }
  return dense;
}

Snapshot snapshot_from_grid(const Eigen::MatrixXd& dense, const FieldGrid& grid,
                            std::string label) {
  if (dense.rows() != grid.nz() || dense.cols() != grid.nx())
    throw ShapeError("snapshot_from_grid: array is " +
                     std::to_string(dense.rows()) + "x" +
                     std::to_string(dense.cols()) + ", grid is " +
                     std::to_string(grid.nz()) + "x" +
                     std::to_string(grid.nx()));
  Snapshot snapshot;
  snapshot.label = std::move(label);
  snapshot.values.resize(grid.n());
  for (int state = 0; state < grid.n(); ++state) {
    const auto [col, layer] = grid.cell_of(state);
    snapshot.values[state] = dense(layer, col);
  }
  return snapshot;
}

} // namespace thermofield
