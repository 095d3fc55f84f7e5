#pragma once

#include <string>

#include "thermofield/grid.hpp"

namespace thermofield {

/// Reads a grid spec: UTF-8 JSON with keys nx, nz, dx_m, dz_m, wet_mask
/// (nz arrays of nx booleans, surface row first) and optional
/// surface_elevation_m. Unknown keys are rejected.
FieldGrid load_grid_spec(const std::string& path);

void save_grid_spec(const FieldGrid& grid, const std::string& path);

/// Reads a snapshot CSV (header `label,v0,...,v{n-1}`, one snapshot per
/// row) and validates every row against the grid. Errors carry the
/// offending row/column.
SnapshotLibrary load_snapshots(const std::string& csv_path, GridPtr grid);

/// Convenience overload: loads the grid spec first.
SnapshotLibrary load_snapshots(const std::string& csv_path,
                               const std::string& grid_spec_path);

/// Writes the stored value matrix with shortest round-trip decimal
/// formatting; load_snapshots(save_snapshots(lib)) is bit-identical.
void save_snapshots(const SnapshotLibrary& lib, const std::string& path);

/// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);

/// Strict double parser (whole token must be consumed).
double parse_double(const std::string& token, const std::string& context);

} // namespace thermofield
