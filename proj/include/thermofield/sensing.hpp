#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "thermofield/grid.hpp"

namespace thermofield {

enum class Placement { random_points, surface_line, vertical_dam_line, explicit_points };

std::string placement_name(Placement placement);
Placement placement_from_name(const std::string& name);

/// Row-selection realization of the measurement operator: p distinct
/// wet-cell state indices. Products against a snapshot matrix are gathers;
/// no dense p x n matrix is ever formed.
struct MeasurementOperator {
  GridPtr grid;
  std::vector<int> indices;
  Placement placement = Placement::explicit_points;
  std::optional<std::uint64_t> seed;

  int p() const { return static_cast<int>(indices.size()); }
};

/// p distinct wet cells drawn uniformly without replacement.
MeasurementOperator random_points(GridPtr grid, int p, std::uint64_t seed);

/// p sensors evenly spaced along the wet surface layer, upstream first:
/// candidate j = floor(j * L / p) over the L surface cells.
MeasurementOperator surface_line(GridPtr grid, int p);

/// p sensors evenly spaced down the dam-front column, surface first.
MeasurementOperator vertical_dam_line(GridPtr grid, int p);

/// Operator over explicit (column, layer) cells; every cell must be wet.
MeasurementOperator explicit_points(GridPtr grid,
                                    const std::vector<std::pair<int, int>>& cells);

/// Loads explicit sensors from a JSON array of [column, layer] pairs.
MeasurementOperator load_explicit_operator(GridPtr grid, const std::string& path);

/// Additive Gaussian noise plus optional gross corruption: a seeded choice
/// of ceil(corruption_fraction * p) readings is replaced by uniform draws
/// in [-corruption_scale, corruption_scale].
struct NoiseModel {
  double gaussian_sigma = 0.0;
  double corruption_fraction = 0.0;
  double corruption_scale = 0.0;
  std::uint64_t seed = 0;
};

void validate_noise(const NoiseModel& noise);

/// A measurement vector plus the positions that were grossly corrupted
/// (positions are 0..p-1 into the operator's index list).
struct MeasurementSample {
  Eigen::VectorXd y;
  std::vector<int> corrupted;
};

MeasurementSample sample(const MeasurementOperator& op, const Snapshot& x,
                         const NoiseModel& noise);

/// y = Cx + eta; deterministic in noise.seed.
Eigen::VectorXd apply(const MeasurementOperator& op, const Snapshot& x,
                      const NoiseModel& noise);

/// Gathers the operator's rows from an n x m matrix: the product C * M.
Eigen::MatrixXd select_rows(const MeasurementOperator& op, const Eigen::MatrixXd& m);
Eigen::VectorXd select_rows(const MeasurementOperator& op, const Eigen::VectorXd& v);

} // namespace thermofield
