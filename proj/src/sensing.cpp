#include "thermofield/sensing.hpp"

#include <cmath>
#include <fstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "thermofield/rng.hpp"

namespace thermofield {

std::string placement_name(Placement placement) {
  switch (placement) {
    case Placement::random_points: return "random_points";
    case Placement::surface_line: return "surface_line";
    case Placement::vertical_dam_line: return "vertical_dam_line";
    case Placement::explicit_points: return "explicit";
  }
  throw ParameterError("placement_name: invalid placement");
}

Placement placement_from_name(const std::string& name) {
  if (name == "random_points") return Placement::random_points;
  if (name == "surface_line") return Placement::surface_line;
  if (name == "vertical_dam_line") return Placement::vertical_dam_line;
  if (name == "explicit") return Placement::explicit_points;
  throw ParameterError("unknown placement '" + name + "'");
}

namespace {

void require_grid(const GridPtr& grid, const char* who) {
  if (!grid) throw ParameterError(std::string(who) + ": null grid");
}

/// Even spacing over L candidates: sensor j sits at candidate floor(j*L/p).
std::vector<int> evenly_spaced(const std::vector<int>& candidates, int p,
                               const char* who) {
  const int count = static_cast<int>(candidates.size());
  if (p < 1)
    throw ParameterError(std::string(who) + ": p must be >= 1");
  if (p > count)
    throw ParameterError(std::string(who) + ": p = " + std::to_string(p) +
                         " exceeds the " + std::to_string(count) +
                         " available cells");
  std::vector<int> indices;
  indices.reserve(static_cast<std::size_t>(p));
  for (int j = 0; j < p; ++j)
    indices.push_back(candidates[static_cast<std::size_t>(
        static_cast<long long>(j) * count / p)]);
  return indices;
}

} // namespace

MeasurementOperator random_points(GridPtr grid, int p, std::uint64_t seed) {
  require_grid(grid, "random_points");
  if (p < 1 || p > grid->n())
    throw ParameterError("random_points: p = " + std::to_string(p) +
                         " outside [1, " + std::to_string(grid->n()) + "]");
  Rng rng(mix_seed({seed, 0x73656e73ULL}));
  MeasurementOperator op;
  op.indices = rng.sample_without_replacement(grid->n(), p);
  op.grid = std::move(grid);
  op.placement = Placement::random_points;
  op.seed = seed;
  return op;
}

MeasurementOperator surface_line(GridPtr grid, int p) {
  require_grid(grid, "surface_line");
  std::vector<int> candidates;
  for (int col = 0; col < grid->nx(); ++col)
    if (grid->is_wet(col, 0)) candidates.push_back(grid->state_index(col, 0));
  MeasurementOperator op;
  op.indices = evenly_spaced(candidates, p, "surface_line");
  op.grid = std::move(grid);
  op.placement = Placement::surface_line;
  return op;
}

MeasurementOperator vertical_dam_line(GridPtr grid, int p) {
  require_grid(grid, "vertical_dam_line");
  const int dam = grid->dam_column();
  std::vector<int> candidates;
  for (int layer = 0; layer < grid->wet_depth(dam); ++layer)
    candidates.push_back(grid->state_index(dam, layer));
  MeasurementOperator op;
  op.indices = evenly_spaced(candidates, p, "vertical_dam_line");
  op.grid = std::move(grid);
  op.placement = Placement::vertical_dam_line;
  return op;
}

MeasurementOperator explicit_points(GridPtr grid,
                                    const std::vector<std::pair<int, int>>& cells) {
  require_grid(grid, "explicit_points");
  if (cells.empty())
    throw ParameterError("explicit_points: need at least one sensor cell");
  MeasurementOperator op;
  std::unordered_set<int> seen;
  for (const auto& [col, layer] : cells) {
    const int idx = grid->state_index(col, layer); // throws for dry cells
    if (!seen.insert(idx).second)
      throw ParameterError("explicit_points: duplicate sensor cell (" +
                           std::to_string(col) + ", " + std::to_string(layer) + ")");
    op.indices.push_back(idx);
  }
  op.grid = std::move(grid);
  op.placement = Placement::explicit_points;
  return op;
}

MeasurementOperator load_explicit_operator(GridPtr grid, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("'" + path + "': " + e.what());
  }
  if (!doc.is_array())
    throw FormatError("'" + path + "': expected a JSON array of [column, layer] pairs");
  std::vector<std::pair<int, int>> cells;
  for (const auto& entry : doc) {
    if (!entry.is_array() || entry.size() != 2)
      throw FormatError("'" + path + "': each sensor must be a [column, layer] pair");
    cells.emplace_back(entry.at(0).get<int>(), entry.at(1).get<int>());
  }
  return explicit_points(std::move(grid), cells);
}

void validate_noise(const NoiseModel& noise) {
  if (noise.gaussian_sigma < 0.0)
    throw ParameterError("NoiseModel: gaussian_sigma must be >= 0");
  if (noise.corruption_fraction < 0.0 || noise.corruption_fraction > 1.0)
    throw ParameterError("NoiseModel: corruption_fraction must be in [0, 1]");
  if (noise.corruption_scale < 0.0)
    throw ParameterError("NoiseModel: corruption_scale must be >= 0");
}

MeasurementSample sample(const MeasurementOperator& op, const Snapshot& x,
                         const NoiseModel& noise) {
  if (!op.grid) throw ParameterError("sample: operator has no grid");
  validate_noise(noise);
  if (x.values.size() != op.grid->n())
    throw ShapeError("sample: snapshot has " + std::to_string(x.values.size()) +
                     " values, operator grid has " + std::to_string(op.grid->n()));

  const int p = op.p();
  Rng rng(mix_seed({noise.seed, 0x6e6f6973ULL}));
  MeasurementSample out;
  out.y.resize(p);
  for (int i = 0; i < p; ++i) {
    double v = x.values[op.indices[static_cast<std::size_t>(i)]];
    if (noise.gaussian_sigma > 0.0) v += noise.gaussian_sigma * rng.gaussian();
    out.y[i] = v;
  }
  const int n_corrupt =
      static_cast<int>(std::ceil(noise.corruption_fraction * p));
  if (n_corrupt > 0) {
    out.corrupted = rng.sample_without_replacement(p, n_corrupt);
    for (int pos : out.corrupted)
      out.y[pos] = rng.uniform(-noise.corruption_scale, noise.corruption_scale);
  }
  return out;
}

Eigen::VectorXd apply(const MeasurementOperator& op, const Snapshot& x,
                      const NoiseModel& noise) {
  return sample(op, x, noise).y;
}

Eigen::MatrixXd select_rows(const MeasurementOperator& op, const Eigen::MatrixXd& m) {
  Eigen::MatrixXd out(op.p(), m.cols());
  for (int i = 0; i < op.p(); ++i)
    out.row(i) = m.row(op.indices[static_cast<std::size_t>(i)]);
  return out;
}

Eigen::VectorXd select_rows(const MeasurementOperator& op, const Eigen::VectorXd& v) {
  Eigen::VectorXd out(op.p());
  for (int i = 0; i < op.p(); ++i)
    out[i] = v[op.indices[static_cast<std::size_t>(i)]];
  return out;
}

} // namespace thermofield
