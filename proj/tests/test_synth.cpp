#include <doctest.h>

#include <Eigen/SVD>

#include "thermofield/grid.hpp"
#include "thermofield/synth.hpp"

using namespace thermofield;

namespace {

StratificationParams quiet_params() {
  StratificationParams p;
  p.t_surface_c = 10.0;
  p.t_bottom_c = 10.0;
  p.thermocline_depth_m = 10.0;
  p.thermocline_width_m = 2.0;
  p.longitudinal_gradient_c_per_km = 0.0;
  p.intake_depth_m = 5.0;
  p.intake_strength_c = 0.0;
  p.perturbation_amplitude_c = 0.0;
  return p;
}

} // namespace

TEST_SUITE("synth") {

TEST_CASE("degenerate parameters give a uniform field") {
  const FieldGrid grid = FieldGrid::default_reservoir();
  const Snapshot s = generate_snapshot(grid, quiet_params());
  for (int i = 0; i < grid.n(); ++i) CHECK(s.values[i] == doctest::Approx(10.0));
}

TEST_CASE("logistic profile hits the midpoint at the thermocline") {
  // dz = 4 m puts the layer-2 mid-depth exactly at z = 10 m
  const FieldGrid grid =
      FieldGrid::from_mask(1, 3, 1.0, 4.0, {{true}, {true}, {true}});
  StratificationParams p = quiet_params();
  p.t_surface_c = 20.0;
  p.t_bottom_c = 5.0;
  p.thermocline_depth_m = 10.0;
  p.thermocline_width_m = 2.0;
  const Snapshot s = generate_snapshot(grid, p);
  CHECK(s.values[grid.state_index(0, 2)] == doctest::Approx(12.5).epsilon(1e-12));
}

TEST_CASE("identical inputs give bit-identical snapshots") {
  const FieldGrid grid = FieldGrid::default_reservoir();
  StratificationParams p;
  p.intake_strength_c = 1.5;
  p.seed = 77;
  const Snapshot a = generate_snapshot(grid, p);
  const Snapshot b = generate_snapshot(grid, p);
  CHECK((a.values - b.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("columns are non-increasing with depth when intake is off") {
  const FieldGrid grid = FieldGrid::default_reservoir();
  StratificationParams p;
  p.intake_strength_c = 0.0;
  p.perturbation_amplitude_c = 0.1;
  p.seed = 3;
  const Snapshot s = generate_snapshot(grid, p);
  for (int col = 0; col < grid.nx(); ++col)
    for (int layer = 1; layer < grid.wet_depth(col); ++layer)
      CHECK(s.values[grid.state_index(col, layer)] <=
            s.values[grid.state_index(col, layer - 1)] + 1e-12);
}

TEST_CASE("generated values stay inside the documented bounds") {
  const FieldGrid grid = FieldGrid::default_reservoir();
  StratificationParams p;
  p.intake_strength_c = 2.0;
  p.longitudinal_gradient_c_per_km = 0.02;
  p.seed = 11;
  const Snapshot s = generate_snapshot(grid, p);
  const double length_km = grid.nx() * grid.dx_m() / 1000.0;
  const double lo = p.t_bottom_c - p.intake_strength_c - 1.0;
  const double hi = p.t_surface_c +
                    std::abs(p.longitudinal_gradient_c_per_km) * length_km + 1.0;
  CHECK(s.values.minCoeff() >= lo);
  CHECK(s.values.maxCoeff() <= hi);
}

TEST_CASE("intake depth outside the water column is rejected") {
  const FieldGrid grid = FieldGrid::default_reservoir();
  StratificationParams p;
  p.intake_depth_m = grid.max_depth_m() + 1.0;
  CHECK_THROWS_AS(generate_snapshot(grid, p), ParameterError);
}

TEST_CASE("single-snapshot library equals the base snapshot") {
  auto grid = std::make_shared<FieldGrid>(FieldGrid::default_reservoir());
  StratificationParams base = quiet_params();
  base.t_surface_c = 18.0;
  base.t_bottom_c = 6.0;
  const SnapshotLibrary lib = generate_library(grid, base, 1, {}, 42);
  const Snapshot direct = generate_snapshot(*grid, base);
  REQUIRE(lib.r() == 1);
  CHECK((lib.columns.col(0) - direct.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("zero spread duplicates columns, numerical rank 1") {
  auto grid = std::make_shared<FieldGrid>(FieldGrid::default_reservoir());
  StratificationParams base;
  base.perturbation_amplitude_c = 0.1;
  base.seed = 5;
  const SnapshotLibrary lib = generate_library(grid, base, 5, {}, 42);
  REQUIRE(lib.r() == 5);
  for (int j = 1; j < 5; ++j)
    CHECK((lib.columns.col(j) - lib.columns.col(0)).cwiseAbs().maxCoeff() == 0.0);
  const Eigen::BDCSVD<Eigen::MatrixXd> svd(lib.columns);
  CHECK(svd.singularValues()[1] <= 1e-12 * svd.singularValues()[0]);
}

TEST_CASE("thermocline spread concentrates energy in two modes") {
  auto grid = std::make_shared<FieldGrid>(FieldGrid::default_reservoir());
  StratificationParams base;
  base.thermocline_depth_m = 12.0;
  LibraryVariation variation;
  variation.thermocline_depth_m = 4.0; // 8..16 m
  const SnapshotLibrary lib = generate_library(grid, base, 50, variation, 7);
  const SnapshotLibrary centered = center_library(lib);
  const Eigen::BDCSVD<Eigen::MatrixXd> svd(centered.columns);
  const Eigen::VectorXd sv = svd.singularValues();
  const double total = sv.array().square().sum();
  const double two = sv[0] * sv[0] + sv[1] * sv[1];
  CHECK(two / total >= 0.95);
}

TEST_CASE("library generation is deterministic in the seed") {
  auto grid = std::make_shared<FieldGrid>(FieldGrid::default_reservoir());
  StratificationParams base;
  LibraryVariation variation;
  variation.thermocline_depth_m = 3.0;
  variation.t_surface_c = 1.0;
  const SnapshotLibrary a = generate_library(grid, base, 8, variation, 99);
  const SnapshotLibrary b = generate_library(grid, base, 8, variation, 99);
  CHECK((a.columns - b.columns).cwiseAbs().maxCoeff() == 0.0);
  const SnapshotLibrary c = generate_library(grid, base, 8, variation, 100);
  CHECK((a.columns - c.columns).cwiseAbs().maxCoeff() > 0.0);
}

} // TEST_SUITE
