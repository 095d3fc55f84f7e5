#include <doctest.h>

#include "thermofield/metrics.hpp"

using namespace thermofield;

namespace {

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

} // namespace

TEST_SUITE("metrics") {

TEST_CASE("error1 worked examples") {
  CHECK(error1(vec2(1, 2), vec2(1, 2)) == 0.0);
  CHECK(error1(vec2(1, 0), vec2(0, 1)) ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(error1(vec2(3, 4), vec2(0, 0)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(error1(vec2(0, 0), vec2(1, 1)), NumericalError);
}

TEST_CASE("error1 is invariant under joint scaling") {
  const Eigen::VectorXd x = vec2(1.25, -3.5);
  const Eigen::VectorXd xhat = vec2(0.75, -3.0);
  const double base = error1(x, xhat);
  for (double c : {2.0, -5.0, 1e-8}) {
    CHECK(error1(c * x, c * xhat) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("error2 worked examples") {
  CHECK(error2(vec2(1, 2), vec2(1, 2), vec2(5, 5)) == 0.0);
  CHECK(error2(vec2(1, 0), vec2(0, 0), vec2(1, 0)) ==
        doctest::Approx(0.5).epsilon(1e-12));
  // zero mean reduces error2 to error1 on the fluctuations
  const Eigen::VectorXd xf = vec2(1.5, -0.5);
  const Eigen::VectorXd xhf = vec2(1.0, 0.25);
  CHECK(error2(xf, xhf, vec2(0, 0)) ==
        doctest::Approx(error1(xf, xhf)).epsilon(1e-12));
  CHECK_THROWS_AS(error2(vec2(1, 0), vec2(0, 0), vec2(-1, 0)), NumericalError);
}

TEST_CASE("error_map matches the error1 numerator exactly") {
  const Eigen::VectorXd x = vec2(2.0, -7.0);
  SUBCASE("identity gives zeros") {
    CHECK(error_map(x, x).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("single-cell discrepancy") {
    Eigen::VectorXd xhat = x;
    xhat[1] += 0.25;
    const Eigen::VectorXd map = error_map(x, xhat);
    CHECK(map[0] == 0.0);
    CHECK(map[1] == 0.25);
  }
  SUBCASE("norm identity") {
    const Eigen::VectorXd xhat = vec2(1.0, 3.5);
    CHECK(error_map(x, xhat).norm() == (x - xhat).norm());
  }
}

TEST_CASE("depth bands cover the default reservoir") {
  const FieldGrid grid = FieldGrid::default_reservoir();
  const std::vector<double> edges = default_band_edges(grid);
  REQUIRE(edges.size() == 7); // {0,10,...,60}
  CHECK(edges.front() == 0.0);
  CHECK(edges.back() == 60.0);

  const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(grid.n(), 0.5);
  const auto stats = depth_band_stats(uniform, grid, edges);
  REQUIRE(stats.size() == 6);
  int total = 0;
  for (const auto& band : stats) {
    total += band.count;
    if (band.count > 0) {
      CHECK(band.median == 0.5);
      CHECK(band.mean == 0.5);
      CHECK(band.min == 0.5);
      CHECK(band.max == 0.5);
    }
  }
  CHECK(total == grid.n());
}

TEST_CASE("single band holds every cell") {
  const FieldGrid grid = FieldGrid::default_reservoir();
  Eigen::VectorXd map(grid.n());
  for (int i = 0; i < grid.n(); ++i) map[i] = i;
  const auto stats = depth_band_stats(map, grid, {0.0, 60.0});
  REQUIRE(stats.size() == 1);
  CHECK(stats[0].count == grid.n());
  CHECK(stats[0].min == 0.0);
  CHECK(stats[0].max == grid.n() - 1.0);
}

TEST_CASE("cells exactly on an edge join the deeper band") {
  // dz = 4 m: layer 2 has mid-depth exactly 10 m
  const FieldGrid grid = FieldGrid::from_mask(
      1, 5, 1.0, 4.0, {{true}, {true}, {true}, {true}, {true}});
  Eigen::VectorXd map = Eigen::VectorXd::Zero(grid.n());
  map[grid.state_index(0, 2)] = 1.0;
  const auto stats = depth_band_stats(map, grid, {0.0, 10.0, 20.0});
  REQUIRE(stats.size() == 2);
  CHECK(stats[0].count == 2); // mid-depths 2, 6
  CHECK(stats[1].count == 3); // mid-depths 10, 14, 18
  CHECK(stats[0].max == 0.0);
  CHECK(stats[1].max == 1.0);
}

TEST_CASE("invalid band edges are rejected") {
  const FieldGrid grid = FieldGrid::default_reservoir();
  const Eigen::VectorXd map = Eigen::VectorXd::Zero(grid.n());
  CHECK_THROWS_AS(depth_band_stats(map, grid, {0.0, 10.0, 10.0}), ParameterError);
  CHECK_THROWS_AS(depth_band_stats(map, grid, {0.0, 30.0}), ParameterError);
  CHECK_THROWS_AS(depth_band_stats(map, grid, {5.0, 60.0}), ParameterError);
  CHECK_THROWS_AS(depth_band_stats(map, grid, {0.0}), ParameterError);
}

TEST_CASE("quartiles interpolate linearly") {
  const FieldGrid grid =
      FieldGrid::from_mask(4, 1, 1.0, 1.0, {{true, true, true, true}});
  Eigen::VectorXd map(4);
  map << 1.0, 2.0, 3.0, 4.0;
  const auto stats = depth_band_stats(map, grid, {0.0, 1.0});
  REQUIRE(stats.size() == 1);
  CHECK(stats[0].q1 == doctest::Approx(1.75));
  CHECK(stats[0].median == doctest::Approx(2.5));
  CHECK(stats[0].q3 == doctest::Approx(3.25));
}

TEST_CASE("make_error_report bundles the metrics") {
  const FieldGrid grid = FieldGrid::default_reservoir();
  Snapshot truth;
  truth.values = Eigen::VectorXd::Constant(grid.n(), 15.0);
  Snapshot xhat;
  xhat.values = Eigen::VectorXd::Constant(grid.n(), 14.0);
  const Eigen::VectorXd mean = Eigen::VectorXd::Constant(grid.n(), 15.0);
  const ErrorReport report =
      make_error_report(truth, xhat, mean, grid, default_band_edges(grid));
  CHECK(report.error1 == doctest::Approx(1.0 / 15.0).epsilon(1e-12));
  CHECK(report.cell_abs_error.size() == grid.n());
  CHECK(report.depth_band_stats.size() == 6);
}

} // TEST_SUITE
