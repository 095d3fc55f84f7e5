#include <doctest.h>

#include "thermofield/pod.hpp"
#include "thermofield/synth.hpp"

using namespace thermofield;

namespace {

SnapshotLibrary centered_synthetic_library(GridPtr grid, int r, std::uint64_t seed) {
  StratificationParams base;
  LibraryVariation variation;
  variation.thermocline_depth_m = 4.0;
  variation.thermocline_width_m = 1.0;
  variation.t_surface_c = 1.5;
  return center_library(generate_library(std::move(grid), base, r, variation, seed));
}

} // namespace

TEST_SUITE("pod") {

TEST_CASE("hand-computed 2x2 SVD") {
  auto grid = std::make_shared<FieldGrid>(
      FieldGrid::from_mask(1, 2, 1.0, 1.0, {{true}, {true}}));
  Eigen::MatrixXd cols(2, 2);
  cols << 1, 0, 0, 1;
  const SnapshotLibrary lib = center_library(make_library(grid, cols, {"a", "b"}));
  // centered columns are [0.5, -0.5] and [-0.5, 0.5]: rank 1, sigma = 1
  const PodBasis basis = compute_pod(lib, 1);
  REQUIRE(basis.k() == 1);
  CHECK(basis.singular_values[0] == doctest::Approx(1.0).epsilon(1e-12));
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  Eigen::VectorXd expected(2);
  expected << inv_sqrt2, -inv_sqrt2;
  CHECK(std::abs(basis.modes.col(0).dot(expected)) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("rank-1 library truncates a k = 2 request") {
  auto grid = std::make_shared<FieldGrid>(
      FieldGrid::from_mask(1, 2, 1.0, 1.0, {{true}, {true}}));
  Eigen::MatrixXd cols(2, 2);
  cols << 1, 0, 0, 1;
  const SnapshotLibrary lib = center_library(make_library(grid, cols, {"a", "b"}));
  const PodBasis basis = compute_pod(lib, 2);
  CHECK(basis.k() == 1);
  CHECK(basis.requested_k == 2);
}

TEST_CASE("modes are orthonormal and energies cumulative") {
  auto grid = std::make_shared<FieldGrid>(FieldGrid::default_reservoir());
  const SnapshotLibrary lib = centered_synthetic_library(grid, 20, 3);
  const PodBasis basis = compute_pod(lib, 5);
  REQUIRE(basis.k() == 5);
  const Eigen::MatrixXd gram = basis.modes.transpose() * basis.modes;
  CHECK((gram - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() <= 1e-10);
  for (int i = 1; i < 5; ++i) {
    CHECK(basis.singular_values[i] <= basis.singular_values[i - 1]);
    CHECK(basis.energy_fractions[i] >= basis.energy_fractions[i - 1]);
  }
  CHECK(basis.energy_fractions[4] <= 1.0 + 1e-12);
}

TEST_CASE("uncentered library and bad k are rejected") {
  auto grid = std::make_shared<FieldGrid>(FieldGrid::default_reservoir());
  StratificationParams base;
  const SnapshotLibrary raw = generate_library(grid, base, 4, {}, 1);
  CHECK_THROWS_AS(compute_pod(raw, 1), StateError);
  const SnapshotLibrary lib = centered_synthetic_library(grid, 4, 1);
  CHECK_THROWS_AS(compute_pod(lib, 0), ParameterError);
  CHECK_THROWS_AS(compute_pod(lib, 5), ParameterError);
}

TEST_CASE("exact recovery of fields in the basis span") {
  auto grid = std::make_shared<FieldGrid>(FieldGrid::default_reservoir());
  const SnapshotLibrary lib = centered_synthetic_library(grid, 30, 11);
  const PodBasis basis = compute_pod(lib, 3);
  REQUIRE(basis.k() == 3);
  Eigen::VectorXd coeffs(3);
  coeffs << 4.0, -2.5, 1.25;
  Snapshot truth;
  truth.values = basis.mean + basis.modes * coeffs;

  const MeasurementOperator op = random_points(grid, 6, 21);
  const Eigen::VectorXd y = apply(op, truth, NoiseModel{});
  const ReconstructionResult result = gappy_reconstruct(basis, op, y, {}, &truth);
  REQUIRE(result.metrics.has_value());
  CHECK(result.metrics->error1 <= 1e-10);
  CHECK((result.coefficients - coeffs).norm() <= 1e-8);
  CHECK(result.residual_norm <= 1e-10);
}

TEST_CASE("full observation equals the orthogonal projection") {
  auto grid = std::make_shared<FieldGrid>(FieldGrid::default_reservoir());
  const SnapshotLibrary lib = centered_synthetic_library(grid, 15, 13);
  const PodBasis basis = compute_pod(lib, 4);
  StratificationParams other;
  other.thermocline_depth_m = 9.0;
  other.seed = 1234;
  const Snapshot x = generate_snapshot(*grid, other);

  const MeasurementOperator op = random_points(grid, grid->n(), 1);
  const Eigen::VectorXd y = apply(op, x, NoiseModel{});
  const ReconstructionResult result = gappy_reconstruct(basis, op, y);

  const Eigen::VectorXd projection =
      basis.mean + basis.modes * (basis.modes.transpose() * (x.values - basis.mean));
  CHECK((result.xhat.values - projection).norm() <= 1e-10 * projection.norm());
}

TEST_CASE("residual is non-increasing in k for nested bases") {
  auto grid = std::make_shared<FieldGrid>(FieldGrid::default_reservoir());
  const SnapshotLibrary lib = centered_synthetic_library(grid, 25, 17);
  StratificationParams other;
  other.thermocline_depth_m = 14.5;
  other.seed = 4321;
  const Snapshot x = generate_snapshot(*grid, other);
  const MeasurementOperator op = random_points(grid, 40, 3);
  const Eigen::VectorXd y = apply(op, x, NoiseModel{});

  double previous = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 4; ++k) {
    const PodBasis basis = compute_pod(lib, k);
    REQUIRE(basis.k() == k);
    const ReconstructionResult result = gappy_reconstruct(basis, op, y);
    CHECK(result.residual_norm <= previous + 1e-12);
    previous = result.residual_norm;
  }
}

TEST_CASE("p < k without regularization is an under-determination error") {
  PodBasis toy;
  toy.grid = std::make_shared<FieldGrid>(
      FieldGrid::from_mask(1, 2, 1.0, 1.0, {{true}, {true}}));
  toy.modes = Eigen::MatrixXd::Identity(2, 2);
  toy.singular_values = Eigen::VectorXd::Ones(2);
  toy.mean = Eigen::VectorXd::Zero(2);
  toy.energy_fractions = Eigen::VectorXd::Ones(2);
  toy.requested_k = 2;

  const MeasurementOperator op = explicit_points(toy.grid, {{0, 0}});
  Eigen::VectorXd y(1);
  y << 3.0;
  GappyOptions no_ridge;
  no_ridge.allow_ridge = false;
  CHECK_THROWS_AS(gappy_reconstruct(toy, op, y, no_ridge), NumericalError);

  SUBCASE("with the ridge enabled the same solve succeeds and records mu") {
    const ReconstructionResult result = gappy_reconstruct(toy, op, y);
    CHECK(result.ridge_mu > 0.0);
    CHECK(result.xhat.values.size() == 2);
  }
}

TEST_CASE("ill-conditioned sampled basis triggers the recorded ridge") {
  PodBasis toy;
  toy.grid = std::make_shared<FieldGrid>(FieldGrid::from_mask(
      1, 3, 1.0, 1.0, {{true}, {true}, {true}}));
  Eigen::MatrixXd modes(3, 2);
  // rows 0 and 1 nearly parallel: sampling them gives cond >> 1e8
  modes << 1.0, 1.0,
           1.0, 1.0 + 1e-12,
           0.0, 1.0;
  toy.modes = modes;
  toy.singular_values = Eigen::VectorXd::Ones(2);
  toy.mean = Eigen::VectorXd::Zero(3);
  toy.energy_fractions = Eigen::VectorXd::Ones(2);
  toy.requested_k = 2;

  const MeasurementOperator op = explicit_points(toy.grid, {{0, 0}, {0, 1}});
  Eigen::VectorXd y(2);
  y << 1.0, 1.0;
  const ReconstructionResult result = gappy_reconstruct(toy, op, y);
  CHECK(result.ridge_mu > 0.0);
}

} // TEST_SUITE
