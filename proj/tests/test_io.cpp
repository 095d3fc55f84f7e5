#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "thermofield/io.hpp"

using namespace thermofield;
namespace fs = std::filesystem;

namespace {

fs::path test_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("thermofield_io_" + name);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

GridPtr all_wet_2x2() {
  return std::make_shared<FieldGrid>(
      FieldGrid::from_mask(2, 2, 1.0, 1.0, {{true, true}, {true, true}}));
}

} // namespace

TEST_SUITE("io") {

TEST_CASE("grid spec survives a save/load round trip") {
  const fs::path dir = test_dir("gridspec");
  const FieldGrid grid = FieldGrid::default_reservoir();
  save_grid_spec(grid, (dir / "grid.json").string());
  const FieldGrid back = load_grid_spec((dir / "grid.json").string());
  CHECK(back.same_layout(grid));
  CHECK(back.n() == grid.n());
}

TEST_CASE("grid spec rejects unknown keys and missing keys") {
  const fs::path dir = test_dir("gridspec_bad");
  write_file(dir / "extra.json",
             R"({"nx":1,"nz":1,"dx_m":1,"dz_m":1,"wet_mask":[[true]],"bogus":1})");
  CHECK_THROWS_AS(load_grid_spec((dir / "extra.json").string()), FormatError);
  write_file(dir / "missing.json", R"({"nx":1,"nz":1,"dx_m":1,"dz_m":1})");
  CHECK_THROWS_AS(load_grid_spec((dir / "missing.json").string()), FormatError);
}

TEST_CASE("two 4-value rows load as a 4x2 library") {
  const fs::path dir = test_dir("load_ok");
  write_file(dir / "snaps.csv",
             "label,v0,v1,v2,v3\n"
             "rowA,1,2,3,4\n"
             "rowB,5,6,7,8\n");
  const SnapshotLibrary lib = load_snapshots((dir / "snaps.csv").string(), all_wet_2x2());
  CHECK(lib.n() == 4);
  CHECK(lib.r() == 2);
  CHECK_FALSE(lib.centered);
  CHECK(lib.labels[0] == "rowA");
  CHECK(lib.columns(3, 1) == 8.0);
}

TEST_CASE("malformed header is a format error") {
  const fs::path dir = test_dir("bad_header");
  write_file(dir / "snaps.csv", "label,v0,v1,v2\nrowA,1,2,3\n");
  CHECK_THROWS_AS(load_snapshots((dir / "snaps.csv").string(), all_wet_2x2()),
                  FormatError);
  write_file(dir / "snaps2.csv", "name,v0,v1,v2,v3\nrowA,1,2,3,4\n");
  CHECK_THROWS_AS(load_snapshots((dir / "snaps2.csv").string(), all_wet_2x2()),
                  FormatError);
}

TEST_CASE("short row is a shape error naming the row") {
  const fs::path dir = test_dir("short_row");
  write_file(dir / "snaps.csv",
             "label,v0,v1,v2,v3\n"
             "rowA,1,2,3,4\n"
             "rowB,1,2,3\n");
  try {
    load_snapshots((dir / "snaps.csv").string(), all_wet_2x2());
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
}

TEST_CASE("masked grid loads rows sized to the wet count") {
  const fs::path dir = test_dir("masked");
  auto grid = std::make_shared<FieldGrid>(
      FieldGrid::from_mask(2, 2, 1.0, 1.0, {{true, true}, {true, false}}));
  write_file(dir / "snaps.csv", "label,v0,v1,v2\nrowA,1,2,3\n");
  const SnapshotLibrary lib = load_snapshots((dir / "snaps.csv").string(), grid);
  CHECK(lib.n() == 3);
  CHECK(lib.r() == 1);
}

TEST_CASE("non-finite value is a data error naming row and column") {
  const fs::path dir = test_dir("nonfinite");
  write_file(dir / "snaps.csv", "label,v0,v1,v2,v3\nrowA,1,nan,3,4\n");
  try {
    load_snapshots((dir / "snaps.csv").string(), all_wet_2x2());
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string what = e.what();
    CHECK(what.find("row 1") != std::string::npos);
    CHECK(what.find("v1") != std::string::npos);
  }
}

TEST_CASE("save/load round trip is bit-identical") {
  const fs::path dir = test_dir("roundtrip");
  auto grid = all_wet_2x2();
  Eigen::MatrixXd cols(4, 3);
  cols << 0.1, 1.0 / 3.0, -2.5e300,
          1e-17, 22.125, 6.02214076e23,
          -0.0, 3.141592653589793, 1.0,
          123456789.123456789, -1e-308, 2.2250738585072014e-308;
  const SnapshotLibrary lib = make_library(grid, cols, {"a", "b", "c"});
  save_snapshots(lib, (dir / "snaps.csv").string());
  const SnapshotLibrary back = load_snapshots((dir / "snaps.csv").string(), grid);
  REQUIRE(back.r() == 3);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(back.columns(i, j) == lib.columns(i, j));

  SUBCASE("a second save is byte-identical") {
    save_snapshots(back, (dir / "snaps2.csv").string());
    std::ifstream a(dir / "snaps.csv"), b(dir / "snaps2.csv");
    const std::string sa((std::istreambuf_iterator<char>(a)),
                         std::istreambuf_iterator<char>());
    const std::string sb((std::istreambuf_iterator<char>(b)),
                         std::istreambuf_iterator<char>());
    CHECK(sa == sb);
  }
}

TEST_CASE("labels with commas are rejected on save") {
  auto grid = all_wet_2x2();
  Eigen::MatrixXd cols = Eigen::MatrixXd::Ones(4, 1);
  const SnapshotLibrary lib = make_library(grid, cols, {"bad,label"});
  const fs::path dir = test_dir("badlabel");
  CHECK_THROWS_AS(save_snapshots(lib, (dir / "snaps.csv").string()), FormatError);
}

} // TEST_SUITE
