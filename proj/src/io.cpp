#include "thermofield/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include <nlohmann/json.hpp>

namespace thermofield {

using nlohmann::json;

namespace {

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw FormatError("'" + path + "': " + e.what());
  }
  return doc;
}

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& context) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed)
      if (item.key() == key) known = true;
    if (!known)
      throw FormatError(context + ": unknown key '" + item.key() + "'");
  }
}

} // namespace

FieldGrid load_grid_spec(const std::string& path) {
  const json doc = read_json_file(path);
  if (!doc.is_object()) throw FormatError("'" + path + "': expected a JSON object");
  reject_unknown_keys(doc, {"nx", "nz", "dx_m", "dz_m", "wet_mask", "surface_elevation_m"},
                      "grid spec '" + path + "'");
  for (const char* key : {"nx", "nz", "dx_m", "dz_m", "wet_mask"})
    if (!doc.contains(key))
      throw FormatError("grid spec '" + path + "': missing key '" + key + "'");

  const int nx = doc.at("nx").get<int>();
  const int nz = doc.at("nz").get<int>();
  const double dx = doc.at("dx_m").get<double>();
  const double dz = doc.at("dz_m").get<double>();
  const double elev = doc.value("surface_elevation_m", 0.0);

  const json& mask = doc.at("wet_mask");
  if (!mask.is_array() || static_cast<int>(mask.size()) != nz)
    throw FormatError("grid spec '" + path + "': wet_mask must be an array of nz rows");
  std::vector<std::vector<bool>> rows;
  rows.reserve(mask.size());
  for (int layer = 0; layer < nz; ++layer) {
    const json& row = mask.at(static_cast<std::size_t>(layer));
    if (!row.is_array() || static_cast<int>(row.size()) != nx)
      throw FormatError("grid spec '" + path + "': wet_mask row " +
                        std::to_string(layer) + " must have nx booleans");
    std::vector<bool> flags(static_cast<std::size_t>(nx));
    for (int col = 0; col < nx; ++col) {
      const json& cell = row.at(static_cast<std::size_t>(col));
      if (!cell.is_boolean())
        throw FormatError("grid spec '" + path + "': wet_mask[" +
                          std::to_string(layer) + "][" + std::to_string(col) +
                          "] is not a boolean");
      flags[static_cast<std::size_t>(col)] = cell.get<bool>();
    }
    rows.push_back(std::move(flags));
  }
  return FieldGrid::from_mask(nx, nz, dx, dz, rows, elev);
}

void save_grid_spec(const FieldGrid& grid, const std::string& path) {
  json doc;
  doc["nx"] = grid.nx();
  doc["nz"] = grid.nz();
  doc["dx_m"] = grid.dx_m();
  doc["dz_m"] = grid.dz_m();
  doc["surface_elevation_m"] = grid.surface_elevation_m();
  doc["wet_mask"] = grid.mask_rows();
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << doc.dump(2) << "\n";
  if (!out) throw IoError("failed writing '" + path + "'");
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& token, const std::string& context) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc{} || res.ptr != last)
    throw DataError(context + ": cannot parse '" + token + "' as a number");
  return value;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

} // namespace

SnapshotLibrary load_snapshots(const std::string& csv_path, GridPtr grid) {
  if (!grid) throw ParameterError("load_snapshots: null grid");
  std::ifstream in(csv_path);
  if (!in) throw IoError("cannot open '" + csv_path + "' for reading");

  const int n = grid->n();
  std::string line;
  if (!std::getline(in, line))
    throw FormatError("'" + csv_path + "': empty file, expected a header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header = split_csv_line(line);
  if (static_cast<int>(header.size()) != n + 1 || header[0] != "label")
    throw FormatError("'" + csv_path + "': malformed header, expected 'label,v0,...,v" +
                      std::to_string(n - 1) + "' (" + std::to_string(n) +
                      " value columns), got " + std::to_string(header.size()) +
                      " fields");
  for (int i = 0; i < n; ++i) {
    const std::string expected = "v" + std::to_string(i);
    if (header[static_cast<std::size_t>(i + 1)] != expected)
      throw FormatError("'" + csv_path + "': header column " +
                        std::to_string(i + 1) + " is '" +
                        header[static_cast<std::size_t>(i + 1)] + "', expected '" +
                        expected + "'");
  }

  std::vector<std::string> labels;
  std::vector<Eigen::VectorXd> rows;
  int row_number = 1; // header was row 0
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      ++row_number;
      continue;
    }
    const auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) != n + 1)
      throw ShapeError("'" + csv_path + "' row " + std::to_string(row_number) +
                       ": has " + std::to_string(fields.size() - 1) +
                       " values, grid needs " + std::to_string(n));
    Eigen::VectorXd values(n);
    for (int i = 0; i < n; ++i) {
      const std::string context =
          "'" + csv_path + "' row " + std::to_string(row_number) + " column v" +
          std::to_string(i);
      const double v = parse_double(fields[static_cast<std::size_t>(i + 1)], context);
      if (!std::isfinite(v))
        throw DataError(context + ": non-finite value");
      values[i] = v;
    }
    labels.push_back(fields[0]);
    rows.push_back(std::move(values));
    ++row_number;
  }
  if (rows.empty())
    throw FormatError("'" + csv_path + "': no snapshot rows");

  Eigen::MatrixXd columns(n, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t j = 0; j < rows.size(); ++j)
    columns.col(static_cast<Eigen::Index>(j)) = rows[j];
  return make_library(std::move(grid), std::move(columns), std::move(labels));
}

SnapshotLibrary load_snapshots(const std::string& csv_path,
                               const std::string& grid_spec_path) {
  auto grid = std::make_shared<FieldGrid>(load_grid_spec(grid_spec_path));
  return load_snapshots(csv_path, std::move(grid));
}

void save_snapshots(const SnapshotLibrary& lib, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "label";
  for (int i = 0; i < lib.n(); ++i) out << ",v" << i;
  out << "\n";
  for (int j = 0; j < lib.r(); ++j) {
    const std::string& label = lib.labels[static_cast<std::size_t>(j)];
    if (label.find_first_of(",\n\r") != std::string::npos)
      throw FormatError("save_snapshots: label '" + label +
                        "' contains a comma or newline");
    out << label;
    for (int i = 0; i < lib.n(); ++i)
      out << ',' << format_double(lib.columns(i, j));
    out << "\n";
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

} // namespace thermofield
