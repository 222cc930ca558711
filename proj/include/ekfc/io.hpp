#pragma once

#include "ekfc/contraction.hpp"
#include "ekfc/ekf.hpp"
#include "ekfc/linalg.hpp"
#include "ekfc/sim.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace ekfc::io {

using json = nlohmann::json;

/// Matrix from JSON: a number s (s·I), a flat array (diagonal) or an array of rows.
Mat matrix_from_json(const json& j, int dim_hint);
/// Vector from JSON: a number (1-vector) or a flat array.
Vec vector_from_json(const json& j);
json to_json(const Mat& m);
json to_json(const Vec& v);

json to_json(const Assumption1Report& r);
json to_json(const HessianBounds& h);
json to_json(const ContractionCertificate& c);
json to_json(const Table1& t);

/// Whitespace-separated rows, one matrix row per nonblank line.
Mat read_matrix_file(const std::filesystem::path& path);

/// 17 significant digits, "inf"/"-inf"/"nan" for non-finite values.
std::string format_number(double v);

/// Header row followed by one row per record; all values formatted with format_number.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void add_row(const std::vector<double>& values);
  void write(std::ostream& os) const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<double>> rows_;
};

/// Columns t, xhat_i, P_ij (i ≤ j), K_ij.
CsvWriter trajectory_csv(const FilterTrajectory& traj);

void write_json(const json& j, const std::filesystem::path& path);

}  // namespace ekfc::io
