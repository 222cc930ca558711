#include "ekfc/io.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <sstream>

namespace ekfc::io {

namespace {

json number_or_null(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? json("inf") : v < 0 ? json("-inf") : json(nullptr);
}

}  // namespace

Mat matrix_from_json(const json& j, int dim_hint) {
  if (j.is_number()) {
    if (dim_hint <= 0) throw ConfigError("scalar matrix shorthand needs a known dimension");
    return j.get<double>() * Mat::Identity(dim_hint, dim_hint);
  }
  if (!j.is_array() || j.empty()) throw ConfigError("matrix must be a number or a nonempty array");
  if (!j.front().is_array()) {
    Vec d(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (!j[i].is_number()) throw ConfigError("diagonal entries must be numbers");
      d(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return d.asDiagonal();
  }
  const std::size_t rows = j.size();
  const std::size_t cols = j.front().size();
  Mat m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw ConfigError("matrix rows must have equal length");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) throw ConfigError("matrix entries must be numbers");
      m(r, c) = j[r][c].get<double>();
    }
  }
  return m;
}

Vec vector_from_json(const json& j) {
  if (j.is_number()) return Vec::Constant(1, j.get<double>());
  if (!j.is_array() || j.empty()) throw ConfigError("vector must be a number or a nonempty array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError("vector entries must be numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

json to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json to_json(const Assumption1Report& r) {
  return {{"p_lo", r.p_lo},         {"p_hi", r.p_hi},
          {"q_lo", r.q_lo},         {"positive", r.positive},
          {"grid_verified", r.grid_verified}};
}

json to_json(const HessianBounds& h) {
  return {{"alpha", number_or_null(h.alpha)},
          {"kappa_A", h.kappa_A},
          {"kappa_C", h.kappa_C},
          {"certified", h.certified}};
}

json to_json(const ContractionCertificate& c) {
  return {{"gamma", c.gamma},
          {"zeta_plus", number_or_null(c.zeta_plus)},
          {"rho", number_or_null(c.rho)},
          {"alpha", number_or_null(c.alpha)},
          {"kappa_A", c.kappa_A},
          {"kappa_C", c.kappa_C},
          {"p_lo", c.p_lo},
          {"p_hi", c.p_hi},
          {"q_lo", c.q_lo},
          {"r_lo", c.r_lo},
          {"basin_euclid", number_or_null(c.basin_euclid)},
          {"envelope_factor", c.envelope_factor},
          {"grid_verified", c.grid_verified},
          {"kappa_certified", c.kappa_certified}};
}

json to_json(const Table1& t) {
  auto row = [](const Table1Row& r) {
    json j = {{"label", r.label},
              {"rate", number_or_null(r.rate)},
              {"basin_kappa_C_zero", number_or_null(r.basin_kappa_C_zero)}};
    j["basin_kappa_A_zero"] =
        r.basin_kappa_A_zero ? number_or_null(*r.basin_kappa_A_zero) : json("unavailable");
    return j;
  };
  return {{"lyapunov", row(t.lyapunov)}, {"contraction", row(t.contraction)}};
}

Mat read_matrix_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open matrix file " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::vector<double> row;
    std::string tok;
    while (ss >> tok) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ConfigError("matrix file " + path.string() + ": bad number '" + tok + "'");
      }
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError("matrix file " + path.string() + " is empty");
  Mat m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows.front().size()) {
      throw ConfigError("matrix file " + path.string() + ": ragged rows");
    }
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", v);
}

CsvWriter::CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvWriter::add_row(const std::vector<double>& values) {
  if (values.size() != header_.size()) throw std::logic_error("CsvWriter: row width mismatch");
  rows_.push_back(values);
}

void CsvWriter::write(std::ostream& os) const {
  for (std::size_t i = 0; i < header_.size(); ++i) os << (i ? "," : "") << header_[i];
  os << '\n';
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_number(row[i]);
    os << '\n';
  }
}

void CsvWriter::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write(out);
}

CsvWriter trajectory_csv(const FilterTrajectory& traj) {
  if (traj.size() == 0) return CsvWriter({"t"});
  const Eigen::Index n = traj.xhat.front().size();
  const Eigen::Index p = traj.K.front().cols();
  std::vector<std::string> header{"t"};
  for (Eigen::Index i = 0; i < n; ++i) header.push_back(fmt::format("xhat_{}", i));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) header.push_back(fmt::format("P_{}{}", i, j));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) header.push_back(fmt::format("K_{}{}", i, j));

  CsvWriter csv(std::move(header));
  for (std::size_t k = 0; k < traj.size(); ++k) {
    std::vector<double> row{traj.times[k]};
    for (Eigen::Index i = 0; i < n; ++i) row.push_back(traj.xhat[k](i));
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i; j < n; ++j) row.push_back(traj.P[k](i, j));
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < p; ++j) row.push_back(traj.K[k](i, j));
    csv.add_row(row);
  }
  return csv;
}

void write_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace ekfc::io
