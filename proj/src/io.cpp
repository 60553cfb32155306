#include "handsoff/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace handsoff {

using nlohmann::json;

namespace {

[[noreturn]] void parse_fail(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::kParseError, "problem file: " + field + ": " + what, field);
}

double number(const json& v, const std::string& field) {
  if (!v.is_number()) parse_fail(field, "expected a number");
  return v.get<double>();
}

Eigen::VectorXd vector_field(const json& doc, const std::string& key) {
  const json& v = doc.at(key);
  if (!v.is_array()) parse_fail(key, "expected an array of numbers");
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = number(v[i], key + "[" + std::to_string(i) + "]");
  }
  return out;
}

// Rows may differ in length; such matrices are reported as a dimension
// mismatch rather than a parse error.
Eigen::MatrixXd matrix_field(const json& doc, const std::string& key) {
  const json& v = doc.at(key);
  if (!v.is_array() || v.empty()) parse_fail(key, "expected a nonempty array of rows");
  const std::size_t rows = v.size();
  std::size_t cols = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!v[r].is_array()) parse_fail(key + "[" + std::to_string(r) + "]", "expected a row array");
    if (r == 0) cols = v[r].size();
    if (v[r].size() != cols) {
      throw Error(ErrorCode::kDimensionMismatch, key + ": rows have different lengths", key);
    }
  }
  Eigen::MatrixXd M(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          number(v[r][c], key + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
    }
  }
  return M;
}

json matrix_json(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

std::string location(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return std::to_string(line) + ":" + std::to_string(col);
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Problem read_problem(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const std::string loc = location(text, e.byte > 0 ? e.byte - 1 : 0);
    throw Error(ErrorCode::kParseError, "problem file: malformed document at " + loc, loc);
  }
  if (!doc.is_object()) parse_fail("<root>", "expected an object");
  for (const char* key : {"A", "B", "x0", "T", "N"}) {
    if (!doc.contains(key)) parse_fail(key, "missing required field");
  }

  Problem p;
  p.plant.A = matrix_field(doc, "A");
  p.plant.B = matrix_field(doc, "B");
  p.x0 = vector_field(doc, "x0");
  p.T = number(doc.at("T"), "T");

  const json& N = doc.at("N");
  if (N.is_number_unsigned() || N.is_number_integer()) {
    p.N = N.get<Eigen::Index>();
  } else if (N.is_number_float() && std::floor(N.get<double>()) == N.get<double>() &&
             std::abs(N.get<double>()) < 1e15) {
    p.N = static_cast<Eigen::Index>(N.get<double>());
  } else {
    parse_fail("N", "expected an integer");
  }

  if (doc.contains("weights") && !doc.at("weights").is_null()) {
    p.weights = vector_field(doc, "weights");
  } else {
    p.weights = Eigen::VectorXd::Ones(p.plant.B.cols());
  }
  validate_problem(p);
  return p;
}

Problem read_problem_file(const std::filesystem::path& path) {
  return read_problem(read_text_file(path));
}

std::string write_problem(const Problem& p) {
  json doc;
  doc["A"] = matrix_json(p.plant.A);
  doc["B"] = matrix_json(p.plant.B);
  doc["x0"] = vector_json(p.x0);
  doc["T"] = p.T;
  doc["N"] = p.N;
  doc["weights"] = vector_json(p.weights);
  return doc.dump(2) + "\n";
}

namespace {

std::string header(Eigen::Index m, Eigen::Index n) {
  std::string out = "t";
  for (Eigen::Index i = 1; i <= m; ++i) out += ",u" + std::to_string(i);
  for (Eigen::Index i = 1; i <= n; ++i) out += ",x" + std::to_string(i);
  return out + "\n";
}

}  // namespace

std::string write_fine_signal(const Signal& s, const Trajectory& traj, int substeps) {
  if (substeps < 1) {
    throw Error(ErrorCode::kLengthMismatch, "substeps must be >= 1", "substeps");
  }
  if (s.U.size() != s.m * s.N || s.N < 1) {
    throw Error(ErrorCode::kLengthMismatch, "signal length differs from m*N", "U");
  }
  const Eigen::Index samples = s.N * substeps + 1;
  if (traj.cols() != samples || traj.cols() == 0) {
    throw Error(ErrorCode::kLengthMismatch,
                "trajectory has " + std::to_string(traj.cols()) + " samples, expected " +
                    std::to_string(samples),
                "trajectory");
  }
  const double dt = s.h / substeps;
  std::string out = header(s.m, traj.rows());
  for (Eigen::Index k = 0; k < samples; ++k) {
    const Eigen::Index slot = std::min<Eigen::Index>(k / substeps, s.N - 1);
    out += format_double(static_cast<double>(k) * dt);
    for (Eigen::Index i = 0; i < s.m; ++i) out += "," + format_double(s.U[slot * s.m + i]);
    for (Eigen::Index i = 0; i < traj.rows(); ++i) out += "," + format_double(traj(i, k));
    out += "\n";
  }
  return out;
}

std::string write_signal(const Signal& s, const Trajectory& traj) {
  return write_fine_signal(s, traj, 1);
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIoError, "cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw Error(ErrorCode::kIoError, "failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace handsoff
