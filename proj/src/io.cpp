#include "lisvar/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace lisvar {

double round9(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return std::strtod(buf, nullptr);
}

std::string format9(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

[[noreturn]] void csv_error(const std::string& path, int line, const std::string& msg) {
  throw ParseError(path + ":" + std::to_string(line) + ": " + msg);
}

}  // namespace

Eigen::MatrixXd read_data_csv(const std::string& path, std::vector<std::string>* names) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open");
  std::string line;
  if (!std::getline(in, line)) csv_error(path, 1, "missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split_csv_line(line);
  if (header.empty()) csv_error(path, 1, "empty header row");
  if (names) *names = header;
  const std::size_t n = header.size();

  std::vector<double> values;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != n)
      csv_error(path, lineno,
                "expected " + std::to_string(n) + " fields, got " +
                    std::to_string(fields.size()));
    for (const auto& f : fields) {
      if (f.empty()) csv_error(path, lineno, "missing value");
      char* end = nullptr;
      const double v = std::strtod(f.c_str(), &end);
      if (end != f.c_str() + f.size()) csv_error(path, lineno, "not a number: '" + f + "'");
      if (!std::isfinite(v)) csv_error(path, lineno, "non-finite value");
      values.push_back(v);
    }
  }
  const std::size_t rows = values.size() / n;
  if (rows == 0) csv_error(path, lineno, "no data rows");
  Eigen::MatrixXd data(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < n; ++c)
      data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = values[r * n + c];
  return data;
}

void write_data_csv(const std::string& path, const Eigen::MatrixXd& data,
                    const std::vector<std::string>& names) {
  std::ofstream out(path);
  if (!out) throw Error(path + ": cannot open for writing");
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    if (c) out << ',';
    if (static_cast<std::size_t>(c) < names.size())
      out << names[static_cast<std::size_t>(c)];
    else
      out << "y" << (c + 1);
  }
  out << '\n';
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.cols(); ++c) {
      if (c) out << ',';
      out << format9(data(r, c));
    }
    out << '\n';
  }
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(round9(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw ParseError(what + ": expected an array of rows");
  const std::size_t rows = j.size(), cols = j[0].size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw ParseError(what + ": ragged rows");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) throw ParseError(what + ": non-numeric entry");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
  }
  return m;
}

nlohmann::json to_json(const ReducedForm& rf) {
  return {{"n", rf.n}, {"p", rf.p}, {"B", matrix_to_json(rf.coeffs)},
          {"Sigma", matrix_to_json(rf.sigma)}};
}

nlohmann::json to_json(const HsvarReducedForm& rf) {
  return {{"n", rf.n},       {"p", rf.p},
          {"t_break", rf.t_break}, {"B", matrix_to_json(rf.coeffs)},
          {"Sigma1", matrix_to_json(rf.sigma1)}, {"Sigma2", matrix_to_json(rf.sigma2)}};
}

nlohmann::json to_json(const StructuralParams& sp) {
  return {{"A0", matrix_to_json(sp.a0)}, {"Aplus", matrix_to_json(sp.aplus)}};
}

ReducedForm reduced_form_from_json(const nlohmann::json& j) {
  for (const char* key : {"n", "p", "B", "Sigma"})
    if (!j.contains(key)) throw ParseError(std::string("reduced form: missing '") + key + "'");
  ReducedForm rf;
  rf.n = j["n"].get<int>();
  rf.p = j["p"].get<int>();
  rf.coeffs = matrix_from_json(j["B"], "B");
  rf.sigma = matrix_from_json(j["Sigma"], "Sigma");
  rf.validate();
  return rf;
}

HsvarReducedForm hsvar_from_json(const nlohmann::json& j) {
  for (const char* key : {"n", "p", "t_break", "B", "Sigma1", "Sigma2"})
    if (!j.contains(key))
      throw ParseError(std::string("regime-break form: missing '") + key + "'");
  HsvarReducedForm rf;
  rf.n = j["n"].get<int>();
  rf.p = j["p"].get<int>();
  rf.t_break = j["t_break"].get<int>();
  rf.coeffs = matrix_from_json(j["B"], "B");
  rf.sigma1 = matrix_from_json(j["Sigma1"], "Sigma1");
  rf.sigma2 = matrix_from_json(j["Sigma2"], "Sigma2");
  rf.validate();
  return rf;
}

StructuralParams structural_from_json(const nlohmann::json& j) {
  for (const char* key : {"A0", "Aplus"})
    if (!j.contains(key))
      throw ParseError(std::string("structural params: missing '") + key + "'");
  StructuralParams sp;
  sp.a0 = matrix_from_json(j["A0"], "A0");
  sp.aplus = matrix_from_json(j["Aplus"], "Aplus");
  sp.validate();
  return sp;
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw Error(path + ": cannot open for writing");
  out << j.dump(2) << '\n';
}

}  // namespace lisvar
