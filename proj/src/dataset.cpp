#include "arcobci/dataset.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "arcobci/error.hpp"

namespace arcobci {

Dataset::Dataset(Eigen::MatrixXd raw)
    : values(std::move(raw)),
      offset(Eigen::VectorXd::Zero(values.cols())),
      scale(Eigen::VectorXd::Ones(values.cols())) {}

Eigen::MatrixXd Dataset::raw_values() const {
  Eigen::MatrixXd raw = values;
  for (int j = 0; j < cols(); ++j) raw.col(j) = raw.col(j).array() * scale(j) + offset(j);
  return raw;
}

Dataset standardize(const Dataset& data) {
  const int n = data.rows();
  if (n < 2) throw Error(ErrorCode::TooFewSamples, "standardisation needs N >= 2");
  Dataset out;
  out.values = data.values;
  out.offset = data.offset;
  out.scale = data.scale;
  for (int j = 0; j < data.cols(); ++j) {
    const double mean = data.values.col(j).mean();
    const double var = (data.values.col(j).array() - mean).square().sum() / n;
    double sd = std::sqrt(var);
    if (!(sd > 0.0)) {
      sd = 1.0;
      out.constant_columns.push_back(j);
    }
    out.values.col(j) = (data.values.col(j).array() - mean) / sd;
    out.offset(j) = data.offset(j) + data.scale(j) * mean;
    out.scale(j) = data.scale(j) * sd;
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error(ErrorCode::InvalidArgument, "cannot format double");
  return std::string(buf, ptr);
}

double parse_double(const std::string& text) {
  std::size_t b = 0, e = text.size();
  while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
  if (b < e && text[b] == '+') ++b;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data() + b, text.data() + e, v);
  if (ec != std::errc() || ptr != text.data() + e) {
    throw Error(ErrorCode::ParseError, "not a number: '" + text + "'");
  }
  return v;
}

std::string format_csv(const Eigen::MatrixXd& values) {
  std::string out;
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    out += (j ? ",X" : "X") + std::to_string(j);
  }
  out += '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      if (j) out += ',';
      out += format_double(values(i, j));
    }
    out += '\n';
  }
  return out;
}

Dataset parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "empty csv");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  int d = 0;
  {
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) ++d;
  }
  if (d == 0) throw Error(ErrorCode::ParseError, "csv header has no columns");
  std::vector<double> flat;
  int rows = 0;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    int c = 0;
    while (std::getline(ls, cell, ',')) {
      flat.push_back(parse_double(cell));
      ++c;
    }
    if (c != d) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": expected " +
                                             std::to_string(d) + " fields, got " + std::to_string(c));
    }
    ++rows;
  }
  Eigen::MatrixXd values(rows, d);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < d; ++j) values(i, j) = flat[static_cast<std::size_t>(i * d + j)];
  return Dataset(std::move(values));
}

Dataset read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

void write_csv(const Eigen::MatrixXd& values, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << format_csv(values);
}

}  // namespace arcobci
