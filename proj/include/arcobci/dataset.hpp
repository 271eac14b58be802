#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace arcobci {

/// N x d observations plus the affine map back to raw units:
/// raw = values * scale + offset, column-wise.
struct Dataset {
  Eigen::MatrixXd values;
  Eigen::VectorXd offset;  // per-column mean removed so far (zero if raw)
  Eigen::VectorXd scale;   // per-column std divided out so far (one if raw)
  std::vector<int> constant_columns;

  Dataset() = default;
  /// Raw data with identity standardisation.
  explicit Dataset(Eigen::MatrixXd raw);

  int rows() const { return static_cast<int>(values.rows()); }
  int cols() const { return static_cast<int>(values.cols()); }

  double to_standard(int col, double raw) const { return (raw - offset(col)) / scale(col); }
  double to_raw(int col, double standard) const { return standard * scale(col) + offset(col); }
  Eigen::MatrixXd raw_values() const;
};

/// Per-column z-scoring with the population (1/N) standard deviation.
/// Constant columns are centred, keep std 1 and are listed in
/// constant_columns. Composes with any standardisation already applied.
Dataset standardize(const Dataset& data);

/// CSV with header X0,...,X{d-1}; values written in shortest round-trip form.
Dataset read_csv(const std::string& path);
void write_csv(const Eigen::MatrixXd& values, const std::string& path);
Dataset parse_csv(const std::string& text);
std::string format_csv(const Eigen::MatrixXd& values);

/// Shortest round-trip decimal representation; locale independent.
std::string format_double(double v);
double parse_double(const std::string& text);

}  // namespace arcobci
