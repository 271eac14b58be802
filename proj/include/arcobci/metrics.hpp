#pragma once

#include <optional>

#include <Eigen/Dense>
#include <json.hpp>

#include "arcobci/core.hpp"

namespace arcobci {

/// Rows of `samples` with nonnegative weights summing to one.
struct WeightedSampleSet {
  Eigen::MatrixXd samples;
  Eigen::VectorXd weights;

  static WeightedSampleSet uniform(Eigen::MatrixXd samples);
  void validate() const;
};

struct StructureMetrics {
  std::optional<double> auroc;  // absent when the reference has no positives or no negatives
  std::optional<double> auprc;
  double tpr = 0.0;
  double tnr = 0.0;
  double shd = 0.0;             // of the thresholded graph
  double expected_edges = 0.0;  // sum of marginals
};

/// Scores all ordered pairs i != j. Thresholding predicts an edge when the
/// marginal exceeds `threshold`.
StructureMetrics structure_metrics(const Eigen::MatrixXd& edge_marginals, const Dag& reference,
                                   double threshold = 0.5);

/// Mann-Whitney AUROC with average ranks for ties.
std::optional<double> auroc(const std::vector<double>& scores, const std::vector<int>& labels);
/// Average precision over distinct score thresholds.
std::optional<double> auprc(const std::vector<double>& scores, const std::vector<int>& labels);

/// Parent-set symmetric difference summed over nodes; a reversed edge counts twice.
int structural_hamming_distance(const Dag& a, const Dag& b);

struct MmdKernelConfig {
  double scale = 1000.0;      // delta
  double lengthscale = 0.2;   // gamma
};

/// k(x, x') = scale * exp(-|x - x'|^2 / (2 lengthscale))
double mmd_kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const MmdKernelConfig& kernel);

struct MmdResult {
  double mmd2 = 0.0;  // raw estimator, may be negative
  double mmd = 0.0;   // sqrt(max(0, mmd2))
};

/// Weighted-vs-unweighted MMD^2 estimator. Throws TooFewSamples.
MmdResult mmd(const WeightedSampleSet& left, const Eigen::MatrixXd& right, const MmdKernelConfig& kernel = {});

/// |weighted mean(left) - mean(right)|_p for p in {1, 2}.
double mean_distance(const WeightedSampleSet& left, const Eigen::MatrixXd& right, int p);

/// Weighted Gaussian KDE of one-dimensional samples.
Eigen::VectorXd kde(const Eigen::VectorXd& samples, const Eigen::VectorXd& weights, double bandwidth,
                    const Eigen::VectorXd& eval_points);

inline constexpr double kDefaultKdeBandwidth = 0.2;

nlohmann::json to_json(const StructureMetrics& m);

}  // namespace arcobci
