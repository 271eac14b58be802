#include "arcobci/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "arcobci/error.hpp"

namespace arcobci {

WeightedSampleSet WeightedSampleSet::uniform(Eigen::MatrixXd samples) {
  WeightedSampleSet s;
  const auto n = samples.rows();
  s.samples = std::move(samples);
  s.weights = Eigen::VectorXd::Constant(n, n > 0 ? 1.0 / static_cast<double>(n) : 0.0);
  return s;
}

void WeightedSampleSet::validate() const {
  if (weights.size() != samples.rows()) throw Error(ErrorCode::WeightMismatch, "one weight per sample required");
  if ((weights.array() < 0.0).any()) throw Error(ErrorCode::WeightMismatch, "negative sample weight");
  if (std::abs(weights.sum() - 1.0) > 1e-9) throw Error(ErrorCode::WeightMismatch, "sample weights must sum to 1");
}

std::optional<double> auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = avg;
    i = j + 1;
  }
  double pos = 0.0, rank_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i]) {
      pos += 1.0;
      rank_sum += rank[i];
    }
  }
  const double neg = static_cast<double>(n) - pos;
  if (pos == 0.0 || neg == 0.0) return std::nullopt;
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

std::optional<double> auprc(const std::vector<double>& scores, const std::vector<int>& labels) {
  const std::size_t n = scores.size();
  const double pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  if (pos == 0.0 || pos == static_cast<double>(n)) return std::nullopt;
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double tp = 0.0, fp = 0.0, prev_recall = 0.0, ap = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] ? tp : fp) += 1.0;
      ++j;
    }
    const double recall = tp / pos;
    ap += (recall - prev_recall) * tp / (tp + fp);
    prev_recall = recall;
    i = j;
  }
  return ap;
}

int structural_hamming_distance(const Dag& a, const Dag& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::DimensionMismatch, "graphs differ in size");
  int shd = 0;
  for (int i = 0; i < a.size(); ++i) {
    for (int j = 0; j < a.size(); ++j) {
      if (a.has_edge(j, i) != b.has_edge(j, i)) ++shd;
    }
  }
  return shd;
}

StructureMetrics structure_metrics(const Eigen::MatrixXd& edge_marginals, const Dag& reference, double threshold) {
  const int d = reference.size();
  if (edge_marginals.rows() != d || edge_marginals.cols() != d) {
    throw Error(ErrorCode::DimensionMismatch, "marginals must be d x d");
  }
  std::vector<double> scores;
  std::vector<int> labels;
  double tp = 0, fn = 0, tn = 0, fp = 0;
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < d; ++i) {
      if (i == j) continue;
      const double p = edge_marginals(j, i);
      const int truth = reference.has_edge(j, i) ? 1 : 0;
      scores.push_back(p);
      labels.push_back(truth);
      const bool hit = p > threshold;
      if (truth) (hit ? tp : fn) += 1.0;
      else (hit ? fp : tn) += 1.0;
    }
  }
  StructureMetrics m;
  m.auroc = auroc(scores, labels);
  m.auprc = auprc(scores, labels);
  m.tpr = tp + fn > 0 ? tp / (tp + fn) : 1.0;
  m.tnr = tn + fp > 0 ? tn / (tn + fp) : 1.0;
  m.expected_edges = edge_marginals.sum() - edge_marginals.diagonal().sum();
  int shd = 0;
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i)
      if (i != j && (edge_marginals(j, i) > threshold) != reference.has_edge(j, i)) ++shd;
  m.shd = shd;
  return m;
}

double mmd_kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const MmdKernelConfig& kernel) {
  return kernel.scale * std::exp(-(a - b).squaredNorm() / (2.0 * kernel.lengthscale));
}

MmdResult mmd(const WeightedSampleSet& left, const Eigen::MatrixXd& right, const MmdKernelConfig& kernel) {
  left.validate();
  const Eigen::Index n = left.samples.rows();
  const Eigen::Index m = right.rows();
  if (n < 2 || m < 2) throw Error(ErrorCode::TooFewSamples, "mmd needs at least two samples per side");
  if (left.samples.cols() != right.cols()) throw Error(ErrorCode::DimensionMismatch, "sample dimensions differ");
  const auto& x = left.samples;
  const auto& w = left.weights;
  auto k = [&](const auto& a, const auto& b) {
    return kernel.scale * std::exp(-(a - b).squaredNorm() / (2.0 * kernel.lengthscale));
  };
  const double total = w.sum();

  double t1 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double others = total - w(i);
    if (w(i) == 0.0 || others <= 0.0) continue;
    double row = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i && w(j) != 0.0) row += w(j) * k(x.row(i), x.row(j));
    t1 += w(i) * row / others;
  }
  double t2 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (w(i) == 0.0) continue;
    double row = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) row += k(x.row(i), right.row(j));
    t2 += w(i) * row;
  }
  t2 *= 2.0 / static_cast<double>(m);
  double t3 = 0.0;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      if (j != i) t3 += k(right.row(i), right.row(j));
  t3 /= static_cast<double>(m) * static_cast<double>(m - 1);

  MmdResult r;
  r.mmd2 = t1 - t2 + t3;
  r.mmd = std::sqrt(std::max(0.0, r.mmd2));
  return r;
}

double mean_distance(const WeightedSampleSet& left, const Eigen::MatrixXd& right, int p) {
  left.validate();
  if (left.samples.cols() != right.cols()) throw Error(ErrorCode::DimensionMismatch, "sample dimensions differ");
  if (right.rows() < 1) throw Error(ErrorCode::TooFewSamples, "empty reference sample");
  const Eigen::VectorXd diff = left.samples.transpose() * left.weights - right.colwise().mean().transpose();
  if (p == 1) return diff.lpNorm<1>();
  if (p == 2) return diff.norm();
  throw Error(ErrorCode::InvalidArgument, "p must be 1 or 2");
}

Eigen::VectorXd kde(const Eigen::VectorXd& samples, const Eigen::VectorXd& weights, double bandwidth,
                    const Eigen::VectorXd& eval_points) {
  if (!(bandwidth > 0.0)) throw Error(ErrorCode::InvalidArgument, "bandwidth must be positive");
  if (samples.size() != weights.size()) throw Error(ErrorCode::WeightMismatch, "one weight per sample required");
  const double norm = 1.0 / (bandwidth * std::sqrt(2.0 * std::numbers::pi));
  Eigen::VectorXd out(eval_points.size());
  for (Eigen::Index e = 0; e < eval_points.size(); ++e) {
    const Eigen::ArrayXd z = (samples.array() - eval_points(e)) / bandwidth;
    out(e) = norm * (weights.array() * (-0.5 * z.square()).exp()).sum();
  }
  return out;
}

nlohmann::json to_json(const StructureMetrics& m) {
  nlohmann::json j;
  j["auroc"] = m.auroc ? nlohmann::json(*m.auroc) : nlohmann::json(nullptr);
  j["auprc"] = m.auprc ? nlohmann::json(*m.auprc) : nlohmann::json(nullptr);
  j["tpr"] = m.tpr;
  j["tnr"] = m.tnr;
  j["shd"] = m.shd;
  j["expected_edges"] = m.expected_edges;
  return j;
}

}  // namespace arcobci
