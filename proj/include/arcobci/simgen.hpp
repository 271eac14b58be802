#pragma once

#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "arcobci/core.hpp"
#include "arcobci/dataset.hpp"
#include "arcobci/gp.hpp"
#include "arcobci/numeric.hpp"

namespace arcobci {

/// Hard intervention do(X_v = value) for each listed pair.
using Intervention = std::vector<std::pair<int, double>>;

struct RootMechanism {
  double mean = 0.0;
  double noise_var = 1.0;
};

/// f(x) = k(x, support) * alpha, the noiseless posterior-mean interpolant
/// through a prior draw at the support points.
struct GpMechanism {
  RqHyper hyper;
  Eigen::MatrixXd support;  // 50 x |Pa|
  Eigen::VectorXd values;   // f at the support points
  Eigen::VectorXd alpha;
  double noise_var = 1.0;

  double operator()(const Eigen::VectorXd& x) const;
};

/// f(x) = sum_j scale_j * u_j / (1 + |u_j|), u_j = slope_j * (x_j + shift_j)
struct SigmoidMechanism {
  std::vector<double> scale;
  std::vector<double> slope;
  std::vector<double> shift;
  double noise_var = 1.0;

  double operator()(const Eigen::VectorXd& x) const;
};

using Mechanism = std::variant<RootMechanism, GpMechanism, SigmoidMechanism>;

enum class MechanismKind { Gp, Sigmoid };

MechanismKind parse_mechanism_kind(const std::string& s);
std::string to_string(MechanismKind kind);

struct GroundTruthScm {
  Dag graph;
  std::vector<Mechanism> mechanisms;

  int size() const { return graph.size(); }
  /// Noise-free mechanism output of `node` given its parents' values.
  double mean_given_parents(int node, const Eigen::VectorXd& parent_values) const;
  double noise_var(int node) const;
};

/// Random order, then each order-consistent edge with p = degree / (d - 1).
Dag sample_er_graph(int d, double expected_degree, Rng& rng);

/// Preferential attachment: node k (0-based) takes min(k, m) distinct parents
/// among earlier nodes with weight out-degree + 1; labels are then shuffled.
Dag sample_sf_graph(int d, int m, Rng& rng);

struct GroundTruthOptions {
  int support_points = 50;
  double support_low = -10.0;
  double support_high = 10.0;
};

GroundTruthScm sample_gt_mechanisms(const Dag& graph, MechanismKind kind, Rng& rng,
                                    const GroundTruthOptions& options = {});

/// n draws (rows) in topological order; each row uses its own stream derived
/// from a draw of `rng`. Throws UnknownVariable.
Eigen::MatrixXd ancestral_sample(const GroundTruthScm& scm, int n, const Intervention& intervention, Rng& rng,
                                 int threads = 1);

void validate_intervention(const Intervention& intervention, int d);

nlohmann::json scm_to_json(const GroundTruthScm& scm);
GroundTruthScm scm_from_json(const nlohmann::json& j);

}  // namespace arcobci
