#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "arcobci/cli/config.hpp"
#include "arcobci/metrics.hpp"
#include "arcobci/simgen.hpp"

namespace arcobci::cli {

/// Ground truth plus observational training data for one seed.
struct SimulatedProblem {
  GroundTruthScm scm;
  Eigen::MatrixXd raw;
};

SimulatedProblem simulate_problem(const RunConfig& cfg, std::uint64_t seed);

struct InterventionResult {
  int variable = 0;
  double value = 0.0;
  double mmd = 0.0;
  double mmd2 = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
};

struct SeedResult {
  std::uint64_t seed = 0;
  double eshd = 0.0;
  double empty_graph_shd = 0.0;  // true edge count
  StructureMetrics structure;
  int train_steps = 0;
  std::vector<InterventionResult> interventions;
};

/// Simulate, learn, and evaluate one seed.
SeedResult run_seed(const RunConfig& cfg, std::uint64_t seed);

struct Summary {
  std::string metric;
  double mean = 0.0;
  double half_width = 0.0;  // 1.96 * standard error
  int count = 0;
};

/// mean +- 1.96 * sd / sqrt(n) for each metric across seeds.
std::vector<Summary> summarise(const std::vector<SeedResult>& results);
Summary summarise_values(const std::string& metric, const std::vector<double>& values);

int cmd_simulate(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg);
int cmd_query(const RunConfig& cfg);
int cmd_benchmark(const RunConfig& cfg);

}  // namespace arcobci::cli
