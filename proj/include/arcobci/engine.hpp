#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include <json.hpp>

#include "arcobci/arco_trainer.hpp"
#include "arcobci/dataset.hpp"
#include "arcobci/mechanism_cache.hpp"
#include "arcobci/metrics.hpp"
#include "arcobci/order_marginal.hpp"
#include "arcobci/simgen.hpp"

namespace arcobci {

struct EngineConfig {
  int max_parents = 2;
  int batch_size = 100;
  int max_arco_steps = 400;
  double arco_lr = 0.01;
  int gp_steps = 100;
  double gp_lr = 0.05;
  double ema_decay = 0.9;
  std::uint64_t seed = 0;
  int hidden_units = ArcoParams::kDefaultHidden;
  double prior_std = ArcoParams::kDefaultPriorStd;
  // Plateau stop: max weight and batch log-evidence both move less than
  // plateau_tolerance for `patience` consecutive steps.
  int patience = 20;
  double plateau_tolerance = 1e-4;
  int inference_orders = 100;
  int threads = 1;
  MechanismPriors priors;

  /// Throws ConfigError.
  void validate() const;
  GpFitOptions gp_options() const;
};

nlohmann::json config_to_json(const EngineConfig& c);
EngineConfig config_from_json(const nlohmann::json& j);

struct TrainingRecord {
  int step = 0;
  double log_evidence = 0.0;
  double max_weight = 0.0;
  double baseline = 0.0;
};

struct PosteriorModel {
  EngineConfig config;
  Dataset data;  // standardised
  ArcoTrainState state;
  std::shared_ptr<MechanismCache> cache = std::make_shared<MechanismCache>();
  Rng rng;  // training stream
  std::vector<TrainingRecord> history;
  int stable_steps = 0;
  bool converged = false;

  const ArcoParams& arco() const { return state.params; }
  int d() const { return data.cols(); }
  bool finished() const { return converged || state.step >= config.max_arco_steps; }
};

/// Standardises the data and initialises parameters from config.seed.
PosteriorModel init_model(const Dataset& data, const EngineConfig& config);

/// Trains until finished, or for at most `step_budget` further steps when
/// step_budget >= 0. Returns the number of steps taken.
int continue_learning(PosteriorModel& model, int step_budget = -1);

PosteriorModel learn(const Dataset& data, const EngineConfig& config);

/// Log order scores for a batch. Missing mechanisms are fitted first (in
/// parallel, inserted in key order). Optionally returns one table per order.
std::vector<double> score_orders(const std::vector<CausalOrder>& orders, MechanismCache& cache, const Dataset& data,
                                 const EngineConfig& config,
                                 std::vector<std::shared_ptr<const ParentSetTable>>* tables = nullptr);

/// Weighted orders with their tables.
struct OrderPosterior {
  WeightedOrderEnsemble ensemble;
  std::vector<std::shared_ptr<const ParentSetTable>> tables;
};

OrderPosterior posterior_orders(const PosteriorModel& model, int n_orders, Rng& rng);
/// config.inference_orders fresh orders from a stream fixed by config.seed.
OrderPosterior posterior_orders(const PosteriorModel& model);

Eigen::MatrixXd posterior_edge_marginals(const OrderPosterior& posterior);
Eigen::MatrixXd posterior_edge_marginals(const PosteriorModel& model);

/// |Pa_i symmetric-difference Pa_i^ref| summed over nodes, in expectation.
double expected_shd(const OrderPosterior& posterior, const Dag& reference);
double expected_shd(const PosteriorModel& model, const Dag& reference);

struct SamplingShape {
  int orders = 100;
  int graphs = 10;
  int samples = 10;
};

/// Orders -> graphs -> ancestral predictive draws with intervened nodes
/// clamped. Values are in raw units on both sides.
WeightedSampleSet sample_interventional(const PosteriorModel& model, const Intervention& intervention,
                                        const SamplingShape& shape, Rng& rng);

double ace(const PosteriorModel& model, const Intervention& intervention, int target, const SamplingShape& shape,
           Rng& rng);

}  // namespace arcobci
