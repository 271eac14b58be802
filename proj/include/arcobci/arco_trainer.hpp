#pragma once

#include <functional>
#include <vector>

#include "arcobci/arco.hpp"

namespace arcobci {

/// Optimiser state for MAP ascent on the order-model parameters.
struct ArcoTrainState {
  ArcoParams params;
  double baseline = 0.0;
  int step = 0;
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  double learning_rate = 0.01;
  double ema_decay = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  ArcoTrainState() = default;
  explicit ArcoTrainState(ArcoParams initial, double lr = 0.01, double decay = 0.9);
};

/// Ascent direction for one batch:
///   -theta / sigma^2 + sum_m (w_m - baseline / M) * grad log p(L_m | theta).
/// An empty batch yields the prior term alone. Throws WeightMismatch.
ArcoGradient arco_gradient(const ArcoTrainState& state, const std::vector<CausalOrder>& orders,
                           const std::vector<double>& weights);

/// One Adam ascent step with the gradient above; afterwards the baseline
/// absorbs the batch objective sum_m w_m with the EMA decay.
ArcoTrainState arco_update(ArcoTrainState state, const std::vector<CausalOrder>& orders,
                           const std::vector<double>& weights);

struct ArcoStepStats {
  double log_evidence = 0.0;  // logsumexp(scores) - log M
  double max_weight = 0.0;
  double baseline = 0.0;      // after the update
};

/// Maps a batch of orders to their log scores (one per order).
using OrderScorer = std::function<std::vector<double>(const std::vector<CausalOrder>&)>;

/// Samples `batch_size` orders, scores them, self-normalises and updates.
ArcoStepStats arco_train_step(ArcoTrainState& state, const OrderScorer& scorer, int batch_size, Rng& rng);

/// Optimiser state only; the parameters travel separately via arco_to_json.
nlohmann::json train_state_to_json(const ArcoTrainState& state);
ArcoTrainState train_state_from_json(const nlohmann::json& j);

}  // namespace arcobci
