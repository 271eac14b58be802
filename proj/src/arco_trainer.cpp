#include "arcobci/arco_trainer.hpp"

#include <algorithm>
#include <cmath>

#include "arcobci/error.hpp"
#include "arcobci/order_marginal.hpp"

namespace arcobci {

ArcoTrainState::ArcoTrainState(ArcoParams initial, double lr, double decay)
    : params(std::move(initial)),
      first_moment(Eigen::VectorXd::Zero(params.size())),
      second_moment(Eigen::VectorXd::Zero(params.size())),
      learning_rate(lr),
      ema_decay(decay) {
  if (!(decay > 0.0 && decay < 1.0)) throw Error(ErrorCode::InvalidArgument, "ema decay must be in (0,1)");
  if (!(lr > 0.0)) throw Error(ErrorCode::InvalidArgument, "learning rate must be positive");
}

ArcoGradient arco_gradient(const ArcoTrainState& state, const std::vector<CausalOrder>& orders,
                           const std::vector<double>& weights) {
  if (orders.size() != weights.size()) {
    throw Error(ErrorCode::WeightMismatch, "orders and weights differ in length");
  }
  const double sigma = state.params.prior_std();
  ArcoGradient total = -state.params.theta() / (sigma * sigma);
  if (orders.empty()) return total;

  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw Error(ErrorCode::WeightMismatch, "weights must be nonnegative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw Error(ErrorCode::WeightMismatch, "weights must sum to 1");

  const double shift = state.baseline / static_cast<double>(orders.size());
  ArcoGradient g;
  for (std::size_t m = 0; m < orders.size(); ++m) {
    const double coef = weights[m] - shift;
    if (coef == 0.0) continue;
    log_prob_and_grad(state.params, orders[m], g);
    total += coef * g;
  }
  return total;
}

ArcoTrainState arco_update(ArcoTrainState state, const std::vector<CausalOrder>& orders,
                           const std::vector<double>& weights) {
  const ArcoGradient g = arco_gradient(state, orders, weights);
  state.step += 1;
  state.first_moment = state.beta1 * state.first_moment + (1.0 - state.beta1) * g;
  state.second_moment = state.beta2 * state.second_moment + (1.0 - state.beta2) * g.cwiseAbs2();
  const double bc1 = 1.0 - std::pow(state.beta1, state.step);
  const double bc2 = 1.0 - std::pow(state.beta2, state.step);
  const Eigen::ArrayXd m_hat = state.first_moment.array() / bc1;
  const Eigen::ArrayXd v_hat = state.second_moment.array() / bc2;
  state.params.theta().array() += state.learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
  if (!orders.empty()) {
    double objective = 0.0;
    for (double w : weights) objective += w;
    state.baseline = state.ema_decay * state.baseline + (1.0 - state.ema_decay) * objective;
  }
  return state;
}

ArcoStepStats arco_train_step(ArcoTrainState& state, const OrderScorer& scorer, int batch_size, Rng& rng) {
  if (batch_size < 1) throw Error(ErrorCode::InvalidArgument, "batch size must be positive");
  std::vector<CausalOrder> orders;
  orders.reserve(static_cast<std::size_t>(batch_size));
  for (int m = 0; m < batch_size; ++m) orders.push_back(sample_order(state.params, rng));
  const std::vector<double> scores = scorer(orders);
  if (scores.size() != orders.size()) throw Error(ErrorCode::DimensionMismatch, "scorer returned wrong count");
  const std::vector<double> weights = importance_weights(scores);

  ArcoStepStats stats;
  stats.log_evidence = logsumexp(scores) - std::log(static_cast<double>(batch_size));
  stats.max_weight = *std::max_element(weights.begin(), weights.end());
  state = arco_update(std::move(state), orders, weights);
  stats.baseline = state.baseline;
  return stats;
}

namespace {
std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }
Eigen::VectorXd from_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}
}  // namespace

nlohmann::json train_state_to_json(const ArcoTrainState& state) {
  return {
      {"baseline", state.baseline},
      {"step", state.step},
      {"learning_rate", state.learning_rate},
      {"ema_decay", state.ema_decay},
      {"beta1", state.beta1},
      {"beta2", state.beta2},
      {"epsilon", state.epsilon},
      {"first_moment", to_vec(state.first_moment)},
      {"second_moment", to_vec(state.second_moment)},
  };
}

ArcoTrainState train_state_from_json(const nlohmann::json& j) {
  try {
    ArcoTrainState s;
    s.baseline = j.at("baseline").get<double>();
    s.step = j.at("step").get<int>();
    s.learning_rate = j.at("learning_rate").get<double>();
    s.ema_decay = j.at("ema_decay").get<double>();
    s.beta1 = j.at("beta1").get<double>();
    s.beta2 = j.at("beta2").get<double>();
    s.epsilon = j.at("epsilon").get<double>();
    s.first_moment = from_vec(j.at("first_moment").get<std::vector<double>>());
    s.second_moment = from_vec(j.at("second_moment").get<std::vector<double>>());
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("train state: ") + e.what());
  }
}

}  // namespace arcobci
