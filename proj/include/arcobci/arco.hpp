#pragma once

#include <span>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "arcobci/core.hpp"
#include "arcobci/numeric.hpp"

namespace arcobci {

/// Weights of the logit network g: R^{d x d} -> R^d with one ReLU hidden
/// layer. All parameters live in one flat vector so optimiser state and
/// gradients share its layout:
///   [ W1 (hidden x d*d, column-major) | b1 (hidden) | W2 (d x hidden, column-major) | b2 (d) ]
class ArcoParams {
 public:
  static constexpr int kDefaultHidden = 30;
  static constexpr double kDefaultPriorStd = 10.0;

  ArcoParams() = default;
  ArcoParams(int d, int hidden, double prior_std = kDefaultPriorStd);

  static ArcoParams zeros(int d, int hidden = kDefaultHidden);
  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight and bias.
  static ArcoParams random(int d, Rng& rng, int hidden = kDefaultHidden, double prior_std = kDefaultPriorStd);

  int d() const { return d_; }
  int hidden() const { return hidden_; }
  int input_dim() const { return d_ * d_; }
  double prior_std() const { return prior_std_; }
  Eigen::Index size() const { return theta_.size(); }

  Eigen::VectorXd& theta() { return theta_; }
  const Eigen::VectorXd& theta() const { return theta_; }

  Eigen::Map<const Eigen::MatrixXd> w1() const { return {theta_.data(), hidden_, input_dim()}; }
  Eigen::Map<const Eigen::VectorXd> b1() const { return {theta_.data() + offset_b1(), hidden_}; }
  Eigen::Map<const Eigen::MatrixXd> w2() const { return {theta_.data() + offset_w2(), d_, hidden_}; }
  Eigen::Map<const Eigen::VectorXd> b2() const { return {theta_.data() + offset_b2(), d_}; }
  Eigen::Map<Eigen::MatrixXd> w1() { return {theta_.data(), hidden_, input_dim()}; }
  Eigen::Map<Eigen::VectorXd> b1() { return {theta_.data() + offset_b1(), hidden_}; }
  Eigen::Map<Eigen::MatrixXd> w2() { return {theta_.data() + offset_w2(), d_, hidden_}; }
  Eigen::Map<Eigen::VectorXd> b2() { return {theta_.data() + offset_b2(), d_}; }

  Eigen::Index offset_b1() const { return static_cast<Eigen::Index>(hidden_) * input_dim(); }
  Eigen::Index offset_w2() const { return offset_b1() + hidden_; }
  Eigen::Index offset_b2() const { return offset_w2() + static_cast<Eigen::Index>(d_) * hidden_; }

  bool all_finite() const { return theta_.allFinite(); }

 private:
  int d_ = 0;
  int hidden_ = 0;
  double prior_std_ = kDefaultPriorStd;
  Eigen::VectorXd theta_;
};

/// Gradient with the same flat layout as ArcoParams::theta().
using ArcoGradient = Eigen::VectorXd;

/// Raw logits g(Q) for a (prefix) permutation encoding.
Eigen::VectorXd logits(const ArcoParams& params, const PermutationEncoding& encoding);

/// Log-softmax restricted to `remaining`; all other entries are -inf.
Eigen::VectorXd normalize_logits(const Eigen::VectorXd& raw, std::span<const int> remaining);

CausalOrder sample_order(const ArcoParams& params, Rng& rng);

/// log p(L | theta) = sum_k log p(L_k | L_<k, theta).
double log_prob(const ArcoParams& params, const CausalOrder& order);

/// Exact reverse-mode gradient of log_prob.
ArcoGradient grad_log_prob(const ArcoParams& params, const CausalOrder& order);

/// Both at once; `grad` is resized and overwritten.
double log_prob_and_grad(const ArcoParams& params, const CausalOrder& order, ArcoGradient& grad);

/// Checkpoint form: layer shapes plus row-major weight arrays.
nlohmann::json arco_to_json(const ArcoParams& params);
ArcoParams arco_from_json(const nlohmann::json& j);

}  // namespace arcobci
