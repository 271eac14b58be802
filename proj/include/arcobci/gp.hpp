#pragma once

#include <array>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "arcobci/numeric.hpp"

namespace arcobci {

/// Rational-quadratic kernel hyperparameters plus Gaussian noise variance.
struct RqHyper {
  double delta = 1.0;        // kernel scale
  double lengthscale = 1.0;  // shared across input dimensions
  double mixing = 1.0;
  double noise_var = 1.0;

  /// (log delta, log lengthscale, log mixing, log noise_var)
  Eigen::Vector4d to_log() const;
  static RqHyper from_log(const Eigen::Vector4d& u);
  bool valid() const;
};

/// Gamma(shape, rate).
struct GammaPrior {
  double shape = 1.0;
  double rate = 1.0;

  double mean() const { return shape / rate; }
  double log_density(double x) const;
};

struct HyperPrior {
  GammaPrior delta{100.0, 10.0};
  GammaPrior lengthscale{30.0, 30.0};
  GammaPrior mixing{20.0, 10.0};
  GammaPrior noise{2.0, 8.0};

  /// Defaults used for inference on standardised data.
  static HyperPrior inference(int num_parents);
  /// Defaults used when drawing ground-truth mechanisms.
  static HyperPrior ground_truth(int num_parents);

  RqHyper prior_mean() const;
  double log_density(const RqHyper& h) const;
};

/// k(x1, x2) = delta * (1 + |x1 - x2|^2 / (2 mixing lengthscale^2))^(-mixing)
double rq_kernel(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2, const RqHyper& hyper);

/// Gram matrix between rows of a and rows of b.
Eigen::MatrixXd rq_gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const RqHyper& hyper);

/// Cholesky of `cov`, retried with diagonal jitter 1e-8 * mean(diag), x10 per
/// retry, up to 1e-4 * mean(diag). Throws FactorizationFailure.
Eigen::LLT<Eigen::MatrixXd> robust_cholesky(const Eigen::MatrixXd& cov, double* jitter_used = nullptr);

/// log N(targets | 0, K + noise_var I) with K the RQ Gram of parent_values.
double gp_log_marginal(const Eigen::VectorXd& targets, const Eigen::MatrixXd& parent_values,
                       const RqHyper& hyper);

struct GpObjective {
  double log_marginal = 0.0;
  double log_prior = 0.0;
  Eigen::Vector4d grad = Eigen::Vector4d::Zero();  // d(log_marginal + log_prior) / d log-hyper

  double value() const { return log_marginal + log_prior; }
};

/// Objective and its gradient in log-hyperparameter space. The prior is
/// evaluated on the natural parameters (no change-of-variables term).
GpObjective gp_objective(const Eigen::VectorXd& targets, const Eigen::MatrixXd& sq_dists,
                         const RqHyper& hyper, const HyperPrior& prior);

Eigen::MatrixXd pairwise_sq_dists(const Eigen::MatrixXd& x);

struct GpFitOptions {
  int max_steps = 100;
  double learning_rate = 0.05;
  double rms_decay = 0.99;
  double epsilon = 1e-8;
};

struct GpFit {
  RqHyper hyper;
  double log_marginal = 0.0;
  double log_prior = 0.0;
  int steps = 0;
};

/// MAP type-II fit by RMSprop ascent in log space starting at the prior mean.
/// Returns the best iterate seen. Throws NonFiniteObjective.
GpFit fit_gp(const Eigen::VectorXd& targets, const Eigen::MatrixXd& parent_values, const HyperPrior& prior,
             const GpFitOptions& options = {});

/// Closed-form GP predictive posterior for one fitted mechanism.
class GpPredictor {
 public:
  GpPredictor(Eigen::MatrixXd inputs, const Eigen::VectorXd& targets, const RqHyper& hyper);

  /// Latent f(x) posterior mean and variance.
  std::pair<double, double> latent(const Eigen::VectorXd& x) const;
  /// f(x) ~ posterior plus N(0, noise_var).
  double sample(const Eigen::VectorXd& x, Rng& rng) const;
  const RqHyper& hyper() const { return hyper_; }

 private:
  Eigen::MatrixXd inputs_;
  RqHyper hyper_;
  Eigen::LLT<Eigen::MatrixXd> chol_;
  Eigen::VectorXd alpha_;
};

}  // namespace arcobci
