#pragma once

#include <Eigen/Dense>

#include "arcobci/numeric.hpp"

namespace arcobci {

/// Normal-inverse-gamma prior on (mean, variance) of a root node:
/// mean | var ~ N(mu0, var / kappa0), var ~ InvGamma(alpha0, beta0).
struct NigPrior {
  double mu0 = 0.0;
  double kappa0 = 1.0;
  double alpha0 = 10.0;
  double beta0 = 10.0;

  static NigPrior inference_default() { return {0.0, 1.0, 10.0, 10.0}; }
  static NigPrior ground_truth_default() { return {0.0, 1.0, 5.0, 10.0}; }
};

/// Conjugate update on i.i.d. observations.
NigPrior nig_posterior(const Eigen::VectorXd& targets, const NigPrior& prior);

/// log p(targets) with mean and variance integrated out.
double nig_log_marginal(const Eigen::VectorXd& targets, const NigPrior& prior);

/// Posterior predictive is Student-t with 2*alpha dof, location mu and
/// scale sqrt(beta (kappa + 1) / (alpha kappa)).
double nig_predictive_log_density(double x, const NigPrior& posterior);
double nig_predictive_scale(const NigPrior& posterior);
double nig_predictive_sample(const NigPrior& posterior, Rng& rng);

}  // namespace arcobci
