#include "arcobci/nig.hpp"

#include <cmath>
#include <numbers>

#include "arcobci/error.hpp"

namespace arcobci {

NigPrior nig_posterior(const Eigen::VectorXd& targets, const NigPrior& prior) {
  const double n = static_cast<double>(targets.size());
  if (targets.size() == 0) return prior;
  const double mean = targets.mean();
  const double ss = (targets.array() - mean).square().sum();
  NigPrior post;
  post.kappa0 = prior.kappa0 + n;
  post.mu0 = (prior.kappa0 * prior.mu0 + n * mean) / post.kappa0;
  post.alpha0 = prior.alpha0 + 0.5 * n;
  post.beta0 = prior.beta0 + 0.5 * ss +
               prior.kappa0 * n * (mean - prior.mu0) * (mean - prior.mu0) / (2.0 * post.kappa0);
  return post;
}

double nig_log_marginal(const Eigen::VectorXd& targets, const NigPrior& prior) {
  if (targets.size() == 0) throw Error(ErrorCode::TooFewSamples, "nig marginal needs N >= 1");
  const double n = static_cast<double>(targets.size());
  const NigPrior post = nig_posterior(targets, prior);
  return std::lgamma(post.alpha0) - std::lgamma(prior.alpha0) + prior.alpha0 * std::log(prior.beta0) -
         post.alpha0 * std::log(post.beta0) + 0.5 * (std::log(prior.kappa0) - std::log(post.kappa0)) -
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

double nig_predictive_scale(const NigPrior& posterior) {
  return std::sqrt(posterior.beta0 * (posterior.kappa0 + 1.0) / (posterior.alpha0 * posterior.kappa0));
}

double nig_predictive_log_density(double x, const NigPrior& posterior) {
  const double nu = 2.0 * posterior.alpha0;
  const double s = nig_predictive_scale(posterior);
  const double z = (x - posterior.mu0) / s;
  return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * std::numbers::pi) -
         std::log(s) - 0.5 * (nu + 1.0) * std::log1p(z * z / nu);
}

double nig_predictive_sample(const NigPrior& posterior, Rng& rng) {
  std::student_t_distribution<double> t(2.0 * posterior.alpha0);
  return posterior.mu0 + nig_predictive_scale(posterior) * t(rng);
}

}  // namespace arcobci
