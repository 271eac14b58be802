#include "arcobci/gp.hpp"

#include <cmath>
#include <numbers>

#include "arcobci/error.hpp"

namespace arcobci {

Eigen::Vector4d RqHyper::to_log() const {
  return {std::log(delta), std::log(lengthscale), std::log(mixing), std::log(noise_var)};
}

RqHyper RqHyper::from_log(const Eigen::Vector4d& u) {
  return {std::exp(u(0)), std::exp(u(1)), std::exp(u(2)), std::exp(u(3))};
}

bool RqHyper::valid() const {
  return delta > 0.0 && lengthscale > 0.0 && mixing > 0.0 && noise_var > 0.0 && std::isfinite(delta) &&
         std::isfinite(lengthscale) && std::isfinite(mixing) && std::isfinite(noise_var);
}

double GammaPrior::log_density(double x) const {
  if (!(x > 0.0)) return kNegInf;
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

HyperPrior HyperPrior::inference(int num_parents) {
  HyperPrior p;
  p.lengthscale = {30.0 * num_parents, 30.0};
  return p;
}

HyperPrior HyperPrior::ground_truth(int num_parents) {
  HyperPrior p;
  p.lengthscale = {30.0 * num_parents, 30.0};
  p.noise = {50.0, 50.0};
  return p;
}

RqHyper HyperPrior::prior_mean() const {
  return {delta.mean(), lengthscale.mean(), mixing.mean(), noise.mean()};
}

double HyperPrior::log_density(const RqHyper& h) const {
  return delta.log_density(h.delta) + lengthscale.log_density(h.lengthscale) +
         mixing.log_density(h.mixing) + noise.log_density(h.noise_var);
}

namespace {

inline double rq_from_sq(double r2, const RqHyper& h) {
  return h.delta * std::pow(1.0 + r2 / (2.0 * h.mixing * h.lengthscale * h.lengthscale), -h.mixing);
}

}  // namespace

double rq_kernel(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2, const RqHyper& hyper) {
  if (x1.size() != x2.size()) throw Error(ErrorCode::DimensionMismatch, "kernel inputs differ in dimension");
  return rq_from_sq((x1 - x2).squaredNorm(), hyper);
}

Eigen::MatrixXd rq_gram(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const RqHyper& hyper) {
  if (a.cols() != b.cols()) throw Error(ErrorCode::DimensionMismatch, "gram inputs differ in dimension");
  Eigen::MatrixXd k(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) k(i, j) = rq_from_sq((a.row(i) - b.row(j)).squaredNorm(), hyper);
  return k;
}

Eigen::MatrixXd pairwise_sq_dists(const Eigen::MatrixXd& x) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd r2(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    r2(j, j) = 0.0;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double v = (x.row(i) - x.row(j)).squaredNorm();
      r2(i, j) = v;
      r2(j, i) = v;
    }
  }
  return r2;
}

Eigen::LLT<Eigen::MatrixXd> robust_cholesky(const Eigen::MatrixXd& cov, double* jitter_used) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) {
    if (jitter_used) *jitter_used = 0.0;
    return llt;
  }
  const double mean_diag = cov.diagonal().mean();
  for (double rel = 1e-8; rel <= 1e-4 * (1.0 + 1e-9); rel *= 10.0) {
    const double jitter = rel * mean_diag;
    Eigen::MatrixXd c = cov;
    c.diagonal().array() += jitter;
    llt.compute(c);
    if (llt.info() == Eigen::Success) {
      if (jitter_used) *jitter_used = jitter;
      return llt;
    }
  }
  throw Error(ErrorCode::FactorizationFailure, "covariance not positive definite after jitter 1e-4");
}

namespace {

double log_det_from_llt(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace

double gp_log_marginal(const Eigen::VectorXd& targets, const Eigen::MatrixXd& parent_values,
                       const RqHyper& hyper) {
  const Eigen::Index n = targets.size();
  if (n < 1 || parent_values.rows() != n) {
    throw Error(ErrorCode::DimensionMismatch, "targets and parent values must have N >= 1 matching rows");
  }
  Eigen::MatrixXd cov = rq_gram(parent_values, parent_values, hyper);
  cov.diagonal().array() += hyper.noise_var;
  const auto llt = robust_cholesky(cov);
  const Eigen::VectorXd alpha = llt.solve(targets);
  return -0.5 * targets.dot(alpha) - 0.5 * log_det_from_llt(llt) -
         0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

namespace {

/// Buffers reused across objective evaluations of one fit.
struct GpWorkspace {
  Eigen::MatrixXd cov;
  Eigen::MatrixXd inv;       // lower triangle of C^-1
  Eigen::MatrixXd log_base;  // lower triangle of log(1 + r^2 / (2 gamma lambda^2))
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::VectorXd alpha;
};

void factorise_in_place(Eigen::MatrixXd& cov, Eigen::LLT<Eigen::MatrixXd>& llt) {
  llt.compute(cov);
  if (llt.info() == Eigen::Success) return;
  const double mean_diag = cov.diagonal().mean();
  double applied = 0.0;
  for (double rel = 1e-8; rel <= 1e-4 * (1.0 + 1e-9); rel *= 10.0) {
    const double jitter = rel * mean_diag;
    cov.diagonal().array() += jitter - applied;
    applied = jitter;
    llt.compute(cov);
    if (llt.info() == Eigen::Success) return;
  }
  throw Error(ErrorCode::FactorizationFailure, "covariance not positive definite after jitter 1e-4");
}

GpObjective evaluate(const Eigen::VectorXd& targets, const Eigen::MatrixXd& sq_dists, const RqHyper& h,
                     const HyperPrior& prior, GpWorkspace& ws) {
  const Eigen::Index n = targets.size();
  const double two_gl2 = 2.0 * h.mixing * h.lengthscale * h.lengthscale;
  // K = delta * base^-gamma with base = 1 + r^2 / (2 gamma lambda^2); lower triangle only.
  ws.cov.resize(n, n);
  ws.log_base.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    ws.cov(j, j) = h.delta + h.noise_var;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double lb = std::log1p(sq_dists(i, j) / two_gl2);
      ws.log_base(i, j) = lb;
      ws.cov(i, j) = h.delta * std::exp(-h.mixing * lb);
    }
  }
  factorise_in_place(ws.cov, ws.llt);
  ws.alpha = ws.llt.solve(targets);

  GpObjective out;
  out.log_marginal = -0.5 * targets.dot(ws.alpha) - 0.5 * log_det_from_llt(ws.llt) -
                     0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  out.log_prior = prior.log_density(h);

  // C^-1 = L^-T L^-1, lower triangle.
  Eigen::MatrixXd linv = Eigen::MatrixXd::Identity(n, n);
  ws.llt.matrixL().solveInPlace(linv);
  ws.inv.setZero(n, n);
  ws.inv.selfadjointView<Eigen::Lower>().rankUpdate(linv.transpose());

  // d log p / d theta = 0.5 sum((alpha alpha^T - C^-1) .* dC/dtheta), summed over the symmetric pairs.
  const double l2 = h.lengthscale * h.lengthscale;
  double g_delta = 0.0, g_len = 0.0, g_mix = 0.0, trace_w = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double wjj = ws.alpha(j) * ws.alpha(j) - ws.inv(j, j);
    trace_w += wjj;
    g_delta += wjj * h.delta;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double r2 = sq_dists(i, j);
      const double base = 1.0 + r2 / two_gl2;
      const double k = ws.cov(i, j);
      const double wk = 2.0 * (ws.alpha(i) * ws.alpha(j) - ws.inv(i, j)) * k;
      g_delta += wk;
      g_len += wk * r2 / (l2 * base);
      g_mix += wk * ((base - 1.0) / base - ws.log_base(i, j));
    }
  }
  out.grad(0) = 0.5 * g_delta;
  out.grad(1) = 0.5 * g_len;
  out.grad(2) = 0.5 * h.mixing * g_mix;
  out.grad(3) = 0.5 * h.noise_var * trace_w;

  // Gamma log-density in x, differentiated with respect to log x.
  out.grad(0) += (prior.delta.shape - 1.0) - prior.delta.rate * h.delta;
  out.grad(1) += (prior.lengthscale.shape - 1.0) - prior.lengthscale.rate * h.lengthscale;
  out.grad(2) += (prior.mixing.shape - 1.0) - prior.mixing.rate * h.mixing;
  out.grad(3) += (prior.noise.shape - 1.0) - prior.noise.rate * h.noise_var;
  return out;
}

}  // namespace

GpObjective gp_objective(const Eigen::VectorXd& targets, const Eigen::MatrixXd& sq_dists, const RqHyper& h,
                         const HyperPrior& prior) {
  GpWorkspace ws;
  return evaluate(targets, sq_dists, h, prior, ws);
}

GpFit fit_gp(const Eigen::VectorXd& targets, const Eigen::MatrixXd& parent_values, const HyperPrior& prior,
             const GpFitOptions& options) {
  if (targets.size() < 1 || parent_values.rows() != targets.size() || parent_values.cols() < 1) {
    throw Error(ErrorCode::DimensionMismatch, "gp fit needs N >= 1 rows and at least one parent");
  }
  const Eigen::MatrixXd sq = pairwise_sq_dists(parent_values);
  Eigen::Vector4d u = prior.prior_mean().to_log();
  Eigen::Vector4d sq_avg = Eigen::Vector4d::Zero();
  GpWorkspace ws;

  GpFit best;
  double best_value = kNegInf;
  for (int step = 0; step <= options.max_steps; ++step) {
    const RqHyper h = RqHyper::from_log(u);
    GpObjective obj;
    try {
      obj = evaluate(targets, sq, h, prior, ws);
    } catch (const Error&) {
      if (step == 0) throw;
      break;  // stepped into a degenerate region; keep the best iterate
    }
    if (!std::isfinite(obj.value()) || !obj.grad.allFinite()) {
      if (step == 0) throw Error(ErrorCode::NonFiniteObjective, "gp objective not finite at initialisation");
      break;
    }
    if (obj.value() > best_value) {
      best_value = obj.value();
      best = {h, obj.log_marginal, obj.log_prior, step};
    }
    if (step == options.max_steps) break;
    sq_avg = options.rms_decay * sq_avg + (1.0 - options.rms_decay) * obj.grad.cwiseAbs2();
    u.array() += options.learning_rate * obj.grad.array() / (sq_avg.array().sqrt() + options.epsilon);
  }
  return best;
}

GpPredictor::GpPredictor(Eigen::MatrixXd inputs, const Eigen::VectorXd& targets, const RqHyper& hyper)
    : inputs_(std::move(inputs)), hyper_(hyper) {
  if (inputs_.rows() != targets.size()) throw Error(ErrorCode::DimensionMismatch, "predictor inputs/targets");
  Eigen::MatrixXd cov = rq_gram(inputs_, inputs_, hyper_);
  cov.diagonal().array() += hyper_.noise_var;
  chol_ = robust_cholesky(cov);
  alpha_ = chol_.solve(targets);
}

std::pair<double, double> GpPredictor::latent(const Eigen::VectorXd& x) const {
  if (x.size() != inputs_.cols()) throw Error(ErrorCode::DimensionMismatch, "query dimension");
  Eigen::VectorXd kx(inputs_.rows());
  for (Eigen::Index i = 0; i < inputs_.rows(); ++i) kx(i) = rq_from_sq((inputs_.row(i).transpose() - x).squaredNorm(), hyper_);
  const double mean = kx.dot(alpha_);
  const Eigen::VectorXd v = chol_.matrixL().solve(kx);
  const double var = std::max(0.0, hyper_.delta - v.squaredNorm());
  return {mean, var};
}

double GpPredictor::sample(const Eigen::VectorXd& x, Rng& rng) const {
  const auto [mean, var] = latent(x);
  std::normal_distribution<double> z(0.0, 1.0);
  return mean + std::sqrt(var + hyper_.noise_var) * z(rng);
}

}  // namespace arcobci
