#include "arcobci/mechanism_cache.hpp"

#include <algorithm>
#include <mutex>

#include "arcobci/error.hpp"

namespace arcobci {

HyperPrior MechanismPriors::for_parents(int num_parents) const {
  HyperPrior p;
  p.delta = {delta_shape, delta_rate};
  p.lengthscale = {lengthscale_shape_per_parent * num_parents, lengthscale_rate};
  p.mixing = {mixing_shape, mixing_rate};
  p.noise = {noise_shape, noise_rate};
  return p;
}

MechanismKey key_of(const ParentSet& ps) { return {ps.node(), ps.mask()}; }

MechanismCache::Entry MechanismCache::find(const MechanismKey& key) const {
  std::shared_lock lock(mutex_);
  auto it = map_.find(key);
  return it == map_.end() ? nullptr : it->second;
}

MechanismCache::Entry MechanismCache::insert(MechanismScore score) {
  const MechanismKey key = key_of(score.parent_set);
  auto entry = std::make_shared<const MechanismScore>(std::move(score));
  std::unique_lock lock(mutex_);
  auto [it, inserted] = map_.try_emplace(key, std::move(entry));
  return it->second;
}

std::size_t MechanismCache::size() const {
  std::shared_lock lock(mutex_);
  return map_.size();
}

std::vector<MechanismCache::Entry> MechanismCache::entries() const {
  std::vector<std::pair<MechanismKey, Entry>> items;
  {
    std::shared_lock lock(mutex_);
    items.assign(map_.begin(), map_.end());
  }
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Entry> out;
  out.reserve(items.size());
  for (auto& [k, e] : items) out.push_back(std::move(e));
  return out;
}

nlohmann::json MechanismCache::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : entries()) {
    nlohmann::json j;
    j["node"] = e->parent_set.node();
    j["parents"] = e->parent_set.parents();
    j["log_marginal"] = e->log_marginal;
    j["log_hyper_prior"] = e->log_hyper_prior;
    if (const auto* rq = std::get_if<RqHyper>(&e->hyper)) {
      j["kind"] = "gp";
      j["hyper"] = {{"delta", rq->delta}, {"lengthscale", rq->lengthscale}, {"mixing", rq->mixing},
                    {"noise_var", rq->noise_var}};
    } else {
      const auto& nig = std::get<NigPrior>(e->hyper);
      j["kind"] = "nig";
      j["hyper"] = {{"mu", nig.mu0}, {"kappa", nig.kappa0}, {"alpha", nig.alpha0}, {"beta", nig.beta0}};
    }
    arr.push_back(std::move(j));
  }
  return arr;
}

void MechanismCache::load_json(MechanismCache& cache, const nlohmann::json& j) {
  try {
    for (const auto& item : j) {
      MechanismScore s;
      s.parent_set = ParentSet(item.at("node").get<int>(), item.at("parents").get<std::vector<int>>());
      s.log_marginal = item.at("log_marginal").get<double>();
      s.log_hyper_prior = item.at("log_hyper_prior").get<double>();
      const auto& h = item.at("hyper");
      if (item.at("kind").get<std::string>() == "gp") {
        s.hyper = RqHyper{h.at("delta").get<double>(), h.at("lengthscale").get<double>(),
                          h.at("mixing").get<double>(), h.at("noise_var").get<double>()};
      } else {
        s.hyper = NigPrior{h.at("mu").get<double>(), h.at("kappa").get<double>(), h.at("alpha").get<double>(),
                           h.at("beta").get<double>()};
      }
      cache.insert(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("mechanism cache: ") + e.what());
  }
}

Eigen::MatrixXd parent_columns(const Dataset& data, const ParentSet& parents) {
  Eigen::MatrixXd x(data.rows(), static_cast<Eigen::Index>(parents.size()));
  for (std::size_t c = 0; c < parents.size(); ++c) {
    const int p = parents.parents()[c];
    if (p >= data.cols()) throw Error(ErrorCode::IndexOutOfRange, "parent index beyond data columns");
    x.col(static_cast<Eigen::Index>(c)) = data.values.col(p);
  }
  return x;
}

RqHyper fit_hyperparameters(int node, const ParentSet& parents, const Dataset& data, const HyperPrior& prior,
                            const GpFitOptions& options) {
  if (parents.empty()) throw Error(ErrorCode::InvalidArgument, "hyperparameter fit needs parents");
  if (node < 0 || node >= data.cols()) throw Error(ErrorCode::IndexOutOfRange, "node index");
  return fit_gp(data.values.col(node), parent_columns(data, parents), prior, options).hyper;
}

MechanismScore fit_mechanism(const ParentSet& parents, const Dataset& data, const MechanismPriors& priors,
                             const GpFitOptions& options) {
  const int node = parents.node();
  if (node >= data.cols()) throw Error(ErrorCode::IndexOutOfRange, "node index beyond data columns");
  const Eigen::VectorXd y = data.values.col(node);
  MechanismScore s;
  s.parent_set = parents;
  if (parents.empty()) {
    s.hyper = nig_posterior(y, priors.root);
    s.log_marginal = nig_log_marginal(y, priors.root);
    s.log_hyper_prior = 0.0;
  } else {
    const HyperPrior prior = priors.for_parents(static_cast<int>(parents.size()));
    const GpFit fit = fit_gp(y, parent_columns(data, parents), prior, options);
    s.hyper = fit.hyper;
    s.log_marginal = fit.log_marginal;
    s.log_hyper_prior = fit.log_prior;
  }
  if (!std::isfinite(s.total())) throw Error(ErrorCode::NonFiniteObjective, "local score for " + to_string(parents));
  return s;
}

MechanismCache::Entry local_score(MechanismCache& cache, const ParentSet& parents, const Dataset& data,
                                  const MechanismPriors& priors, const GpFitOptions& options) {
  if (auto hit = cache.find(key_of(parents))) return hit;
  return cache.insert(fit_mechanism(parents, data, priors, options));
}

double predictive_sample(const MechanismScore& score, int node, const Eigen::VectorXd& parent_values,
                         const Dataset& train_data, Rng& rng) {
  if (const auto* nig = std::get_if<NigPrior>(&score.hyper)) return nig_predictive_sample(*nig, rng);
  if (parent_values.size() != static_cast<Eigen::Index>(score.parent_set.size())) {
    throw Error(ErrorCode::DimensionMismatch, "parent value count differs from parent set size");
  }
  const GpPredictor predictor(parent_columns(train_data, score.parent_set), train_data.values.col(node),
                              std::get<RqHyper>(score.hyper));
  return predictor.sample(parent_values, rng);
}

}  // namespace arcobci
