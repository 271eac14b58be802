#include "arcobci/engine.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>

#include "arcobci/error.hpp"
#include "arcobci/nig.hpp"

namespace arcobci {

namespace {

constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kTrainStream = 2;
constexpr std::uint64_t kInferenceStream = 3;

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::ConfigError, what);
}

}  // namespace

void EngineConfig::validate() const {
  require(max_parents >= 0 && max_parents <= 63, "max_parents must be in [0, 63]");
  require(batch_size >= 1, "batch_size must be positive");
  require(max_arco_steps >= 0, "max_arco_steps must be nonnegative");
  require(arco_lr > 0.0, "arco_lr must be positive");
  require(gp_steps >= 0, "gp_steps must be nonnegative");
  require(gp_lr > 0.0, "gp_lr must be positive");
  require(ema_decay > 0.0 && ema_decay < 1.0, "ema_decay must be in (0, 1)");
  require(hidden_units >= 1, "hidden_units must be positive");
  require(prior_std > 0.0, "prior_std must be positive");
  require(patience >= 1, "patience must be positive");
  require(plateau_tolerance >= 0.0, "plateau_tolerance must be nonnegative");
  require(inference_orders >= 1, "inference_orders must be positive");
  require(threads >= 1, "threads must be positive");
}

GpFitOptions EngineConfig::gp_options() const {
  GpFitOptions o;
  o.max_steps = gp_steps;
  o.learning_rate = gp_lr;
  return o;
}

nlohmann::json config_to_json(const EngineConfig& c) {
  const auto& p = c.priors;
  return {{"max_parents", c.max_parents},
          {"batch_size", c.batch_size},
          {"max_arco_steps", c.max_arco_steps},
          {"arco_lr", c.arco_lr},
          {"gp_steps", c.gp_steps},
          {"gp_lr", c.gp_lr},
          {"ema_decay", c.ema_decay},
          {"seed", c.seed},
          {"hidden_units", c.hidden_units},
          {"prior_std", c.prior_std},
          {"patience", c.patience},
          {"plateau_tolerance", c.plateau_tolerance},
          {"inference_orders", c.inference_orders},
          {"priors",
           {{"delta", {p.delta_shape, p.delta_rate}},
            {"lengthscale", {p.lengthscale_shape_per_parent, p.lengthscale_rate}},
            {"mixing", {p.mixing_shape, p.mixing_rate}},
            {"noise", {p.noise_shape, p.noise_rate}},
            {"root", {p.root.mu0, p.root.kappa0, p.root.alpha0, p.root.beta0}}}}};
}

EngineConfig config_from_json(const nlohmann::json& j) {
  try {
    EngineConfig c;
    c.max_parents = j.at("max_parents").get<int>();
    c.batch_size = j.at("batch_size").get<int>();
    c.max_arco_steps = j.at("max_arco_steps").get<int>();
    c.arco_lr = j.at("arco_lr").get<double>();
    c.gp_steps = j.at("gp_steps").get<int>();
    c.gp_lr = j.at("gp_lr").get<double>();
    c.ema_decay = j.at("ema_decay").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.hidden_units = j.at("hidden_units").get<int>();
    c.prior_std = j.at("prior_std").get<double>();
    c.patience = j.at("patience").get<int>();
    c.plateau_tolerance = j.at("plateau_tolerance").get<double>();
    c.inference_orders = j.at("inference_orders").get<int>();
    const auto& p = j.at("priors");
    auto pair = [&](const char* key, double& a, double& b) {
      const auto v = p.at(key).get<std::vector<double>>();
      if (v.size() != 2) throw Error(ErrorCode::ParseError, std::string("prior '") + key + "' needs two values");
      a = v[0];
      b = v[1];
    };
    pair("delta", c.priors.delta_shape, c.priors.delta_rate);
    pair("lengthscale", c.priors.lengthscale_shape_per_parent, c.priors.lengthscale_rate);
    pair("mixing", c.priors.mixing_shape, c.priors.mixing_rate);
    pair("noise", c.priors.noise_shape, c.priors.noise_rate);
    const auto r = p.at("root").get<std::vector<double>>();
    if (r.size() != 4) throw Error(ErrorCode::ParseError, "root prior needs four values");
    c.priors.root = {r[0], r[1], r[2], r[3]};
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("engine config: ") + e.what());
  }
}

PosteriorModel init_model(const Dataset& data, const EngineConfig& config) {
  config.validate();
  if (data.rows() < 2) throw Error(ErrorCode::TooFewSamples, "learning needs N >= 2");
  if (data.cols() < 1) throw Error(ErrorCode::InvalidArgument, "learning needs d >= 1");
  PosteriorModel model;
  model.config = config;
  model.data = standardize(data);
  Rng init = derive_rng(config.seed, kInitStream);
  model.state = ArcoTrainState(ArcoParams::random(data.cols(), init, config.hidden_units, config.prior_std),
                               config.arco_lr, config.ema_decay);
  model.rng = derive_rng(config.seed, kTrainStream);
  return model;
}

std::vector<double> score_orders(const std::vector<CausalOrder>& orders, MechanismCache& cache, const Dataset& data,
                                 const EngineConfig& config,
                                 std::vector<std::shared_ptr<const ParentSetTable>>* tables) {
  std::map<CausalOrder, std::size_t> index;
  std::vector<CausalOrder> unique;
  for (const auto& o : orders) {
    if (index.emplace(o, unique.size()).second) unique.push_back(o);
  }

  std::map<MechanismKey, ParentSet> missing;
  for (const auto& o : unique) {
    for (int k = 1; k <= o.size(); ++k) {
      for (auto& ps : enumerate_parent_sets(k, o, config.max_parents)) {
        const MechanismKey key = key_of(ps);
        if (!missing.contains(key) && !cache.find(key)) missing.emplace(key, std::move(ps));
      }
    }
  }
  if (!missing.empty()) {
    std::vector<const ParentSet*> todo;
    for (const auto& [key, ps] : missing) todo.push_back(&ps);
    std::vector<std::optional<MechanismScore>> fitted(todo.size());
    const GpFitOptions options = config.gp_options();
    parallel_for(todo.size(), resolve_threads(config.threads), [&](std::size_t t) {
      fitted[t] = fit_mechanism(*todo[t], data, config.priors, options);
    });
    for (auto& f : fitted) cache.insert(std::move(*f));
  }

  std::vector<std::shared_ptr<const ParentSetTable>> built(unique.size());
  parallel_for(unique.size(), resolve_threads(config.threads), [&](std::size_t u) {
    built[u] = std::make_shared<const ParentSetTable>(
        build_table(unique[u], config.max_parents, [&](const ParentSet& ps) {
          auto entry = cache.find(key_of(ps));
          if (!entry) throw Error(ErrorCode::InvalidArgument, "mechanism missing from cache: " + to_string(ps));
          return entry->total();
        }));
  });

  std::vector<double> scores(orders.size());
  if (tables) tables->resize(orders.size());
  for (std::size_t m = 0; m < orders.size(); ++m) {
    const std::size_t u = index.at(orders[m]);
    scores[m] = log_order_score(*built[u]);
    if (tables) (*tables)[m] = built[u];
  }
  return scores;
}

int continue_learning(PosteriorModel& model, int step_budget) {
  const EngineConfig& cfg = model.config;
  const OrderScorer scorer = [&](const std::vector<CausalOrder>& orders) {
    return score_orders(orders, *model.cache, model.data, cfg);
  };
  int taken = 0;
  while (!model.finished() && (step_budget < 0 || taken < step_budget)) {
    const ArcoStepStats stats = arco_train_step(model.state, scorer, cfg.batch_size, model.rng);
    if (!model.state.params.all_finite()) throw Error(ErrorCode::NonFiniteObjective, "order model diverged");
    if (!model.history.empty()) {
      const auto& prev = model.history.back();
      const bool flat = std::abs(stats.max_weight - prev.max_weight) < cfg.plateau_tolerance &&
                        std::abs(stats.log_evidence - prev.log_evidence) < cfg.plateau_tolerance;
      model.stable_steps = flat ? model.stable_steps + 1 : 0;
    }
    model.history.push_back({model.state.step, stats.log_evidence, stats.max_weight, stats.baseline});
    if (model.stable_steps >= cfg.patience) model.converged = true;
    ++taken;
  }
  return taken;
}

PosteriorModel learn(const Dataset& data, const EngineConfig& config) {
  PosteriorModel model = init_model(data, config);
  continue_learning(model);
  return model;
}

OrderPosterior posterior_orders(const PosteriorModel& model, int n_orders, Rng& rng) {
  if (n_orders < 1) throw Error(ErrorCode::InvalidArgument, "need at least one order");
  std::vector<CausalOrder> orders;
  orders.reserve(static_cast<std::size_t>(n_orders));
  for (int m = 0; m < n_orders; ++m) orders.push_back(sample_order(model.arco(), rng));
  OrderPosterior post;
  std::vector<double> scores = score_orders(orders, *model.cache, model.data, model.config, &post.tables);
  post.ensemble = make_ensemble(std::move(orders), std::move(scores));
  return post;
}

OrderPosterior posterior_orders(const PosteriorModel& model) {
  Rng rng = derive_rng(model.config.seed, kInferenceStream);
  return posterior_orders(model, model.config.inference_orders, rng);
}

Eigen::MatrixXd posterior_edge_marginals(const OrderPosterior& posterior) {
  if (posterior.tables.empty()) throw Error(ErrorCode::InvalidArgument, "empty order posterior");
  const int d = posterior.tables.front()->size();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t m = 0; m < posterior.tables.size(); ++m) {
    p += posterior.ensemble.weights[m] * edge_posterior_given_order(*posterior.tables[m]);
  }
  return p;
}

Eigen::MatrixXd posterior_edge_marginals(const PosteriorModel& model) {
  return posterior_edge_marginals(posterior_orders(model));
}

double expected_shd(const OrderPosterior& posterior, const Dag& reference) {
  if (posterior.tables.empty()) throw Error(ErrorCode::InvalidArgument, "empty order posterior");
  if (reference.size() != posterior.tables.front()->size()) {
    throw Error(ErrorCode::DimensionMismatch, "reference graph size differs from model");
  }
  const ParentSetFunction contribution = [&](const ParentSet& ps) {
    const auto& ref = reference.parents(ps.node()).parents();
    int common = 0;
    for (int p : ps.parents()) common += std::binary_search(ref.begin(), ref.end(), p) ? 1 : 0;
    return static_cast<double>(ps.size() + ref.size() - 2 * static_cast<std::size_t>(common));
  };
  double total = 0.0;
  for (std::size_t m = 0; m < posterior.tables.size(); ++m) {
    total += posterior.ensemble.weights[m] * expectation_summing(*posterior.tables[m], contribution);
  }
  return total;
}

double expected_shd(const PosteriorModel& model, const Dag& reference) {
  return expected_shd(posterior_orders(model), reference);
}

WeightedSampleSet sample_interventional(const PosteriorModel& model, const Intervention& intervention,
                                        const SamplingShape& shape, Rng& rng) {
  const int d = model.d();
  validate_intervention(intervention, d);
  if (shape.orders < 1 || shape.graphs < 1 || shape.samples < 1) {
    throw Error(ErrorCode::InvalidArgument, "sampling shape must be positive");
  }
  std::vector<std::optional<double>> clamp(static_cast<std::size_t>(d));
  for (const auto& [var, value] : intervention) clamp[static_cast<std::size_t>(var)] = value;

  const OrderPosterior post = posterior_orders(model, shape.orders, rng);
  std::vector<Dag> graphs;
  std::vector<double> graph_weight;
  for (std::size_t m = 0; m < post.tables.size(); ++m) {
    for (int g = 0; g < shape.graphs; ++g) {
      graphs.push_back(sample_graph_given_order(*post.tables[m], rng));
      graph_weight.push_back(post.ensemble.weights[m] / (static_cast<double>(shape.graphs) * shape.samples));
    }
  }

  // One predictor per distinct non-root mechanism in use.
  std::map<MechanismKey, std::size_t> predictor_index;
  std::vector<MechanismCache::Entry> used;
  for (const auto& g : graphs) {
    for (int i = 0; i < d; ++i) {
      if (clamp[static_cast<std::size_t>(i)]) continue;
      const MechanismKey key = key_of(g.parents(i));
      if (predictor_index.contains(key)) continue;
      predictor_index.emplace(key, used.size());
      used.push_back(model.cache->find(key));
      if (!used.back()) throw Error(ErrorCode::InvalidArgument, "mechanism missing from cache");
    }
  }
  std::vector<std::unique_ptr<GpPredictor>> predictors(used.size());
  const int threads = resolve_threads(model.config.threads);
  parallel_for(used.size(), threads, [&](std::size_t u) {
    const MechanismScore& s = *used[u];
    if (s.is_root()) return;
    const int node = s.parent_set.node();
    predictors[u] = std::make_unique<GpPredictor>(parent_columns(model.data, s.parent_set), model.data.values.col(node),
                                                  std::get<RqHyper>(s.hyper));
  });

  const std::uint64_t base = rng();
  const Eigen::Index per_graph = shape.samples;
  WeightedSampleSet out;
  out.samples.resize(static_cast<Eigen::Index>(graphs.size()) * per_graph, d);
  out.weights.resize(out.samples.rows());
  parallel_for(graphs.size(), threads, [&](std::size_t gi) {
    Rng local = derive_rng(base, gi);
    const Dag& g = graphs[gi];
    const auto topo = g.topological_order();
    Eigen::VectorXd z(d);  // standardised units
    for (Eigen::Index s = 0; s < per_graph; ++s) {
      const Eigen::Index row = static_cast<Eigen::Index>(gi) * per_graph + s;
      for (int i : *topo) {
        if (const auto& c = clamp[static_cast<std::size_t>(i)]) {
          z(i) = model.data.to_standard(i, *c);
          out.samples(row, i) = *c;
          continue;
        }
        const std::size_t u = predictor_index.at(key_of(g.parents(i)));
        if (used[u]->is_root()) {
          z(i) = nig_predictive_sample(std::get<NigPrior>(used[u]->hyper), local);
        } else {
          const auto& pa = g.parents(i).parents();
          Eigen::VectorXd x(static_cast<Eigen::Index>(pa.size()));
          for (std::size_t c = 0; c < pa.size(); ++c) x(static_cast<Eigen::Index>(c)) = z(pa[c]);
          z(i) = predictors[u]->sample(x, local);
        }
        out.samples(row, i) = model.data.to_raw(i, z(i));
      }
      out.weights(row) = graph_weight[gi];
    }
  });
  out.weights /= out.weights.sum();
  return out;
}

double ace(const PosteriorModel& model, const Intervention& intervention, int target, const SamplingShape& shape,
           Rng& rng) {
  validate_intervention(intervention, model.d());
  if (target < 0 || target >= model.d()) throw Error(ErrorCode::UnknownVariable, "unknown target variable");
  for (const auto& [var, value] : intervention)
    if (var == target) return value;
  const WeightedSampleSet s = sample_interventional(model, intervention, shape, rng);
  return s.samples.col(target).dot(s.weights);
}

}  // namespace arcobci
