#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "arcobci/checkpoint.hpp"
#include "arcobci/engine.hpp"
#include "arcobci/error.hpp"
#include "oracles.hpp"
#include "reference_models.hpp"

using namespace arcobci;

namespace {

struct Problem {
  GroundTruthScm scm;
  Eigen::MatrixXd raw;
};

Problem chain_problem(std::uint64_t seed, int n) {
  Rng rng = derive_rng(seed, 900);
  Problem p;
  p.scm = sample_gt_mechanisms(Dag::from_edges(3, {{0, 1}, {1, 2}}), MechanismKind::Gp, rng);
  p.raw = ancestral_sample(p.scm, n, {}, rng);
  return p;
}

Problem sf_problem(std::uint64_t seed, int d, int n) {
  Rng rng = derive_rng(seed, 901);
  Problem p;
  p.scm = sample_gt_mechanisms(sample_sf_graph(d, 2, rng), MechanismKind::Gp, rng);
  p.raw = ancestral_sample(p.scm, n, {}, rng);
  return p;
}

// X0 ~ N(0, 1) covers the intervention range; both links are saturating and
// nonlinear so the direction is identifiable.
Problem known_chain(std::uint64_t seed, int n) {
  Problem p;
  p.scm.graph = Dag::from_edges(3, {{0, 1}, {1, 2}});
  p.scm.mechanisms = {RootMechanism{0.0, 1.0}, SigmoidMechanism{{2.0}, {1.5}, {0.3}, 0.05},
                      SigmoidMechanism{{2.0}, {-1.5}, {-0.2}, 0.05}};
  Rng rng = derive_rng(seed, 902);
  p.raw = ancestral_sample(p.scm, n, {}, rng);
  return p;
}

// Dense GP posterior for one input column, written from the textbook formulas.
class GpPosterior {
 public:
  GpPosterior(const Dataset& data, int input, int output, const RqHyper& h) : h_(h) {
    x_ = data.values.col(input);
    const Eigen::MatrixXd cov = oracle::dense_cov(x_, h);
    solver_ = cov.fullPivLu();
    alpha_ = solver_.solve(data.values.col(output));
  }
  std::pair<double, double> operator()(double x) const {
    Eigen::VectorXd k(x_.size());
    for (Eigen::Index i = 0; i < x_.size(); ++i) {
      k(i) = oracle::rq(Eigen::VectorXd::Constant(1, x), Eigen::VectorXd::Constant(1, x_(i)), h_);
    }
    return {k.dot(alpha_), h_.delta - k.dot(solver_.solve(k))};
  }
  double noise_var() const { return h_.noise_var; }

 private:
  RqHyper h_;
  Eigen::VectorXd x_;
  Eigen::FullPivLU<Eigen::MatrixXd> solver_;
  Eigen::VectorXd alpha_;
};

EngineConfig short_config(std::uint64_t seed, int steps) {
  EngineConfig c;
  c.seed = seed;
  c.max_arco_steps = steps;
  return c;
}

std::shared_ptr<const ParentSetTable> synthetic_table(const CausalOrder& o, const oracle::ParentSetValues& s) {
  return std::make_shared<const ParentSetTable>(
      build_table(o, 2, [&s](const ParentSet& ps) { return s.at({ps.node(), ps.parents()}); }));
}

OrderPosterior point_mass(const CausalOrder& o, const ParentSetScore& score) {
  OrderPosterior post;
  auto table = std::make_shared<const ParentSetTable>(build_table(o, 2, score));
  post.ensemble = make_ensemble({o}, {log_order_score(*table)});
  post.tables = {table};
  return post;
}

// Weighted mean and its Monte Carlo standard error treating draws as independent.
std::pair<double, double> weighted_mean_se(const Eigen::VectorXd& x, const Eigen::VectorXd& w) {
  const double m = w.dot(x);
  const double var = (w.array().square() * (x.array() - m).square()).sum();
  return {m, std::sqrt(var)};
}

}  // namespace

TEST(Engine, ConfigValidationAndJson) {
  EngineConfig c;
  EXPECT_NO_THROW(c.validate());
  c.ema_decay = 1.0;
  EXPECT_ANY_THROW(c.validate());
  c = EngineConfig{};
  c.batch_size = 0;
  EXPECT_ANY_THROW(c.validate());
  c = EngineConfig{};
  c.seed = 77;
  c.max_parents = 3;
  c.priors.delta_shape = 42.0;
  const EngineConfig back = config_from_json(config_to_json(c));
  EXPECT_EQ(back.seed, 77u);
  EXPECT_EQ(back.max_parents, 3);
  EXPECT_EQ(back.priors.delta_shape, 42.0);
  EXPECT_EQ(config_to_json(back).dump(), config_to_json(c).dump());
}

TEST(Engine, SingleVariable) {
  Rng rng(1);
  Eigen::MatrixXd raw(30, 1);
  std::normal_distribution<double> n(2.0, 3.0);
  for (int i = 0; i < 30; ++i) raw(i, 0) = n(rng);
  const PosteriorModel m = learn(Dataset(raw), short_config(0, 400));
  EXPECT_TRUE(m.finished());
  const OrderPosterior post = posterior_orders(m);
  for (const auto& o : post.ensemble.orders) EXPECT_EQ(o, identity_order(1));
  EXPECT_NEAR(post.ensemble.log_order_scores[0], nig_log_marginal(m.data.values.col(0), NigPrior::inference_default()),
              1e-12);
  EXPECT_EQ(posterior_edge_marginals(post)(0, 0), 0.0);
  Rng q(2);
  const WeightedSampleSet s = sample_interventional(m, {{0, 1.75}}, {5, 2, 3}, q);
  EXPECT_EQ(s.samples.rows(), 30);
  EXPECT_TRUE((s.samples.col(0).array() == 1.75).all());
  EXPECT_EQ(ace(m, {{0, -0.5}}, 0, {5, 2, 3}, q), -0.5);
}

TEST(Engine, PointMassEnsembleMatchesSingleOrder) {
  Rng rng(3);
  std::normal_distribution<double> dist(0.0, 2.0);
  const auto scores = oracle::random_parent_set_values(4, 2, dist, rng);
  const CausalOrder o = make_order({2, 0, 3, 1});
  const OrderPosterior post = point_mass(o, [&](const ParentSet& ps) { return scores.at({ps.node(), ps.parents()}); });
  EXPECT_EQ(posterior_edge_marginals(post), edge_posterior_given_order(*post.tables[0]));
}

TEST(Engine, ExpectedShdPointMasses) {
  const Dag reference = Dag::from_edges(4, {{0, 1}, {0, 2}, {1, 3}, {2, 3}});
  const CausalOrder o = make_order({0, 1, 2, 3});
  // A gap of 800 in log score makes every other parent set's weight exactly zero.
  const OrderPosterior on_ref =
      point_mass(o, [&](const ParentSet& ps) { return ps == reference.parents(ps.node()) ? 800.0 : 0.0; });
  EXPECT_EQ(expected_shd(on_ref, reference), 0.0);
  const OrderPosterior on_empty = point_mass(o, [](const ParentSet& ps) { return ps.empty() ? 800.0 : 0.0; });
  EXPECT_EQ(expected_shd(on_empty, reference), 4.0);
  EXPECT_THROW(expected_shd(on_ref, Dag(3)), Error);
}

TEST(Engine, ExpectedShdMatchesGraphSampling) {
  Rng rng(4);
  std::normal_distribution<double> dist(0.0, 1.5);
  const auto scores = oracle::random_parent_set_values(4, 2, dist, rng);
  const Dag reference = Dag::from_edges(4, {{3, 1}, {1, 0}, {3, 2}});
  OrderPosterior post;
  std::vector<CausalOrder> orders{make_order({0, 1, 2, 3}), make_order({3, 1, 0, 2}), make_order({2, 3, 1, 0})};
  std::vector<double> ls;
  for (const auto& o : orders) {
    post.tables.push_back(synthetic_table(o, scores));
    ls.push_back(log_order_score(*post.tables.back()));
  }
  post.ensemble = make_ensemble(orders, ls);
  const double eshd = expected_shd(post, reference);
  EXPECT_GE(eshd, 0.0);
  EXPECT_LE(eshd, 12.0);

  std::discrete_distribution<std::size_t> pick(post.ensemble.weights.begin(), post.ensemble.weights.end());
  const int n = 100000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const Dag g = sample_graph_given_order(*post.tables[pick(rng)], rng);
    const double shd = structural_hamming_distance(g, reference);
    s1 += shd;
    s2 += shd * shd;
  }
  const double mean = s1 / n;
  const double se = std::sqrt((s2 / n - mean * mean) / n);
  EXPECT_NEAR(eshd, mean, 3 * se);
}

class TrainedFourNode : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    problem_ = new Problem(sf_problem(7, 4, 80));
    model_ = new PosteriorModel(learn(Dataset(problem_->raw), short_config(7, 30)));
  }
  static void TearDownTestSuite() {
    delete model_;
    delete problem_;
  }
  static Problem* problem_;
  static PosteriorModel* model_;
};

Problem* TrainedFourNode::problem_ = nullptr;
PosteriorModel* TrainedFourNode::model_ = nullptr;

TEST_F(TrainedFourNode, EdgeMarginalsAreProbabilities) {
  const Eigen::MatrixXd p = posterior_edge_marginals(*model_);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(p(i, i), 0.0);
  EXPECT_GE(p.minCoeff(), 0.0);
  EXPECT_LE(p.maxCoeff(), 1.0 + 1e-12);
  const double eshd = expected_shd(*model_, problem_->scm.graph);
  EXPECT_GE(eshd, 0.0);
  EXPECT_LE(eshd, 12.0);
}

TEST_F(TrainedFourNode, WeightsFormConvexCombination) {
  const OrderPosterior post = posterior_orders(*model_);
  ASSERT_EQ(post.ensemble.size(), 100u);
  double sum = 0.0;
  for (double w : post.ensemble.weights) {
    EXPECT_GE(w, 0.0);
    sum += w;
  }
  EXPECT_NEAR(sum, 1.0, 1e-10);
}

TEST_F(TrainedFourNode, CacheCoversInferenceOrders) {
  const OrderPosterior post = posterior_orders(*model_);
  for (const auto& o : post.ensemble.orders) {
    for (int pos = 1; pos <= 4; ++pos) {
      for (const auto& ps : enumerate_parent_sets(pos, o, 2)) EXPECT_TRUE(model_->cache->find(key_of(ps)));
    }
  }
}

TEST_F(TrainedFourNode, JointScoreFactorisesOverNodes) {
  // For any capped DAG, the summed cached local scores equal the product of
  // per-node marginal likelihoods and hyperpriors evaluated from scratch.
  Rng rng(5);
  const Dataset& data = model_->data;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<int> seq{0, 1, 2, 3};
    std::shuffle(seq.begin(), seq.end(), rng);
    const CausalOrder o = make_order(seq);
    const ParentSetTable t = build_table(o, *model_->cache, data, 2, model_->config.priors,
                                         model_->config.gp_options());
    const Dag g = sample_graph_given_order(t, rng);
    double cached = 0.0, direct = 0.0;
    for (int i = 0; i < 4; ++i) {
      const auto entry = model_->cache->find(key_of(g.parents(i)));
      ASSERT_TRUE(entry);
      cached += entry->total();
      const Eigen::VectorXd y = data.values.col(i);
      if (g.parents(i).empty()) {
        direct += nig_log_marginal(y, model_->config.priors.root);
      } else {
        const RqHyper h = std::get<RqHyper>(entry->hyper);
        const HyperPrior prior = model_->config.priors.for_parents(static_cast<int>(g.parents(i).size()));
        direct += gp_log_marginal(y, parent_columns(data, g.parents(i)), h) + prior.log_density(h);
      }
    }
    EXPECT_NEAR(cached, direct, 1e-8 * std::abs(direct));
  }
}

TEST_F(TrainedFourNode, InterventionClampsExactly) {
  Rng rng(6);
  const WeightedSampleSet s = sample_interventional(*model_, {{1, 0.3}, {3, -2.25}}, {20, 3, 4}, rng);
  EXPECT_EQ(s.samples.rows(), 240);
  EXPECT_TRUE((s.samples.col(1).array() == 0.3).all());
  EXPECT_TRUE((s.samples.col(3).array() == -2.25).all());
  EXPECT_NEAR(s.weights.sum(), 1.0, 1e-10);
  EXPECT_EQ(ace(*model_, {{2, 0.8}}, 2, {20, 3, 4}, rng), 0.8);
  try {
    sample_interventional(*model_, {{4, 0.0}}, {}, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownVariable);
  }
}

TEST(Determinism, LearningIndependentOfThreadCount) {
  const Problem p = sf_problem(11, 4, 60);
  EngineConfig one = short_config(11, 12);
  EngineConfig many = one;
  many.threads = 4;
  const PosteriorModel a = learn(Dataset(p.raw), one);
  const PosteriorModel b = learn(Dataset(p.raw), many);
  EXPECT_EQ(model_to_json(a).dump(), model_to_json(b).dump());
  EXPECT_EQ(posterior_edge_marginals(a), posterior_edge_marginals(b));
  Rng ra(3), rb(3);
  const auto sa = sample_interventional(a, {{0, 0.5}}, {10, 3, 3}, ra);
  const auto sb = sample_interventional(b, {{0, 0.5}}, {10, 3, 3}, rb);
  EXPECT_EQ(sa.samples, sb.samples);
  EXPECT_EQ(sa.weights, sb.weights);
}

TEST(Determinism, ResumedTrainingMatchesUninterrupted) {
  const Problem p = sf_problem(12, 4, 60);
  const EngineConfig c = short_config(12, 14);
  const PosteriorModel straight = learn(Dataset(p.raw), c);

  PosteriorModel first = init_model(Dataset(p.raw), c);
  EXPECT_EQ(continue_learning(first, 5), 5);
  PosteriorModel resumed = model_from_json(nlohmann::json::parse(model_to_json(first).dump()));
  continue_learning(resumed);
  EXPECT_EQ(model_to_json(resumed).dump(), model_to_json(straight).dump());
}

TEST(ChainRecovery, TopOrderFollowsCausalDirection) {
  int compatible = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Problem p = chain_problem(seed, 200);
    const PosteriorModel m = learn(Dataset(p.raw), short_config(seed, 400));
    const OrderPosterior post = posterior_orders(m);
    const auto best = std::max_element(post.ensemble.weights.begin(), post.ensemble.weights.end()) -
                      post.ensemble.weights.begin();
    const CausalOrder& top = post.ensemble.orders[static_cast<std::size_t>(best)];
    const bool ok = top == make_order({0, 1, 2});
    compatible += ok ? 1 : 0;
    std::cout << "seed " << seed << " top order " << to_string(top) << (ok ? "" : " (incompatible)") << "\n";
  }
  EXPECT_GE(compatible, 8);
}

TEST(ChainIntervention, MeanMatchesModelPosteriorByQuadrature) {
  // With all posterior mass on the chain, E[X2 | do(X0 = t), D] is a
  // one-dimensional integral of the X2 GP mean against the X1 predictive.
  const Problem p = known_chain(3, 200);
  const PosteriorModel m = learn(Dataset(p.raw), short_config(3, 400));
  const Eigen::MatrixXd edges = posterior_edge_marginals(m);
  ASSERT_GT(edges(0, 1), 0.999);
  ASSERT_GT(edges(1, 2), 0.999);
  ASSERT_LT(edges(0, 2), 1e-3);
  const Dataset& data = m.data;
  const GpPosterior f1(data, 0, 1, std::get<RqHyper>(m.cache->find(key_of(ParentSet(1, {0})))->hyper));
  const GpPosterior f2(data, 1, 2, std::get<RqHyper>(m.cache->find(key_of(ParentSet(2, {1})))->hyper));
  Rng rng(41);
  for (double t : {-1.0, 0.0, 1.0}) {
    const auto [m1, v1] = f1(data.to_standard(0, t));
    const double sd = std::sqrt(v1 + f1.noise_var());
    double integral = 0.0;
    const int points = 4001;
    const double step = 20.0 * sd / (points - 1);
    for (int k = 0; k < points; ++k) {
      const double z = -10.0 + 20.0 * k / (points - 1);
      integral += f2(m1 + z * sd).first * std::exp(-0.5 * z * z) / std::sqrt(2 * M_PI) / sd * step;
    }
    const double expected = data.to_raw(2, integral);
    const WeightedSampleSet s = sample_interventional(m, {{0, t}}, {}, rng);
    const auto [mean, se] = weighted_mean_se(s.samples.col(2), s.weights);
    EXPECT_NEAR(mean, expected, 3 * se) << "t=" << t;
    Rng again(41 + static_cast<int>(t) + 1);
    EXPECT_NEAR(ace(m, {{0, t}}, 2, {}, again), expected, 4 * se) << "t=" << t;
  }
}

TEST(ChainIntervention, MeanTracksGroundTruth) {
  const Problem p = known_chain(4, 200);
  const PosteriorModel m = learn(Dataset(p.raw), short_config(4, 400));
  Rng truth_rng(40), model_rng(41);
  for (double t : {-1.0, 0.0, 1.0}) {
    const Intervention iv{{0, t}};
    const Eigen::MatrixXd truth = ancestral_sample(p.scm, 10000, iv, truth_rng);
    const WeightedSampleSet s = sample_interventional(m, iv, {}, model_rng);
    EXPECT_NEAR(s.weights.dot(s.samples.col(2)), truth.col(2).mean(), 0.15) << "t=" << t;
  }
}

TEST(ChainIntervention, AceInvariantToStandardisationRoundTrip) {
  const Problem p = chain_problem(5, 200);
  const Dataset standardised = standardize(Dataset(p.raw));
  const PosteriorModel raw_model = learn(Dataset(p.raw), short_config(5, 400));
  const PosteriorModel std_model = learn(Dataset(standardised.values), short_config(5, 400));
  for (double t : {-1.0, 0.5}) {
    Rng ra(8), rb(9);
    const WeightedSampleSet a = sample_interventional(raw_model, {{0, t}}, {}, ra);
    const WeightedSampleSet b =
        sample_interventional(std_model, {{0, standardised.to_standard(0, t)}}, {}, rb);
    const auto [ma, sa] = weighted_mean_se(a.samples.col(2), a.weights);
    const auto [mb_std, sb_std] = weighted_mean_se(b.samples.col(2), b.weights);
    const double mb = standardised.to_raw(2, mb_std);
    const double sb = sb_std * standardised.scale(2);
    EXPECT_NEAR(ma, mb, 3 * std::sqrt(sa * sa + sb * sb)) << "t=" << t;
  }
}
