#include "arcobci/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "arcobci/error.hpp"
#include "arcobci/nig.hpp"

namespace arcobci {

namespace {

double draw_gamma(double shape, double rate, Rng& rng) {
  return std::gamma_distribution<double>(shape, 1.0 / rate)(rng);
}

Eigen::VectorXd gather(const Eigen::VectorXd& row, const std::vector<int>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t c = 0; c < idx.size(); ++c) out(static_cast<Eigen::Index>(c)) = row(idx[c]);
  return out;
}

}  // namespace

double GpMechanism::operator()(const Eigen::VectorXd& x) const {
  double f = 0.0;
  for (Eigen::Index s = 0; s < support.rows(); ++s) f += rq_kernel(support.row(s).transpose(), x, hyper) * alpha(s);
  return f;
}

double SigmoidMechanism::operator()(const Eigen::VectorXd& x) const {
  double f = 0.0;
  for (std::size_t j = 0; j < scale.size(); ++j) {
    const double u = slope[j] * (x(static_cast<Eigen::Index>(j)) + shift[j]);
    f += scale[j] * u / (1.0 + std::abs(u));
  }
  return f;
}

MechanismKind parse_mechanism_kind(const std::string& s) {
  if (s == "gp") return MechanismKind::Gp;
  if (s == "sigmoid") return MechanismKind::Sigmoid;
  throw Error(ErrorCode::InvalidArgument, "unknown mechanism kind '" + s + "'");
}

std::string to_string(MechanismKind kind) { return kind == MechanismKind::Gp ? "gp" : "sigmoid"; }

double GroundTruthScm::mean_given_parents(int node, const Eigen::VectorXd& parent_values) const {
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, RootMechanism>) {
          return m.mean;
        } else {
          return m(parent_values);
        }
      },
      mechanisms[static_cast<std::size_t>(node)]);
}

double GroundTruthScm::noise_var(int node) const {
  return std::visit([](const auto& m) { return m.noise_var; }, mechanisms[static_cast<std::size_t>(node)]);
}

Dag sample_er_graph(int d, double expected_degree, Rng& rng) {
  if (d < 2) throw Error(ErrorCode::InvalidArgument, "ER graph needs d >= 2");
  if (!(expected_degree >= 0.0) || expected_degree > d - 1) {
    throw Error(ErrorCode::InvalidArgument, "expected degree must lie in [0, d-1]");
  }
  std::vector<int> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const double p = expected_degree / (d - 1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::pair<int, int>> edges;
  for (int a = 0; a < d; ++a)
    for (int b = a + 1; b < d; ++b)
      if (u(rng) < p) edges.emplace_back(order[static_cast<std::size_t>(a)], order[static_cast<std::size_t>(b)]);
  return Dag::from_edges(d, edges);
}

Dag sample_sf_graph(int d, int m, Rng& rng) {
  if (m < 1 || d <= m) throw Error(ErrorCode::InvalidArgument, "SF graph needs d > m >= 1");
  std::vector<int> out_degree(static_cast<std::size_t>(d), 0);
  std::vector<std::pair<int, int>> edges;
  for (int k = 1; k < d; ++k) {
    std::vector<int> candidates(static_cast<std::size_t>(k));
    std::iota(candidates.begin(), candidates.end(), 0);
    for (int t = 0; t < std::min(k, m); ++t) {
      std::vector<double> w(candidates.size());
      for (std::size_t c = 0; c < candidates.size(); ++c) w[c] = out_degree[static_cast<std::size_t>(candidates[c])] + 1.0;
      const std::size_t pick = std::discrete_distribution<std::size_t>(w.begin(), w.end())(rng);
      const int parent = candidates[pick];
      candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(pick));
      edges.emplace_back(parent, k);
    }
    for (std::size_t e = edges.size() - static_cast<std::size_t>(std::min(k, m)); e < edges.size(); ++e) {
      ++out_degree[static_cast<std::size_t>(edges[e].first)];
    }
  }
  std::vector<int> relabel(static_cast<std::size_t>(d));
  std::iota(relabel.begin(), relabel.end(), 0);
  std::shuffle(relabel.begin(), relabel.end(), rng);
  for (auto& [p, c] : edges) {
    p = relabel[static_cast<std::size_t>(p)];
    c = relabel[static_cast<std::size_t>(c)];
  }
  return Dag::from_edges(d, edges);
}

GroundTruthScm sample_gt_mechanisms(const Dag& graph, MechanismKind kind, Rng& rng, const GroundTruthOptions& options) {
  GroundTruthScm scm;
  scm.graph = graph;
  scm.mechanisms.resize(static_cast<std::size_t>(graph.size()));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const NigPrior root_prior = NigPrior::ground_truth_default();
  for (int i = 0; i < graph.size(); ++i) {
    const auto& parents = graph.parents(i).parents();
    const int p = static_cast<int>(parents.size());
    if (p == 0) {
      RootMechanism r;
      r.noise_var = 1.0 / draw_gamma(root_prior.alpha0, root_prior.beta0, rng);
      r.mean = root_prior.mu0 + std::sqrt(r.noise_var / root_prior.kappa0) * normal(rng);
      scm.mechanisms[static_cast<std::size_t>(i)] = r;
    } else if (kind == MechanismKind::Gp) {
      const HyperPrior prior = HyperPrior::ground_truth(p);
      GpMechanism g;
      g.hyper.delta = draw_gamma(prior.delta.shape, prior.delta.rate, rng);
      g.hyper.lengthscale = draw_gamma(prior.lengthscale.shape, prior.lengthscale.rate, rng);
      g.hyper.mixing = draw_gamma(prior.mixing.shape, prior.mixing.rate, rng);
      g.noise_var = draw_gamma(prior.noise.shape, prior.noise.rate, rng);
      g.hyper.noise_var = g.noise_var;
      std::uniform_real_distribution<double> loc(options.support_low, options.support_high);
      g.support.resize(options.support_points, p);
      for (Eigen::Index s = 0; s < g.support.rows(); ++s)
        for (Eigen::Index c = 0; c < p; ++c) g.support(s, c) = loc(rng);
      const Eigen::MatrixXd k = rq_gram(g.support, g.support, g.hyper);
      Eigen::MatrixXd cov = k;
      cov.diagonal().array() += 1e-8 * g.hyper.delta;
      const auto llt = robust_cholesky(cov);
      Eigen::VectorXd z(options.support_points);
      for (Eigen::Index s = 0; s < z.size(); ++s) z(s) = normal(rng);
      g.alpha = llt.matrixU().solve(z);
      g.values = k * g.alpha;
      scm.mechanisms[static_cast<std::size_t>(i)] = std::move(g);
    } else {
      SigmoidMechanism s;
      for (int j = 0; j < p; ++j) {
        s.scale.push_back(draw_gamma(50.0, 10.0, rng));
        const double magnitude = 0.5 + 1.5 * unit(rng);
        s.slope.push_back(unit(rng) < 0.5 ? -magnitude : magnitude);
        s.shift.push_back(-2.0 + 4.0 * unit(rng));
      }
      s.noise_var = draw_gamma(50.0, 50.0, rng);
      scm.mechanisms[static_cast<std::size_t>(i)] = std::move(s);
    }
  }
  return scm;
}

void validate_intervention(const Intervention& intervention, int d) {
  std::vector<bool> seen(static_cast<std::size_t>(d), false);
  for (const auto& [var, value] : intervention) {
    if (var < 0 || var >= d) throw Error(ErrorCode::UnknownVariable, "intervention on unknown variable " + std::to_string(var));
    if (seen[static_cast<std::size_t>(var)]) throw Error(ErrorCode::DuplicateIndex, "variable intervened twice");
    if (!std::isfinite(value)) throw Error(ErrorCode::InvalidArgument, "intervention value must be finite");
    seen[static_cast<std::size_t>(var)] = true;
  }
}

Eigen::MatrixXd ancestral_sample(const GroundTruthScm& scm, int n, const Intervention& intervention, Rng& rng,
                                 int threads) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "need n >= 1 samples");
  const int d = scm.size();
  validate_intervention(intervention, d);
  std::vector<std::optional<double>> clamp(static_cast<std::size_t>(d));
  for (const auto& [var, value] : intervention) clamp[static_cast<std::size_t>(var)] = value;
  const auto topo = scm.graph.topological_order();
  if (!topo) throw Error(ErrorCode::InvalidArgument, "graph has a cycle");

  const std::uint64_t base = rng();
  Eigen::MatrixXd out(n, d);
  parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t r) {
    Rng row_rng = derive_rng(base, r);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd x(d);
    for (int i : *topo) {
      if (clamp[static_cast<std::size_t>(i)]) {
        x(i) = *clamp[static_cast<std::size_t>(i)];
        continue;
      }
      const Eigen::VectorXd pa = gather(x, scm.graph.parents(i).parents());
      x(i) = scm.mean_given_parents(i, pa) + std::sqrt(scm.noise_var(i)) * normal(row_rng);
    }
    out.row(static_cast<Eigen::Index>(r)) = x.transpose();
  });
  return out;
}

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, Eigen::Index cols) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const auto row = j[r].get<std::vector<double>>();
    if (static_cast<Eigen::Index>(row.size()) != cols) throw Error(ErrorCode::ParseError, "ragged matrix in scm json");
    for (Eigen::Index c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), c) = row[static_cast<std::size_t>(c)];
  }
  return m;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

nlohmann::json scm_to_json(const GroundTruthScm& scm) {
  nlohmann::json j;
  j["graph"] = nlohmann::json::parse(dag_to_json(scm.graph));
  nlohmann::json mechs = nlohmann::json::array();
  for (const auto& mech : scm.mechanisms) {
    nlohmann::json m;
    if (const auto* r = std::get_if<RootMechanism>(&mech)) {
      m = {{"kind", "root"}, {"mean", r->mean}, {"noise_var", r->noise_var}};
    } else if (const auto* g = std::get_if<GpMechanism>(&mech)) {
      m = {{"kind", "gp"},
           {"delta", g->hyper.delta},
           {"lengthscale", g->hyper.lengthscale},
           {"mixing", g->hyper.mixing},
           {"noise_var", g->noise_var},
           {"support", matrix_to_json(g->support)},
           {"values", to_std(g->values)},
           {"alpha", to_std(g->alpha)}};
    } else {
      const auto& s = std::get<SigmoidMechanism>(mech);
      m = {{"kind", "sigmoid"}, {"scale", s.scale}, {"slope", s.slope}, {"shift", s.shift}, {"noise_var", s.noise_var}};
    }
    mechs.push_back(std::move(m));
  }
  j["mechanisms"] = std::move(mechs);
  return j;
}

GroundTruthScm scm_from_json(const nlohmann::json& j) {
  try {
    GroundTruthScm scm;
    scm.graph = dag_from_json(j.at("graph").dump());
    const auto& mechs = j.at("mechanisms");
    if (static_cast<int>(mechs.size()) != scm.graph.size()) throw Error(ErrorCode::ParseError, "mechanism count differs from graph size");
    for (std::size_t i = 0; i < mechs.size(); ++i) {
      const auto& m = mechs[i];
      const std::string kind = m.at("kind").get<std::string>();
      const auto p = static_cast<Eigen::Index>(scm.graph.parents(static_cast<int>(i)).size());
      if (kind == "root") {
        scm.mechanisms.emplace_back(RootMechanism{m.at("mean").get<double>(), m.at("noise_var").get<double>()});
      } else if (kind == "gp") {
        GpMechanism g;
        g.hyper = {m.at("delta").get<double>(), m.at("lengthscale").get<double>(), m.at("mixing").get<double>(),
                   m.at("noise_var").get<double>()};
        g.noise_var = g.hyper.noise_var;
        g.support = matrix_from_json(m.at("support"), p);
        g.values = vector_from_json(m.at("values"));
        g.alpha = vector_from_json(m.at("alpha"));
        scm.mechanisms.emplace_back(std::move(g));
      } else if (kind == "sigmoid") {
        SigmoidMechanism s{m.at("scale").get<std::vector<double>>(), m.at("slope").get<std::vector<double>>(),
                           m.at("shift").get<std::vector<double>>(), m.at("noise_var").get<double>()};
        if (static_cast<Eigen::Index>(s.scale.size()) != p) throw Error(ErrorCode::ParseError, "sigmoid arity mismatch");
        scm.mechanisms.emplace_back(std::move(s));
      } else {
        throw Error(ErrorCode::ParseError, "unknown mechanism kind '" + kind + "'");
      }
      const bool is_root = std::holds_alternative<RootMechanism>(scm.mechanisms.back());
      if (is_root != (p == 0)) throw Error(ErrorCode::ParseError, "mechanism kind inconsistent with parent count");
    }
    return scm;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("scm json: ") + e.what());
  }
}

}  // namespace arcobci
