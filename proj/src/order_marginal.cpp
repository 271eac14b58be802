#include "arcobci/order_marginal.hpp"

#include <algorithm>
#include <cmath>

#include "arcobci/error.hpp"

namespace arcobci {

namespace {

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

void combinations(const std::vector<int>& pool, int size, int start, std::vector<int>& current,
                  const std::function<void(const std::vector<int>&)>& emit) {
  if (static_cast<int>(current.size()) == size) {
    emit(current);
    return;
  }
  const int need = size - static_cast<int>(current.size());
  for (int i = start; i + need <= static_cast<int>(pool.size()); ++i) {
    current.push_back(pool[static_cast<std::size_t>(i)]);
    combinations(pool, size, i + 1, current, emit);
    current.pop_back();
  }
}

}  // namespace

std::size_t count_parent_sets(int position, int max_parents) {
  double total = 0.0;
  for (int j = 0; j <= std::min(max_parents, position - 1); ++j) total += binomial(position - 1, j);
  return static_cast<std::size_t>(std::llround(total));
}

std::vector<ParentSet> enumerate_parent_sets(int position, const CausalOrder& order, int max_parents) {
  if (position < 1 || position > order.size()) throw Error(ErrorCode::IndexOutOfRange, "position out of range");
  if (max_parents < 0) throw Error(ErrorCode::InvalidArgument, "parent cap must be nonnegative");
  const int node = order.at(position - 1);
  std::vector<int> pool(order.prefix(position - 1).begin(), order.prefix(position - 1).end());
  std::sort(pool.begin(), pool.end());

  std::vector<ParentSet> out;
  out.reserve(count_parent_sets(position, max_parents));
  std::vector<int> current;
  for (int size = 0; size <= std::min<int>(max_parents, static_cast<int>(pool.size())); ++size) {
    combinations(pool, size, 0, current, [&](const std::vector<int>& c) { out.emplace_back(node, c); });
  }
  return out;
}

ParentSetTable build_table(const CausalOrder& order, int max_parents, const ParentSetScore& score) {
  ParentSetTable table;
  table.order = order;
  table.max_parents = max_parents;
  table.nodes.resize(static_cast<std::size_t>(order.size()));
  for (int k = 1; k <= order.size(); ++k) {
    NodeTable& nt = table.nodes[static_cast<std::size_t>(order.at(k - 1))];
    nt.node = order.at(k - 1);
    nt.parent_sets = enumerate_parent_sets(k, order, max_parents);
    nt.log_prior = -std::log(static_cast<double>(nt.parent_sets.size()));
    nt.log_scores.resize(nt.parent_sets.size());
    std::vector<double> joint(nt.parent_sets.size());
    for (std::size_t s = 0; s < nt.parent_sets.size(); ++s) {
      nt.log_scores[s] = score(nt.parent_sets[s]);
      joint[s] = nt.log_prior + nt.log_scores[s];
    }
    nt.log_alpha = logsumexp(joint);
    if (!std::isfinite(nt.log_alpha)) {
      throw Error(ErrorCode::NonFiniteObjective, "node normaliser not finite for node " + std::to_string(nt.node));
    }
    nt.posterior.resize(joint.size());
    for (std::size_t s = 0; s < joint.size(); ++s) nt.posterior[s] = std::exp(joint[s] - nt.log_alpha);
  }
  return table;
}

ParentSetTable build_table(const CausalOrder& order, MechanismCache& cache, const Dataset& data, int max_parents,
                           const MechanismPriors& priors, const GpFitOptions& options) {
  return build_table(order, max_parents, [&](const ParentSet& ps) {
    return local_score(cache, ps, data, priors, options)->total();
  });
}

double log_order_score(const ParentSetTable& table) {
  double total = 0.0;
  for (const auto& nt : table.nodes) total += nt.log_alpha;
  return total;
}

std::vector<double> importance_weights(std::span<const double> log_scores) {
  if (log_scores.empty()) throw Error(ErrorCode::InvalidArgument, "no log scores");
  for (double v : log_scores) {
    if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
      throw Error(ErrorCode::InvalidArgument, "log scores must be finite or -inf");
    }
  }
  const double lse = logsumexp(log_scores);
  if (lse == kNegInf) throw Error(ErrorCode::AllNegInfinite, "all log scores are -inf");
  std::vector<double> w(log_scores.size());
  for (std::size_t m = 0; m < w.size(); ++m) w[m] = std::exp(log_scores[m] - lse);
  return w;
}

double expectation_factorising(const ParentSetTable& table, const ParentSetFunction& factors) {
  double product = 1.0;
  for (const auto& nt : table.nodes) {
    double sum = 0.0;
    for (std::size_t s = 0; s < nt.parent_sets.size(); ++s) sum += nt.posterior[s] * factors(nt.parent_sets[s]);
    product *= sum;
  }
  return product;
}

double expectation_summing(const ParentSetTable& table, const ParentSetFunction& summands) {
  double total = 0.0;
  for (const auto& nt : table.nodes) {
    double sum = 0.0;
    for (std::size_t s = 0; s < nt.parent_sets.size(); ++s) sum += nt.posterior[s] * summands(nt.parent_sets[s]);
    total += sum;
  }
  return total;
}

Dag sample_graph_given_order(const ParentSetTable& table, Rng& rng) {
  std::vector<ParentSet> chosen(table.nodes.size());
  // Draw in order position so the random stream does not depend on labels.
  for (int k = 0; k < table.order.size(); ++k) {
    const NodeTable& nt = table.nodes[static_cast<std::size_t>(table.order.at(k))];
    std::vector<double> logw(nt.parent_sets.size());
    for (std::size_t s = 0; s < logw.size(); ++s) logw[s] = nt.log_prior + nt.log_scores[s];
    chosen[static_cast<std::size_t>(nt.node)] = nt.parent_sets[sample_log_categorical(logw, rng)];
  }
  return Dag(std::move(chosen));
}

Eigen::MatrixXd edge_posterior_given_order(const ParentSetTable& table) {
  const int d = table.size();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(d, d);
  for (const auto& nt : table.nodes) {
    for (std::size_t s = 0; s < nt.parent_sets.size(); ++s) {
      for (int j : nt.parent_sets[s].parents()) p(j, nt.node) += nt.posterior[s];
    }
  }
  return p;
}

WeightedOrderEnsemble make_ensemble(std::vector<CausalOrder> orders, std::vector<double> log_scores) {
  if (orders.size() != log_scores.size()) throw Error(ErrorCode::WeightMismatch, "orders and scores differ in length");
  WeightedOrderEnsemble e;
  e.weights = importance_weights(log_scores);
  e.orders = std::move(orders);
  e.log_order_scores = std::move(log_scores);
  return e;
}

}  // namespace arcobci
