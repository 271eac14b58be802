#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "arcobci/core.hpp"
#include "arcobci/mechanism_cache.hpp"
#include "arcobci/numeric.hpp"

namespace arcobci {

/// All subsets of the first position-1 variables of `order` with at most
/// max_parents elements, as parent sets of the variable at `position`
/// (1-based). Sizes ascending, lexicographic within a size.
std::vector<ParentSet> enumerate_parent_sets(int position, const CausalOrder& order, int max_parents);

/// Number of admissible parent sets at a 1-based position.
std::size_t count_parent_sets(int position, int max_parents);

/// Admissible parent sets of one node with their scores.
struct NodeTable {
  int node = 0;
  std::vector<ParentSet> parent_sets;
  std::vector<double> log_scores;  // s_i(Pa)
  double log_prior = 0.0;          // uniform: -log(#sets)
  double log_alpha = 0.0;          // logsumexp(log_prior + s_i)
  std::vector<double> posterior;   // p(Pa | L) exp(s_i) / alpha_i
};

struct ParentSetTable {
  CausalOrder order;
  int max_parents = 0;
  std::vector<NodeTable> nodes;  // indexed by variable

  int size() const { return static_cast<int>(nodes.size()); }
};

using ParentSetScore = std::function<double(const ParentSet&)>;
/// A per-(node, parent set) quantity Y_i(Pa_i).
using ParentSetFunction = std::function<double(const ParentSet&)>;

ParentSetTable build_table(const CausalOrder& order, int max_parents, const ParentSetScore& score);

/// Scores via the cache, fitting missing entries on first touch.
ParentSetTable build_table(const CausalOrder& order, MechanismCache& cache, const Dataset& data, int max_parents,
                           const MechanismPriors& priors = {}, const GpFitOptions& options = {});

/// sum_i log alpha_i(L)
double log_order_score(const ParentSetTable& table);

/// Self-normalised weights exp(l_m - logsumexp(l)). Throws AllNegInfinite,
/// InvalidArgument on empty input, NaN or +inf.
std::vector<double> importance_weights(std::span<const double> log_scores);

/// prod_i sum_Pa w_i(Pa) Y_i(Pa)
double expectation_factorising(const ParentSetTable& table, const ParentSetFunction& factors);

/// sum_i sum_Pa w_i(Pa) Y_i(Pa)
double expectation_summing(const ParentSetTable& table, const ParentSetFunction& summands);

/// One parent set per node drawn from its posterior.
Dag sample_graph_given_order(const ParentSetTable& table, Rng& rng);

/// Entry (j, i) = P(j -> i | L, D).
Eigen::MatrixXd edge_posterior_given_order(const ParentSetTable& table);

struct WeightedOrderEnsemble {
  std::vector<CausalOrder> orders;
  std::vector<double> log_order_scores;
  std::vector<double> weights;

  std::size_t size() const { return orders.size(); }
};

WeightedOrderEnsemble make_ensemble(std::vector<CausalOrder> orders, std::vector<double> log_scores);

}  // namespace arcobci
