#pragma once

#include <cstdint>
#include <memory>
#include <shared_mutex>
#include <unordered_map>
#include <variant>
#include <vector>

#include <json.hpp>

#include "arcobci/core.hpp"
#include "arcobci/dataset.hpp"
#include "arcobci/gp.hpp"
#include "arcobci/nig.hpp"

namespace arcobci {

/// Prior settings for every mechanism; the lengthscale shape scales with |Pa|.
struct MechanismPriors {
  double delta_shape = 100.0;
  double delta_rate = 10.0;
  double lengthscale_shape_per_parent = 30.0;
  double lengthscale_rate = 30.0;
  double mixing_shape = 20.0;
  double mixing_rate = 10.0;
  double noise_shape = 2.0;
  double noise_rate = 8.0;
  NigPrior root = NigPrior::inference_default();

  HyperPrior for_parents(int num_parents) const;
};

/// Fitted mechanism for one (node, parent set). For roots `hyper` holds the
/// NIG posterior and log_hyper_prior is 0.
struct MechanismScore {
  ParentSet parent_set;
  std::variant<RqHyper, NigPrior> hyper;
  double log_marginal = 0.0;
  double log_hyper_prior = 0.0;

  double total() const { return log_marginal + log_hyper_prior; }
  bool is_root() const { return std::holds_alternative<NigPrior>(hyper); }
};

struct MechanismKey {
  int node = 0;
  std::uint64_t mask = 0;

  friend bool operator==(const MechanismKey&, const MechanismKey&) = default;
  friend auto operator<=>(const MechanismKey&, const MechanismKey&) = default;
};

struct MechanismKeyHash {
  std::size_t operator()(const MechanismKey& k) const noexcept {
    return std::hash<std::uint64_t>{}(k.mask * 0x9e3779b97f4a7c15ull ^ static_cast<std::uint64_t>(k.node));
  }
};

MechanismKey key_of(const ParentSet& ps);

/// Thread-safe insert-if-absent store; entries are immutable once inserted.
class MechanismCache {
 public:
  using Entry = std::shared_ptr<const MechanismScore>;

  Entry find(const MechanismKey& key) const;
  /// Inserts unless present; returns whichever entry ends up stored.
  Entry insert(MechanismScore score);
  std::size_t size() const;
  /// Entries sorted by key.
  std::vector<Entry> entries() const;

  nlohmann::json to_json() const;
  static void load_json(MechanismCache& cache, const nlohmann::json& j);

 private:
  mutable std::shared_mutex mutex_;
  std::unordered_map<MechanismKey, Entry, MechanismKeyHash> map_;
};

/// Fits a mechanism from scratch (GP for nonempty parent sets, NIG otherwise).
MechanismScore fit_mechanism(const ParentSet& parents, const Dataset& data, const MechanismPriors& priors,
                             const GpFitOptions& options = {});

/// Cached score for (node, parents); fits and inserts on a miss.
MechanismCache::Entry local_score(MechanismCache& cache, const ParentSet& parents, const Dataset& data,
                                  const MechanismPriors& priors, const GpFitOptions& options = {});

/// Hyperparameter fit for a nonempty parent set of `node`.
RqHyper fit_hyperparameters(int node, const ParentSet& parents, const Dataset& data, const HyperPrior& prior,
                            const GpFitOptions& options = {});

/// Columns of `data` named by the parent set.
Eigen::MatrixXd parent_columns(const Dataset& data, const ParentSet& parents);

/// Draws X_node given parent values (standardised units) from the fitted
/// mechanism's predictive posterior.
double predictive_sample(const MechanismScore& score, int node, const Eigen::VectorXd& parent_values,
                         const Dataset& train_data, Rng& rng);

}  // namespace arcobci
