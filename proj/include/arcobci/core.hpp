#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace arcobci {

/// A causal order: a permutation of 0..d-1. Earlier variables may cause later ones.
class CausalOrder {
 public:
  CausalOrder() = default;

  /// Throws DuplicateIndex / IndexOutOfRange / InvalidArgument (empty).
  explicit CausalOrder(std::vector<int> sequence);

  int size() const { return static_cast<int>(sequence_.size()); }
  const std::vector<int>& sequence() const { return sequence_; }
  int at(int k) const { return sequence_[static_cast<std::size_t>(k)]; }

  /// 0-based position of variable `var` in the order.
  int position(int var) const { return position_[static_cast<std::size_t>(var)]; }

  /// Variables at positions [0, k).
  std::span<const int> prefix(int k) const {
    return std::span<const int>(sequence_).first(static_cast<std::size_t>(k));
  }

  bool precedes(int a, int b) const { return position(a) < position(b); }

  friend bool operator==(const CausalOrder& a, const CausalOrder& b) {
    return a.sequence_ == b.sequence_;
  }
  friend auto operator<=>(const CausalOrder& a, const CausalOrder& b) {
    return a.sequence_ <=> b.sequence_;
  }

 private:
  std::vector<int> sequence_;
  std::vector<int> position_;
};

CausalOrder make_order(std::vector<int> indices);
CausalOrder identity_order(int d);
std::string to_string(const CausalOrder& order);

/// d x d 0/1 matrix; row i is one-hot at the position of variable i.
using PermutationEncoding = Eigen::MatrixXd;

PermutationEncoding permutation_matrix(const CausalOrder& order);

/// Encoding of the first k-1 elements (k is 1-based, 1 <= k <= d+1). Rows of
/// unassigned variables are zero.
PermutationEncoding prefix_encoding(const CausalOrder& order, int k);

/// Canonical (node, sorted parents) pair.
class ParentSet {
 public:
  ParentSet() = default;
  ParentSet(int node, std::vector<int> parents);

  int node() const { return node_; }
  const std::vector<int>& parents() const { return parents_; }
  std::size_t size() const { return parents_.size(); }
  bool empty() const { return parents_.empty(); }
  bool contains(int var) const;
  std::uint64_t mask() const;

  friend bool operator==(const ParentSet&, const ParentSet&) = default;
  friend auto operator<=>(const ParentSet&, const ParentSet&) = default;

 private:
  int node_ = 0;
  std::vector<int> parents_;
};

std::string to_string(const ParentSet& ps);

/// Directed graph given by one parent set per node.
class Dag {
 public:
  Dag() = default;
  explicit Dag(int d);
  /// Validates nodes, bounds and acyclicity; throws InvalidArgument on cycles.
  explicit Dag(std::vector<ParentSet> parent_sets);

  static Dag from_edges(int d, const std::vector<std::pair<int, int>>& edges);
  static Dag from_adjacency(const Eigen::MatrixXd& adjacency);

  int size() const { return static_cast<int>(parent_sets_.size()); }
  const ParentSet& parents(int node) const { return parent_sets_[static_cast<std::size_t>(node)]; }
  const std::vector<ParentSet>& parent_sets() const { return parent_sets_; }

  bool has_edge(int from, int to) const { return parents(to).contains(from); }
  int num_edges() const;
  /// Edges as (parent, child), sorted by child then parent.
  std::vector<std::pair<int, int>> edges() const;
  /// Entry (j, i) = 1 iff j -> i.
  Eigen::MatrixXd adjacency() const;
  /// Empty if the graph has a cycle.
  std::optional<std::vector<int>> topological_order() const;
  bool is_acyclic() const { return topological_order().has_value(); }
  int max_in_degree() const;

  friend bool operator==(const Dag&, const Dag&) = default;

 private:
  std::vector<ParentSet> parent_sets_;
};

/// Dag JSON: {"d": int, "edges": [[parent, child], ...]}
std::string dag_to_json(const Dag& dag);
Dag dag_from_json(const std::string& text);
Dag read_dag_json(const std::string& path);
void write_dag_json(const Dag& dag, const std::string& path);

}  // namespace arcobci
