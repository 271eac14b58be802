#include "arcobci/core.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "arcobci/error.hpp"

namespace arcobci {

CausalOrder::CausalOrder(std::vector<int> sequence) : sequence_(std::move(sequence)) {
  const int d = size();
  if (d < 1) throw Error(ErrorCode::InvalidArgument, "causal order must be nonempty");
  position_.assign(static_cast<std::size_t>(d), -1);
  for (int k = 0; k < d; ++k) {
    const int v = sequence_[static_cast<std::size_t>(k)];
    if (v < 0 || v >= d) {
      throw Error(ErrorCode::IndexOutOfRange, "variable " + std::to_string(v) + " not in 0.." +
                                                  std::to_string(d - 1));
    }
    if (position_[static_cast<std::size_t>(v)] != -1) {
      throw Error(ErrorCode::DuplicateIndex, "variable " + std::to_string(v) + " repeated");
    }
    position_[static_cast<std::size_t>(v)] = k;
  }
}

CausalOrder make_order(std::vector<int> indices) { return CausalOrder(std::move(indices)); }

CausalOrder identity_order(int d) {
  std::vector<int> seq(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) seq[static_cast<std::size_t>(i)] = i;
  return CausalOrder(std::move(seq));
}

std::string to_string(const CausalOrder& order) {
  std::ostringstream os;
  os << '<';
  for (int k = 0; k < order.size(); ++k) os << (k ? "," : "") << 'X' << order.at(k);
  os << '>';
  return os.str();
}

PermutationEncoding permutation_matrix(const CausalOrder& order) {
  return prefix_encoding(order, order.size() + 1);
}

PermutationEncoding prefix_encoding(const CausalOrder& order, int k) {
  const int d = order.size();
  if (k < 1 || k > d + 1) {
    throw Error(ErrorCode::IndexOutOfRange, "prefix length k=" + std::to_string(k));
  }
  PermutationEncoding q = PermutationEncoding::Zero(d, d);
  for (int pos = 0; pos < k - 1; ++pos) q(order.at(pos), pos) = 1.0;
  return q;
}

ParentSet::ParentSet(int node, std::vector<int> parents) : node_(node), parents_(std::move(parents)) {
  std::sort(parents_.begin(), parents_.end());
  if (std::adjacent_find(parents_.begin(), parents_.end()) != parents_.end()) {
    throw Error(ErrorCode::DuplicateIndex, "parent listed twice for node " + std::to_string(node));
  }
  if (node < 0) throw Error(ErrorCode::IndexOutOfRange, "negative node index");
  for (int p : parents_) {
    if (p < 0) throw Error(ErrorCode::IndexOutOfRange, "negative parent index");
    if (p == node) throw Error(ErrorCode::InvalidArgument, "node cannot be its own parent");
  }
}

bool ParentSet::contains(int var) const {
  return std::binary_search(parents_.begin(), parents_.end(), var);
}

std::uint64_t ParentSet::mask() const {
  std::uint64_t m = 0;
  for (int p : parents_) m |= std::uint64_t{1} << p;
  return m;
}

std::string to_string(const ParentSet& ps) {
  std::ostringstream os;
  os << 'X' << ps.node() << "<-{";
  for (std::size_t i = 0; i < ps.size(); ++i) os << (i ? "," : "") << 'X' << ps.parents()[i];
  os << '}';
  return os.str();
}

Dag::Dag(int d) {
  parent_sets_.reserve(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) parent_sets_.emplace_back(i, std::vector<int>{});
}

Dag::Dag(std::vector<ParentSet> parent_sets) : parent_sets_(std::move(parent_sets)) {
  const int d = size();
  for (int i = 0; i < d; ++i) {
    const auto& ps = parent_sets_[static_cast<std::size_t>(i)];
    if (ps.node() != i) throw Error(ErrorCode::InvalidArgument, "parent sets must be indexed by node");
    for (int p : ps.parents()) {
      if (p >= d) throw Error(ErrorCode::IndexOutOfRange, "parent index out of range");
    }
  }
  if (!is_acyclic()) throw Error(ErrorCode::InvalidArgument, "graph contains a cycle");
}

Dag Dag::from_edges(int d, const std::vector<std::pair<int, int>>& edges) {
  std::vector<std::vector<int>> parents(static_cast<std::size_t>(d));
  for (auto [from, to] : edges) {
    if (from < 0 || from >= d || to < 0 || to >= d) {
      throw Error(ErrorCode::IndexOutOfRange, "edge endpoint out of range");
    }
    parents[static_cast<std::size_t>(to)].push_back(from);
  }
  std::vector<ParentSet> sets;
  sets.reserve(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) sets.emplace_back(i, std::move(parents[static_cast<std::size_t>(i)]));
  return Dag(std::move(sets));
}

Dag Dag::from_adjacency(const Eigen::MatrixXd& adjacency) {
  const int d = static_cast<int>(adjacency.rows());
  std::vector<std::pair<int, int>> edges;
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i)
      if (adjacency(j, i) != 0.0) edges.emplace_back(j, i);
  return from_edges(d, edges);
}

int Dag::num_edges() const {
  int n = 0;
  for (const auto& ps : parent_sets_) n += static_cast<int>(ps.size());
  return n;
}

std::vector<std::pair<int, int>> Dag::edges() const {
  std::vector<std::pair<int, int>> out;
  for (const auto& ps : parent_sets_)
    for (int p : ps.parents()) out.emplace_back(p, ps.node());
  return out;
}

Eigen::MatrixXd Dag::adjacency() const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(size(), size());
  for (const auto& ps : parent_sets_)
    for (int p : ps.parents()) a(p, ps.node()) = 1.0;
  return a;
}

std::optional<std::vector<int>> Dag::topological_order() const {
  const int d = size();
  std::vector<int> indeg(static_cast<std::size_t>(d));
  std::vector<std::vector<int>> children(static_cast<std::size_t>(d));
  for (const auto& ps : parent_sets_) {
    indeg[static_cast<std::size_t>(ps.node())] = static_cast<int>(ps.size());
    for (int p : ps.parents()) children[static_cast<std::size_t>(p)].push_back(ps.node());
  }
  // Smallest-index-first Kahn ordering keeps the result canonical.
  std::vector<int> ready;
  for (int i = d - 1; i >= 0; --i)
    if (indeg[static_cast<std::size_t>(i)] == 0) ready.push_back(i);
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(d));
  while (!ready.empty()) {
    std::sort(ready.begin(), ready.end(), std::greater<>());
    const int v = ready.back();
    ready.pop_back();
    out.push_back(v);
    for (int c : children[static_cast<std::size_t>(v)])
      if (--indeg[static_cast<std::size_t>(c)] == 0) ready.push_back(c);
  }
  if (static_cast<int>(out.size()) != d) return std::nullopt;
  return out;
}

int Dag::max_in_degree() const {
  int m = 0;
  for (const auto& ps : parent_sets_) m = std::max(m, static_cast<int>(ps.size()));
  return m;
}

std::string dag_to_json(const Dag& dag) {
  nlohmann::json j;
  j["d"] = dag.size();
  j["edges"] = nlohmann::json::array();
  for (auto [from, to] : dag.edges()) j["edges"].push_back({from, to});
  return j.dump();
}

Dag dag_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    const int d = j.at("d").get<int>();
    std::vector<std::pair<int, int>> edges;
    for (const auto& e : j.at("edges")) edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    return Dag::from_edges(d, edges);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("dag json: ") + e.what());
  }
}

Dag read_dag_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return dag_from_json(ss.str());
}

void write_dag_json(const Dag& dag, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << dag_to_json(dag) << '\n';
}

}  // namespace arcobci
