#include "arcobci/arco.hpp"

#include <cmath>
#include <vector>

#include "arcobci/error.hpp"

namespace arcobci {

namespace {

// Column of the flattened (row-major) encoding holding Q(var, pos).
Eigen::Index input_column(int d, int var, int pos) { return static_cast<Eigen::Index>(var) * d + pos; }

struct StepCache {
  Eigen::VectorXd pre;     // hidden pre-activation
  Eigen::VectorXd hidden;  // relu(pre)
  Eigen::VectorXd logits;
};

// Forward pass for a prefix given the hidden pre-activation accumulated so far.
void finish_forward(const ArcoParams& params, StepCache& c) {
  c.hidden = c.pre.cwiseMax(0.0);
  c.logits = params.w2() * c.hidden + params.b2();
}

// Log-softmax over the entries flagged in `open`; others set to -inf.
Eigen::VectorXd masked_log_softmax(const Eigen::VectorXd& raw, const std::vector<char>& open) {
  double hi = kNegInf;
  for (Eigen::Index i = 0; i < raw.size(); ++i)
    if (open[static_cast<std::size_t>(i)]) hi = std::max(hi, raw(i));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < raw.size(); ++i)
    if (open[static_cast<std::size_t>(i)]) acc += std::exp(raw(i) - hi);
  const double norm = hi + std::log(acc);
  Eigen::VectorXd out(raw.size());
  for (Eigen::Index i = 0; i < raw.size(); ++i)
    out(i) = open[static_cast<std::size_t>(i)] ? raw(i) - norm : kNegInf;
  return out;
}

}  // namespace

ArcoParams::ArcoParams(int d, int hidden, double prior_std)
    : d_(d), hidden_(hidden), prior_std_(prior_std) {
  if (d < 1 || hidden < 1) throw Error(ErrorCode::InvalidArgument, "network dimensions must be positive");
  if (!(prior_std > 0.0)) throw Error(ErrorCode::InvalidArgument, "prior_std must be positive");
  const Eigen::Index n = static_cast<Eigen::Index>(hidden) * d * d + hidden +
                         static_cast<Eigen::Index>(d) * hidden + d;
  theta_ = Eigen::VectorXd::Zero(n);
}

ArcoParams ArcoParams::zeros(int d, int hidden) { return ArcoParams(d, hidden); }

ArcoParams ArcoParams::random(int d, Rng& rng, int hidden, double prior_std) {
  ArcoParams p(d, hidden, prior_std);
  const double a1 = 1.0 / std::sqrt(static_cast<double>(p.input_dim()));
  const double a2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  std::uniform_real_distribution<double> u1(-a1, a1), u2(-a2, a2);
  for (Eigen::Index i = 0; i < p.offset_w2(); ++i) p.theta_(i) = u1(rng);
  for (Eigen::Index i = p.offset_w2(); i < p.size(); ++i) p.theta_(i) = u2(rng);
  return p;
}

Eigen::VectorXd logits(const ArcoParams& params, const PermutationEncoding& encoding) {
  const int d = params.d();
  if (encoding.rows() != d || encoding.cols() != d) {
    throw Error(ErrorCode::DimensionMismatch, "encoding must be d x d");
  }
  StepCache c;
  c.pre = params.b1();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (encoding(i, j) != 0.0) c.pre += encoding(i, j) * params.w1().col(input_column(d, i, j));
  finish_forward(params, c);
  return c.logits;
}

Eigen::VectorXd normalize_logits(const Eigen::VectorXd& raw, std::span<const int> remaining) {
  if (remaining.empty()) throw Error(ErrorCode::EmptyRemaining, "no unassigned variables");
  std::vector<char> open(static_cast<std::size_t>(raw.size()), 0);
  for (int v : remaining) {
    if (v < 0 || v >= raw.size()) throw Error(ErrorCode::IndexOutOfRange, "remaining index");
    open[static_cast<std::size_t>(v)] = 1;
  }
  return masked_log_softmax(raw, open);
}

CausalOrder sample_order(const ArcoParams& params, Rng& rng) {
  const int d = params.d();
  std::vector<char> open(static_cast<std::size_t>(d), 1);
  std::vector<int> seq;
  seq.reserve(static_cast<std::size_t>(d));
  StepCache c;
  c.pre = params.b1();
  for (int k = 0; k < d; ++k) {
    finish_forward(params, c);
    const Eigen::VectorXd logp = masked_log_softmax(c.logits, open);
    const int next = static_cast<int>(sample_log_categorical(std::span<const double>(logp.data(), d), rng));
    seq.push_back(next);
    open[static_cast<std::size_t>(next)] = 0;
    c.pre += params.w1().col(input_column(d, next, k));
  }
  return CausalOrder(std::move(seq));
}

double log_prob(const ArcoParams& params, const CausalOrder& order) {
  const int d = params.d();
  if (order.size() != d) throw Error(ErrorCode::DimensionMismatch, "order length differs from d");
  std::vector<char> open(static_cast<std::size_t>(d), 1);
  StepCache c;
  c.pre = params.b1();
  double total = 0.0;
  for (int k = 0; k < d; ++k) {
    finish_forward(params, c);
    const int v = order.at(k);
    total += masked_log_softmax(c.logits, open)(v);
    open[static_cast<std::size_t>(v)] = 0;
    c.pre += params.w1().col(input_column(d, v, k));
  }
  return total;
}

double log_prob_and_grad(const ArcoParams& params, const CausalOrder& order, ArcoGradient& grad) {
  const int d = params.d();
  const int h = params.hidden();
  if (order.size() != d) throw Error(ErrorCode::DimensionMismatch, "order length differs from d");
  grad.setZero(params.size());
  Eigen::Map<Eigen::MatrixXd> g_w1(grad.data(), h, params.input_dim());
  Eigen::Map<Eigen::VectorXd> g_b1(grad.data() + params.offset_b1(), h);
  Eigen::Map<Eigen::MatrixXd> g_w2(grad.data() + params.offset_w2(), d, h);
  Eigen::Map<Eigen::VectorXd> g_b2(grad.data() + params.offset_b2(), d);

  std::vector<char> open(static_cast<std::size_t>(d), 1);
  Eigen::VectorXd pre = params.b1();
  double total = 0.0;
  for (int k = 0; k < d; ++k) {
    const Eigen::VectorXd hidden = pre.cwiseMax(0.0);
    const Eigen::VectorXd raw = params.w2() * hidden + params.b2();
    const Eigen::VectorXd logp = masked_log_softmax(raw, open);
    const int v = order.at(k);
    total += logp(v);

    // d logp(v) / d raw = onehot(v) - softmax over the open set.
    Eigen::VectorXd g_raw = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < d; ++i)
      if (open[static_cast<std::size_t>(i)]) g_raw(i) = -std::exp(logp(i));
    g_raw(v) += 1.0;

    g_b2 += g_raw;
    g_w2.noalias() += g_raw * hidden.transpose();
    Eigen::VectorXd g_pre = params.w2().transpose() * g_raw;
    for (int j = 0; j < h; ++j)
      if (!(pre(j) > 0.0)) g_pre(j) = 0.0;
    g_b1 += g_pre;
    for (int p = 0; p < k; ++p) g_w1.col(input_column(d, order.at(p), p)) += g_pre;

    open[static_cast<std::size_t>(v)] = 0;
    pre += params.w1().col(input_column(d, v, k));
  }
  return total;
}

ArcoGradient grad_log_prob(const ArcoParams& params, const CausalOrder& order) {
  ArcoGradient g;
  log_prob_and_grad(params, order, g);
  return g;
}

namespace {

nlohmann::json matrix_rows(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
  return flat;
}

void fill_rows(Eigen::Ref<Eigen::MatrixXd> m, const nlohmann::json& values) {
  const auto flat = values.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(flat.size()) != m.size()) {
    throw Error(ErrorCode::ParseError, "arco checkpoint: weight array has wrong length");
  }
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = flat[i++];
}

}  // namespace

nlohmann::json arco_to_json(const ArcoParams& params) {
  nlohmann::json j;
  j["d"] = params.d();
  j["hidden"] = params.hidden();
  j["prior_std"] = params.prior_std();
  j["layers"] = nlohmann::json::array({
      {{"name", "w1"}, {"shape", {params.hidden(), params.input_dim()}}, {"values", matrix_rows(params.w1())}},
      {{"name", "b1"}, {"shape", {params.hidden()}}, {"values", matrix_rows(params.b1())}},
      {{"name", "w2"}, {"shape", {params.d(), params.hidden()}}, {"values", matrix_rows(params.w2())}},
      {{"name", "b2"}, {"shape", {params.d()}}, {"values", matrix_rows(params.b2())}},
  });
  return j;
}

ArcoParams arco_from_json(const nlohmann::json& j) {
  try {
    ArcoParams p(j.at("d").get<int>(), j.at("hidden").get<int>(), j.at("prior_std").get<double>());
    const auto& layers = j.at("layers");
    if (layers.size() != 4) throw Error(ErrorCode::ParseError, "arco checkpoint: expected 4 layers");
    fill_rows(p.w1(), layers.at(0).at("values"));
    fill_rows(p.b1(), layers.at(1).at("values"));
    fill_rows(p.w2(), layers.at(2).at("values"));
    fill_rows(p.b2(), layers.at(3).at("values"));
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("arco checkpoint: ") + e.what());
  }
}

}  // namespace arcobci
