#include "arcobci/cli/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "arcobci/error.hpp"

namespace arcobci::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_int(const std::string& v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw std::invalid_argument("expected an integer");
  return out;
}

double parse_real(const std::string& v) {
  try {
    return parse_double(v);
  } catch (const Error&) {
    throw std::invalid_argument("expected a number");
  }
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("expected true or false");
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) out.push_back(trim(item));
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"graph",
       [](RunConfig& c, const std::string& v) {
         if (v != "er" && v != "sf") throw std::invalid_argument("expected er or sf");
         c.graph = v;
       }},
      {"d", [](RunConfig& c, const std::string& v) { c.d = parse_int<int>(v); }},
      {"degree", [](RunConfig& c, const std::string& v) { c.degree = parse_real(v); }},
      {"m", [](RunConfig& c, const std::string& v) { c.m = parse_int<int>(v); }},
      {"mechanism",
       [](RunConfig& c, const std::string& v) {
         if (v != "gp" && v != "sigmoid") throw std::invalid_argument("expected gp or sigmoid");
         c.mechanism = parse_mechanism_kind(v);
       }},
      {"n", [](RunConfig& c, const std::string& v) { c.n = parse_int<int>(v); }},
      {"seeds",
       [](RunConfig& c, const std::string& v) {
         c.seeds.clear();
         if (trim(v).empty()) return;
         for (const auto& s : split(v, ',')) c.seeds.push_back(parse_int<std::uint64_t>(s));
       }},
      {"max_parents", [](RunConfig& c, const std::string& v) { c.engine.max_parents = parse_int<int>(v); }},
      {"batch_size", [](RunConfig& c, const std::string& v) { c.engine.batch_size = parse_int<int>(v); }},
      {"max_arco_steps", [](RunConfig& c, const std::string& v) { c.engine.max_arco_steps = parse_int<int>(v); }},
      {"arco_lr", [](RunConfig& c, const std::string& v) { c.engine.arco_lr = parse_real(v); }},
      {"gp_steps", [](RunConfig& c, const std::string& v) { c.engine.gp_steps = parse_int<int>(v); }},
      {"gp_lr", [](RunConfig& c, const std::string& v) { c.engine.gp_lr = parse_real(v); }},
      {"ema_decay", [](RunConfig& c, const std::string& v) { c.engine.ema_decay = parse_real(v); }},
      {"hidden_units", [](RunConfig& c, const std::string& v) { c.engine.hidden_units = parse_int<int>(v); }},
      {"prior_std", [](RunConfig& c, const std::string& v) { c.engine.prior_std = parse_real(v); }},
      {"patience", [](RunConfig& c, const std::string& v) { c.engine.patience = parse_int<int>(v); }},
      {"plateau_tolerance", [](RunConfig& c, const std::string& v) { c.engine.plateau_tolerance = parse_real(v); }},
      {"inference_orders", [](RunConfig& c, const std::string& v) { c.engine.inference_orders = parse_int<int>(v); }},
      {"threads", [](RunConfig& c, const std::string& v) { c.engine.threads = parse_int<int>(v); }},
      {"data", [](RunConfig& c, const std::string& v) { c.data = v; }},
      {"checkpoint", [](RunConfig& c, const std::string& v) { c.checkpoint = v; }},
      {"resume", [](RunConfig& c, const std::string& v) { c.resume = v; }},
      {"train_steps", [](RunConfig& c, const std::string& v) { c.train_steps = parse_int<int>(v); }},
      {"query",
       [](RunConfig& c, const std::string& v) {
         if (v != "edges" && v != "eshd" && v != "intervene" && v != "ace") {
           throw std::invalid_argument("expected edges, eshd, intervene or ace");
         }
         c.query = v;
       }},
      {"reference", [](RunConfig& c, const std::string& v) { c.reference = v; }},
      {"intervention", [](RunConfig& c, const std::string& v) { c.intervention = parse_intervention(v); }},
      {"target", [](RunConfig& c, const std::string& v) { c.target = parse_int<int>(v); }},
      {"orders", [](RunConfig& c, const std::string& v) { c.shape.orders = parse_int<int>(v); }},
      {"graphs", [](RunConfig& c, const std::string& v) { c.shape.graphs = parse_int<int>(v); }},
      {"samples", [](RunConfig& c, const std::string& v) { c.shape.samples = parse_int<int>(v); }},
      {"kde_points", [](RunConfig& c, const std::string& v) { c.kde_points = parse_int<int>(v); }},
      {"kde_bandwidth", [](RunConfig& c, const std::string& v) { c.kde_bandwidth = parse_real(v); }},
      {"interventional", [](RunConfig& c, const std::string& v) { c.interventional = parse_bool(v); }},
      {"interventions", [](RunConfig& c, const std::string& v) { c.interventions = parse_int<int>(v); }},
      {"truth_samples", [](RunConfig& c, const std::string& v) { c.truth_samples = parse_int<int>(v); }},
      {"threshold", [](RunConfig& c, const std::string& v) { c.threshold = parse_real(v); }},
      {"out", [](RunConfig& c, const std::string& v) { c.out = v; }},
  };
  return table;
}

}  // namespace

Intervention parse_intervention(const std::string& text) {
  Intervention out;
  if (trim(text).empty()) return out;
  for (const auto& item : split(text, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("intervention items look like var=value");
    out.emplace_back(parse_int<int>(trim(item.substr(0, eq))), parse_real(trim(item.substr(eq + 1))));
  }
  return out;
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "line " + std::to_string(lineno);
    if (eq == std::string::npos) throw Error(ErrorCode::ConfigError, where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw Error(ErrorCode::ConfigError, where + ": unknown key '" + key + "'");
    if (!seen.insert(key).second) throw Error(ErrorCode::ConfigError, where + ": duplicate key '" + key + "'");
    try {
      it->second(cfg, value);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::ConfigError, where + ": key '" + key + "': " + e.what());
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

}  // namespace arcobci::cli
