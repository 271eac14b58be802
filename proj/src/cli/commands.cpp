#include "arcobci/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "arcobci/checkpoint.hpp"
#include "arcobci/engine.hpp"
#include "arcobci/error.hpp"

namespace arcobci::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kGraphStream = 101;
constexpr std::uint64_t kMechanismStream = 102;
constexpr std::uint64_t kDataStream = 103;
constexpr std::uint64_t kInterventionStream = 104;
constexpr std::uint64_t kTruthStream = 105;
constexpr std::uint64_t kModelSampleStream = 106;
constexpr std::uint64_t kQueryStream = 201;

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

std::string header(int d) {
  std::string h;
  for (int i = 0; i < d; ++i) h += (i ? ",X" : "X") + std::to_string(i);
  return h;
}

std::uint64_t first_seed(const RunConfig& cfg) { return cfg.seeds.empty() ? 0 : cfg.seeds.front(); }

std::string weighted_samples_csv(const WeightedSampleSet& s) {
  std::string out = header(static_cast<int>(s.samples.cols())) + ",weight\n";
  for (Eigen::Index r = 0; r < s.samples.rows(); ++r) {
    for (Eigen::Index c = 0; c < s.samples.cols(); ++c) out += format_double(s.samples(r, c)) + ',';
    out += format_double(s.weights(r)) + '\n';
  }
  return out;
}

std::string kde_csv(const WeightedSampleSet& s, int points, double bandwidth, const std::vector<int>& variables) {
  std::string out = "variable,x,density\n";
  for (int v : variables) {
    const Eigen::VectorXd col = s.samples.col(v);
    const double lo = col.minCoeff() - 4.0 * bandwidth;
    const double hi = col.maxCoeff() + 4.0 * bandwidth;
    const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(points, lo, hi);
    const Eigen::VectorXd dens = kde(col, s.weights, bandwidth, grid);
    for (Eigen::Index g = 0; g < grid.size(); ++g) {
      out += "X" + std::to_string(v) + ',' + format_double(grid(g)) + ',' + format_double(dens(g)) + '\n';
    }
  }
  return out;
}

}  // namespace

SimulatedProblem simulate_problem(const RunConfig& cfg, std::uint64_t seed) {
  if (cfg.d < 1) throw Error(ErrorCode::ConfigError, "d must be positive");
  if (cfg.n < 1) throw Error(ErrorCode::ConfigError, "n must be positive");
  Rng graph_rng = derive_rng(seed, kGraphStream);
  Dag graph(cfg.d);
  if (cfg.d > 1) {
    graph = cfg.graph == "er" ? sample_er_graph(cfg.d, cfg.degree, graph_rng) : sample_sf_graph(cfg.d, cfg.m, graph_rng);
  }
  Rng mech_rng = derive_rng(seed, kMechanismStream);
  SimulatedProblem p;
  p.scm = sample_gt_mechanisms(graph, cfg.mechanism, mech_rng);
  Rng data_rng = derive_rng(seed, kDataStream);
  p.raw = ancestral_sample(p.scm, cfg.n, {}, data_rng);
  return p;
}

SeedResult run_seed(const RunConfig& cfg, std::uint64_t seed) {
  const SimulatedProblem problem = simulate_problem(cfg, seed);
  EngineConfig engine = cfg.engine;
  engine.seed = seed;
  const PosteriorModel model = learn(Dataset(problem.raw), engine);
  const OrderPosterior post = posterior_orders(model);

  SeedResult r;
  r.seed = seed;
  r.train_steps = model.state.step;
  r.eshd = expected_shd(post, problem.scm.graph);
  r.empty_graph_shd = problem.scm.graph.num_edges();
  r.structure = structure_metrics(posterior_edge_marginals(post), problem.scm.graph, cfg.threshold);

  if (cfg.interventional) {
    Rng pick = derive_rng(seed, kInterventionStream);
    Rng truth_rng = derive_rng(seed, kTruthStream);
    Rng model_rng = derive_rng(seed, kModelSampleStream);
    std::uniform_int_distribution<int> var(0, cfg.d - 1);
    std::uniform_real_distribution<double> value(-1.0, 1.0);
    for (int k = 0; k < cfg.interventions; ++k) {
      InterventionResult ir;
      ir.variable = var(pick);
      ir.value = value(pick);
      const Intervention iv{{ir.variable, ir.value}};
      const Eigen::MatrixXd truth = ancestral_sample(problem.scm, cfg.truth_samples, iv, truth_rng);
      const WeightedSampleSet inferred = sample_interventional(model, iv, cfg.shape, model_rng);
      const MmdResult m = mmd(inferred, truth);
      ir.mmd = m.mmd;
      ir.mmd2 = m.mmd2;
      ir.l1 = mean_distance(inferred, truth, 1);
      ir.l2 = mean_distance(inferred, truth, 2);
      r.interventions.push_back(ir);
    }
  }
  return r;
}

Summary summarise_values(const std::string& metric, const std::vector<double>& values) {
  Summary s;
  s.metric = metric;
  s.count = static_cast<int>(values.size());
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / s.count;
  if (s.count > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.half_width = 1.96 * std::sqrt(ss / (s.count - 1)) / std::sqrt(static_cast<double>(s.count));
  }
  return s;
}

std::vector<Summary> summarise(const std::vector<SeedResult>& results) {
  std::map<std::string, std::vector<double>> cols;
  std::vector<std::string> names = {"eshd", "auroc", "auprc", "tpr", "tnr", "shd", "expected_edges"};
  for (const auto& r : results) {
    cols["eshd"].push_back(r.eshd);
    if (r.structure.auroc) cols["auroc"].push_back(*r.structure.auroc);
    if (r.structure.auprc) cols["auprc"].push_back(*r.structure.auprc);
    cols["tpr"].push_back(r.structure.tpr);
    cols["tnr"].push_back(r.structure.tnr);
    cols["shd"].push_back(r.structure.shd);
    cols["expected_edges"].push_back(r.structure.expected_edges);
    if (!r.interventions.empty()) {
      double mmd = 0, l1 = 0, l2 = 0;
      for (const auto& i : r.interventions) {
        mmd += i.mmd;
        l1 += i.l1;
        l2 += i.l2;
      }
      const double k = static_cast<double>(r.interventions.size());
      cols["mmd"].push_back(mmd / k);
      cols["l1"].push_back(l1 / k);
      cols["l2"].push_back(l2 / k);
    }
  }
  if (cols.contains("mmd")) names.insert(names.end(), {"mmd", "l1", "l2"});
  std::vector<Summary> out;
  for (const auto& n : names) out.push_back(summarise_values(n, cols[n]));
  return out;
}

int cmd_simulate(const RunConfig& cfg) {
  if (cfg.seeds.empty()) throw Error(ErrorCode::ConfigError, "seeds list is empty");
  for (std::uint64_t seed : cfg.seeds) {
    const SimulatedProblem p = simulate_problem(cfg, seed);
    const fs::path dir = fs::path(cfg.out) / ("seed_" + std::to_string(seed));
    write_file(dir / "ground_truth.json", scm_to_json(p.scm).dump(1) + "\n");
    write_file(dir / "graph.json", dag_to_json(p.scm.graph) + "\n");
    write_file(dir / "data_raw.csv", format_csv(p.raw));
    if (p.raw.rows() >= 2) write_file(dir / "data_std.csv", format_csv(standardize(Dataset(p.raw)).values));
  }
  std::cout << "simulated " << cfg.seeds.size() << " problem(s) into " << cfg.out << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  PosteriorModel model;
  if (!cfg.resume.empty()) {
    model = load_checkpoint(cfg.resume);
    model.config.threads = cfg.engine.threads;
  } else {
    if (cfg.data.empty()) throw Error(ErrorCode::ConfigError, "train needs 'data' (or 'resume')");
    EngineConfig engine = cfg.engine;
    engine.seed = first_seed(cfg);
    model = init_model(read_csv(cfg.data), engine);
  }
  const int steps = continue_learning(model, cfg.train_steps);
  const fs::path dir(cfg.out);
  fs::create_directories(dir);
  save_checkpoint(model, (dir / "checkpoint.json").string());
  write_file(dir / "training_log.csv", format_training_log(model.history));
  std::cout << "trained " << steps << " step(s), total " << model.state.step
            << (model.converged ? " (converged)" : "") << "; checkpoint " << (dir / "checkpoint.json").string() << "\n";
  return 0;
}

int cmd_query(const RunConfig& cfg) {
  if (cfg.checkpoint.empty()) throw Error(ErrorCode::ConfigError, "query needs 'checkpoint'");
  PosteriorModel model = load_checkpoint(cfg.checkpoint);
  model.config.threads = cfg.engine.threads;
  const fs::path dir(cfg.out);
  Rng rng = derive_rng(first_seed(cfg), kQueryStream);

  if (cfg.query == "edges") {
    const Eigen::MatrixXd p = posterior_edge_marginals(model);
    write_file(dir / "edges.csv", format_csv(p));
  } else if (cfg.query == "eshd") {
    if (cfg.reference.empty()) throw Error(ErrorCode::ConfigError, "eshd query needs 'reference'");
    const Dag ref = read_dag_json(cfg.reference);
    if (ref.size() != model.d()) throw Error(ErrorCode::DimensionMismatch, "reference graph size differs from model");
    const OrderPosterior post = posterior_orders(model);
    nlohmann::json j = to_json(structure_metrics(posterior_edge_marginals(post), ref, cfg.threshold));
    j["eshd"] = expected_shd(post, ref);
    write_file(dir / "eshd.json", j.dump(1) + "\n");
  } else if (cfg.query == "intervene") {
    if (cfg.target && (*cfg.target < 0 || *cfg.target >= model.d())) {
      throw Error(ErrorCode::UnknownVariable, "unknown target variable");
    }
    const WeightedSampleSet s = sample_interventional(model, cfg.intervention, cfg.shape, rng);
    std::vector<int> vars;
    if (cfg.target) {
      vars.push_back(*cfg.target);
    } else {
      for (int v = 0; v < model.d(); ++v) vars.push_back(v);
    }
    write_file(dir / "samples.csv", weighted_samples_csv(s));
    write_file(dir / "kde.csv", kde_csv(s, cfg.kde_points, cfg.kde_bandwidth, vars));
  } else if (cfg.query == "ace") {
    if (!cfg.target) throw Error(ErrorCode::ConfigError, "ace query needs 'target'");
    const double v = ace(model, cfg.intervention, *cfg.target, cfg.shape, rng);
    write_file(dir / "ace.json", nlohmann::json{{"target", *cfg.target}, {"ace", v}}.dump(1) + "\n");
  } else {
    throw Error(ErrorCode::UnknownQuery, "unknown query '" + cfg.query + "'");
  }
  std::cout << "query " << cfg.query << " written to " << dir.string() << "\n";
  return 0;
}

int cmd_benchmark(const RunConfig& cfg) {
  if (cfg.seeds.empty()) throw Error(ErrorCode::ConfigError, "seeds list is empty");
  std::vector<std::uint64_t> seeds = cfg.seeds;
  std::sort(seeds.begin(), seeds.end());
  std::vector<SeedResult> results(seeds.size());
  RunConfig inner = cfg;
  const int threads = resolve_threads(cfg.engine.threads);
  inner.engine.threads = 1;
  parallel_for(seeds.size(), threads, [&](std::size_t i) { results[i] = run_seed(inner, seeds[i]); });

  std::string per_seed = "seed,eshd,auroc,auprc,tpr,tnr,shd,expected_edges,true_edges,steps,mmd,l1,l2\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const auto& r : results) {
    std::string mmd, l1, l2;
    if (!r.interventions.empty()) {
      double a = 0, b = 0, c = 0;
      for (const auto& i : r.interventions) {
        a += i.mmd;
        b += i.l1;
        c += i.l2;
      }
      const double k = static_cast<double>(r.interventions.size());
      mmd = format_double(a / k);
      l1 = format_double(b / k);
      l2 = format_double(c / k);
    }
    per_seed += std::to_string(r.seed) + ',' + format_double(r.eshd) + ',' + opt(r.structure.auroc) + ',' +
                opt(r.structure.auprc) + ',' + format_double(r.structure.tpr) + ',' + format_double(r.structure.tnr) +
                ',' + format_double(r.structure.shd) + ',' + format_double(r.structure.expected_edges) + ',' +
                format_double(r.empty_graph_shd) + ',' + std::to_string(r.train_steps) + ',' + mmd + ',' + l1 + ',' +
                l2 + '\n';
  }
  std::string summary = "metric,mean,ci_half_width,count\n";
  for (const auto& s : summarise(results)) {
    summary += s.metric + ',' + format_double(s.mean) + ',' + format_double(s.half_width) + ',' +
               std::to_string(s.count) + '\n';
    std::cout << s.metric << ": " << s.mean << " +- " << s.half_width << " (n=" << s.count << ")\n";
  }
  const fs::path dir(cfg.out);
  write_file(dir / "per_seed.csv", per_seed);
  write_file(dir / "summary.csv", summary);
  return 0;
}

}  // namespace arcobci::cli
