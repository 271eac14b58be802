#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "arcobci/engine.hpp"
#include "arcobci/simgen.hpp"

namespace arcobci::cli {

/// Flat experiment description read from `key = value` lines.
struct RunConfig {
  // simulation
  std::string graph = "sf";  // er | sf
  int d = 10;
  double degree = 2.0;  // ER expected degree
  int m = 2;            // SF parents per new node
  MechanismKind mechanism = MechanismKind::Gp;
  int n = 200;
  std::vector<std::uint64_t> seeds{0};

  EngineConfig engine;

  // train / query inputs
  std::string data;
  std::string checkpoint;
  std::string resume;
  int train_steps = -1;  // step budget for this invocation, -1 = until finished

  std::string query = "edges";  // edges | eshd | intervene | ace
  std::string reference;
  Intervention intervention;
  std::optional<int> target;
  SamplingShape shape;
  int kde_points = 200;
  double kde_bandwidth = 0.2;

  // benchmark
  bool interventional = false;
  int interventions = 5;
  int truth_samples = 1000;
  double threshold = 0.5;

  std::string out = ".";
};

/// Throws Error(ConfigError) naming the offending line and key.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

/// "0=1.5,2=-1" -> {(0, 1.5), (2, -1)}
Intervention parse_intervention(const std::string& text);

}  // namespace arcobci::cli
