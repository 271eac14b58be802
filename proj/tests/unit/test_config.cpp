#include <gtest/gtest.h>

#include <cmath>

#include "arcobci/cli/commands.hpp"
#include "arcobci/cli/config.hpp"
#include "arcobci/error.hpp"

using namespace arcobci;
using namespace arcobci::cli;

namespace {

std::string config_error(const std::string& text) {
  try {
    parse_run_config(text);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
    return e.what();
  }
  ADD_FAILURE() << "expected a config error";
  return "";
}

}  // namespace

TEST(RunConfig, Defaults) {
  const RunConfig c = parse_run_config("");
  EXPECT_EQ(c.engine.max_parents, 2);
  EXPECT_EQ(c.engine.batch_size, 100);
  EXPECT_EQ(c.engine.max_arco_steps, 400);
  EXPECT_EQ(c.engine.arco_lr, 0.01);
  EXPECT_EQ(c.engine.gp_steps, 100);
  EXPECT_EQ(c.engine.gp_lr, 0.05);
  EXPECT_EQ(c.engine.ema_decay, 0.9);
  EXPECT_EQ(c.engine.hidden_units, 30);
  EXPECT_EQ(c.engine.prior_std, 10.0);
  EXPECT_EQ(c.shape.orders, 100);
  EXPECT_EQ(c.shape.graphs, 10);
  EXPECT_EQ(c.shape.samples, 10);
  EXPECT_EQ(c.interventions, 5);
  EXPECT_EQ(c.kde_bandwidth, 0.2);
}

TEST(RunConfig, ParsesTypedValuesAndComments) {
  const RunConfig c = parse_run_config(
      "# experiment\n"
      "graph = er   # inline comment\n"
      "d = 7\n"
      "degree = 1.5\n"
      "mechanism = sigmoid\n"
      "n = 150\n"
      "seeds = 3, 1, 2\n"
      "max_parents = 3\n"
      "\n"
      "intervention = 0=1.5, 2=-1\n"
      "target = 4\n"
      "interventional = true\n");
  EXPECT_EQ(c.graph, "er");
  EXPECT_EQ(c.d, 7);
  EXPECT_EQ(c.degree, 1.5);
  EXPECT_EQ(c.mechanism, MechanismKind::Sigmoid);
  EXPECT_EQ(c.n, 150);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{3, 1, 2}));
  EXPECT_EQ(c.engine.max_parents, 3);
  EXPECT_EQ(c.intervention, (Intervention{{0, 1.5}, {2, -1.0}}));
  EXPECT_EQ(c.target, 4);
  EXPECT_TRUE(c.interventional);
}

TEST(RunConfig, EmptySeedsParseToEmptyList) {
  EXPECT_TRUE(parse_run_config("seeds =\n").seeds.empty());
}

TEST(RunConfig, DiagnosticsNameLineAndKey) {
  const std::string unknown = config_error("d = 3\nbogus = 1\n");
  EXPECT_NE(unknown.find("line 2"), std::string::npos);
  EXPECT_NE(unknown.find("bogus"), std::string::npos);

  const std::string dup = config_error("n = 3\nd = 2\nn = 4\n");
  EXPECT_NE(dup.find("line 3"), std::string::npos);
  EXPECT_NE(dup.find("duplicate"), std::string::npos);

  const std::string bad = config_error("d = three\n");
  EXPECT_NE(bad.find("line 1"), std::string::npos);
  EXPECT_NE(bad.find("'d'"), std::string::npos);

  config_error("graph = tree\n");
  config_error("query = everything\n");
  config_error("just some words\n");
  config_error("intervention = 0:1\n");
}

TEST(Summary, NormalConfidenceInterval) {
  const Summary s = summarise_values("x", {1.0, 2.0, 3.0, 6.0});
  EXPECT_EQ(s.count, 4);
  EXPECT_DOUBLE_EQ(s.mean, 3.0);
  const double sd = std::sqrt((4.0 + 1.0 + 0.0 + 9.0) / 3.0);
  EXPECT_NEAR(s.half_width, 1.96 * sd / 2.0, 1e-14);
  EXPECT_EQ(summarise_values("y", {5.0}).half_width, 0.0);
}
