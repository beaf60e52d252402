#include "vortexflow/cli.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace vortexflow;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("vf_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const auto p = dir / "run.cfg";
  std::ofstream(p) << text;
  return p;
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(VF_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST(Config, EmptyDocumentGivesDefaults) {
  const auto c = parse_config("");
  EXPECT_EQ(c.dim, 2);
  EXPECT_EQ(c.kernel_epsilon, 0.1);
  EXPECT_EQ(c.replicas, 64u);
  const auto text = resolved_config_text(c);
  EXPECT_NE(text.find("kernel.epsilon"), std::string::npos);
  EXPECT_NE(text.find("solver.dt"), std::string::npos);
  // The resolved text parses back to the same configuration.
  EXPECT_EQ(resolved_config_text(parse_config(text)), text);
}

TEST(Config, SectionsAndComments) {
  const auto c = parse_config("seed = 9  # trailing\n[kernel]\nepsilon = 0.5\n[gamma]\nc = 0.1\n");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.kernel_epsilon, 0.5);
  EXPECT_EQ(c.gamma.c, 0.1);
}

TEST(Config, EpsilonOutOfRangeNamesKey) {
  try {
    parse_config("kernel.epsilon = 1.5\n");
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("kernel.epsilon"), std::string::npos);
    EXPECT_NE(msg.find("(0,1]"), std::string::npos);
  }
}

TEST(Config, UnknownKeyListsValidKeys) {
  try {
    parse_config("foo.bar = 1\n");
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("foo.bar"), std::string::npos);
    for (const auto& k : detail::config_keys()) EXPECT_NE(msg.find(k.key), std::string::npos) << k.key;
  }
}

TEST(Config, RejectsTypeErrorsAndDuplicates) {
  EXPECT_THROW(parse_config("solver.dt = fast\n"), ValidationError);
  EXPECT_THROW(parse_config("seed = 1\nseed = 2\n"), ValidationError);
  EXPECT_THROW(parse_config("gamma.c =\n"), ValidationError);
  EXPECT_THROW(parse_config("solver.T = 0.0105\nsolver.dt = 0.01\n"), ValidationError);
}

TEST(Dispatch, CounterexampleTable) {
  auto c = parse_config("experiment.ns = 2, 4, 8\n");
  c.out_dir = scratch("counterexample").string();
  std::ostringstream log;
  ASSERT_EQ(dispatch("counterexample", c, log), 0);
  const auto rows = csv_rows(slurp(fs::path(c.out_dir) / "counterexample.csv"));
  ASSERT_EQ(rows.size(), 7u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"n", "m", "gamma2"}));
  int flat = 0, pairwise = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) (rows[i][1].empty() ? flat : pairwise)++;
  EXPECT_EQ(flat, 3);
  EXPECT_EQ(pairwise, 3);
  const auto manifest = slurp(fs::path(c.out_dir) / "manifest.txt");
  EXPECT_NE(manifest.find("command = counterexample"), std::string::npos);
  EXPECT_NE(manifest.find("exit_code = 0"), std::string::npos);
  EXPECT_TRUE(fs::exists(fs::path(c.out_dir) / "resolved_config.txt"));
}

TEST(Dispatch, DisproofDefaultContainsUnitGapRow) {
  auto c = parse_config("");
  c.out_dir = scratch("disproof").string();
  std::ostringstream log;
  ASSERT_EQ(dispatch("disproof", c, log), 0);
  bool found = false;
  for (const auto& row : csv_rows(slurp(fs::path(c.out_dir) / "tv.csv")))
    if (row[0] == "1") {
      found = true;
      EXPECT_NEAR(std::stod(row[3]), 0.765849, 1e-6);
    }
  EXPECT_TRUE(found);
}

TEST(Dispatch, SameSeedSameBytes) {
  const std::string text =
      "solver.dt = 0.01\nsolver.T = 0.1\nparticles.n = 4\nexperiment.replicas = 3\n"
      "experiment.scales = 0.1, 0.01\n";
  std::string first;
  for (int run = 0; run < 2; ++run) {
    auto c = parse_config(text);
    c.out_dir = scratch("determinism" + std::to_string(run)).string();
    std::ostringstream log;
    ASSERT_EQ(dispatch("continuity", c, log), 0);
    const auto bytes =
        slurp(fs::path(c.out_dir) / "continuity.csv") + slurp(fs::path(c.out_dir) / "continuity_flat.csv");
    if (run == 0)
      first = bytes;
    else
      EXPECT_EQ(bytes, first);
  }
}

TEST(Dispatch, SimulateWritesPath) {
  auto c = parse_config("solver.dt = 0.01\nsolver.T = 0.05\nparticles.n = 2\n");
  c.out_dir = scratch("simulate").string();
  std::ostringstream log;
  ASSERT_EQ(dispatch("simulate", c, log), 0);
  const auto rows = csv_rows(slurp(fs::path(c.out_dir) / "path.csv"));
  EXPECT_EQ(rows[0], (std::vector<std::string>{"t", "particle", "weight", "x1", "x2"}));
  EXPECT_EQ(rows.size(), 1u + 6u * 2u);
}

TEST(Binary, ExitCodes) {
  const auto dir = scratch("binary");
  const auto ok = write_config(dir, "experiment.ns = 2, 3\n");
  EXPECT_EQ(run_binary("counterexample --config " + ok.string() + " --out " + (dir / "ok").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "ok" / "counterexample.csv"));

  const auto bad = write_config(dir, "kernel.epsilon = 1.5\n");
  EXPECT_EQ(run_binary("counterexample --config " + bad.string() + " --out " + (dir / "bad").string()), 1);
  const auto manifest = slurp(dir / "bad" / "manifest.txt");
  EXPECT_NE(manifest.find("kernel.epsilon"), std::string::npos);

  EXPECT_EQ(run_binary("nonsense --config " + ok.string() + " --out " + (dir / "cmd").string()), 1);
  EXPECT_EQ(run_binary("counterexample"), 1);

  // Noise strong enough to throw particles off the sheet within a few steps.
  const auto wild = write_config(dir, "gamma.c = 50\nsolver.dt = 0.5\nsolver.T = 20\nparticles.n = 2\n");
  EXPECT_EQ(run_binary("simulate --config " + wild.string() + " --out " + (dir / "wild").string()), 2);
  const auto failed = slurp(dir / "wild" / "manifest.txt");
  EXPECT_NE(failed.find("exit_code = 2"), std::string::npos);
  EXPECT_NE(failed.find("validity region"), std::string::npos);
}

TEST(Binary, SeedOverride) {
  const auto dir = scratch("seed");
  const auto cfg = write_config(dir, "solver.dt = 0.01\nsolver.T = 0.05\nparticles.n = 2\n");
  ASSERT_EQ(run_binary("simulate --config " + cfg.string() + " --seed 1 --out " + (dir / "a").string()), 0);
  ASSERT_EQ(run_binary("simulate --config " + cfg.string() + " --seed 2 --out " + (dir / "b").string()), 0);
  EXPECT_NE(slurp(dir / "a" / "path.csv"), slurp(dir / "b" / "path.csv"));
  EXPECT_NE(slurp(dir / "a" / "manifest.txt").find("seed = 1\n"), std::string::npos);
}
