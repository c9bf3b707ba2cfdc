#include <gtest/gtest.h>

#include <fstream>

#include <nlohmann/json.hpp>

#include "runner.hpp"

namespace mutforest::cli {
namespace {

const std::filesystem::path kModels = MUTFOREST_MODELS_DIR;

RunOptions options(const std::string& command, const std::string& model) {
  RunOptions o;
  const auto space = command.find(' ');
  o.command = command.substr(0, space);
  if (space != std::string::npos) o.subcommand = command.substr(space + 1);
  o.model = kModels / model;
  return o;
}

const std::string& file(const RunOutput& out, const std::string& name) {
  for (const auto& f : out.files)
    if (f.name == name) return f.content;
  throw std::out_of_range("no output file " + name);
}

TEST(Runner, FormatDoubleRoundTrips) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
  EXPECT_EQ(format_double(2.0), "2");
}

TEST(Runner, MutationLawTables) {
  auto o = options("mutation-law", "nu_diamond.json");
  const auto out = run(o);
  const auto doc = nlohmann::json::parse(file(out, "mutation_law.json"));
  ASSERT_EQ(doc["types"].size(), 2u);
  const auto& t1 = doc["types"][0];
  EXPECT_NEAR(t1["mass"].get<double>() + t1["truncation_error"].get<double>(), 1.0, 1e-10);
  EXPECT_NE(file(out, "mutation_law.csv").find("1,0,0,0.6125741"), std::string::npos);
  EXPECT_NE(file(out, "mutation_mean.csv").find("2,1,0.10000000000000001,0.25,0"), std::string::npos);
}

TEST(Runner, ConfigHashIgnoresWorkers) {
  auto a = options("simulate-discrete", "nu_diamond.json");
  auto b = a;
  b.workers = 4;
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.seed = 2;
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
}

TEST(Runner, OutputsIndependentOfWorkers) {
  for (const std::string engine : {"walk", "forest"}) {
    auto a = options("simulate-discrete", "nu_diamond.json");
    a.reps = 300;
    a.engine = engine;
    a.type = 1;
    auto b = a;
    b.workers = 3;
    const auto x = run(a);
    const auto y = run(b);
    ASSERT_EQ(x.files.size(), y.files.size());
    for (std::size_t i = 0; i < x.files.size(); ++i) EXPECT_EQ(x.files[i].content, y.files[i].content) << x.files[i].name;
  }
}

TEST(Runner, ContinuousTimeDumpsTrajectories) {
  auto o = options("simulate-ct", "nu_triangle.json");
  o.reps = 50;
  o.engine = "lamperti";
  o.roots = {1, 1};
  const auto out = run(o);
  const auto& traj = file(out, "trajectories.csv");
  EXPECT_EQ(traj.rfind("replicate,event,time,parent_type,Z_1,Z_2,M_1,M_2", 0), 0u);
  EXPECT_NE(traj.find("\n0,0,0,0,1,1,0,0\n"), std::string::npos);
  const auto summary = nlohmann::json::parse(file(out, "summary.json"));
  EXPECT_TRUE(summary["decomposition_holds"].get<bool>());
}

TEST(Runner, EmergenceExpectationReport) {
  auto o = options("emergence expectation", "b_chain_1_2.json");
  const auto doc = nlohmann::json::parse(file(run(o), "expectation.json"));
  EXPECT_NEAR(doc["oracle_value"].get<double>(), std::log(1.5), 1e-9);
  EXPECT_FALSE(doc["printed_supported"].get<bool>());
  EXPECT_TRUE(doc["derived_supported"].get<bool>());
}

TEST(Runner, NamedFailures) {
  auto o = options("bogus", "nu_diamond.json");
  EXPECT_THROW(run(o), ConfigError);
  o = options("growth", "nu_diamond.json");
  EXPECT_THROW(run(o), ModelError);  // subcritical
  o = options("simulate-ct", "critical.json");
  EXPECT_THROW(run(o), ModelError);  // no rates
  o = options("simulate-discrete", "nu_diamond.json");
  o.roots = {1, 0, 0};
  EXPECT_THROW(run(o), ConfigError);
  o = options("emergence tau", "b_chain_1_1.json");
  o.target = 1;
  EXPECT_THROW(run(o), ConfigError);
  o = options("mutation-law", "missing.json");
  EXPECT_THROW(run(o), ModelError);
}

TEST(Runner, WritesManifest) {
  auto o = options("emergence laplace", "b_chain_1_1.json");
  const auto out = run(o);
  const auto dir = std::filesystem::temp_directory_path() / "mutforest_runner_test";
  std::filesystem::remove_all(dir);
  write_outputs(dir, o, out, 0.5);
  std::ifstream in(dir / "manifest.json");
  const auto m = nlohmann::json::parse(in);
  EXPECT_EQ(m["config_hash"], config_hash(o));
  EXPECT_EQ(m["seed"], 1);
  EXPECT_EQ(m["files"].size(), out.files.size());
  EXPECT_TRUE(m["versions"].contains("mutforest"));
  EXPECT_TRUE(std::filesystem::exists(dir / "laplace.csv"));
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace mutforest::cli
