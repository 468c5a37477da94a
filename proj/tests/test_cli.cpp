// Runs the satdock executable end to end.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <gtest/gtest.h>

#ifndef SATDOCK_CLI
#error "SATDOCK_CLI must name the command line executable"
#endif

namespace {

namespace fs = std::filesystem;

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("satdock_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

Result run(const std::string& args) {
  static int counter = 0;
  const fs::path dir = fs::temp_directory_path() / "satdock_cli_streams";
  fs::create_directories(dir);
  const fs::path out = dir / ("out" + std::to_string(counter));
  const fs::path err = dir / ("err" + std::to_string(counter++));
  const std::string cmd = std::string("\"") + SATDOCK_CLI + "\" " + args + " >\"" +
                          out.string() + "\" 2>\"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

// Exactly one error line, and it is the last thing on stderr.
void expect_error_line(const Result& r, const std::string& status, int code) {
  EXPECT_EQ(r.code, code);
  const auto lines = lines_of(r.err);
  ASSERT_FALSE(lines.empty());
  const std::regex pattern("error status=" + status + " code=" + std::to_string(code) +
                           " message=\"([^\"\\\\]|\\\\.)*\"");
  EXPECT_TRUE(std::regex_match(lines.back(), pattern)) << lines.back();
  int errors = 0;
  for (const auto& l : lines) errors += l.rfind("error ", 0) == 0 ? 1 : 0;
  EXPECT_EQ(errors, 1);
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

// Small but complete training setup.
std::string small_config(const fs::path& dir) {
  const fs::path p = dir / "small.json";
  write(p, R"({"iterations": 2, "eval_episodes": 2, "workers": 1,
               "ppo": {"episodes_per_iteration": 3}})");
  return p.string();
}

TEST(Cli, UsageErrors) {
  expect_error_line(run(""), "usage", 1);
  expect_error_line(run("fly"), "usage", 1);
  expect_error_line(run("train --mode hybrid"), "usage", 1);
  expect_error_line(run("train --iterations -3"), "usage", 1);
}

TEST(Cli, NegativeMassRejected) {
  const fs::path dir = scratch("negative_mass");
  write(dir / "bad.json", R"({"satellite": {"m1": -300}})");
  const Result r = run("verify --config " + (dir / "bad.json").string() + " --out " +
                       (dir / "out").string());
  expect_error_line(r, "invalid_config", 2);
  EXPECT_NE(r.err.find("satellite.m1"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "out" / "manifest.json"));
}

TEST(Cli, UnknownConfigKey) {
  const fs::path dir = scratch("unknown_key");
  write(dir / "bad.json", R"({"ppo": {"clip": 0.2}})");
  const Result r = run("train --config " + (dir / "bad.json").string());
  expect_error_line(r, "invalid_config", 2);
  EXPECT_NE(r.err.find("ppo.clip: unknown key"), std::string::npos);
}

TEST(Cli, MissingConfigFile) {
  expect_error_line(run("export --config /nonexistent/config.json"), "io_error", 8);
}

TEST(Cli, VerifyPrintsManifestPath) {
  const fs::path dir = scratch("verify");
  const Result r = run("verify --out " + dir.string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, (dir / "manifest.json").string() + "\n");
  const std::string manifest = slurp(dir / "manifest.json");
  EXPECT_NE(manifest.find("\"status\": \"pass\""), std::string::npos);
  EXPECT_NE(manifest.find("\"config_hash\""), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "pd_neighbourhood.csv"));
  // Same inputs, same manifest.
  const fs::path again = scratch("verify_again");
  ASSERT_EQ(run("verify --out " + again.string()).code, 0);
  EXPECT_EQ(slurp(again / "manifest.json"), manifest);
}

TEST(Cli, ExportReference) {
  const fs::path dir = scratch("export");
  const Result r = run("export --out " + dir.string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, (dir / "reference.csv").string() + "\n");
  const auto lines = lines_of(slurp(dir / "reference.csv"));
  ASSERT_EQ(lines.size(), 6003u);
  EXPECT_EQ(lines[0].rfind("# config_hash=", 0), 0u);
  EXPECT_EQ(lines[2].rfind("0,", 0), 0u);
}

TEST(Cli, UntrainedFunnelEvaluation) {
  const fs::path dir = scratch("untrained_funnel");
  const Result r = run("train --iterations 0 --mode funnel --out " + dir.string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, dir.string() + "\n");
  const auto training = lines_of(slurp(dir / "training.csv"));
  EXPECT_EQ(training.size(), 2u);  // provenance and header only
  const auto eval = lines_of(slurp(dir / "eval.csv"));
  ASSERT_EQ(eval.size(), 3u);
  EXPECT_EQ(eval[1], "iteration,violations_per_100,interventions_per_100,mean_reward,episodes,max_norm_e1");
  EXPECT_EQ(eval[2].rfind("0,0,", 0), 0u) << eval[2];
  EXPECT_TRUE(fs::exists(dir / "checkpoint.txt"));
}

TEST(Cli, UntrainedPureEvaluationViolates) {
  const fs::path dir = scratch("untrained_pure");
  ASSERT_EQ(run("train --iterations 0 --mode pure --out " + dir.string()).code, 0);
  const auto eval = lines_of(slurp(dir / "eval.csv"));
  ASSERT_EQ(eval.size(), 3u);
  std::istringstream row(eval[2]);
  std::string iteration, violations;
  std::getline(row, iteration, ',');
  std::getline(row, violations, ',');
  EXPECT_GE(std::stoi(violations), 1);
}

TEST(Cli, TrainingIsReproducible) {
  const fs::path dir = scratch("reproducible");
  const std::string cfg = small_config(dir);
  ASSERT_EQ(run("train --config " + cfg + " --seed 5 --out " + (dir / "a").string()).code, 0);
  ASSERT_EQ(run("train --config " + cfg + " --seed 5 --out " + (dir / "b").string()).code, 0);
  ASSERT_EQ(run("train --config " + cfg + " --seed 6 --out " + (dir / "c").string()).code, 0);
  const std::string a = slurp(dir / "a" / "training.csv");
  EXPECT_EQ(lines_of(a).size(), 4u);
  EXPECT_EQ(a, slurp(dir / "b" / "training.csv"));
  EXPECT_EQ(slurp(dir / "a" / "eval.csv"), slurp(dir / "b" / "eval.csv"));
  EXPECT_EQ(slurp(dir / "a" / "checkpoint.txt"), slurp(dir / "b" / "checkpoint.txt"));
  EXPECT_NE(a, slurp(dir / "c" / "training.csv"));
}

TEST(Cli, SimulateFromCheckpoint) {
  const fs::path dir = scratch("simulate");
  const std::string cfg = small_config(dir);
  ASSERT_EQ(run("train --config " + cfg + " --out " + dir.string()).code, 0);

  const Result r = run("simulate --config " + cfg + " --out " + dir.string() + " --episodes 100");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, (dir / "summary.csv").string() + "\n");
  const auto summary = lines_of(slurp(dir / "summary.csv"));
  ASSERT_EQ(summary.size(), 102u);
  for (std::size_t i = 2; i < summary.size(); ++i) {
    const double max_e1 = std::stod(summary[i].substr(summary[i].rfind(',') + 1));
    EXPECT_LT(max_e1, 1.0) << summary[i];
  }
  const auto episode = lines_of(slurp(dir / "episodes" / "episode_000.csv"));
  EXPECT_EQ(episode.size(), 2u + 6001u);
  for (const auto& entry : fs::directory_iterator(dir / "episodes"))
    EXPECT_EQ(slurp(entry.path()).rfind("# config_hash=", 0), 0u);

  const Result missing = run("simulate --out " + dir.string() + " --checkpoint " +
                             (dir / "none.txt").string());
  expect_error_line(missing, "io_error", 8);

  // A checkpoint for a different network shape.
  write(dir / "wide.json", R"({"ppo": {"hidden_sizes": [8]}})");
  const Result shape = run("simulate --config " + (dir / "wide.json").string() + " --out " +
                           dir.string() + " --episodes 1");
  expect_error_line(shape, "shape_mismatch", 9);
}

TEST(Cli, OutputsNameHashAndSeed) {
  const fs::path dir = scratch("provenance");
  const std::string cfg = small_config(dir);
  ASSERT_EQ(run("train --config " + cfg + " --seed 3 --out " + dir.string()).code, 0);
  ASSERT_EQ(run("export --config " + cfg + " --seed 3 --out " + dir.string()).code, 0);
  ASSERT_EQ(run("verify --config " + cfg + " --seed 3 --out " + dir.string()).code, 0);
  const auto first = lines_of(slurp(dir / "training.csv")).front();
  const std::regex provenance("# config_hash=[0-9a-f]{16} seed=3");
  EXPECT_TRUE(std::regex_match(first, provenance)) << first;
  const std::string hash = first.substr(14, 16);
  for (const char* f : {"eval.csv", "reference.csv", "pd_neighbourhood.csv"})
    EXPECT_EQ(lines_of(slurp(dir / f)).front(), first) << f;
  for (const char* f : {"manifest.json", "timings.json", "checkpoint.txt"})
    EXPECT_NE(slurp(dir / f).find(hash), std::string::npos) << f;
  for (const auto& entry : fs::directory_iterator(dir / "checkpoints"))
    EXPECT_NE(slurp(entry.path()).find(hash), std::string::npos) << entry.path();
}

}  // namespace
