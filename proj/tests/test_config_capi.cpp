#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "satdock/config.hpp"
#include "satdock/errors.hpp"
#include "satdock/satdock.h"

namespace satdock {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("satdock_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string error_of(const std::string& json) {
  try {
    config_from_json(json);
  } catch (const InvalidConfig& e) {
    return e.what();
  }
  return "";
}

TEST(RunConfig, Defaults) {
  const RunConfig c;
  EXPECT_EQ(c.iterations, 100);
  EXPECT_EQ(c.eval_episodes, 100);
  EXPECT_EQ(c.eval_interval, 1);
  EXPECT_EQ(c.seed, 0u);
  EXPECT_NO_THROW(c.validate());
  EXPECT_GE(c.resolved_workers(), 1);
}

TEST(RunConfig, JsonRoundTrip) {
  RunConfig c;
  c.seed = 17;
  c.iterations = 3;
  c.mission.mode = Mode::kPureRl;
  c.satellite.m1 = 250.5;
  c.ppo.hidden_sizes = {32, 16};
  c.mission.funnel.weights[4] = 0.5;
  c.output_dir = "somewhere/else";
  const RunConfig back = config_from_json(to_json(c));
  EXPECT_EQ(back, c);
  EXPECT_EQ(to_json(back), to_json(c));
}

TEST(RunConfig, EveryDefaultIsWritten) {
  const std::string text = to_json(RunConfig{});
  for (const char* key : {"m1", "p_z", "horizon", "dt_sub", "mode", "initial_radius",
                          "threshold", "dwell_time", "weights", "learning_rate",
                          "discount", "kl_coef", "minibatch_size", "episodes_per_iteration",
                          "epochs", "gae_lambda", "value_loss_weight", "hidden_sizes",
                          "init_std_fraction", "seed", "iterations", "eval_episodes",
                          "workers", "output_dir"}) {
    EXPECT_NE(text.find(std::string("\"") + key + "\""), std::string::npos) << key;
  }
}

TEST(RunConfig, PartialFileKeepsDefaults) {
  const RunConfig c = config_from_json(R"({"seed": 4, "ppo": {"epochs": 3}})");
  RunConfig expected;
  expected.seed = 4;
  expected.ppo.epochs = 3;
  EXPECT_EQ(c, expected);
}

TEST(RunConfig, FieldLevelMessages) {
  EXPECT_NE(error_of(R"({"satellite": {"m1": -1}})").find("satellite.m1"), std::string::npos);
  EXPECT_NE(error_of(R"({"satellite": {"mass": 3}})").find("satellite.mass: unknown key"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"bogus": 1})").find("bogus: unknown key"), std::string::npos);
  EXPECT_NE(error_of(R"({"ppo": {"epochs": 1.5}})").find("ppo.epochs"), std::string::npos);
  EXPECT_NE(error_of(R"({"mission": {"mode": "hybrid"}})").find("mode"), std::string::npos);
  EXPECT_NE(error_of(R"({"funnel": {"weights": [1, 2]}})").find("funnel.weights"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"iterations": -2})").find("iterations"), std::string::npos);
  EXPECT_NE(error_of("{not json").size(), 0u);
}

TEST(RunConfig, EvaluationCadence) {
  RunConfig c;
  c.iterations = 10;
  c.eval_interval = 4;
  std::vector<int> at;
  for (int i = 0; i <= 10; ++i)
    if (c.evaluates_at(i)) at.push_back(i);
  EXPECT_EQ(at, (std::vector<int>{0, 1, 5, 9, 10}));
  c.eval_interval = 1;
  for (int i = 0; i <= 10; ++i) EXPECT_TRUE(c.evaluates_at(i));
}

TEST(RunConfig, HashStableAndSensitive) {
  RunConfig a;
  RunConfig b = a;
  b.output_dir = "other";
  b.workers = 7;
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
  b.seed = 1;
  EXPECT_NE(config_hash(a), config_hash(b));
  b = a;
  b.ppo.kl_coef = 0.2;
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(provenance_line(a), "# config_hash=" + config_hash(a) + " seed=0");
}

TEST(RunConfig, FileRoundTrip) {
  const fs::path dir = scratch_dir("config_file");
  RunConfig c;
  c.seed = 99;
  save_config((dir / "c.json").string(), c);
  EXPECT_EQ(load_config((dir / "c.json").string()), c);
  EXPECT_THROW(load_config((dir / "missing.json").string()), IoError);
}

// ---------------------------------------------------------------------------
// C interface

TEST(CApi, VersionAndStatusNames) {
  EXPECT_GT(std::strlen(satdock_version()), 0u);
  EXPECT_STREQ(satdock_status_name(SATDOCK_OK), "ok");
  EXPECT_STREQ(satdock_status_name(SATDOCK_INVALID_CONFIG), "invalid_config");
  EXPECT_STREQ(satdock_status_name(SATDOCK_IO_ERROR), "io_error");
  EXPECT_STREQ(satdock_status_name(SATDOCK_VERIFY_FAILED), "verify_failed");
}

TEST(CApi, ConfigLifecycle) {
  satdock_config* c = nullptr;
  ASSERT_EQ(satdock_config_default(&c), SATDOCK_OK);
  EXPECT_EQ(satdock_config_set_mode(c, "pure"), SATDOCK_OK);
  EXPECT_EQ(satdock_config_set_seed(c, 5), SATDOCK_OK);
  EXPECT_EQ(satdock_config_set_iterations(c, 2), SATDOCK_OK);
  EXPECT_EQ(satdock_config_set_mode(c, "neither"), SATDOCK_INVALID_CONFIG);
  EXPECT_NE(std::string(satdock_last_error()).find("neither"), std::string::npos);
  EXPECT_EQ(satdock_config_set_iterations(c, -1), SATDOCK_INVALID_CONFIG);

  size_t n = 0;
  ASSERT_EQ(satdock_config_json(c, nullptr, 0, &n), SATDOCK_OK);
  std::vector<char> buf(n + 1);
  ASSERT_EQ(satdock_config_json(c, buf.data(), buf.size(), &n), SATDOCK_OK);
  const RunConfig parsed = config_from_json(buf.data());
  EXPECT_EQ(parsed.seed, 5u);
  EXPECT_EQ(parsed.iterations, 2);
  EXPECT_EQ(parsed.mission.mode, Mode::kPureRl);

  char hash[17];
  ASSERT_EQ(satdock_config_hash(c, hash), SATDOCK_OK);
  EXPECT_EQ(std::string(hash), config_hash(parsed));

  satdock_config* d = nullptr;
  ASSERT_EQ(satdock_config_parse(buf.data(), &d), SATDOCK_OK);
  char hash2[17];
  satdock_config_hash(d, hash2);
  EXPECT_STREQ(hash, hash2);
  satdock_config_free(d);
  satdock_config_free(c);
  satdock_config_free(nullptr);
}

TEST(CApi, NullAndBadInputs) {
  EXPECT_EQ(satdock_config_default(nullptr), SATDOCK_INVALID_ARGUMENT);
  satdock_config* c = nullptr;
  EXPECT_EQ(satdock_config_parse(R"({"satellite": {"m2": -3}})", &c), SATDOCK_INVALID_CONFIG);
  EXPECT_EQ(c, nullptr);
  EXPECT_NE(std::string(satdock_last_error()).find("satellite.m2"), std::string::npos);
  EXPECT_EQ(satdock_config_load("/nonexistent/path.json", &c), SATDOCK_IO_ERROR);
  satdock_agent* a = nullptr;
  EXPECT_EQ(satdock_agent_load("/nonexistent/ckpt.txt", &a), SATDOCK_IO_ERROR);
}

TEST(CApi, EnvironmentEpisode) {
  satdock_config* c = nullptr;
  ASSERT_EQ(satdock_config_default(&c), SATDOCK_OK);
  satdock_env* env = nullptr;
  ASSERT_EQ(satdock_env_create(c, &env), SATDOCK_OK);
  double obs[18];
  ASSERT_EQ(satdock_env_reset(env, obs), SATDOCK_OK);
  for (double v : obs) EXPECT_EQ(v, 0.0);
  double action[9] = {0};
  double reward = 0;
  int done = 0, violated = 0, steps = 0;
  while (!done) {
    ASSERT_EQ(satdock_env_step(env, action, obs, &reward, &done, &violated), SATDOCK_OK);
    EXPECT_FALSE(violated);
    ++steps;
  }
  EXPECT_EQ(steps, 60);
  double t = 0;
  satdock_env_time(env, &t);
  EXPECT_EQ(t, 60.0);
  EXPECT_EQ(satdock_env_step(env, action, obs, &reward, &done, &violated),
            SATDOCK_INVALID_ARGUMENT);
  satdock_env_reset(env, obs);
  action[7] = 1.0;  // outside the box
  EXPECT_EQ(satdock_env_step(env, action, obs, &reward, &done, &violated),
            SATDOCK_INVALID_ARGUMENT);
  satdock_env_free(env);
  satdock_config_free(c);
}

TEST(CApi, TrainSimulateExport) {
  const fs::path dir = scratch_dir("capi_run");
  satdock_config* c = nullptr;
  ASSERT_EQ(satdock_config_parse(R"({"iterations": 1, "eval_episodes": 2, "workers": 1,
                                     "ppo": {"episodes_per_iteration": 3}})",
                                 &c),
            SATDOCK_OK);
  ASSERT_EQ(satdock_config_set_output_dir(c, dir.string().c_str()), SATDOCK_OK);
  int lines = 0;
  ASSERT_EQ(satdock_train(c, [](const char*, void* u) { ++*static_cast<int*>(u); }, &lines),
            SATDOCK_OK);
  EXPECT_GT(lines, 0);
  for (const char* f : {"config.json", "training.csv", "eval.csv", "checkpoint.txt"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;

  satdock_agent* agent = nullptr;
  ASSERT_EQ(satdock_agent_load((dir / "checkpoint.txt").string().c_str(), &agent), SATDOCK_OK);
  const double obs[18] = {0};
  double act[9];
  ASSERT_EQ(satdock_agent_act(agent, obs, act), SATDOCK_OK);
  for (int i = 0; i < 9; ++i) EXPECT_LE(std::abs(act[i]), i < 6 ? 0.75 : 0.15);
  satdock_agent_free(agent);

  ASSERT_EQ(satdock_simulate(c, (dir / "checkpoint.txt").string().c_str(), 2), SATDOCK_OK);
  EXPECT_TRUE(fs::exists(dir / "summary.csv"));
  EXPECT_EQ(satdock_simulate(c, (dir / "nope.txt").string().c_str(), 1), SATDOCK_IO_ERROR);

  ASSERT_EQ(satdock_export(c), SATDOCK_OK);
  std::ifstream in(dir / "reference.csv");
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 2 + 6001);  // provenance, header, t = 0, 0.01, ..., 60
  satdock_config_free(c);
}

}  // namespace
}  // namespace satdock
