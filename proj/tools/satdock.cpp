// Copyright 2026 The satdock Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// satdock command line: train, simulate, verify, export.
//
// Failures print one line to stderr,
//   error status=<name> code=<n> message="<text>"
// and exit with the status code.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "satdock/satdock.h"

namespace {

struct Options {
  std::string config_path;
  std::optional<std::string> mode;
  std::optional<std::uint64_t> seed;
  std::optional<int> iterations;
  std::optional<std::string> out;
  std::optional<int> workers;
  std::string checkpoint;
  int episodes = 100;
};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n' || c == '\r') {
      out += ' ';
      continue;
    }
    out += c;
  }
  return out;
}

int report(int code, const char* name, const std::string& message) {
  std::cerr << "error status=" << name << " code=" << code << " message=\""
            << escape(message) << "\"\n";
  return code;
}

int report(satdock_status status) {
  return report(static_cast<int>(status), satdock_status_name(status),
                satdock_last_error());
}

// Owns the config handle for the duration of a command.
class ConfigHandle {
 public:
  ~ConfigHandle() { satdock_config_free(ptr_); }
  satdock_config* get() const { return ptr_; }
  satdock_config** out() { return &ptr_; }

 private:
  satdock_config* ptr_ = nullptr;
};

satdock_status build_config(const Options& o, ConfigHandle& h) {
  satdock_status s = o.config_path.empty()
                         ? satdock_config_default(h.out())
                         : satdock_config_load(o.config_path.c_str(), h.out());
  if (s != SATDOCK_OK) return s;
  if (o.mode && (s = satdock_config_set_mode(h.get(), o.mode->c_str())) != SATDOCK_OK) return s;
  if (o.seed && (s = satdock_config_set_seed(h.get(), *o.seed)) != SATDOCK_OK) return s;
  if (o.iterations && (s = satdock_config_set_iterations(h.get(), *o.iterations)) != SATDOCK_OK)
    return s;
  if (o.out && (s = satdock_config_set_output_dir(h.get(), o.out->c_str())) != SATDOCK_OK) return s;
  if (o.workers && (s = satdock_config_set_workers(h.get(), *o.workers)) != SATDOCK_OK) return s;
  return SATDOCK_OK;
}

std::string output_dir(const ConfigHandle& h) {
  size_t n = 0;
  satdock_config_json(h.get(), nullptr, 0, &n);
  std::string text(n + 1, '\0');
  satdock_config_json(h.get(), text.data(), text.size(), &n);
  // "output_dir": "<dir>" is the only key with that name.
  const std::string key = "\"output_dir\": \"";
  const auto at = text.find(key);
  if (at == std::string::npos) return ".";
  const auto end = text.find('"', at + key.size());
  return text.substr(at + key.size(), end - at - key.size());
}

void progress(const char* line, void*) { std::cerr << line << '\n'; }

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config_path, "JSON run configuration");
  cmd->add_option("--mode", o.mode, "funnel or pure")
      ->check(CLI::IsMember({"funnel", "pure"}));
  cmd->add_option("--seed", o.seed, "base random seed");
  cmd->add_option("--iterations", o.iterations, "training iterations")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--workers", o.workers, "worker threads (0: all cores)")
      ->check(CLI::NonNegativeNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Satellite docking: funnel-safeguarded reinforcement learning"};
  app.require_subcommand(1);
  Options o;

  CLI::App* train = app.add_subcommand("train", "train a policy and evaluate it");
  CLI::App* sim = app.add_subcommand("simulate", "run episodes from a checkpoint");
  CLI::App* ver = app.add_subcommand("verify", "run the numerical verification suite");
  CLI::App* exp = app.add_subcommand("export", "write the reference trajectory");
  for (CLI::App* c : {train, sim, ver, exp}) add_common(c, o);
  sim->add_option("--checkpoint", o.checkpoint, "checkpoint file (default <out>/checkpoint.txt)");
  sim->add_option("--episodes", o.episodes, "number of episodes")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report(SATDOCK_INVALID_ARGUMENT, "usage", e.what());
  }

  ConfigHandle config;
  satdock_status s = build_config(o, config);
  if (s != SATDOCK_OK) return report(s);
  const std::string dir = output_dir(config);

  if (train->parsed()) {
    s = satdock_train(config.get(), progress, nullptr);
    if (s != SATDOCK_OK) return report(s);
    std::cout << dir << '\n';
  } else if (sim->parsed()) {
    const std::string checkpoint = o.checkpoint.empty() ? dir + "/checkpoint.txt" : o.checkpoint;
    s = satdock_simulate(config.get(), checkpoint.c_str(), o.episodes);
    if (s != SATDOCK_OK) return report(s);
    std::cout << dir << "/summary.csv\n";
  } else if (ver->parsed()) {
    s = satdock_verify(config.get());
    if (s != SATDOCK_OK) return report(s);
    std::cout << dir << "/manifest.json\n";
  } else if (exp->parsed()) {
    s = satdock_export(config.get());
    if (s != SATDOCK_OK) return report(s);
    std::cout << dir << "/reference.csv\n";
  }
  return 0;
}
