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

#include "satdock/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "satdock/errors.hpp"

namespace satdock {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kOk: return "ok";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kInvalidConfig: return "invalid_config";
    case ErrorCode::kSingularMassMatrix: return "singular_mass_matrix";
    case ErrorCode::kNonFiniteState: return "non_finite_state";
    case ErrorCode::kFunnelBreach: return "funnel_breach";
    case ErrorCode::kInfeasibleStart: return "infeasible_start";
    case ErrorCode::kNonFiniteGradient: return "non_finite_gradient";
    case ErrorCode::kIo: return "io_error";
    case ErrorCode::kShapeMismatch: return "shape_mismatch";
    case ErrorCode::kInternal: return "internal";
  }
  return "unknown";
}

namespace {

using json = nlohmann::json;

// Reads fields from one JSON object and rejects keys nobody asked for.
class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw InvalidConfig(where("") + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = node_.find(key);
    if (it == node_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw InvalidConfig(where(key) + ": wrong type");
    }
  }

  void get_number(const char* key, double& out) {
    seen_.insert(key);
    auto it = node_.find(key);
    if (it == node_.end()) return;
    if (!it->is_number()) throw InvalidConfig(where(key) + ": expected a number");
    out = it->get<double>();
  }

  void get_int(const char* key, int& out) {
    seen_.insert(key);
    auto it = node_.find(key);
    if (it == node_.end()) return;
    if (!it->is_number_integer()) throw InvalidConfig(where(key) + ": expected an integer");
    out = it->get<int>();
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      if (!seen_.count(it.key())) throw InvalidConfig(where(it.key()) + ": unknown key");
    }
  }

  std::string where(const std::string& key) const {
    if (path_.empty()) return key;
    return key.empty() ? path_ : path_ + "." + key;
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

json vec9_json(const Vec9& v) {
  json a = json::array();
  for (int i = 0; i < 9; ++i) a.push_back(v[i]);
  return a;
}

json to_tree(const RunConfig& c) {
  const SatelliteParams& s = c.satellite;
  const FunnelSpec& f = c.mission.funnel;
  const PpoConfig& p = c.ppo;
  json j;
  j["satellite"] = {{"m1", s.m1},   {"m2", s.m2},   {"m3", s.m3},
                    {"l_s", s.l_s}, {"b_s", s.b_s}, {"h_s", s.h_s},
                    {"r1", s.r1},   {"r2", s.r2},   {"l1", s.l1},
                    {"l2", s.l2},   {"p_x", s.p_x}, {"p_z", s.p_z}};
  j["mission"] = {{"horizon", c.mission.horizon},
                  {"decision_interval", c.mission.decision_interval},
                  {"dt_sub", c.mission.dt_sub},
                  {"mode", mode_name(c.mission.mode)}};
  j["funnel"] = {{"initial_radius", f.boundary.initial_radius},
                 {"final_radius", f.boundary.final_radius},
                 {"decay_rate", f.boundary.decay_rate},
                 {"threshold", f.threshold},
                 {"dwell_time", f.dwell_time},
                 {"weights", vec9_json(f.weights)}};
  j["ppo"] = {{"learning_rate", p.learning_rate},
              {"discount", p.discount},
              {"kl_coef", p.kl_coef},
              {"minibatch_size", p.minibatch_size},
              {"episodes_per_iteration", p.episodes_per_iteration},
              {"epochs", p.epochs},
              {"gae_lambda", p.gae_lambda},
              {"value_loss_weight", p.value_loss_weight},
              {"hidden_sizes", p.hidden_sizes},
              {"init_std_fraction", p.init_std_fraction},
              {"adam_beta1", p.adam_beta1},
              {"adam_beta2", p.adam_beta2},
              {"adam_epsilon", p.adam_epsilon},
              {"max_lr_halvings", p.max_lr_halvings}};
  j["seed"] = c.seed;
  j["iterations"] = c.iterations;
  j["eval_episodes"] = c.eval_episodes;
  j["eval_interval"] = c.eval_interval;
  j["workers"] = c.workers;
  j["output_dir"] = c.output_dir;
  return j;
}

RunConfig from_tree(const json& root) {
  RunConfig c;
  Reader top(root, "");
  if (const json* n = top.child("satellite")) {
    Reader r(*n, "satellite");
    SatelliteParams& s = c.satellite;
    r.get_number("m1", s.m1);
    r.get_number("m2", s.m2);
    r.get_number("m3", s.m3);
    r.get_number("l_s", s.l_s);
    r.get_number("b_s", s.b_s);
    r.get_number("h_s", s.h_s);
    r.get_number("r1", s.r1);
    r.get_number("r2", s.r2);
    r.get_number("l1", s.l1);
    r.get_number("l2", s.l2);
    r.get_number("p_x", s.p_x);
    r.get_number("p_z", s.p_z);
    r.finish();
  }
  if (const json* n = top.child("mission")) {
    Reader r(*n, "mission");
    r.get_number("horizon", c.mission.horizon);
    r.get_number("decision_interval", c.mission.decision_interval);
    r.get_number("dt_sub", c.mission.dt_sub);
    std::string mode = mode_name(c.mission.mode);
    r.get("mode", mode);
    c.mission.mode = parse_mode(mode);
    r.finish();
  }
  if (const json* n = top.child("funnel")) {
    Reader r(*n, "funnel");
    FunnelSpec& f = c.mission.funnel;
    r.get_number("initial_radius", f.boundary.initial_radius);
    r.get_number("final_radius", f.boundary.final_radius);
    r.get_number("decay_rate", f.boundary.decay_rate);
    r.get_number("threshold", f.threshold);
    r.get_number("dwell_time", f.dwell_time);
    if (const json* w = r.child("weights")) {
      if (!w->is_array() || w->size() != 9)
        throw InvalidConfig("funnel.weights: expected 9 numbers");
      for (int i = 0; i < 9; ++i) {
        if (!(*w)[i].is_number()) throw InvalidConfig("funnel.weights: expected 9 numbers");
        f.weights[i] = (*w)[i].get<double>();
      }
    }
    r.finish();
  }
  if (const json* n = top.child("ppo")) {
    Reader r(*n, "ppo");
    PpoConfig& p = c.ppo;
    r.get_number("learning_rate", p.learning_rate);
    r.get_number("discount", p.discount);
    r.get_number("kl_coef", p.kl_coef);
    r.get_int("minibatch_size", p.minibatch_size);
    r.get_int("episodes_per_iteration", p.episodes_per_iteration);
    r.get_int("epochs", p.epochs);
    r.get_number("gae_lambda", p.gae_lambda);
    r.get_number("value_loss_weight", p.value_loss_weight);
    r.get("hidden_sizes", p.hidden_sizes);
    r.get_number("init_std_fraction", p.init_std_fraction);
    r.get_number("adam_beta1", p.adam_beta1);
    r.get_number("adam_beta2", p.adam_beta2);
    r.get_number("adam_epsilon", p.adam_epsilon);
    r.get_int("max_lr_halvings", p.max_lr_halvings);
    r.finish();
  }
  if (const json* n = top.child("seed")) {
    if (!n->is_number_unsigned() && !(n->is_number_integer() && n->get<long long>() >= 0))
      throw InvalidConfig("seed: expected a non-negative integer");
    c.seed = n->get<std::uint64_t>();
  }
  top.get_int("iterations", c.iterations);
  top.get_int("eval_episodes", c.eval_episodes);
  top.get_int("eval_interval", c.eval_interval);
  top.get_int("workers", c.workers);
  top.get("output_dir", c.output_dir);
  top.finish();
  return c;
}

}  // namespace

void RunConfig::validate() const {
  satellite.validate();
  mission.validate();
  ppo.validate();
  if (iterations < 0) throw InvalidConfig("iterations: must be >= 0");
  if (eval_episodes < 0) throw InvalidConfig("eval_episodes: must be >= 0");
  if (eval_interval < 1) throw InvalidConfig("eval_interval: must be >= 1");
  if (workers < 0) throw InvalidConfig("workers: must be >= 0");
  if (output_dir.empty()) throw InvalidConfig("output_dir: must not be empty");
}

int RunConfig::resolved_workers() const {
  if (workers > 0) return workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

bool RunConfig::evaluates_at(int iteration) const {
  if (iteration == 0 || iteration == iterations) return true;
  return iteration >= 1 && (iteration - 1) % eval_interval == 0;
}

std::string to_json(const RunConfig& config, int indent) {
  return to_tree(config).dump(indent);
}

RunConfig config_from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidConfig(std::string("config: parse error: ") + e.what());
  }
  RunConfig c = from_tree(root);
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_json(buf.str());
}

void save_config(const std::string& path, const RunConfig& config) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << to_json(config) << '\n';
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::string config_hash(const RunConfig& config) {
  json j = to_tree(config);
  j.erase("output_dir");
  j.erase("workers");
  const std::string text = j.dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string provenance_line(const RunConfig& config) {
  return "# config_hash=" + config_hash(config) +
         " seed=" + std::to_string(config.seed);
}

}  // namespace satdock
