// Copyright 2026 The swingup Authors
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

#pragma once

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <string>

#include "swingup/control.hpp"
#include "swingup/env.hpp"
#include "swingup/learn.hpp"
#include "swingup/model.hpp"

namespace swingup {

/// Configuration rejected; the message carries the offending key path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

/// Strict object view: every key must be consumed, unknown keys abort with
/// their full path.
class StrictView {
 public:
  StrictView(const nlohmann::json& j, std::string path)
      : j_(j), path_(std::move(path)) {
    if (!j_.is_object())
      throw ConfigError("config: " + path_ + " must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <typename T>
  T get(const std::string& key, const T& fallback) {
    used_.insert(key);
    if (!j_.contains(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("config: bad value type at " + path_ + "." + key);
    }
  }

  const nlohmann::json* child(const std::string& key) {
    used_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key()))
        throw ConfigError("config: unknown key " + path_ + "." + it.key());
    }
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> used_;
};

inline Eigen::Vector3d vec3(const nlohmann::json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3)
    throw ConfigError("config: " + path + " must be a 3-array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace detail

struct RunConfig {
  ModelParams model = default_model_params();
  Gains gains;
  EnvConfig env;
  TrainConfig train;
  std::string output_dir = "out";
  std::uint64_t seed = 0;
};

inline ModelParams parse_model(const nlohmann::json& j) {
  detail::StrictView v(j, "model");
  ModelParams p = default_model_params();
  p.g = v.get("g", p.g);
  p.L = v.get("L", p.L);
  p.m = v.get("m", p.m);
  p.dt = v.get("dt", p.dt);
  p.beta_limit = v.get("beta_limit", p.beta_limit);
  if (const nlohmann::json* jj = v.child("J")) {
    if (jj->is_array() && jj->size() == 3 && (*jj)[0].is_number()) {
      p.J = detail::vec3(*jj, "model.J").asDiagonal();
    } else if (jj->is_array() && jj->size() == 3) {
      for (int r = 0; r < 3; ++r)
        p.J.row(r) = detail::vec3((*jj)[r], "model.J").transpose();
    } else {
      throw ConfigError("config: model.J must be a 3-array or 3x3 array");
    }
  }
  if (const nlohmann::json* jr = v.child("rotors")) {
    if (jr->is_string()) {
      if (jr->get<std::string>() != "default")
        throw ConfigError("config: model.rotors string must be \"default\"");
    } else if (jr->is_array()) {
      p.rotors.clear();
      int idx = 0;
      for (const nlohmann::json& e : *jr) {
        const std::string path = "model.rotors[" + std::to_string(idx) + "]";
        detail::StrictView rv(e, path);
        Rotor r;
        if (const nlohmann::json* pos = rv.child("pos"))
          r.pos = detail::vec3(*pos, path + ".pos");
        if (const nlohmann::json* axis = rv.child("axis"))
          r.axis = detail::vec3(*axis, path + ".axis");
        r.kappa = rv.get("kappa", r.kappa);
        r.spin = rv.get("spin", r.spin);
        r.u_max = rv.get("u_max", r.u_max);
        rv.finish();
        p.rotors.push_back(r);
        ++idx;
      }
    } else {
      throw ConfigError("config: model.rotors must be \"default\" or a list");
    }
  }
  v.finish();
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return p;
}

inline Gains parse_gains(const nlohmann::json& j) {
  detail::StrictView v(j, "gains");
  Gains g;
  g.kp_sw = v.get("kp_sw", g.kp_sw);
  g.kd_sw = v.get("kd_sw", g.kd_sw);
  g.kp_att = v.get("kp_att", g.kp_att);
  g.kd_att = v.get("kd_att", g.kd_att);
  v.finish();
  try {
    g.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return g;
}

inline EnvConfig parse_env(const nlohmann::json& j) {
  detail::StrictView v(j, "env");
  EnvConfig c;
  c.target_alpha = v.get("target_alpha", c.target_alpha);
  c.angle_tol = v.get("angle_tol", c.angle_tol);
  c.rate_tol = v.get("rate_tol", c.rate_tol);
  c.episode_len = v.get("episode_len", c.episode_len);
  c.action_scale = v.get("action_scale", c.action_scale);
  c.w_angle = v.get("w_angle", c.w_angle);
  c.w_rate = v.get("w_rate", c.w_rate);
  c.w_action = v.get("w_action", c.w_action);
  c.w_energy = v.get("w_energy", c.w_energy);
  c.success_bonus = v.get("success_bonus", c.success_bonus);
  c.reset_std = v.get("reset_std", c.reset_std);
  c.inner_steps = v.get("inner_steps", c.inner_steps);
  c.planar = v.get("planar", c.planar);
  v.finish();
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

inline TrainConfig parse_train(const nlohmann::json& j) {
  detail::StrictView v(j, "train");
  TrainConfig c;
  c.gamma = v.get("gamma", c.gamma);
  c.lambda = v.get("lambda", c.lambda);
  c.clip_eps = v.get("clip_eps", c.clip_eps);
  c.epochs = v.get("epochs", c.epochs);
  c.minibatches = v.get("minibatches", c.minibatches);
  c.learning_rate = v.get("learning_rate", c.learning_rate);
  c.entropy_coef = v.get("entropy_coef", c.entropy_coef);
  c.value_coef = v.get("value_coef", c.value_coef);
  c.steps_per_update = v.get("steps_per_update", c.steps_per_update);
  c.num_envs = v.get("num_envs", c.num_envs);
  c.total_steps = v.get("total_steps", c.total_steps);
  c.max_grad_norm = v.get("max_grad_norm", c.max_grad_norm);
  c.checkpoint_every_updates =
      v.get("checkpoint_every_updates", c.checkpoint_every_updates);
  c.hidden = v.get("hidden", c.hidden);
  v.finish();
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

/// Parses and validates the whole run configuration. Unknown keys at any
/// level abort with the key's path; missing sections fall back to defaults.
inline RunConfig parse_run_config(const nlohmann::json& j) {
  detail::StrictView v(j, "<root>");
  RunConfig cfg;
  if (const nlohmann::json* m = v.child("model")) cfg.model = parse_model(*m);
  if (const nlohmann::json* g = v.child("gains")) cfg.gains = parse_gains(*g);
  if (const nlohmann::json* e = v.child("env")) cfg.env = parse_env(*e);
  if (const nlohmann::json* t = v.child("train")) cfg.train = parse_train(*t);
  cfg.output_dir = v.get("output_dir", cfg.output_dir);
  cfg.seed = v.get("seed", cfg.seed);
  v.finish();
  cfg.train.seed = cfg.seed;  // one seed drives everything
  return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: parse error in " + path.string() + ": " +
                      e.what());
  }
  return parse_run_config(j);
}

/// The fully-resolved configuration (defaults applied), echoed to
/// output_dir/config.resolved.json by every command.
inline nlohmann::ordered_json resolved_config_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json model;
  model["g"] = cfg.model.g;
  model["L"] = cfg.model.L;
  model["m"] = cfg.model.m;
  model["J"] = {{cfg.model.J(0, 0), cfg.model.J(0, 1), cfg.model.J(0, 2)},
                {cfg.model.J(1, 0), cfg.model.J(1, 1), cfg.model.J(1, 2)},
                {cfg.model.J(2, 0), cfg.model.J(2, 1), cfg.model.J(2, 2)}};
  nlohmann::ordered_json rotors = nlohmann::ordered_json::array();
  for (const Rotor& r : cfg.model.rotors) {
    nlohmann::ordered_json e;
    e["pos"] = {r.pos.x(), r.pos.y(), r.pos.z()};
    e["axis"] = {r.axis.x(), r.axis.y(), r.axis.z()};
    e["kappa"] = r.kappa;
    e["spin"] = r.spin;
    e["u_max"] = r.u_max;
    rotors.push_back(e);
  }
  model["rotors"] = rotors;
  model["dt"] = cfg.model.dt;
  model["beta_limit"] = cfg.model.beta_limit;
  j["model"] = model;

  nlohmann::ordered_json gains;
  gains["kp_sw"] = cfg.gains.kp_sw;
  gains["kd_sw"] = cfg.gains.kd_sw;
  gains["kp_att"] = cfg.gains.kp_att;
  gains["kd_att"] = cfg.gains.kd_att;
  j["gains"] = gains;

  nlohmann::ordered_json env;
  env["target_alpha"] = cfg.env.target_alpha;
  env["angle_tol"] = cfg.env.angle_tol;
  env["rate_tol"] = cfg.env.rate_tol;
  env["episode_len"] = cfg.env.episode_len;
  env["action_scale"] = cfg.env.action_scale;
  env["w_angle"] = cfg.env.w_angle;
  env["w_rate"] = cfg.env.w_rate;
  env["w_action"] = cfg.env.w_action;
  env["w_energy"] = cfg.env.w_energy;
  env["success_bonus"] = cfg.env.success_bonus;
  env["reset_std"] = cfg.env.reset_std;
  env["inner_steps"] = cfg.env.inner_steps;
  env["planar"] = cfg.env.planar;
  j["env"] = env;

  nlohmann::ordered_json train;
  train["gamma"] = cfg.train.gamma;
  train["lambda"] = cfg.train.lambda;
  train["clip_eps"] = cfg.train.clip_eps;
  train["epochs"] = cfg.train.epochs;
  train["minibatches"] = cfg.train.minibatches;
  train["learning_rate"] = cfg.train.learning_rate;
  train["entropy_coef"] = cfg.train.entropy_coef;
  train["value_coef"] = cfg.train.value_coef;
  train["steps_per_update"] = cfg.train.steps_per_update;
  train["num_envs"] = cfg.train.num_envs;
  train["total_steps"] = cfg.train.total_steps;
  train["max_grad_norm"] = cfg.train.max_grad_norm;
  train["checkpoint_every_updates"] = cfg.train.checkpoint_every_updates;
  train["hidden"] = cfg.train.hidden;
  j["train"] = train;

  j["output_dir"] = cfg.output_dir;
  j["seed"] = cfg.seed;
  return j;
}

}  // namespace swingup
