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

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <numbers>
#include <vector>

#include "swingup/env.hpp"
#include "swingup/rng.hpp"

using namespace swingup;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

SwingEnv make_env(EnvConfig cfg = {}) {
  return SwingEnv(default_model_params(), default_gains(), cfg);
}

Eigen::VectorXd act(double a1, double a2) {
  Eigen::VectorXd a(2);
  a << a1, a2;
  return a;
}

Eigen::VectorXd act(double a1) {
  Eigen::VectorXd a(1);
  a << a1;
  return a;
}

}  // namespace

TEST_CASE("reset with zero noise lands on the exact rest observation",
          "[env]") {
  EnvConfig cfg;
  cfg.reset_std = 0.0;
  SwingEnv env = make_env(cfg);
  const Observation obs = env.reset(123);
  Observation expected;
  expected << 0, 1, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0;
  REQUIRE((obs - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("reset is deterministic in the seed", "[env]") {
  SwingEnv env = make_env();
  const Observation a = env.reset(99);
  const Observation b = env.reset(99);
  REQUIRE((a - b).cwiseAbs().maxCoeff() == 0.0);
  const Observation c = env.reset(100);
  REQUIRE((a - c).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("reset noise statistics match the configured scale", "[env]") {
  SwingEnv env = make_env();
  const int n = 10000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    env.reset(derive_seed(7, i));
    sum += env.state().alpha;
    sum_sq += env.state().alpha * env.state().alpha;
  }
  const double mean = sum / n;
  const double std = std::sqrt(sum_sq / n - mean * mean);
  REQUIRE(std::abs(mean) < 3.0 * 0.02 / std::sqrt(static_cast<double>(n)));
  REQUIRE_THAT(std, WithinRel(0.02, 0.05));
}

TEST_CASE("apply_action accumulates and clamps the reference", "[env]") {
  EnvConfig cfg;
  cfg.action_scale = 0.05;
  ModelParams params = default_model_params();

  TaskReference ref;
  const TaskReference same = apply_action(ref, act(0.0, 0.0), cfg, params);
  REQUIRE(same.alpha_ref == 0.0);
  REQUIRE(same.beta_ref == 0.0);
  REQUIRE(same.alpha_dot_ref == 0.0);
  REQUIRE(same.beta_dot_ref == 0.0);

  TaskReference acc;
  for (int i = 0; i < 10; ++i) acc = apply_action(acc, act(1.0, 0.0), cfg, params);
  REQUIRE_THAT(acc.alpha_ref, WithinRel(0.5, 1e-12));

  const TaskReference clamped = apply_action(ref, act(5.0, -5.0), cfg, params);
  const TaskReference unit = apply_action(ref, act(1.0, -1.0), cfg, params);
  REQUIRE(clamped.alpha_ref == unit.alpha_ref);
  REQUIRE(clamped.beta_ref == unit.beta_ref);
  REQUIRE(clamped.alpha_dot_ref == unit.alpha_dot_ref);

  // reference rates follow the per-policy-step increment
  const double policy_dt = cfg.inner_steps * params.dt;
  REQUIRE_THAT(unit.alpha_dot_ref, WithinRel(cfg.action_scale / policy_dt, 1e-12));

  // alpha_ref saturates at pi, beta_ref at 0.9 beta_limit
  TaskReference walk;
  for (int i = 0; i < 200; ++i) walk = apply_action(walk, act(1.0, 1.0), cfg, params);
  REQUIRE_THAT(walk.alpha_ref, WithinRel(std::numbers::pi, 1e-12));
  REQUIRE_THAT(walk.beta_ref, WithinRel(0.9 * params.beta_limit, 1e-12));
}

TEST_CASE("reward equals the bonus exactly at the target", "[env]") {
  EnvConfig cfg;
  ModelParams params = default_model_params();
  SimState s;
  s.alpha = cfg.target_alpha;
  const double r = swing_reward(cfg, params, s, Eigen::VectorXd::Zero(2));
  REQUIRE_THAT(r, WithinAbs(cfg.success_bonus, 1e-12));
}

TEST_CASE("reward at rest matches the hand-computed value", "[env]") {
  EnvConfig cfg;
  ModelParams params = default_model_params();
  const double r =
      swing_reward(cfg, params, SimState{}, Eigen::VectorXd::Zero(2));
  REQUIRE_THAT(r, WithinAbs(-6.26, 1e-12));
}

TEST_CASE("reward is sign-symmetric when the target is zero", "[env]") {
  EnvConfig cfg;
  cfg.target_alpha = 0.0;
  ModelParams params = default_model_params();
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    SimState s;
    s.alpha = 1.2 * rng.normal();
    s.beta = 0.5 * rng.normal();
    s.alpha_dot = rng.normal();
    s.beta_dot = rng.normal();
    s.omega = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
    Eigen::VectorXd a(2);
    a << rng.normal(), rng.normal();
    SimState flipped = s;
    flipped.alpha = -s.alpha;
    flipped.beta = -s.beta;
    flipped.alpha_dot = -s.alpha_dot;
    flipped.beta_dot = -s.beta_dot;
    REQUIRE_THAT(swing_reward(cfg, params, s, a),
                 WithinAbs(swing_reward(cfg, params, flipped, -a), 1e-12));
  }
}

TEST_CASE("reward never exceeds the success bonus", "[env]") {
  EnvConfig cfg;
  ModelParams params = default_model_params();
  Rng rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    SimState s;
    s.alpha = 3.0 * (2.0 * rng.uniform() - 1.0);
    s.beta = 1.3 * (2.0 * rng.uniform() - 1.0);
    s.alpha_dot = 5.0 * rng.normal();
    s.beta_dot = 5.0 * rng.normal();
    s.omega = 2.0 * Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
    Eigen::VectorXd a(2);
    a << 2.0 * rng.normal(), 2.0 * rng.normal();
    REQUIRE(swing_reward(cfg, params, s, a) <= cfg.success_bonus);
  }
}

TEST_CASE("step holds the equilibrium under a zero action", "[env]") {
  EnvConfig cfg;
  cfg.reset_std = 0.0;
  SwingEnv env = make_env(cfg);
  const Observation before = env.reset(1);
  const StepResult res = env.step(act(0.0, 0.0));
  REQUIRE((res.obs - before).norm() < 1e-6);
  REQUIRE_FALSE(res.done);
  REQUIRE(res.info.saturated_fraction == 0.0);
}

TEST_CASE("episodes end within episode_len policy steps", "[env]") {
  EnvConfig cfg;
  cfg.episode_len = 60;
  SwingEnv env = make_env(cfg);
  env.reset(11);
  Rng rng(11);
  int steps = 0;
  while (!env.done()) {
    env.step(act(2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0));
    ++steps;
    REQUIRE(steps <= cfg.episode_len);
  }
  REQUIRE(steps <= cfg.episode_len);
  REQUIRE_THROWS_AS(env.step(act(0.0, 0.0)), std::logic_error);
}

TEST_CASE("time advances by K dt per policy step", "[env]") {
  EnvConfig cfg;
  SwingEnv env = make_env(cfg);
  env.reset(2);
  const ModelParams params = default_model_params();
  for (int i = 1; i <= 20; ++i) {
    env.step(act(0.3, -0.2));
    REQUIRE_THAT(env.state().t,
                 WithinRel(i * cfg.inner_steps * params.dt, 1e-9));
  }
}

TEST_CASE("identical seed and actions give bit-identical trajectories",
          "[env]") {
  auto rollout = [&](std::vector<double>& rewards) {
    SwingEnv env = make_env();
    std::vector<Observation> seen;
    seen.push_back(env.reset(77));
    Rng actions(42);
    for (int i = 0; i < 50 && !env.done(); ++i) {
      const StepResult r =
          env.step(act(2.0 * actions.uniform() - 1.0,
                       2.0 * actions.uniform() - 1.0));
      seen.push_back(r.obs);
      rewards.push_back(r.reward);
    }
    return seen;
  };
  std::vector<double> ra, rb;
  const auto a = rollout(ra);
  const auto b = rollout(rb);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i)
    REQUIRE((a[i] - b[i]).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(ra == rb);
}

TEST_CASE("observations stay bounded and trig-consistent", "[env]") {
  SwingEnv env = make_env();
  env.reset(31);
  Rng rng(9);
  for (int i = 0; i < 100 && !env.done(); ++i) {
    const StepResult r =
        env.step(act(2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0));
    REQUIRE(r.obs.allFinite());
    for (int k : {0, 1, 2, 3}) REQUIRE(std::abs(r.obs[k]) <= 1.0 + 1e-15);
    REQUIRE_THAT(r.obs[0] * r.obs[0] + r.obs[1] * r.obs[1],
                 WithinAbs(1.0, 1e-12));
    REQUIRE_THAT(r.obs[2] * r.obs[2] + r.obs[3] * r.obs[3],
                 WithinAbs(1.0, 1e-12));
  }
}

TEST_CASE("beta excursions beyond the workspace terminate as failure",
          "[env]") {
  ModelParams params = default_model_params();
  params.beta_limit = 0.05;
  EnvConfig cfg;
  SwingEnv env(params, default_gains(), cfg);
  env.reset(4);
  StepResult last;
  int steps = 0;
  while (!env.done() && steps < cfg.episode_len) {
    last = env.step(act(0.0, 1.0));
    ++steps;
  }
  REQUIRE(env.done());
  REQUIRE_FALSE(last.info.success);
  REQUIRE_FALSE(last.truncated);
  REQUIRE(steps < cfg.episode_len);
}

TEST_CASE("planar mode freezes beta and uses a 1-D action", "[env]") {
  EnvConfig cfg;
  cfg.planar = true;
  SwingEnv env = make_env(cfg);
  REQUIRE(env.action_dim() == 1);
  env.reset(8);
  REQUIRE(env.state().beta == 0.0);
  for (int i = 0; i < 40; ++i) {
    env.step(act(i % 2 == 0 ? 1.0 : -1.0));
    REQUIRE(env.state().beta == 0.0);
    REQUIRE(env.state().beta_dot == 0.0);
  }
}

TEST_CASE("bang-bang pumping at the natural frequency raises the energy "
          "envelope", "[env]") {
  EnvConfig cfg;
  cfg.planar = true;
  cfg.reset_std = 0.0;
  ModelParams params = default_model_params();
  SwingEnv env(params, default_gains(), cfg);
  env.reset(0);
  const double w0 = std::sqrt(params.g / params.L);
  const double period = 2.0 * std::numbers::pi / w0;
  const double policy_dt = cfg.inner_steps * params.dt;

  std::vector<double> energy;
  energy.push_back(swing_energy(params, env.state()));
  const int steps = static_cast<int>(10.0 / policy_dt);
  const double drive = 0.25;  // gentle drive so 10 s fit inside one episode
  for (int i = 0; i < steps && !env.done(); ++i) {
    const double phase = std::sin(w0 * env.state().t);
    env.step(act(phase >= 0.0 ? drive : -drive));
    energy.push_back(swing_energy(params, env.state()));
  }

  // per-period maxima strictly increase
  const int per_window = static_cast<int>(period / policy_dt);
  std::vector<double> window_max;
  for (size_t start = 0; start + per_window <= energy.size();
       start += per_window) {
    double m = 0.0;
    for (int k = 0; k < per_window; ++k)
      m = std::max(m, energy[start + k]);
    window_max.push_back(m);
  }
  REQUIRE(window_max.size() >= 3);
  for (size_t i = 1; i < window_max.size(); ++i)
    REQUIRE(window_max[i] > window_max[i - 1]);
  REQUIRE(window_max.back() > 1.5 * window_max.front());
}

TEST_CASE("env config validation", "[env]") {
  EnvConfig cfg;
  REQUIRE_NOTHROW(cfg.validate());
  cfg.angle_tol = 0.0;
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = EnvConfig{};
  cfg.target_alpha = 3.5;
  REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = EnvConfig{};
  cfg.w_energy = 0.0;  // disabling the energy term is allowed
  REQUIRE_NOTHROW(cfg.validate());
}
