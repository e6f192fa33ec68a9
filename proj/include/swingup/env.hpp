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

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>

#include "swingup/control.hpp"
#include "swingup/model.hpp"
#include "swingup/rng.hpp"

namespace swingup {

inline constexpr int kObsDim = 13;

/// Swing-up task definition: target amplitude, success window, reward
/// weights, and the policy/physics rate ratio.
struct EnvConfig {
  double target_alpha = 2.4;   // rad
  double angle_tol = 0.15;     // rad
  double rate_tol = 0.3;       // rad/s
  int episode_len = 400;       // policy steps
  // Reference increment per policy step. The default slews the reference at
  // up to 4 rad/s, matching the swing rate at the target energy; slower
  // references cannot out-pace the outer-loop damping and cap the pumpable
  // energy well below the swing-up target.
  double action_scale = 0.2;   // rad per policy step
  double w_angle = 1.0;
  double w_rate = 0.1;
  double w_action = 0.01;
  double w_energy = 0.5;
  double success_bonus = 10.0;
  double reset_std = 0.02;     // rad
  int inner_steps = 25;        // physics steps per policy step
  bool planar = false;         // freeze beta, 1-D action

  void validate() const {
    if (!(angle_tol > 0 && rate_tol > 0))
      throw std::invalid_argument("env: tolerances must be > 0");
    if (!(action_scale > 0))
      throw std::invalid_argument("env: action_scale must be > 0");
    if (!(reset_std >= 0))
      throw std::invalid_argument("env: reset_std must be >= 0");
    if (w_angle < 0 || w_rate < 0 || w_action < 0 || w_energy < 0 ||
        success_bonus < 0)
      throw std::invalid_argument("env: reward weights must be >= 0");
    if (episode_len <= 0 || inner_steps <= 0)
      throw std::invalid_argument("env: episode_len and inner_steps > 0");
    if (!(std::abs(target_alpha) < std::numbers::pi))
      throw std::invalid_argument("env: |target_alpha| must be < pi");
  }
};

using Observation = Eigen::Matrix<double, kObsDim, 1>;

struct StepInfo {
  bool success = false;
  double energy = 0.0;
  double saturated_fraction = 0.0;
};

struct StepResult {
  Observation obs = Observation::Zero();
  double reward = 0.0;
  bool done = false;
  bool truncated = false;
  StepInfo info;
};

/// Incremental reference update: the clamped action nudges the swing
/// setpoints by at most action_scale per policy step and sets matching
/// reference rates. The heading reference stays at zero.
inline TaskReference apply_action(const TaskReference& ref,
                                  const Eigen::VectorXd& action,
                                  const EnvConfig& cfg,
                                  const ModelParams& params) {
  const auto clamp1 = [](double x) { return std::clamp(x, -1.0, 1.0); };
  const double a1 = action.size() > 0 ? clamp1(action[0]) : 0.0;
  const double a2 =
      (!cfg.planar && action.size() > 1) ? clamp1(action[1]) : 0.0;
  const double policy_dt = cfg.inner_steps * params.dt;

  TaskReference out = ref;
  out.alpha_ref = std::clamp(ref.alpha_ref + a1 * cfg.action_scale,
                             -std::numbers::pi, std::numbers::pi);
  out.beta_ref =
      cfg.planar ? 0.0
                 : std::clamp(ref.beta_ref + a2 * cfg.action_scale,
                              -0.9 * params.beta_limit,
                              0.9 * params.beta_limit);
  out.alpha_dot_ref = a1 * cfg.action_scale / policy_dt;
  out.beta_dot_ref = cfg.planar ? 0.0 : a2 * cfg.action_scale / policy_dt;
  out.yaw_ref = 0.0;
  return out;
}

/// True when the state sits inside the success window around the target.
inline bool success_condition(const EnvConfig& cfg, const SimState& state) {
  return std::abs(state.alpha - cfg.target_alpha) < cfg.angle_tol &&
         std::abs(state.alpha_dot) < cfg.rate_tol &&
         std::abs(state.beta_dot) < cfg.rate_tol;
}

/// Shaped swing-up reward: quadratic pull toward the target amplitude and
/// the matching energy level, small rate/action penalties, and a bonus
/// inside the success window.
inline double swing_reward(const EnvConfig& cfg, const ModelParams& params,
                           const SimState& state,
                           const Eigen::VectorXd& action) {
  const double e_angle = state.alpha - cfg.target_alpha;
  double r = -cfg.w_angle * e_angle * e_angle;
  r -= cfg.w_rate *
       (state.alpha_dot * state.alpha_dot + state.beta_dot * state.beta_dot) *
       (params.L / params.g);
  double action_sq = 0.0;
  for (int i = 0; i < action.size(); ++i) {
    const double a = std::clamp(action[i], -1.0, 1.0);
    action_sq += a * a;
  }
  r -= cfg.w_action * action_sq;
  const double e_star =
      params.m * params.g * params.L * (1.0 - std::cos(cfg.target_alpha));
  const double e_rel = (total_energy(params, state) - e_star) / e_star;
  r -= cfg.w_energy * e_rel * e_rel;
  if (success_condition(cfg, state)) r += cfg.success_bonus;
  return r;
}

/// Episode-level environment: reset noise, K inner controller+integrator
/// iterations per policy step, termination, and reward.
///
/// Each instance is independently owned; run as many in parallel as needed.
class SwingEnv {
 public:
  /// Everything an external logger needs about one inner physics step.
  struct Trace {
    const SimState& state;
    const TaskReference& ref;
    const AllocationReport& report;
    double reward;
  };
  using TraceFn = std::function<void(const Trace&)>;

  SwingEnv(const ModelParams& params, const Gains& gains,
           const EnvConfig& cfg)
      : params_(params), cfg_(cfg), ctrl_(params, gains) {
    params_.validate();
    cfg_.validate();
  }

  int action_dim() const { return cfg_.planar ? 1 : 2; }
  const EnvConfig& config() const { return cfg_; }
  const ModelParams& params() const { return params_; }
  const SimState& state() const { return state_; }
  const TaskReference& reference() const { return ref_; }
  int steps_done() const { return steps_; }
  bool done() const { return done_; }
  void set_trace(TraceFn fn) { trace_ = std::move(fn); }

  Observation reset(std::uint64_t seed) {
    Rng rng(seed);
    state_ = SimState{};
    state_.alpha = cfg_.reset_std * rng.normal();
    state_.beta = cfg_.planar ? 0.0 : cfg_.reset_std * rng.normal();
    ref_ = TaskReference{};
    ref_.alpha_ref = state_.alpha;
    ref_.beta_ref = state_.beta;
    last_action_ = Eigen::VectorXd::Zero(action_dim());
    steps_ = 0;
    done_ = false;
    return observe();
  }

  StepResult step(const Eigen::VectorXd& action) {
    if (done_)
      throw std::logic_error("env: step() called on a finished episode");
    ref_ = apply_action(ref_, action, cfg_, params_);
    for (int i = 0; i < last_action_.size(); ++i)
      last_action_[i] =
          action.size() > i ? std::clamp(action[i], -1.0, 1.0) : 0.0;

    bool failure = false;
    bool window_held = true;
    int saturated = 0;
    for (int k = 0; k < cfg_.inner_steps; ++k) {
      auto [cmd, report] = ctrl_.step(state_, ref_);
      SimState next;
      try {
        next = step_rk4(params_, state_, cmd.u);
      } catch (const std::runtime_error&) {
        failure = true;  // non-finite state; keep the last valid one
        break;
      }
      if (cfg_.planar) {
        next.beta = 0.0;
        next.beta_dot = 0.0;
      }
      state_ = next;
      if (report.saturated) ++saturated;
      window_held = window_held && success_condition(cfg_, state_);
      if (trace_) {
        const double r = swing_reward(cfg_, params_, state_, last_action_);
        trace_(Trace{state_, ref_, report, r});
      }
      if (std::abs(state_.beta) >= params_.beta_limit) {
        failure = true;
        break;
      }
    }

    ++steps_;
    StepResult result;
    // success only counts when the window held through the whole policy
    // step, which rules out flythroughs
    result.info.success = !failure && window_held;
    result.truncated =
        !failure && !result.info.success && steps_ >= cfg_.episode_len;
    done_ = failure || result.info.success || result.truncated;
    result.done = done_;
    result.reward = swing_reward(cfg_, params_, state_, last_action_);
    result.info.energy = total_energy(params_, state_);
    result.info.saturated_fraction =
        static_cast<double>(saturated) / cfg_.inner_steps;
    result.obs = observe();
    return result;
  }

  Observation observe() const {
    const double w0 = std::sqrt(params_.g / params_.L);
    const Eigen::Quaterniond q_e = attitude_error(state_.q_WB, ref_.yaw_ref);
    Observation obs;
    obs << std::sin(state_.alpha), std::cos(state_.alpha),
        std::sin(state_.beta), std::cos(state_.beta), state_.alpha_dot / w0,
        state_.beta_dot / w0, q_e.x(), q_e.y(), q_e.z(),
        state_.omega.x() / w0, state_.omega.y() / w0, state_.omega.z() / w0,
        last_action_.size() > 0 ? last_action_[0] : 0.0;
    return obs;
  }

 private:
  ModelParams params_;
  EnvConfig cfg_;
  Controller ctrl_;
  SimState state_;
  TaskReference ref_;
  Eigen::VectorXd last_action_ = Eigen::VectorXd::Zero(2);
  int steps_ = 0;
  bool done_ = true;  // must reset first
  TraceFn trace_;
};

}  // namespace swingup
