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

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "swingup/config.hpp"
#include "swingup/control.hpp"
#include "swingup/env.hpp"
#include "swingup/io.hpp"
#include "swingup/learn.hpp"
#include "swingup/model.hpp"
#include "swingup/oracle.hpp"
#include "swingup/policy.hpp"

namespace fs = std::filesystem;
using namespace swingup;

namespace {

// exit codes: 0 ok, 1 validation, 2 divergence, 3 check failure
constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitDivergence = 2;
constexpr int kExitCheckFailed = 3;

struct ScriptedReference {
  enum class Kind { Hold, Step, Sine, Pump } kind = Kind::Hold;
  std::vector<double> args;

  TaskReference at(double t, const ModelParams& params) const {
    TaskReference ref;
    switch (kind) {
      case Kind::Hold:
        ref.alpha_ref = args[0];
        break;
      case Kind::Step:
        ref.alpha_ref = t >= args[1] ? args[0] : 0.0;
        break;
      case Kind::Sine:
        ref.alpha_ref = args[0] * std::sin(args[1] * t);
        ref.alpha_dot_ref = args[0] * args[1] * std::cos(args[1] * t);
        break;
      case Kind::Pump: {
        const double w0 = std::sqrt(params.g / params.L);
        ref.alpha_ref = std::sin(w0 * t) >= 0.0 ? args[0] : -args[0];
        break;
      }
    }
    return ref;
  }
};

/// Parses "hold(0.3)", "step(0.5,1.0)", "sine(0.2,0.44)", "pump(0.5)".
ScriptedReference parse_script(const std::string& text) {
  std::string name = text;
  std::vector<double> args;
  const auto open = text.find('(');
  if (open != std::string::npos) {
    if (text.back() != ')')
      throw ConfigError("script: missing closing parenthesis in " + text);
    name = text.substr(0, open);
    std::string body = text.substr(open + 1, text.size() - open - 2);
    size_t pos = 0;
    while (pos < body.size()) {
      size_t comma = body.find(',', pos);
      if (comma == std::string::npos) comma = body.size();
      try {
        args.push_back(std::stod(body.substr(pos, comma - pos)));
      } catch (const std::exception&) {
        throw ConfigError("script: bad numeric argument in " + text);
      }
      pos = comma + 1;
    }
  }
  ScriptedReference s;
  auto need = [&](size_t n) {
    if (args.size() != n)
      throw ConfigError("script: " + name + " takes " + std::to_string(n) +
                        " argument(s)");
  };
  if (name == "hold") {
    s.kind = ScriptedReference::Kind::Hold;
    need(1);
  } else if (name == "step") {
    s.kind = ScriptedReference::Kind::Step;
    if (args.size() == 1) args.push_back(0.0);  // step at t = 0
    need(2);
  } else if (name == "sine") {
    s.kind = ScriptedReference::Kind::Sine;
    need(2);
  } else if (name == "pump") {
    s.kind = ScriptedReference::Kind::Pump;
    if (args.empty()) args.push_back(0.5);
    need(1);
  } else {
    throw ConfigError("script: unknown reference script \"" + name +
                      "\" (expected hold/step/sine/pump)");
  }
  s.args = args;
  return s;
}

void echo_resolved_config(const RunConfig& cfg) {
  fs::create_directories(cfg.output_dir);
  atomic_write_json(fs::path(cfg.output_dir) / "config.resolved.json",
                    resolved_config_json(cfg));
}

int cmd_sim(const RunConfig& cfg, const std::string& script_text,
            double duration) {
  if (!(duration > 0.0)) throw ConfigError("sim: duration must be > 0");
  const ScriptedReference script = parse_script(script_text);
  echo_resolved_config(cfg);

  const ModelParams& params = cfg.model;
  Controller ctrl(params, cfg.gains);
  SimState state;
  TrajectoryWriter writer(params.num_rotors());
  const Eigen::VectorXd no_action;
  const int steps = static_cast<int>(std::llround(duration / params.dt));
  for (int i = 0; i < steps; ++i) {
    const TaskReference ref = script.at(state.t, params);
    auto [cmd, report] = ctrl.step(state, ref);
    state = step_rk4(params, state, cmd.u);
    TrajectoryRow row;
    row.state = state;
    row.ref = ref;
    row.u = cmd.u;
    row.achieved = report.achieved;
    row.reward = swing_reward(cfg.env, params, state, no_action);
    row.saturated = report.saturated;
    writer.add(row);
  }
  writer.write(fs::path(cfg.output_dir) / "trajectory.csv");
  std::fprintf(stderr, "sim: wrote %zu rows to %s/trajectory.csv\n",
               writer.size(), cfg.output_dir.c_str());
  return kExitOk;
}

class ConsoleProgressSink : public MetricsSink {
 public:
  void emit(const MetricsRecord& r) override {
    std::fprintf(stderr,
                 "update step=%lld return=%.2f success=%.2f pi=%.4f vf=%.2f "
                 "ev=%.2f wall=%.2fs\n",
                 r.step, r.mean_return, r.success_rate, r.policy_loss,
                 r.value_loss, r.explained_var, r.wall_s);
  }
};

class TeeSink : public MetricsSink {
 public:
  TeeSink(MetricsSink* a, MetricsSink* b) : a_(a), b_(b) {}
  void emit(const MetricsRecord& r) override {
    a_->emit(r);
    b_->emit(r);
  }

 private:
  MetricsSink* a_;
  MetricsSink* b_;
};

int cmd_train(RunConfig cfg, long long total_steps_override,
              const std::string& resume_path) {
  if (total_steps_override > 0) cfg.train.total_steps = total_steps_override;
  echo_resolved_config(cfg);
  const fs::path out_dir(cfg.output_dir);

  std::optional<TrainState> resume;
  if (!resume_path.empty()) {
    std::ifstream in(resume_path);
    if (!in) throw ConfigError("train: cannot open checkpoint " + resume_path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("train: corrupt checkpoint: ") + e.what());
    }
    resume = checkpoint_from_json(j);
  }

  JsonlMetricsSink file_sink(out_dir / "metrics.jsonl",
                             /*append=*/resume.has_value());
  ConsoleProgressSink console;
  TeeSink sink(&file_sink, &console);

  const nlohmann::ordered_json resolved = resolved_config_json(cfg);
  const auto save_checkpoint = [&](const TrainState& st,
                                   const std::string& name) {
    atomic_write_json(out_dir / name, checkpoint_to_json(st, resolved));
  };

  const TrainState final_state =
      train(cfg.model, cfg.gains, cfg.env, cfg.train, &sink,
            [&](const TrainState& st) {
              save_checkpoint(st, "policy_step_" +
                                      std::to_string(st.env_steps) + ".json");
            },
            resume ? &*resume : nullptr);
  save_checkpoint(final_state, "policy_final.json");
  std::fprintf(stderr, "train: finished at step %lld (%lld updates)\n",
               final_state.env_steps, final_state.updates);
  return kExitOk;
}

int cmd_eval(const RunConfig& cfg, const std::string& checkpoint_path,
             int episodes, bool dump_trajectories) {
  if (episodes < 0) throw ConfigError("eval: episodes must be >= 0");
  std::ifstream in(checkpoint_path);
  if (!in) throw ConfigError("eval: cannot open checkpoint " + checkpoint_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("eval: corrupt checkpoint: ") + e.what());
  }
  const TrainState st = checkpoint_from_json(j);
  echo_resolved_config(cfg);
  const fs::path out_dir(cfg.output_dir);

  {
    SwingEnv env(cfg.model, cfg.gains, cfg.env);
    if (st.policy.act_dim() != env.action_dim())
      throw ConfigError(
          "eval: checkpoint action dimension does not match env.planar");
    if (st.policy.obs_dim() != kObsDim)
      throw ConfigError("eval: checkpoint observation dimension mismatch");
  }

  EvalHooks hooks;
  TrajectoryWriter writer(cfg.model.num_rotors());
  if (dump_trajectories) {
    hooks.begin_episode = [&](int) { writer.clear(); };
    hooks.trace = [&](const SwingEnv::Trace& t) {
      TrajectoryRow row;
      row.state = t.state;
      row.ref = t.ref;
      row.u = t.report.command.u;
      row.achieved = t.report.achieved;
      row.reward = t.reward;
      row.saturated = t.report.saturated;
      writer.add(row);
    };
    hooks.end_episode = [&](int ep) {
      char name[64];
      std::snprintf(name, sizeof(name), "episode_%03d.csv", ep);
      writer.write(out_dir / name);
    };
  }

  const EvalStats stats = evaluate(st.policy, cfg.model, cfg.gains, cfg.env,
                                   episodes, cfg.seed, hooks);
  nlohmann::ordered_json out;
  out["episodes"] = stats.episodes;
  if (stats.episodes == 0) {
    out["empty"] = true;
  } else {
    out["success_rate"] = stats.success_rate;
    out["mean_return"] = stats.mean_return;
    out["std_return"] = stats.std_return;
    out["mean_time_to_target"] = stats.mean_time_to_target;
    out["mean_saturated_fraction"] = stats.mean_saturated_fraction;
  }
  atomic_write_json(out_dir / "eval.json", out);
  std::fprintf(stderr, "eval: %lld episodes, success rate %.2f\n",
               stats.episodes, stats.success_rate);
  return kExitOk;
}

struct CheckResult {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
};

CheckResult check_energy(const RunConfig& cfg) {
  const ModelParams& p = cfg.model;
  SimState s;
  s.alpha = 1.0;
  s.beta = 0.3;
  s.beta_dot = 0.2;
  s.omega = Eigen::Vector3d(0.1, -0.2, 0.3);
  const Eigen::VectorXd u = Eigen::VectorXd::Zero(p.num_rotors());
  std::vector<SimState> traj{s};
  const int steps = static_cast<int>(std::llround(10.0 / p.dt));
  for (int i = 0; i < steps; ++i) {
    s = step_rk4(p, s, u);
    traj.push_back(s);
  }
  const double drift = oracle::energy_audit(p, traj);
  return {"energy", drift < 1e-6, drift, 1e-6};
}

// quarter period from release at the given amplitude, times four
double measured_period(const ModelParams& p, double amplitude) {
  SimState s;
  s.alpha = amplitude;
  const Eigen::VectorXd u = Eigen::VectorXd::Zero(p.num_rotors());
  double prev_alpha = s.alpha;
  const int max_steps = static_cast<int>(std::llround(30.0 / p.dt));
  for (int i = 0; i < max_steps; ++i) {
    const SimState next = step_rk4(p, s, u);
    if (prev_alpha > 0.0 && next.alpha <= 0.0) {
      const double crossing =
          s.t + p.dt * prev_alpha / (prev_alpha - next.alpha);
      return 4.0 * crossing;
    }
    prev_alpha = next.alpha;
    s = next;
  }
  return -1.0;
}

CheckResult check_period_small(const RunConfig& cfg) {
  const ModelParams& p = cfg.model;
  const double t_measured = measured_period(p, 0.01);
  const double t0 = 2.0 * std::numbers::pi * std::sqrt(p.L / p.g);
  const double rel = std::abs(t_measured - t0) / t0;
  return {"period_small", t_measured > 0.0 && rel < 1e-3, rel, 1e-3};
}

CheckResult check_period_large(const RunConfig& cfg) {
  const ModelParams& p = cfg.model;
  const double t_measured = measured_period(p, 2.0);
  const double t_oracle = oracle::planar_period(p.g, p.L, 2.0);
  const double rel = std::abs(t_measured - t_oracle) / t_oracle;
  return {"period_large", t_measured > 0.0 && rel < 5e-3, rel, 5e-3};
}

CheckResult check_allocation(const RunConfig& cfg) {
  Allocator alloc(cfg.model);
  const AllocationReport zero =
      alloc.allocate(Eigen::Quaterniond::Identity(), Wrench{});
  if (zero.command.u.norm() != 0.0)
    return {"allocation", false, zero.command.u.norm(), 0.0};
  Rng rng(derive_seed(cfg.seed, 0xa110c));
  double worst = 0.0;
  int certified = 0;
  int draws = 0;
  while (certified < 1000 && draws < 200000) {
    ++draws;
    Wrench w;
    w.force = Eigen::Vector3d(4.0 * rng.normal(), 4.0 * rng.normal(),
                              4.0 * rng.normal());
    w.torque = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
    const Eigen::VectorXd u = alloc.solve_unclamped(
        alloc.body_wrench(Eigen::Quaterniond::Identity(), w));
    bool in_bounds = true;
    for (int i = 0; i < u.size(); ++i)
      if (u[i] < 0.0 || u[i] > cfg.model.rotors[i].u_max) in_bounds = false;
    if (!in_bounds) continue;
    ++certified;
    w.force *= 0.5;
    w.torque *= 0.5;
    const AllocationReport rep =
        alloc.allocate(Eigen::Quaterniond::Identity(), w);
    worst = std::max(worst, rep.residual);
  }
  return {"allocation", certified == 1000 && worst < 1e-6, worst, 1e-6};
}

CheckResult check_gradient(const RunConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, 0x9ad));
  GaussianPolicy policy = GaussianPolicy::create(kObsDim, 2, {8, 8}, rng);
  Mlp value = Mlp::create({kObsDim, 8, 8, 1}, rng);
  const PpoCoefs coefs{0.2, 0.7, 0.01};
  double worst = 0.0;
  for (int trial = 0; trial < 2; ++trial) {
    const int B = 16;
    PpoBatch batch;
    batch.obs.resize(B, kObsDim);
    batch.raw.resize(B, 2);
    batch.old_logp.resize(B);
    batch.advantage.resize(B);
    batch.ret.resize(B);
    for (int b = 0; b < B; ++b) {
      for (int k = 0; k < kObsDim; ++k) batch.obs(b, k) = rng.normal();
      for (int k = 0; k < 2; ++k) batch.raw(b, k) = rng.normal();
      batch.advantage[b] = rng.normal();
      batch.ret[b] = 3.0 * rng.normal();
    }
    const Eigen::MatrixXd mean = policy_forward(policy, batch.obs);
    for (int b = 0; b < B; ++b)
      batch.old_logp[b] = log_prob_of_raw(policy, mean.row(b).transpose(),
                                          batch.raw.row(b).transpose()) +
                          0.3 * rng.normal();
    normalize_advantages(batch.advantage);

    PolicyGrads pg;
    MlpGrad vg;
    ppo_loss(policy, value, batch, coefs, &pg, &vg);
    const Eigen::VectorXd analytic = pack_grads(policy, value, pg, vg);
    GaussianPolicy p2 = policy;
    Mlp v2 = value;
    const Eigen::VectorXd fd = oracle::finite_diff_gradient(
        [&](const Eigen::VectorXd& x) {
          unpack_params(x, p2, v2);
          return ppo_loss(p2, v2, batch, coefs).total;
        },
        pack_params(policy, value), 1e-5);
    for (const TensorSpan& span : param_layout(policy, value)) {
      const Eigen::VectorXd ga = analytic.segment(span.offset, span.size);
      const Eigen::VectorXd gf = fd.segment(span.offset, span.size);
      const double denom = std::max({ga.norm(), gf.norm(), 1e-10});
      worst = std::max(worst, (ga - gf).norm() / denom);
    }
  }
  return {"gradient", worst < 1e-4, worst, 1e-4};
}

CheckResult check_gae(const RunConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, 0x9ae));
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    RolloutBuffer buf(50, 1, 1, 1);
    for (int i = 0; i < 50; ++i) {
      buf.reward[i] = rng.normal();
      buf.value[i] = rng.normal();
      buf.done[i] = rng.uniform() < 0.1 ? 1 : 0;
    }
    buf.bootstrap[0] = rng.normal();
    auto [adv, ret] = gae(buf, 0.99, 0.95);
    Eigen::VectorXd r(50), v(50);
    Eigen::VectorXi d(50);
    for (int t = 0; t < 50; ++t) {
      r[t] = buf.reward[t];
      v[t] = buf.value[t];
      d[t] = buf.done[t];
    }
    const Eigen::VectorXd expected =
        oracle::brute_force_returns(r, v, d, buf.bootstrap[0], 0.99, 0.95);
    worst = std::max(worst, (adv - expected).cwiseAbs().maxCoeff());
  }
  return {"gae", worst < 1e-10, worst, 1e-10};
}

int cmd_check(const RunConfig& cfg, const std::vector<std::string>& only) {
  echo_resolved_config(cfg);
  using CheckFn = CheckResult (*)(const RunConfig&);
  const std::vector<std::pair<std::string, CheckFn>> all = {
      {"energy", check_energy},
      {"period_small", check_period_small},
      {"period_large", check_period_large},
      {"allocation", check_allocation},
      {"gradient", check_gradient},
      {"gae", check_gae},
  };
  // --only filters by exact name or prefix ("period" runs both period checks)
  const auto enabled = [&](const std::string& name) {
    if (only.empty()) return true;
    for (const std::string& o : only)
      if (name == o || name.rfind(o + "_", 0) == 0) return true;
    return false;
  };
  for (const std::string& o : only) {
    bool known = false;
    for (const auto& [name, fn] : all)
      if (name == o || name.rfind(o + "_", 0) == 0) known = true;
    if (!known) throw ConfigError("check: unknown check \"" + o + "\"");
  }

  nlohmann::ordered_json checks = nlohmann::ordered_json::array();
  bool all_pass = true;
  int ran = 0;
  for (const auto& [name, fn] : all) {
    if (!enabled(name)) continue;
    const CheckResult res = fn(cfg);
    ++ran;
    all_pass = all_pass && res.pass;
    std::printf("[%s] %-13s value=%.3e threshold=%.0e\n",
                res.pass ? "PASS" : "FAIL", res.name.c_str(), res.value,
                res.threshold);
    nlohmann::ordered_json entry;
    entry["name"] = res.name;
    entry["pass"] = res.pass;
    entry["value"] = res.value;
    entry["threshold"] = res.threshold;
    checks.push_back(entry);
  }
  nlohmann::ordered_json out;
  out["checks"] = checks;
  out["all_pass"] = all_pass;
  atomic_write_json(fs::path(cfg.output_dir) / "check.json", out);
  if (!all_pass) {
    std::fprintf(stderr, "check: failures:");
    for (const auto& c : checks)
      if (!c["pass"].get<bool>())
        std::fprintf(stderr, " %s", c["name"].get<std::string>().c_str());
    std::fprintf(stderr, "\n");
    return kExitCheckFailed;
  }
  std::fprintf(stderr, "check: all %d checks passed\n", ran);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"suspended-platform swing-up: simulator, hierarchical "
               "controller, and policy trainer"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  std::string config_path;
  std::uint64_t seed_override = 0;
  bool seed_given = false;
  std::string output_dir_override;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--seed", seed_override, "override the config seed")
      ->each([&](const std::string&) { seed_given = true; });
  app.add_option("--output-dir", output_dir_override,
                 "override the config output directory");

  auto* sim = app.add_subcommand("sim", "run the controller on a scripted "
                                        "reference and write trajectory.csv");
  std::string script = "hold(0)";
  double duration = 10.0;
  sim->add_option("--script", script,
                  "hold(a0) | step(a1,t1) | sine(amp,omega) | pump(amp)");
  sim->add_option("--duration", duration, "simulated seconds");

  auto* train_cmd =
      app.add_subcommand("train", "train the swing-up policy");
  long long total_steps_override = 0;
  std::string resume_path;
  train_cmd->add_option("--train.total-steps", total_steps_override,
                        "override train.total_steps");
  train_cmd->add_option("--resume", resume_path,
                        "continue from a policy checkpoint");

  auto* eval_cmd =
      app.add_subcommand("eval", "evaluate a checkpoint deterministically");
  std::string checkpoint_path;
  int episodes = 50;
  bool dump_trajectories = false;
  eval_cmd->add_option("--checkpoint", checkpoint_path, "policy checkpoint")
      ->required();
  eval_cmd->add_option("--episodes", episodes, "number of episodes");
  eval_cmd->add_flag("--dump-trajectories", dump_trajectories,
                     "write one CSV per episode");

  auto* check_cmd = app.add_subcommand(
      "check", "run the independent oracle suite and write check.json");
  std::vector<std::string> only;
  check_cmd->add_option("--only", only, "run only the named check(s)");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg = load_run_config(config_path);
    if (seed_given) {
      cfg.seed = seed_override;
      cfg.train.seed = seed_override;
    }
    if (!output_dir_override.empty()) cfg.output_dir = output_dir_override;

    if (sim->parsed()) return cmd_sim(cfg, script, duration);
    if (train_cmd->parsed())
      return cmd_train(cfg, total_steps_override, resume_path);
    if (eval_cmd->parsed())
      return cmd_eval(cfg, checkpoint_path, episodes, dump_trajectories);
    if (check_cmd->parsed()) return cmd_check(cfg, only);
  } catch (const DivergenceError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitDivergence;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  }
  return kExitOk;
}
