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

// Acceptance suite: every release gate runs here, each printing one
// [PASS]/[FAIL] line. The CLI binary path arrives as argv[1] for the gates
// that exercise the command-line surface.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "swingup/config.hpp"
#include "swingup/control.hpp"
#include "swingup/env.hpp"
#include "swingup/io.hpp"
#include "swingup/learn.hpp"
#include "swingup/model.hpp"
#include "swingup/oracle.hpp"

namespace fs = std::filesystem;
using namespace swingup;

namespace {

std::string g_cli;

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "swingup_acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = g_cli + " " + args + " > " + log.string() + " 2>&1";
  return WEXITSTATUS(std::system(cmd.c_str()));
}

// ---------------------------------------------------------------------------

bool energy_conservation(std::string& detail) {
  ModelParams p = default_model_params();
  p.dt = 1e-3;
  SimState s;
  s.alpha = 1.0;
  s.beta = 0.3;
  s.beta_dot = 0.2;
  s.omega = Eigen::Vector3d(0.1, -0.2, 0.3);
  const Eigen::VectorXd u = Eigen::VectorXd::Zero(p.num_rotors());
  std::vector<SimState> traj{s};
  for (int i = 0; i < 10000; ++i) {
    s = step_rk4(p, s, u);
    traj.push_back(s);
  }
  const double drift = oracle::energy_audit(p, traj);
  detail = "relative drift " + format_g17(drift) + " (< 1e-6)";
  return drift < 1e-6;
}

double measured_period(const ModelParams& p, double amplitude) {
  SimState s;
  s.alpha = amplitude;
  const Eigen::VectorXd u = Eigen::VectorXd::Zero(p.num_rotors());
  double prev = s.alpha;
  const int max_steps = static_cast<int>(30.0 / p.dt);
  for (int i = 0; i < max_steps; ++i) {
    const SimState next = step_rk4(p, s, u);
    if (prev > 0.0 && next.alpha <= 0.0)
      return 4.0 * (s.t + p.dt * prev / (prev - next.alpha));
    prev = next.alpha;
    s = next;
  }
  return -1.0;
}

bool analytic_period(std::string& detail) {
  ModelParams p = default_model_params();
  p.L = 1.0;
  p.dt = 1e-3;
  const double t_small = measured_period(p, 0.01);
  const double t0 = 2.0 * std::numbers::pi * std::sqrt(p.L / p.g);
  const double rel_small = std::abs(t_small - t0) / t0;
  const double t_large = measured_period(p, 2.0);
  const double t_oracle = oracle::planar_period(p.g, p.L, 2.0);
  const double rel_large = std::abs(t_large - t_oracle) / t_oracle;
  detail = "small-angle error " + format_g17(rel_small) +
           " (< 1e-3), large-angle error " + format_g17(rel_large) +
           " (< 5e-3)";
  return rel_small < 1e-3 && rel_large < 5e-3;
}

bool allocation_round_trip(std::string& detail) {
  ModelParams p = default_model_params();
  Allocator alloc(p);
  const AllocationReport zero =
      alloc.allocate(Eigen::Quaterniond::Identity(), Wrench{});
  if (zero.command.u.norm() != 0.0) {
    detail = "zero wrench produced nonzero thrust";
    return false;
  }
  Rng rng(2024);
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
      if (u[i] < 0.0 || u[i] > p.rotors[i].u_max) in_bounds = false;
    if (!in_bounds) continue;
    ++certified;
    w.force *= 0.5;
    w.torque *= 0.5;
    worst = std::max(
        worst, alloc.allocate(Eigen::Quaterniond::Identity(), w).residual);
  }
  detail = std::to_string(certified) + " interior wrenches, worst residual " +
           format_g17(worst) + " (< 1e-6)";
  return certified == 1000 && worst < 1e-6;
}

bool closed_loop_damping(std::string& detail) {
  ModelParams p = default_model_params();
  Gains g = default_gains();
  Controller ctrl(p, g);
  SimState s;
  s.alpha = 20.0 * std::numbers::pi / 180.0;
  TaskReference ref;
  std::vector<double> ts, alphas;
  const int steps = static_cast<int>(15.0 / p.dt);
  for (int i = 0; i < steps; ++i) {
    auto [cmd, rep] = ctrl.step(s, ref);
    s = step_rk4(p, s, cmd.u);
    ts.push_back(s.t);
    alphas.push_back(s.alpha);
  }
  double tail = 0.0;
  for (size_t i = 0; i < ts.size(); ++i)
    if (ts[i] > 14.0) tail = std::max(tail, std::abs(alphas[i]));

  // successive extrema magnitudes via parabola refinement
  std::vector<double> peaks;
  for (size_t i = 1; i + 1 < alphas.size() && peaks.size() < 2; ++i) {
    const bool is_max = alphas[i] > alphas[i - 1] && alphas[i] >= alphas[i + 1];
    const bool is_min = alphas[i] < alphas[i - 1] && alphas[i] <= alphas[i + 1];
    if (!is_max && !is_min) continue;
    const double denom = alphas[i - 1] - 2.0 * alphas[i] + alphas[i + 1];
    double peak = alphas[i];
    if (std::abs(denom) > 1e-300)
      peak -= 0.25 * (alphas[i - 1] - alphas[i + 1]) *
              (0.5 * (alphas[i - 1] - alphas[i + 1]) / denom);
    peaks.push_back(std::abs(peak));
  }
  if (peaks.size() < 2) {
    detail = "could not locate two swing extrema";
    return false;
  }
  const double delta = std::log(peaks[0] / peaks[1]);
  const double zeta_measured =
      delta / std::sqrt(std::numbers::pi * std::numbers::pi + delta * delta);
  const double zeta_design = swing_design_damping_ratio(p, g);
  const double rel = std::abs(zeta_measured - zeta_design) / zeta_design;
  detail = "tail amplitude " + format_g17(tail * 180.0 / std::numbers::pi) +
           " deg (< 1), damping ratio " + format_g17(zeta_measured) + " vs " +
           format_g17(zeta_design) + " design (" + format_g17(100.0 * rel) +
           "% < 20%)";
  return tail < std::numbers::pi / 180.0 && rel < 0.2;
}

bool gradient_correctness(std::string& detail) {
  Rng rng(99);
  GaussianPolicy policy = GaussianPolicy::create(kObsDim, 2, {64, 64}, rng);
  Mlp value = Mlp::create({kObsDim, 64, 64, 1}, rng);
  const PpoCoefs coefs{0.2, 0.5, 0.01};
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const int B = 32;
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
      worst = std::max(
          worst, (ga - gf).norm() / std::max({ga.norm(), gf.norm(), 1e-10}));
    }
  }
  detail = "worst per-tensor relative error " + format_g17(worst) +
           " over 5 minibatches (< 1e-4)";
  return worst < 1e-4;
}

bool gae_equivalence(std::string& detail) {
  Rng rng(4242);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    RolloutBuffer buf(50, 1, 1, 1);
    for (int i = 0; i < 50; ++i) {
      buf.reward[i] = rng.normal();
      buf.value[i] = rng.normal();
      buf.done[i] = rng.uniform() < 0.15 ? 1 : 0;
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
  detail = "worst |recursive - brute force| " + format_g17(worst) +
           " over 100 buffers (< 1e-10)";
  return worst < 1e-10;
}

bool train_determinism(std::string& detail) {
  const fs::path dir = fresh_dir("determinism");
  const nlohmann::json cfg = {
      {"env", {{"planar", true}}},
      {"train",
       {{"steps_per_update", 128},
        {"num_envs", 4},
        {"total_steps", 1536},  // 3 updates
        {"epochs", 4},
        {"minibatches", 4},
        {"hidden", {32, 32}}}},
      {"seed", 123}};
  std::ofstream(dir / "cfg.json") << cfg.dump(2);
  for (const std::string out : {"a", "b"}) {
    const int code = run_cli("train --config " + (dir / "cfg.json").string() +
                                 " --output-dir " + (dir / out).string(),
                             dir / (out + ".log"));
    if (code != 0) {
      detail = "train exited " + std::to_string(code);
      return false;
    }
  }
  const std::string a = slurp(dir / "a" / "metrics.jsonl");
  const std::string b = slurp(dir / "b" / "metrics.jsonl");
  const long updates = std::count(a.begin(), a.end(), '\n');
  detail = std::to_string(updates) + " updates, metrics.jsonl " +
           (a == b ? "byte-identical" : "DIFFER");
  return !a.empty() && a == b && updates >= 3;
}

bool desk_scale_learning(std::string& detail) {
  const ModelParams model = default_model_params();
  const Gains gains = default_gains();
  EnvConfig env_cfg;
  env_cfg.planar = true;
  TrainConfig cfg;  // defaults: 2e6 steps

  double rate = 0.0;
  std::string tried;
  for (int attempt = 0; attempt < 2; ++attempt) {  // one reseed retry
    cfg.seed = attempt;
    std::fprintf(stderr, "  [criterion 8] training 2e6 steps, seed %d...\n",
                 attempt);
    struct Progress : MetricsSink {
      void emit(const MetricsRecord& r) override {
        if (r.step % 98304 == 0)
          std::fprintf(stderr,
                       "    step %lld return %.1f success %.2f ev %.2f\n",
                       r.step, r.mean_return, r.success_rate,
                       r.explained_var);
      }
    } progress;
    const TrainState st = train(model, gains, env_cfg, cfg, &progress);
    const EvalStats stats =
        evaluate(st.policy, model, gains, env_cfg, 50, cfg.seed);
    rate = stats.success_rate;
    tried += (tried.empty() ? "" : ", ") + std::string("seed ") +
             std::to_string(attempt) + ": " + format_g17(rate);
    std::fprintf(stderr, "  [criterion 8] eval success rate %.2f\n", rate);
    if (rate >= 0.8) break;
  }
  detail = "eval success rate over 50 episodes (" + tried + ", >= 0.8)";
  return rate >= 0.8;
}

bool resonant_pumping(std::string& detail) {
  const fs::path dir = fresh_dir("pump");
  const int code =
      run_cli("sim --script \"pump(0.5)\" --duration 10 --output-dir " +
                  (dir / "out").string(),
              dir / "sim.log");
  if (code != 0) {
    detail = "sim exited " + std::to_string(code);
    return false;
  }
  // reconstruct the swing energy from the trajectory columns
  const ModelParams p = default_model_params();
  std::ifstream in(dir / "out" / "trajectory.csv");
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> t, energy;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::vector<double> row;
    std::string field;
    while (std::getline(ss, field, ',')) row.push_back(std::stod(field));
    SimState s;
    s.t = row[0];
    s.alpha = row[1];
    s.beta = row[2];
    s.alpha_dot = row[3];
    s.beta_dot = row[4];
    t.push_back(s.t);
    energy.push_back(swing_energy(p, s));
  }
  const double period =
      2.0 * std::numbers::pi / std::sqrt(p.g / p.L);
  const int per_window = static_cast<int>(period / p.dt);
  std::vector<double> window_max;
  for (size_t start = 0; start + per_window <= energy.size();
       start += per_window) {
    double m = 0.0;
    for (int k = 0; k < per_window; ++k) m = std::max(m, energy[start + k]);
    window_max.push_back(m);
  }
  bool monotone = window_max.size() >= 3;
  for (size_t i = 1; i < window_max.size(); ++i)
    monotone = monotone && window_max[i] > window_max[i - 1];
  detail = "per-period energy maxima";
  for (double m : window_max) detail += " " + format_g17(m).substr(0, 6);
  detail += monotone ? " strictly increasing" : " NOT increasing";
  return monotone;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <path-to-swingup-cli>\n", argv[0]);
    return 2;
  }
  g_cli = argv[1];

  struct Criterion {
    int id;
    const char* name;
    std::function<bool(std::string&)> fn;
  };
  const std::vector<Criterion> criteria = {
      {1, "energy conservation", energy_conservation},
      {2, "analytic period", analytic_period},
      {3, "allocation round-trip", allocation_round_trip},
      {4, "closed-loop damping", closed_loop_damping},
      {5, "gradient correctness", gradient_correctness},
      {6, "gae oracle equivalence", gae_equivalence},
      {7, "training determinism", train_determinism},
      {9, "resonant pumping sanity", resonant_pumping},
      {8, "desk-scale learning", desk_scale_learning},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    std::string detail;
    bool pass = false;
    try {
      pass = c.fn(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::printf("[%s] %d %s: %s\n", pass ? "PASS" : "FAIL", c.id, c.name,
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
  }
  if (failures == 0) {
    std::printf("all acceptance criteria passed\n");
  } else {
    std::printf("%d acceptance criteria FAILED\n", failures);
  }
  return failures == 0 ? 0 : 1;
}
