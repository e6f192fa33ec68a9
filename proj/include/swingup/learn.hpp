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

#include <chrono>
#include <cmath>
#include <functional>
#include <nlohmann/json.hpp>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "swingup/env.hpp"
#include "swingup/policy.hpp"

namespace swingup {

struct TrainConfig {
  double gamma = 0.99;
  double lambda = 0.95;
  double clip_eps = 0.2;
  int epochs = 10;
  int minibatches = 4;
  double learning_rate = 3e-4;
  double entropy_coef = 0.0;
  double value_coef = 0.5;
  int steps_per_update = 1024;  // T
  int num_envs = 8;             // E
  long long total_steps = 2'000'000;
  std::uint64_t seed = 0;
  double max_grad_norm = 0.5;
  int checkpoint_every_updates = 50;
  std::vector<int> hidden = {64, 64};

  void validate() const {
    if (!(gamma > 0.0 && gamma <= 1.0))
      throw std::invalid_argument("train: gamma must be in (0, 1]");
    if (!(lambda >= 0.0 && lambda <= 1.0))
      throw std::invalid_argument("train: lambda must be in [0, 1]");
    if (!(clip_eps > 0.0))
      throw std::invalid_argument("train: clip_eps must be > 0");
    if (epochs <= 0 || minibatches <= 0)
      throw std::invalid_argument("train: epochs and minibatches must be > 0");
    if (!(learning_rate > 0.0))
      throw std::invalid_argument("train: learning_rate must be > 0");
    if (steps_per_update <= 0 || num_envs <= 0 || total_steps <= 0)
      throw std::invalid_argument("train: step counts must be > 0");
    if ((static_cast<long long>(steps_per_update) * num_envs) % minibatches !=
        0)
      throw std::invalid_argument(
          "train: minibatches must divide steps_per_update * num_envs");
    if (!(max_grad_norm > 0.0))
      throw std::invalid_argument("train: max_grad_norm must be > 0");
    if (hidden.empty())
      throw std::invalid_argument("train: need at least one hidden layer");
    for (int h : hidden)
      if (h <= 0) throw std::invalid_argument("train: hidden sizes > 0");
  }
};

/// Training aborted because a loss or parameter went non-finite.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// rollout storage and generalized advantage estimation

/// T x E arrays flattened as index(t, e) = t * E + e, plus per-env bootstrap
/// values for the truncated tail.
struct RolloutBuffer {
  int T = 0, E = 0, obs_dim = 0, act_dim = 0;
  Eigen::MatrixXd obs;       // (T*E) x obs_dim
  Eigen::MatrixXd raw;       // (T*E) x act_dim, pre-squash actions
  Eigen::VectorXd log_prob;  // T*E
  Eigen::VectorXd reward;    // T*E
  Eigen::VectorXd value;     // T*E
  Eigen::VectorXi done;      // T*E
  Eigen::VectorXd bootstrap; // E

  RolloutBuffer(int steps, int envs, int od, int ad)
      : T(steps), E(envs), obs_dim(od), act_dim(ad) {
    const int n = T * E;
    obs.setZero(n, obs_dim);
    raw.setZero(n, act_dim);
    log_prob.setZero(n);
    reward.setZero(n);
    value.setZero(n);
    done.setZero(n);
    bootstrap.setZero(E);
  }

  int index(int t, int e) const { return t * E + e; }

  void validate() const {
    const int n = T * E;
    if (obs.rows() != n || raw.rows() != n || log_prob.size() != n ||
        reward.size() != n || value.size() != n || done.size() != n ||
        bootstrap.size() != E)
      throw std::invalid_argument("rollout: array shapes disagree");
    if (!obs.allFinite() || !raw.allFinite() || !log_prob.allFinite() ||
        !reward.allFinite() || !value.allFinite() || !bootstrap.allFinite())
      throw std::invalid_argument("rollout: non-finite entries");
  }
};

/// Backward GAE recursion; done flags cut both the bootstrap and the
/// accumulated advantage. Returns (advantages, returns).
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> gae(
    const RolloutBuffer& buf, double gamma, double lambda) {
  Eigen::VectorXd adv(buf.T * buf.E);
  for (int e = 0; e < buf.E; ++e) {
    double acc = 0.0;
    for (int t = buf.T - 1; t >= 0; --t) {
      const int i = buf.index(t, e);
      const double nonterminal = buf.done[i] ? 0.0 : 1.0;
      const double v_next =
          (t + 1 < buf.T) ? buf.value[buf.index(t + 1, e)] : buf.bootstrap[e];
      const double delta =
          buf.reward[i] + gamma * v_next * nonterminal - buf.value[i];
      acc = delta + gamma * lambda * nonterminal * acc;
      adv[i] = acc;
    }
  }
  return {adv, adv + buf.value};
}

/// Zero-mean unit-variance normalization applied once per update.
inline void normalize_advantages(Eigen::VectorXd& adv) {
  const double mean = adv.mean();
  const double var = (adv.array() - mean).square().mean();
  adv = (adv.array() - mean) / (std::sqrt(var) + 1e-8);
}

// ---------------------------------------------------------------------------
// flat parameter packing (adam and gradient checks operate on one vector)

struct TensorSpan {
  std::string name;
  int offset = 0;
  int size = 0;
};

namespace detail {

inline void copy_matrix_out(const Eigen::MatrixXd& m, double* dst) {
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) *dst++ = m(r, c);  // row-major
}

inline void copy_matrix_in(Eigen::MatrixXd& m, const double* src) {
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) m(r, c) = *src++;
}

}  // namespace detail

inline int param_count(const GaussianPolicy& policy, const Mlp& value_net) {
  int n = 0;
  for (const auto& w : policy.mean_net.W) n += static_cast<int>(w.size());
  for (const auto& b : policy.mean_net.b) n += static_cast<int>(b.size());
  n += static_cast<int>(policy.log_std.size());
  for (const auto& w : value_net.W) n += static_cast<int>(w.size());
  for (const auto& b : value_net.b) n += static_cast<int>(b.size());
  return n;
}

inline std::vector<TensorSpan> param_layout(const GaussianPolicy& policy,
                                            const Mlp& value_net) {
  std::vector<TensorSpan> spans;
  int off = 0;
  auto add = [&](const std::string& name, int size) {
    spans.push_back({name, off, size});
    off += size;
  };
  for (size_t l = 0; l < policy.mean_net.W.size(); ++l) {
    add("pi.W" + std::to_string(l),
        static_cast<int>(policy.mean_net.W[l].size()));
    add("pi.b" + std::to_string(l),
        static_cast<int>(policy.mean_net.b[l].size()));
  }
  add("pi.log_std", static_cast<int>(policy.log_std.size()));
  for (size_t l = 0; l < value_net.W.size(); ++l) {
    add("vf.W" + std::to_string(l), static_cast<int>(value_net.W[l].size()));
    add("vf.b" + std::to_string(l), static_cast<int>(value_net.b[l].size()));
  }
  return spans;
}

inline Eigen::VectorXd pack_params(const GaussianPolicy& policy,
                                   const Mlp& value_net) {
  Eigen::VectorXd flat(param_count(policy, value_net));
  double* p = flat.data();
  for (size_t l = 0; l < policy.mean_net.W.size(); ++l) {
    detail::copy_matrix_out(policy.mean_net.W[l], p);
    p += policy.mean_net.W[l].size();
    for (int i = 0; i < policy.mean_net.b[l].size(); ++i)
      *p++ = policy.mean_net.b[l][i];
  }
  for (int i = 0; i < policy.log_std.size(); ++i) *p++ = policy.log_std[i];
  for (size_t l = 0; l < value_net.W.size(); ++l) {
    detail::copy_matrix_out(value_net.W[l], p);
    p += value_net.W[l].size();
    for (int i = 0; i < value_net.b[l].size(); ++i) *p++ = value_net.b[l][i];
  }
  return flat;
}

inline void unpack_params(const Eigen::VectorXd& flat, GaussianPolicy& policy,
                          Mlp& value_net) {
  if (flat.size() != param_count(policy, value_net))
    throw std::invalid_argument("params: flat vector has wrong length");
  const double* p = flat.data();
  for (size_t l = 0; l < policy.mean_net.W.size(); ++l) {
    detail::copy_matrix_in(policy.mean_net.W[l], p);
    p += policy.mean_net.W[l].size();
    for (int i = 0; i < policy.mean_net.b[l].size(); ++i)
      policy.mean_net.b[l][i] = *p++;
  }
  for (int i = 0; i < policy.log_std.size(); ++i) policy.log_std[i] = *p++;
  for (size_t l = 0; l < value_net.W.size(); ++l) {
    detail::copy_matrix_in(value_net.W[l], p);
    p += value_net.W[l].size();
    for (int i = 0; i < value_net.b[l].size(); ++i) value_net.b[l][i] = *p++;
  }
}

// ---------------------------------------------------------------------------
// clipped-surrogate loss with manual reverse-mode gradients

struct PpoCoefs {
  double clip_eps = 0.2;
  double value_coef = 0.5;
  double entropy_coef = 0.0;
};

struct PpoBatch {
  Eigen::MatrixXd obs;        // B x obs_dim
  Eigen::MatrixXd raw;        // B x act_dim
  Eigen::VectorXd old_logp;   // B
  Eigen::VectorXd advantage;  // B, normalized upstream
  Eigen::VectorXd ret;        // B
};

struct LossStats {
  double total = 0.0;
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
};

struct PolicyGrads {
  MlpGrad mean;
  Eigen::VectorXd log_std;
};

/// Policy surrogate + value regression + entropy bonus. When grad output
/// pointers are given, gradients for every parameter tensor (both networks
/// and log_std) are accumulated by hand through the whole graph.
inline LossStats ppo_loss(const GaussianPolicy& policy, const Mlp& value_net,
                          const PpoBatch& batch, const PpoCoefs& coefs,
                          PolicyGrads* policy_grad = nullptr,
                          MlpGrad* value_grad = nullptr) {
  const int B = static_cast<int>(batch.obs.rows());
  const int d = policy.act_dim();
  if (batch.raw.rows() != B || batch.old_logp.size() != B ||
      batch.advantage.size() != B || batch.ret.size() != B)
    throw std::invalid_argument("ppo_loss: batch shapes disagree");

  MlpCache cache_pi;
  const Eigen::MatrixXd mean = policy_forward(policy, batch.obs, &cache_pi);

  Eigen::VectorXd sigma(d), inv_sigma(d);
  for (int k = 0; k < d; ++k) {
    sigma[k] = std::exp(policy.log_std[k]);
    inv_sigma[k] = 1.0 / sigma[k];
  }
  const Eigen::MatrixXd z =
      (batch.raw - mean) * inv_sigma.asDiagonal();  // (B x d)

  // log density of the stored raw actions under the current parameters;
  // the tanh correction depends only on raw, so it shifts old and new
  // log-probs identically
  Eigen::VectorXd new_logp(B);
  for (int b = 0; b < B; ++b) {
    double lp = 0.0;
    for (int k = 0; k < d; ++k) {
      lp += -0.5 * z(b, k) * z(b, k) - kHalfLog2Pi - policy.log_std[k];
      const double th = std::tanh(batch.raw(b, k));
      lp -= std::log(1.0 - th * th + kTanhEps);
    }
    new_logp[b] = lp;
  }

  const Eigen::VectorXd ratio = (new_logp - batch.old_logp).array().exp();
  Eigen::VectorXd surrogate(B);
  Eigen::VectorXd g_logp = Eigen::VectorXd::Zero(B);
  for (int b = 0; b < B; ++b) {
    const double a = batch.advantage[b];
    const double s1 = ratio[b] * a;
    const double s2 =
        std::clamp(ratio[b], 1.0 - coefs.clip_eps, 1.0 + coefs.clip_eps) * a;
    surrogate[b] = std::min(s1, s2);
    if (s1 <= s2) g_logp[b] = -ratio[b] * a / B;  // else the clip is active
  }
  const double policy_loss = -surrogate.mean();

  MlpCache cache_v;
  const Eigen::VectorXd v =
      mlp_forward(value_net, batch.obs, &cache_v).col(0);
  const Eigen::VectorXd v_err = v - batch.ret;
  const double value_loss = v_err.squaredNorm() / B;

  const double entropy = gaussian_entropy(policy);

  LossStats stats;
  stats.policy = policy_loss;
  stats.value = value_loss;
  stats.entropy = entropy;
  stats.total = policy_loss + coefs.value_coef * value_loss -
                coefs.entropy_coef * entropy;

  if (policy_grad) {
    // d new_logp / d mean = z / sigma; d new_logp / d log_std = z^2 - 1
    Eigen::MatrixXd d_mean(B, d);
    for (int b = 0; b < B; ++b)
      for (int k = 0; k < d; ++k)
        d_mean(b, k) = g_logp[b] * z(b, k) * inv_sigma[k];
    policy_grad->mean = mlp_backward(policy.mean_net, cache_pi, d_mean);
    policy_grad->log_std = Eigen::VectorXd::Zero(d);
    for (int k = 0; k < d; ++k) {
      double acc = 0.0;
      for (int b = 0; b < B; ++b)
        acc += g_logp[b] * (z(b, k) * z(b, k) - 1.0);
      policy_grad->log_std[k] = acc - coefs.entropy_coef;
    }
  }
  if (value_grad) {
    const Eigen::MatrixXd d_v =
        (2.0 * coefs.value_coef / B) * v_err;
    *value_grad = mlp_backward(value_net, cache_v, d_v);
  }
  return stats;
}

inline Eigen::VectorXd pack_grads(const GaussianPolicy& policy,
                                  const Mlp& value_net,
                                  const PolicyGrads& pg, const MlpGrad& vg) {
  Eigen::VectorXd flat(param_count(policy, value_net));
  double* p = flat.data();
  for (size_t l = 0; l < pg.mean.dW.size(); ++l) {
    detail::copy_matrix_out(pg.mean.dW[l], p);
    p += pg.mean.dW[l].size();
    for (int i = 0; i < pg.mean.db[l].size(); ++i) *p++ = pg.mean.db[l][i];
  }
  for (int i = 0; i < pg.log_std.size(); ++i) *p++ = pg.log_std[i];
  for (size_t l = 0; l < vg.dW.size(); ++l) {
    detail::copy_matrix_out(vg.dW[l], p);
    p += vg.dW[l].size();
    for (int i = 0; i < vg.db[l].size(); ++i) *p++ = vg.db[l][i];
  }
  return flat;
}

// ---------------------------------------------------------------------------
// adaptive-moment optimizer over the flat parameter vector

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long long t = 0;

  static AdamState zeros(int n) {
    AdamState s;
    s.m.setZero(n);
    s.v.setZero(n);
    return s;
  }
};

/// Bias-corrected adaptive-moment update with global gradient-norm clipping
/// applied before the moments.
inline void adam_step(AdamState& state, Eigen::VectorXd& params,
                      Eigen::VectorXd grad, double lr,
                      double max_grad_norm = 0.0) {
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  if (params.size() != grad.size() || state.m.size() != params.size())
    throw std::invalid_argument("adam: shape mismatch");
  if (max_grad_norm > 0.0) {
    const double n = grad.norm();
    if (n > max_grad_norm) grad *= max_grad_norm / n;
  }
  state.t += 1;
  state.m = kBeta1 * state.m + (1.0 - kBeta1) * grad;
  state.v = kBeta2 * state.v.array() +
            (1.0 - kBeta2) * grad.array().square();
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(state.t));
  params.array() -= lr * (state.m.array() / c1) /
                    ((state.v.array() / c2).sqrt() + kEps);
}

// ---------------------------------------------------------------------------
// training loop

struct MetricsRecord {
  long long step = 0;
  double mean_return = 0.0;
  double success_rate = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double explained_var = 0.0;
  double wall_s = 0.0;
};

class MetricsSink {
 public:
  virtual ~MetricsSink() = default;
  virtual void emit(const MetricsRecord& record) = 0;
};

/// Everything needed to continue or evaluate a run.
struct TrainState {
  GaussianPolicy policy;
  Mlp value_net;
  AdamState opt;
  long long env_steps = 0;
  long long updates = 0;
  std::uint64_t rng_state = 0;
};

/// On-policy actor-critic training: collect T steps in E sequential
/// environments, estimate advantages, then run clipped-surrogate epochs.
/// Deterministic given (configs, seed) and a fixed number of envs.
inline TrainState train(
    const ModelParams& model, const Gains& gains, const EnvConfig& env_cfg,
    const TrainConfig& cfg, MetricsSink* sink = nullptr,
    const std::function<void(const TrainState&)>& checkpoint_cb = {},
    const TrainState* resume = nullptr) {
  model.validate();
  gains.validate();
  env_cfg.validate();
  cfg.validate();

  const int E = cfg.num_envs;
  const int T = cfg.steps_per_update;
  const int batch_size = T * E;
  const int minibatch_size = batch_size / cfg.minibatches;

  std::vector<SwingEnv> envs;
  envs.reserve(E);
  for (int e = 0; e < E; ++e) envs.emplace_back(model, gains, env_cfg);
  const int obs_dim = kObsDim;
  const int act_dim = envs.front().action_dim();

  TrainState st;
  Rng rng(derive_seed(cfg.seed, 0x7261696e));
  if (resume) {
    st = *resume;
    rng.set_state(resume->rng_state);
    if (st.policy.obs_dim() != obs_dim || st.policy.act_dim() != act_dim)
      throw std::invalid_argument("train: resumed policy shape mismatch");
  } else {
    st.policy = GaussianPolicy::create(obs_dim, act_dim, cfg.hidden, rng);
    std::vector<int> v_sizes;
    v_sizes.push_back(obs_dim);
    v_sizes.insert(v_sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
    v_sizes.push_back(1);
    st.value_net = Mlp::create(v_sizes, rng, 1.0);
    st.opt = AdamState::zeros(param_count(st.policy, st.value_net));
  }

  // fresh episode streams; a resumed run re-resets its environments
  long long episode_counter = st.env_steps;
  Eigen::MatrixXd obs_now(E, obs_dim);
  std::vector<double> ep_return(E, 0.0);
  for (int e = 0; e < E; ++e) {
    const Observation o =
        envs[e].reset(derive_seed(cfg.seed, 0xe9 + episode_counter++));
    obs_now.row(e) = o.transpose();
  }

  const PpoCoefs coefs{cfg.clip_eps, cfg.value_coef, cfg.entropy_coef};
  std::vector<int> order(batch_size);

  while (st.env_steps < cfg.total_steps) {
    const auto t_start = std::chrono::steady_clock::now();
    RolloutBuffer buf(T, E, obs_dim, act_dim);
    std::vector<double> finished_returns;
    int finished_success = 0;

    for (int t = 0; t < T; ++t) {
      const Eigen::MatrixXd mean = policy_forward(st.policy, obs_now);
      const Eigen::VectorXd values =
          mlp_forward(st.value_net, obs_now).col(0);
      for (int e = 0; e < E; ++e) {
        Eigen::VectorXd noise(act_dim);
        for (int k = 0; k < act_dim; ++k) noise[k] = rng.normal();
        const SampleResult s = sample_from_mean(
            st.policy, mean.row(e).transpose(), noise);
        const int i = buf.index(t, e);
        buf.obs.row(i) = obs_now.row(e);
        buf.raw.row(i) = s.raw.transpose();
        buf.log_prob[i] = s.log_prob;
        buf.value[i] = values[e];

        const StepResult r = envs[e].step(s.action);
        buf.reward[i] = r.reward;
        buf.done[i] = r.done ? 1 : 0;
        ep_return[e] += r.reward;
        if (r.done) {
          finished_returns.push_back(ep_return[e]);
          if (r.info.success) ++finished_success;
          ep_return[e] = 0.0;
          const Observation o =
              envs[e].reset(derive_seed(cfg.seed, 0xe9 + episode_counter++));
          obs_now.row(e) = o.transpose();
        } else {
          obs_now.row(e) = r.obs.transpose();
        }
      }
    }
    buf.bootstrap = mlp_forward(st.value_net, obs_now).col(0);
    buf.validate();

    auto [advantages, returns] = gae(buf, cfg.gamma, cfg.lambda);
    const double ret_mean = returns.mean();
    const double ret_var = (returns.array() - ret_mean).square().mean();
    const double res_var =
        (returns - buf.value).array().square().mean() -
        std::pow((returns - buf.value).mean(), 2);
    const double explained_var =
        ret_var > 1e-12 ? 1.0 - res_var / ret_var : 0.0;
    normalize_advantages(advantages);

    LossStats agg;
    int loss_count = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      for (int i = 0; i < batch_size; ++i) order[i] = i;
      for (int i = batch_size - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.next_u64() % (i + 1));
        std::swap(order[i], order[j]);
      }
      for (int mb = 0; mb < cfg.minibatches; ++mb) {
        PpoBatch batch;
        batch.obs.resize(minibatch_size, obs_dim);
        batch.raw.resize(minibatch_size, act_dim);
        batch.old_logp.resize(minibatch_size);
        batch.advantage.resize(minibatch_size);
        batch.ret.resize(minibatch_size);
        for (int k = 0; k < minibatch_size; ++k) {
          const int i = order[mb * minibatch_size + k];
          batch.obs.row(k) = buf.obs.row(i);
          batch.raw.row(k) = buf.raw.row(i);
          batch.old_logp[k] = buf.log_prob[i];
          batch.advantage[k] = advantages[i];
          batch.ret[k] = returns[i];
        }
        PolicyGrads pg;
        MlpGrad vg;
        const LossStats stats =
            ppo_loss(st.policy, st.value_net, batch, coefs, &pg, &vg);
        if (!std::isfinite(stats.total))
          throw DivergenceError(
              "train: non-finite loss at step " + std::to_string(st.env_steps));
        Eigen::VectorXd params = pack_params(st.policy, st.value_net);
        adam_step(st.opt, params,
                  pack_grads(st.policy, st.value_net, pg, vg),
                  cfg.learning_rate, cfg.max_grad_norm);
        unpack_params(params, st.policy, st.value_net);
        st.policy.clamp_log_std();
        agg.total += stats.total;
        agg.policy += stats.policy;
        agg.value += stats.value;
        agg.entropy += stats.entropy;
        ++loss_count;
      }
    }

    st.env_steps += batch_size;
    st.updates += 1;
    st.rng_state = rng.state();

    if (sink) {
      MetricsRecord rec;
      rec.step = st.env_steps;
      rec.mean_return =
          finished_returns.empty()
              ? 0.0
              : std::accumulate(finished_returns.begin(),
                                finished_returns.end(), 0.0) /
                    finished_returns.size();
      rec.success_rate = finished_returns.empty()
                             ? 0.0
                             : static_cast<double>(finished_success) /
                                   finished_returns.size();
      rec.policy_loss = agg.policy / loss_count;
      rec.value_loss = agg.value / loss_count;
      rec.entropy = agg.entropy / loss_count;
      rec.explained_var = explained_var;
      rec.wall_s = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - t_start)
                       .count();
      sink->emit(rec);
    }
    if (checkpoint_cb && cfg.checkpoint_every_updates > 0 &&
        st.updates % cfg.checkpoint_every_updates == 0)
      checkpoint_cb(st);
  }
  return st;
}

// ---------------------------------------------------------------------------
// evaluation

struct EvalStats {
  long long episodes = 0;
  double success_rate = 0.0;
  double mean_return = 0.0;
  double std_return = 0.0;
  double mean_time_to_target = 0.0;  // over successful episodes
  double mean_saturated_fraction = 0.0;
};

struct EvalHooks {
  std::function<void(int)> begin_episode;
  SwingEnv::TraceFn trace;
  std::function<void(int)> end_episode;
};

/// Deterministic-mode rollouts (noise = 0, action = tanh(mean)).
inline EvalStats evaluate(const GaussianPolicy& policy,
                          const ModelParams& model, const Gains& gains,
                          const EnvConfig& env_cfg, int n_episodes,
                          std::uint64_t seed, const EvalHooks& hooks = {}) {
  EvalStats stats;
  if (n_episodes <= 0) return stats;  // explicit zero-count marker
  SwingEnv env(model, gains, env_cfg);
  if (hooks.trace) env.set_trace(hooks.trace);
  std::vector<double> returns;
  std::vector<double> times_to_target;
  double saturated_sum = 0.0;
  for (int ep = 0; ep < n_episodes; ++ep) {
    if (hooks.begin_episode) hooks.begin_episode(ep);
    env.reset(derive_seed(seed, 0xe7a1 + ep));
    double ep_return = 0.0;
    double ep_saturated = 0.0;
    int steps = 0;
    bool success = false;
    while (!env.done()) {
      const Eigen::MatrixXd mean =
          policy_forward(policy, env.observe().transpose());
      Eigen::VectorXd action(policy.act_dim());
      for (int k = 0; k < policy.act_dim(); ++k)
        action[k] = std::tanh(mean(0, k));
      const StepResult r = env.step(action);
      ep_return += r.reward;
      ep_saturated += r.info.saturated_fraction;
      ++steps;
      if (r.done && r.info.success) {
        success = true;
        times_to_target.push_back(env.state().t);
      }
    }
    returns.push_back(ep_return);
    saturated_sum += steps > 0 ? ep_saturated / steps : 0.0;
    if (success) stats.success_rate += 1.0;
    if (hooks.end_episode) hooks.end_episode(ep);
  }
  stats.episodes = n_episodes;
  stats.success_rate /= n_episodes;
  const double mean =
      std::accumulate(returns.begin(), returns.end(), 0.0) / n_episodes;
  stats.mean_return = mean;
  double var = 0.0;
  for (double r : returns) var += (r - mean) * (r - mean);
  stats.std_return = std::sqrt(var / n_episodes);
  stats.mean_time_to_target =
      times_to_target.empty()
          ? 0.0
          : std::accumulate(times_to_target.begin(), times_to_target.end(),
                            0.0) /
                times_to_target.size();
  stats.mean_saturated_fraction = saturated_sum / n_episodes;
  return stats;
}

// ---------------------------------------------------------------------------
// checkpoint serialization

namespace detail {

inline nlohmann::json mlp_to_json(const Mlp& net) {
  nlohmann::json j;
  j["layer_sizes"] = net.sizes();
  nlohmann::json weights = nlohmann::json::array();
  nlohmann::json biases = nlohmann::json::array();
  for (const auto& w : net.W) {
    std::vector<double> flat(w.size());
    copy_matrix_out(w, flat.data());
    weights.push_back(flat);  // row-major
  }
  for (const auto& b : net.b)
    biases.push_back(std::vector<double>(b.data(), b.data() + b.size()));
  j["weights"] = weights;
  j["biases"] = biases;
  return j;
}

inline Mlp mlp_from_json(const nlohmann::json& j) {
  if (!j.contains("layer_sizes") || !j.contains("weights") ||
      !j.contains("biases"))
    throw std::runtime_error("checkpoint: malformed network block");
  const std::vector<int> sizes = j.at("layer_sizes").get<std::vector<int>>();
  if (sizes.size() < 2)
    throw std::runtime_error("checkpoint: bad layer sizes");
  Mlp net;
  const auto& weights = j.at("weights");
  const auto& biases = j.at("biases");
  if (weights.size() != sizes.size() - 1 || biases.size() != sizes.size() - 1)
    throw std::runtime_error("checkpoint: layer count mismatch");
  for (size_t l = 0; l + 1 < sizes.size(); ++l) {
    const std::vector<double> wf = weights[l].get<std::vector<double>>();
    const std::vector<double> bf = biases[l].get<std::vector<double>>();
    if (static_cast<int>(wf.size()) != sizes[l] * sizes[l + 1] ||
        static_cast<int>(bf.size()) != sizes[l + 1])
      throw std::runtime_error("checkpoint: weight shape mismatch");
    Eigen::MatrixXd w(sizes[l + 1], sizes[l]);
    copy_matrix_in(w, wf.data());
    net.W.push_back(std::move(w));
    net.b.push_back(Eigen::Map<const Eigen::VectorXd>(bf.data(), bf.size()));
  }
  if (!net.finite()) throw std::runtime_error("checkpoint: non-finite params");
  return net;
}

}  // namespace detail

/// Single-document checkpoint: both networks, optimizer moments, counters,
/// generator state, and the resolved run configuration for provenance.
inline nlohmann::json checkpoint_to_json(const TrainState& st,
                                         const nlohmann::json& config) {
  nlohmann::json j;
  j["format"] = "swingup-policy-v1";
  j["policy"] = detail::mlp_to_json(st.policy.mean_net);
  j["policy"]["log_std"] = std::vector<double>(
      st.policy.log_std.data(),
      st.policy.log_std.data() + st.policy.log_std.size());
  j["value"] = detail::mlp_to_json(st.value_net);
  j["adam"]["m"] =
      std::vector<double>(st.opt.m.data(), st.opt.m.data() + st.opt.m.size());
  j["adam"]["v"] =
      std::vector<double>(st.opt.v.data(), st.opt.v.data() + st.opt.v.size());
  j["adam"]["t"] = st.opt.t;
  j["env_steps"] = st.env_steps;
  j["updates"] = st.updates;
  j["rng_state"] = st.rng_state;
  j["config"] = config;
  return j;
}

inline TrainState checkpoint_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", "") != "swingup-policy-v1")
    throw std::runtime_error("checkpoint: unknown or missing format tag");
  TrainState st;
  st.policy.mean_net = detail::mlp_from_json(j.at("policy"));
  const std::vector<double> ls =
      j.at("policy").at("log_std").get<std::vector<double>>();
  if (static_cast<int>(ls.size()) != st.policy.mean_net.out_dim())
    throw std::runtime_error("checkpoint: log_std length mismatch");
  st.policy.log_std = Eigen::Map<const Eigen::VectorXd>(ls.data(), ls.size());
  st.value_net = detail::mlp_from_json(j.at("value"));
  if (st.value_net.out_dim() != 1 ||
      st.value_net.in_dim() != st.policy.mean_net.in_dim())
    throw std::runtime_error("checkpoint: value network shape mismatch");
  const int n = param_count(st.policy, st.value_net);
  if (j.contains("adam")) {
    const std::vector<double> m = j.at("adam").at("m").get<std::vector<double>>();
    const std::vector<double> v = j.at("adam").at("v").get<std::vector<double>>();
    if (static_cast<int>(m.size()) != n || static_cast<int>(v.size()) != n)
      throw std::runtime_error("checkpoint: optimizer state length mismatch");
    st.opt.m = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
    st.opt.v = Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
    st.opt.t = j.at("adam").value("t", 0LL);
  } else {
    st.opt = AdamState::zeros(n);
  }
  st.env_steps = j.value("env_steps", 0LL);
  st.updates = j.value("updates", 0LL);
  st.rng_state = j.value("rng_state", std::uint64_t{0});
  return st;
}

}  // namespace swingup
