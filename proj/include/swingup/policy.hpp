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

#include <cmath>
#include <numbers>

#include "swingup/mlp.hpp"

namespace swingup {

inline constexpr double kLogStdInit = -0.5;
inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 1.0;
inline constexpr double kTanhEps = 1e-6;
inline constexpr double kHalfLog2Pi = 0.9189385332046727;  // 0.5 ln(2 pi)

/// tanh-squashed Gaussian policy: a state-dependent mean network plus a
/// state-independent per-dimension log standard deviation.
struct GaussianPolicy {
  Mlp mean_net;
  Eigen::VectorXd log_std;

  int obs_dim() const { return mean_net.in_dim(); }
  int act_dim() const { return mean_net.out_dim(); }

  static GaussianPolicy create(int obs_dim, int act_dim,
                               const std::vector<int>& hidden, Rng& rng) {
    std::vector<int> sizes;
    sizes.push_back(obs_dim);
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(act_dim);
    GaussianPolicy p;
    p.mean_net = Mlp::create(sizes, rng, 0.01);
    p.log_std = Eigen::VectorXd::Constant(act_dim, kLogStdInit);
    return p;
  }

  void clamp_log_std() {
    for (int i = 0; i < log_std.size(); ++i)
      log_std[i] = std::clamp(log_std[i], kLogStdMin, kLogStdMax);
  }
};

/// Deterministic mean pass (batch rows are observations).
inline Eigen::MatrixXd policy_forward(const GaussianPolicy& policy,
                                      const Eigen::MatrixXd& obs,
                                      MlpCache* cache = nullptr) {
  return mlp_forward(policy.mean_net, obs, cache);
}

/// Log density of a stored pre-squash action under the given mean, including
/// the tanh change-of-variables correction.
inline double log_prob_of_raw(const GaussianPolicy& policy,
                              const Eigen::VectorXd& mean,
                              const Eigen::VectorXd& raw) {
  double logp = 0.0;
  for (int d = 0; d < policy.act_dim(); ++d) {
    const double sigma = std::exp(policy.log_std[d]);
    const double z = (raw[d] - mean[d]) / sigma;
    logp += -0.5 * z * z - kHalfLog2Pi - policy.log_std[d];
    const double th = std::tanh(raw[d]);
    logp -= std::log(1.0 - th * th + kTanhEps);
  }
  return logp;
}

struct SampleResult {
  Eigen::VectorXd action;  // squashed into [-1, 1]^d
  Eigen::VectorXd raw;     // pre-squash Gaussian draw
  double log_prob = 0.0;
};

/// Draw from an already-computed mean (rollout loops batch the forward pass).
inline SampleResult sample_from_mean(const GaussianPolicy& policy,
                                     const Eigen::VectorXd& mean,
                                     const Eigen::VectorXd& noise) {
  if (noise.size() != policy.act_dim() || mean.size() != policy.act_dim())
    throw std::invalid_argument("policy: sample dimension mismatch");
  SampleResult res;
  res.raw.resize(policy.act_dim());
  res.action.resize(policy.act_dim());
  double logp = 0.0;
  for (int d = 0; d < policy.act_dim(); ++d) {
    const double sigma = std::exp(policy.log_std[d]);
    res.raw[d] = mean[d] + sigma * noise[d];
    const double th = std::tanh(res.raw[d]);
    res.action[d] = th;
    logp += -0.5 * noise[d] * noise[d] - kHalfLog2Pi - policy.log_std[d];
    logp -= std::log(1.0 - th * th + kTanhEps);
  }
  res.log_prob = logp;
  return res;
}

/// Reparameterized draw with injected standard-normal noise; noise = 0 gives
/// the squashed mode.
inline SampleResult sample_and_logprob(const GaussianPolicy& policy,
                                       const Eigen::VectorXd& obs,
                                       const Eigen::VectorXd& noise) {
  if (obs.size() != policy.obs_dim())
    throw std::invalid_argument("policy: observation dimension mismatch");
  const Eigen::MatrixXd mean = policy_forward(policy, obs.transpose());
  return sample_from_mean(policy, mean.row(0).transpose(), noise);
}

/// Entropy of the pre-squash Gaussian, summed over action dimensions.
inline double gaussian_entropy(const GaussianPolicy& policy) {
  const double c = 0.5 * (1.0 + std::log(2.0 * std::numbers::pi));
  double h = 0.0;
  for (int d = 0; d < policy.log_std.size(); ++d)
    h += policy.log_std[d] + c;
  return h;
}

}  // namespace swingup
