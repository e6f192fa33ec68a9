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

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "swingup/model.hpp"

// Independent verification routines used by tests and the `check` command.
// None of these share a code path with the implementation they check: the
// period comes from the elliptic integral rather than the integrator, the
// advantage sum is the O(T^2) definition rather than the recursion, and the
// gradient is plain central differences.

namespace swingup::oracle {

/// Complete elliptic integral of the first kind K(k) by arithmetic-geometric
/// mean iteration (modulus convention, K(0) = pi/2).
inline double elliptic_k_agm(double k) {
  if (!(k >= 0.0 && k < 1.0))
    throw std::invalid_argument("elliptic_k: modulus must be in [0, 1)");
  double a = 1.0;
  double b = std::sqrt(1.0 - k * k);
  // quadratic convergence; the iteration cap guards the ulp-oscillation end
  for (int i = 0; i < 60 && std::abs(a - b) > 4e-16 * a; ++i) {
    const double an = 0.5 * (a + b);
    b = std::sqrt(a * b);
    a = an;
  }
  return std::numbers::pi / (2.0 * a);
}

/// Exact pendulum period T = 4 sqrt(L/g) K(sin(amplitude/2)).
inline double planar_period(double g, double L, double amplitude) {
  if (!(g > 0.0 && L > 0.0))
    throw std::invalid_argument("planar_period: g and L must be > 0");
  if (!(amplitude > 0.0 && amplitude < std::numbers::pi))
    throw std::invalid_argument("planar_period: amplitude must be in (0, pi)");
  return 4.0 * std::sqrt(L / g) * elliptic_k_agm(std::sin(amplitude / 2.0));
}

/// The same period by 200-point midpoint quadrature of the regularized
/// integrand; cross-checks the AGM evaluation.
inline double planar_period_quadrature(double g, double L, double amplitude,
                                       int n = 200) {
  if (!(amplitude > 0.0 && amplitude < std::numbers::pi))
    throw std::invalid_argument("planar_period: amplitude must be in (0, pi)");
  const double k = std::sin(amplitude / 2.0);
  const double h = std::numbers::pi / 2.0 / n;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double theta = (i + 0.5) * h;
    const double s = std::sin(theta);
    sum += 1.0 / std::sqrt(1.0 - k * k * s * s);
  }
  return 4.0 * std::sqrt(L / g) * sum * h;
}

/// Central differences of a scalar function, one coordinate at a time.
inline Eigen::VectorXd finite_diff_gradient(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd grad(x.size());
  Eigen::VectorXd probe = x;
  for (int i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double fp = f(probe);
    probe[i] = x[i] - h;
    const double fm = f(probe);
    probe[i] = x[i];
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

/// O(T^2) evaluation of the generalized-advantage definition, no recursion.
/// values has length T; v_{T} is the bootstrap.
inline Eigen::VectorXd brute_force_returns(const Eigen::VectorXd& rewards,
                                           const Eigen::VectorXd& values,
                                           const Eigen::VectorXi& dones,
                                           double bootstrap, double gamma,
                                           double lambda) {
  const int T = static_cast<int>(rewards.size());
  if (values.size() != T || dones.size() != T)
    throw std::invalid_argument("brute_force_returns: length mismatch");
  auto delta = [&](int s) {
    const double v_next = (s + 1 < T) ? values[s + 1] : bootstrap;
    const double nonterminal = dones[s] ? 0.0 : 1.0;
    return rewards[s] + gamma * v_next * nonterminal - values[s];
  };
  Eigen::VectorXd adv(T);
  for (int t = 0; t < T; ++t) {
    double sum = 0.0;
    double weight = 1.0;
    for (int l = 0; t + l < T; ++l) {
      sum += weight * delta(t + l);
      if (dones[t + l]) break;  // the mask product is zero from here on
      weight *= gamma * lambda;
    }
    adv[t] = sum;
  }
  return adv;
}

/// Max relative energy drift along an unactuated trajectory.
inline double energy_audit(const ModelParams& params,
                           const std::vector<SimState>& trajectory) {
  if (trajectory.empty())
    throw std::invalid_argument("energy_audit: empty trajectory");
  const double e0 = total_energy(params, trajectory.front());
  const double scale =
      std::max(std::abs(e0), params.m * params.g * params.L);
  double drift = 0.0;
  for (const SimState& s : trajectory)
    drift = std::max(drift, std::abs(total_energy(params, s) - e0));
  return drift / scale;
}

}  // namespace swingup::oracle
