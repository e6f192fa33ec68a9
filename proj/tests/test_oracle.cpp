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

#include "swingup/model.hpp"
#include "swingup/oracle.hpp"

using namespace swingup;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("planar period approaches the small-angle limit", "[oracle]") {
  const double g = 9.81, L = 1.0;
  const double t0 = 2.0 * std::numbers::pi * std::sqrt(L / g);
  REQUIRE_THAT(oracle::planar_period(g, L, 1e-4), WithinRel(t0, 1e-8));
}

TEST_CASE("planar period at pi/2 matches the elliptic identity", "[oracle]") {
  const double g = 9.81, L = 1.0;
  const double expected = 2.0 * std::numbers::pi * std::sqrt(L / g) *
                          (2.0 / std::numbers::pi) *
                          oracle::elliptic_k_agm(std::numbers::sqrt2 / 2.0);
  REQUIRE_THAT(oracle::planar_period(g, L, std::numbers::pi / 2),
               WithinRel(expected, 1e-14));
  REQUIRE_THAT(oracle::planar_period(g, L, std::numbers::pi / 2),
               WithinRel(oracle::planar_period_quadrature(
                             g, L, std::numbers::pi / 2),
                         1e-9));
}

TEST_CASE("agm and quadrature agree across amplitudes", "[oracle]") {
  for (double amp : {0.1, 0.5, 1.0, 2.0, 3.0}) {
    REQUIRE_THAT(oracle::planar_period(9.81, 2.0, amp),
                 WithinRel(oracle::planar_period_quadrature(9.81, 2.0, amp),
                           1e-9));
  }
}

TEST_CASE("planar period increases strictly with amplitude", "[oracle]") {
  double prev = 0.0;
  for (double amp = 0.05; amp < std::numbers::pi - 0.05; amp += 0.05) {
    const double t = oracle::planar_period(9.81, 1.5, amp);
    REQUIRE(t > prev);
    prev = t;
  }
}

TEST_CASE("planar period rejects out-of-range amplitudes", "[oracle]") {
  REQUIRE_THROWS_AS(oracle::planar_period(9.81, 1.0, 0.0),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(oracle::planar_period(9.81, 1.0, std::numbers::pi),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(oracle::planar_period(9.81, 1.0, -0.5),
                    std::invalid_argument);
}

TEST_CASE("finite differences recover simple gradients", "[oracle]") {
  const auto norm_sq = [](const Eigen::VectorXd& x) {
    return x.squaredNorm();
  };
  Eigen::VectorXd x(2);
  x << 1.0, 2.0;
  const Eigen::VectorXd g = oracle::finite_diff_gradient(norm_sq, x, 1e-5);
  REQUIRE_THAT(g[0], WithinAbs(2.0, 1e-8));
  REQUIRE_THAT(g[1], WithinAbs(4.0, 1e-8));

  Eigen::VectorXd w(3);
  w << 0.5, -1.5, 2.0;
  const auto linear = [&](const Eigen::VectorXd& v) { return w.dot(v); };
  const Eigen::VectorXd gl =
      oracle::finite_diff_gradient(linear, Eigen::VectorXd::Zero(3), 1e-5);
  REQUIRE((gl - w).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("brute-force advantages reduce to suffix sums", "[oracle]") {
  Eigen::VectorXd r(4), v(4);
  Eigen::VectorXi d(4);
  r << 1, 2, 3, 4;
  v.setZero();
  d.setZero();
  const Eigen::VectorXd adv =
      oracle::brute_force_returns(r, v, d, 0.0, 1.0, 1.0);
  REQUIRE_THAT(adv[0], WithinAbs(10.0, 1e-12));
  REQUIRE_THAT(adv[3], WithinAbs(4.0, 1e-12));
}

TEST_CASE("energy audit is zero on constant trajectories", "[oracle]") {
  ModelParams p = default_model_params();
  SimState s;
  s.alpha = 0.6;
  std::vector<SimState> traj(10, s);
  REQUIRE(oracle::energy_audit(p, traj) == 0.0);
}

TEST_CASE("rk4 beats explicit euler on the conservation audit", "[oracle]") {
  ModelParams p = default_model_params();
  p.dt = 1e-3;
  SimState s0;
  s0.alpha = 1.0;
  const Eigen::VectorXd u = Eigen::VectorXd::Zero(p.num_rotors());
  const int steps = 5000;

  std::vector<SimState> rk4_traj{s0};
  SimState s = s0;
  for (int i = 0; i < steps; ++i) {
    s = step_rk4(p, s, u);
    rk4_traj.push_back(s);
  }

  // test-local explicit euler over the same dynamics
  std::vector<SimState> euler_traj{s0};
  s = s0;
  for (int i = 0; i < steps; ++i) {
    const StateDerivative d = eom(p, s, Wrench{});
    s.alpha += p.dt * d.alpha_dot;
    s.beta += p.dt * d.beta_dot;
    s.alpha_dot += p.dt * d.alpha_ddot;
    s.beta_dot += p.dt * d.beta_ddot;
    Eigen::Vector4d q(s.q_WB.w(), s.q_WB.x(), s.q_WB.y(), s.q_WB.z());
    q += p.dt * d.q_dot;
    s.q_WB = Eigen::Quaterniond(q[0], q[1], q[2], q[3]).normalized();
    s.omega += p.dt * d.omega_dot;
    s.t += p.dt;
    euler_traj.push_back(s);
  }

  const double rk4_drift = oracle::energy_audit(p, rk4_traj);
  const double euler_drift = oracle::energy_audit(p, euler_traj);
  REQUIRE(rk4_drift < 1e-6);
  REQUIRE(euler_drift > rk4_drift * 100.0);
}
