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
#include <stdexcept>
#include <utility>

#include "swingup/model.hpp"

namespace swingup {

/// Outer-loop setpoint written by the policy (or a script) and tracked by
/// the swing controller.
struct TaskReference {
  double alpha_ref = 0.0;
  double beta_ref = 0.0;
  double alpha_dot_ref = 0.0;
  double beta_dot_ref = 0.0;
  double yaw_ref = 0.0;

  void validate(double beta_limit) const {
    if (!(std::isfinite(alpha_ref) && std::isfinite(beta_ref) &&
          std::isfinite(alpha_dot_ref) && std::isfinite(beta_dot_ref) &&
          std::isfinite(yaw_ref)))
      throw std::invalid_argument("reference: non-finite entry");
    if (!(std::abs(beta_ref) < beta_limit))
      throw std::invalid_argument("reference: |beta_ref| must be < beta_limit");
  }
};

struct Gains {
  double kp_sw = 6.0;   // 1/s^2
  double kd_sw = 4.0;   // 1/s
  double kp_att = 10.0; // N m / rad
  double kd_att = 2.0;  // N m s / rad

  void validate() const {
    if (kp_sw < 0 || kd_sw < 0 || kp_att < 0 || kd_att < 0)
      throw std::invalid_argument("gains: must be non-negative");
    if (kp_att > 0 && !(kd_att > 0))
      throw std::invalid_argument("gains: attitude loop needs kd_att > 0");
  }
};

inline Gains default_gains() { return Gains{}; }

struct RotorCommand {
  Eigen::VectorXd u;
};

/// Allocation outcome: clamped thrusts, the wrench they actually produce,
/// and the body-frame residual against the demand.
struct AllocationReport {
  RotorCommand command;
  Wrench achieved;
  bool saturated = false;
  double residual = 0.0;
};

/// Damping ratio of the linearized closed swing loop at the hanging
/// configuration; the outer PD acts alongside the pendulum's own stiffness.
inline double swing_design_damping_ratio(const ModelParams& params,
                                         const Gains& gains) {
  return gains.kd_sw / (2.0 * std::sqrt(gains.kp_sw + params.g / params.L));
}

/// Outer swing loop: PD in (alpha, beta) mapped through the swing Jacobian
/// so that the commanded generalized acceleration is realized exactly when
/// unsaturated. The returned world force has no component along the cable.
inline Eigen::Vector3d swing_outer_loop(const ModelParams& params,
                                        const Gains& gains,
                                        const SimState& state,
                                        const TaskReference& ref) {
  const Eigen::Vector2d v(
      gains.kp_sw * (ref.alpha_ref - state.alpha) +
          gains.kd_sw * (ref.alpha_dot_ref - state.alpha_dot),
      gains.kp_sw * (ref.beta_ref - state.beta) +
          gains.kd_sw * (ref.beta_dot_ref - state.beta_dot));
  const Eigen::Matrix<double, 3, 2> jd =
      cable_direction_jacobian(state.alpha, state.beta);
  return params.m * params.L * (jd * v);
}

/// Error quaternion against a pure-yaw reference, scalar part forced
/// non-negative so the torque command takes the shortest rotation.
inline Eigen::Quaterniond attitude_error(const Eigen::Quaterniond& q_WB,
                                         double yaw_ref) {
  const Eigen::Quaterniond q_ref(
      Eigen::AngleAxisd(yaw_ref, Eigen::Vector3d::UnitZ()));
  Eigen::Quaterniond q_e = q_ref.conjugate() * q_WB.normalized();
  if (q_e.w() < 0.0) q_e.coeffs() = -q_e.coeffs();
  return q_e;
}

/// Inner attitude loop: quaternion PD holding the platform level at the
/// commanded heading.
inline Eigen::Vector3d attitude_inner_loop(const Gains& gains,
                                           const Eigen::Quaterniond& q_WB,
                                           const Eigen::Vector3d& omega,
                                           double yaw_ref) {
  const Eigen::Quaterniond q_e = attitude_error(q_WB, yaw_ref);
  return -gains.kp_att * q_e.vec() - gains.kd_att * omega;
}

/// 6xN thrust-to-wrench map in the body frame; column i stacks the force
/// direction over the torque arm of rotor i.
inline Eigen::MatrixXd allocation_matrix(const ModelParams& params) {
  const int n = params.num_rotors();
  Eigen::MatrixXd B(6, n);
  for (int i = 0; i < n; ++i) {
    const Rotor& r = params.rotors[i];
    B.col(i).head<3>() = r.axis;
    B.col(i).tail<3>() = r.pos.cross(r.axis) + r.kappa * r.spin * r.axis;
  }
  if (Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(B).rank() < 6)
    throw std::invalid_argument(
        "allocation: rotor layout is rank-deficient (< 6)");
  return B;
}

/// Damped least-squares thrust allocator with componentwise clamping.
///
/// The damped normal equations are factored once at construction; solves are
/// refined twice so the pre-clamp solution matches the exact least-squares
/// answer to well below the 1e-6 residual contract even though eps > 0.
///
/// Rotors only push, so the signed least-squares solution is shifted by the
/// smallest multiple of a strictly positive null-space direction that makes
/// every thrust nonnegative. The shift leaves the achieved wrench untouched,
/// vanishes for a zero demand, and keeps moderate demands in any direction
/// away from the clamp.
class Allocator {
 public:
  static constexpr double kDamping = 1e-6;

  explicit Allocator(const ModelParams& params)
      : params_(params), B_(allocation_matrix(params)) {
    const int n = params_.num_rotors();
    llt_.compute(B_.transpose() * B_ +
                 kDamping * Eigen::MatrixXd::Identity(n, n));
    // Positive null direction: all-ones projected onto null(B). Layouts
    // without one (e.g. unopposed rotors) fall back to the raw solution.
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    Eigen::LDLT<Eigen::MatrixXd> gram((B_ * B_.transpose()).eval());
    null_bias_ = ones - B_.transpose() * gram.solve(B_ * ones);
    has_positive_null_ = null_bias_.minCoeff() > 1e-6;
  }

  const Eigen::MatrixXd& matrix() const { return B_; }
  const Eigen::VectorXd& null_bias() const { return null_bias_; }

  /// Pre-clamp thrust solution (least squares plus nonnegativity shift).
  Eigen::VectorXd solve_unclamped(const Eigen::Matrix<double, 6, 1>& w) const {
    Eigen::VectorXd u = llt_.solve(B_.transpose() * w);
    for (int pass = 0; pass < 2; ++pass) {
      const Eigen::Matrix<double, 6, 1> r = w - B_ * u;
      u += llt_.solve(B_.transpose() * r);
    }
    if (has_positive_null_) {
      double shift = 0.0;
      for (int i = 0; i < u.size(); ++i)
        shift = std::max(shift, -u[i] / null_bias_[i]);
      if (shift > 0.0) u += shift * null_bias_;
    }
    return u;
  }

  Eigen::Matrix<double, 6, 1> body_wrench(const Eigen::Quaterniond& q_WB,
                                          const Wrench& desired) const {
    Eigen::Matrix<double, 6, 1> w;
    w.head<3>() = q_WB.normalized().conjugate() * desired.force;
    w.tail<3>() = desired.torque;
    return w;
  }

  AllocationReport allocate(const Eigen::Quaterniond& q_WB,
                            const Wrench& desired) const {
    if (!desired.finite())
      throw std::invalid_argument("allocate: non-finite wrench demand");
    const Eigen::Matrix<double, 6, 1> w = body_wrench(q_WB, desired);
    Eigen::VectorXd u = solve_unclamped(w);

    AllocationReport report;
    report.saturated = false;
    for (int i = 0; i < u.size(); ++i) {
      const double hi = params_.rotors[i].u_max;
      const double tol = 1e-9 * hi;  // roundoff from the null shift
      const double clamped = std::min(std::max(u[i], 0.0), hi);
      if (std::abs(clamped - u[i]) > tol) report.saturated = true;
      u[i] = clamped;
    }
    report.command.u = u;
    report.residual = (B_ * u - w).norm();
    report.achieved = rotor_wrench(params_, q_WB, u);
    return report;
  }

 private:
  ModelParams params_;
  Eigen::MatrixXd B_;
  Eigen::LDLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd null_bias_;
  bool has_positive_null_ = false;
};

/// Both control loops plus allocation, precomputed for the inner-loop rate.
class Controller {
 public:
  Controller(const ModelParams& params, const Gains& gains)
      : params_(params), gains_(gains), allocator_(params) {
    gains.validate();
  }

  std::pair<RotorCommand, AllocationReport> step(
      const SimState& state, const TaskReference& ref) const {
    Wrench desired;
    desired.force = swing_outer_loop(params_, gains_, state, ref);
    desired.torque =
        attitude_inner_loop(gains_, state.q_WB, state.omega, ref.yaw_ref);
    AllocationReport report = allocator_.allocate(state.q_WB, desired);
    return {report.command, report};
  }

  const Allocator& allocator() const { return allocator_; }
  const ModelParams& params() const { return params_; }
  const Gains& gains() const { return gains_; }

 private:
  ModelParams params_;
  Gains gains_;
  Allocator allocator_;
};

/// One-shot convenience wrapper; hot paths should hold a Controller.
inline std::pair<RotorCommand, AllocationReport> controller_step(
    const ModelParams& params, const Gains& gains, const SimState& state,
    const TaskReference& ref) {
  return Controller(params, gains).step(state, ref);
}

}  // namespace swingup
