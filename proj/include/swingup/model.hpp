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
#include <Eigen/Geometry>
#include <cassert>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace swingup {

/// One thrust unit: position and axis in the body frame, drag-to-thrust
/// moment ratio, spin direction, and the thrust ceiling.
struct Rotor {
  Eigen::Vector3d pos = Eigen::Vector3d::Zero();   // m
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ(); // unit
  double kappa = 0.0;                              // m
  int spin = 1;                                    // +1 or -1
  double u_max = 1.0;                              // N
};

/// Physical constants of the cable-suspended platform.
///
/// The platform is a rigid body of mass m hanging from a massless rigid rod
/// of length L attached at the body's center of mass through a frictionless
/// spherical joint; the anchor is fixed at the world origin. Swing is
/// parameterized by two angles (alpha, beta); attitude is a free rigid-body
/// rotation driven by rotor torque only.
struct ModelParams {
  double g = 9.81;                                  // m/s^2
  double L = 2.0;                                   // m
  double m = 5.0;                                   // kg
  Eigen::Matrix3d J =
      Eigen::Vector3d(0.4, 0.4, 0.6).asDiagonal();  // kg m^2
  std::vector<Rotor> rotors;
  double dt = 2e-3;                                 // s
  double beta_limit = 1.4;                          // rad

  void validate() const {
    if (!(g > 0.0)) throw std::invalid_argument("model: g must be > 0");
    if (!(L > 0.0)) throw std::invalid_argument("model: L must be > 0");
    if (!(m > 0.0)) throw std::invalid_argument("model: m must be > 0");
    if (!(dt > 0.0 && dt <= 0.005))
      throw std::invalid_argument("model: dt must be in (0, 0.005]");
    if (!(beta_limit > 0.0 && beta_limit < std::numbers::pi / 2))
      throw std::invalid_argument("model: beta_limit must be in (0, pi/2)");
    if ((J - J.transpose()).cwiseAbs().maxCoeff() > 1e-12)
      throw std::invalid_argument("model: J must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(J);
    if (es.eigenvalues().minCoeff() <= 0.0)
      throw std::invalid_argument("model: J must be positive-definite");
    if (rotors.empty()) throw std::invalid_argument("model: no rotors");
    for (const Rotor& r : rotors) {
      if (std::abs(r.axis.norm() - 1.0) > 1e-12)
        throw std::invalid_argument("model: rotor axis must be unit norm");
      if (r.spin != 1 && r.spin != -1)
        throw std::invalid_argument("model: rotor spin must be +1 or -1");
      if (!(r.u_max > 0.0))
        throw std::invalid_argument("model: rotor u_max must be > 0");
      if (!r.pos.allFinite() || !std::isfinite(r.kappa))
        throw std::invalid_argument("model: rotor entries must be finite");
    }
  }

  int num_rotors() const { return static_cast<int>(rotors.size()); }
};

/// Fully-actuated 8-rotor layout: four thrust axes tilted 45 degrees,
/// alternating between up-tilted and down-tilted around a 0.35 m-radius
/// octagon, each axis carried by the two rotors on diametrically opposite
/// vertices. Up/down alternation gives the allocator authority in every
/// force and torque direction with nonnegative thrusts.
inline std::vector<Rotor> default_rotor_layout() {
  constexpr double kRadius = 0.35;
  constexpr double kUMax = 8.0;
  constexpr double kKappa = 0.01;
  const double c = std::numbers::sqrt2 / 2.0;
  std::vector<Rotor> rotors(8);
  for (int i = 0; i < 8; ++i) {
    const double theta = std::numbers::pi / 4.0 * i;
    const double psi = std::numbers::pi / 2.0 * (i % 4);
    const double zsign = (i % 2 == 0) ? 1.0 : -1.0;
    Rotor& r = rotors[i];
    r.pos = kRadius * Eigen::Vector3d(std::cos(theta), std::sin(theta), 0.0);
    r.axis = Eigen::Vector3d(c * std::cos(psi), c * std::sin(psi), zsign * c);
    r.kappa = kKappa;
    r.spin = (i % 2 == 0) ? 1 : -1;
    r.u_max = kUMax;
  }
  return rotors;
}

inline ModelParams default_model_params() {
  ModelParams p;
  p.rotors = default_rotor_layout();
  return p;
}

/// Swing angles/rates plus platform attitude and body rates.
struct SimState {
  double alpha = 0.0;      // rad
  double beta = 0.0;       // rad
  double alpha_dot = 0.0;  // rad/s
  double beta_dot = 0.0;   // rad/s
  Eigen::Quaterniond q_WB = Eigen::Quaterniond::Identity();
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();  // rad/s, body frame
  double t = 0.0;                                   // s

  bool finite() const {
    return std::isfinite(alpha) && std::isfinite(beta) &&
           std::isfinite(alpha_dot) && std::isfinite(beta_dot) &&
           q_WB.coeffs().allFinite() && omega.allFinite() && std::isfinite(t);
  }
};

/// Net actuation wrench: force in the world frame, torque in the body frame.
struct Wrench {
  Eigen::Vector3d force = Eigen::Vector3d::Zero();   // N, world
  Eigen::Vector3d torque = Eigen::Vector3d::Zero();  // N m, body

  bool finite() const { return force.allFinite() && torque.allFinite(); }
};

/// Time derivative of SimState (quaternion rate kept as a raw 4-vector,
/// w x y z, prior to renormalization).
struct StateDerivative {
  double alpha_dot = 0.0;
  double beta_dot = 0.0;
  double alpha_ddot = 0.0;
  double beta_ddot = 0.0;
  Eigen::Vector4d q_dot = Eigen::Vector4d::Zero();
  Eigen::Vector3d omega_dot = Eigen::Vector3d::Zero();
};

/// Unit vector from anchor toward the platform. (0,0) maps to straight down.
inline Eigen::Vector3d cable_direction(double alpha, double beta) {
  return {std::sin(beta), -std::sin(alpha) * std::cos(beta),
          -std::cos(alpha) * std::cos(beta)};
}

/// Columns are d(cable_direction)/d(alpha) and d(cable_direction)/d(beta).
inline Eigen::Matrix<double, 3, 2> cable_direction_jacobian(double alpha,
                                                            double beta) {
  const double sa = std::sin(alpha), ca = std::cos(alpha);
  const double sb = std::sin(beta), cb = std::cos(beta);
  Eigen::Matrix<double, 3, 2> jd;
  jd.col(0) << 0.0, -ca * cb, sa * cb;
  jd.col(1) << cb, sa * sb, ca * sb;
  return jd;
}

/// d(bob_position)/d(alpha, beta), i.e. L times the direction Jacobian.
inline Eigen::Matrix<double, 3, 2> swing_jacobian(const ModelParams& params,
                                                  double alpha, double beta) {
  return params.L * cable_direction_jacobian(alpha, beta);
}

inline Eigen::Vector3d bob_position(const ModelParams& params,
                                    const SimState& state) {
  return params.L * cable_direction(state.alpha, state.beta);
}

/// Generalized mass matrix of the swing coordinates, m L^2 Jd^T Jd. Each
/// unique Gram entry is computed once so the result is symmetric exactly.
inline Eigen::Matrix2d mass_matrix(const ModelParams& params, double alpha,
                                   double beta) {
  const Eigen::Matrix<double, 3, 2> jd = cable_direction_jacobian(alpha, beta);
  const double scale = params.m * params.L * params.L;
  const double gaa = jd.col(0).squaredNorm();
  const double gbb = jd.col(1).squaredNorm();
  const double gab = jd.col(0).dot(jd.col(1));
  Eigen::Matrix2d M;
  M << scale * gaa, scale * gab, scale * gab, scale * gbb;
  return M;
}

/// Maps per-rotor thrusts to the net wrench at the given attitude. Thrusts
/// outside [0, u_max] indicate an allocation bug upstream and are rejected.
inline Wrench rotor_wrench(const ModelParams& params,
                           const Eigen::Quaterniond& q_WB,
                           const Eigen::VectorXd& u) {
  if (u.size() != params.num_rotors())
    throw std::invalid_argument("rotor_wrench: thrust vector has wrong size");
  Eigen::Vector3d f_body = Eigen::Vector3d::Zero();
  Eigen::Vector3d tau = Eigen::Vector3d::Zero();
  for (int i = 0; i < params.num_rotors(); ++i) {
    const Rotor& r = params.rotors[i];
    if (!(u[i] >= 0.0 && u[i] <= r.u_max))
      throw std::invalid_argument("rotor_wrench: thrust out of [0, u_max]");
    f_body += u[i] * r.axis;
    tau += u[i] * (r.pos.cross(r.axis) + r.kappa * r.spin * r.axis);
  }
  Wrench w;
  w.force = q_WB.normalized() * f_body;
  w.torque = tau;
  return w;
}

/// Continuous-time equations of motion under an external wrench.
///
/// Swing: M(q) qdd + C(q, qd) qd + G(q) = Jac(q)^T F with q = (alpha, beta),
/// with M diagonal in this chart. Attitude: quaternion kinematics plus Euler's
/// equation about the center of mass, decoupled from the swing because the rod
/// joint passes through it.
inline StateDerivative eom(const ModelParams& params, const SimState& state,
                           const Wrench& wrench) {
  assert(std::abs(state.beta) < params.beta_limit);
  if (!wrench.finite()) throw std::invalid_argument("eom: non-finite wrench");
  const double sa = std::sin(state.alpha), ca = std::cos(state.alpha);
  const double sb = std::sin(state.beta), cb = std::cos(state.beta);
  if (std::abs(state.beta) >= std::numbers::pi / 2 || cb * cb < 1e-12)
    throw std::domain_error("eom: singular mass matrix at |beta| >= pi/2");

  const double mLL = params.m * params.L * params.L;
  const double mgL = params.m * params.g * params.L;
  const Eigen::Matrix<double, 3, 2> jac =
      swing_jacobian(params, state.alpha, state.beta);
  const Eigen::Vector2d gen_force = jac.transpose() * wrench.force;

  // Coriolis/centrifugal and gravity terms from the Lagrangian of a point
  // mass on the rod.
  const double rhs_alpha = gen_force[0] +
                           2.0 * mLL * cb * sb * state.alpha_dot * state.beta_dot -
                           mgL * sa * cb;
  const double rhs_beta = gen_force[1] -
                          mLL * cb * sb * state.alpha_dot * state.alpha_dot -
                          mgL * ca * sb;

  StateDerivative d;
  d.alpha_dot = state.alpha_dot;
  d.beta_dot = state.beta_dot;
  d.alpha_ddot = rhs_alpha / (mLL * cb * cb);
  d.beta_ddot = rhs_beta / mLL;

  const Eigen::Quaterniond omega_q(0.0, state.omega.x(), state.omega.y(),
                                   state.omega.z());
  const Eigen::Quaterniond qd = state.q_WB * omega_q;
  d.q_dot << 0.5 * qd.w(), 0.5 * qd.x(), 0.5 * qd.y(), 0.5 * qd.z();
  d.omega_dot = params.J.ldlt().solve(
      wrench.torque - state.omega.cross(params.J * state.omega));
  return d;
}

namespace detail {

using StateVec = Eigen::Matrix<double, 11, 1>;

inline StateVec pack(const SimState& s) {
  StateVec y;
  y << s.alpha, s.beta, s.alpha_dot, s.beta_dot, s.q_WB.w(), s.q_WB.x(),
      s.q_WB.y(), s.q_WB.z(), s.omega.x(), s.omega.y(), s.omega.z();
  return y;
}

inline SimState unpack(const StateVec& y, double t) {
  SimState s;
  s.alpha = y[0];
  s.beta = y[1];
  s.alpha_dot = y[2];
  s.beta_dot = y[3];
  s.q_WB = Eigen::Quaterniond(y[4], y[5], y[6], y[7]);
  s.omega << y[8], y[9], y[10];
  s.t = t;
  return s;
}

inline StateVec pack_derivative(const StateDerivative& d) {
  StateVec y;
  y << d.alpha_dot, d.beta_dot, d.alpha_ddot, d.beta_ddot, d.q_dot[0],
      d.q_dot[1], d.q_dot[2], d.q_dot[3], d.omega_dot.x(), d.omega_dot.y(),
      d.omega_dot.z();
  return y;
}

// Classical RK4 over the packed state; WrenchFn evaluates the wrench at each
// stage state (zero-order hold on thrust, force re-rotated by the stage
// attitude). Quaternion renormalized once after the step.
template <typename WrenchFn>
SimState rk4(const ModelParams& params, const SimState& state, WrenchFn&& w) {
  const double h = params.dt;
  const StateVec y0 = pack(state);
  const auto f = [&](const StateVec& y) {
    const SimState s = unpack(y, state.t);
    return pack_derivative(eom(params, s, w(s)));
  };
  const StateVec k1 = f(y0);
  const StateVec k2 = f(y0 + 0.5 * h * k1);
  const StateVec k3 = f(y0 + 0.5 * h * k2);
  const StateVec k4 = f(y0 + h * k3);
  StateVec y1 = y0 + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  SimState next = unpack(y1, state.t + h);
  next.q_WB.normalize();
  if (!next.finite()) throw std::runtime_error("step_rk4: non-finite state");
  return next;
}

}  // namespace detail

/// One fixed-step RK4 step under constant thrusts u.
inline SimState step_rk4(const ModelParams& params, const SimState& state,
                         const Eigen::VectorXd& u) {
  return detail::rk4(params, state, [&](const SimState& s) {
    return rotor_wrench(params, s.q_WB, u);
  });
}

/// One fixed-step RK4 step under a fixed body-torque / world-force wrench.
/// Used by torque-level simulations and tests that bypass the allocator.
inline SimState step_rk4_wrench(const ModelParams& params,
                                const SimState& state, const Wrench& wrench) {
  return detail::rk4(params, state, [&](const SimState&) { return wrench; });
}

/// Swing kinetic + rotational kinetic + potential energy, zero at rest.
inline double total_energy(const ModelParams& params, const SimState& state) {
  const Eigen::Vector2d qd(state.alpha_dot, state.beta_dot);
  const Eigen::Matrix2d M = mass_matrix(params, state.alpha, state.beta);
  const double swing_kinetic = 0.5 * qd.dot(M * qd);
  const double rot_kinetic = 0.5 * state.omega.dot(params.J * state.omega);
  const double potential =
      params.m * params.g * params.L *
      (1.0 - std::cos(state.alpha) * std::cos(state.beta));
  return swing_kinetic + rot_kinetic + potential;
}

/// Swing-only part of the energy (pendulum kinetic + potential), the
/// quantity pumped by a swing-up maneuver.
inline double swing_energy(const ModelParams& params, const SimState& state) {
  const Eigen::Vector2d qd(state.alpha_dot, state.beta_dot);
  const Eigen::Matrix2d M = mass_matrix(params, state.alpha, state.beta);
  return 0.5 * qd.dot(M * qd) +
         params.m * params.g * params.L *
             (1.0 - std::cos(state.alpha) * std::cos(state.beta));
}

}  // namespace swingup
