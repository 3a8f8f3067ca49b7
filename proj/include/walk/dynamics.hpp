#pragma once

#include <span>
#include <utility>

#include "walk/core.hpp"

namespace walk {

/// Physical parameters of the two-mass pendulum model.
///
/// m_to == 0 selects the single-mass reduction used for the frontal plane.
struct ModelParams {
  double m_c = 3.0;        ///< lower-body mass [kg]
  double m_to = 1.5;       ///< torso mass [kg]
  double l = 0.17;         ///< torso rod length [m]
  double z_c = 0.23;       ///< lower-body COM height baseline z0 [m]
  double z_to = 0.40;      ///< torso height [m]
  double A_z = 0.0;        ///< vertical COM oscillation amplitude [m]
  double phi = 0.0;        ///< vertical oscillation phase shift [rad]
  double g = 9.81;         ///< gravity [m/s^2]
  double step_time = 0.4;  ///< vertical oscillation period, T_ss + T_ds [s]

  /// Throws ConfigError when a field is out of its valid range.
  void validate() const;

  /// Copy with the torso mass removed (frontal-plane reduction).
  ModelParams single_mass() const {
    ModelParams p = *this;
    p.m_to = 0.0;
    return p;
  }
};

/// Planar pendulum state [x_c, xd_c, theta_to, thetad_to].
struct PendulumState {
  double x_c = 0.0;
  double xd_c = 0.0;
  double theta_to = 0.0;
  double thetad_to = 0.0;

  Vec4 vec() const { return Vec4(x_c, xd_c, theta_to, thetad_to); }
  static PendulumState from(const Vec4& v) { return {v[0], v[1], v[2], v[3]}; }
};

/// Control input [p_x, thetadd_to]: commanded ZMP and torso angular acceleration.
struct ControlInput {
  double p_x = 0.0;
  double thetadd_to = 0.0;

  Vec2 vec() const { return Vec2(p_x, thetadd_to); }
  static ControlInput from(const Vec2& v) { return {v[0], v[1]}; }
};

/// Continuous-time two-mass state space xdot = A x + B u.
struct LinearSystem {
  Mat4 A;
  Mat42 B;
  double alpha = 0.0;  ///< m_to / m_c
  double beta = 0.0;   ///< z_to / z_c
  double mu = 0.0;     ///< (1+alpha)/(1+alpha*beta) * omega^2
  double omega = 0.0;
};

/// Zero-order-hold discretization of a LinearSystem.
struct DiscreteSystem {
  Mat4 Ad;
  Mat42 Bd;
  double dt = 0.0;
};

/// Pendulum natural frequency sqrt((g + zdd) / z).
///
/// zdd = -g (free fall) yields 0. Throws std::domain_error for z <= 0 or
/// g + zdd < 0.
double natural_frequency(double z, double zdd, double g);

/// Vertical COM height z0 + A_z * cos(2*pi*t/step_time + phi).
double com_height(double t, const ModelParams& p);

/// Analytic second derivative of com_height.
double com_height_accel(double t, const ModelParams& p);

/// Horizontal COM acceleration omega^2 * (x_c - p_x).
double lipm_accel(double x_c, double p_x, double omega);

/// Multibody ZMP along one horizontal axis.
///
/// p = [sum m_k x_k (zdd_k + g) - sum m_k z_k xdd_k] / [sum m_k (zdd_k + g)]
double zmp_multibody(std::span<const double> masses, std::span<const double> x,
                     std::span<const double> z, std::span<const double> xdd,
                     std::span<const double> zdd, double g);

/// Assembles the two-mass state matrices for a given natural frequency.
LinearSystem build_two_mass_system(const ModelParams& p, double omega);

/// Generic ZOH discretization via the augmented-matrix exponential.
std::pair<MatrixXd, MatrixXd> discretize(const MatrixXd& A, const MatrixXd& B,
                                         double dt);

DiscreteSystem discretize(const LinearSystem& sys, double dt);

/// One discrete propagation step x' = Ad x + Bd u.
PendulumState step_dynamics(const DiscreteSystem& d, const PendulumState& x,
                            const ControlInput& u);

}  // namespace walk
