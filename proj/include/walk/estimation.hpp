#pragma once

#include "walk/dynamics.hpp"

namespace walk {

/// Measurement model and noise covariances for the state estimator.
struct NoiseModel {
  MatrixXd C;       ///< m x 4 measurement matrix
  Mat4 Q_proc;      ///< process-noise covariance
  MatrixXd R_meas;  ///< m x m measurement-noise covariance

  /// All four states observable but noisy (the default).
  static NoiseModel full_state(double q_proc = 1e-8, double r_pos = 1e-4,
                               double r_vel = 1e-4, double r_theta = 1e-4,
                               double r_thetad = 1e-4);

  /// Position-only measurements (x_c and theta_to); velocities estimated.
  static NoiseModel positions(double q_proc = 1e-8, double r_pos = 1e-4,
                              double r_theta = 1e-4);

  void validate() const;
};

/// State estimate and covariance.
struct FilterState {
  Vec4 x_hat = Vec4::Zero();
  Mat4 P = Mat4::Identity() * 1e-6;
};

/// Kalman prediction: propagates the estimate through the plant model.
FilterState kf_predict(const FilterState& fs, const DiscreteSystem& dsys,
                       const ControlInput& u, const NoiseModel& nm);

/// Kalman measurement update (Joseph-form covariance, symmetrized).
FilterState kf_update(const FilterState& fs, const VectorXd& y,
                      const NoiseModel& nm);

}  // namespace walk
