#include "walk/estimation.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace walk {

NoiseModel NoiseModel::full_state(double q_proc, double r_pos, double r_vel,
                                  double r_theta, double r_thetad) {
  NoiseModel nm;
  nm.C = MatrixXd::Identity(4, 4);
  nm.Q_proc = Mat4::Identity() * q_proc;
  nm.R_meas = Vec4(r_pos, r_vel, r_theta, r_thetad).asDiagonal();
  return nm;
}

NoiseModel NoiseModel::positions(double q_proc, double r_pos, double r_theta) {
  NoiseModel nm;
  nm.C = MatrixXd::Zero(2, 4);
  nm.C(0, 0) = 1.0;
  nm.C(1, 2) = 1.0;
  nm.Q_proc = Mat4::Identity() * q_proc;
  nm.R_meas = Eigen::Vector2d(r_pos, r_theta).asDiagonal();
  return nm;
}

void NoiseModel::validate() const {
  if (C.cols() != 4 || C.rows() < 1) {
    throw ConfigError("NoiseModel: C must be m x 4 with m >= 1");
  }
  if (R_meas.rows() != C.rows() || R_meas.cols() != C.rows()) {
    throw ConfigError("NoiseModel: R_meas must be m x m");
  }
  if (!Q_proc.isApprox(Q_proc.transpose(), 1e-9)) {
    throw ConfigError("NoiseModel: Q_proc must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat4> qe(Q_proc);
  if (qe.eigenvalues().minCoeff() < -1e-12) {
    throw ConfigError("NoiseModel: Q_proc must be positive semidefinite");
  }
  Eigen::LLT<MatrixXd> llt(R_meas);
  if (llt.info() != Eigen::Success) {
    throw ConfigError("NoiseModel: R_meas must be positive definite");
  }
}

FilterState kf_predict(const FilterState& fs, const DiscreteSystem& dsys,
                       const ControlInput& u, const NoiseModel& nm) {
  FilterState out;
  out.x_hat = dsys.Ad * fs.x_hat + dsys.Bd * u.vec();
  Mat4 P = dsys.Ad * fs.P * dsys.Ad.transpose() + nm.Q_proc;
  out.P = 0.5 * (P + P.transpose());
  return out;
}

FilterState kf_update(const FilterState& fs, const VectorXd& y,
                      const NoiseModel& nm) {
  if (y.size() != nm.C.rows()) {
    throw std::invalid_argument("kf_update: measurement dimension mismatch");
  }
  const MatrixXd S = nm.C * fs.P * nm.C.transpose() + nm.R_meas;
  Eigen::LLT<MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) {
    throw SingularityError("kf_update: singular innovation covariance");
  }
  // K = P C' S^-1 computed as the solution of S K' = C P
  const MatrixXd K = llt.solve(nm.C * fs.P).transpose();
  if (!K.allFinite()) {
    throw SingularityError("kf_update: non-finite Kalman gain");
  }
  FilterState out;
  out.x_hat = fs.x_hat + K * (y - nm.C * fs.x_hat);
  const Mat4 IKC = Mat4::Identity() - K * nm.C;
  Mat4 P = IKC * fs.P * IKC.transpose() + K * nm.R_meas * K.transpose();
  out.P = 0.5 * (P + P.transpose());
  return out;
}

}  // namespace walk
