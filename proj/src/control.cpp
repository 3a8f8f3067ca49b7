#include "walk/control.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace walk {

CostWeights CostWeights::defaults(int m_i) {
  CostWeights w;
  w.m_i = m_i;
  VectorXd q(4 + m_i);
  q << 400.0, 10.0, 50.0, 1.0, VectorXd::Constant(m_i, 5000.0);
  w.Q = q.asDiagonal();
  w.R = Eigen::Vector2d(1.0, 0.1).asDiagonal();
  return w;
}

void CostWeights::validate() const {
  if (m_i < 1 || m_i > 2) {
    throw ConfigError("CostWeights: m_i must be 1 or 2");
  }
  if (Q.rows() != 4 + m_i || Q.cols() != 4 + m_i) {
    throw ConfigError("CostWeights: Q must be (4+m_i) square");
  }
  if (!Q.isApprox(Q.transpose(), 1e-9)) {
    throw ConfigError("CostWeights: Q must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> qe(Q);
  if (qe.eigenvalues().minCoeff() < -1e-12) {
    throw ConfigError("CostWeights: Q must be positive semidefinite");
  }
  Eigen::LLT<Mat2> llt(R);
  if (llt.info() != Eigen::Success || !R.isApprox(R.transpose(), 1e-9)) {
    throw ConfigError("CostWeights: R must be symmetric positive definite");
  }
  if (!(dare_tol > 0.0) || dare_max_iter < 1) {
    throw ConfigError("CostWeights: dare_tol must be > 0, dare_max_iter >= 1");
  }
}

AugmentedSystem augment_with_integrator(const DiscreteSystem& dsys,
                                        const MatrixXd& C_track, double dt) {
  if (C_track.cols() != 4) {
    throw std::invalid_argument("augment_with_integrator: C_track must be m x 4");
  }
  const auto m = C_track.rows();
  AugmentedSystem a;
  a.A_aug = MatrixXd::Zero(4 + m, 4 + m);
  a.A_aug.topLeftCorner(4, 4) = dsys.Ad;
  a.A_aug.bottomLeftCorner(m, 4) = dt * C_track;
  a.A_aug.bottomRightCorner(m, m).setIdentity();
  a.B_aug = MatrixXd::Zero(4 + m, 2);
  a.B_aug.topRows(4) = dsys.Bd;
  a.C_track = C_track;
  a.dt = dt;
  return a;
}

namespace {

MatrixXd dare_step(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q,
                   const MatrixXd& R, const MatrixXd& P) {
  const MatrixXd BtP = B.transpose() * P;
  const MatrixXd M = R + BtP * B;
  Eigen::LDLT<MatrixXd> ldlt(M);
  if (ldlt.info() != Eigen::Success) {
    throw SingularityError("solve_dare: singular R + B'PB");
  }
  const MatrixXd K = ldlt.solve(BtP * A);
  MatrixXd Pn = A.transpose() * P * A - (BtP * A).transpose() * K + Q;
  return 0.5 * (Pn + Pn.transpose());
}

}  // namespace

MatrixXd solve_dare(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q,
                    const MatrixXd& R, double tol, int max_iter,
                    const MatrixXd* warm_start) {
  MatrixXd P = warm_start ? *warm_start : Q;
  double prev_delta = std::numeric_limits<double>::infinity();
  bool averaged = false;
  for (int it = 0; it < max_iter; ++it) {
    MatrixXd Pn = dare_step(A, B, Q, R, P);
    const double delta = (Pn - P).norm();
    if (!Pn.allFinite()) {
      throw NoConvergenceError("solve_dare: iteration diverged");
    }
    if (delta < tol) {
      return Pn;
    }
    // A stalled oscillation gets averaged once before giving up.
    if (it > 50 && delta >= prev_delta && !averaged) {
      Pn = 0.5 * (Pn + P);
      averaged = true;
    }
    prev_delta = delta;
    P = std::move(Pn);
  }
  throw NoConvergenceError("solve_dare: no convergence within max_iter");
}

double dare_residual(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q,
                     const MatrixXd& R, const MatrixXd& P) {
  return (dare_step(A, B, Q, R, P) - P).norm();
}

GainMatrix lqr_gain(const MatrixXd& A, const MatrixXd& B, const MatrixXd& R,
                    const MatrixXd& P) {
  const MatrixXd BtP = B.transpose() * P;
  const MatrixXd M = R + BtP * B;
  Eigen::LDLT<MatrixXd> ldlt(M);
  if (ldlt.info() != Eigen::Success) {
    throw SingularityError("lqr_gain: singular R + B'PB");
  }
  GainMatrix g;
  g.K = ldlt.solve(BtP * A);
  if (!g.K.allFinite()) {
    throw SingularityError("lqr_gain: non-finite gain");
  }
  g.m_i = std::max<int>(0, static_cast<int>(A.rows()) - 4);
  return g;
}

double spectral_radius(const MatrixXd& M) {
  return M.eigenvalues().cwiseAbs().maxCoeff();
}

ControlInput control_law(const GainMatrix& K, const Vec4& x_hat,
                         const Vec4& x_des, const VectorXd& x_i) {
  if (x_i.size() != K.K.cols() - 4) {
    throw std::invalid_argument("control_law: integrator dimension mismatch");
  }
  VectorXd z(K.K.cols());
  z.head(4) = x_hat - x_des;
  z.tail(x_i.size()) = x_i;
  return ControlInput::from(-(K.K * z));
}

LqgStep lqg_step(const FilterState& fs, const GainMatrix& K,
                 const DiscreteSystem& dsys, const NoiseModel& nm,
                 const VectorXd& y, const Vec4& x_des, const VectorXd& ref,
                 VectorXd x_i, const MatrixXd& C_track,
                 const ControlInput& u_ff, double integrator_clamp) {
  LqgStep out;
  const FilterState post = kf_update(fs, y, nm);
  out.posterior = post.x_hat;
  const ControlInput u_fb = control_law(K, post.x_hat, x_des, x_i);
  out.u = ControlInput{u_ff.p_x + u_fb.p_x, u_ff.thetadd_to + u_fb.thetadd_to};
  x_i += dsys.dt * (C_track * post.x_hat - ref);
  out.x_i = x_i.cwiseMax(-integrator_clamp).cwiseMin(integrator_clamp);
  out.fs = kf_predict(post, dsys, out.u, nm);
  return out;
}

GainSchedule::GainSchedule(ModelParams model, CostWeights weights,
                           MatrixXd C_track, double dt)
    : model_(std::move(model)),
      weights_(std::move(weights)),
      c_track_(std::move(C_track)),
      dt_(dt) {
  model_.validate();
  weights_.validate();
  if (c_track_.rows() != weights_.m_i) {
    throw ConfigError("GainSchedule: C_track rows must equal m_i");
  }
}

const SynthesizedController& GainSchedule::at(double omega) {
  if (!(omega > 0.0) || !std::isfinite(omega)) {
    throw std::domain_error("GainSchedule: omega must be positive");
  }
  const long long key = llround(omega * 1e6);
  auto it = cache_.find(key);
  if (it != cache_.end()) {
    return it->second;
  }
  SynthesizedController s;
  s.sys = build_two_mass_system(model_, omega);
  s.dsys = discretize(s.sys, dt_);
  s.aug = augment_with_integrator(s.dsys, c_track_, dt_);
  const MatrixXd* warm = last_p_.size() > 0 ? &last_p_ : nullptr;
  s.P = solve_dare(s.aug.A_aug, s.aug.B_aug, weights_.Q, weights_.R,
                   weights_.dare_tol, weights_.dare_max_iter, warm);
  s.K = lqr_gain(s.aug.A_aug, s.aug.B_aug, weights_.R, s.P);
  const double rho = spectral_radius(s.aug.A_aug - s.aug.B_aug * s.K.K);
  if (!(rho < 1.0)) {
    throw NoConvergenceError(
        "GainSchedule: closed loop unstable (spectral radius >= 1)");
  }
  last_p_ = s.P;
  return cache_.emplace(key, std::move(s)).first->second;
}

PlaneController::PlaneController(const ModelParams& model,
                                 const CostWeights& weights,
                                 const NoiseModel& nm, double dt,
                                 double integrator_clamp)
    : sched_(model, weights, [&] {
        // integrators track the measured outputs: positions x_c and theta_to
        MatrixXd c = MatrixXd::Zero(weights.m_i, 4);
        c(0, 0) = 1.0;
        if (weights.m_i > 1) {
          c(1, 2) = 1.0;
        }
        return c;
      }(), dt),
      nm_(nm),
      x_i_(VectorXd::Zero(weights.m_i)),
      clamp_(integrator_clamp) {
  nm_.validate();
}

void PlaneController::reset(const Vec4& x0, double p0) {
  fs_.x_hat = x0;
  fs_.P = Mat4::Identity() * p0;
  x_i_.setZero();
}

ControlInput PlaneController::step(double omega, const VectorXd& y,
                                   const Vec4& x_des, const ControlInput& u_ff) {
  const SynthesizedController& s = sched_.at(omega);
  const VectorXd ref = sched_.c_track() * x_des;
  LqgStep r = lqg_step(fs_, s.K, s.dsys, nm_, y, x_des, ref, x_i_,
                       sched_.c_track(), u_ff, clamp_);
  fs_ = r.fs;
  x_i_ = r.x_i;
  posterior_ = r.posterior;
  return r.u;
}

}  // namespace walk
