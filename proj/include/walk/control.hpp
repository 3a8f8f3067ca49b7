#pragma once

#include <map>

#include "walk/estimation.hpp"

namespace walk {

/// LQR weights and synthesis tolerances for the integrator-augmented
/// tracking problem.
struct CostWeights {
  MatrixXd Q;  ///< (4+m_i) x (4+m_i), symmetric PSD
  Mat2 R;      ///< 2 x 2, symmetric PD
  int m_i = 2;
  double dare_tol = 1e-10;
  int dare_max_iter = 100000;

  static CostWeights defaults(int m_i = 2);
  void validate() const;
};

/// Discrete plant stacked with output-error integrators:
///   x_i(k+1) = x_i(k) + dt * (C_track x(k) - ref(k))
struct AugmentedSystem {
  MatrixXd A_aug;   ///< (4+m_i) x (4+m_i)
  MatrixXd B_aug;   ///< (4+m_i) x 2
  MatrixXd C_track; ///< m_i x 4 tracked-output selector
  double dt = 0.0;
};

/// State-feedback gain partitioned as [K_x | K_i].
struct GainMatrix {
  MatrixXd K;  ///< 2 x (4+m_i)
  int m_i = 0;

  MatrixXd Kx() const { return K.leftCols(4); }
  MatrixXd Ki() const { return K.rightCols(m_i); }
};

AugmentedSystem augment_with_integrator(const DiscreteSystem& dsys,
                                        const MatrixXd& C_track, double dt);

/// Solves P = A'PA - A'PB (R + B'PB)^-1 B'PA + Q by backward iteration.
///
/// Starts from P0 = Q (or warm_start when given) and iterates until the
/// successive-iterate Frobenius norm drops below tol. A stalled oscillating
/// iteration is averaged once; running out of iterations throws
/// NoConvergenceError.
MatrixXd solve_dare(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q,
                    const MatrixXd& R, double tol = 1e-10,
                    int max_iter = 100000, const MatrixXd* warm_start = nullptr);

/// Frobenius norm of the DARE fixed-point residual at P.
double dare_residual(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q,
                     const MatrixXd& R, const MatrixXd& P);

/// K = (R + B'PB)^-1 B'PA.
GainMatrix lqr_gain(const MatrixXd& A, const MatrixXd& B, const MatrixXd& R,
                    const MatrixXd& P);

double spectral_radius(const MatrixXd& M);

/// Tracking control law u = -K [x_hat - x_des ; x_i].
ControlInput control_law(const GainMatrix& K, const Vec4& x_hat,
                         const Vec4& x_des, const VectorXd& x_i);

struct LqgStep {
  ControlInput u;
  FilterState fs;
  VectorXd x_i;
  Vec4 posterior = Vec4::Zero();  ///< estimate after the measurement update
};

/// One LQG cycle: measurement update, control law, error integration,
/// prediction with the applied input.
///
/// u_ff is an optional feedforward added to the feedback law; the filter
/// predicts with the full applied input u = u_ff + u_fb.
LqgStep lqg_step(const FilterState& fs, const GainMatrix& K,
                 const DiscreteSystem& dsys, const NoiseModel& nm,
                 const VectorXd& y, const Vec4& x_des, const VectorXd& ref,
                 VectorXd x_i, const MatrixXd& C_track,
                 const ControlInput& u_ff = {}, double integrator_clamp = 10.0);

/// Everything synthesized for one natural frequency.
struct SynthesizedController {
  LinearSystem sys;
  DiscreteSystem dsys;
  AugmentedSystem aug;
  GainMatrix K;
  MatrixXd P;
};

/// Synthesizes and caches controllers for piecewise-constant omega.
///
/// Entries are keyed on omega quantized to 1e-6 absolute, finer than the
/// 1e-6 relative rebuild threshold; repeat visits within a gait cycle reuse
/// the cached synthesis. DARE solves warm-start from the previous solution.
class GainSchedule {
 public:
  GainSchedule(ModelParams model, CostWeights weights, MatrixXd C_track,
               double dt);

  const SynthesizedController& at(double omega);

  const MatrixXd& c_track() const { return c_track_; }
  std::size_t size() const { return cache_.size(); }

 private:
  ModelParams model_;
  CostWeights weights_;
  MatrixXd c_track_;
  double dt_;
  std::map<long long, SynthesizedController> cache_;
  MatrixXd last_p_;
};

/// One plane's tracking controller: gain schedule, estimator and integrator.
class PlaneController {
 public:
  PlaneController(const ModelParams& model, const CostWeights& weights,
                  const NoiseModel& nm, double dt,
                  double integrator_clamp = 10.0);

  void reset(const Vec4& x0, double p0 = 1e-6);

  /// Runs one LQG cycle at the given natural frequency and returns the
  /// applied input. The synthesized controller used is exposed through
  /// last_synth() for callers that propagate the matching plant.
  ControlInput step(double omega, const VectorXd& y, const Vec4& x_des,
                    const ControlInput& u_ff = {});

  const SynthesizedController& synth(double omega) { return sched_.at(omega); }
  const FilterState& filter() const { return fs_; }
  const VectorXd& integrator() const { return x_i_; }
  const NoiseModel& noise() const { return nm_; }
  const Vec4& posterior() const { return posterior_; }

 private:
  GainSchedule sched_;
  NoiseModel nm_;
  FilterState fs_;
  VectorXd x_i_;
  double clamp_;
  Vec4 posterior_ = Vec4::Zero();
};

}  // namespace walk
