#pragma once

#include <iosfwd>
#include <vector>

#include "walk/dynamics.hpp"

namespace walk {

/// One step's displacement command.
struct StepCommand {
  double L_sx = 0.0;      ///< step length [m]
  double L_sy = 0.0;      ///< step width offset [m]
  double L_stheta = 0.0;  ///< step rotation [rad]
  double T_ss = 0.4;      ///< single-support duration [s]
  double T_ds = 0.0;      ///< double-support duration [s]
};

struct StepConstraints {
  double max_step_length = 0.12;
  double max_step_width = 0.05;
  double max_step_rotation = 0.3;
};

/// Clamps a command into the constraint box; sets *clamped when it changed.
StepCommand clamp_command(StepCommand cmd, const StepConstraints& c,
                          bool* clamped = nullptr);

struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
};

struct Footstep {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  Side side = Side::Left;

  Vec2 pos() const { return Vec2(x, y); }
};

struct FootstepPlan {
  std::vector<Footstep> steps;
  double lateral_separation = 0.10;
  bool clamped = false;  ///< the command was clamped to the constraints
};

/// Advances the body pose by one step command and places the swing foot
/// at the body's lateral offset. Shared between the batch planner and the
/// walk engine so both produce identical geometry.
Footstep advance_footstep(Pose2& body, Side swing, const StepCommand& cmd,
                          double lateral_separation);

/// Generates n_steps placements from a constant command. The body path turns
/// by L_stheta per step and translates by (L_sx, L_sy) in the rotated frame;
/// feet sit at +/- lateral_separation/2 from the body path.
FootstepPlan plan_footsteps(const StepCommand& cmd, int n_steps,
                            const Pose2& start, const StepConstraints& c,
                            double lateral_separation = 0.10,
                            Side first_swing = Side::Left);

/// Piecewise ZMP reference within step i:
/// the support point for t < T_ss, then a linear blend of length (L_sx, L_sy)
/// over the double-support window. steps[i] acts as the support placement f_i.
Vec2 zmp_reference(const FootstepPlan& plan, const StepCommand& cmd, double t,
                   int i);

struct SwingSpec {
  double z_swing = 0.03;  ///< apex height [m]
  Vec3 start = Vec3::Zero();
  Vec3 target = Vec3::Zero();
};

/// Cubic-spline swing-foot position at time t in [0, T_ss].
///
/// x and y interpolate (start, midpoint, target) with natural end conditions;
/// z interpolates (0, z_swing, 0) with clamped zero end slopes so liftoff and
/// touchdown are flat.
Vec3 swing_trajectory(const SwingSpec& spec, double t, double T_ss);

struct SinusoidSpec {
  double A_z = 0.0;    ///< COM height amplitude [m]
  double phi = 0.0;    ///< COM height phase [rad]
  double A_to = 0.0;   ///< torso oscillation amplitude [rad]
  double TI_to = 0.0;  ///< constant torso inclination [rad]
  double A_arm = 0.0;  ///< arm swing amplitude [rad]
};

struct SinusoidSample {
  double z_com = 0.0;
  double theta_to = 0.0;
  double arm = 0.0;
};

/// The three global sinusoids: COM height, torso angle, arm swing
/// (arms run in counter-phase).
SinusoidSample sinusoid_trajectories(const SinusoidSpec& spec, double t,
                                     double step_time, double z_0);

/// Analytic LIPM COM trajectory through (t_0, x_0) and (t_f, x_f) over a
/// constant ZMP:
///   x(t) = r + [(r - x_f) sinh(w(t-t_0)) + (x_0 - r) sinh(w(t-t_f))]
///            / sinh(w(t_0-t_f))
double com_trajectory(double r_zmp, double x_0, double x_f, double t_0,
                      double t_f, double omega, double t);

/// Analytic time derivative of com_trajectory.
double com_trajectory_vel(double r_zmp, double x_0, double x_f, double t_0,
                          double t_f, double omega, double t);

/// Step-end COM target: midpoint of consecutive support placements.
double step_boundary_target(double f_i, double f_inext);

/// One row of a reference trace.
struct ReferenceSample {
  double t = 0.0;
  double r_zmp_x = 0.0, r_zmp_y = 0.0;
  double com_x = 0.0, com_y = 0.0;
  double z_com = 0.0;
  double swing_x = 0.0, swing_y = 0.0, swing_z = 0.0;
  double theta_to = 0.0;
};

/// Open-loop rollout of the full reference hierarchy over a footstep plan,
/// starting from standing feet at the start pose. No control loop involved.
std::vector<ReferenceSample> reference_trace(const FootstepPlan& plan,
                                             const StepCommand& cmd,
                                             const SinusoidSpec& sin_spec,
                                             const ModelParams& model,
                                             double dt,
                                             const Pose2& start = {},
                                             double z_swing = 0.03);

void write_footsteps_csv(std::ostream& os, const FootstepPlan& plan);
void write_references_csv(std::ostream& os,
                          const std::vector<ReferenceSample>& samples);

}  // namespace walk
