#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "walk/planner.hpp"

namespace walk {

enum class WalkPhase { Idle, Initialize, SingleSupport, DoubleSupport };
const char* to_string(WalkPhase p);

/// The 8 tunable gait parameters.
struct GaitParams {
  double step_x = 0.05;    ///< expected step length [m]
  double step_y = 0.0;     ///< expected step width offset [m]
  double step_theta = 0.0; ///< expected step rotation [rad]
  double z_swing = 0.03;   ///< swing apex height [m]
  double t_ss = 0.4;       ///< single-support duration [s]
  double ti_to = 0.0;      ///< constant torso inclination [rad]
  double a_z = 0.01;       ///< COM height amplitude [m]
  double a_to = 0.0;       ///< torso oscillation amplitude [rad]
};

/// Maximum per-step-boundary command change.
struct RateLimits {
  double d_step_x = 0.02;
  double d_step_y = 0.02;
  double d_step_theta = 0.2;
  double d_t_ss = 0.1;
  double d_t_ds = 0.1;
};

struct EngineConfig {
  GaitParams gait;
  double init_duration = 1.0;  ///< COM shift duration in Initialize [s]
  double control_dt = 0.02;
  double t_ds = 0.0;
  double lateral_separation = 0.10;
  Side first_swing = Side::Left;
  RateLimits limits;
  StepConstraints constraints;

  void validate() const;
};

/// References emitted each control cycle.
struct EngineOutput {
  WalkPhase phase = WalkPhase::Idle;
  Side support_side = Side::Right;
  Vec2 com_ref = Vec2::Zero();
  Vec2 com_vel_ref = Vec2::Zero();
  Vec2 com_acc_ref = Vec2::Zero();
  Vec2 zmp_ref = Vec2::Zero();
  double z_com_ref = 0.0;
  double z_com_acc_ref = 0.0;
  double omega = 0.0;  ///< natural frequency for the current cycle
  Vec3 swing_foot_ref = Vec3::Zero();
  double torso_ref = 0.0;
  double torso_vel_ref = 0.0;
  double torso_acc_ref = 0.0;
  double arm_ref = 0.0;
  double heading = 0.0;
  int steps_completed = 0;
  bool cmd_clamped = false;
};

/// Moves each command field toward the target by at most its per-step limit.
StepCommand command_smoothing(const StepCommand& current,
                              const StepCommand& target,
                              const RateLimits& limits);

struct PhaseTransition {
  long cycle = 0;
  WalkPhase from = WalkPhase::Idle;
  WalkPhase to = WalkPhase::Idle;
};

/// Four-state gait machine sequencing the reference planners.
///
/// Timer driven: Idle -> Initialize -> (SingleSupport <-> DoubleSupport)*,
/// any -> Idle on stop. With T_ds = 0 the DoubleSupport state consumes zero
/// ticks: it swaps the support side and re-anchors the ZMP reference within
/// the boundary tick. Commands received mid-step are queued and applied,
/// rate limited, at the next step boundary. Deterministic: no RNG anywhere.
class WalkEngine {
 public:
  WalkEngine(const EngineConfig& cfg, const ModelParams& model);

  /// Advances one control cycle; dt must equal the configured control_dt.
  EngineOutput tick(double dt);

  /// Requests walking (from Idle) or re-targets the current walk.
  void command(const StepCommand& cmd);

  /// Requests a stop; honored at the next step boundary with one final
  /// centering step.
  void stop();

  /// References at the current time, without advancing.
  EngineOutput current() const;

  WalkPhase phase() const { return phase_; }
  Side support_side() const { return support_; }
  const Footstep& foot(Side s) const {
    return s == Side::Left ? left_foot_ : right_foot_;
  }
  double heading() const { return body_.heading; }
  int steps_completed() const { return steps_completed_; }
  const StepCommand& active_command() const { return current_cmd_; }
  const std::vector<PhaseTransition>& transitions() const {
    return transitions_;
  }

  /// Diagnostic text dump of the full engine state.
  void dump_state(std::ostream& os) const;

 private:
  struct Blend {  // cubic Hermite segment per axis
    Vec2 p0 = Vec2::Zero(), v0 = Vec2::Zero();
    Vec2 p1 = Vec2::Zero(), v1 = Vec2::Zero();
    double duration = 1.0;
    Vec2 pos(double t) const;
    Vec2 vel(double t) const;
    Vec2 acc(double t) const;
  };

  void set_phase(WalkPhase p, long cycles);
  long to_cycles(double duration) const;
  void enter_initialize();
  void enter_single_support();
  void finish_step();          // swing foot lands
  void step_boundary();        // support swap, smoothing, stop handling
  void plan_next_step();
  void plan_centering_step();
  void enter_idle_settle();
  EngineOutput assemble() const;
  double phase_time() const {
    return static_cast<double>(cycle_in_phase_) * cfg_.control_dt;
  }
  double omega_at(double t_in_step, bool walking) const;
  ModelParams effective_model() const;
  Vec2 feet_center() const;

  EngineConfig cfg_;
  ModelParams model_;

  WalkPhase phase_ = WalkPhase::Idle;
  long cycle_in_phase_ = 0;
  long phase_cycles_ = -1;  // current phase duration in cycles, -1 = untimed
  long total_cycles_ = 0;

  Pose2 body_;
  Footstep left_foot_, right_foot_;
  Side support_ = Side::Right;
  Side next_swing_ = Side::Left;
  double landed_heading_ = 0.0;

  StepCommand current_cmd_;
  StepCommand target_cmd_;
  bool walk_armed_ = false;
  bool walking_ = false;
  bool stop_requested_ = false;
  bool centering_ = false;  // final stop step in progress
  bool cmd_clamped_ = false;

  // per-step planning data
  Vec2 support_pos_ = Vec2::Zero();
  Footstep swing_target_;
  Vec2 swing_start_ = Vec2::Zero();
  Vec2 x0_ = Vec2::Zero();  // COM reference at step start
  Vec2 xf_ = Vec2::Zero();  // COM reference target at step end
  long ss_cycles_ = 0;
  long ds_cycles_ = 0;
  double t_ss_eff_ = 0.0;   // single-support time on the control grid
  double step_time_ = 0.0;  // full step time on the control grid

  Blend blend_;            // Initialize / Idle-settle COM path
  bool settling_ = false;  // Idle entered with a settle blend pending

  Vec2 com_ref_ = Vec2::Zero();
  Vec2 com_vel_ref_ = Vec2::Zero();

  int steps_completed_ = 0;
  std::vector<PhaseTransition> transitions_;
};

/// One row per tick: the full reference stream as CSV.
void write_engine_csv(std::ostream& os, const std::vector<EngineOutput>& outs,
                      double dt);

}  // namespace walk
