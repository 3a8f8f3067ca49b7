#include "walk/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "walk/csv.hpp"

namespace walk {

const char* to_string(WalkPhase p) {
  switch (p) {
    case WalkPhase::Idle:
      return "Idle";
    case WalkPhase::Initialize:
      return "Initialize";
    case WalkPhase::SingleSupport:
      return "SingleSupport";
    case WalkPhase::DoubleSupport:
      return "DoubleSupport";
  }
  return "?";
}

void EngineConfig::validate() const {
  if (!(control_dt > 0.0)) {
    throw ConfigError("EngineConfig: control_dt must be positive");
  }
  if (!(init_duration > 0.0)) {
    throw ConfigError("EngineConfig: init_duration must be positive");
  }
  if (!(gait.t_ss > 0.0)) {
    throw ConfigError("EngineConfig: gait t_ss must be positive");
  }
  if (t_ds < 0.0) {
    throw ConfigError("EngineConfig: t_ds must be non-negative");
  }
  if (!(lateral_separation > 0.0)) {
    throw ConfigError("EngineConfig: lateral_separation must be positive");
  }
  if (!(gait.z_swing > 0.0)) {
    throw ConfigError("EngineConfig: gait z_swing must be positive");
  }
  if (gait.a_z < 0.0 || gait.a_to < 0.0) {
    throw ConfigError("EngineConfig: gait amplitudes must be non-negative");
  }
  if (limits.d_step_x <= 0.0 || limits.d_step_y <= 0.0 ||
      limits.d_step_theta <= 0.0 || limits.d_t_ss <= 0.0 ||
      limits.d_t_ds <= 0.0) {
    throw ConfigError("EngineConfig: rate limits must be positive");
  }
}

StepCommand command_smoothing(const StepCommand& current,
                              const StepCommand& target,
                              const RateLimits& limits) {
  auto toward = [](double cur, double tgt, double lim) {
    return cur + std::clamp(tgt - cur, -lim, lim);
  };
  StepCommand out;
  out.L_sx = toward(current.L_sx, target.L_sx, limits.d_step_x);
  out.L_sy = toward(current.L_sy, target.L_sy, limits.d_step_y);
  out.L_stheta = toward(current.L_stheta, target.L_stheta, limits.d_step_theta);
  out.T_ss = toward(current.T_ss, target.T_ss, limits.d_t_ss);
  out.T_ds = toward(current.T_ds, target.T_ds, limits.d_t_ds);
  return out;
}

Vec2 WalkEngine::Blend::pos(double t) const {
  const double s = std::clamp(t / duration, 0.0, 1.0);
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * p0 + (s3 - 2 * s2 + s) * duration * v0 +
         (-2 * s3 + 3 * s2) * p1 + (s3 - s2) * duration * v1;
}

Vec2 WalkEngine::Blend::vel(double t) const {
  const double s = std::clamp(t / duration, 0.0, 1.0);
  const double s2 = s * s;
  return ((6 * s2 - 6 * s) * p0 + (3 * s2 - 4 * s + 1) * duration * v0 +
          (-6 * s2 + 6 * s) * p1 + (3 * s2 - 2 * s) * duration * v1) /
         duration;
}

Vec2 WalkEngine::Blend::acc(double t) const {
  const double s = std::clamp(t / duration, 0.0, 1.0);
  return ((12 * s - 6) * p0 + (6 * s - 4) * duration * v0 +
          (-12 * s + 6) * p1 + (6 * s - 2) * duration * v1) /
         (duration * duration);
}

WalkEngine::WalkEngine(const EngineConfig& cfg, const ModelParams& model)
    : cfg_(cfg), model_(model) {
  cfg_.validate();
  model_.validate();
  support_ = opposite(cfg_.first_swing);
  next_swing_ = cfg_.first_swing;
  const double half = 0.5 * cfg_.lateral_separation;
  left_foot_ = {0.0, half, 0.0, Side::Left};
  right_foot_ = {0.0, -half, 0.0, Side::Right};
  landed_heading_ = 0.0;
  current_cmd_ = StepCommand{0.0, 0.0, 0.0, cfg_.gait.t_ss, cfg_.t_ds};
  target_cmd_ = current_cmd_;
  phase_ = WalkPhase::Idle;
  phase_cycles_ = -1;  // no timer in Idle
  com_ref_ = feet_center();
}

Vec2 WalkEngine::feet_center() const {
  return 0.5 * (left_foot_.pos() + right_foot_.pos());
}

ModelParams WalkEngine::effective_model() const {
  ModelParams em = model_;
  em.A_z = cfg_.gait.a_z;
  em.step_time = step_time_ > 0.0 ? step_time_ : cfg_.gait.t_ss + cfg_.t_ds;
  return em;
}

double WalkEngine::omega_at(double t_in_step, bool walking) const {
  const ModelParams em = effective_model();
  if (walking) {
    return natural_frequency(com_height(t_in_step, em),
                             com_height_accel(t_in_step, em), em.g);
  }
  return natural_frequency(com_height(0.0, em), 0.0, em.g);
}

void WalkEngine::set_phase(WalkPhase p, long cycles) {
  transitions_.push_back({total_cycles_, phase_, p});
  phase_ = p;
  cycle_in_phase_ = 0;
  phase_cycles_ = cycles;
}

long WalkEngine::to_cycles(double duration) const {
  return std::max<long>(
      0, static_cast<long>(std::ceil(duration / cfg_.control_dt - 1e-9)));
}

void WalkEngine::plan_next_step() {
  bool clamped = false;
  const StepCommand cmd = clamp_command(current_cmd_, cfg_.constraints, &clamped);
  cmd_clamped_ = clamped;
  swing_target_ = advance_footstep(body_, next_swing_, cmd,
                                   cfg_.lateral_separation);
  ss_cycles_ = std::max<long>(1, to_cycles(cmd.T_ss));
  ds_cycles_ = to_cycles(cmd.T_ds);
  t_ss_eff_ = static_cast<double>(ss_cycles_) * cfg_.control_dt;
  step_time_ = static_cast<double>(ss_cycles_ + ds_cycles_) * cfg_.control_dt;
  support_pos_ = foot(support_).pos();
  xf_ = Vec2(step_boundary_target(support_pos_[0], swing_target_.x),
             step_boundary_target(support_pos_[1], swing_target_.y));
}

void WalkEngine::plan_centering_step() {
  // Final step: swing foot lands beside the support foot, no body advance.
  cmd_clamped_ = false;
  const StepCommand cmd{0.0, 0.0, 0.0, current_cmd_.T_ss, current_cmd_.T_ds};
  swing_target_ = advance_footstep(body_, next_swing_, cmd,
                                   cfg_.lateral_separation);
  ss_cycles_ = std::max<long>(1, to_cycles(cmd.T_ss));
  ds_cycles_ = to_cycles(cmd.T_ds);
  t_ss_eff_ = static_cast<double>(ss_cycles_) * cfg_.control_dt;
  step_time_ = static_cast<double>(ss_cycles_ + ds_cycles_) * cfg_.control_dt;
  support_pos_ = foot(support_).pos();
  xf_ = Vec2(step_boundary_target(support_pos_[0], swing_target_.x),
             step_boundary_target(support_pos_[1], swing_target_.y));
}

void WalkEngine::enter_initialize() {
  walking_ = true;
  walk_armed_ = false;
  current_cmd_.T_ss = target_cmd_.T_ss;
  current_cmd_.T_ds = target_cmd_.T_ds;
  current_cmd_ = command_smoothing(current_cmd_, target_cmd_, cfg_.limits);
  plan_next_step();
  // COM moves from its current reference to the first support foot along a
  // velocity-matched cubic blend, ending with the first step's entry velocity.
  const double w0 = omega_at(0.0, true);
  blend_.p0 = com_ref_;
  blend_.v0 = com_vel_ref_;
  blend_.p1 = support_pos_;
  blend_.v1 =
      Vec2(com_trajectory_vel(support_pos_[0], support_pos_[0], xf_[0], 0.0,
                              step_time_, w0, 0.0),
           com_trajectory_vel(support_pos_[1], support_pos_[1], xf_[1], 0.0,
                              step_time_, w0, 0.0));
  blend_.duration = cfg_.init_duration;
  set_phase(WalkPhase::Initialize, std::max<long>(1, to_cycles(cfg_.init_duration)));
}

void WalkEngine::enter_single_support() {
  swing_start_ = foot(next_swing_).pos();
  x0_ = com_ref_;
  set_phase(WalkPhase::SingleSupport, ss_cycles_);
}

void WalkEngine::finish_step() {
  (next_swing_ == Side::Left ? left_foot_ : right_foot_) = swing_target_;
  landed_heading_ = swing_target_.heading;
  ++steps_completed_;
}

void WalkEngine::step_boundary() {
  // The landed foot becomes the support; snap the COM reference to the
  // analytic step endpoint.
  support_ = next_swing_;
  next_swing_ = opposite(next_swing_);
  const double w_end = omega_at(step_time_, true);
  com_vel_ref_ =
      Vec2(com_trajectory_vel(support_pos_[0], x0_[0], xf_[0], 0.0, step_time_,
                              w_end, step_time_),
           com_trajectory_vel(support_pos_[1], x0_[1], xf_[1], 0.0, step_time_,
                              w_end, step_time_));
  com_ref_ = xf_;

  if (centering_) {
    walking_ = false;
    centering_ = false;
    stop_requested_ = false;
    current_cmd_.L_sx = 0.0;  // the next walk ramps up from standstill
    current_cmd_.L_sy = 0.0;
    current_cmd_.L_stheta = 0.0;
    enter_idle_settle();
    return;
  }
  current_cmd_ = command_smoothing(current_cmd_, target_cmd_, cfg_.limits);
  if (stop_requested_) {
    centering_ = true;
    plan_centering_step();
  } else {
    plan_next_step();
  }
  enter_single_support();
}

void WalkEngine::enter_idle_settle() {
  settling_ = true;
  blend_.p0 = com_ref_;
  blend_.v0 = com_vel_ref_;
  blend_.p1 = feet_center();
  blend_.v1 = Vec2::Zero();
  blend_.duration = cfg_.init_duration;
  set_phase(WalkPhase::Idle, -1);
}

EngineOutput WalkEngine::tick(double dt) {
  if (std::abs(dt - cfg_.control_dt) > 1e-12) {
    throw std::invalid_argument("WalkEngine::tick: dt must equal control_dt");
  }
  ++total_cycles_;
  if (phase_ == WalkPhase::Idle && walk_armed_) {
    if (settling_) {
      com_ref_ = blend_.pos(phase_time());
      com_vel_ref_ = blend_.vel(phase_time());
      settling_ = false;
    }
    enter_initialize();
  } else {
    ++cycle_in_phase_;
  }
  // Process timer expirations; DoubleSupport with T_ds = 0 passes through
  // within the same tick.
  while (phase_cycles_ >= 0 && cycle_in_phase_ >= phase_cycles_) {
    switch (phase_) {
      case WalkPhase::Initialize:
        com_ref_ = blend_.p1;
        com_vel_ref_ = blend_.v1;
        enter_single_support();
        break;
      case WalkPhase::SingleSupport:
        finish_step();
        set_phase(WalkPhase::DoubleSupport, ds_cycles_);
        break;
      case WalkPhase::DoubleSupport:
        step_boundary();
        break;
      case WalkPhase::Idle:
        phase_cycles_ = -1;
        break;
    }
  }
  return assemble();
}

EngineOutput WalkEngine::current() const { return assemble(); }

EngineOutput WalkEngine::assemble() const {
  EngineOutput out;
  out.phase = phase_;
  out.support_side = support_;
  out.heading = landed_heading_;
  out.steps_completed = steps_completed_;
  out.cmd_clamped = cmd_clamped_;
  const ModelParams em = effective_model();
  const double t = phase_time();
  const SinusoidSpec sins{cfg_.gait.a_z, model_.phi, cfg_.gait.a_to,
                          cfg_.gait.ti_to, 0.0};

  const bool in_step =
      phase_ == WalkPhase::SingleSupport || phase_ == WalkPhase::DoubleSupport;
  if (in_step) {
    const double t_s =
        phase_ == WalkPhase::SingleSupport ? t : t_ss_eff_ + t;
    out.omega = omega_at(t_s, true);
    Vec2 r_zmp = support_pos_;
    if (phase_ == WalkPhase::DoubleSupport && ds_cycles_ > 0) {
      const double frac = (t_s - t_ss_eff_) / (step_time_ - t_ss_eff_);
      r_zmp += frac * (swing_target_.pos() - support_pos_);
    }
    out.zmp_ref = r_zmp;
    for (int k = 0; k < 2; ++k) {
      out.com_ref[k] = com_trajectory(r_zmp[k], x0_[k], xf_[k], 0.0,
                                      step_time_, out.omega, t_s);
      out.com_vel_ref[k] = com_trajectory_vel(r_zmp[k], x0_[k], xf_[k], 0.0,
                                              step_time_, out.omega, t_s);
      out.com_acc_ref[k] = lipm_accel(out.com_ref[k], r_zmp[k], out.omega);
    }
    const SinusoidSample s =
        sinusoid_trajectories(sins, t_s, step_time_, em.z_c);
    out.z_com_ref = s.z_com;
    out.z_com_acc_ref = com_height_accel(t_s, em);
    out.torso_ref = s.theta_to;
    out.arm_ref = s.arm;
    const double w = 2.0 * std::numbers::pi / step_time_;
    out.torso_vel_ref = cfg_.gait.a_to * w * std::cos(w * t_s);
    out.torso_acc_ref = -cfg_.gait.a_to * w * w * std::sin(w * t_s);
    if (phase_ == WalkPhase::SingleSupport) {
      SwingSpec spec{cfg_.gait.z_swing,
                     Vec3(swing_start_[0], swing_start_[1], 0.0),
                     Vec3(swing_target_.x, swing_target_.y, 0.0)};
      out.swing_foot_ref = swing_trajectory(spec, std::min(t_s, t_ss_eff_),
                                            t_ss_eff_);
    } else {
      out.swing_foot_ref = Vec3(swing_target_.x, swing_target_.y, 0.0);
    }
  } else {
    out.omega = omega_at(0.0, false);
    const bool blending =
        (phase_ == WalkPhase::Initialize) ||
        (phase_ == WalkPhase::Idle && settling_ && t < blend_.duration);
    if (blending) {
      out.com_ref = blend_.pos(t);
      out.com_vel_ref = blend_.vel(t);
      out.com_acc_ref = blend_.acc(t);
    } else if (phase_ == WalkPhase::Idle && settling_) {
      out.com_ref = blend_.p1;
    } else {
      out.com_ref = com_ref_;
      out.com_vel_ref = com_vel_ref_;
    }
    out.zmp_ref = out.com_ref - out.com_acc_ref / (out.omega * out.omega);
    out.z_com_ref = com_height(0.0, em);
    out.z_com_acc_ref = 0.0;
    out.torso_ref = cfg_.gait.ti_to;
    const Footstep& parked = foot(opposite(support_));
    out.swing_foot_ref = Vec3(parked.x, parked.y, 0.0);
  }
  return out;
}

void WalkEngine::command(const StepCommand& cmd) {
  target_cmd_ = cmd;
  if (!walking_) {
    walk_armed_ = true;
  }
}

void WalkEngine::stop() {
  if (walking_) {
    stop_requested_ = true;
  }
  walk_armed_ = false;
}

void WalkEngine::dump_state(std::ostream& os) const {
  os << "phase = " << to_string(phase_) << "\n"
     << "cycle_in_phase = " << cycle_in_phase_ << " / " << phase_cycles_ << "\n"
     << "total_cycles = " << total_cycles_ << "\n"
     << "body = (" << body_.x << ", " << body_.y << ", " << body_.heading
     << ")\n"
     << "left_foot = (" << left_foot_.x << ", " << left_foot_.y << ", "
     << left_foot_.heading << ")\n"
     << "right_foot = (" << right_foot_.x << ", " << right_foot_.y << ", "
     << right_foot_.heading << ")\n"
     << "support = " << to_string(support_) << "\n"
     << "steps_completed = " << steps_completed_ << "\n"
     << "command = (" << current_cmd_.L_sx << ", " << current_cmd_.L_sy << ", "
     << current_cmd_.L_stheta << ", T_ss=" << current_cmd_.T_ss
     << ", T_ds=" << current_cmd_.T_ds << ")\n"
     << "walking = " << walking_ << ", stopping = " << stop_requested_
     << ", centering = " << centering_ << "\n";
}

void write_engine_csv(std::ostream& os, const std::vector<EngineOutput>& outs,
                      double dt) {
  os << "t,phase,support_side,com_x,com_y,com_vx,com_vy,zmp_x,zmp_y,z_com,"
        "swing_x,swing_y,swing_z,torso,arm,heading,steps_completed\n";
  for (std::size_t i = 0; i < outs.size(); ++i) {
    const EngineOutput& o = outs[i];
    os << csv_num(static_cast<double>(i) * dt) << ',' << to_string(o.phase)
       << ',' << to_string(o.support_side) << ',' << csv_num(o.com_ref[0])
       << ',' << csv_num(o.com_ref[1]) << ',' << csv_num(o.com_vel_ref[0])
       << ',' << csv_num(o.com_vel_ref[1]) << ',' << csv_num(o.zmp_ref[0])
       << ',' << csv_num(o.zmp_ref[1]) << ',' << csv_num(o.z_com_ref) << ','
       << csv_num(o.swing_foot_ref[0]) << ',' << csv_num(o.swing_foot_ref[1])
       << ',' << csv_num(o.swing_foot_ref[2]) << ',' << csv_num(o.torso_ref)
       << ',' << csv_num(o.arm_ref) << ',' << csv_num(o.heading) << ','
       << o.steps_completed << '\n';
  }
}

}  // namespace walk
