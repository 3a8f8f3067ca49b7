#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "walk/control.hpp"
#include "walk/engine.hpp"

namespace walk {

struct Impulse {
  double t = 0.0;
  double dvx = 0.0;  ///< added to sagittal COM velocity [m/s]
  double dvy = 0.0;  ///< added to frontal COM velocity [m/s]
};

struct TimedCommand {
  double t = 0.0;
  StepCommand cmd;
};

/// One closed-loop run description.
struct Scenario {
  double duration = 10.0;
  std::uint64_t seed = 0;
  double meas_sigma_pos = 0.0;     ///< measurement noise, COM position [m]
  double meas_sigma_vel = 0.0;     ///< measurement noise, COM velocity [m/s]
  double meas_sigma_theta = 0.0;   ///< measurement noise, torso angle [rad]
  double meas_sigma_thetad = 0.0;  ///< measurement noise, torso rate [rad/s]
  double proc_sigma = 0.0;         ///< process noise on velocity states
  double polygon_margin = 0.0;     ///< support polygon shrink for fall checks [m]
  std::vector<TimedCommand> commands;  ///< sorted by time
  std::vector<Impulse> impulses;       ///< sorted by time
  std::optional<double> stop_time;

  /// Per-state measurement sigma, indexed like PendulumState.
  Vec4 meas_sigmas() const {
    return Vec4(meas_sigma_pos, meas_sigma_vel, meas_sigma_theta,
                meas_sigma_thetad);
  }

  void validate() const;
};

struct FootGeometry {
  double length = 0.16;  ///< along the foot heading [m]
  double width = 0.09;   ///< across the foot [m]
  int fall_dwell = 3;    ///< consecutive outside-polygon cycles before a fall
};

enum class RunStatus { Ok, Fell, Diverged };

struct TraceSample {
  double t = 0.0;
  Vec4 sag = Vec4::Zero();      ///< true sagittal state
  Vec4 fro = Vec4::Zero();      ///< true frontal state
  Vec4 sag_est = Vec4::Zero();
  Vec4 fro_est = Vec4::Zero();
  EngineOutput ref;
  ControlInput u_sag, u_fro;
  Vec2 zmp = Vec2::Zero();      ///< multibody ZMP from the model equations
  bool fall = false;
};

struct TraceSummary {
  double dx = 0.0;
  double dy = 0.0;
  bool fell = false;
  bool diverged = false;
  double final_heading = 0.0;
  int steps_completed = 0;
  double duration = 0.0;
};

struct SimTrace {
  std::vector<TraceSample> samples;
  TraceSummary summary;
  RunStatus status = RunStatus::Ok;
};

/// All configuration a run needs besides the scenario itself.
struct SimSetup {
  ModelParams model;
  EngineConfig engine;
  CostWeights weights = CostWeights::defaults();
  NoiseModel noise = NoiseModel::full_state();
  FootGeometry feet;
  double integrator_clamp = 10.0;
  bool record_trace = true;
};

/// Counts consecutive outside-support samples; latches after the dwell.
class FallDetector {
 public:
  explicit FallDetector(int dwell = 3) : dwell_(dwell) {}

  /// Feeds one ZMP sample against the current support polygon (CCW).
  /// Returns the latched fall state.
  bool update(const Vec2& zmp, const std::vector<Vec2>& polygon, double margin);

  bool fallen() const { return fallen_; }

 private:
  int dwell_;
  int count_ = 0;
  bool fallen_ = false;
};

/// True when the point lies outside the polygon dilated by -margin.
/// Points exactly on the dilated edge count as inside.
bool zmp_outside_support(const Vec2& zmp, const std::vector<Vec2>& polygon_ccw,
                         double margin);

/// CCW corners of a foot rectangle at a placement.
std::vector<Vec2> foot_polygon(const Footstep& foot, const FootGeometry& geom);

/// Convex hull (CCW) of a point set; used for double-support polygons.
std::vector<Vec2> convex_hull(std::vector<Vec2> points);

/// Runs the closed loop: engine -> per-plane LQG -> two-mass plant with
/// injected noise and disturbances, multibody-ZMP fall detection and trace
/// recording. Halts early on fall or divergence. Deterministic per seed.
SimTrace run_scenario(const Scenario& scenario, const SimSetup& setup);

/// Walking fitness: f = -|dx| + |dy| + eps, eps = 100 when fallen.
double evaluate_fitness(const SimTrace& trace);

void write_trace_csv(std::ostream& os, const SimTrace& trace);
void write_summary(std::ostream& os, const SimTrace& trace);

}  // namespace walk
