#include "walk/planner.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "walk/csv.hpp"

namespace walk {

StepCommand clamp_command(StepCommand cmd, const StepConstraints& c,
                          bool* clamped) {
  bool changed = false;
  auto clip = [&changed](double v, double lim) {
    const double out = std::clamp(v, -lim, lim);
    changed = changed || out != v;
    return out;
  };
  cmd.L_sx = clip(cmd.L_sx, c.max_step_length);
  cmd.L_sy = clip(cmd.L_sy, c.max_step_width);
  cmd.L_stheta = clip(cmd.L_stheta, c.max_step_rotation);
  if (clamped) {
    *clamped = changed;
  }
  return cmd;
}

Footstep advance_footstep(Pose2& body, Side swing, const StepCommand& cmd,
                          double lateral_separation) {
  body.heading += cmd.L_stheta;
  const double c = std::cos(body.heading);
  const double s = std::sin(body.heading);
  body.x += c * cmd.L_sx - s * cmd.L_sy;
  body.y += s * cmd.L_sx + c * cmd.L_sy;
  const double off = side_sign(swing) * 0.5 * lateral_separation;
  Footstep f;
  f.x = body.x - s * off;
  f.y = body.y + c * off;
  f.heading = body.heading;
  f.side = swing;
  return f;
}

FootstepPlan plan_footsteps(const StepCommand& cmd, int n_steps,
                            const Pose2& start, const StepConstraints& c,
                            double lateral_separation, Side first_swing) {
  if (n_steps < 0) {
    throw std::invalid_argument("plan_footsteps: n_steps must be >= 0");
  }
  if (!(cmd.T_ss > 0.0) || cmd.T_ds < 0.0) {
    throw std::invalid_argument("plan_footsteps: T_ss must be > 0, T_ds >= 0");
  }
  FootstepPlan plan;
  plan.lateral_separation = lateral_separation;
  const StepCommand effective = clamp_command(cmd, c, &plan.clamped);
  Pose2 body = start;
  Side swing = first_swing;
  plan.steps.reserve(static_cast<std::size_t>(n_steps));
  for (int i = 0; i < n_steps; ++i) {
    plan.steps.push_back(
        advance_footstep(body, swing, effective, lateral_separation));
    swing = opposite(swing);
  }
  return plan;
}

Vec2 zmp_reference(const FootstepPlan& plan, const StepCommand& cmd, double t,
                   int i) {
  if (i < 0 || static_cast<std::size_t>(i) >= plan.steps.size()) {
    throw std::out_of_range("zmp_reference: step index out of range");
  }
  if (t < 0.0 || t >= cmd.T_ss + cmd.T_ds) {
    throw std::out_of_range("zmp_reference: t outside [0, T_ss + T_ds)");
  }
  const Footstep& f = plan.steps[static_cast<std::size_t>(i)];
  if (t < cmd.T_ss) {
    return f.pos();
  }
  const double r = (t - cmd.T_ss) / cmd.T_ds;
  return f.pos() + r * Vec2(cmd.L_sx, cmd.L_sy);
}

namespace {

// Cubic spline in moments form; natural or clamped (zero slope) ends.
class CubicSpline {
 public:
  enum class Bc { Natural, ClampedZero };

  CubicSpline(std::vector<double> t, std::vector<double> y, Bc bc)
      : t_(std::move(t)), y_(std::move(y)) {
    const std::size_t n = t_.size();
    m_.assign(n, 0.0);
    std::vector<double> h(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      h[i] = t_[i + 1] - t_[i];
    }
    // tridiagonal system for the second derivatives
    std::vector<double> a(n, 0.0), b(n, 0.0), c(n, 0.0), d(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      a[i] = h[i - 1] / 6.0;
      b[i] = (h[i - 1] + h[i]) / 3.0;
      c[i] = h[i] / 6.0;
      d[i] = (y_[i + 1] - y_[i]) / h[i] - (y_[i] - y_[i - 1]) / h[i - 1];
    }
    if (bc == Bc::Natural) {
      b[0] = 1.0;
      b[n - 1] = 1.0;
    } else {
      b[0] = h[0] / 3.0;
      c[0] = h[0] / 6.0;
      d[0] = (y_[1] - y_[0]) / h[0];
      a[n - 1] = h[n - 2] / 6.0;
      b[n - 1] = h[n - 2] / 3.0;
      d[n - 1] = -(y_[n - 1] - y_[n - 2]) / h[n - 2];
    }
    // Thomas algorithm
    for (std::size_t i = 1; i < n; ++i) {
      const double w = a[i] / b[i - 1];
      b[i] -= w * c[i - 1];
      d[i] -= w * d[i - 1];
    }
    m_[n - 1] = d[n - 1] / b[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) {
      m_[i] = (d[i] - c[i] * m_[i + 1]) / b[i];
    }
  }

  double eval(double x) const {
    std::size_t i = 0;
    while (i + 2 < t_.size() && x > t_[i + 1]) {
      ++i;
    }
    const double h = t_[i + 1] - t_[i];
    const double A = (t_[i + 1] - x) / h;
    const double B = (x - t_[i]) / h;
    return A * y_[i] + B * y_[i + 1] +
           ((A * A * A - A) * m_[i] + (B * B * B - B) * m_[i + 1]) * h * h / 6.0;
  }

 private:
  std::vector<double> t_, y_, m_;
};

}  // namespace

Vec3 swing_trajectory(const SwingSpec& spec, double t, double T_ss) {
  if (!(T_ss > 0.0)) {
    throw std::invalid_argument("swing_trajectory: T_ss must be positive");
  }
  if (t < -1e-12 || t > T_ss + 1e-12) {
    throw std::out_of_range("swing_trajectory: t outside [0, T_ss]");
  }
  t = std::clamp(t, 0.0, T_ss);
  const std::vector<double> knots{0.0, 0.5 * T_ss, T_ss};
  Vec3 out;
  for (int k = 0; k < 2; ++k) {
    CubicSpline s(knots,
                  {spec.start[k], 0.5 * (spec.start[k] + spec.target[k]),
                   spec.target[k]},
                  CubicSpline::Bc::Natural);
    out[k] = s.eval(t);
  }
  CubicSpline z(knots, {spec.start[2], spec.z_swing, spec.target[2]},
                CubicSpline::Bc::ClampedZero);
  out[2] = z.eval(t);
  return out;
}

SinusoidSample sinusoid_trajectories(const SinusoidSpec& spec, double t,
                                     double step_time, double z_0) {
  if (!(step_time > 0.0)) {
    throw ConfigError("sinusoid_trajectories: step_time must be positive");
  }
  const double w = 2.0 * std::numbers::pi / step_time;
  SinusoidSample s;
  s.z_com = z_0 + spec.A_z * std::cos(w * t + spec.phi);
  s.theta_to = spec.TI_to + spec.A_to * std::sin(w * t);
  s.arm = spec.A_arm * std::sin(w * t + std::numbers::pi);
  return s;
}

double com_trajectory(double r_zmp, double x_0, double x_f, double t_0,
                      double t_f, double omega, double t) {
  if (t_0 == t_f) {
    throw std::invalid_argument("com_trajectory: degenerate interval t_0 == t_f");
  }
  if (!(omega > 0.0)) {
    throw std::domain_error("com_trajectory: omega must be positive");
  }
  if (!(t_0 < t_f) || t < t_0 - 1e-12 || t > t_f + 1e-12) {
    throw std::out_of_range("com_trajectory: t outside [t_0, t_f]");
  }
  const double den = std::sinh(omega * (t_0 - t_f));
  return r_zmp + ((r_zmp - x_f) * std::sinh(omega * (t - t_0)) +
                  (x_0 - r_zmp) * std::sinh(omega * (t - t_f))) /
                     den;
}

double com_trajectory_vel(double r_zmp, double x_0, double x_f, double t_0,
                          double t_f, double omega, double t) {
  if (t_0 == t_f) {
    throw std::invalid_argument("com_trajectory_vel: degenerate interval");
  }
  const double den = std::sinh(omega * (t_0 - t_f));
  return omega *
         ((r_zmp - x_f) * std::cosh(omega * (t - t_0)) +
          (x_0 - r_zmp) * std::cosh(omega * (t - t_f))) /
         den;
}

double step_boundary_target(double f_i, double f_inext) {
  return 0.5 * (f_i + f_inext);
}

std::vector<ReferenceSample> reference_trace(const FootstepPlan& plan,
                                             const StepCommand& cmd,
                                             const SinusoidSpec& sin_spec,
                                             const ModelParams& model,
                                             double dt, const Pose2& start,
                                             double z_swing) {
  std::vector<ReferenceSample> out;
  if (plan.steps.empty()) {
    return out;
  }
  const double step_time = cmd.T_ss + cmd.T_ds;
  const std::size_t n = plan.steps.size();

  // standing feet around the start pose; the foot opposite the first
  // placement is the first support
  const Side first_placed = plan.steps.front().side;
  auto stance_foot = [&](Side s) {
    Footstep f;
    const double off = side_sign(s) * 0.5 * plan.lateral_separation;
    f.x = start.x - std::sin(start.heading) * off;
    f.y = start.y + std::cos(start.heading) * off;
    f.heading = start.heading;
    f.side = s;
    return f;
  };

  ModelParams em = model;
  em.A_z = sin_spec.A_z;
  em.phi = sin_spec.phi;
  em.step_time = step_time;

  Vec2 com(start.x, start.y);
  Footstep feet[2] = {stance_foot(Side::Left), stance_foot(Side::Right)};
  auto foot_ref = [&](Side s) -> Footstep& {
    return feet[s == Side::Left ? 0 : 1];
  };

  double t_global = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const Footstep support =
        j == 0 ? stance_foot(opposite(first_placed)) : plan.steps[j - 1];
    const Footstep& landing = plan.steps[j];
    const Vec2 swing_from = foot_ref(landing.side).pos();
    const Vec2 xf(step_boundary_target(support.x, landing.x),
                  step_boundary_target(support.y, landing.y));
    const Vec2 x0 = com;

    const long cycles = std::lround(step_time / dt);
    for (long k = 0; k < cycles; ++k) {
      const double t = static_cast<double>(k) * dt;
      ReferenceSample r;
      r.t = t_global + t;
      const Vec2 zmp = t < cmd.T_ss
                           ? support.pos()
                           : Vec2(support.pos() +
                                  (t - cmd.T_ss) / cmd.T_ds *
                                      Vec2(cmd.L_sx, cmd.L_sy));
      r.r_zmp_x = zmp[0];
      r.r_zmp_y = zmp[1];
      const double omega =
          natural_frequency(com_height(t, em), com_height_accel(t, em), em.g);
      r.com_x = com_trajectory(zmp[0], x0[0], xf[0], 0.0, step_time, omega, t);
      r.com_y = com_trajectory(zmp[1], x0[1], xf[1], 0.0, step_time, omega, t);
      const SinusoidSample s =
          sinusoid_trajectories(sin_spec, t, step_time, em.z_c);
      r.z_com = s.z_com;
      r.theta_to = s.theta_to;
      if (t < cmd.T_ss) {
        SwingSpec sw{z_swing, Vec3(swing_from[0], swing_from[1], 0.0),
                     Vec3(landing.x, landing.y, 0.0)};
        const Vec3 p = swing_trajectory(sw, t, cmd.T_ss);
        r.swing_x = p[0];
        r.swing_y = p[1];
        r.swing_z = p[2];
      } else {
        r.swing_x = landing.x;
        r.swing_y = landing.y;
        r.swing_z = 0.0;
      }
      out.push_back(r);
      com[0] = com_trajectory(zmp[0], x0[0], xf[0], 0.0, step_time, omega,
                              std::min(t + dt, step_time));
      com[1] = com_trajectory(zmp[1], x0[1], xf[1], 0.0, step_time, omega,
                              std::min(t + dt, step_time));
    }
    com = xf;
    foot_ref(landing.side) = landing;
    t_global += static_cast<double>(cycles) * dt;
  }
  return out;
}

void write_footsteps_csv(std::ostream& os, const FootstepPlan& plan) {
  os << "step,f_x,f_y,heading,support_side\n";
  int i = 0;
  for (const Footstep& f : plan.steps) {
    os << i++ << ',' << csv_num(f.x) << ',' << csv_num(f.y) << ','
       << csv_num(f.heading) << ',' << to_string(f.side) << '\n';
  }
}

void write_references_csv(std::ostream& os,
                          const std::vector<ReferenceSample>& samples) {
  os << "t,r_zmp_x,r_zmp_y,com_x,com_y,z_com,swing_x,swing_y,swing_z,"
        "theta_to_ref\n";
  for (const ReferenceSample& r : samples) {
    os << csv_num(r.t) << ',' << csv_num(r.r_zmp_x) << ',' << csv_num(r.r_zmp_y)
       << ',' << csv_num(r.com_x) << ',' << csv_num(r.com_y) << ','
       << csv_num(r.z_com) << ',' << csv_num(r.swing_x) << ','
       << csv_num(r.swing_y) << ',' << csv_num(r.swing_z) << ','
       << csv_num(r.theta_to) << '\n';
  }
}

}  // namespace walk
