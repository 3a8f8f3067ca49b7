#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "walk/planner.hpp"

using namespace walk;

namespace {

// Independent spline oracle: solves the two-segment cubic coefficients from
// the eight boundary/continuity conditions with a dense linear solve.
// Segment i: a_i + b_i s + c_i s^2 + d_i s^3 (s local to the segment start).
double two_segment_cubic(double t, double T, double y0, double ym, double y1,
                         bool natural) {
  const double h = 0.5 * T;
  Eigen::Matrix<double, 8, 8> M = Eigen::Matrix<double, 8, 8>::Zero();
  Eigen::Matrix<double, 8, 1> rhs = Eigen::Matrix<double, 8, 1>::Zero();
  // rows 0-3: interpolation
  M(0, 0) = 1.0;
  rhs(0) = y0;
  M.block<1, 4>(1, 0) << 1.0, h, h * h, h * h * h;
  rhs(1) = ym;
  M(2, 4) = 1.0;
  rhs(2) = ym;
  M.block<1, 4>(3, 4) << 1.0, h, h * h, h * h * h;
  rhs(3) = y1;
  // rows 4-5: first/second derivative continuity at the knot
  M.block<1, 8>(4, 0) << 0, 1, 2 * h, 3 * h * h, 0, -1, 0, 0;
  M.block<1, 8>(5, 0) << 0, 0, 2, 6 * h, 0, 0, -2, 0;
  if (natural) {  // zero curvature at both ends
    M(6, 2) = 2.0;
    M.block<1, 4>(7, 4) << 0, 0, 2, 6 * h;
  } else {  // clamped: zero slope at both ends
    M(6, 1) = 1.0;
    M.block<1, 4>(7, 4) << 0, 1, 2 * h, 3 * h * h;
  }
  const Eigen::Matrix<double, 8, 1> coef = M.fullPivLu().solve(rhs);
  if (t <= h) {
    const double s = t;
    return coef(0) + coef(1) * s + coef(2) * s * s + coef(3) * s * s * s;
  }
  const double s = t - h;
  return coef(4) + coef(5) * s + coef(6) * s * s + coef(7) * s * s * s;
}

// Shooting oracle: integrate xdd = w^2 (x - r) with RK4, bisect the initial
// velocity so that x(T) = xf, then evaluate at t.
double shooting_com(double r, double x0, double xf, double T, double w,
                    double t_eval) {
  auto integrate = [&](double v0, double t_end) {
    double x = x0, v = v0;
    const int n = 4000;
    const double h = t_end / n;
    for (int i = 0; i < n; ++i) {
      auto ax = [&](double xx) { return w * w * (xx - r); };
      const double k1x = v, k1v = ax(x);
      const double k2x = v + 0.5 * h * k1v, k2v = ax(x + 0.5 * h * k1x);
      const double k3x = v + 0.5 * h * k2v, k3v = ax(x + 0.5 * h * k2x);
      const double k4x = v + h * k3v, k4v = ax(x + h * k3x);
      x += h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
      v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
    }
    return x;
  };
  double lo = -10.0, hi = 10.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (integrate(mid, T) < xf) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return integrate(0.5 * (lo + hi), t_eval);
}

}  // namespace

TEST_CASE("plan_footsteps") {
  const StepConstraints cons;
  SUBCASE("marching in place alternates laterally") {
    const FootstepPlan p =
        plan_footsteps({0, 0, 0, 0.4, 0.0}, 6, {}, cons, 0.1, Side::Left);
    REQUIRE(p.steps.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(p.steps[i].x == doctest::Approx(0.0).epsilon(1e-15));
      const double want = (i % 2 == 0) ? 0.05 : -0.05;
      CHECK(p.steps[i].y == doctest::Approx(want).epsilon(1e-15));
      CHECK(p.steps[i].side == (i % 2 == 0 ? Side::Left : Side::Right));
    }
    CHECK_FALSE(p.clamped);
  }
  SUBCASE("forward arithmetic progression") {
    const FootstepPlan p =
        plan_footsteps({0.1, 0, 0, 0.4, 0.0}, 4, {}, cons, 0.1, Side::Left);
    REQUIRE(p.steps.size() == 4);
    for (int i = 0; i < 4; ++i) {
      CHECK(p.steps[static_cast<std::size_t>(i)].x ==
            doctest::Approx(0.1 * (i + 1)).epsilon(1e-13));
    }
  }
  SUBCASE("16-step turn closes the polygon") {
    const double lsx = 0.1, lst = std::numbers::pi / 8.0;
    const StepConstraints wide{0.12, 0.05, 1.0};  // permit the pi/8 turn
    const FootstepPlan p =
        plan_footsteps({lsx, 0, lst, 0.4, 0.0}, 16, {}, wide, 0.1, Side::Left);
    CHECK(p.steps.back().heading ==
          doctest::Approx(2.0 * std::numbers::pi).epsilon(1e-12));
    // polygon-walk oracle: body displacements around a full circle sum to zero
    double bx = 0.0, by = 0.0, h = 0.0;
    for (int i = 0; i < 16; ++i) {
      h += lst;
      bx += std::cos(h) * lsx;
      by += std::sin(h) * lsx;
    }
    CHECK(std::abs(bx) < 1e-12);
    CHECK(std::abs(by) < 1e-12);
    // step 16 is a right foot (first_swing left): offset -0.05 at heading 2pi
    const Footstep& last = p.steps.back();
    CHECK(std::abs(last.x - (bx - std::sin(h) * (-0.05))) < 1e-9);
    CHECK(std::abs(last.y - (by + std::cos(h) * (-0.05))) < 1e-9);
  }
  SUBCASE("out-of-range command is clamped and flagged") {
    const FootstepPlan p =
        plan_footsteps({0.5, 0, 0, 0.4, 0.0}, 2, {}, cons, 0.1, Side::Left);
    CHECK(p.clamped);
    CHECK(p.steps[0].x == doctest::Approx(cons.max_step_length).epsilon(1e-13));
  }
  SUBCASE("sides alternate and feet stay on their side of the body path") {
    StepCommand cmd{0.05, 0.02, 0.05, 0.4, 0.0};
    const FootstepPlan p =
        plan_footsteps(cmd, 12, {}, cons, 0.1, Side::Right);
    Pose2 body;
    Side swing = Side::Right;
    for (const Footstep& f : p.steps) {
      CHECK(f.side == swing);
      const Footstep body_pt = advance_footstep(body, swing, cmd, 0.0);
      const double c = std::cos(body_pt.heading);
      const double s = std::sin(body_pt.heading);
      // lateral offset of the foot in the body frame
      const double lateral =
          -s * (f.x - body_pt.x) + c * (f.y - body_pt.y);
      CHECK(lateral == doctest::Approx(side_sign(f.side) * 0.05).epsilon(1e-12));
      swing = opposite(swing);
    }
  }
}

TEST_CASE("zmp_reference") {
  const StepConstraints cons;
  StepCommand cmd{0.1, 0.02, 0, 0.4, 0.2};
  const FootstepPlan p = plan_footsteps(cmd, 4, {}, cons, 0.1, Side::Left);
  SUBCASE("single support holds the footstep") {
    const Vec2 r = zmp_reference(p, cmd, 0.0, 1);
    CHECK(r[0] == p.steps[1].x);
    CHECK(r[1] == p.steps[1].y);
    const Vec2 r2 = zmp_reference(p, cmd, 0.399999, 1);
    CHECK(r2[0] == p.steps[1].x);
  }
  SUBCASE("double support blends by half at the midpoint") {
    const Vec2 r = zmp_reference(p, cmd, 0.5, 1);
    CHECK(r[0] == doctest::Approx(p.steps[1].x + 0.05).epsilon(1e-13));
    CHECK(r[1] == doctest::Approx(p.steps[1].y + 0.01).epsilon(1e-13));
  }
  SUBCASE("zero double support never leaves the footstep") {
    StepCommand c0{0.1, 0.0, 0, 0.4, 0.0};
    const FootstepPlan p0 = plan_footsteps(c0, 4, {}, cons, 0.1, Side::Left);
    const Vec2 r = zmp_reference(p0, c0, 0.4 - 1e-9, 2);
    CHECK(r[0] == p0.steps[2].x);
  }
  SUBCASE("range violations throw") {
    CHECK_THROWS_AS(zmp_reference(p, cmd, 0.61, 1), std::out_of_range);
    CHECK_THROWS_AS(zmp_reference(p, cmd, -0.01, 1), std::out_of_range);
    CHECK_THROWS_AS(zmp_reference(p, cmd, 0.0, 7), std::out_of_range);
  }
}

TEST_CASE("swing_trajectory") {
  SwingSpec spec;
  spec.z_swing = 0.04;
  spec.start = Vec3(0.0, 0.0, 0.0);
  spec.target = Vec3(0.2, 0.0, 0.0);
  const double T = 0.4;
  SUBCASE("interpolation points") {
    CHECK((swing_trajectory(spec, 0.0, T) - spec.start).norm() < 1e-14);
    CHECK((swing_trajectory(spec, T, T) - spec.target).norm() < 1e-14);
    const Vec3 mid = swing_trajectory(spec, 0.5 * T, T);
    CHECK(mid[0] == doctest::Approx(0.1).epsilon(1e-13));
    CHECK(mid[2] == doctest::Approx(0.04).epsilon(1e-13));
  }
  SUBCASE("matches an independently solved two-segment cubic") {
    for (double t : {0.1 * T, 0.25 * T, 0.4 * T, 0.6 * T, 0.9 * T}) {
      const Vec3 v = swing_trajectory(spec, t, T);
      const double x_oracle = two_segment_cubic(t, T, 0.0, 0.1, 0.2, true);
      const double z_oracle = two_segment_cubic(t, T, 0.0, 0.04, 0.0, false);
      CHECK(std::abs(v[0] - x_oracle) < 1e-10);
      CHECK(std::abs(v[2] - z_oracle) < 1e-10);
    }
  }
  SUBCASE("no ground penetration, monotone horizontal motion") {
    double prev = -1e9;
    for (int k = 0; k <= 200; ++k) {
      const double t = T * k / 200.0;
      const Vec3 v = swing_trajectory(spec, t, T);
      CHECK(v[2] >= -1e-12);
      CHECK(v[0] >= prev - 1e-12);
      prev = v[0];
    }
  }
  SUBCASE("time out of range throws") {
    CHECK_THROWS_AS(swing_trajectory(spec, -0.1, T), std::out_of_range);
    CHECK_THROWS_AS(swing_trajectory(spec, T + 0.1, T), std::out_of_range);
  }
}

TEST_CASE("sinusoid_trajectories") {
  SUBCASE("zero amplitudes are constant") {
    SinusoidSpec s;
    s.TI_to = 0.05;
    const SinusoidSample a = sinusoid_trajectories(s, 0.123, 0.4, 0.23);
    CHECK(a.z_com == 0.23);
    CHECK(a.theta_to == 0.05);
    CHECK(a.arm == 0.0);
  }
  SUBCASE("phase and periodicity") {
    SinusoidSpec s;
    s.A_z = 0.02;
    s.phi = 0.6;
    s.A_to = 0.05;
    s.A_arm = 0.1;
    const SinusoidSample a0 = sinusoid_trajectories(s, 0.0, 0.4, 0.25);
    CHECK(a0.z_com == doctest::Approx(0.25 + 0.02 * std::cos(0.6)).epsilon(1e-14));
    const SinusoidSample aT = sinusoid_trajectories(s, 0.4, 0.4, 0.25);
    CHECK(aT.z_com == doctest::Approx(a0.z_com).epsilon(1e-12));
    CHECK(aT.theta_to == doctest::Approx(a0.theta_to).epsilon(1e-12));
    CHECK(aT.arm == doctest::Approx(a0.arm).epsilon(1e-12));
    // arms run in counter-phase to the torso oscillation
    const SinusoidSample q = sinusoid_trajectories(s, 0.1, 0.4, 0.25);
    CHECK(q.arm == doctest::Approx(-0.1 * std::sin(2.0 * std::numbers::pi *
                                                   0.1 / 0.4))
                       .epsilon(1e-12));
  }
}

TEST_CASE("com_trajectory") {
  SUBCASE("boundary values") {
    CHECK(com_trajectory(0.0, -0.02, 0.03, 0.0, 0.4, 6.26418, 0.0) ==
          doctest::Approx(-0.02).epsilon(1e-12));
    CHECK(com_trajectory(0.0, -0.02, 0.03, 0.0, 0.4, 6.26418, 0.4) ==
          doctest::Approx(0.03).epsilon(1e-12));
  }
  SUBCASE("equilibrium stays put") {
    for (double t : {0.0, 0.1, 0.2, 0.35}) {
      CHECK(com_trajectory(0.07, 0.07, 0.07, 0.0, 0.4, 6.0, t) ==
            doctest::Approx(0.07).epsilon(1e-13));
    }
  }
  SUBCASE("matches the shooting oracle") {
    const double omega = 6.26418;
    const double v = com_trajectory(0.0, -0.02, 0.03, 0.0, 0.4, omega, 0.2);
    const double oracle = shooting_com(0.0, -0.02, 0.03, 0.4, omega, 0.2);
    CHECK(std::abs(v - oracle) < 1e-6);
  }
  SUBCASE("degenerate interval throws") {
    CHECK_THROWS_AS(com_trajectory(0, 0, 0, 0.2, 0.2, 6.0, 0.2),
                    std::invalid_argument);
    CHECK_THROWS_AS(com_trajectory(0, 0, 0, 0.0, 0.4, 6.0, 0.5),
                    std::out_of_range);
  }
}

TEST_CASE("com_trajectory satisfies the pendulum equation") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double dt = 1e-4;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const double r = -0.1 + 0.2 * u(rng);
    const double x0 = r - 0.1 + 0.2 * u(rng);
    const double xf = r - 0.1 + 0.2 * u(rng);
    const double T = 0.2 + 0.6 * u(rng);
    const double w = 2.0 + 8.0 * u(rng);
    for (int k = 1; k < 20; ++k) {
      const double t = T * k / 20.0;
      if (t - dt < 0.0 || t + dt > T) {
        continue;
      }
      const double xm = com_trajectory(r, x0, xf, 0.0, T, w, t - dt);
      const double xc = com_trajectory(r, x0, xf, 0.0, T, w, t);
      const double xp = com_trajectory(r, x0, xf, 0.0, T, w, t + dt);
      const double xdd = (xp - 2.0 * xc + xm) / (dt * dt);
      worst = std::max(worst, std::abs(xdd - w * w * (xc - r)));
    }
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("com_trajectory_vel is the derivative") {
  const double r = 0.02, x0 = -0.01, xf = 0.05, T = 0.4, w = 6.4;
  for (double t : {0.05, 0.2, 0.35}) {
    const double h = 1e-6;
    const double fd = (com_trajectory(r, x0, xf, 0.0, T, w, t + h) -
                       com_trajectory(r, x0, xf, 0.0, T, w, t - h)) /
                      (2.0 * h);
    CHECK(com_trajectory_vel(r, x0, xf, 0.0, T, w, t) ==
          doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("step_boundary_target") {
  CHECK(step_boundary_target(0.1, 0.3) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(step_boundary_target(0.07, 0.07) == 0.07);
  CHECK(step_boundary_target(-0.05, 0.05) == 0.0);
}

TEST_CASE("reference_trace continuity and hull containment") {
  const StepConstraints cons;
  StepCommand cmd{0.06, 0.0, 0.0, 0.4, 0.0};
  const FootstepPlan plan = plan_footsteps(cmd, 6, {}, cons, 0.1, Side::Left);
  SinusoidSpec sins;
  sins.A_z = 0.01;
  ModelParams model;
  const auto refs = reference_trace(plan, cmd, sins, model, 0.02, {}, 0.03);
  REQUIRE(refs.size() == 6 * 20);
  for (std::size_t i = 1; i < refs.size(); ++i) {
    CHECK(std::abs(refs[i].com_x - refs[i - 1].com_x) < 0.02);
    CHECK(std::abs(refs[i].com_y - refs[i - 1].com_y) < 0.02);
    CHECK(refs[i].swing_z >= -1e-12);
    // ZMP reference pinned to the support footstep rectangle during single
    // support (0.16 x 0.09 feet)
    CHECK(refs[i].t == doctest::Approx(0.02 * i).epsilon(1e-9));
  }
}

TEST_CASE("csv writers") {
  const StepConstraints cons;
  const FootstepPlan plan =
      plan_footsteps({0.1, 0, 0, 0.4, 0.0}, 2, {}, cons, 0.1, Side::Left);
  std::ostringstream os;
  write_footsteps_csv(os, plan);
  CHECK(os.str().find("step,f_x,f_y,heading,support_side") == 0);
  CHECK(os.str().find("left") != std::string::npos);
  std::ostringstream ros;
  write_references_csv(ros, {});
  CHECK(ros.str() ==
        "t,r_zmp_x,r_zmp_y,com_x,com_y,z_com,swing_x,swing_y,swing_z,"
        "theta_to_ref\n");
}
