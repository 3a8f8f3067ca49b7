#include "walk/sim.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "walk/csv.hpp"

namespace walk {

void Scenario::validate() const {
  if (!(duration > 0.0)) {
    throw ConfigError("Scenario: duration must be positive");
  }
  if (meas_sigma_pos < 0.0 || meas_sigma_vel < 0.0 || meas_sigma_theta < 0.0 ||
      meas_sigma_thetad < 0.0 || proc_sigma < 0.0) {
    throw ConfigError("Scenario: noise sigmas must be non-negative");
  }
  for (std::size_t i = 1; i < commands.size(); ++i) {
    if (commands[i].t < commands[i - 1].t) {
      throw ConfigError("Scenario: command times must be ascending");
    }
  }
  for (std::size_t i = 1; i < impulses.size(); ++i) {
    if (impulses[i].t < impulses[i - 1].t) {
      throw ConfigError("Scenario: impulse times must be ascending");
    }
  }
}

bool FallDetector::update(const Vec2& zmp, const std::vector<Vec2>& polygon,
                          double margin) {
  if (fallen_) {
    return true;
  }
  if (zmp_outside_support(zmp, polygon, margin)) {
    if (++count_ >= dwell_) {
      fallen_ = true;
    }
  } else {
    count_ = 0;
  }
  return fallen_;
}

bool zmp_outside_support(const Vec2& zmp, const std::vector<Vec2>& polygon_ccw,
                         double margin) {
  if (polygon_ccw.size() < 3) {
    throw std::invalid_argument("zmp_outside_support: degenerate polygon");
  }
  const std::size_t n = polygon_ccw.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = polygon_ccw[i];
    const Vec2& b = polygon_ccw[(i + 1) % n];
    const Vec2 e = b - a;
    const double len = e.norm();
    const double cross = e[0] * (zmp[1] - a[1]) - e[1] * (zmp[0] - a[0]);
    // signed distance to the edge line; inside the dilated set needs
    // distance >= margin on every edge (boundary counts as inside)
    if (cross < margin * len) {
      return true;
    }
  }
  return false;
}

std::vector<Vec2> foot_polygon(const Footstep& foot, const FootGeometry& geom) {
  const double c = std::cos(foot.heading);
  const double s = std::sin(foot.heading);
  const double hl = 0.5 * geom.length;
  const double hw = 0.5 * geom.width;
  auto corner = [&](double dx, double dy) {
    return Vec2(foot.x + c * dx - s * dy, foot.y + s * dx + c * dy);
  };
  return {corner(-hl, -hw), corner(hl, -hw), corner(hl, hw), corner(-hl, hw)};
}

std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a[0] < b[0] || (a[0] == b[0] && a[1] < b[1]);
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Vec2& a, const Vec2& b) {
                          return a[0] == b[0] && a[1] == b[1];
                        }),
            pts.end());
  const std::size_t n = pts.size();
  if (n < 3) {
    return pts;
  }
  auto cross = [](const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
  };
  std::vector<Vec2> hull(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) {
      --k;
    }
    hull[k++] = pts[i];
  }
  for (std::size_t i = n - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) {
      --k;
    }
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

namespace {

struct PlaneRefs {
  Vec4 x_des;
  ControlInput u_ff;
};

// Feedforward consistent with the two-mass motion equation along the
// reference:  p = x + c1*theta - (xdd + c2*thetadd) / mu
PlaneRefs sagittal_refs(const EngineOutput& o, const LinearSystem& sys,
                        double l) {
  PlaneRefs r;
  r.x_des = Vec4(o.com_ref[0], o.com_vel_ref[0], o.torso_ref, o.torso_vel_ref);
  const double c1 = sys.alpha * l / (1.0 + sys.alpha);
  const double c2 = sys.alpha * sys.beta * l / (1.0 + sys.alpha * sys.beta);
  r.u_ff.p_x = o.com_ref[0] + c1 * o.torso_ref -
               (o.com_acc_ref[0] + c2 * o.torso_acc_ref) / sys.mu;
  r.u_ff.thetadd_to = o.torso_acc_ref;
  return r;
}

PlaneRefs frontal_refs(const EngineOutput& o, const LinearSystem& sys) {
  PlaneRefs r;
  r.x_des = Vec4(o.com_ref[1], o.com_vel_ref[1], 0.0, 0.0);
  r.u_ff.p_x = o.com_ref[1] - o.com_acc_ref[1] / sys.mu;
  r.u_ff.thetadd_to = 0.0;
  return r;
}

Vec2 model_zmp(const Vec4& sag, const ControlInput& u_sag, const Vec4& fro,
               const ControlInput& u_fro, const SynthesizedController& ss,
               const SynthesizedController& sf, const ModelParams& model,
               double z_t, double zdd_t) {
  // accelerations from the model equations at the current state and input
  const double xdd_c =
      ss.sys.A.row(1).dot(sag) + ss.sys.B.row(1).dot(u_sag.vec());
  const double ydd_c =
      sf.sys.A.row(1).dot(fro) + sf.sys.B.row(1).dot(u_fro.vec());
  Vec2 zmp;
  if (model.m_to > 0.0) {
    const double x_to = sag[0] + model.l * sag[2];
    const double xdd_to = xdd_c + model.l * u_sag.thetadd_to;
    const double m[2] = {model.m_c, model.m_to};
    const double x[2] = {sag[0], x_to};
    const double z[2] = {z_t, ss.sys.beta * z_t};
    const double xdd[2] = {xdd_c, xdd_to};
    const double zdd[2] = {zdd_t, zdd_t};
    zmp[0] = zmp_multibody(m, x, z, xdd, zdd, model.g);
  } else {
    const double m[1] = {model.m_c};
    const double x[1] = {sag[0]};
    const double z[1] = {z_t};
    const double xdd[1] = {xdd_c};
    const double zdd[1] = {zdd_t};
    zmp[0] = zmp_multibody(m, x, z, xdd, zdd, model.g);
  }
  const double m[1] = {model.m_c + model.m_to};
  const double y[1] = {fro[0]};
  const double z[1] = {z_t};
  const double ydd[1] = {ydd_c};
  const double zdd[1] = {zdd_t};
  zmp[1] = zmp_multibody(m, y, z, ydd, zdd, model.g);
  return zmp;
}

}  // namespace

SimTrace run_scenario(const Scenario& scenario, const SimSetup& setup) {
  scenario.validate();
  setup.model.validate();
  setup.engine.validate();

  SimTrace trace;
  WalkEngine engine(setup.engine, setup.model);
  PlaneController ctrl_sag(setup.model, setup.weights, setup.noise,
                           setup.engine.control_dt, setup.integrator_clamp);
  PlaneController ctrl_fro(setup.model.single_mass(), setup.weights,
                           setup.noise, setup.engine.control_dt,
                           setup.integrator_clamp);

  Vec4 x_sag(0.0, 0.0, setup.engine.gait.ti_to, 0.0);
  Vec4 x_fro = Vec4::Zero();
  ctrl_sag.reset(x_sag);
  ctrl_fro.reset(x_fro);

  std::mt19937_64 rng(scenario.seed);
  std::normal_distribution<double> norm(0.0, 1.0);

  FallDetector detector(setup.feet.fall_dwell);
  const double dt = setup.engine.control_dt;
  const long n_cycles =
      static_cast<long>(std::floor(scenario.duration / dt + 1e-9));

  std::size_t next_cmd = 0;
  std::size_t next_imp = 0;
  bool stop_issued = false;

  EngineOutput out = engine.current();
  TraceSample row;
  row.t = 0.0;
  row.sag = x_sag;
  row.fro = x_fro;
  row.ref = out;

  auto support_polygon = [&]() {
    if (engine.phase() == WalkPhase::SingleSupport) {
      return foot_polygon(engine.foot(engine.support_side()), setup.feet);
    }
    auto pts = foot_polygon(engine.foot(Side::Left), setup.feet);
    const auto right = foot_polygon(engine.foot(Side::Right), setup.feet);
    pts.insert(pts.end(), right.begin(), right.end());
    return convex_hull(std::move(pts));
  };

  // Each measurement channel carries the noise of the state it selects.
  const Vec4 sigmas = scenario.meas_sigmas();
  auto measure = [&](const Vec4& x_true) {
    VectorXd y = setup.noise.C * x_true;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      Eigen::Index state = 0;
      setup.noise.C.row(i).cwiseAbs().maxCoeff(&state);
      y[i] += sigmas[state] * norm(rng);
    }
    return y;
  };

  // Completes the pending row at its time: measure, control, ZMP, fall check.
  // Returns false when the run must halt (fall latched).
  auto complete_row = [&](TraceSample& r) {
    const VectorXd y_sag = measure(r.sag);
    const VectorXd y_fro = measure(r.fro);

    const SynthesizedController& ss = ctrl_sag.synth(r.ref.omega);
    const SynthesizedController& sf = ctrl_fro.synth(r.ref.omega);
    const PlaneRefs rs = sagittal_refs(r.ref, ss.sys, setup.model.l);
    const PlaneRefs rf = frontal_refs(r.ref, sf.sys);
    r.u_sag = ctrl_sag.step(r.ref.omega, y_sag, rs.x_des, rs.u_ff);
    r.u_fro = ctrl_fro.step(r.ref.omega, y_fro, rf.x_des, rf.u_ff);
    r.sag_est = ctrl_sag.posterior();
    r.fro_est = ctrl_fro.posterior();
    r.zmp = model_zmp(r.sag, r.u_sag, r.fro, r.u_fro, ss, sf, setup.model,
                      r.ref.z_com_ref, r.ref.z_com_acc_ref);
    r.fall = detector.update(r.zmp, support_polygon(), scenario.polygon_margin);
    if (setup.record_trace) {
      trace.samples.push_back(r);
    }
    return !r.fall;
  };

  auto run_loop = [&]() {
    bool halted = false;
    for (long k = 1; k <= n_cycles && !halted; ++k) {
      const double t_prev = static_cast<double>(k - 1) * dt;
      const double t_now = static_cast<double>(k) * dt;

      if (!complete_row(row)) {
        trace.status = RunStatus::Fell;
        return;
      }

      // propagate the plant with the inputs just computed
      const SynthesizedController& ss = ctrl_sag.synth(row.ref.omega);
      const SynthesizedController& sf = ctrl_fro.synth(row.ref.omega);
      x_sag = ss.dsys.Ad * x_sag + ss.dsys.Bd * row.u_sag.vec();
      x_fro = sf.dsys.Ad * x_fro + sf.dsys.Bd * row.u_fro.vec();
      const double p1 = norm(rng), p2 = norm(rng), p3 = norm(rng),
                   p4 = norm(rng);
      if (scenario.proc_sigma > 0.0) {
        x_sag[1] += scenario.proc_sigma * p1;
        x_sag[3] += scenario.proc_sigma * p2;
        x_fro[1] += scenario.proc_sigma * p3;
        x_fro[3] += scenario.proc_sigma * p4;
      }
      while (next_imp < scenario.impulses.size() &&
             scenario.impulses[next_imp].t <= t_now + 1e-12) {
        x_sag[1] += scenario.impulses[next_imp].dvx;
        x_fro[1] += scenario.impulses[next_imp].dvy;
        ++next_imp;
      }
      if (!x_sag.allFinite() || !x_fro.allFinite() ||
          x_sag.cwiseAbs().maxCoeff() > 1e6 ||
          x_fro.cwiseAbs().maxCoeff() > 1e6) {
        trace.status = RunStatus::Diverged;
        trace.summary.diverged = true;
        return;
      }

      while (next_cmd < scenario.commands.size() &&
             scenario.commands[next_cmd].t <= t_prev + 1e-12) {
        engine.command(scenario.commands[next_cmd].cmd);
        ++next_cmd;
      }
      if (scenario.stop_time && !stop_issued &&
          *scenario.stop_time <= t_prev + 1e-12) {
        engine.stop();
        stop_issued = true;
      }

      out = engine.tick(dt);
      row = TraceSample{};
      row.t = t_now;
      row.sag = x_sag;
      row.fro = x_fro;
      row.ref = out;
    }
    if (!complete_row(row)) {
      trace.status = RunStatus::Fell;
    }
  };

  try {
    run_loop();
  } catch (const std::domain_error&) {
    // the model left its valid regime (e.g. vertical oscillation with
    // g + zdd < 0): report divergence, keep the trace up to the failure
    trace.status = RunStatus::Diverged;
    trace.summary.diverged = true;
  }

  trace.summary.fell = detector.fallen() || trace.status == RunStatus::Fell;
  if (trace.summary.fell && trace.status == RunStatus::Ok) {
    trace.status = RunStatus::Fell;
  }
  trace.summary.dx = x_sag[0];
  trace.summary.dy = x_fro[0];
  trace.summary.final_heading = out.heading;
  trace.summary.steps_completed = out.steps_completed;
  trace.summary.duration = scenario.duration;
  return trace;
}

double evaluate_fitness(const SimTrace& trace) {
  const double eps = trace.summary.fell ? 100.0 : 0.0;
  return -std::abs(trace.summary.dx) + std::abs(trace.summary.dy) + eps;
}

void write_trace_csv(std::ostream& os, const SimTrace& trace) {
  os << "t,x_c,xd_c,theta_to,thetad_to,y_c,yd_c,theta_f,thetad_f,"
        "est_x_c,est_xd_c,est_theta_to,est_thetad_to,est_y_c,est_yd_c,"
        "est_theta_f,est_thetad_f,"
        "r_zmp_x,r_zmp_y,com_x_ref,com_y_ref,com_vx_ref,com_vy_ref,"
        "z_com_ref,theta_to_ref,swing_x,swing_y,swing_z,"
        "u_px,u_thetadd,u_py,u_thetadd_f,zmp_x,zmp_y,"
        "phase,fall,support_side,heading,steps_completed\n";
  for (const TraceSample& r : trace.samples) {
    os << csv_num(r.t);
    for (int i = 0; i < 4; ++i) os << ',' << csv_num(r.sag[i]);
    for (int i = 0; i < 4; ++i) os << ',' << csv_num(r.fro[i]);
    for (int i = 0; i < 4; ++i) os << ',' << csv_num(r.sag_est[i]);
    for (int i = 0; i < 4; ++i) os << ',' << csv_num(r.fro_est[i]);
    os << ',' << csv_num(r.ref.zmp_ref[0]) << ',' << csv_num(r.ref.zmp_ref[1])
       << ',' << csv_num(r.ref.com_ref[0]) << ',' << csv_num(r.ref.com_ref[1])
       << ',' << csv_num(r.ref.com_vel_ref[0]) << ','
       << csv_num(r.ref.com_vel_ref[1]) << ',' << csv_num(r.ref.z_com_ref)
       << ',' << csv_num(r.ref.torso_ref) << ','
       << csv_num(r.ref.swing_foot_ref[0]) << ','
       << csv_num(r.ref.swing_foot_ref[1]) << ','
       << csv_num(r.ref.swing_foot_ref[2]) << ',' << csv_num(r.u_sag.p_x)
       << ',' << csv_num(r.u_sag.thetadd_to) << ',' << csv_num(r.u_fro.p_x)
       << ',' << csv_num(r.u_fro.thetadd_to) << ',' << csv_num(r.zmp[0]) << ','
       << csv_num(r.zmp[1]) << ',' << to_string(r.ref.phase) << ','
       << (r.fall ? 1 : 0) << ',' << to_string(r.ref.support_side) << ','
       << csv_num(r.ref.heading) << ',' << r.ref.steps_completed << '\n';
  }
}

void write_summary(std::ostream& os, const SimTrace& trace) {
  const TraceSummary& s = trace.summary;
  os << "dx = " << csv_num(s.dx) << "\n"
     << "dy = " << csv_num(s.dy) << "\n"
     << "mean_speed = " << csv_num(s.duration > 0 ? s.dx / s.duration : 0.0)
     << "\n"
     << "fell = " << (s.fell ? 1 : 0) << "\n"
     << "diverged = " << (s.diverged ? 1 : 0) << "\n"
     << "fitness = " << csv_num(evaluate_fitness(trace)) << "\n"
     << "steps_completed = " << s.steps_completed << "\n"
     << "final_heading = " << csv_num(s.final_heading) << "\n"
     << "duration = " << csv_num(s.duration) << "\n";
}

}  // namespace walk
