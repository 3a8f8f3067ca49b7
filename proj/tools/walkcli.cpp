// Command-line front end: closed-loop simulation, GA gait tuning and
// reference-trajectory export for the two-mass walking engine.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "walk/config.hpp"
#include "walk/csv.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitFell = 2;
constexpr int kExitDiverged = 3;

bool g_quiet = false;

std::ofstream open_out(const fs::path& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream os(dir / name);
  if (!os) {
    throw walk::ConfigError("cannot write " + (dir / name).string());
  }
  return os;
}

int cmd_simulate(const std::string& config_path, std::string scenario_path,
                 const fs::path& out_dir, long seed_override) {
  const walk::AppConfig cfg = walk::load_config(config_path);
  if (scenario_path.empty()) {
    scenario_path = cfg.scenario_path;
  }
  if (scenario_path.empty()) {
    std::cerr << "simulate: no scenario given (--scenario or [paths])\n";
    return kExitConfig;
  }
  walk::Scenario scenario = walk::load_scenario(scenario_path);
  if (seed_override >= 0) {
    scenario.seed = static_cast<std::uint64_t>(seed_override);
  }
  const walk::SimTrace trace = walk::run_scenario(scenario, cfg.setup());

  auto trace_os = open_out(out_dir, "trace.csv");
  walk::write_trace_csv(trace_os, trace);
  auto sum_os = open_out(out_dir, "summary.txt");
  walk::write_summary(sum_os, trace);
  if (!g_quiet) {
    walk::write_summary(std::cout, trace);
  }
  switch (trace.status) {
    case walk::RunStatus::Fell:
      return kExitFell;
    case walk::RunStatus::Diverged:
      return kExitDiverged;
    case walk::RunStatus::Ok:
      break;
  }
  return kExitOk;
}

int cmd_optimize(const std::string& config_path, const fs::path& out_dir,
                 long seed_override) {
  walk::AppConfig cfg = walk::load_config(config_path);
  if (seed_override >= 0) {
    cfg.ga.seed = static_cast<std::uint64_t>(seed_override);
  }
  const auto progress = +[](const walk::GenerationStats& st) {
    if (!g_quiet) {
      std::cout << "generation " << st.generation << ": best " << st.best
                << ", mean " << st.mean << "\n";
    }
  };
  const walk::GAResult result =
      walk::optimize(cfg.bounds, cfg.ga, cfg.setup(), g_quiet ? nullptr : progress);

  auto hist_os = open_out(out_dir, "ga_history.csv");
  hist_os << "generation,best,mean,step_x,step_y,step_theta,z_swing,t_ss,"
             "ti_to,a_z,a_to\n";
  for (const walk::GenerationStats& st : result.history) {
    const walk::GaitParams& g = st.best_genome;
    hist_os << st.generation << ',' << walk::csv_num(st.best) << ','
            << walk::csv_num(st.mean) << ',' << walk::csv_num(g.step_x) << ','
            << walk::csv_num(g.step_y) << ',' << walk::csv_num(g.step_theta)
            << ',' << walk::csv_num(g.z_swing) << ',' << walk::csv_num(g.t_ss)
            << ',' << walk::csv_num(g.ti_to) << ',' << walk::csv_num(g.a_z)
            << ',' << walk::csv_num(g.a_to) << '\n';
  }
  auto gait_os = open_out(out_dir, "best_gait.cfg");
  gait_os << "# best gait found (fitness " << walk::csv_num(result.best_fitness)
          << ", " << result.evaluations << " evaluations)\n";
  walk::write_gait(gait_os, result.best);

  // verification run of the winner
  walk::SimSetup setup = cfg.setup();
  setup.engine.gait = result.best;
  walk::Scenario verify;
  verify.duration = cfg.ga.eval_duration;
  verify.seed = cfg.ga.seed;
  verify.meas_sigma_pos = cfg.ga.eval_sigma_pos;
  verify.meas_sigma_theta = cfg.ga.eval_sigma_theta;
  verify.commands.push_back(
      {0.0, walk::StepCommand{result.best.step_x, result.best.step_y,
                              result.best.step_theta, result.best.t_ss, 0.0}});
  const walk::SimTrace trace = walk::run_scenario(verify, setup);
  auto trace_os = open_out(out_dir, "best_trace.csv");
  walk::write_trace_csv(trace_os, trace);
  auto sum_os = open_out(out_dir, "best_summary.txt");
  walk::write_summary(sum_os, trace);
  if (!g_quiet) {
    std::cout << "best fitness " << result.best_fitness << " after "
              << result.evaluations << " evaluations\n";
  }
  return kExitOk;
}

int cmd_plan(const std::string& config_path, int n_steps,
             const fs::path& out_dir) {
  const walk::AppConfig cfg = walk::load_config(config_path);
  const walk::StepCommand cmd{cfg.gait.step_x, cfg.gait.step_y,
                              cfg.gait.step_theta, cfg.gait.t_ss,
                              cfg.engine.t_ds};
  const walk::FootstepPlan plan = walk::plan_footsteps(
      cmd, n_steps, {}, cfg.engine.constraints, cfg.engine.lateral_separation,
      cfg.engine.first_swing);
  auto steps_os = open_out(out_dir, "footsteps.csv");
  walk::write_footsteps_csv(steps_os, plan);

  const walk::SinusoidSpec sins{cfg.gait.a_z, cfg.model.phi, cfg.gait.a_to,
                                cfg.gait.ti_to, 0.0};
  const auto refs = walk::reference_trace(plan, cmd, sins, cfg.model,
                                          cfg.engine.control_dt, {},
                                          cfg.gait.z_swing);
  auto refs_os = open_out(out_dir, "references.csv");
  walk::write_references_csv(refs_os, refs);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-mass pendulum walking engine: simulate, optimize, plan"};
  app.require_subcommand(1);

  std::string config_path;
  std::string scenario_path;
  std::string out_dir = "out";
  long seed_override = -1;
  int n_steps = 8;

  app.add_flag("--quiet,-q", g_quiet, "suppress progress output");

  CLI::App* sim = app.add_subcommand("simulate", "run one closed-loop scenario");
  sim->add_option("--config,-c", config_path, "configuration file")->required();
  sim->add_option("--scenario,-s", scenario_path, "scenario file");
  sim->add_option("--out,-o", out_dir, "output directory");
  sim->add_option("--seed", seed_override, "override the scenario seed");

  CLI::App* opt = app.add_subcommand("optimize", "run the GA gait campaign");
  opt->add_option("--config,-c", config_path, "configuration file")->required();
  opt->add_option("--out,-o", out_dir, "output directory");
  opt->add_option("--seed", seed_override, "override the GA master seed");

  CLI::App* plan = app.add_subcommand("plan", "emit footsteps and references");
  plan->add_option("--config,-c", config_path, "configuration file")->required();
  plan->add_option("--steps,-n", n_steps, "number of footsteps");
  plan->add_option("--out,-o", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      return cmd_simulate(config_path, scenario_path, out_dir, seed_override);
    }
    if (opt->parsed()) {
      return cmd_optimize(config_path, out_dir, seed_override);
    }
    if (plan->parsed()) {
      return cmd_plan(config_path, n_steps, out_dir);
    }
  } catch (const walk::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const walk::NoConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const walk::SingularityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}
