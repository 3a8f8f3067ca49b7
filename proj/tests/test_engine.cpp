#include <doctest.h>

#include <cmath>
#include <sstream>

#include "walk/engine.hpp"

using namespace walk;

namespace {

EngineConfig desk_engine() {
  EngineConfig cfg;
  cfg.gait.step_x = 0.05;
  cfg.gait.t_ss = 0.4;
  cfg.gait.a_z = 0.01;
  cfg.gait.a_to = 0.02;
  return cfg;
}

StepCommand walk_cmd(double lsx = 0.05, double lsy = 0.0, double lst = 0.0) {
  return StepCommand{lsx, lsy, lst, 0.4, 0.0};
}

}  // namespace

TEST_CASE("idle output is a standing pose") {
  WalkEngine eng(desk_engine(), ModelParams{});
  for (int i = 0; i < 10; ++i) {
    const EngineOutput out = eng.tick(0.02);
    CHECK(out.phase == WalkPhase::Idle);
    CHECK(out.com_ref.norm() == 0.0);
    CHECK(out.com_vel_ref.norm() == 0.0);
    CHECK(out.swing_foot_ref[2] == 0.0);
    CHECK(out.steps_completed == 0);
  }
}

TEST_CASE("walk command enters Initialize on the next tick") {
  WalkEngine eng(desk_engine(), ModelParams{});
  CHECK(eng.tick(0.02).phase == WalkPhase::Idle);
  eng.command(walk_cmd());
  CHECK(eng.phase() == WalkPhase::Idle);  // not before the tick
  CHECK(eng.tick(0.02).phase == WalkPhase::Initialize);
}

TEST_CASE("one second of stepping yields exactly two support swaps") {
  WalkEngine eng(desk_engine(), ModelParams{});
  eng.command(walk_cmd());
  // run through Initialize (1 s)
  while (eng.phase() != WalkPhase::SingleSupport) {
    eng.tick(0.02);
  }
  Side support = eng.support_side();
  int swaps = 0;
  for (int k = 0; k < 50; ++k) {  // 1 s
    eng.tick(0.02);
    if (eng.support_side() != support) {
      support = eng.support_side();
      ++swaps;
    }
  }
  CHECK(swaps == 2);
}

TEST_CASE("command_smoothing") {
  RateLimits lim;
  lim.d_step_x = 0.02;
  SUBCASE("already at target") {
    const StepCommand c = walk_cmd(0.08);
    const StepCommand out = command_smoothing(c, c, lim);
    CHECK(out.L_sx == c.L_sx);
    CHECK(out.T_ss == c.T_ss);
  }
  SUBCASE("one boundary moves by the limit") {
    const StepCommand out =
        command_smoothing(walk_cmd(0.0), walk_cmd(0.08), lim);
    CHECK(out.L_sx == doctest::Approx(0.02).epsilon(1e-14));
  }
  SUBCASE("reaching the target takes exactly four boundaries") {
    StepCommand cur = walk_cmd(0.0);
    const StepCommand tgt = walk_cmd(0.08);
    int boundaries = 0;
    while (cur.L_sx != tgt.L_sx) {
      cur = command_smoothing(cur, tgt, lim);
      ++boundaries;
      REQUIRE(boundaries < 100);
    }
    CHECK(boundaries == 4);
  }
}

TEST_CASE("phase sequence is legal") {
  WalkEngine eng(desk_engine(), ModelParams{});
  eng.command(walk_cmd());
  for (int k = 0; k < 300; ++k) {
    eng.tick(0.02);
  }
  eng.stop();
  for (int k = 0; k < 200; ++k) {
    eng.tick(0.02);
  }
  const auto& log = eng.transitions();
  REQUIRE(!log.empty());
  CHECK(log.front().from == WalkPhase::Idle);
  CHECK(log.front().to == WalkPhase::Initialize);
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto& tr = log[i];
    const bool legal =
        (tr.from == WalkPhase::Idle && tr.to == WalkPhase::Initialize) ||
        (tr.from == WalkPhase::Initialize &&
         tr.to == WalkPhase::SingleSupport) ||
        (tr.from == WalkPhase::SingleSupport &&
         tr.to == WalkPhase::DoubleSupport) ||
        (tr.from == WalkPhase::DoubleSupport &&
         tr.to == WalkPhase::SingleSupport) ||
        (tr.from == WalkPhase::DoubleSupport && tr.to == WalkPhase::Idle);
    CHECK(legal);
    if (i > 0) {
      CHECK(log[i].from == log[i - 1].to);
    }
  }
  CHECK(log.back().to == WalkPhase::Idle);
  CHECK(eng.phase() == WalkPhase::Idle);
}

TEST_CASE("references stay continuous across transitions") {
  WalkEngine eng(desk_engine(), ModelParams{});
  eng.command(walk_cmd(0.05, 0.01, 0.05));
  EngineOutput prev = eng.current();
  WalkPhase prev_phase = prev.phase;
  for (int k = 0; k < 700; ++k) {
    if (k == 400) {
      eng.stop();
    }
    const EngineOutput out = eng.tick(0.02);
    // one cycle of reference motion is bounded by |v| dt plus slack
    const double bound = 0.02 * (out.com_vel_ref.norm() +
                                 prev.com_vel_ref.norm()) + 1e-4;
    CHECK((out.com_ref - prev.com_ref).norm() <= bound + 0.01);
    if (out.phase == WalkPhase::SingleSupport &&
        prev_phase != WalkPhase::SingleSupport) {
      CHECK(out.swing_foot_ref[2] <= 1e-9);  // liftoff starts at ground level
    }
    CHECK(out.z_com_ref > 0.0);
    prev = out;
    prev_phase = out.phase;
  }
}

TEST_CASE("swing foot starts and ends on the ground") {
  WalkEngine eng(desk_engine(), ModelParams{});
  eng.command(walk_cmd());
  WalkPhase prev = WalkPhase::Idle;
  for (int k = 0; k < 400; ++k) {
    const EngineOutput out = eng.tick(0.02);
    if (out.phase == WalkPhase::SingleSupport) {
      if (prev != WalkPhase::SingleSupport) {
        CHECK(std::abs(out.swing_foot_ref[2]) < 1e-9);
      }
    }
    prev = out.phase;
  }
}

TEST_CASE("engine stream is deterministic") {
  auto run = [] {
    WalkEngine eng(desk_engine(), ModelParams{});
    eng.command(walk_cmd(0.05, 0.02, 0.1));
    std::vector<EngineOutput> outs;
    for (int k = 0; k < 500; ++k) {
      if (k == 300) {
        eng.stop();
      }
      outs.push_back(eng.tick(0.02));
    }
    return outs;
  };
  const auto a = run();
  const auto b = run();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].phase == b[i].phase);
    CHECK(a[i].com_ref == b[i].com_ref);
    CHECK(a[i].com_vel_ref == b[i].com_vel_ref);
    CHECK(a[i].swing_foot_ref == b[i].swing_foot_ref);
    CHECK(a[i].zmp_ref == b[i].zmp_ref);
    CHECK(a[i].torso_ref == b[i].torso_ref);
    CHECK(a[i].z_com_ref == b[i].z_com_ref);
  }
}

TEST_CASE("stop ends with adjacent feet and a centered COM") {
  WalkEngine eng(desk_engine(), ModelParams{});
  eng.command(walk_cmd());
  for (int k = 0; k < 300; ++k) {
    eng.tick(0.02);
  }
  eng.stop();
  for (int k = 0; k < 300; ++k) {
    eng.tick(0.02);
  }
  REQUIRE(eng.phase() == WalkPhase::Idle);
  const Footstep& l = eng.foot(Side::Left);
  const Footstep& r = eng.foot(Side::Right);
  CHECK(std::abs(l.x - r.x) < 1e-9);
  CHECK(std::abs((l.y - r.y) - 0.1) < 1e-9);
  const EngineOutput out = eng.current();
  CHECK((out.com_ref - 0.5 * (l.pos() + r.pos())).norm() < 1e-9);
  CHECK(out.com_vel_ref.norm() < 1e-12);
}

TEST_CASE("mid-walk command applies at the next boundary") {
  WalkEngine eng(desk_engine(), ModelParams{});
  eng.command(walk_cmd(0.02));
  for (int k = 0; k < 80; ++k) {
    eng.tick(0.02);
  }
  REQUIRE(eng.phase() == WalkPhase::SingleSupport);
  const double before = eng.active_command().L_sx;
  eng.command(walk_cmd(0.04));
  CHECK(eng.active_command().L_sx == before);  // not yet
  for (int k = 0; k < 25; ++k) {
    eng.tick(0.02);
  }
  CHECK(eng.active_command().L_sx > before);
}

TEST_CASE("dt mismatch throws") {
  WalkEngine eng(desk_engine(), ModelParams{});
  CHECK_THROWS_AS(eng.tick(0.01), std::invalid_argument);
}

TEST_CASE("clamped commands are flagged") {
  WalkEngine eng(desk_engine(), ModelParams{});
  eng.command(StepCommand{0.5, 0.0, 0.0, 0.4, 0.0});
  bool saw_clamp = false;
  for (int k = 0; k < 300; ++k) {
    saw_clamp = saw_clamp || eng.tick(0.02).cmd_clamped;
  }
  CHECK(saw_clamp);
}

TEST_CASE("state dump is readable") {
  WalkEngine eng(desk_engine(), ModelParams{});
  std::ostringstream os;
  eng.dump_state(os);
  CHECK(os.str().find("phase = Idle") != std::string::npos);
  CHECK(os.str().find("support =") != std::string::npos);
}
