#include <doctest.h>

#include "fixtures.hpp"
#include "jsslab/hindsight.hpp"
#include "jsslab/trainer.hpp"

using namespace jsslab;

namespace {

StochTrajectory random_episode(const Instance& inst, Rng& rng) {
  StochTrajectory traj;
  traj.instance = &inst;
  SchedState s = SchedState::reset(inst, Mode::Stochastic);
  traj.initial_lower_bound = s.lower_bound();
  while (!s.terminal()) {
    StochStep rec;
    rec.view = s.disjunctive_view();
    auto elig = s.eligible_actions();
    rec.action_op = elig[static_cast<std::size_t>(rng.uniform_int(0, elig.size() - 1))];
    StepOutcome out = s.step(rec.action_op, &rng);
    rec.start = out.start;
    rec.end = out.end;
    rec.branch_resolved = out.branch_resolved;
    rec.lower_bound_after = s.lower_bound();
    traj.steps.push_back(std::move(rec));
  }
  traj.terminal = true;
  traj.final_makespan = s.makespan();
  return traj;
}

}  // namespace

TEST_CASE("replay reproduces the stochastic episode exactly") {
  Rng rng(17);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Instance inst = generate_instance(3, 5, 1, 4000 + seed);
    for (int ep = 0; ep < 5; ++ep) {
      StochTrajectory traj = random_episode(inst, rng);
      HindsightTrajectory twin = reconstruct(inst, traj);
      CHECK(twin.final_makespan == traj.final_makespan);
      REQUIRE(twin.steps.size() == traj.steps.size());
      for (std::size_t t = 0; t < traj.steps.size(); ++t) {
        CHECK(twin.steps[t].action_op == traj.steps[t].action_op);
        CHECK(twin.steps[t].start == traj.steps[t].start);
        CHECK(twin.steps[t].end == traj.steps[t].end);
      }
    }
  }
}

TEST_CASE("hindsight rewards telescope") {
  Rng rng(31);
  Instance inst = generate_instance(4, 8, 2, 900);
  for (int ep = 0; ep < 5; ++ep) {
    StochTrajectory traj = random_episode(inst, rng);
    HindsightTrajectory twin = reconstruct(inst, traj);
    long long acc = 0;
    for (const auto& step : twin.steps) acc += step.reward;
    CHECK(acc == twin.initial_lower_bound - twin.final_makespan);
  }
}

TEST_CASE("extracted scenario matches the engine's realized scenario") {
  Rng rng(5);
  Instance inst = generate_instance(2, 8, 2, 55);
  for (int ep = 0; ep < 10; ++ep) {
    SchedState s = SchedState::reset(inst, Mode::Stochastic);
    StochTrajectory traj;
    traj.instance = &inst;
    while (!s.terminal()) {
      StochStep rec;
      rec.action_op = s.eligible_actions()[0];
      rec.branch_resolved = s.step(rec.action_op, &rng).branch_resolved;
      traj.steps.push_back(std::move(rec));
    }
    traj.terminal = true;
    Scenario extracted = extract_scenario(inst, traj);
    Scenario realized = s.realized_scenario();
    CHECK(extracted.realized_path == realized.realized_path);
    CHECK(extracted.branch_choices == realized.branch_choices);
    CHECK(extracted.probability == doctest::Approx(realized.probability));
  }
}

TEST_CASE("extract_scenario rejects non-terminal trajectories") {
  Instance inst = testfix::make_t1();
  StochTrajectory traj;
  traj.instance = &inst;
  CHECK_THROWS(extract_scenario(inst, traj));
}

TEST_CASE("branch-free replay is a fixed point") {
  // without branches the deterministic twin sees the same dynamics, so a
  // second reconstruction from the twin's own steps changes nothing
  Rng rng(8);
  Instance inst = generate_instance(3, 4, 0, 66);
  StochTrajectory traj = random_episode(inst, rng);
  HindsightTrajectory twin = reconstruct(inst, traj);
  CHECK(twin.final_makespan == traj.final_makespan);
  CHECK(twin.initial_lower_bound == traj.initial_lower_bound);
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    CHECK(twin.steps[t].lower_bound_after == traj.steps[t].lower_bound_after);
    CHECK(twin.steps[t].view.features == traj.steps[t].view.features);
  }
}

TEST_CASE("reconstruct flags a corrupted action stream") {
  Rng rng(2);
  Instance inst = testfix::make_t1();
  StochTrajectory traj = random_episode(inst, rng);
  traj.steps[0].action_op = traj.steps[1].action_op = 1;  // out of order
  CHECK_THROWS(reconstruct(inst, traj));
}
