#pragma once

#include <optional>
#include <vector>

#include "jsslab/engine.hpp"

namespace jsslab {

// One step of a stochastic episode as the actor saw it.
struct StochStep {
  DisjunctiveView view;
  int action_op = -1;
  int action_node = -1;  // index into view.ops
  double log_prob = 0.0;
  long long start = 0, end = 0;
  long long lower_bound_after = 0;
  std::optional<std::pair<int, int>> branch_resolved;
};

struct StochTrajectory {
  const Instance* instance = nullptr;
  std::vector<StochStep> steps;
  long long initial_lower_bound = 0;
  long long final_makespan = 0;
  bool terminal = false;
};

struct HindsightStep {
  DisjunctiveView view;  // deterministic twin state
  int action_op = -1;
  int action_node = -1;
  long long start = 0, end = 0;
  long long reward = 0;
  long long lower_bound_after = 0;
};

struct HindsightTrajectory {
  Scenario scenario;
  std::vector<HindsightStep> steps;
  long long initial_lower_bound = 0;
  long long final_makespan = 0;
};

// The scenario jointly defined by an episode's recorded branch resolutions.
// Throws std::runtime_error if the trajectory is not terminal.
Scenario extract_scenario(const Instance& inst, const StochTrajectory& traj);

// Replays the recorded actions in a deterministic environment reset with the
// extracted scenario, recording twin states and dense rewards. An infeasible
// replay signals an engine bug and throws.
HindsightTrajectory reconstruct(const Instance& inst, const StochTrajectory& traj);

}  // namespace jsslab
