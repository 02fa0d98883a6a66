#include "jsslab/hindsight.hpp"

#include <algorithm>
#include <stdexcept>

namespace jsslab {

Scenario extract_scenario(const Instance& inst, const StochTrajectory& traj) {
  if (!traj.terminal)
    throw std::runtime_error("extract_scenario: trajectory is not terminal");

  std::map<int, int> choices;
  for (const auto& step : traj.steps)
    if (step.branch_resolved)
      choices[step.branch_resolved->first] = step.branch_resolved->second;

  Scenario scen;
  scen.realized_path.resize(inst.n_jobs);
  scen.probability = 1.0;
  for (const auto& job : inst.jobs) {
    int cur = job.source_op;
    while (true) {
      scen.realized_path[job.job_id].push_back(cur);
      std::vector<JobEdge> out;
      for (const auto& e : job.edges)
        if (e.from == cur) out.push_back(e);
      if (out.empty()) break;
      int next = -1;
      if (out.size() == 1) {
        next = out[0].to;
      } else {
        auto it = choices.find(cur);
        if (it == choices.end())
          throw std::runtime_error("extract_scenario: unresolved branch in terminal trajectory");
        next = it->second;
        scen.branch_choices[cur] = next;
        for (const auto& e : out)
          if (e.to == next) scen.probability *= e.prob;
      }
      cur = next;
    }
  }
  return scen;
}

HindsightTrajectory reconstruct(const Instance& inst, const StochTrajectory& traj) {
  HindsightTrajectory out;
  out.scenario = extract_scenario(inst, traj);

  SchedState state = SchedState::reset(inst, Mode::Deterministic, &out.scenario);
  out.initial_lower_bound = state.lower_bound();
  long long prev_lb = out.initial_lower_bound;
  for (const auto& step : traj.steps) {
    auto eligible = state.eligible_actions();
    if (std::find(eligible.begin(), eligible.end(), step.action_op) == eligible.end())
      throw std::runtime_error("reconstruct: recorded action infeasible in replay (engine bug)");
    HindsightStep h;
    h.view = state.disjunctive_view();
    h.action_op = step.action_op;
    // the twin view shares node ordering conventions with the stochastic view,
    // but the node index must be located in this view
    for (int i = 0; i < h.view.n(); ++i)
      if (h.view.ops[i] == step.action_op) h.action_node = i;
    StepOutcome so = state.step(step.action_op);
    h.start = so.start;
    h.end = so.end;
    long long lb = state.lower_bound();
    h.reward = prev_lb - lb;
    h.lower_bound_after = lb;
    prev_lb = lb;
    out.steps.push_back(std::move(h));
  }
  if (!state.terminal())
    throw std::runtime_error("reconstruct: replay did not reach a terminal state");
  out.final_makespan = state.makespan();
  return out;
}

}  // namespace jsslab
