#pragma once

#include "jsslab/instance.hpp"
#include "jsslab/rules.hpp"

namespace jsslab::testfix {

// T1: two jobs, two machines, no branching.
//   J1: (M0, 3) -> (M1, 2)   ops 0, 1
//   J2: (M1, 2) -> (M0, 4)   ops 2, 3
// Known values: reset C_LB 6, optimum 7.
inline Instance make_t1() {
  Instance inst;
  inst.n_jobs = 2;
  inst.n_machines = 2;
  inst.n_branch = 0;
  inst.seed = 0;
  JobGraph j0;
  j0.job_id = 0;
  j0.ops = {{0, 0, 0, 3}, {1, 0, 1, 2}};
  j0.edges = {{0, 1, 1.0}};
  JobGraph j1;
  j1.job_id = 1;
  j1.ops = {{2, 1, 1, 2}, {3, 1, 0, 4}};
  j1.edges = {{2, 3, 1.0}};
  inst.jobs = {j0, j1};
  inst.finalize();
  return inst;
}

inline Scenario t1_scenario() {
  Scenario s;
  s.realized_path = {{0, 1}, {2, 3}};
  s.probability = 1.0;
  return s;
}

// One job, four ops: 0 branches to 1 (prob p) or 2 (prob 1-p), both merge
// into 3. Machines: 0, 1, 0, 1; proc times 2, 3, 5, 1.
inline Instance make_branchy(double p = 0.5) {
  Instance inst;
  inst.n_jobs = 1;
  inst.n_machines = 2;
  inst.n_branch = 1;
  inst.seed = 0;
  JobGraph j;
  j.job_id = 0;
  j.ops = {{0, 0, 0, 2}, {1, 0, 1, 3}, {2, 0, 0, 5}, {3, 0, 1, 1}};
  j.edges = {{0, 1, p}, {0, 2, 1.0 - p}, {1, 3, 1.0}, {2, 3, 1.0}};
  inst.jobs = {j};
  inst.finalize();
  return inst;
}

// Complete episode under one dispatching rule; returns the makespan.
inline long long run_rule_episode(const Instance& inst, RuleKind rule, Rng& rng,
                                  const Scenario* scen = nullptr) {
  SchedState s = SchedState::reset(
      inst, scen ? Mode::Deterministic : Mode::Stochastic, scen);
  while (!s.terminal()) {
    int op = apply_rule(rule, s, s.eligible_actions(), &rng);
    s.step(op, &rng);
  }
  return s.makespan();
}

}  // namespace jsslab::testfix
