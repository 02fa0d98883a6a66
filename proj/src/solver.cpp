#include "jsslab/solver.hpp"

#include <algorithm>
#include <limits>
#include <map>

namespace jsslab {

namespace {

struct Search {
  const SolveOptions* opts;
  long long incumbent = std::numeric_limits<long long>::max();
  std::uint64_t nodes = 0;
  bool exhausted = false;

  void dfs(const SchedState& state) {
    if (++nodes > opts->node_budget) {
      exhausted = true;
      return;
    }
    if (state.terminal()) {
      incumbent = std::min(incumbent, state.makespan());
      return;
    }
    if (opts->use_lb_prune && state.lower_bound() >= incumbent) return;

    auto eligible = state.eligible_actions();
    const Instance& inst = state.instance();
    // expand ascending by estimated completion, ties by (job, op)
    std::vector<std::pair<long long, int>> order;
    for (int op : eligible) {
      long long start = std::max(state.machine_free(inst.op(op).machine_id),
                                 state.ready_time(op));
      order.push_back({start + inst.op(op).proc_time, op});
    }
    std::sort(order.begin(), order.end());

    // transposition dominance: skip a child whose start is at or past the
    // completion of an already-tried sibling on the same machine
    std::map<int, long long> tried_end;
    for (const auto& [est, op] : order) {
      int m = inst.op(op).machine_id;
      long long start = std::max(state.machine_free(m), state.ready_time(op));
      if (opts->use_dominance) {
        auto it = tried_end.find(m);
        if (it != tried_end.end() && start >= it->second) continue;
      }
      SchedState child = state;
      child.step(op);
      dfs(child);
      if (exhausted) return;
      auto it = tried_end.find(m);
      long long end = start + inst.op(op).proc_time;
      if (it == tried_end.end() || end < it->second) tried_end[m] = end;
    }
  }
};

}  // namespace

SolveResult solve_optimal(const Instance& inst, const Scenario& scen,
                          const SolveOptions& opts) {
  Search search;
  search.opts = &opts;
  search.dfs(SchedState::reset(inst, Mode::Deterministic, &scen));
  SolveResult res;
  res.optimum = search.incumbent;
  res.proved = !search.exhausted;
  res.nodes = search.nodes;
  return res;
}

double expected_optimal(const Instance& inst, std::size_t cap,
                        const SolveOptions& opts) {
  double acc = 0.0;
  for (const auto& scen : enumerate_scenarios(inst, cap))
    acc += scen.probability * static_cast<double>(solve_optimal(inst, scen, opts).optimum);
  return acc;
}

}  // namespace jsslab
