#pragma once

#include <cstdint>

#include "jsslab/engine.hpp"

namespace jsslab {

struct SolveOptions {
  std::uint64_t node_budget = 50'000'000;
  bool use_lb_prune = true;
  bool use_dominance = true;
};

struct SolveResult {
  long long optimum = 0;
  bool proved = false;  // search completed within the node budget
  std::uint64_t nodes = 0;
};

// Depth-first branch and bound over dispatch orders of one deterministic
// scenario. Children expand ascending by estimated completion; subtrees with
// lower_bound >= incumbent are cut. Budget exhaustion returns the best found
// with proved = false.
SolveResult solve_optimal(const Instance& inst, const Scenario& scen,
                          const SolveOptions& opts = {});

// Probability-weighted mean of per-scenario optima over all enumerable
// scenarios of the instance.
double expected_optimal(const Instance& inst, std::size_t cap = 4096,
                        const SolveOptions& opts = {});

}  // namespace jsslab
