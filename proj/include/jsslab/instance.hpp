#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "jsslab/rng.hpp"

namespace jsslab {

struct Operation {
  int op_id = -1;      // unique within the instance
  int job_id = -1;
  int machine_id = -1;
  int proc_time = 0;   // integer time units, >= 1
};

struct JobEdge {
  int from = -1;
  int to = -1;
  double prob = 1.0;  // in (0, 1]
};

// One job's probabilistic routing DAG. Non-branching ops have a single
// outgoing edge with probability 1; branching ops have >= 2 successors whose
// probabilities sum to 1.
struct JobGraph {
  int job_id = -1;
  std::vector<Operation> ops;
  std::vector<JobEdge> edges;
  int source_op = -1;
  std::vector<int> sinks;
};

struct Instance {
  int n_jobs = 0;
  int n_machines = 0;
  int n_branch = 0;
  std::uint64_t seed = 0;
  std::vector<JobGraph> jobs;

  int total_ops() const;
  const Operation& op(int op_id) const;
  int job_of(int op_id) const;

  // Checks all structural invariants (acyclicity, probability sums, unique
  // source, reachability) and builds the op lookup. Throws on violation.
  void finalize();

 private:
  std::vector<std::pair<int, int>> op_loc_;  // op_id -> (job index, op index)
};

// One deterministic realization: a classical JSSP instance.
struct Scenario {
  std::vector<std::vector<int>> realized_path;  // per job, source-to-sink op ids
  std::map<int, int> branch_choices;            // branching op -> chosen successor
  double probability = 1.0;
};

// Taillard-style procedural generator. Each job is a machine permutation of
// length n_machines; each branching point replaces a 2-machine segment with
// two alternative segments over the same machines (both orders), with fresh
// processing times drawn uniformly from [1, 99]. branch_prob is the
// probability of the first alternative.
Instance generate_instance(int n_jobs, int n_machines, int n_branch,
                           std::uint64_t seed, double branch_prob = 0.5);

Scenario sample_scenario(const Instance& inst, Rng& rng);

// All distinct joint branch realizations with their joint probabilities.
// Throws std::runtime_error if the count exceeds cap.
std::vector<Scenario> enumerate_scenarios(const Instance& inst,
                                          std::size_t cap = 4096);

// Canonical JSON serialization (see the instance file schema).
std::string instance_to_json(const Instance& inst);
Instance instance_from_json(const std::string& text);

// Scenario file: the parent instance plus one realization.
std::string scenario_to_json(const Instance& inst, const Scenario& scen);
std::pair<Instance, Scenario> scenario_from_json(const std::string& text);

}  // namespace jsslab
