#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "jsslab/instance.hpp"
#include "jsslab/rng.hpp"

namespace jsslab {

enum class Mode { Stochastic, Deterministic };

struct StepOutcome {
  int op = -1;
  long long start = 0;
  long long end = 0;
  std::optional<std::pair<int, int>> branch_resolved;  // (branching op, chosen successor)
  bool terminal = false;
};

// Snapshot of the dynamic disjunctive graph: uncompleted ops plus each job's
// most recent dispatched op as a boundary node. Edges index into `ops`.
struct DisjunctiveView {
  static constexpr int kFeatDim = 10;
  // feature layout per node:
  //   0..3  status one-hot: ready, not-ready, ongoing, done-boundary
  //   4     proc_time / (99 * n_machines)
  //   5     est completion / (99 * n_machines)
  //   6     job expected remaining work / (99 * n_machines)
  //   7     job expected remaining op count / n_machines
  //   8     unresolved-branching flag
  //   9     reach probability
  std::vector<int> ops;                          // node -> op_id
  std::vector<double> features;                  // n x kFeatDim, row-major
  std::vector<std::pair<int, int>> conj_edges;   // directed (pred, succ)
  std::vector<std::pair<int, int>> disj_edges;   // undirected, first < second
  std::vector<std::pair<int, int>> seq_edges;    // directed, machine order fixed

  int n() const { return static_cast<int>(ops.size()); }
  double feat(int node, int k) const { return features[static_cast<std::size_t>(node) * kFeatDim + k]; }
  bool ready(int node) const { return feat(node, 0) > 0.5; }
};

// Step-based scheduling environment. One dispatch per step; an operation
// becomes eligible once its predecessor has been dispatched (its start time is
// then determined). Branches resolve at dispatch of the branching op.
class SchedState {
 public:
  static SchedState reset(const Instance& inst, Mode mode,
                          const Scenario* scenario = nullptr);

  // Dispatchable ops, ascending by job. Throws on a terminal state.
  std::vector<int> eligible_actions() const;

  // Dispatches op_id. rng is required when this resolves a branch in
  // stochastic mode. Throws on an illegal action.
  StepOutcome step(int op_id, Rng* rng = nullptr);

  // Critical-path makespan lower bound. At unresolved branches (stochastic
  // mode) the pessimistic max over alternatives is taken.
  long long lower_bound() const;

  DisjunctiveView disjunctive_view() const;

  bool terminal() const;
  long long makespan() const;
  Mode mode() const { return mode_; }
  const Instance& instance() const { return *inst_; }

  // Expected remaining metrics of a job (probability-weighted at unresolved
  // branches); shared by MWKR/LWKR/MOR/LOR and the node features.
  double remaining_work(int job_id) const;
  double remaining_ops(int job_id) const;

  long long machine_free(int machine) const { return machine_free_[machine]; }
  int job_front(int job_id) const { return front_[job_id]; }
  bool dispatched(int op_id) const { return state_[op_id] == kDispatched; }
  bool eliminated(int op_id) const { return state_[op_id] == kEliminated; }
  long long op_start(int op_id) const { return start_[op_id]; }
  long long op_end(int op_id) const { return end_[op_id]; }
  long long ready_time(int op_id) const { return ready_[op_id]; }
  const std::map<int, int>& realized() const { return realized_; }

  // The unique Scenario defined by this episode's branch resolutions.
  // Requires a terminal state in stochastic mode.
  Scenario realized_scenario() const;

 private:
  static constexpr char kActive = 0, kDispatched = 1, kEliminated = 2;

  struct OpInfo {
    int job, machine, proc;
    std::vector<std::pair<int, double>> succs;  // (op, edge prob)
    std::vector<int> preds;
  };

  std::vector<std::pair<int, double>> feasible_succs(int op_id) const;
  std::vector<long long> est_completion() const;  // -1 for eliminated ops
  void eliminate_unchosen(int branch_op, int chosen);

  const Instance* inst_ = nullptr;
  Mode mode_ = Mode::Stochastic;
  std::vector<OpInfo> info_;
  std::vector<int> topo_;  // all ops, job-DAG topological order
  std::vector<char> state_;
  std::vector<long long> start_, end_, ready_;
  std::vector<long long> machine_free_;
  std::vector<int> front_;            // per job; -1 when the job is done
  std::vector<int> last_dispatched_;  // per job; -1 before the first dispatch
  std::vector<std::vector<int>> path_;
  std::map<int, int> realized_;
  long long clock_ = 0;  // latest dispatch start time
};

// Dense reward: negative growth of the makespan lower bound.
long long reward(const SchedState& prev, const SchedState& next);

}  // namespace jsslab
