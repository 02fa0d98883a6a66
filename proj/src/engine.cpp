#include "jsslab/engine.hpp"

#include <algorithm>
#include <queue>
#include <stdexcept>

namespace jsslab {

SchedState SchedState::reset(const Instance& inst, Mode mode, const Scenario* scenario) {
  if (mode == Mode::Deterministic && scenario == nullptr)
    throw std::invalid_argument("reset: deterministic mode requires a scenario");
  if (mode == Mode::Stochastic && scenario != nullptr)
    throw std::invalid_argument("reset: stochastic mode takes no scenario");

  SchedState s;
  s.inst_ = &inst;
  s.mode_ = mode;
  int total = inst.total_ops();
  s.info_.resize(total);
  for (const auto& job : inst.jobs) {
    for (const auto& o : job.ops) {
      auto& in = s.info_[o.op_id];
      in.job = o.job_id;
      in.machine = o.machine_id;
      in.proc = o.proc_time;
    }
    for (const auto& e : job.edges) {
      s.info_[e.from].succs.push_back({e.to, e.prob});
      s.info_[e.to].preds.push_back(e.from);
    }
  }
  // global topological order: per-job Kahn, jobs concatenated
  s.topo_.reserve(total);
  for (const auto& job : inst.jobs) {
    std::map<int, int> indeg;
    for (const auto& o : job.ops) indeg[o.op_id] = 0;
    for (const auto& e : job.edges) indeg[e.to]++;
    std::priority_queue<int, std::vector<int>, std::greater<int>> q;
    for (const auto& [id, d] : indeg)
      if (d == 0) q.push(id);
    while (!q.empty()) {
      int u = q.top();
      q.pop();
      s.topo_.push_back(u);
      for (const auto& [v, p] : s.info_[u].succs)
        if (--indeg[v] == 0) q.push(v);
    }
  }

  s.state_.assign(total, kActive);
  s.start_.assign(total, -1);
  s.end_.assign(total, -1);
  s.ready_.assign(total, 0);
  s.machine_free_.assign(inst.n_machines, 0);
  s.front_.assign(inst.n_jobs, -1);
  s.last_dispatched_.assign(inst.n_jobs, -1);
  s.path_.assign(inst.n_jobs, {});
  for (const auto& job : inst.jobs) s.front_[job.job_id] = job.source_op;

  if (mode == Mode::Deterministic) {
    s.realized_ = scenario->branch_choices;
    std::vector<char> on_path(total, 0);
    for (const auto& path : scenario->realized_path)
      for (int op : path) on_path[op] = 1;
    for (int op = 0; op < total; ++op)
      if (!on_path[op]) s.state_[op] = kEliminated;
  }
  return s;
}

bool SchedState::terminal() const {
  for (int f : front_)
    if (f != -1) return false;
  return true;
}

long long SchedState::makespan() const {
  long long m = 0;
  for (std::size_t op = 0; op < state_.size(); ++op)
    if (state_[op] == kDispatched) m = std::max(m, end_[op]);
  return m;
}

std::vector<int> SchedState::eligible_actions() const {
  if (terminal()) throw std::logic_error("eligible_actions: called on terminal state");
  std::vector<int> out;
  for (int f : front_)
    if (f != -1) out.push_back(f);
  return out;
}

std::vector<std::pair<int, double>> SchedState::feasible_succs(int op_id) const {
  auto it = realized_.find(op_id);
  if (it != realized_.end()) return {{it->second, 1.0}};
  std::vector<std::pair<int, double>> out;
  for (const auto& [v, p] : info_[op_id].succs)
    if (state_[v] != kEliminated) out.push_back({v, p});
  if (out.size() == 1) out[0].second = 1.0;
  return out;
}

void SchedState::eliminate_unchosen(int branch_op, int chosen) {
  std::vector<char> keep(state_.size(), 0);
  std::vector<int> stack = {chosen};
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    if (keep[u]) continue;
    keep[u] = 1;
    for (const auto& [v, p] : info_[u].succs)
      if (state_[v] != kEliminated) stack.push_back(v);
  }
  for (const auto& [v, p] : info_[branch_op].succs)
    if (v != chosen && !keep[v]) stack.push_back(v);
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    if (keep[u] || state_[u] == kEliminated) continue;
    state_[u] = kEliminated;
    for (const auto& [v, p] : info_[u].succs)
      if (!keep[v]) stack.push_back(v);
  }
}

StepOutcome SchedState::step(int op_id, Rng* rng) {
  if (op_id < 0 || op_id >= static_cast<int>(state_.size()) ||
      state_[op_id] != kActive || front_[info_[op_id].job] != op_id)
    throw std::logic_error("step: illegal action");

  const OpInfo& in = info_[op_id];
  StepOutcome out;
  out.op = op_id;
  out.start = std::max(machine_free_[in.machine], ready_[op_id]);
  out.end = out.start + in.proc;

  state_[op_id] = kDispatched;
  start_[op_id] = out.start;
  end_[op_id] = out.end;
  machine_free_[in.machine] = out.end;
  clock_ = std::max(clock_, out.start);
  last_dispatched_[in.job] = op_id;
  path_[in.job].push_back(op_id);

  auto succs = feasible_succs(op_id);
  int next = -1;
  if (succs.size() == 1) {
    next = succs[0].first;
  } else if (succs.size() > 1) {
    if (rng == nullptr) throw std::logic_error("step: rng required to resolve a branch");
    std::vector<double> w;
    for (const auto& [v, p] : succs) w.push_back(p);
    next = succs[rng->categorical(w)].first;
    realized_[op_id] = next;
    eliminate_unchosen(op_id, next);
    out.branch_resolved = {op_id, next};
  }
  front_[in.job] = next;
  if (next != -1) ready_[next] = out.end;
  out.terminal = terminal();
  return out;
}

std::vector<long long> SchedState::est_completion() const {
  std::vector<long long> est(state_.size(), -1);
  for (int op : topo_) {
    if (state_[op] == kEliminated) continue;
    if (state_[op] == kDispatched) {
      est[op] = end_[op];
      continue;
    }
    long long base = 0;
    for (int p : info_[op].preds)
      if (state_[p] != kEliminated && est[p] >= 0) base = std::max(base, est[p]);
    est[op] = base + info_[op].proc;
  }
  return est;
}

long long SchedState::lower_bound() const {
  long long lb = 0;
  for (long long e : est_completion()) lb = std::max(lb, e);
  return lb;
}

long long reward(const SchedState& prev, const SchedState& next) {
  return prev.lower_bound() - next.lower_bound();
}

namespace {

// f[op] = value(op) + sum over feasible successors of w * f[succ],
// evaluated in reverse topological order over non-eliminated ops.
template <typename ValueFn, typename SuccFn>
std::vector<double> backward_expectation(const std::vector<int>& topo,
                                         std::size_t total, ValueFn value,
                                         SuccFn succs) {
  std::vector<double> f(total, 0.0);
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    int op = *it;
    auto s = succs(op);
    if (!s.has_value()) continue;  // eliminated
    double acc = value(op);
    for (const auto& [v, w] : s.value()) acc += w * f[v];
    f[op] = acc;
  }
  return f;
}

}  // namespace

double SchedState::remaining_work(int job_id) const {
  int front = front_[job_id];
  if (front == -1) return 0.0;
  auto f = backward_expectation(
      topo_, state_.size(), [&](int op) { return static_cast<double>(info_[op].proc); },
      [&](int op) -> std::optional<std::vector<std::pair<int, double>>> {
        if (state_[op] == kEliminated) return std::nullopt;
        return feasible_succs(op);
      });
  return f[front];
}

double SchedState::remaining_ops(int job_id) const {
  int front = front_[job_id];
  if (front == -1) return 0.0;
  auto f = backward_expectation(
      topo_, state_.size(), [&](int) { return 1.0; },
      [&](int op) -> std::optional<std::vector<std::pair<int, double>>> {
        if (state_[op] == kEliminated) return std::nullopt;
        return feasible_succs(op);
      });
  return f[front];
}

DisjunctiveView SchedState::disjunctive_view() const {
  DisjunctiveView view;
  int total = static_cast<int>(state_.size());
  std::vector<int> node_of(total, -1);
  for (int op = 0; op < total; ++op) {
    bool boundary = last_dispatched_[info_[op].job] == op;
    if (state_[op] == kActive || boundary) {
      node_of[op] = view.n();
      view.ops.push_back(op);
    }
  }

  auto est = est_completion();
  // reach probability: 1 at each front, propagated through feasible edges
  std::vector<double> reach(total, 0.0);
  for (int f : front_)
    if (f != -1) reach[f] = 1.0;
  for (int op : topo_) {
    if (state_[op] != kActive || reach[op] == 0.0) continue;
    for (const auto& [v, w] : feasible_succs(op)) reach[v] += reach[op] * w;
  }

  std::vector<double> rem_work(inst_->n_jobs), rem_ops(inst_->n_jobs);
  for (int j = 0; j < inst_->n_jobs; ++j) {
    rem_work[j] = remaining_work(j);
    rem_ops[j] = remaining_ops(j);
  }

  double tnorm = 99.0 * inst_->n_machines;
  view.features.assign(static_cast<std::size_t>(view.n()) * DisjunctiveView::kFeatDim, 0.0);
  for (int i = 0; i < view.n(); ++i) {
    int op = view.ops[i];
    const OpInfo& in = info_[op];
    double* f = &view.features[static_cast<std::size_t>(i) * DisjunctiveView::kFeatDim];
    if (state_[op] == kActive) {
      f[front_[in.job] == op ? 0 : 1] = 1.0;
    } else {
      f[end_[op] > clock_ ? 2 : 3] = 1.0;
    }
    f[4] = in.proc / tnorm;
    f[5] = est[op] / tnorm;
    f[6] = rem_work[in.job] / tnorm;
    f[7] = rem_ops[in.job] / inst_->n_machines;
    f[8] = (state_[op] == kActive && !realized_.count(op) && feasible_succs(op).size() > 1) ? 1.0 : 0.0;
    f[9] = state_[op] == kActive ? reach[op] : 1.0;
  }

  for (int i = 0; i < view.n(); ++i) {
    int op = view.ops[i];
    for (const auto& [v, w] : feasible_succs(op))
      if (node_of[v] != -1) view.conj_edges.push_back({i, node_of[v]});
  }
  for (int i = 0; i < view.n(); ++i) {
    int op = view.ops[i];
    if (state_[op] != kActive) continue;
    for (int k = i + 1; k < view.n(); ++k) {
      int other = view.ops[k];
      if (state_[other] == kActive && info_[other].machine == info_[op].machine)
        view.disj_edges.push_back({i, k});
    }
  }
  for (int i = 0; i < view.n(); ++i) {
    int op = view.ops[i];
    if (state_[op] != kDispatched) continue;
    for (int k = 0; k < view.n(); ++k) {
      int other = view.ops[k];
      if (state_[other] == kActive && info_[other].machine == info_[op].machine)
        view.seq_edges.push_back({i, k});
    }
  }
  return view;
}

Scenario SchedState::realized_scenario() const {
  if (mode_ == Mode::Stochastic && !terminal())
    throw std::logic_error("realized_scenario: stochastic episode not terminal");
  Scenario scen;
  scen.realized_path.resize(inst_->n_jobs);
  for (int op : topo_)
    if (state_[op] != kEliminated) scen.realized_path[info_[op].job].push_back(op);
  scen.branch_choices = realized_;
  scen.probability = 1.0;
  for (const auto& [b, chosen] : realized_) {
    for (const auto& [v, p] : info_[b].succs)
      if (v == chosen) scen.probability *= p;
  }
  return scen;
}

}  // namespace jsslab
