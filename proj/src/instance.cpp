#include "jsslab/instance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace jsslab {

int Instance::total_ops() const {
  int n = 0;
  for (const auto& j : jobs) n += static_cast<int>(j.ops.size());
  return n;
}

const Operation& Instance::op(int op_id) const {
  if (op_id < 0 || op_id >= static_cast<int>(op_loc_.size()))
    throw std::out_of_range("Instance::op: bad op_id");
  auto [ji, oi] = op_loc_[op_id];
  return jobs[ji].ops[oi];
}

int Instance::job_of(int op_id) const { return op(op_id).job_id; }

void Instance::finalize() {
  int total = total_ops();
  op_loc_.assign(total, {-1, -1});
  for (int ji = 0; ji < static_cast<int>(jobs.size()); ++ji) {
    const auto& job = jobs[ji];
    for (int oi = 0; oi < static_cast<int>(job.ops.size()); ++oi) {
      int id = job.ops[oi].op_id;
      if (id < 0 || id >= total || op_loc_[id].first != -1)
        throw std::runtime_error("instance: op ids must be unique and contiguous in [0, total)");
      if (job.ops[oi].proc_time < 1) throw std::runtime_error("instance: proc_time must be >= 1");
      if (job.ops[oi].machine_id < 0 || job.ops[oi].machine_id >= n_machines)
        throw std::runtime_error("instance: machine_id out of range");
      if (job.ops[oi].job_id != job.job_id) throw std::runtime_error("instance: op job_id mismatch");
      op_loc_[id] = {ji, oi};
    }
  }
  if (static_cast<int>(jobs.size()) != n_jobs) throw std::runtime_error("instance: n_jobs mismatch");

  for (auto& job : jobs) {
    std::map<int, std::vector<JobEdge>> out;
    std::map<int, int> indeg;
    for (const auto& o : job.ops) indeg[o.op_id] = 0;
    for (const auto& e : job.edges) {
      if (!indeg.count(e.from) || !indeg.count(e.to))
        throw std::runtime_error("instance: edge endpoint not in job");
      if (e.prob < 0.0 || e.prob > 1.0) throw std::runtime_error("instance: edge prob out of [0,1]");
      out[e.from].push_back(e);
      indeg[e.to]++;
    }
    // probability sums at non-sink nodes
    job.sinks.clear();
    for (const auto& o : job.ops) {
      auto it = out.find(o.op_id);
      if (it == out.end() || it->second.empty()) {
        job.sinks.push_back(o.op_id);
        continue;
      }
      double s = 0.0;
      for (const auto& e : it->second) s += e.prob;
      if (std::abs(s - 1.0) > 1e-9)
        throw std::runtime_error("instance: outgoing probabilities do not sum to 1");
    }
    // exactly one source
    std::vector<int> sources;
    for (const auto& [id, d] : indeg)
      if (d == 0) sources.push_back(id);
    if (sources.size() != 1) throw std::runtime_error("instance: job must have exactly one source");
    job.source_op = sources[0];
    // acyclicity + reachability (Kahn from indegrees; BFS from source)
    std::map<int, int> deg = indeg;
    std::queue<int> q;
    for (const auto& [id, d] : deg)
      if (d == 0) q.push(id);
    int seen = 0;
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      ++seen;
      for (const auto& e : out[u])
        if (--deg[e.to] == 0) q.push(e.to);
    }
    if (seen != static_cast<int>(job.ops.size())) throw std::runtime_error("instance: job DAG has a cycle");
    std::vector<int> stack = {job.source_op};
    std::map<int, bool> reach;
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      if (reach[u]) continue;
      reach[u] = true;
      for (const auto& e : out[u]) stack.push_back(e.to);
    }
    for (const auto& o : job.ops)
      if (!reach[o.op_id]) throw std::runtime_error("instance: op unreachable from source");
  }
}

Instance generate_instance(int n_jobs, int n_machines, int n_branch,
                           std::uint64_t seed, double branch_prob) {
  if (n_jobs < 1 || n_machines < 2 || n_branch < 0 || n_branch > n_machines / 4)
    throw std::invalid_argument("generate_instance: invalid dimensions");
  if (branch_prob < 0.0 || branch_prob > 1.0)
    throw std::invalid_argument("generate_instance: branch_prob out of range");

  Instance inst;
  inst.n_jobs = n_jobs;
  inst.n_machines = n_machines;
  inst.n_branch = n_branch;
  inst.seed = seed;

  Rng rng(child_seed(seed, "generate"));
  int next_op = 0;
  for (int j = 0; j < n_jobs; ++j) {
    JobGraph job;
    job.job_id = j;
    std::vector<int> perm(n_machines);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);

    // Branch segments at evenly spaced positions; position 0 stays linear so
    // the op before each segment is the branching op.
    std::vector<int> starts(n_branch);
    for (int b = 0; b < n_branch; ++b)
      starts[b] = 1 + b * (n_machines - 1) / std::max(1, n_branch);

    auto make_op = [&](int machine) {
      Operation o;
      o.op_id = next_op++;
      o.job_id = j;
      o.machine_id = machine;
      o.proc_time = static_cast<int>(rng.uniform_int(1, 99));
      job.ops.push_back(o);
      return o.op_id;
    };

    int prev = -1;
    int b_idx = 0;
    int pos = 0;
    while (pos < n_machines) {
      if (b_idx < n_branch && pos == starts[b_idx]) {
        int m1 = perm[pos], m2 = perm[pos + 1];
        int a1 = make_op(m1);
        int a2 = make_op(m2);
        int b1 = make_op(m2);
        int b2 = make_op(m1);
        job.edges.push_back({prev, a1, branch_prob});
        job.edges.push_back({prev, b1, 1.0 - branch_prob});
        job.edges.push_back({a1, a2, 1.0});
        job.edges.push_back({b1, b2, 1.0});
        // merge into the common tail op created on the next loop turn
        int tail = make_op(perm[pos + 2]);
        job.edges.push_back({a2, tail, 1.0});
        job.edges.push_back({b2, tail, 1.0});
        prev = tail;
        pos += 3;
        ++b_idx;
      } else {
        int id = make_op(perm[pos]);
        if (prev >= 0) job.edges.push_back({prev, id, 1.0});
        prev = id;
        ++pos;
      }
    }
    inst.jobs.push_back(std::move(job));
  }
  inst.finalize();
  return inst;
}

namespace {

// Successor edges of one op within its job.
std::vector<JobEdge> succs_of(const JobGraph& job, int op_id) {
  std::vector<JobEdge> out;
  for (const auto& e : job.edges)
    if (e.from == op_id) out.push_back(e);
  return out;
}

}  // namespace

Scenario sample_scenario(const Instance& inst, Rng& rng) {
  Scenario scen;
  scen.realized_path.resize(inst.jobs.size());
  scen.probability = 1.0;
  for (const auto& job : inst.jobs) {
    int cur = job.source_op;
    while (true) {
      scen.realized_path[job.job_id].push_back(cur);
      auto out = succs_of(job, cur);
      if (out.empty()) break;
      std::size_t pick = 0;
      if (out.size() > 1) {
        std::vector<double> w;
        for (const auto& e : out) w.push_back(e.prob);
        pick = rng.categorical(w);
        scen.branch_choices[cur] = out[pick].to;
        scen.probability *= out[pick].prob;
      }
      cur = out[pick].to;
    }
  }
  return scen;
}

std::vector<Scenario> enumerate_scenarios(const Instance& inst, std::size_t cap) {
  // Per-job path enumeration first, then the cross product.
  struct JobPath {
    std::vector<int> path;
    std::map<int, int> choices;
    double prob;
  };
  std::vector<std::vector<JobPath>> per_job;
  std::size_t total = 1;
  for (const auto& job : inst.jobs) {
    std::vector<JobPath> paths;
    std::vector<JobPath> stack = {{{job.source_op}, {}, 1.0}};
    while (!stack.empty()) {
      JobPath p = std::move(stack.back());
      stack.pop_back();
      auto out = succs_of(job, p.path.back());
      if (out.empty()) {
        paths.push_back(std::move(p));
        continue;
      }
      for (const auto& e : out) {
        JobPath q = p;
        if (out.size() > 1) {
          q.choices[p.path.back()] = e.to;
          q.prob *= e.prob;
        }
        q.path.push_back(e.to);
        stack.push_back(std::move(q));
      }
    }
    std::sort(paths.begin(), paths.end(),
              [](const JobPath& a, const JobPath& b) { return a.path < b.path; });
    total *= paths.size();
    if (total > cap) {
      std::ostringstream msg;
      msg << "enumerate_scenarios: scenario count exceeds cap " << cap;
      throw std::runtime_error(msg.str());
    }
    per_job.push_back(std::move(paths));
  }

  std::vector<Scenario> result;
  std::vector<std::size_t> idx(per_job.size(), 0);
  while (true) {
    Scenario s;
    s.realized_path.resize(per_job.size());
    s.probability = 1.0;
    for (std::size_t j = 0; j < per_job.size(); ++j) {
      const JobPath& p = per_job[j][idx[j]];
      s.realized_path[j] = p.path;
      for (const auto& [k, v] : p.choices) s.branch_choices[k] = v;
      s.probability *= p.prob;
    }
    result.push_back(std::move(s));
    std::size_t j = per_job.size();
    while (j > 0) {
      --j;
      if (++idx[j] < per_job[j].size()) break;
      idx[j] = 0;
      if (j == 0) return result;
    }
  }
}

using ojson = nlohmann::ordered_json;

std::string instance_to_json(const Instance& inst) {
  ojson doc;
  doc["version"] = 1;
  doc["n_jobs"] = inst.n_jobs;
  doc["n_machines"] = inst.n_machines;
  doc["n_branch"] = inst.n_branch;
  doc["seed"] = inst.seed;
  doc["jobs"] = ojson::array();
  for (const auto& job : inst.jobs) {
    ojson jj;
    jj["job_id"] = job.job_id;
    jj["ops"] = ojson::array();
    for (const auto& o : job.ops)
      jj["ops"].push_back({{"op_id", o.op_id}, {"machine_id", o.machine_id}, {"proc_time", o.proc_time}});
    jj["edges"] = ojson::array();
    for (const auto& e : job.edges)
      jj["edges"].push_back({{"from", e.from}, {"to", e.to}, {"prob", e.prob}});
    jj["source"] = job.source_op;
    doc["jobs"].push_back(std::move(jj));
  }
  return doc.dump(2) + "\n";
}

Instance instance_from_json(const std::string& text) {
  ojson doc = ojson::parse(text);
  Instance inst;
  inst.n_jobs = doc.at("n_jobs").get<int>();
  inst.n_machines = doc.at("n_machines").get<int>();
  inst.n_branch = doc.at("n_branch").get<int>();
  inst.seed = doc.at("seed").get<std::uint64_t>();
  for (const auto& jj : doc.at("jobs")) {
    JobGraph job;
    job.job_id = jj.at("job_id").get<int>();
    for (const auto& oj : jj.at("ops")) {
      Operation o;
      o.op_id = oj.at("op_id").get<int>();
      o.job_id = job.job_id;
      o.machine_id = oj.at("machine_id").get<int>();
      o.proc_time = oj.at("proc_time").get<int>();
      job.ops.push_back(o);
    }
    for (const auto& ej : jj.at("edges"))
      job.edges.push_back({ej.at("from").get<int>(), ej.at("to").get<int>(), ej.at("prob").get<double>()});
    inst.jobs.push_back(std::move(job));
  }
  inst.finalize();
  return inst;
}

std::string scenario_to_json(const Instance& inst, const Scenario& scen) {
  ojson doc;
  doc["version"] = 1;
  doc["instance"] = ojson::parse(instance_to_json(inst));
  doc["realized_path"] = scen.realized_path;
  ojson choices = ojson::object();
  for (const auto& [k, v] : scen.branch_choices) choices[std::to_string(k)] = v;
  doc["branch_choices"] = choices;
  doc["probability"] = scen.probability;
  return doc.dump(2) + "\n";
}

std::pair<Instance, Scenario> scenario_from_json(const std::string& text) {
  ojson doc = ojson::parse(text);
  Instance inst = instance_from_json(doc.at("instance").dump());
  Scenario scen;
  scen.realized_path = doc.at("realized_path").get<std::vector<std::vector<int>>>();
  for (const auto& [k, v] : doc.at("branch_choices").items())
    scen.branch_choices[std::stoi(k)] = v.get<int>();
  scen.probability = doc.value("probability", 1.0);
  return {std::move(inst), std::move(scen)};
}

}  // namespace jsslab
