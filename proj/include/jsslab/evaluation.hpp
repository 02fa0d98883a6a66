#pragma once

#include <memory>
#include <string>
#include <vector>

#include "jsslab/models.hpp"
#include "jsslab/rules.hpp"
#include "jsslab/trainer.hpp"

namespace jsslab {

// Mean of the ceil(alpha * n) largest makespans.
double cvar(const std::vector<long long>& makespans, double alpha);
double cvar(const std::vector<double>& makespans, double alpha);

// 100 * (value - reference) / reference; reference must be positive.
double gap_pct(double value, double reference);

// Per-episode action selection. begin_instance is called once before the
// episodes of one instance (a model policy computes its risk vector there).
class EpisodePolicy {
 public:
  virtual ~EpisodePolicy() = default;
  virtual void begin_instance(const Instance& inst, std::uint64_t seed) {}
  virtual int choose(const SchedState& state, const std::vector<int>& eligible,
                     Rng& rng) = 0;
};

class RulePolicy : public EpisodePolicy {
 public:
  explicit RulePolicy(RuleKind rule) : rule_(rule) {}
  int choose(const SchedState& state, const std::vector<int>& eligible, Rng& rng) override {
    return apply_rule(rule_, state, eligible, &rng);
  }

 private:
  RuleKind rule_;
};

// Greedy decoding of a trained model; the risk vector is computed once per
// instance (skipped when use_upm is false).
class ModelPolicy : public EpisodePolicy {
 public:
  ModelPolicy(PolicyModel& model, bool use_upm) : model_(&model), use_upm_(use_upm) {}
  void begin_instance(const Instance& inst, std::uint64_t seed) override;
  int choose(const SchedState& state, const std::vector<int>& eligible, Rng& rng) override;

 private:
  PolicyModel* model_;
  bool use_upm_;
  Tensor z_;
};

struct EvalRow {
  std::string instance_id;
  std::string policy;
  std::vector<long long> makespans;
  double avg = 0.0;
  double cvar = 0.0;
  double gap_pct = 0.0;
  double reference = 0.0;
  std::string reference_kind;  // "optimal" or "best-found"
};

struct EvalOptions {
  int runs = 50;
  double alpha = 0.2;
  std::uint64_t seed = 0;
  std::size_t enum_cap = 4096;
  // exact per-scenario optima are used as the gap reference when the
  // instance is at most this many jobs/machines; larger sweeps fall back to
  // the best makespan found across all policies
  int exact_max_jobs = 3;
  int exact_max_machines = 3;
};

// The 50-run protocol: for each (instance, policy), stochastic episodes with
// seeds seed + i, then Avg / CVaR / Gap. With an exact reference, the gap
// compares against the mean optimum of the episodes' realized scenarios.
std::vector<EvalRow> evaluate_policies(
    const std::vector<std::pair<std::string, EpisodePolicy*>>& policies,
    const std::vector<std::pair<std::string, const Instance*>>& instances,
    const EvalOptions& opts);

std::string results_csv(const std::vector<EvalRow>& rows);

// Table of Avg / CVaR per training mode and instance set.
std::string ablation_csv(
    const std::vector<std::pair<std::string, std::vector<EvalRow>>>& per_mode_rows,
    const std::vector<std::string>& set_names);

}  // namespace jsslab
