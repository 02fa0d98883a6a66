#pragma once

#include <map>
#include <string>
#include <vector>

#include "jsslab/hindsight.hpp"
#include "jsslab/models.hpp"

namespace jsslab {

// UpAac: actor on stochastic states + risk vector, critic on hindsight
// deterministic states. StandardAc: no risk vector, critic on stochastic
// states. NoAac: risk vector kept, critic on stochastic states. NoUpm:
// critic on deterministic states, no risk vector.
enum class TrainMode { UpAac, StandardAc, NoAac, NoUpm };

TrainMode train_mode_from_string(const std::string& name);
std::string train_mode_name(TrainMode mode);

struct TrainConfig {
  int n_jobs = 5;
  int n_machines = 5;
  int n_branch = 1;
  double branch_prob = 0.5;
  int K = 8;               // trajectories per iteration
  double gamma = 1.0;
  double lr = 3e-4;
  double entropy_coef = 0.01;
  double clip_norm = 0.5;
  int iterations = 200;
  int eval_every = 20;
  int eval_instances = 20;
  int eval_runs = 5;
  double time_budget_sec = 0.0;  // 0 disables the wall-clock stop
  TrainMode mode = TrainMode::UpAac;
  std::uint64_t seed = 0;
};

// Samples one stochastic episode under the actor. greedy picks argmax instead
// of sampling actions; branch realizations always consume rng draws.
StochTrajectory rollout(PolicyModel& model, const Instance& inst,
                        const Tensor& z_upm, Rng& rng, bool greedy);

// One-step TD advantages against the critic over the given state stream;
// V(terminal) := 0.
std::vector<double> advantages(PolicyModel& model,
                               const std::vector<DisjunctiveView>& states,
                               const std::vector<long long>& rewards,
                               double gamma);

struct IterationMetrics {
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double mean_entropy = 0.0;
  double adv_variance = 0.0;
  double mean_makespan = 0.0;
  int transitions = 0;
};

struct CurveRow {
  int iteration = 0;
  double eval_mean = 0.0;
  double eval_cvar = 0.0;
  double adv_variance = 0.0;
};

struct TrainResult {
  std::vector<CurveRow> curve;
  std::map<std::string, Mat> best_values;  // checkpoint of the best eval
  double best_eval_mean = 0.0;
  int iterations_run = 0;
};

class Trainer {
 public:
  Trainer(TrainConfig cfg, ModelConfig model_cfg);

  IterationMetrics train_iteration();
  TrainResult train();

  PolicyModel& model() { return model_; }
  const TrainConfig& config() const { return cfg_; }
  // Greedy evaluation of the current parameters on the held-out set;
  // returns all episode makespans.
  std::vector<long long> evaluate_heldout(int tag);

 private:
  TrainConfig cfg_;
  PolicyModel model_;
  Rng rng_instance_, rng_upm_, rng_rollout_;
  std::vector<Instance> heldout_;
  int iteration_ = 0;
};

// Advantage variance under deterministic critic states (hindsight) vs
// stochastic critic states, on a fixed model and instance set.
struct VarianceReport {
  double var_det = 0.0;
  double var_sto = 0.0;
  int transitions = 0;
};

VarianceReport advantage_variance_report(PolicyModel& model,
                                         const std::vector<Instance>& instances,
                                         int trajectories_per_instance,
                                         double gamma, std::uint64_t seed);

}  // namespace jsslab
