#include "jsslab/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace jsslab {

TrainMode train_mode_from_string(const std::string& name) {
  if (name == "UP-AAC") return TrainMode::UpAac;
  if (name == "standard-AC") return TrainMode::StandardAc;
  if (name == "no-AAC") return TrainMode::NoAac;
  if (name == "no-UPM") return TrainMode::NoUpm;
  throw std::invalid_argument("unknown training mode: " + name);
}

std::string train_mode_name(TrainMode mode) {
  switch (mode) {
    case TrainMode::UpAac: return "UP-AAC";
    case TrainMode::StandardAc: return "standard-AC";
    case TrainMode::NoAac: return "no-AAC";
    case TrainMode::NoUpm: return "no-UPM";
  }
  throw std::logic_error("train_mode_name: bad enum");
}

namespace {

bool uses_upm(TrainMode mode) {
  return mode == TrainMode::UpAac || mode == TrainMode::NoAac;
}

bool critic_on_deterministic(TrainMode mode) {
  return mode == TrainMode::UpAac || mode == TrainMode::NoUpm;
}

double population_variance(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  return var / static_cast<double>(xs.size());
}

}  // namespace

StochTrajectory rollout(PolicyModel& model, const Instance& inst,
                        const Tensor& z_upm, Rng& rng, bool greedy) {
  StochTrajectory traj;
  traj.instance = &inst;
  SchedState state = SchedState::reset(inst, Mode::Stochastic);
  traj.initial_lower_bound = state.lower_bound();
  while (!state.terminal()) {
    StochStep rec;
    rec.view = state.disjunctive_view();
    Tensor probs = model.actor_probs(rec.view, z_upm);
    const Mat& p = probs.val();
    int chosen = -1;
    if (greedy) {
      double best = -1.0;
      for (int i = 0; i < rec.view.n(); ++i)
        if (rec.view.ready(i) && p(0, i) > best) {
          best = p(0, i);
          chosen = i;
        }
    } else {
      double u = rng.uniform();
      double acc = 0.0;
      for (int i = 0; i < rec.view.n(); ++i) {
        if (!rec.view.ready(i)) continue;
        acc += p(0, i);
        chosen = i;
        if (u < acc) break;
      }
    }
    rec.action_node = chosen;
    rec.action_op = rec.view.ops[chosen];
    rec.log_prob = std::log(std::max(p(0, chosen), 1e-300));
    StepOutcome out = state.step(rec.action_op, &rng);
    rec.start = out.start;
    rec.end = out.end;
    rec.branch_resolved = out.branch_resolved;
    rec.lower_bound_after = state.lower_bound();
    traj.steps.push_back(std::move(rec));
  }
  traj.terminal = true;
  traj.final_makespan = state.makespan();
  return traj;
}

std::vector<double> advantages(PolicyModel& model,
                               const std::vector<DisjunctiveView>& states,
                               const std::vector<long long>& rewards,
                               double gamma) {
  if (states.size() != rewards.size())
    throw std::invalid_argument("advantages: state/reward length mismatch");
  std::size_t n = states.size();
  std::vector<double> values(n);
  for (std::size_t t = 0; t < n; ++t)
    values[t] = model.critic_value(states[t]).val()(0, 0);
  std::vector<double> adv(n);
  for (std::size_t t = 0; t < n; ++t) {
    double next = t + 1 < n ? values[t + 1] : 0.0;  // V(terminal) = 0
    adv[t] = static_cast<double>(rewards[t]) + gamma * next - values[t];
  }
  return adv;
}

Trainer::Trainer(TrainConfig cfg, ModelConfig model_cfg)
    : cfg_(cfg),
      model_(model_cfg, child_seed(cfg.seed, "model")),
      rng_instance_(child_seed(cfg.seed, "instances")),
      rng_upm_(child_seed(cfg.seed, "upm")),
      rng_rollout_(child_seed(cfg.seed, "rollout")) {
  if (cfg_.K < 1 || cfg_.gamma <= 0.0 || cfg_.gamma > 1.0)
    throw std::invalid_argument("TrainConfig: K >= 1 and gamma in (0, 1] required");
  for (int i = 0; i < cfg_.eval_instances; ++i)
    heldout_.push_back(generate_instance(cfg_.n_jobs, cfg_.n_machines, cfg_.n_branch,
                                         child_seed(cfg_.seed, "heldout/" + std::to_string(i)),
                                         cfg_.branch_prob));
}

IterationMetrics Trainer::train_iteration() {
  ++iteration_;
  Instance inst = generate_instance(
      cfg_.n_jobs, cfg_.n_machines, cfg_.n_branch,
      static_cast<std::uint64_t>(rng_instance_.next_u64()), cfg_.branch_prob);

  // Phase 1: uncertainty perception (value reused for rollouts; the update
  // phase recomputes it with gradients)
  std::vector<Scenario> upm_scenarios;
  Tensor z_rollout;
  if (uses_upm(cfg_.mode)) {
    upm_scenarios.reserve(model_.config().n_scenarios);
    for (int k = 0; k < model_.config().n_scenarios; ++k)
      upm_scenarios.push_back(sample_scenario(inst, rng_upm_));
    z_rollout = Tensor::constant(model_.upm_forward(inst, upm_scenarios).val());
  }

  // Phase 2: stochastic trajectory collection
  std::vector<StochTrajectory> batch;
  batch.reserve(cfg_.K);
  for (int k = 0; k < cfg_.K; ++k)
    batch.push_back(rollout(model_, inst, z_rollout, rng_rollout_, false));

  // Phase 3: hindsight reconstruction
  std::vector<HindsightTrajectory> twins;
  twins.reserve(batch.size());
  for (const auto& traj : batch) twins.push_back(reconstruct(inst, traj));

  // Phase 4: asymmetric update
  IterationMetrics metrics;
  std::vector<double> all_adv;
  std::vector<std::vector<double>> adv_per_traj;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    std::vector<DisjunctiveView> critic_states;
    std::vector<long long> rewards;
    for (std::size_t t = 0; t < twins[k].steps.size(); ++t) {
      critic_states.push_back(critic_on_deterministic(cfg_.mode) ? twins[k].steps[t].view
                                                                 : batch[k].steps[t].view);
      rewards.push_back(twins[k].steps[t].reward);
    }
    auto adv = advantages(model_, critic_states, rewards, cfg_.gamma);
    all_adv.insert(all_adv.end(), adv.begin(), adv.end());
    adv_per_traj.push_back(std::move(adv));
    metrics.mean_makespan += static_cast<double>(batch[k].final_makespan);
  }
  metrics.mean_makespan /= static_cast<double>(batch.size());
  metrics.adv_variance = population_variance(all_adv);
  metrics.transitions = static_cast<int>(all_adv.size());
  double inv_n = 1.0 / static_cast<double>(all_adv.size());

  // critic step (targets fixed at pre-update values)
  {
    Tensor loss;
    for (std::size_t k = 0; k < batch.size(); ++k) {
      for (std::size_t t = 0; t < twins[k].steps.size(); ++t) {
        const DisjunctiveView& sview = critic_on_deterministic(cfg_.mode)
                                           ? twins[k].steps[t].view
                                           : batch[k].steps[t].view;
        // adv = target - V(s), so target = V(s) + adv at pre-update values
        double target = model_.critic_value(sview).val()(0, 0) + adv_per_traj[k][t];
        Tensor err = sub(model_.critic_value(sview),
                         Tensor::constant(Mat(1, 1, target)));
        Tensor sq = square(err);
        loss = loss.defined() ? add(loss, sq) : sq;
      }
    }
    loss = scale(loss, inv_n);
    metrics.critic_loss = loss.val()(0, 0);
    model_.params().zero_grad();
    backward(loss);
    model_.params().adam_step(cfg_.lr, cfg_.clip_norm);
  }

  // actor step
  {
    Tensor z = uses_upm(cfg_.mode) ? model_.upm_forward(inst, upm_scenarios) : Tensor();
    Tensor pg_loss, ent_sum;
    for (std::size_t k = 0; k < batch.size(); ++k) {
      for (std::size_t t = 0; t < batch[k].steps.size(); ++t) {
        const StochStep& step = batch[k].steps[t];
        Tensor probs = model_.actor_probs(step.view, z);
        Tensor lp = elem_log(pick(probs, 0, step.action_node));
        Tensor term = scale(lp, -adv_per_traj[k][t]);
        pg_loss = pg_loss.defined() ? add(pg_loss, term) : term;
        // entropy over eligible entries; masked entries hold exact zeros
        Mat pad(1, probs.cols(), 0.0);
        auto mask = ready_mask(step.view);
        for (int i = 0; i < probs.cols(); ++i)
          if (!mask[i]) pad(0, i) = 1.0;
        Tensor logp = elem_log(add(probs, Tensor::constant(pad)));
        Tensor ent = scale(sum_all(mul(probs, logp)), -1.0);
        ent_sum = ent_sum.defined() ? add(ent_sum, ent) : ent;
      }
    }
    metrics.mean_entropy = ent_sum.val()(0, 0) * inv_n;
    Tensor loss = add(scale(pg_loss, inv_n), scale(ent_sum, -cfg_.entropy_coef * inv_n));
    metrics.actor_loss = loss.val()(0, 0);
    model_.params().zero_grad();
    backward(loss);
    model_.params().adam_step(cfg_.lr, cfg_.clip_norm);
  }
  model_.params().zero_grad();
  return metrics;
}

std::vector<long long> Trainer::evaluate_heldout(int tag) {
  std::vector<long long> makespans;
  for (std::size_t i = 0; i < heldout_.size(); ++i) {
    const Instance& inst = heldout_[i];
    Tensor z;
    if (uses_upm(cfg_.mode)) {
      Rng rng(child_seed(cfg_.seed, "eval-upm/" + std::to_string(i)));
      z = Tensor::constant(model_.upm_forward(inst, rng).val());
    }
    for (int r = 0; r < cfg_.eval_runs; ++r) {
      Rng rng(child_seed(cfg_.seed, "eval-run/" + std::to_string(tag) + "/" +
                                        std::to_string(i) + "/" + std::to_string(r)));
      makespans.push_back(rollout(model_, inst, z, rng, true).final_makespan);
    }
  }
  return makespans;
}

TrainResult Trainer::train() {
  TrainResult result;
  result.best_eval_mean = std::numeric_limits<double>::infinity();
  auto t0 = std::chrono::steady_clock::now();
  double last_adv_var = 0.0;

  auto evaluate = [&](int iter) {
    auto makespans = evaluate_heldout(iter);
    double mean = 0.0;
    for (long long m : makespans) mean += static_cast<double>(m);
    mean /= static_cast<double>(makespans.size());
    std::vector<long long> sorted = makespans;
    std::sort(sorted.rbegin(), sorted.rend());
    std::size_t worst = (makespans.size() + 4) / 5;  // ceil(0.2 n)
    double cvar = 0.0;
    for (std::size_t i = 0; i < worst; ++i) cvar += static_cast<double>(sorted[i]);
    cvar /= static_cast<double>(worst);
    result.curve.push_back({iter, mean, cvar, last_adv_var});
    if (mean < result.best_eval_mean) {
      result.best_eval_mean = mean;
      result.best_values = model_.params().snapshot_values();
    }
  };

  evaluate(0);
  for (int it = 1; it <= cfg_.iterations; ++it) {
    IterationMetrics m = train_iteration();
    last_adv_var = m.adv_variance;
    bool budget_hit = false;
    if (cfg_.time_budget_sec > 0.0) {
      double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      budget_hit = elapsed >= cfg_.time_budget_sec;
    }
    if (it % cfg_.eval_every == 0 || it == cfg_.iterations || budget_hit) evaluate(it);
    result.iterations_run = it;
    if (budget_hit) break;
  }
  return result;
}

VarianceReport advantage_variance_report(PolicyModel& model,
                                         const std::vector<Instance>& instances,
                                         int trajectories_per_instance,
                                         double gamma, std::uint64_t seed) {
  VarianceReport report;
  std::vector<double> adv_det, adv_sto;
  Rng rng(child_seed(seed, "variance-report"));
  for (const auto& inst : instances) {
    for (int k = 0; k < trajectories_per_instance; ++k) {
      StochTrajectory traj = rollout(model, inst, Tensor(), rng, false);
      HindsightTrajectory twin = reconstruct(inst, traj);
      std::vector<DisjunctiveView> det_states, sto_states;
      std::vector<long long> rewards;
      for (std::size_t t = 0; t < twin.steps.size(); ++t) {
        det_states.push_back(twin.steps[t].view);
        sto_states.push_back(traj.steps[t].view);
        rewards.push_back(twin.steps[t].reward);
      }
      auto a_det = advantages(model, det_states, rewards, gamma);
      auto a_sto = advantages(model, sto_states, rewards, gamma);
      adv_det.insert(adv_det.end(), a_det.begin(), a_det.end());
      adv_sto.insert(adv_sto.end(), a_sto.begin(), a_sto.end());
    }
  }
  report.var_det = population_variance(adv_det);
  report.var_sto = population_variance(adv_sto);
  report.transitions = static_cast<int>(adv_det.size());
  return report;
}

}  // namespace jsslab
