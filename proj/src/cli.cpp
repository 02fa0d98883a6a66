#include "jsslab/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "jsslab/config.hpp"
#include "jsslab/evaluation.hpp"
#include "jsslab/hindsight.hpp"
#include "jsslab/solver.hpp"
#include "jsslab/trainer.hpp"

namespace jsslab {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

bool mode_uses_upm(TrainMode mode) {
  return mode == TrainMode::UpAac || mode == TrainMode::NoAac;
}

std::string instance_filename(int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "instance_%04d.json", i);
  return buf;
}

// Instance files of a directory, sorted by name; manifests are skipped.
std::vector<std::pair<std::string, Instance>> load_instance_dir(const std::string& dir) {
  if (!fs::is_directory(dir))
    throw std::runtime_error("not a directory: " + dir);
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::string name = entry.path().filename().string();
    if (entry.path().extension() != ".json") continue;
    if (name == "manifest.json" || name.size() > 14 &&
        name.compare(name.size() - 14, 14, ".manifest.json") == 0)
      continue;
    names.push_back(name);
  }
  std::sort(names.begin(), names.end());
  if (names.empty()) throw std::runtime_error("no instance files in " + dir);
  std::vector<std::pair<std::string, Instance>> out;
  for (const auto& name : names) {
    Instance inst = instance_from_json(read_file((fs::path(dir) / name).string()));
    out.emplace_back(fs::path(name).stem().string(), std::move(inst));
  }
  return out;
}

// Model config for a checkpoint: an explicit train config wins, otherwise the
// config.resolved.json written next to the checkpoint at training time.
RunConfig checkpoint_config(const std::string& ckpt, const std::string& train_config) {
  if (!train_config.empty()) return load_run_config(train_config);
  fs::path sibling = fs::path(ckpt).parent_path() / "config.resolved.json";
  if (!fs::exists(sibling))
    throw std::runtime_error("no --train-config given and " + sibling.string() +
                             " not found");
  return load_run_config(sibling.string());
}

std::string episode_trace_jsonl(const StochTrajectory& traj) {
  std::ostringstream out;
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    const StochStep& s = traj.steps[t];
    ojson line;
    line["t"] = t;
    line["action"] = s.action_op;
    line["start"] = s.start;
    line["end"] = s.end;
    line["clb"] = s.lower_bound_after;
    if (s.branch_resolved)
      line["branch"] = {s.branch_resolved->first, s.branch_resolved->second};
    else
      line["branch"] = nullptr;
    out << line.dump() << '\n';
  }
  return out.str();
}

int cmd_generate(int jobs, int machines, int branch, int count, std::uint64_t seed,
                 double branch_prob, const std::string& out_dir,
                 const std::vector<std::string>& argv, std::ostream& out) {
  fs::create_directories(out_dir);
  for (int i = 0; i < count; ++i) {
    Instance inst = generate_instance(jobs, machines, branch,
                                      child_seed(seed, "gen/" + std::to_string(i)),
                                      branch_prob);
    write_file_atomic((fs::path(out_dir) / instance_filename(i)).string(),
                      instance_to_json(inst));
  }
  write_file_atomic((fs::path(out_dir) / "manifest.json").string(),
                    make_manifest("generate", argv, "", seed));
  out << "wrote " << count << " instances to " << out_dir << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& out_dir,
              const std::vector<std::string>& argv, std::ostream& out) {
  RunConfig cfg = load_run_config(config_path);
  std::string resolved = run_config_to_json(cfg);
  fs::create_directories(out_dir);
  write_file_atomic((fs::path(out_dir) / "config.resolved.json").string(), resolved);
  write_file_atomic((fs::path(out_dir) / "manifest.json").string(),
                    make_manifest("train", argv, resolved, cfg.train.seed));

  Trainer trainer(cfg.train, cfg.model);
  TrainResult result = trainer.train();
  if (!result.best_values.empty())
    trainer.model().params().restore_values(result.best_values);
  trainer.model().save((fs::path(out_dir) / "model.ckpt").string());

  std::ostringstream curve;
  curve << "iteration,eval_mean,eval_cvar,adv_variance\n";
  for (const auto& row : result.curve) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%d,%.4f,%.4f,%.6f\n", row.iteration,
                  row.eval_mean, row.eval_cvar, row.adv_variance);
    curve << buf;
  }
  write_file_atomic((fs::path(out_dir) / "curve.csv").string(), curve.str());

  // Advantage-variance diagnostic on the final parameters over a fresh
  // instance set with the training dimensions.
  std::vector<Instance> diag;
  for (int i = 0; i < 5; ++i)
    diag.push_back(generate_instance(cfg.train.n_jobs, cfg.train.n_machines,
                                     cfg.train.n_branch,
                                     child_seed(cfg.train.seed, "diag/" + std::to_string(i)),
                                     cfg.train.branch_prob));
  VarianceReport rep = advantage_variance_report(trainer.model(), diag, 4,
                                                 cfg.train.gamma, cfg.train.seed);
  ojson diag_doc;
  diag_doc["advantage_variance_deterministic_critic_states"] = rep.var_det;
  diag_doc["advantage_variance_stochastic_critic_states"] = rep.var_sto;
  diag_doc["transitions"] = rep.transitions;
  diag_doc["best_eval_mean"] = result.best_eval_mean;
  diag_doc["iterations_run"] = result.iterations_run;
  write_file_atomic((fs::path(out_dir) / "diagnostics.json").string(),
                    diag_doc.dump(2) + "\n");

  out << "trained " << result.iterations_run << " iterations, best eval mean "
      << result.best_eval_mean << ", artifacts in " << out_dir << "\n";
  return 0;
}

int cmd_evaluate(const std::vector<std::string>& policy_names,
                 const std::string& ckpt, const std::string& train_config,
                 const std::string& instances_dir, int runs, std::uint64_t seed,
                 const std::string& out_csv, const std::string& trace_out,
                 const std::vector<std::string>& argv, std::ostream& out) {
  auto loaded = load_instance_dir(instances_dir);
  std::vector<std::pair<std::string, const Instance*>> instances;
  for (const auto& [id, inst] : loaded) instances.emplace_back(id, &inst);

  std::vector<std::unique_ptr<EpisodePolicy>> owned;
  std::vector<std::pair<std::string, EpisodePolicy*>> policies;
  for (const auto& name : policy_names) {
    owned.push_back(std::make_unique<RulePolicy>(rule_from_string(name)));
    policies.emplace_back(name, owned.back().get());
  }
  std::unique_ptr<PolicyModel> model;
  if (!ckpt.empty()) {
    RunConfig cfg = checkpoint_config(ckpt, train_config);
    model = std::make_unique<PolicyModel>(cfg.model, child_seed(cfg.train.seed, "model"));
    model->load(ckpt);
    owned.push_back(std::make_unique<ModelPolicy>(*model, mode_uses_upm(cfg.train.mode)));
    policies.emplace_back("model", owned.back().get());
  }
  if (policies.empty())
    throw std::runtime_error("evaluate: give at least one --policy or --checkpoint");

  EvalOptions opts;
  opts.runs = runs;
  opts.seed = seed;
  auto rows = evaluate_policies(policies, instances, opts);
  write_file_atomic(out_csv, results_csv(rows));
  write_file_atomic(out_csv + ".manifest.json", make_manifest("evaluate", argv, "", seed));

  if (!trace_out.empty()) {
    // one recorded episode of the first policy on the first instance
    const Instance& inst = *instances.front().second;
    EpisodePolicy* pol = policies.front().second;
    pol->begin_instance(inst, child_seed(seed, "trace"));
    Rng rng(child_seed(seed, "trace-episode"));
    StochTrajectory traj;
    traj.instance = &inst;
    SchedState state = SchedState::reset(inst, Mode::Stochastic);
    traj.initial_lower_bound = state.lower_bound();
    while (!state.terminal()) {
      StochStep rec;
      rec.action_op = pol->choose(state, state.eligible_actions(), rng);
      StepOutcome so = state.step(rec.action_op, &rng);
      rec.start = so.start;
      rec.end = so.end;
      rec.branch_resolved = so.branch_resolved;
      rec.lower_bound_after = state.lower_bound();
      traj.steps.push_back(std::move(rec));
    }
    traj.terminal = true;
    traj.final_makespan = state.makespan();
    write_file_atomic(trace_out, episode_trace_jsonl(traj));
  }

  out << "wrote " << rows.size() << " rows to " << out_csv << "\n";
  return 0;
}

int cmd_solve(const std::string& scenario_path, std::ostream& out, std::ostream& err) {
  auto [inst, scen] = scenario_from_json(read_file(scenario_path));
  SolveResult res = solve_optimal(inst, scen);
  if (!res.proved)
    err << "warning: node budget exhausted, best found " << res.optimum << "\n";
  out << res.optimum << "\n";
  return res.proved ? 0 : 1;
}

int cmd_replay(const std::string& instance_path, const std::string& trace_path,
               const std::string& out_path, std::ostream& out) {
  Instance inst = instance_from_json(read_file(instance_path));
  StochTrajectory traj;
  traj.instance = &inst;
  std::istringstream lines(read_file(trace_path));
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    ojson rec = ojson::parse(line);
    StochStep step;
    step.action_op = rec.at("action").get<int>();
    if (!rec.at("branch").is_null())
      step.branch_resolved = {rec["branch"][0].get<int>(), rec["branch"][1].get<int>()};
    traj.steps.push_back(std::move(step));
  }
  traj.terminal = true;

  HindsightTrajectory twin = reconstruct(inst, traj);
  std::ostringstream body;
  for (std::size_t t = 0; t < twin.steps.size(); ++t) {
    const HindsightStep& s = twin.steps[t];
    ojson rec;
    rec["t"] = t;
    rec["action"] = s.action_op;
    rec["start"] = s.start;
    rec["end"] = s.end;
    rec["reward"] = s.reward;
    rec["clb"] = s.lower_bound_after;
    body << rec.dump() << '\n';
  }
  if (out_path.empty())
    out << body.str();
  else
    write_file_atomic(out_path, body.str());
  return 0;
}

int cmd_ablate(const std::string& config_path, const std::string& out_csv,
               const std::vector<std::string>& argv, std::ostream& out) {
  ojson cfg = ojson::parse(read_file(config_path));
  int runs = cfg.value("runs", 50);
  std::uint64_t seed = cfg.value("seed", std::uint64_t{0});

  std::vector<std::string> set_names;
  std::vector<std::pair<std::string, Instance>> loaded;
  for (const auto& set : cfg.at("sets")) {
    std::string name = set.at("name").get<std::string>();
    set_names.push_back(name);
    for (auto& [id, inst] : load_instance_dir(set.at("instances").get<std::string>()))
      loaded.emplace_back(name + "/" + id, std::move(inst));
  }
  std::vector<std::pair<std::string, const Instance*>> instances;
  for (const auto& [id, inst] : loaded) instances.emplace_back(id, &inst);

  EvalOptions opts;
  opts.runs = runs;
  opts.seed = seed;
  std::vector<std::pair<std::string, std::vector<EvalRow>>> per_mode;
  for (const auto& entry : cfg.at("modes")) {
    std::string label;
    std::unique_ptr<PolicyModel> model;
    std::unique_ptr<EpisodePolicy> policy;
    if (entry.contains("rule")) {
      label = entry.at("rule").get<std::string>();
      policy = std::make_unique<RulePolicy>(rule_from_string(label));
    } else {
      label = entry.at("mode").get<std::string>();
      TrainMode mode = train_mode_from_string(label);
      RunConfig mc = checkpoint_config(entry.at("checkpoint").get<std::string>(),
                                       entry.value("train_config", std::string{}));
      model = std::make_unique<PolicyModel>(mc.model, child_seed(mc.train.seed, "model"));
      model->load(entry.at("checkpoint").get<std::string>());
      policy = std::make_unique<ModelPolicy>(*model, mode_uses_upm(mode));
    }
    std::vector<std::pair<std::string, EpisodePolicy*>> one{{label, policy.get()}};
    per_mode.emplace_back(label, evaluate_policies(one, instances, opts));
  }

  write_file_atomic(out_csv, ablation_csv(per_mode, set_names));
  write_file_atomic(out_csv + ".manifest.json", make_manifest("ablate", argv, "", seed));
  out << "wrote " << per_mode.size() << " method rows to " << out_csv << "\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"stochastic job-shop scheduling laboratory"};
  app.require_subcommand(1);
  int code = 0;

  auto* gen = app.add_subcommand("generate", "write procedurally generated instances");
  int g_jobs = 5, g_machines = 5, g_branch = 1, g_count = 1;
  std::uint64_t g_seed = 0;
  double g_branch_prob = 0.5;
  std::string g_out;
  gen->add_option("--jobs", g_jobs)->required();
  gen->add_option("--machines", g_machines)->required();
  gen->add_option("--branch", g_branch)->required();
  gen->add_option("--count", g_count);
  gen->add_option("--seed", g_seed);
  gen->add_option("--branch-prob", g_branch_prob);
  gen->add_option("--out", g_out)->required();
  gen->callback([&] {
    code = cmd_generate(g_jobs, g_machines, g_branch, g_count, g_seed, g_branch_prob,
                        g_out, args, out);
  });

  auto* train = app.add_subcommand("train", "train a policy from a JSON config");
  std::string t_config, t_out;
  train->add_option("--config", t_config)->required();
  train->add_option("--out", t_out)->required();
  train->callback([&] { code = cmd_train(t_config, t_out, args, out); });

  auto* eval = app.add_subcommand("evaluate", "run the 50-run evaluation protocol");
  std::vector<std::string> e_policies;
  std::string e_ckpt, e_train_config, e_instances, e_out, e_trace;
  int e_runs = 50;
  std::uint64_t e_seed = 0;
  eval->add_option("--policy", e_policies, "rule name; repeatable");
  eval->add_option("--checkpoint", e_ckpt);
  eval->add_option("--train-config", e_train_config);
  eval->add_option("--instances", e_instances)->required();
  eval->add_option("--runs", e_runs);
  eval->add_option("--seed", e_seed);
  eval->add_option("--out", e_out)->required();
  eval->add_option("--trace-out", e_trace);
  eval->callback([&] {
    code = cmd_evaluate(e_policies, e_ckpt, e_train_config, e_instances, e_runs,
                        e_seed, e_out, e_trace, args, out);
  });

  auto* solve = app.add_subcommand("solve", "exact optimum of one scenario");
  std::string s_scenario;
  solve->add_option("--scenario", s_scenario)->required();
  solve->callback([&] { code = cmd_solve(s_scenario, out, err); });

  auto* replay = app.add_subcommand("replay", "hindsight reconstruction of a trace");
  std::string r_instance, r_trace, r_out;
  replay->add_option("--instance", r_instance)->required();
  replay->add_option("--trace", r_trace)->required();
  replay->add_option("--out", r_out);
  replay->callback([&] { code = cmd_replay(r_instance, r_trace, r_out, out); });

  auto* ablate = app.add_subcommand("ablate", "per-mode evaluation table");
  std::string a_config, a_out;
  ablate->add_option("--config", a_config)->required();
  ablate->add_option("--out", a_out)->required();
  ablate->callback([&] { code = cmd_ablate(a_config, a_out, args, out); });

  std::vector<std::string> argv_store{"jss"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return code;
}

}  // namespace jsslab
