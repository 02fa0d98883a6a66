#include "jsslab/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace jsslab {

const char* kCodeVersion = "jsslab 0.1.0";

namespace {

using ojson = nlohmann::ordered_json;

// Pulls a field and records it as consumed; unknown leftovers are an error.
class FieldReader {
 public:
  FieldReader(const ojson& obj, std::string where) : obj_(obj), where_(std::move(where)) {}

  template <typename T>
  T take(const std::string& key, T fallback) {
    seen_.push_back(key);
    if (!obj_.contains(key)) return fallback;
    return obj_.at(key).get<T>();
  }

  const ojson* take_object(const std::string& key) {
    seen_.push_back(key);
    if (!obj_.contains(key)) return nullptr;
    return &obj_.at(key);
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      bool known = false;
      for (const auto& s : seen_) known = known || s == key;
      if (!known)
        throw std::runtime_error("config: unknown field \"" + key + "\" in " + where_);
    }
  }

 private:
  const ojson& obj_;
  std::string where_;
  std::vector<std::string> seen_;
};

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  ojson doc;
  try {
    doc = ojson::parse(text);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("config: invalid JSON: ") + e.what());
  }
  RunConfig cfg;
  FieldReader top(doc, "run config");
  cfg.train.n_jobs = top.take("jobs", cfg.train.n_jobs);
  cfg.train.n_machines = top.take("machines", cfg.train.n_machines);
  cfg.train.n_branch = top.take("branch", cfg.train.n_branch);
  cfg.train.branch_prob = top.take("branch_prob", cfg.train.branch_prob);
  cfg.train.K = top.take("K", cfg.train.K);
  cfg.train.gamma = top.take("gamma", cfg.train.gamma);
  cfg.train.lr = top.take("lr", cfg.train.lr);
  cfg.train.entropy_coef = top.take("entropy_coef", cfg.train.entropy_coef);
  cfg.train.clip_norm = top.take("clip_norm", cfg.train.clip_norm);
  cfg.train.iterations = top.take("iterations", cfg.train.iterations);
  cfg.train.eval_every = top.take("eval_every", cfg.train.eval_every);
  cfg.train.eval_instances = top.take("eval_instances", cfg.train.eval_instances);
  cfg.train.eval_runs = top.take("eval_runs", cfg.train.eval_runs);
  cfg.train.time_budget_sec = top.take("time_budget_sec", cfg.train.time_budget_sec);
  cfg.train.mode = train_mode_from_string(top.take<std::string>("mode", train_mode_name(cfg.train.mode)));
  cfg.train.seed = top.take("seed", cfg.train.seed);
  if (const ojson* m = top.take_object("model")) {
    FieldReader mr(*m, "model block");
    cfg.model.gcn_layers = mr.take("gcn_layers", cfg.model.gcn_layers);
    cfg.model.hidden = mr.take("hidden", cfg.model.hidden);
    cfg.model.n_scenarios = mr.take("n_scenarios", cfg.model.n_scenarios);
    cfg.model.n_inducing = mr.take("n_inducing", cfg.model.n_inducing);
    cfg.model.key_dim = mr.take("key_dim", cfg.model.key_dim);
    cfg.model.z_dim = mr.take("z_dim", cfg.model.z_dim);
    cfg.model.omega_init = mr.take("omega_init", cfg.model.omega_init);
    mr.finish();
  }
  top.finish();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  return parse_run_config(read_file(path));
}

std::string run_config_to_json(const RunConfig& cfg) {
  ojson doc;
  doc["jobs"] = cfg.train.n_jobs;
  doc["machines"] = cfg.train.n_machines;
  doc["branch"] = cfg.train.n_branch;
  doc["branch_prob"] = cfg.train.branch_prob;
  doc["K"] = cfg.train.K;
  doc["gamma"] = cfg.train.gamma;
  doc["lr"] = cfg.train.lr;
  doc["entropy_coef"] = cfg.train.entropy_coef;
  doc["clip_norm"] = cfg.train.clip_norm;
  doc["iterations"] = cfg.train.iterations;
  doc["eval_every"] = cfg.train.eval_every;
  doc["eval_instances"] = cfg.train.eval_instances;
  doc["eval_runs"] = cfg.train.eval_runs;
  doc["time_budget_sec"] = cfg.train.time_budget_sec;
  doc["mode"] = train_mode_name(cfg.train.mode);
  doc["seed"] = cfg.train.seed;
  doc["model"] = {{"gcn_layers", cfg.model.gcn_layers}, {"hidden", cfg.model.hidden},
                  {"n_scenarios", cfg.model.n_scenarios}, {"n_inducing", cfg.model.n_inducing},
                  {"key_dim", cfg.model.key_dim}, {"z_dim", cfg.model.z_dim},
                  {"omega_init", cfg.model.omega_init}};
  return doc.dump(2) + "\n";
}

void write_file_atomic(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for write: " + tmp);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw std::runtime_error("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("rename failed: " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + path);
  std::ostringstream out;
  out << f.rdbuf();
  return out.str();
}

std::string make_manifest(const std::string& command,
                          const std::vector<std::string>& argv,
                          const std::string& config_json, std::uint64_t seed) {
  nlohmann::ordered_json doc;
  doc["command"] = command;
  doc["argv"] = argv;
  doc["config"] = config_json.empty() ? nlohmann::ordered_json()
                                      : nlohmann::ordered_json::parse(config_json);
  doc["config_hash"] = fnv1a(config_json);
  doc["seed"] = seed;
  doc["code_version"] = kCodeVersion;
  return doc.dump(2) + "\n";
}

}  // namespace jsslab
