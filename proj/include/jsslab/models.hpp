#pragma once

#include <string>
#include <vector>

#include "jsslab/autodiff.hpp"
#include "jsslab/engine.hpp"
#include "jsslab/instance.hpp"

namespace jsslab {

struct ModelConfig {
  int gcn_layers = 3;
  int hidden = 72;
  int feat_dim = DisjunctiveView::kFeatDim;
  // uncertainty-perception block
  int n_scenarios = 100;
  int n_inducing = 4;
  int key_dim = 72;
  int z_dim = 32;
  double leaky_slope = 0.01;
  double omega_init = 0.1;
};

// Heuristic scenario difficulty: max(max job length, max machine workload).
long long risk_prior(const Instance& inst, const Scenario& scen);

// GNN encoder plus actor head, critic head, and the risk-attention summary,
// all over one ParamStore. Forward passes are pure reads of the parameters.
class PolicyModel {
 public:
  PolicyModel(ModelConfig cfg, std::uint64_t seed);

  ParamStore& params() { return params_; }
  const ModelConfig& config() const { return cfg_; }

  struct Encoded {
    Tensor nodes;  // n x hidden
    Tensor graph;  // 1 x hidden
  };
  Encoded encode(const DisjunctiveView& view);

  // Probability row (1 x n) over view nodes, masked to ready ops. z_upm may
  // be undefined, in which case zeros are used.
  Tensor actor_probs(const DisjunctiveView& view, const Tensor& z_upm);

  Tensor critic_value(const DisjunctiveView& view);  // 1 x 1

  // Risk summary from freshly sampled scenarios (consumes rng draws).
  Tensor upm_forward(const Instance& inst, Rng& rng);
  // Same computation over a fixed scenario set (for tests and replays).
  Tensor upm_forward(const Instance& inst, const std::vector<Scenario>& scenarios);
  // The attention weights (M x n_s) of the last upm_forward call.
  const Mat& last_attention() const { return last_attention_; }

  Tensor zero_z() const { return Tensor::constant(Mat(1, cfg_.z_dim)); }

  void save(const std::string& path) { params_.save(path); }
  void load(const std::string& path) { params_.load(path); }

 private:
  Tensor mlp3(const std::string& prefix, const Tensor& x, int out_dim);

  ModelConfig cfg_;
  ParamStore params_;
  Mat last_attention_;
};

// Feature matrix and degree-normalized neighbor matrix of a view.
Mat view_features(const DisjunctiveView& view);
Mat view_adjacency(const DisjunctiveView& view);
std::vector<char> ready_mask(const DisjunctiveView& view);

}  // namespace jsslab
