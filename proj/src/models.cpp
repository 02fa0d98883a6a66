#include "jsslab/models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace jsslab {

long long risk_prior(const Instance& inst, const Scenario& scen) {
  long long l_max = 0;
  std::vector<long long> load(inst.n_machines, 0);
  for (const auto& path : scen.realized_path) {
    long long len = 0;
    for (int op : path) {
      len += inst.op(op).proc_time;
      load[inst.op(op).machine_id] += inst.op(op).proc_time;
    }
    l_max = std::max(l_max, len);
  }
  long long w_max = 0;
  for (long long w : load) w_max = std::max(w_max, w);
  return std::max(l_max, w_max);
}

Mat view_features(const DisjunctiveView& view) {
  Mat x(view.n(), DisjunctiveView::kFeatDim);
  std::copy(view.features.begin(), view.features.end(), x.a.begin());
  return x;
}

Mat view_adjacency(const DisjunctiveView& view) {
  int n = view.n();
  Mat adj(n, n);
  auto link = [&](int i, int k) {
    if (i != k) adj(i, k) = adj(k, i) = 1.0;
  };
  for (const auto& [i, k] : view.conj_edges) link(i, k);
  for (const auto& [i, k] : view.disj_edges) link(i, k);
  for (const auto& [i, k] : view.seq_edges) link(i, k);
  // normalize rows to a neighbor mean; isolated nodes keep a zero row
  for (int i = 0; i < n; ++i) {
    double deg = 0.0;
    for (int k = 0; k < n; ++k) deg += adj(i, k);
    if (deg > 0.0)
      for (int k = 0; k < n; ++k) adj(i, k) /= deg;
  }
  return adj;
}

std::vector<char> ready_mask(const DisjunctiveView& view) {
  std::vector<char> mask(view.n());
  for (int i = 0; i < view.n(); ++i) mask[i] = view.ready(i) ? 1 : 0;
  return mask;
}

PolicyModel::PolicyModel(ModelConfig cfg, std::uint64_t seed)
    : cfg_(cfg), params_(seed) {
  if (cfg_.gcn_layers < 1 || cfg_.hidden < 1)
    throw std::invalid_argument("PolicyModel: bad config");
}

Tensor PolicyModel::mlp3(const std::string& prefix, const Tensor& x, int out_dim) {
  int h = cfg_.hidden;
  Tensor h1 = leaky_relu(
      layer_norm(affine(x, params_.get(prefix + "/w1", x.cols(), h, InitKind::Glorot),
                        params_.get(prefix + "/b1", 1, h, InitKind::Zero)),
                 params_.get(prefix + "/ln1_g", 1, h, InitKind::One),
                 params_.get(prefix + "/ln1_b", 1, h, InitKind::Zero)),
      cfg_.leaky_slope);
  Tensor h2 = leaky_relu(
      layer_norm(affine(h1, params_.get(prefix + "/w2", h, h, InitKind::Glorot),
                        params_.get(prefix + "/b2", 1, h, InitKind::Zero)),
                 params_.get(prefix + "/ln2_g", 1, h, InitKind::One),
                 params_.get(prefix + "/ln2_b", 1, h, InitKind::Zero)),
      cfg_.leaky_slope);
  // zero-initialized output layer: a fresh model is uniform / zero-valued
  return affine(h2, params_.get(prefix + "/w3", h, out_dim, InitKind::Zero),
                params_.get(prefix + "/b3", 1, out_dim, InitKind::Zero));
}

PolicyModel::Encoded PolicyModel::encode(const DisjunctiveView& view) {
  if (view.n() == 0) throw std::invalid_argument("encode: empty graph");
  Mat adj = view_adjacency(view);
  Tensor h = Tensor::constant(view_features(view));
  for (int l = 0; l < cfg_.gcn_layers; ++l) {
    std::string p = "enc/l" + std::to_string(l);
    Tensor nb = matmul_const(adj, h);
    Tensor z = affine(concat_cols({h, nb}),
                      params_.get(p + "/w", 2 * h.cols(), cfg_.hidden, InitKind::Glorot),
                      params_.get(p + "/b", 1, cfg_.hidden, InitKind::Zero));
    h = leaky_relu(layer_norm(z, params_.get(p + "/ln_g", 1, cfg_.hidden, InitKind::One),
                              params_.get(p + "/ln_b", 1, cfg_.hidden, InitKind::Zero)),
                   cfg_.leaky_slope);
  }
  return {h, mean_rows(h)};
}

Tensor PolicyModel::actor_probs(const DisjunctiveView& view, const Tensor& z_upm) {
  auto enc = encode(view);
  int n = view.n();
  Tensor z = z_upm.defined() ? z_upm : zero_z();
  Tensor inp = concat_cols({enc.nodes, broadcast_rows(enc.graph, n), broadcast_rows(z, n)});
  Tensor scores = transpose(mlp3("actor", inp, 1));  // 1 x n
  auto mask = ready_mask(view);
  bool any = false;
  for (char m : mask) any = any || m;
  if (!any) throw std::invalid_argument("actor_probs: no eligible ops in view");
  return masked_softmax(scores, mask);
}

Tensor PolicyModel::critic_value(const DisjunctiveView& view) {
  return mlp3("critic", encode(view).graph, 1);
}

Tensor PolicyModel::upm_forward(const Instance& inst, Rng& rng) {
  std::vector<Scenario> scenarios;
  scenarios.reserve(cfg_.n_scenarios);
  for (int k = 0; k < cfg_.n_scenarios; ++k) scenarios.push_back(sample_scenario(inst, rng));
  return upm_forward(inst, scenarios);
}

Tensor PolicyModel::upm_forward(const Instance& inst, const std::vector<Scenario>& scenarios) {
  if (scenarios.empty()) throw std::invalid_argument("upm_forward: no scenarios");
  int ns = static_cast<int>(scenarios.size());
  std::vector<Tensor> rows;
  rows.reserve(scenarios.size());
  Mat priors(1, ns);
  for (int k = 0; k < ns; ++k) {
    SchedState s = SchedState::reset(inst, Mode::Deterministic, &scenarios[k]);
    rows.push_back(encode(s.disjunctive_view()).graph);
    priors(0, k) = static_cast<double>(risk_prior(inst, scenarios[k]));
  }
  Tensor h = concat_rows(rows);  // ns x hidden

  // z-score the priors so the bias term is scale free
  double mean = 0.0;
  for (double p : priors.a) mean += p;
  mean /= ns;
  double var = 0.0;
  for (double p : priors.a) var += (p - mean) * (p - mean);
  var /= ns;
  double sd = std::sqrt(var);
  for (double& p : priors.a) p = sd > 1e-12 ? (p - mean) / sd : 0.0;

  int hd = cfg_.hidden, dk = cfg_.key_dim, m = cfg_.n_inducing;
  Tensor inducing = params_.get("upm/inducing", m, hd, InitKind::Glorot);
  Tensor wq = params_.get("upm/wq", hd, dk, InitKind::Glorot);
  Tensor wk = params_.get("upm/wk", hd, dk, InitKind::Glorot);
  Tensor wv = params_.get("upm/wv", hd, hd, InitKind::Glorot);
  Tensor omega = params_.get("upm/omega", 1, 1, InitKind::Const, cfg_.omega_init);

  Tensor scores = scale(matmul_nt(matmul(inducing, wq), matmul(h, wk)),
                        1.0 / std::sqrt(static_cast<double>(dk)));
  Tensor biased = add_broadcast_row(scores, scalar_bcast_mul(omega, priors));
  Tensor attn = softmax_rows(biased);  // m x ns, rows sum to 1
  last_attention_ = attn.val();
  Tensor pooled = matmul(attn, matmul(h, wv));  // m x hidden
  return affine(mean_rows(pooled), params_.get("upm/wz", hd, cfg_.z_dim, InitKind::Glorot),
                params_.get("upm/bz", 1, cfg_.z_dim, InitKind::Zero));
}

}  // namespace jsslab
