#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fixtures.hpp"
#include "jsslab/models.hpp"

using namespace jsslab;

namespace {

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.gcn_layers = 2;
  cfg.hidden = 12;
  cfg.n_scenarios = 6;
  cfg.n_inducing = 2;
  cfg.key_dim = 8;
  cfg.z_dim = 5;
  return cfg;
}

// Reference attention (Eq. form): rows softmax over scaled dot products of
// inducing queries against scenario keys, plus omega times the z-scored prior.
Mat reference_attention(PolicyModel& model, const Instance& inst,
                        const std::vector<Scenario>& scens, double omega) {
  const ModelConfig& cfg = model.config();
  int ns = static_cast<int>(scens.size());
  Mat h(ns, cfg.hidden);
  Mat priors(1, ns);
  for (int k = 0; k < ns; ++k) {
    SchedState s = SchedState::reset(inst, Mode::Deterministic, &scens[k]);
    Mat g = model.encode(s.disjunctive_view()).graph.val();
    for (int c = 0; c < cfg.hidden; ++c) h(k, c) = g(0, c);
    priors(0, k) = static_cast<double>(risk_prior(inst, scens[k]));
  }
  double mean = 0.0, var = 0.0;
  for (double p : priors.a) mean += p;
  mean /= ns;
  for (double p : priors.a) var += (p - mean) * (p - mean);
  double sd = std::sqrt(var / ns);
  for (double& p : priors.a) p = sd > 1e-12 ? (p - mean) / sd : 0.0;

  Mat ind = model.params().at("upm/inducing").val();
  Mat wq = model.params().at("upm/wq").val();
  Mat wk = model.params().at("upm/wk").val();
  auto mm = [](const Mat& a, const Mat& b) {
    Mat out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i)
      for (int k = 0; k < a.cols; ++k)
        for (int j = 0; j < b.cols; ++j) out(i, j) += a(i, k) * b(k, j);
    return out;
  };
  Mat q = mm(ind, wq), kk = mm(h, wk);
  Mat attn(cfg.n_inducing, ns);
  for (int i = 0; i < cfg.n_inducing; ++i) {
    double mx = -1e300;
    for (int j = 0; j < ns; ++j) {
      double dot = 0.0;
      for (int d = 0; d < cfg.key_dim; ++d) dot += q(i, d) * kk(j, d);
      attn(i, j) = dot / std::sqrt(static_cast<double>(cfg.key_dim)) +
                   omega * priors(0, j);
      mx = std::max(mx, attn(i, j));
    }
    double z = 0.0;
    for (int j = 0; j < ns; ++j) z += attn(i, j) = std::exp(attn(i, j) - mx);
    for (int j = 0; j < ns; ++j) attn(i, j) /= z;
  }
  return attn;
}

}  // namespace

TEST_CASE("risk prior of the t1 scenario is 7") {
  Instance inst = testfix::make_t1();
  // longest job 6, heaviest machine (M0) 7
  CHECK(risk_prior(inst, testfix::t1_scenario()) == 7);
}

TEST_CASE("fresh model is uniform over ready ops regardless of z") {
  Instance inst = testfix::make_t1();
  PolicyModel model(small_config(), 123);
  SchedState s = SchedState::reset(inst, Mode::Stochastic);
  DisjunctiveView v = s.disjunctive_view();

  Mat zval(1, small_config().z_dim);
  for (int i = 0; i < zval.cols; ++i) zval(0, i) = 3.0 * i - 1.0;
  for (const Tensor& z : {Tensor(), model.zero_z(), Tensor::constant(zval)}) {
    Tensor p = model.actor_probs(v, z);
    for (int i = 0; i < v.n(); ++i)
      CHECK(p.val()(0, i) == doctest::Approx(v.ready(i) ? 0.5 : 0.0));
  }
  CHECK(model.critic_value(v).val()(0, 0) == 0.0);
}

TEST_CASE("graph embedding is permutation invariant") {
  Instance inst = generate_instance(3, 4, 1, 8);
  PolicyModel model(small_config(), 5);
  SchedState s = SchedState::reset(inst, Mode::Stochastic);
  DisjunctiveView v = s.disjunctive_view();

  // reverse the node order
  int n = v.n();
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = n - 1 - i;
  DisjunctiveView pv;
  pv.ops.resize(n);
  pv.features.resize(v.features.size());
  for (int i = 0; i < n; ++i) {
    pv.ops[perm[i]] = v.ops[i];
    for (int k = 0; k < DisjunctiveView::kFeatDim; ++k)
      pv.features[static_cast<std::size_t>(perm[i]) * DisjunctiveView::kFeatDim + k] =
          v.feat(i, k);
  }
  for (auto [a, b] : v.conj_edges) pv.conj_edges.push_back({perm[a], perm[b]});
  for (auto [a, b] : v.disj_edges) pv.disj_edges.push_back({perm[a], perm[b]});
  for (auto [a, b] : v.seq_edges) pv.seq_edges.push_back({perm[a], perm[b]});

  Mat g1 = model.encode(v).graph.val();
  Mat g2 = model.encode(pv).graph.val();
  for (std::size_t i = 0; i < g1.size(); ++i)
    CHECK(g1.a[i] == doctest::Approx(g2.a[i]).epsilon(1e-10));
}

TEST_CASE("omega = 0 reduces to plain scaled dot-product attention") {
  Instance inst = generate_instance(2, 4, 1, 33);
  ModelConfig cfg = small_config();
  cfg.omega_init = 0.0;
  PolicyModel model(cfg, 9);
  Rng rng(4);
  std::vector<Scenario> scens;
  for (int k = 0; k < cfg.n_scenarios; ++k) scens.push_back(sample_scenario(inst, rng));

  model.upm_forward(inst, scens);
  Mat got = model.last_attention();
  Mat want = reference_attention(model, inst, scens, 0.0);
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i)
    CHECK(std::abs(got.a[i] - want.a[i]) < 1e-9);
}

TEST_CASE("huge omega concentrates attention on the riskiest scenario") {
  Instance inst = generate_instance(2, 4, 1, 33);
  ModelConfig cfg = small_config();
  PolicyModel model(cfg, 9);
  Rng rng(4);
  std::vector<Scenario> scens;
  for (int k = 0; k < cfg.n_scenarios; ++k) scens.push_back(sample_scenario(inst, rng));
  std::vector<long long> priors;
  for (const auto& s : scens) priors.push_back(risk_prior(inst, s));
  long long top = *std::max_element(priors.begin(), priors.end());
  REQUIRE(*std::min_element(priors.begin(), priors.end()) < top);

  model.upm_forward(inst, scens);  // materialize the parameters
  model.params().at("upm/omega").value()(0, 0) = 1e4;
  model.upm_forward(inst, scens);
  const Mat& attn = model.last_attention();
  for (int i = 0; i < attn.rows; ++i) {
    double mass = 0.0;
    for (int j = 0; j < attn.cols; ++j)
      if (priors[j] == top) mass += attn(i, j);
    CHECK(mass >= 0.999);
  }
}

TEST_CASE("attention on risky scenarios grows with omega") {
  Instance inst = generate_instance(2, 4, 1, 33);
  ModelConfig cfg = small_config();
  PolicyModel model(cfg, 9);
  Rng rng(4);
  std::vector<Scenario> scens;
  for (int k = 0; k < cfg.n_scenarios; ++k) scens.push_back(sample_scenario(inst, rng));
  std::vector<long long> priors;
  for (const auto& s : scens) priors.push_back(risk_prior(inst, s));
  std::size_t top = std::max_element(priors.begin(), priors.end()) - priors.begin();

  model.upm_forward(inst, scens);  // materialize the parameters
  auto top_mass = [&](double omega) {
    model.params().at("upm/omega").value()(0, 0) = omega;
    model.upm_forward(inst, scens);
    const Mat& attn = model.last_attention();
    double acc = 0.0;
    for (int i = 0; i < attn.rows; ++i) acc += attn(i, static_cast<int>(top));
    return acc / attn.rows;
  };
  double lo = top_mass(0.1), mid = top_mass(2.0), hi = top_mass(20.0);
  CHECK(lo < mid);
  CHECK(mid < hi);
}

TEST_CASE("branch-free instances give a scenario-count independent summary") {
  Instance inst = generate_instance(3, 4, 0, 71);
  PolicyModel model(small_config(), 2);
  auto scens = enumerate_scenarios(inst);
  REQUIRE(scens.size() == 1);
  Mat z1 = model.upm_forward(inst, scens).val();
  std::vector<Scenario> repeated(5, scens[0]);
  Mat z5 = model.upm_forward(inst, repeated).val();
  for (std::size_t i = 0; i < z1.size(); ++i)
    CHECK(z1.a[i] == doctest::Approx(z5.a[i]).epsilon(1e-12));
}

TEST_CASE("upm rejects an empty scenario set") {
  PolicyModel model(small_config(), 2);
  Instance inst = testfix::make_t1();
  CHECK_THROWS(model.upm_forward(inst, std::vector<Scenario>{}));
}
