#include <doctest.h>

#include <cmath>

#include "jsslab/autodiff.hpp"

using namespace jsslab;

namespace {

Mat random_mat(int r, int c, Rng& rng) {
  Mat m(r, c);
  for (double& x : m.a) x = rng.normal();
  return m;
}

}  // namespace

TEST_CASE("finite differences validate every op") {
  Rng rng(11);
  ParamStore store(3);
  Tensor a = store.get("a", 3, 4, InitKind::Glorot);
  Tensor b = store.get("b", 3, 4, InitKind::Glorot);
  Tensor w = store.get("w", 4, 5, InitKind::Glorot);
  Tensor bias = store.get("bias", 1, 5, InitKind::Zero);
  Tensor gain = store.get("gain", 1, 5, InitKind::One);
  Mat cm = random_mat(3, 3, rng);

  auto check = [&](const char* label, std::function<Tensor()> fn) {
    INFO(label);
    CHECK(gradient_check(store, fn) < 1e-6);
  };

  check("add/mul/scale", [&] { return sum_all(scale(mul(add(a, b), sub(a, b)), 0.7)); });
  check("square", [&] { return mean_all(square(a)); });
  check("leaky_relu", [&] { return sum_all(leaky_relu(a, 0.01)); });
  check("transpose/matmul", [&] { return sum_all(matmul(transpose(a), b)); });
  check("matmul_nt", [&] { return sum_all(matmul_nt(a, b)); });
  check("matmul_const", [&] { return sum_all(matmul_const(cm, a)); });
  check("affine", [&] { return sum_all(square(affine(a, w, bias))); });
  check("layer_norm", [&] {
    return sum_all(square(layer_norm(affine(a, w, bias), gain, bias)));
  });
  check("concat/broadcast/mean", [&] {
    return sum_all(square(concat_cols({a, broadcast_rows(mean_rows(b), 3)})));
  });
  check("concat_rows/pick", [&] {
    return pick(square(concat_rows({a, b})), 4, 2);
  });
  check("softmax_rows", [&] { return sum_all(square(softmax_rows(a))); });
  check("masked_softmax/log", [&] {
    std::vector<char> mask;
    for (int r = 0; r < 3; ++r)
      for (char m : {1, 0, 1, 1}) mask.push_back(m);
    Mat pad(3, 4, 0.0);
    for (int r = 0; r < 3; ++r) pad(r, 1) = 1.0;
    Tensor p = masked_softmax(a, mask);
    return sum_all(mul(p, elem_log(add(p, Tensor::constant(pad)))));
  });
  check("add_broadcast_row", [&] {
    return sum_all(square(add_broadcast_row(a, mean_rows(b))));
  });
  check("scalar ops", [&] {
    return sum_all(scalar_bcast_mul(pick(a, 0, 0), cm));
  });
  Mat cm2 = random_mat(3, 4, rng);
  check("mul_constmat", [&] { return sum_all(mul_constmat(a, cm2)); });
}

TEST_CASE("masked softmax frozen example") {
  Mat scores(1, 3);
  scores(0, 0) = 1.0;
  scores(0, 1) = 50.0;  // masked out despite the dominant score
  scores(0, 2) = 1.0;
  Tensor p = masked_softmax(Tensor::constant(scores), {1, 0, 1});
  CHECK(p.val()(0, 0) == doctest::Approx(0.5));
  CHECK(p.val()(0, 1) == 0.0);
  CHECK(p.val()(0, 2) == doctest::Approx(0.5));
  CHECK_THROWS(masked_softmax(Tensor::constant(scores), {0, 0, 0}));
  CHECK_THROWS(masked_softmax(Tensor::constant(scores), {1, 0}));
}

TEST_CASE("layer_norm normalizes rows") {
  Rng rng(4);
  Mat x = random_mat(2, 6, rng);
  ParamStore store(0);
  Tensor out = layer_norm(Tensor::constant(x), store.get("g", 1, 6, InitKind::One),
                          store.get("b", 1, 6, InitKind::Zero));
  for (int r = 0; r < 2; ++r) {
    double mean = 0.0, var = 0.0;
    for (int c = 0; c < 6; ++c) mean += out.val()(r, c);
    mean /= 6.0;
    for (int c = 0; c < 6; ++c) var += std::pow(out.val()(r, c) - mean, 2);
    CHECK(mean == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(var / 6.0 == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("backward accumulates across freshly built graphs") {
  ParamStore store(1);
  Tensor a = store.get("a", 2, 2, InitKind::One);
  backward(sum_all(square(a)));
  Mat once = a.grad();
  backward(sum_all(square(a)));
  for (std::size_t i = 0; i < once.size(); ++i)
    CHECK(a.grad().a[i] == doctest::Approx(2.0 * once.a[i]));
  store.zero_grad();
  for (double g : a.grad().a) CHECK(g == 0.0);
}

TEST_CASE("adam first step matches the closed form") {
  ParamStore store(2);
  Tensor p = store.get("p", 1, 2, InitKind::Const, 1.5);
  backward(sum_all(mul(p, Tensor::constant(Mat(1, 2, 3.0)))));  // grad = 3
  store.adam_step(0.01, 0.0);  // clipping off
  // m_hat = g, v_hat = g^2 -> delta = -lr * g / (|g| + eps)
  double expect = 1.5 - 0.01 * 3.0 / (3.0 + 1e-8);
  CHECK(p.val()(0, 0) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(p.val()(0, 1) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("adam with zero gradients is a no-op") {
  ParamStore store(2);
  Tensor p = store.get("p", 2, 3, InitKind::Glorot);
  Mat before = p.val();
  store.zero_grad();
  store.adam_step(0.1);
  CHECK(p.val().a == before.a);
}

TEST_CASE("global norm clipping rescales large gradients") {
  ParamStore store(2);
  Tensor p = store.get("p", 1, 1, InitKind::Zero);
  backward(scale(sum_all(p), 100.0));  // grad = 100, norm = 100
  store.adam_step(0.01, 0.5);
  // post-clip gradient is 0.5, adam still divides by sqrt(v_hat) = |g|
  CHECK(p.val()(0, 0) == doctest::Approx(-0.01).epsilon(1e-6));
}

TEST_CASE("checkpoint save/load round trips values") {
  std::string path = "/tmp/jsslab_test_ckpt.bin";
  ParamStore store(7);
  store.get("x", 3, 3, InitKind::Glorot);
  store.get("y", 1, 5, InitKind::Glorot);
  auto values = store.snapshot_values();
  store.save(path);

  ParamStore loaded(99);
  loaded.load(path);
  auto values2 = loaded.snapshot_values();
  REQUIRE(values2.size() == values.size());
  for (const auto& [name, v] : values) CHECK(values2.at(name).a == v.a);
}

TEST_CASE("snapshot and restore") {
  ParamStore store(7);
  Tensor x = store.get("x", 2, 2, InitKind::Glorot);
  auto snap = store.snapshot_values();
  backward(sum_all(x));
  store.adam_step(0.1);
  CHECK(x.val().a != snap.at("x").a);
  store.restore_values(snap);
  CHECK(x.val().a == snap.at("x").a);
}

TEST_CASE("initialization depends only on store seed and name") {
  ParamStore a(5), b(5), c(6);
  CHECK(a.get("w", 4, 4, InitKind::Glorot).val().a ==
        b.get("w", 4, 4, InitKind::Glorot).val().a);
  CHECK(a.get("w", 4, 4, InitKind::Glorot).val().a !=
        c.get("w", 4, 4, InitKind::Glorot).val().a);
  CHECK(a.at("w").val().rows == 4);
  CHECK_THROWS(a.at("missing"));
}
