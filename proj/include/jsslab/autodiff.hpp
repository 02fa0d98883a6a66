#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "jsslab/rng.hpp"

namespace jsslab {

// Dense row-major matrix of 64-bit floats.
struct Mat {
  int rows = 0, cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c, double v = 0.0) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, v) {}

  double& operator()(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return a[static_cast<std::size_t>(r) * cols + c]; }
  std::size_t size() const { return a.size(); }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

// Node in the reverse-mode graph. Values are computed eagerly; backward()
// walks the recorded graph and accumulates gradients into each node's grad.
class Tensor {
 public:
  struct Node {
    Mat val;
    Mat grad;
    bool requires_grad = false;
    std::vector<Tensor> parents;
    std::function<void(Node&)> back;
  };

  Tensor() = default;

  static Tensor constant(Mat v);
  static Tensor leaf(Mat v);  // parameter; participates in gradients

  bool defined() const { return static_cast<bool>(n_); }
  const Mat& val() const { return n_->val; }
  Mat& value() { return n_->val; }  // in-place edits for parameters only
  Mat& grad() { return n_->grad; }
  const Mat& grad() const { return n_->grad; }
  int rows() const { return n_->val.rows; }
  int cols() const { return n_->val.cols; }
  bool requires_grad() const { return n_->requires_grad; }

  std::shared_ptr<Node> node() const { return n_; }

 private:
  explicit Tensor(std::shared_ptr<Node> n) : n_(std::move(n)) {}
  std::shared_ptr<Node> n_;
  friend Tensor make_op(Mat val, std::vector<Tensor> parents,
                        std::function<void(Tensor::Node&)> back);
};

// Accumulates exact reverse-mode gradients of a scalar loss into every
// reachable node; repeated calls without zeroing accumulate.
void backward(const Tensor& loss);

// --- elementwise / structural ops ---
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor square(const Tensor& a);
Tensor elem_log(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double slope = 0.01);
Tensor transpose(const Tensor& a);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor mean_rows(const Tensor& a);            // n x c -> 1 x c
Tensor broadcast_rows(const Tensor& a, int n);  // 1 x c -> n x c
Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);
Tensor pick(const Tensor& a, int r, int c);   // 1 x 1 selector

// --- linear algebra ---
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor matmul_nt(const Tensor& a, const Tensor& b);       // a * b^T
Tensor matmul_const(const Mat& a, const Tensor& x);       // constant left factor
Tensor add_broadcast_row(const Tensor& a, const Tensor& row);
Tensor mul_constmat(const Tensor& a, const Mat& m);
Tensor scalar_bcast_mul(const Tensor& s, const Mat& m);   // (1x1) * constant

// --- layers ---
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-5);
// Row-wise softmax; masked entries get probability exactly 0. Throws if any
// row is fully masked.
Tensor masked_softmax(const Tensor& scores, const std::vector<char>& mask);
Tensor softmax_rows(const Tensor& scores);

enum class InitKind { Zero, One, Glorot, Const };

// Named parameter tensors with adaptive-moment state. Initialization is a
// pure function of (store seed, parameter name), so creation order does not
// matter for reproducibility.
class ParamStore {
 public:
  explicit ParamStore(std::uint64_t seed = 0) : seed_(seed) {}

  Tensor get(const std::string& name, int rows, int cols, InitKind kind,
             double const_val = 0.0);
  bool has(const std::string& name) const { return slots_.count(name) != 0; }
  Tensor at(const std::string& name) const;

  void zero_grad();
  // Adam update (beta1 0.9, beta2 0.999, eps 1e-8) with bias correction and
  // optional global grad-norm clip; clip_norm <= 0 disables clipping.
  void adam_step(double lr, double clip_norm = 0.5);

  void save(const std::string& path) const;
  void load(const std::string& path);
  std::vector<std::string> names() const;
  // Deep copy of parameter values (moments excluded).
  std::map<std::string, Mat> snapshot_values() const;
  void restore_values(const std::map<std::string, Mat>& values);

 private:
  struct Slot {
    Tensor t;
    Mat m, v;  // first/second moments
  };
  std::map<std::string, Slot> slots_;
  long long step_ = 0;
  std::uint64_t seed_;
};

// Central finite-difference check of d(loss)/d(param entry) against the
// analytic gradient. Returns the worst scaled error over all entries.
double gradient_check(ParamStore& store, const std::function<Tensor()>& loss_fn,
                      double h = 1e-5);

}  // namespace jsslab
