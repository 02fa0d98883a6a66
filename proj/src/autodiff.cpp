#include "jsslab/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

namespace jsslab {

namespace {

void check_finite(const Mat& m, const char* where) {
  for (double x : m.a)
    if (!std::isfinite(x)) throw std::runtime_error(std::string(where) + ": non-finite value");
}

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

Tensor make_op(Mat val, std::vector<Tensor> parents,
               std::function<void(Tensor::Node&)> back) {
  auto n = std::make_shared<Tensor::Node>();
  n->val = std::move(val);
  n->grad = Mat(n->val.rows, n->val.cols);
  for (const auto& p : parents)
    if (p.requires_grad()) n->requires_grad = true;
  n->parents = std::move(parents);
  if (n->requires_grad) n->back = std::move(back);
  return Tensor(std::shared_ptr<Tensor::Node>(n));
}

Tensor Tensor::constant(Mat v) {
  auto n = std::make_shared<Node>();
  n->grad = Mat(v.rows, v.cols);
  n->val = std::move(v);
  return Tensor(std::move(n));
}

Tensor Tensor::leaf(Mat v) {
  auto n = std::make_shared<Node>();
  n->grad = Mat(v.rows, v.cols);
  n->val = std::move(v);
  n->requires_grad = true;
  return Tensor(std::move(n));
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.rows() != 1 || loss.cols() != 1)
    throw std::invalid_argument("backward: loss must be a 1x1 scalar");
  // post-order DFS, then reverse for topological backward order
  std::vector<Tensor::Node*> order;
  std::unordered_set<Tensor::Node*> seen;
  struct Frame {
    Tensor::Node* n;
    std::size_t next = 0;
  };
  std::vector<Frame> stack{{loss.node().get()}};
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next < f.n->parents.size()) {
      Tensor::Node* p = f.n->parents[f.next++].node().get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.push_back({p});
      }
    } else {
      order.push_back(f.n);
      stack.pop_back();
    }
  }
  loss.node()->grad(0, 0) += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->back) (*it)->back(**it);
}

// ---- ops ----

Tensor add(const Tensor& a, const Tensor& b) {
  require(a.val().same_shape(b.val()), "add: shape mismatch");
  Mat out = a.val();
  for (std::size_t i = 0; i < out.size(); ++i) out.a[i] += b.val().a[i];
  return make_op(std::move(out), {a, b}, [](Tensor::Node& n) {
    for (int k = 0; k < 2; ++k) {
      auto p = n.parents[k].node();
      if (!p->requires_grad) continue;
      for (std::size_t i = 0; i < n.grad.size(); ++i) p->grad.a[i] += n.grad.a[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require(a.val().same_shape(b.val()), "sub: shape mismatch");
  Mat out = a.val();
  for (std::size_t i = 0; i < out.size(); ++i) out.a[i] -= b.val().a[i];
  return make_op(std::move(out), {a, b}, [](Tensor::Node& n) {
    auto pa = n.parents[0].node();
    auto pb = n.parents[1].node();
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      if (pa->requires_grad) pa->grad.a[i] += n.grad.a[i];
      if (pb->requires_grad) pb->grad.a[i] -= n.grad.a[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require(a.val().same_shape(b.val()), "mul: shape mismatch");
  Mat out = a.val();
  for (std::size_t i = 0; i < out.size(); ++i) out.a[i] *= b.val().a[i];
  return make_op(std::move(out), {a, b}, [](Tensor::Node& n) {
    auto pa = n.parents[0].node();
    auto pb = n.parents[1].node();
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      if (pa->requires_grad) pa->grad.a[i] += n.grad.a[i] * pb->val.a[i];
      if (pb->requires_grad) pb->grad.a[i] += n.grad.a[i] * pa->val.a[i];
    }
  });
}

Tensor scale(const Tensor& a, double s) {
  Mat out = a.val();
  for (double& x : out.a) x *= s;
  return make_op(std::move(out), {a}, [s](Tensor::Node& n) {
    auto p = n.parents[0].node();
    for (std::size_t i = 0; i < n.grad.size(); ++i) p->grad.a[i] += s * n.grad.a[i];
  });
}

Tensor square(const Tensor& a) {
  Mat out = a.val();
  for (double& x : out.a) x *= x;
  return make_op(std::move(out), {a}, [](Tensor::Node& n) {
    auto p = n.parents[0].node();
    for (std::size_t i = 0; i < n.grad.size(); ++i)
      p->grad.a[i] += 2.0 * p->val.a[i] * n.grad.a[i];
  });
}

Tensor elem_log(const Tensor& a) {
  Mat out = a.val();
  for (double& x : out.a) x = std::log(x);
  return make_op(std::move(out), {a}, [](Tensor::Node& n) {
    auto p = n.parents[0].node();
    for (std::size_t i = 0; i < n.grad.size(); ++i)
      p->grad.a[i] += n.grad.a[i] / p->val.a[i];
  });
}

Tensor leaky_relu(const Tensor& a, double slope) {
  Mat out = a.val();
  for (double& x : out.a)
    if (x < 0.0) x *= slope;
  return make_op(std::move(out), {a}, [slope](Tensor::Node& n) {
    auto p = n.parents[0].node();
    for (std::size_t i = 0; i < n.grad.size(); ++i)
      p->grad.a[i] += n.grad.a[i] * (p->val.a[i] < 0.0 ? slope : 1.0);
  });
}

Tensor transpose(const Tensor& a) {
  Mat out(a.cols(), a.rows());
  for (int r = 0; r < a.rows(); ++r)
    for (int c = 0; c < a.cols(); ++c) out(c, r) = a.val()(r, c);
  return make_op(std::move(out), {a}, [](Tensor::Node& n) {
    auto p = n.parents[0].node();
    for (int r = 0; r < n.grad.rows; ++r)
      for (int c = 0; c < n.grad.cols; ++c) p->grad(c, r) += n.grad(r, c);
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  require(!parts.empty(), "concat_cols: empty");
  int rows = parts[0].rows(), cols = 0;
  for (const auto& p : parts) {
    require(p.rows() == rows, "concat_cols: row mismatch");
    cols += p.cols();
  }
  Mat out(rows, cols);
  int off = 0;
  for (const auto& p : parts) {
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < p.cols(); ++c) out(r, off + c) = p.val()(r, c);
    off += p.cols();
  }
  return make_op(std::move(out), parts, [](Tensor::Node& n) {
    int off = 0;
    for (auto& pt : n.parents) {
      auto p = pt.node();
      if (p->requires_grad)
        for (int r = 0; r < p->val.rows; ++r)
          for (int c = 0; c < p->val.cols; ++c) p->grad(r, c) += n.grad(r, off + c);
      off += p->val.cols;
    }
  });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  require(!parts.empty(), "concat_rows: empty");
  int cols = parts[0].cols(), rows = 0;
  for (const auto& p : parts) {
    require(p.cols() == cols, "concat_rows: col mismatch");
    rows += p.rows();
  }
  Mat out(rows, cols);
  int off = 0;
  for (const auto& p : parts) {
    for (int r = 0; r < p.rows(); ++r)
      for (int c = 0; c < cols; ++c) out(off + r, c) = p.val()(r, c);
    off += p.rows();
  }
  return make_op(std::move(out), parts, [](Tensor::Node& n) {
    int off = 0;
    for (auto& pt : n.parents) {
      auto p = pt.node();
      if (p->requires_grad)
        for (int r = 0; r < p->val.rows; ++r)
          for (int c = 0; c < p->val.cols; ++c) p->grad(r, c) += n.grad(off + r, c);
      off += p->val.rows;
    }
  });
}

Tensor mean_rows(const Tensor& a) {
  Mat out(1, a.cols());
  for (int r = 0; r < a.rows(); ++r)
    for (int c = 0; c < a.cols(); ++c) out(0, c) += a.val()(r, c);
  double inv = 1.0 / a.rows();
  for (double& x : out.a) x *= inv;
  return make_op(std::move(out), {a}, [inv](Tensor::Node& n) {
    auto p = n.parents[0].node();
    for (int r = 0; r < p->val.rows; ++r)
      for (int c = 0; c < p->val.cols; ++c) p->grad(r, c) += inv * n.grad(0, c);
  });
}

Tensor broadcast_rows(const Tensor& a, int n_rows) {
  require(a.rows() == 1, "broadcast_rows: input must be 1 x c");
  Mat out(n_rows, a.cols());
  for (int r = 0; r < n_rows; ++r)
    for (int c = 0; c < a.cols(); ++c) out(r, c) = a.val()(0, c);
  return make_op(std::move(out), {a}, [](Tensor::Node& n) {
    auto p = n.parents[0].node();
    for (int r = 0; r < n.grad.rows; ++r)
      for (int c = 0; c < n.grad.cols; ++c) p->grad(0, c) += n.grad(r, c);
  });
}

Tensor sum_all(const Tensor& a) {
  Mat out(1, 1);
  for (double x : a.val().a) out(0, 0) += x;
  return make_op(std::move(out), {a}, [](Tensor::Node& n) {
    auto p = n.parents[0].node();
    for (double& g : p->grad.a) g += n.grad(0, 0);
  });
}

Tensor mean_all(const Tensor& a) {
  return scale(sum_all(a), 1.0 / static_cast<double>(a.val().size()));
}

Tensor pick(const Tensor& a, int r, int c) {
  require(r >= 0 && r < a.rows() && c >= 0 && c < a.cols(), "pick: index out of range");
  Mat out(1, 1);
  out(0, 0) = a.val()(r, c);
  return make_op(std::move(out), {a}, [r, c](Tensor::Node& n) {
    n.parents[0].node()->grad(r, c) += n.grad(0, 0);
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.cols() == b.rows(), "matmul: inner dimension mismatch");
  Mat out(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int k = 0; k < a.cols(); ++k) {
      double v = a.val()(i, k);
      if (v == 0.0) continue;
      for (int j = 0; j < b.cols(); ++j) out(i, j) += v * b.val()(k, j);
    }
  return make_op(std::move(out), {a, b}, [](Tensor::Node& n) {
    auto pa = n.parents[0].node();
    auto pb = n.parents[1].node();
    if (pa->requires_grad)  // dA = g * B^T
      for (int i = 0; i < pa->val.rows; ++i)
        for (int j = 0; j < pb->val.cols; ++j) {
          double g = n.grad(i, j);
          if (g == 0.0) continue;
          for (int k = 0; k < pa->val.cols; ++k) pa->grad(i, k) += g * pb->val(k, j);
        }
    if (pb->requires_grad)  // dB = A^T * g
      for (int i = 0; i < pa->val.rows; ++i)
        for (int k = 0; k < pa->val.cols; ++k) {
          double v = pa->val(i, k);
          if (v == 0.0) continue;
          for (int j = 0; j < pb->val.cols; ++j) pb->grad(k, j) += v * n.grad(i, j);
        }
  });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require(a.cols() == b.cols(), "matmul_nt: inner dimension mismatch");
  Mat out(a.rows(), b.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.rows(); ++j) {
      double acc = 0.0;
      for (int k = 0; k < a.cols(); ++k) acc += a.val()(i, k) * b.val()(j, k);
      out(i, j) = acc;
    }
  return make_op(std::move(out), {a, b}, [](Tensor::Node& n) {
    auto pa = n.parents[0].node();
    auto pb = n.parents[1].node();
    for (int i = 0; i < n.grad.rows; ++i)
      for (int j = 0; j < n.grad.cols; ++j) {
        double g = n.grad(i, j);
        if (g == 0.0) continue;
        for (int k = 0; k < pa->val.cols; ++k) {
          if (pa->requires_grad) pa->grad(i, k) += g * pb->val(j, k);
          if (pb->requires_grad) pb->grad(j, k) += g * pa->val(i, k);
        }
      }
  });
}

Tensor matmul_const(const Mat& a, const Tensor& x) {
  require(a.cols == x.rows(), "matmul_const: inner dimension mismatch");
  Mat out(a.rows, x.cols());
  for (int i = 0; i < a.rows; ++i)
    for (int k = 0; k < a.cols; ++k) {
      double v = a(i, k);
      if (v == 0.0) continue;
      for (int j = 0; j < x.cols(); ++j) out(i, j) += v * x.val()(k, j);
    }
  return make_op(std::move(out), {x}, [a](Tensor::Node& n) {
    auto p = n.parents[0].node();
    for (int i = 0; i < a.rows; ++i)
      for (int k = 0; k < a.cols; ++k) {
        double v = a(i, k);
        if (v == 0.0) continue;
        for (int j = 0; j < n.grad.cols; ++j) p->grad(k, j) += v * n.grad(i, j);
      }
  });
}

Tensor add_broadcast_row(const Tensor& a, const Tensor& row) {
  require(row.rows() == 1 && row.cols() == a.cols(), "add_broadcast_row: shape mismatch");
  Mat out = a.val();
  for (int r = 0; r < out.rows; ++r)
    for (int c = 0; c < out.cols; ++c) out(r, c) += row.val()(0, c);
  return make_op(std::move(out), {a, row}, [](Tensor::Node& n) {
    auto pa = n.parents[0].node();
    auto pr = n.parents[1].node();
    for (int r = 0; r < n.grad.rows; ++r)
      for (int c = 0; c < n.grad.cols; ++c) {
        if (pa->requires_grad) pa->grad(r, c) += n.grad(r, c);
        if (pr->requires_grad) pr->grad(0, c) += n.grad(r, c);
      }
  });
}

Tensor mul_constmat(const Tensor& a, const Mat& m) {
  require(a.val().same_shape(m), "mul_constmat: shape mismatch");
  Mat out = a.val();
  for (std::size_t i = 0; i < out.size(); ++i) out.a[i] *= m.a[i];
  return make_op(std::move(out), {a}, [m](Tensor::Node& n) {
    auto p = n.parents[0].node();
    for (std::size_t i = 0; i < n.grad.size(); ++i) p->grad.a[i] += n.grad.a[i] * m.a[i];
  });
}

Tensor scalar_bcast_mul(const Tensor& s, const Mat& m) {
  require(s.rows() == 1 && s.cols() == 1, "scalar_bcast_mul: scalar expected");
  Mat out = m;
  double v = s.val()(0, 0);
  for (double& x : out.a) x *= v;
  return make_op(std::move(out), {s}, [m](Tensor::Node& n) {
    auto p = n.parents[0].node();
    double acc = 0.0;
    for (std::size_t i = 0; i < n.grad.size(); ++i) acc += n.grad.a[i] * m.a[i];
    p->grad(0, 0) += acc;
  });
}

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  Tensor out = add_broadcast_row(matmul(x, w), b);
  check_finite(out.val(), "affine");
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  require(gain.rows() == 1 && gain.cols() == x.cols(), "layer_norm: gain shape");
  require(bias.rows() == 1 && bias.cols() == x.cols(), "layer_norm: bias shape");
  int rows = x.rows(), cols = x.cols();
  Mat xhat(rows, cols), inv_sigma(rows, 1);
  for (int r = 0; r < rows; ++r) {
    double mean = 0.0;
    for (int c = 0; c < cols; ++c) mean += x.val()(r, c);
    mean /= cols;
    double var = 0.0;
    for (int c = 0; c < cols; ++c) {
      double d = x.val()(r, c) - mean;
      var += d * d;
    }
    var /= cols;
    double is = 1.0 / std::sqrt(var + eps);
    inv_sigma(r, 0) = is;
    for (int c = 0; c < cols; ++c) xhat(r, c) = (x.val()(r, c) - mean) * is;
  }
  Mat out(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) out(r, c) = xhat(r, c) * gain.val()(0, c) + bias.val()(0, c);
  check_finite(out, "layer_norm");
  return make_op(std::move(out), {x, gain, bias},
                 [xhat, inv_sigma](Tensor::Node& n) {
                   auto px = n.parents[0].node();
                   auto pg = n.parents[1].node();
                   auto pb = n.parents[2].node();
                   int rows = n.grad.rows, cols = n.grad.cols;
                   for (int r = 0; r < rows; ++r) {
                     // dxhat = g * gain; dx = is*(dxhat - mean(dxhat) - xhat*mean(dxhat.xhat))
                     double m1 = 0.0, m2 = 0.0;
                     for (int c = 0; c < cols; ++c) {
                       double dxh = n.grad(r, c) * pg->val(0, c);
                       m1 += dxh;
                       m2 += dxh * xhat(r, c);
                     }
                     m1 /= cols;
                     m2 /= cols;
                     for (int c = 0; c < cols; ++c) {
                       double dxh = n.grad(r, c) * pg->val(0, c);
                       if (px->requires_grad)
                         px->grad(r, c) += inv_sigma(r, 0) * (dxh - m1 - xhat(r, c) * m2);
                       if (pg->requires_grad) pg->grad(0, c) += n.grad(r, c) * xhat(r, c);
                       if (pb->requires_grad) pb->grad(0, c) += n.grad(r, c);
                     }
                   }
                 });
}

Tensor masked_softmax(const Tensor& scores, const std::vector<char>& mask) {
  int rows = scores.rows(), cols = scores.cols();
  require(static_cast<int>(mask.size()) == rows * cols, "masked_softmax: mask size mismatch");
  Mat out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    double mx = -1e300;
    bool any = false;
    for (int c = 0; c < cols; ++c)
      if (mask[static_cast<std::size_t>(r) * cols + c]) {
        any = true;
        mx = std::max(mx, scores.val()(r, c));
      }
    if (!any) throw std::invalid_argument("masked_softmax: fully masked row");
    double z = 0.0;
    for (int c = 0; c < cols; ++c)
      if (mask[static_cast<std::size_t>(r) * cols + c]) {
        out(r, c) = std::exp(scores.val()(r, c) - mx);
        z += out(r, c);
      }
    for (int c = 0; c < cols; ++c) out(r, c) /= z;
  }
  check_finite(out, "masked_softmax");
  Mat probs = out;
  return make_op(std::move(out), {scores}, [probs](Tensor::Node& n) {
    auto p = n.parents[0].node();
    for (int r = 0; r < n.grad.rows; ++r) {
      double dot = 0.0;
      for (int c = 0; c < n.grad.cols; ++c) dot += n.grad(r, c) * probs(r, c);
      for (int c = 0; c < n.grad.cols; ++c)
        p->grad(r, c) += probs(r, c) * (n.grad(r, c) - dot);
    }
  });
}

Tensor softmax_rows(const Tensor& scores) {
  std::vector<char> mask(static_cast<std::size_t>(scores.rows()) * scores.cols(), 1);
  return masked_softmax(scores, mask);
}

// ---- ParamStore ----

Tensor ParamStore::get(const std::string& name, int rows, int cols, InitKind kind,
                       double const_val) {
  auto it = slots_.find(name);
  if (it != slots_.end()) {
    const Mat& v = it->second.t.val();
    require(v.rows == rows && v.cols == cols, "ParamStore::get: shape mismatch");
    return it->second.t;
  }
  Mat v(rows, cols);
  switch (kind) {
    case InitKind::Zero:
      break;
    case InitKind::One:
      for (double& x : v.a) x = 1.0;
      break;
    case InitKind::Const:
      for (double& x : v.a) x = const_val;
      break;
    case InitKind::Glorot: {
      Rng rng(child_seed(seed_, "init/" + name));
      double a = std::sqrt(6.0 / (rows + cols));
      for (double& x : v.a) x = (2.0 * rng.uniform() - 1.0) * a;
      break;
    }
  }
  Slot slot;
  slot.t = Tensor::leaf(std::move(v));
  slot.m = Mat(rows, cols);
  slot.v = Mat(rows, cols);
  slots_[name] = slot;
  return slot.t;
}

Tensor ParamStore::at(const std::string& name) const {
  auto it = slots_.find(name);
  if (it == slots_.end()) throw std::out_of_range("ParamStore::at: unknown parameter " + name);
  return it->second.t;
}

void ParamStore::zero_grad() {
  for (auto& [name, slot] : slots_)
    std::fill(slot.t.grad().a.begin(), slot.t.grad().a.end(), 0.0);
}

void ParamStore::adam_step(double lr, double clip_norm) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double gscale = 1.0;
  if (clip_norm > 0.0) {
    double sq = 0.0;
    for (const auto& [name, slot] : slots_)
      for (double g : slot.t.grad().a) sq += g * g;
    double norm = std::sqrt(sq);
    if (norm > clip_norm) gscale = clip_norm / norm;
  }
  ++step_;
  double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (auto& [name, slot] : slots_) {
    Mat& w = slot.t.value();
    const Mat& g = slot.t.grad();
    for (std::size_t i = 0; i < w.size(); ++i) {
      double gi = g.a[i] * gscale;
      slot.m.a[i] = b1 * slot.m.a[i] + (1.0 - b1) * gi;
      slot.v.a[i] = b2 * slot.v.a[i] + (1.0 - b2) * gi * gi;
      double mhat = slot.m.a[i] / c1;
      double vhat = slot.v.a[i] / c2;
      w.a[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  for (const auto& [name, slot] : slots_) out.push_back(name);
  return out;
}

std::map<std::string, Mat> ParamStore::snapshot_values() const {
  std::map<std::string, Mat> out;
  for (const auto& [name, slot] : slots_) out[name] = slot.t.val();
  return out;
}

void ParamStore::restore_values(const std::map<std::string, Mat>& values) {
  for (const auto& [name, v] : values) {
    auto it = slots_.find(name);
    if (it == slots_.end()) {
      Slot slot;
      slot.t = Tensor::leaf(v);
      slot.m = Mat(v.rows, v.cols);
      slot.v = Mat(v.rows, v.cols);
      slots_[name] = slot;
    } else {
      require(it->second.t.val().same_shape(v), "restore_values: shape mismatch");
      it->second.t.value() = v;
    }
  }
}

void ParamStore::save(const std::string& path) const {
  nlohmann::ordered_json header;
  header["version"] = 1;
  header["tensors"] = nlohmann::ordered_json::array();
  for (const auto& [name, slot] : slots_)
    header["tensors"].push_back({{"name", name},
                                 {"rows", slot.t.val().rows},
                                 {"cols", slot.t.val().cols}});
  std::string htext = header.dump();
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint save: cannot open " + tmp);
    std::uint32_t hlen = static_cast<std::uint32_t>(htext.size());
    f.write("JSSCKPT1", 8);
    f.write(reinterpret_cast<const char*>(&hlen), 4);
    f.write(htext.data(), static_cast<std::streamsize>(htext.size()));
    for (const auto& [name, slot] : slots_) {
      const Mat& v = slot.t.val();
      f.write(reinterpret_cast<const char*>(v.a.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
    }
    if (!f) throw std::runtime_error("checkpoint save: write failed");
  }
  std::rename(tmp.c_str(), path.c_str());
}

void ParamStore::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint load: cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (std::memcmp(magic, "JSSCKPT1", 8) != 0)
    throw std::runtime_error("checkpoint load: bad magic");
  std::uint32_t hlen = 0;
  f.read(reinterpret_cast<char*>(&hlen), 4);
  std::string htext(hlen, '\0');
  f.read(htext.data(), hlen);
  auto header = nlohmann::json::parse(htext);
  std::map<std::string, Mat> values;
  for (const auto& t : header.at("tensors")) {
    std::string name = t.at("name").get<std::string>();
    Mat v(t.at("rows").get<int>(), t.at("cols").get<int>());
    f.read(reinterpret_cast<char*>(v.a.data()),
           static_cast<std::streamsize>(v.size() * sizeof(double)));
    values[name] = std::move(v);
  }
  if (!f) throw std::runtime_error("checkpoint load: truncated payload");
  restore_values(values);
}

double gradient_check(ParamStore& store, const std::function<Tensor()>& loss_fn,
                      double h) {
  store.zero_grad();
  backward(loss_fn());
  double worst = 0.0;
  for (const auto& name : store.names()) {
    Tensor t = store.at(name);
    Mat& w = t.value();
    for (std::size_t i = 0; i < w.size(); ++i) {
      double orig = w.a[i];
      w.a[i] = orig + h;
      double up = loss_fn().val()(0, 0);
      w.a[i] = orig - h;
      double dn = loss_fn().val()(0, 0);
      w.a[i] = orig;
      double numeric = (up - dn) / (2.0 * h);
      double analytic = t.grad().a[i];
      double err = std::abs(numeric - analytic) /
                   std::max({1.0, std::abs(numeric), std::abs(analytic)});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace jsslab
