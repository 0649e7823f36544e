#pragma once

// Reverse-mode autodiff over dense n-d arrays. Ops build a tape of nodes
// (the graph itself); backward() walks it in reverse topological order.
// Templated on the scalar so the same code runs in float for training and
// in double for finite-difference verification.

#include <Eigen/Core>
#include <algorithm>
#include <functional>
#include <memory>

#include "glassfield/common.hpp"

namespace gf {

namespace detail {
inline thread_local bool grad_mode = true;
}

// Disables tape construction in scope (inference / finite differences).
struct NoGradGuard {
  bool prev;
  NoGradGuard() : prev(detail::grad_mode) { detail::grad_mode = false; }
  ~NoGradGuard() { detail::grad_mode = prev; }
  NoGradGuard(const NoGradGuard&) = delete;
};

inline bool grad_enabled() { return detail::grad_mode; }

template <typename S>
struct Node {
  Shape shape;
  std::vector<S> values;
  std::vector<S> grad;  // allocated on demand during backward
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node<S>>> parents;
  std::function<void(Node<S>&)> backward_fn;

  void ensure_grad() {
    if (grad.size() != values.size()) grad.assign(values.size(), S(0));
  }
};

template <typename S>
class TensorT {
 public:
  TensorT() = default;

  static TensorT from_vector(const Shape& shape, std::vector<S> values) {
    if ((int64_t)values.size() != numel(shape))
      throw ShapeError("tensor: " + std::to_string(values.size()) +
                       " values do not fill shape " + shape_str(shape));
    auto n = std::make_shared<Node<S>>();
    n->shape = shape;
    n->values = std::move(values);
    return TensorT(std::move(n));
  }
  static TensorT zeros(const Shape& shape) {
    return full(shape, S(0));
  }
  static TensorT full(const Shape& shape, S value) {
    auto n = std::make_shared<Node<S>>();
    n->shape = shape;
    n->values.assign(numel(shape), value);
    return TensorT(std::move(n));
  }
  static TensorT scalar(S value) { return full(Shape{}, value); }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int64_t size() const { return (int64_t)node_->values.size(); }
  int64_t dim(int i) const { return node_->shape[i]; }
  int rank() const { return (int)node_->shape.size(); }

  S* data() { return node_->values.data(); }
  const S* data() const { return node_->values.data(); }
  std::vector<S>& values() { return node_->values; }
  const std::vector<S>& values() const { return node_->values; }

  S item() const {
    if (size() != 1)
      throw ShapeError("item(): tensor has shape " + shape_str(shape()));
    return node_->values[0];
  }

  bool requires_grad() const { return node_->requires_grad; }
  TensorT& set_requires_grad(bool v = true) {
    if (node_->backward_fn)
      throw std::logic_error("set_requires_grad: not a leaf tensor");
    node_->requires_grad = v;
    return *this;
  }
  bool is_leaf() const { return !node_->backward_fn; }

  const std::vector<S>& grad() const {
    if (node_->grad.size() != node_->values.size())
      throw std::logic_error("grad(): no gradient has been computed");
    return node_->grad;
  }
  bool has_grad() const { return node_->grad.size() == node_->values.size(); }
  void zero_grad() {
    if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), S(0));
  }

  // Runs reverse-mode accumulation from this scalar. Leaf grads accumulate
  // across calls until zeroed by the caller.
  void backward() const;

  std::shared_ptr<Node<S>> node() const { return node_; }
  explicit TensorT(std::shared_ptr<Node<S>> n) : node_(std::move(n)) {}

 private:
  std::shared_ptr<Node<S>> node_;
};

using Tensor = TensorT<float>;

// ---------------------------------------------------------------------------
// graph construction helpers

template <typename S>
std::shared_ptr<Node<S>> make_result(const Shape& shape,
                                     std::vector<std::shared_ptr<Node<S>>> parents) {
  auto n = std::make_shared<Node<S>>();
  n->shape = shape;
  n->values.resize(numel(shape));
  bool needs = false;
  if (detail::grad_mode)
    for (auto& p : parents)
      if (p->requires_grad) { needs = true; break; }
  if (needs) {
    n->requires_grad = true;
    n->parents = std::move(parents);
  }
  return n;
}

template <typename S>
void TensorT<S>::backward() const {
  if (size() != 1)
    throw ShapeError("backward(): loss must be scalar, got shape " +
                     shape_str(shape()));
  // Iterative post-order DFS; visiting parents in recorded order keeps the
  // accumulation order fixed run to run. Visited marks live in a sorted
  // pointer vector, so traversal order never depends on hash layout.
  std::vector<Node<S>*> topo;
  std::vector<std::pair<Node<S>*, size_t>> stack;
  std::vector<Node<S>*> mark;
  auto is_marked = [&](Node<S>* n) {
    return std::binary_search(mark.begin(), mark.end(), n);
  };
  auto add_mark = [&](Node<S>* n) {
    mark.insert(std::upper_bound(mark.begin(), mark.end(), n), n);
  };

  if (node_->requires_grad) {
    stack.push_back({node_.get(), 0});
    add_mark(node_.get());
    while (!stack.empty()) {
      auto& [n, idx] = stack.back();
      if (idx < n->parents.size()) {
        Node<S>* p = n->parents[idx++].get();
        if (p->requires_grad && !is_marked(p)) {
          add_mark(p);
          stack.push_back({p, 0});
        }
      } else {
        topo.push_back(n);
        stack.pop_back();
      }
    }
  }
  node_->ensure_grad();
  node_->grad[0] += S(1);
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    Node<S>* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
}

// ---------------------------------------------------------------------------
// broadcasting

inline Shape broadcast_shape(const Shape& a, const Shape& b) {
  Shape out(std::max(a.size(), b.size()));
  for (size_t i = 0; i < out.size(); ++i) {
    int64_t da = i < out.size() - a.size() ? 1 : a[i - (out.size() - a.size())];
    int64_t db = i < out.size() - b.size() ? 1 : b[i - (out.size() - b.size())];
    if (da != db && da != 1 && db != 1)
      throw ShapeError("broadcast: incompatible shapes " + shape_str(a) +
                       " and " + shape_str(b));
    out[i] = std::max(da, db);
  }
  return out;
}

namespace detail {

// Row-major strides, with 0 stride on broadcast (size-1 or missing) axes
// relative to `out`.
inline std::vector<int64_t> broadcast_strides(const Shape& in, const Shape& out) {
  std::vector<int64_t> strides(out.size(), 0);
  int64_t s = 1;
  int off = (int)out.size() - (int)in.size();
  for (int i = (int)in.size() - 1; i >= 0; --i) {
    strides[i + off] = (in[i] == 1 && out[i + off] != 1) ? 0 : s;
    s *= in[i];
  }
  return strides;
}

template <typename S, typename F>
void broadcast_apply(const Shape& out, const Shape& ashape, const S* a,
                     const Shape& bshape, const S* b, S* dst, F&& f) {
  int64_t n = numel(out);
  if (ashape == bshape) {
    for (int64_t i = 0; i < n; ++i) dst[i] = f(a[i], b[i]);
    return;
  }
  if (numel(ashape) == 1) {
    S av = a[0];
    for (int64_t i = 0; i < n; ++i) dst[i] = f(av, b[i]);
    return;
  }
  if (numel(bshape) == 1) {
    S bv = b[0];
    for (int64_t i = 0; i < n; ++i) dst[i] = f(a[i], bv);
    return;
  }
  auto as = broadcast_strides(ashape, out);
  auto bs = broadcast_strides(bshape, out);
  size_t r = out.size();
  std::vector<int64_t> idx(r, 0);
  int64_t ao = 0, bo = 0;
  for (int64_t i = 0; i < n; ++i) {
    dst[i] = f(a[ao], b[bo]);
    for (int d = (int)r - 1; d >= 0; --d) {
      idx[d]++;
      ao += as[d];
      bo += bs[d];
      if (idx[d] < out[d]) break;
      idx[d] = 0;
      ao -= as[d] * out[d];
      bo -= bs[d] * out[d];
    }
  }
}

// Accumulates `g` (laid out as `out`) into `dst` whose shape is `in`,
// summing over broadcast axes.
template <typename S>
void reduce_grad(const Shape& out, const S* g, const Shape& in, S* dst) {
  int64_t n = numel(out);
  if (in == out) {
    for (int64_t i = 0; i < n; ++i) dst[i] += g[i];
    return;
  }
  if (numel(in) == 1) {
    S acc = 0;
    for (int64_t i = 0; i < n; ++i) acc += g[i];
    dst[0] += acc;
    return;
  }
  auto strides = broadcast_strides(in, out);
  size_t r = out.size();
  std::vector<int64_t> idx(r, 0);
  int64_t o = 0;
  for (int64_t i = 0; i < n; ++i) {
    dst[o] += g[i];
    for (int d = (int)r - 1; d >= 0; --d) {
      idx[d]++;
      o += strides[d];
      if (idx[d] < out[d]) break;
      idx[d] = 0;
      o -= strides[d] * out[d];
    }
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise binary ops

template <typename S, typename FwdF, typename BwdF>
TensorT<S> binary_op(const TensorT<S>& a, const TensorT<S>& b, FwdF fwd, BwdF bwd) {
  Shape out = broadcast_shape(a.shape(), b.shape());
  auto n = make_result<S>(out, {a.node(), b.node()});
  detail::broadcast_apply(out, a.shape(), a.data(), b.shape(), b.data(),
                          n->values.data(), fwd);
  if (n->requires_grad) {
    auto an = a.node(), bn = b.node();
    n->backward_fn = [an, bn, bwd](Node<S>& self) {
      int64_t cnt = (int64_t)self.values.size();
      std::vector<S> ga(cnt), gb(cnt);
      // per-element local derivative, then reduce over broadcast axes
      auto as = detail::broadcast_strides(an->shape, self.shape);
      auto bs = detail::broadcast_strides(bn->shape, self.shape);
      if (an->shape == bn->shape) {
        for (int64_t i = 0; i < cnt; ++i)
          bwd(self.grad[i], an->values[i], bn->values[i], self.values[i], ga[i], gb[i]);
      } else {
        size_t r = self.shape.size();
        std::vector<int64_t> idx(r, 0);
        int64_t ao = 0, bo = 0;
        for (int64_t i = 0; i < cnt; ++i) {
          bwd(self.grad[i], an->values[ao], bn->values[bo], self.values[i], ga[i], gb[i]);
          for (int d = (int)r - 1; d >= 0; --d) {
            idx[d]++;
            ao += as[d];
            bo += bs[d];
            if (idx[d] < self.shape[d]) break;
            idx[d] = 0;
            ao -= as[d] * self.shape[d];
            bo -= bs[d] * self.shape[d];
          }
        }
      }
      if (an->requires_grad) {
        an->ensure_grad();
        detail::reduce_grad(self.shape, ga.data(), an->shape, an->grad.data());
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        detail::reduce_grad(self.shape, gb.data(), bn->shape, bn->grad.data());
      }
    };
  }
  return TensorT<S>(std::move(n));
}

template <typename S>
TensorT<S> add(const TensorT<S>& a, const TensorT<S>& b) {
  return binary_op<S>(
      a, b, [](S x, S y) { return x + y; },
      [](S g, S, S, S, S& ga, S& gb) { ga = g; gb = g; });
}
template <typename S>
TensorT<S> sub(const TensorT<S>& a, const TensorT<S>& b) {
  return binary_op<S>(
      a, b, [](S x, S y) { return x - y; },
      [](S g, S, S, S, S& ga, S& gb) { ga = g; gb = -g; });
}
template <typename S>
TensorT<S> mul(const TensorT<S>& a, const TensorT<S>& b) {
  return binary_op<S>(
      a, b, [](S x, S y) { return x * y; },
      [](S g, S x, S y, S, S& ga, S& gb) { ga = g * y; gb = g * x; });
}
template <typename S>
TensorT<S> div(const TensorT<S>& a, const TensorT<S>& b) {
  return binary_op<S>(
      a, b, [](S x, S y) { return x / y; },
      [](S g, S, S y, S out, S& ga, S& gb) {
        ga = g / y;
        gb = -g * out / y;
      });
}

template <typename S> TensorT<S> operator+(const TensorT<S>& a, const TensorT<S>& b) { return add(a, b); }
template <typename S> TensorT<S> operator-(const TensorT<S>& a, const TensorT<S>& b) { return sub(a, b); }
template <typename S> TensorT<S> operator*(const TensorT<S>& a, const TensorT<S>& b) { return mul(a, b); }
template <typename S> TensorT<S> operator/(const TensorT<S>& a, const TensorT<S>& b) { return div(a, b); }
template <typename S> TensorT<S> operator+(const TensorT<S>& a, S b) { return add(a, TensorT<S>::scalar(b)); }
template <typename S> TensorT<S> operator-(const TensorT<S>& a, S b) { return sub(a, TensorT<S>::scalar(b)); }
template <typename S> TensorT<S> operator*(const TensorT<S>& a, S b) { return mul(a, TensorT<S>::scalar(b)); }
template <typename S> TensorT<S> operator/(const TensorT<S>& a, S b) { return div(a, TensorT<S>::scalar(b)); }
template <typename S> TensorT<S> operator+(S a, const TensorT<S>& b) { return add(TensorT<S>::scalar(a), b); }
template <typename S> TensorT<S> operator-(S a, const TensorT<S>& b) { return sub(TensorT<S>::scalar(a), b); }
template <typename S> TensorT<S> operator*(S a, const TensorT<S>& b) { return mul(TensorT<S>::scalar(a), b); }

template <typename S>
TensorT<S> neg(const TensorT<S>& a) {
  return sub(TensorT<S>::scalar(S(0)), a);
}
template <typename S> TensorT<S> operator-(const TensorT<S>& a) { return neg(a); }

// ---------------------------------------------------------------------------
// elementwise unary ops

template <typename S, typename FwdF, typename BwdF>
TensorT<S> unary_op(const TensorT<S>& a, FwdF fwd, BwdF bwd) {
  auto n = make_result<S>(a.shape(), {a.node()});
  const S* src = a.data();
  S* dst = n->values.data();
  int64_t cnt = a.size();
  for (int64_t i = 0; i < cnt; ++i) dst[i] = fwd(src[i]);
  if (n->requires_grad) {
    auto an = a.node();
    n->backward_fn = [an, bwd](Node<S>& self) {
      an->ensure_grad();
      int64_t cnt = (int64_t)self.values.size();
      for (int64_t i = 0; i < cnt; ++i)
        an->grad[i] += self.grad[i] * bwd(an->values[i], self.values[i]);
    };
  }
  return TensorT<S>(std::move(n));
}

template <typename S>
TensorT<S> exp(const TensorT<S>& a) {
  return unary_op<S>(a, [](S x) { return std::exp(x); },
                     [](S, S out) { return out; });
}
template <typename S>
TensorT<S> sqrt(const TensorT<S>& a) {
  // d/dx sqrt = 1/(2 sqrt); at exactly 0 we take the minimum-norm
  // subgradient 0 so zero-initialized offsets do not blow up.
  return unary_op<S>(a, [](S x) { return std::sqrt(x); },
                     [](S, S out) { return out > S(0) ? S(0.5) / out : S(0); });
}
template <typename S>
TensorT<S> sin(const TensorT<S>& a) {
  return unary_op<S>(a, [](S x) { return std::sin(x); },
                     [](S x, S) { return std::cos(x); });
}
template <typename S>
TensorT<S> cos(const TensorT<S>& a) {
  return unary_op<S>(a, [](S x) { return std::cos(x); },
                     [](S x, S) { return -std::sin(x); });
}
template <typename S>
TensorT<S> relu(const TensorT<S>& a) {
  return unary_op<S>(a, [](S x) { return x > S(0) ? x : S(0); },
                     [](S x, S) { return x > S(0) ? S(1) : S(0); });
}
template <typename S>
TensorT<S> sigmoid(const TensorT<S>& a) {
  return unary_op<S>(a,
                     [](S x) {
                       return x >= S(0) ? S(1) / (S(1) + std::exp(-x))
                                        : std::exp(x) / (S(1) + std::exp(x));
                     },
                     [](S, S out) { return out * (S(1) - out); });
}
template <typename S>
TensorT<S> softplus(const TensorT<S>& a) {
  return unary_op<S>(a,
                     [](S x) {
                       if (x > S(20)) return x;
                       return S(std::log1p(std::exp(double(x))));
                     },
                     [](S x, S) {
                       return x >= S(0) ? S(1) / (S(1) + std::exp(-x))
                                        : std::exp(x) / (S(1) + std::exp(x));
                     });
}
template <typename S>
TensorT<S> tanh(const TensorT<S>& a) {
  return unary_op<S>(a, [](S x) { return std::tanh(x); },
                     [](S, S out) { return S(1) - out * out; });
}

// ---------------------------------------------------------------------------
// matmul (2-D), backed by Eigen GEMM

template <typename S>
TensorT<S> matmul(const TensorT<S>& a, const TensorT<S>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) +
                     " and " + shape_str(b.shape()));
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using CMap = Eigen::Map<const Mat>;
  using MMap = Eigen::Map<Mat>;
  int64_t m = a.dim(0), k = a.dim(1), p = b.dim(1);
  auto n = make_result<S>({m, p}, {a.node(), b.node()});
  MMap(n->values.data(), m, p).noalias() =
      CMap(a.data(), m, k) * CMap(b.data(), k, p);
  if (n->requires_grad) {
    auto an = a.node(), bn = b.node();
    n->backward_fn = [an, bn, m, k, p](Node<S>& self) {
      CMap g(self.grad.data(), m, p);
      if (an->requires_grad) {
        an->ensure_grad();
        MMap(an->grad.data(), m, k).noalias() +=
            g * CMap(bn->values.data(), k, p).transpose();
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        MMap(bn->grad.data(), k, p).noalias() +=
            CMap(an->values.data(), m, k).transpose() * g;
      }
    };
  }
  return TensorT<S>(std::move(n));
}

// ---------------------------------------------------------------------------
// reductions

template <typename S>
TensorT<S> sum(const TensorT<S>& a) {
  auto n = make_result<S>(Shape{}, {a.node()});
  S acc = 0;
  const S* src = a.data();
  for (int64_t i = 0; i < a.size(); ++i) acc += src[i];
  n->values[0] = acc;
  if (n->requires_grad) {
    auto an = a.node();
    n->backward_fn = [an](Node<S>& self) {
      an->ensure_grad();
      S g = self.grad[0];
      for (auto& v : an->grad) v += g;
    };
  }
  return TensorT<S>(std::move(n));
}

template <typename S>
TensorT<S> mean(const TensorT<S>& a) {
  return sum(a) * (S(1) / S(a.size()));
}

namespace detail {
inline void axis_split(const Shape& s, int axis, int64_t& outer, int64_t& n,
                       int64_t& inner) {
  outer = 1;
  inner = 1;
  for (int i = 0; i < axis; ++i) outer *= s[i];
  n = s[axis];
  for (size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
}
inline int check_axis(const Shape& s, int axis, const char* op) {
  if (axis < 0) axis += (int)s.size();
  if (axis < 0 || axis >= (int)s.size())
    throw ShapeError(std::string(op) + ": axis out of range for shape " + shape_str(s));
  return axis;
}
}  // namespace detail

template <typename S>
TensorT<S> sum(const TensorT<S>& a, int axis, bool keepdim = false) {
  axis = detail::check_axis(a.shape(), axis, "sum");
  int64_t outer, cnt, inner;
  detail::axis_split(a.shape(), axis, outer, cnt, inner);
  Shape out = a.shape();
  if (keepdim)
    out[axis] = 1;
  else
    out.erase(out.begin() + axis);
  auto n = make_result<S>(out, {a.node()});
  const S* src = a.data();
  S* dst = n->values.data();
  std::fill(n->values.begin(), n->values.end(), S(0));
  for (int64_t o = 0; o < outer; ++o)
    for (int64_t i = 0; i < cnt; ++i) {
      const S* row = src + (o * cnt + i) * inner;
      S* drow = dst + o * inner;
      for (int64_t j = 0; j < inner; ++j) drow[j] += row[j];
    }
  if (n->requires_grad) {
    auto an = a.node();
    n->backward_fn = [an, outer, cnt, inner](Node<S>& self) {
      an->ensure_grad();
      for (int64_t o = 0; o < outer; ++o)
        for (int64_t i = 0; i < cnt; ++i) {
          S* drow = an->grad.data() + (o * cnt + i) * inner;
          const S* g = self.grad.data() + o * inner;
          for (int64_t j = 0; j < inner; ++j) drow[j] += g[j];
        }
    };
  }
  return TensorT<S>(std::move(n));
}

template <typename S>
TensorT<S> mean(const TensorT<S>& a, int axis, bool keepdim = false) {
  int ax = detail::check_axis(a.shape(), axis, "mean");
  return sum(a, axis, keepdim) * (S(1) / S(a.shape()[ax]));
}

// ---------------------------------------------------------------------------
// shape ops

template <typename S>
TensorT<S> reshape(const TensorT<S>& a, const Shape& shape) {
  if (numel(shape) != a.size())
    throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " +
                     shape_str(shape));
  auto n = make_result<S>(shape, {a.node()});
  n->values = a.values();
  if (n->requires_grad) {
    auto an = a.node();
    n->backward_fn = [an](Node<S>& self) {
      an->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
    };
  }
  return TensorT<S>(std::move(n));
}

template <typename S>
TensorT<S> broadcast_to(const TensorT<S>& a, const Shape& shape) {
  if (broadcast_shape(a.shape(), shape) != shape)
    throw ShapeError("broadcast_to: cannot broadcast " + shape_str(a.shape()) +
                     " to " + shape_str(shape));
  return add(a, TensorT<S>::zeros(shape));
}

template <typename S>
TensorT<S> concat(const std::vector<TensorT<S>>& parts, int axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  int ax = detail::check_axis(parts[0].shape(), axis, "concat");
  Shape out = parts[0].shape();
  int64_t total = 0;
  for (auto& p : parts) {
    if (p.rank() != (int)out.size())
      throw ShapeError("concat: rank mismatch " + shape_str(parts[0].shape()) +
                       " vs " + shape_str(p.shape()));
    for (int i = 0; i < p.rank(); ++i)
      if (i != ax && p.shape()[i] != out[i])
        throw ShapeError("concat: shape mismatch " + shape_str(parts[0].shape()) +
                         " vs " + shape_str(p.shape()));
    total += p.shape()[ax];
  }
  out[ax] = total;
  std::vector<std::shared_ptr<Node<S>>> parent_nodes;
  for (auto& p : parts) parent_nodes.push_back(p.node());
  auto n = make_result<S>(out, parent_nodes);
  int64_t outer, cnt, inner;
  detail::axis_split(out, ax, outer, cnt, inner);
  int64_t off = 0;
  for (auto& p : parts) {
    int64_t pc = p.shape()[ax];
    const S* src = p.data();
    for (int64_t o = 0; o < outer; ++o)
      std::copy(src + o * pc * inner, src + (o + 1) * pc * inner,
                n->values.data() + (o * cnt + off) * inner);
    off += pc;
  }
  if (n->requires_grad) {
    std::vector<int64_t> widths;
    for (auto& p : parts) widths.push_back(p.shape()[ax]);
    n->backward_fn = [parent_nodes, widths, outer, cnt, inner](Node<S>& self) {
      int64_t off = 0;
      for (size_t k = 0; k < parent_nodes.size(); ++k) {
        auto& pn = parent_nodes[k];
        int64_t pc = widths[k];
        if (pn->requires_grad) {
          pn->ensure_grad();
          for (int64_t o = 0; o < outer; ++o) {
            const S* g = self.grad.data() + (o * cnt + off) * inner;
            S* dst = pn->grad.data() + o * pc * inner;
            for (int64_t j = 0; j < pc * inner; ++j) dst[j] += g[j];
          }
        }
        off += pc;
      }
    };
  }
  return TensorT<S>(std::move(n));
}

template <typename S>
TensorT<S> slice(const TensorT<S>& a, int axis, int64_t start, int64_t stop) {
  int ax = detail::check_axis(a.shape(), axis, "slice");
  if (start < 0 || stop > a.shape()[ax] || start >= stop)
    throw ShapeError("slice: range [" + std::to_string(start) + "," +
                     std::to_string(stop) + ") invalid for shape " +
                     shape_str(a.shape()));
  Shape out = a.shape();
  out[ax] = stop - start;
  auto n = make_result<S>(out, {a.node()});
  int64_t outer, cnt, inner;
  detail::axis_split(a.shape(), ax, outer, cnt, inner);
  int64_t w = stop - start;
  const S* src = a.data();
  for (int64_t o = 0; o < outer; ++o)
    std::copy(src + (o * cnt + start) * inner, src + (o * cnt + stop) * inner,
              n->values.data() + o * w * inner);
  if (n->requires_grad) {
    auto an = a.node();
    n->backward_fn = [an, outer, cnt, inner, start, w](Node<S>& self) {
      an->ensure_grad();
      for (int64_t o = 0; o < outer; ++o) {
        const S* g = self.grad.data() + o * w * inner;
        S* dst = an->grad.data() + (o * cnt + start) * inner;
        for (int64_t j = 0; j < w * inner; ++j) dst[j] += g[j];
      }
    };
  }
  return TensorT<S>(std::move(n));
}

// Cumulative sum along an axis. Exclusive mode shifts by one so element i
// holds the sum of elements [0, i).
template <typename S>
TensorT<S> cumsum(const TensorT<S>& a, int axis, bool exclusive = false) {
  int ax = detail::check_axis(a.shape(), axis, "cumsum");
  auto n = make_result<S>(a.shape(), {a.node()});
  int64_t outer, cnt, inner;
  detail::axis_split(a.shape(), ax, outer, cnt, inner);
  const S* src = a.data();
  S* dst = n->values.data();
  for (int64_t o = 0; o < outer; ++o)
    for (int64_t j = 0; j < inner; ++j) {
      S acc = 0;
      for (int64_t i = 0; i < cnt; ++i) {
        int64_t off = (o * cnt + i) * inner + j;
        if (exclusive) {
          dst[off] = acc;
          acc += src[off];
        } else {
          acc += src[off];
          dst[off] = acc;
        }
      }
    }
  if (n->requires_grad) {
    auto an = a.node();
    n->backward_fn = [an, outer, cnt, inner, exclusive](Node<S>& self) {
      an->ensure_grad();
      // reverse-suffix accumulation mirrors the forward prefix direction
      for (int64_t o = 0; o < outer; ++o)
        for (int64_t j = 0; j < inner; ++j) {
          S acc = 0;
          for (int64_t i = cnt - 1; i >= 0; --i) {
            int64_t off = (o * cnt + i) * inner + j;
            if (exclusive) {
              an->grad[off] += acc;
              acc += self.grad[off];
            } else {
              acc += self.grad[off];
              an->grad[off] += acc;
            }
          }
        }
    };
  }
  return TensorT<S>(std::move(n));
}

// Cuts the tensor off from the tape.
template <typename S>
TensorT<S> detach(const TensorT<S>& a) {
  auto n = std::make_shared<Node<S>>();
  n->shape = a.shape();
  n->values = a.values();
  return TensorT<S>(std::move(n));
}

}  // namespace gf
