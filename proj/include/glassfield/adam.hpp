#pragma once

// Adaptive-moment optimizer with bias correction. One state per parameter
// tensor; moments live outside the tape.

#include "glassfield/tensor.hpp"

namespace gf {

template <typename S>
struct AdamStateT {
  std::vector<S> m;  // first moment
  std::vector<S> v;  // second moment
  int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

using AdamState = AdamStateT<float>;

template <typename S>
void adam_step(TensorT<S>& param, AdamStateT<S>& state, double lr) {
  if (!param.has_grad())
    throw std::logic_error("adam_step: parameter has no gradient");
  int64_t n = param.size();
  if ((int64_t)state.m.size() != n) {
    if (!state.m.empty())
      throw ShapeError("adam_step: state size " + std::to_string(state.m.size()) +
                       " does not match parameter " + shape_str(param.shape()));
    state.m.assign(n, S(0));
    state.v.assign(n, S(0));
  }
  state.step += 1;
  const double b1 = state.beta1, b2 = state.beta2;
  const double corr1 = 1.0 - std::pow(b1, double(state.step));
  const double corr2 = 1.0 - std::pow(b2, double(state.step));
  S* p = param.data();
  const std::vector<S>& g = param.grad();
  for (int64_t i = 0; i < n; ++i) {
    double gi = double(g[i]);
    double mi = b1 * double(state.m[i]) + (1.0 - b1) * gi;
    double vi = b2 * double(state.v[i]) + (1.0 - b2) * gi * gi;
    state.m[i] = S(mi);
    state.v[i] = S(vi);
    double mhat = mi / corr1;
    double vhat = vi / corr2;
    p[i] = S(double(p[i]) - lr * mhat / (std::sqrt(vhat) + state.eps));
  }
}

}  // namespace gf
