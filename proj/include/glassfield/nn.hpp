#pragma once

#include <functional>
#include <string>

#include "glassfield/tensor.hpp"

namespace gf {

// Fully connected layer, parameters stored as leaf tensors.
template <typename S>
struct LinearT {
  TensorT<S> weight;  // [in, out]
  TensorT<S> bias;    // [out]

  LinearT() = default;
  LinearT(int64_t in, int64_t out, Rng& rng, bool zero_init = false) {
    std::vector<S> w(in * out, S(0));
    std::vector<S> b(out, S(0));
    if (!zero_init) {
      double bound = 1.0 / std::sqrt(double(in));
      for (auto& v : w) v = S(rng.uniform(-bound, bound));
      for (auto& v : b) v = S(rng.uniform(-bound, bound));
    }
    weight = TensorT<S>::from_vector({in, out}, std::move(w));
    bias = TensorT<S>::from_vector({out}, std::move(b));
    weight.set_requires_grad();
    bias.set_requires_grad();
  }

  TensorT<S> operator()(const TensorT<S>& x) const {
    return matmul(x, weight) + bias;
  }

  int64_t in_features() const { return weight.dim(0); }
  int64_t out_features() const { return weight.dim(1); }
};

template <typename S>
using ParamVisitor = std::function<void(const std::string&, TensorT<S>&)>;

template <typename S>
void visit_linear(const std::string& name, LinearT<S>& layer,
                  const ParamVisitor<S>& fn) {
  fn(name + ".weight", layer.weight);
  fn(name + ".bias", layer.bias);
}

}  // namespace gf
