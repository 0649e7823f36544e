#pragma once

#include "glassfield/tensor.hpp"

namespace gf {

// Sum over the batch of squared L2 color distances.
template <typename S>
TensorT<S> render_loss(const TensorT<S>& predicted, const TensorT<S>& reference) {
  if (predicted.shape() != reference.shape())
    throw ShapeError("render_loss: shape mismatch " +
                     shape_str(predicted.shape()) + " vs " +
                     shape_str(reference.shape()));
  auto diff = predicted - reference;
  return sum(diff * diff);
}

// Single square root over the sum of squared offset components across all
// sampled points.
template <typename S>
TensorT<S> offset_loss(const std::vector<TensorT<S>>& offset_batches) {
  TensorT<S> total = TensorT<S>::scalar(S(0));
  for (auto& dx : offset_batches) total = total + sum(dx * dx);
  return sqrt(total);
}

template <typename S>
TensorT<S> total_loss(const TensorT<S>& render, const TensorT<S>& offset,
                      double epsilon) {
  if (epsilon < 0) throw std::invalid_argument("total_loss: epsilon < 0");
  return render + offset * S(epsilon);
}

}  // namespace gf
