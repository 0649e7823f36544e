#pragma once

#include "glassfield/tensor.hpp"

namespace gf {

// Sinusoidal positional encoding. Frequency l contributes sin(2^l pi v) and
// cos(2^l pi v) per component, interleaved per frequency after the optional
// identity block.
struct EncodingConfig {
  int l_pos = 10;
  int l_dir = 4;
  bool include_identity = true;

  static int64_t encoded_width(int64_t components, int freqs, bool identity) {
    return components * ((identity ? 1 : 0) + 2 * freqs);
  }
};

template <typename S>
TensorT<S> positional_encode(const TensorT<S>& v, int freqs,
                             bool include_identity) {
  if (freqs == 0 && !include_identity)
    throw ShapeError("positional_encode: empty encoding requested");
  if (freqs == 0) return v;
  std::vector<TensorT<S>> parts;
  if (include_identity) parts.push_back(v);
  S freq = S(M_PI);
  for (int l = 0; l < freqs; ++l) {
    auto scaled = v * freq;
    parts.push_back(sin(scaled));
    parts.push_back(cos(scaled));
    freq *= S(2);
  }
  return concat(parts, -1);
}

}  // namespace gf
