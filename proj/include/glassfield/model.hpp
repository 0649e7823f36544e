#pragma once

#include "glassfield/fields.hpp"

namespace gf {

// Everything trainable: the glass network (shared between passes), one
// radiance field per pass, and the decoder/gate heads.
template <typename S>
struct ModelT {
  FieldConfig field_config;
  GlassNetworkT<S> glass;
  NerfNetworkT<S> nerf_coarse;
  NerfNetworkT<S> nerf_fine;
  DecoderGateT<S> decoder_gate;

  ModelT() = default;
  ModelT(const FieldConfig& cfg, Rng& rng)
      : field_config(cfg),
        glass(cfg, rng),
        nerf_coarse(cfg, "coarse", rng),
        nerf_fine(cfg, "fine", rng),
        decoder_gate(cfg, rng) {}

  void visit_params(const ParamVisitor<S>& fn) {
    glass.visit_params(fn);
    nerf_coarse.visit_params(fn);
    nerf_fine.visit_params(fn);
    decoder_gate.visit_params(fn);
  }

  std::vector<std::pair<std::string, TensorT<S>*>> named_params() {
    std::vector<std::pair<std::string, TensorT<S>*>> out;
    visit_params([&](const std::string& name, TensorT<S>& t) {
      out.push_back({name, &t});
    });
    return out;
  }

  int64_t param_count() {
    int64_t n = 0;
    visit_params([&](const std::string&, TensorT<S>& t) { n += t.size(); });
    return n;
  }
};

using Model = ModelT<float>;

}  // namespace gf
