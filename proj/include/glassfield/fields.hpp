#pragma once

// The four networks: the glass field (view-independent density + view-
// dependent ray offsets), the decomposition radiance field (view-independent
// density/color plus view-dependent density/feature), and the decoder/gate
// MLPs that turn a rendered feature vector into a color and blending weight.

#include <vector>

#include "glassfield/encoding.hpp"
#include "glassfield/nn.hpp"

namespace gf {

struct FieldConfig {
  int width = 64;          // hidden layer width W
  int feature_dim = 64;    // view-dependent feature width
  EncodingConfig encoding;
  double scene_scale = 40.0;  // cm per encoder unit; positions are divided by
                              // this before encoding so low frequencies span
                              // the scene
  double density_bias = -3.0; // added before softplus, keeps initial fields
                              // mostly transparent

  int64_t pos_width() const {
    return EncodingConfig::encoded_width(3, encoding.l_pos,
                                         encoding.include_identity);
  }
  int64_t dir_width() const {
    return EncodingConfig::encoded_width(3, encoding.l_dir,
                                         encoding.include_identity);
  }
};

template <typename S>
struct GlassFieldOutputT {
  TensorT<S> sigma;    // [P], nonnegative
  TensorT<S> offset;   // [P,3]
};

template <typename S>
struct RadianceFieldOutputT {
  TensorT<S> sigma_vi;  // [P]
  TensorT<S> color_vi;  // [P,3] in [0,1]
  TensorT<S> sigma_vd;  // [P]
  TensorT<S> feature_vd;  // [P,feature_dim]
};

namespace detail {

template <typename S>
void check_unit_directions(const TensorT<S>& d, const char* who) {
  if (d.rank() != 2 || d.dim(1) != 3)
    throw ShapeError(std::string(who) + ": directions must be [P,3], got " +
                     shape_str(d.shape()));
  const S* p = d.data();
  for (int64_t i = 0; i < d.dim(0); ++i) {
    double n2 = double(p[3 * i]) * p[3 * i] + double(p[3 * i + 1]) * p[3 * i + 1] +
                double(p[3 * i + 2]) * p[3 * i + 2];
    if (std::abs(std::sqrt(n2) - 1.0) > 1e-6)
      throw std::invalid_argument(std::string(who) +
                                  ": direction not unit-norm at row " +
                                  std::to_string(i));
  }
}

}  // namespace detail

// Glass network: a position-only trunk feeds the density head; the offset
// head additionally sees the encoded direction. The final offset layer is
// zero-initialized so training starts from straight rays.
template <typename S>
struct GlassNetworkT {
  FieldConfig config;
  std::vector<LinearT<S>> trunk;  // 7 layers
  LinearT<S> density_head;
  LinearT<S> offset_hidden;
  LinearT<S> offset_out;

  GlassNetworkT() = default;
  GlassNetworkT(const FieldConfig& cfg, Rng& rng) : config(cfg) {
    int w = cfg.width;
    trunk.emplace_back(cfg.pos_width(), w, rng);
    for (int i = 1; i < 7; ++i) trunk.emplace_back(w, w, rng);
    density_head = LinearT<S>(w, 1, rng);
    offset_hidden = LinearT<S>(w + cfg.dir_width(), w, rng);
    offset_out = LinearT<S>(w, 3, rng, /*zero_init=*/true);
  }

  GlassFieldOutputT<S> operator()(const TensorT<S>& x,
                                  const TensorT<S>& d) const {
    detail::check_unit_directions(d, "glass_field");
    auto pe_x = positional_encode(x * S(1.0 / config.scene_scale),
                                  config.encoding.l_pos,
                                  config.encoding.include_identity);
    auto pe_d = positional_encode(d, config.encoding.l_dir,
                                  config.encoding.include_identity);
    auto h = pe_x;
    for (auto& layer : trunk) h = relu(layer(h));
    auto sigma = softplus(density_head(h) + S(config.density_bias));
    auto oh = relu(offset_hidden(concat<S>({h, pe_d}, -1)));
    auto offset = offset_out(oh);
    return {reshape(sigma, {x.dim(0)}), offset};
  }

  void visit_params(const ParamVisitor<S>& fn) {
    for (size_t i = 0; i < trunk.size(); ++i)
      visit_linear("glass.trunk." + std::to_string(i), trunk[i], fn);
    visit_linear("glass.density", density_head, fn);
    visit_linear("glass.offset_hidden", offset_hidden, fn);
    visit_linear("glass.offset_out", offset_out, fn);
  }
};

// Decomposition radiance field: 8-layer trunk with a skip connection at
// layer 5; view-independent heads read the trunk only, the view-dependent
// branch reads trunk features concatenated with the encoded direction.
template <typename S>
struct NerfNetworkT {
  FieldConfig config;
  std::string tag;  // "coarse"/"fine", used for parameter names
  std::vector<LinearT<S>> trunk;
  LinearT<S> sigma_vi_head;
  LinearT<S> color_hidden, color_out;
  LinearT<S> vd_hidden;
  LinearT<S> sigma_vd_head;
  LinearT<S> feature_head;

  static constexpr int kSkipLayer = 5;  // 1-based; input re-joined there

  NerfNetworkT() = default;
  NerfNetworkT(const FieldConfig& cfg, const std::string& tag_, Rng& rng)
      : config(cfg), tag(tag_) {
    int w = cfg.width;
    int64_t pw = cfg.pos_width();
    trunk.emplace_back(pw, w, rng);
    for (int i = 1; i < 8; ++i)
      trunk.emplace_back(i == kSkipLayer - 1 ? w + pw : w, w, rng);
    sigma_vi_head = LinearT<S>(w, 1, rng);
    color_hidden = LinearT<S>(w, w / 2, rng);
    color_out = LinearT<S>(w / 2, 3, rng);
    vd_hidden = LinearT<S>(w + cfg.dir_width(), w / 2, rng);
    sigma_vd_head = LinearT<S>(w / 2, 1, rng);
    feature_head = LinearT<S>(w / 2, cfg.feature_dim, rng);
  }

  RadianceFieldOutputT<S> operator()(const TensorT<S>& x,
                                     const TensorT<S>& d) const {
    detail::check_unit_directions(d, "nerf_field");
    auto pe_x = positional_encode(x * S(1.0 / config.scene_scale),
                                  config.encoding.l_pos,
                                  config.encoding.include_identity);
    auto pe_d = positional_encode(d, config.encoding.l_dir,
                                  config.encoding.include_identity);
    auto h = pe_x;
    for (size_t i = 0; i < trunk.size(); ++i) {
      if ((int)i == kSkipLayer - 1) h = concat<S>({h, pe_x}, -1);
      h = relu(trunk[i](h));
    }
    auto sigma_vi = softplus(sigma_vi_head(h) + S(config.density_bias));
    auto color_vi = sigmoid(color_out(relu(color_hidden(h))));
    auto vh = relu(vd_hidden(concat<S>({h, pe_d}, -1)));
    auto sigma_vd = softplus(sigma_vd_head(vh) + S(config.density_bias));
    auto feature = feature_head(vh);
    int64_t p = x.dim(0);
    return {reshape(sigma_vi, {p}), color_vi, reshape(sigma_vd, {p}), feature};
  }

  void visit_params(const ParamVisitor<S>& fn) {
    auto prefix = "nerf_" + tag;
    for (size_t i = 0; i < trunk.size(); ++i)
      visit_linear(prefix + ".trunk." + std::to_string(i), trunk[i], fn);
    visit_linear(prefix + ".sigma_vi", sigma_vi_head, fn);
    visit_linear(prefix + ".color_hidden", color_hidden, fn);
    visit_linear(prefix + ".color_out", color_out, fn);
    visit_linear(prefix + ".vd_hidden", vd_hidden, fn);
    visit_linear(prefix + ".sigma_vd", sigma_vd_head, fn);
    visit_linear(prefix + ".feature", feature_head, fn);
  }
};

// Decoder and gate heads over the volume-rendered feature vector. Separate
// parameter sets; both bounded by a final sigmoid.
template <typename S>
struct DecoderGateT {
  FieldConfig config;
  LinearT<S> dec_hidden, dec_out;
  LinearT<S> gate_hidden, gate_out;

  DecoderGateT() = default;
  DecoderGateT(const FieldConfig& cfg, Rng& rng) : config(cfg) {
    dec_hidden = LinearT<S>(cfg.feature_dim, cfg.width, rng);
    dec_out = LinearT<S>(cfg.width, 3, rng);
    gate_hidden = LinearT<S>(cfg.feature_dim, cfg.width, rng);
    gate_out = LinearT<S>(cfg.width, 1, rng);
  }

  // feature: [R, feature_dim] -> color [R,3] in [0,1], alpha [R] in [0,1]
  std::pair<TensorT<S>, TensorT<S>> operator()(const TensorT<S>& feature) const {
    if (feature.rank() != 2 || feature.dim(1) != config.feature_dim)
      throw ShapeError("decode_and_gate: expected [R," +
                       std::to_string(config.feature_dim) + "] features, got " +
                       shape_str(feature.shape()));
    auto color = sigmoid(dec_out(relu(dec_hidden(feature))));
    auto alpha = sigmoid(gate_out(relu(gate_hidden(feature))));
    return {color, reshape(alpha, {feature.dim(0)})};
  }

  void visit_params(const ParamVisitor<S>& fn) {
    visit_linear("decoder.hidden", dec_hidden, fn);
    visit_linear("decoder.out", dec_out, fn);
    visit_linear("gate.hidden", gate_hidden, fn);
    visit_linear("gate.out", gate_out, fn);
  }
};

using GlassNetwork = GlassNetworkT<float>;
using NerfNetwork = NerfNetworkT<float>;
using DecoderGate = DecoderGateT<float>;

}  // namespace gf
