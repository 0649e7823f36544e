#pragma once

// Differentiable volume rendering. A batch of rays is sampled, run through
// the glass field to bend sample positions, then through the decomposition
// radiance field; both branches are integrated along the ray and blended
// into the final color.

#include "glassfield/camera.hpp"
#include "glassfield/model.hpp"
#include "glassfield/sampling.hpp"

namespace gf {

struct RenderConfig {
  int n_coarse = 128;
  int n_importance_glass = 32;  // extra samples drawn from the glass density
  int n_importance_vi = 32;     // extra samples drawn from sigma_vi
  bool jitter = true;
  bool offsets_in_coarse = true;
  bool disable_glass = false;
  bool disable_view_dependent = false;
  bool white_background = true;
  double last_delta = 1e10;  // sentinel spacing after the final sample
};

// w_i = T_i (1 - exp(-sigma_i delta_i)), T_i = exp(-sum_{j<i} sigma_j delta_j)
// sigma, delta: [R,N]
template <typename S>
TensorT<S> transmittance_weights(const TensorT<S>& sigma,
                                 const TensorT<S>& delta) {
  if (sigma.shape() != delta.shape() || sigma.rank() != 2)
    throw ShapeError("transmittance_weights: want matching [R,N], got " +
                     shape_str(sigma.shape()) + " and " +
                     shape_str(delta.shape()));
  auto sd = sigma * delta;
  auto trans = exp(neg(cumsum(sd, 1, /*exclusive=*/true)));
  auto absorb = S(1) - exp(neg(sd));
  return trans * absorb;
}

// Same computation with the contract checks of the refraction path:
// densities must be nonnegative and spacings positive.
template <typename S>
TensorT<S> refraction_weights(const TensorT<S>& sigma_gl,
                              const TensorT<S>& delta) {
  for (int64_t i = 0; i < sigma_gl.size(); ++i)
    if (sigma_gl.data()[i] < S(0))
      throw std::invalid_argument("refraction_weights: negative glass density");
  for (int64_t i = 0; i < delta.size(); ++i)
    if (!(delta.data()[i] > S(0)))
      throw std::invalid_argument("refraction_weights: nonpositive delta");
  return transmittance_weights(sigma_gl, delta);
}

// x'_i = x_i + sum_{j<=i} w_j dx_j   (prefix sum in ray order)
// x, dx: [R,N,3]; w: [R,N]
template <typename S>
TensorT<S> accumulate_offsets(const TensorT<S>& x, const TensorT<S>& w,
                              const TensorT<S>& dx) {
  if (x.shape() != dx.shape() || x.rank() != 3 || w.rank() != 2 ||
      w.dim(0) != x.dim(0) || w.dim(1) != x.dim(1))
    throw ShapeError("accumulate_offsets: inconsistent shapes " +
                     shape_str(x.shape()) + ", " + shape_str(w.shape()) +
                     ", " + shape_str(dx.shape()));
  auto weighted = reshape(w, {w.dim(0), w.dim(1), 1}) * dx;
  return x + cumsum(weighted, 1, /*exclusive=*/false);
}

template <typename S>
struct IntegratedT {
  TensorT<S> value;   // [R,C] accumulated color/feature
  TensorT<S> weights; // [R,N]
  TensorT<S> acc;     // [R] total weight
  TensorT<S> depth;   // [R] weight-averaged t
};

// Volume integration of a per-sample quantity. values: [R,N,C].
template <typename S>
IntegratedT<S> integrate(const TensorT<S>& sigma, const TensorT<S>& values,
                         const TensorT<S>& delta, const TensorT<S>& t) {
  auto w = transmittance_weights(sigma, delta);
  auto w3 = reshape(w, {w.dim(0), w.dim(1), 1});
  IntegratedT<S> out;
  out.value = sum(w3 * values, 1);
  out.weights = w;
  out.acc = sum(w, 1);
  out.depth = sum(w * t, 1);
  return out;
}

// C = C_vi + alpha * C_vd, componentwise; exact arithmetic identity.
template <typename S>
TensorT<S> composite(const TensorT<S>& color_vi, const TensorT<S>& color_vd,
                     const TensorT<S>& alpha) {
  return color_vi + reshape(alpha, {alpha.dim(0), 1}) * color_vd;
}

template <typename S>
struct RenderResultT {
  TensorT<S> color;        // [R,3] fine composite (pre-clamp)
  TensorT<S> color_vi;     // [R,3] incl. background term
  TensorT<S> color_vd;     // [R,3] decoder output
  TensorT<S> alpha;        // [R]
  TensorT<S> depth_vi;     // [R] cm
  TensorT<S> coarse_color; // [R,3] coarse composite for the coarse loss term
  TensorT<S> glass_weights;    // [R,Nf] refraction weights, fine pass
  TensorT<S> offsets;          // [R,Nf,3] raw glass offsets, fine pass
  TensorT<S> coarse_offsets;   // [R,Nc,3]
  TensorT<S> positions;        // [R,Nf,3] pre-offset sample positions
  TensorT<S> adjusted_positions;  // [R,Nf,3]
  std::vector<double> t_fine;     // row-major [R,Nf]
  int n_fine = 0;
  bool pdf_uniform_fallback = false;
};

namespace detail {

template <typename S>
struct SampledPoints {
  TensorT<S> t;      // [R,N]
  TensorT<S> delta;  // [R,N]
  TensorT<S> x;      // [R,N,3]
  TensorT<S> d;      // [R*N,3] per-sample unit directions
};

template <typename S>
SampledPoints<S> assemble_points(const RayBatch& rays,
                                 const std::vector<std::vector<double>>& t_per_ray,
                                 double last_delta) {
  int64_t r = (int64_t)rays.size();
  int64_t n = (int64_t)t_per_ray[0].size();
  std::vector<S> t(r * n), delta(r * n), x(r * n * 3), d(r * n * 3);
  for (int64_t i = 0; i < r; ++i) {
    const auto& ts = t_per_ray[i];
    for (int64_t j = 0; j < n; ++j) {
      t[i * n + j] = S(ts[j]);
      delta[i * n + j] =
          S(j + 1 < n ? ts[j + 1] - ts[j] : last_delta);
      Vec3 p = rays.origins[i] + rays.directions[i] * ts[j];
      x[(i * n + j) * 3 + 0] = S(p.x);
      x[(i * n + j) * 3 + 1] = S(p.y);
      x[(i * n + j) * 3 + 2] = S(p.z);
      d[(i * n + j) * 3 + 0] = S(rays.directions[i].x);
      d[(i * n + j) * 3 + 1] = S(rays.directions[i].y);
      d[(i * n + j) * 3 + 2] = S(rays.directions[i].z);
    }
  }
  SampledPoints<S> out;
  out.t = TensorT<S>::from_vector({r, n}, std::move(t));
  out.delta = TensorT<S>::from_vector({r, n}, std::move(delta));
  out.x = TensorT<S>::from_vector({r, n, 3}, std::move(x));
  out.d = TensorT<S>::from_vector({r * n, 3}, std::move(d));
  return out;
}

}  // namespace detail

// Full pipeline for one ray batch. Deterministic when rng is null.
template <typename S>
RenderResultT<S> render_rays(ModelT<S>& model, const RayBatch& rays,
                             const RenderConfig& cfg, Rng* rng) {
  if (rays.size() == 0) throw std::invalid_argument("render_rays: empty batch");
  int64_t r = (int64_t)rays.size();
  int64_t nc = cfg.n_coarse;

  std::vector<std::vector<double>> t_coarse(r);
  for (int64_t i = 0; i < r; ++i)
    t_coarse[i] =
        stratified_samples(rays.nears[i], rays.fars[i], cfg.n_coarse, rng);

  auto pts = detail::assemble_points<S>(rays, t_coarse, cfg.last_delta);
  RenderResultT<S> res;

  // glass pass over coarse samples
  TensorT<S> w_gl_coarse;
  TensorT<S> x_coarse_adj = pts.x;
  if (!cfg.disable_glass) {
    auto g = model.glass(reshape(pts.x, {r * nc, 3}), pts.d);
    auto sigma_gl = reshape(g.sigma, {r, nc});
    res.coarse_offsets = reshape(g.offset, {r, nc, 3});
    w_gl_coarse = refraction_weights(sigma_gl, pts.delta);
    if (cfg.offsets_in_coarse)
      x_coarse_adj = accumulate_offsets(pts.x, w_gl_coarse, res.coarse_offsets);
  } else {
    res.coarse_offsets = TensorT<S>::zeros({r, nc, 3});
    w_gl_coarse = TensorT<S>::zeros({r, nc});
  }

  // coarse radiance pass
  auto rad_c = model.nerf_coarse(reshape(x_coarse_adj, {r * nc, 3}), pts.d);
  auto vi_c = integrate(reshape(rad_c.sigma_vi, {r, nc}),
                        reshape(rad_c.color_vi, {r, nc, 3}), pts.delta, pts.t);
  auto color_vi_c = vi_c.value;
  if (cfg.white_background)
    color_vi_c = color_vi_c + reshape(S(1) - vi_c.acc, {r, 1});
  if (!cfg.disable_view_dependent) {
    auto fd = model.field_config.feature_dim;
    auto feat_c = integrate(reshape(rad_c.sigma_vd, {r, nc}),
                            reshape(rad_c.feature_vd, {r, nc, fd}), pts.delta,
                            pts.t);
    auto [cvd_c, alpha_c] = model.decoder_gate(feat_c.value);
    res.coarse_color = composite(color_vi_c, cvd_c, alpha_c);
  } else {
    res.coarse_color = color_vi_c;
  }

  // hierarchical resampling from the two densities, NeRF bin convention:
  // bins between midpoints of adjacent coarse samples, interior weights
  int n_glass = cfg.disable_glass ? 0 : cfg.n_importance_glass;
  int n_vi = cfg.n_importance_vi + (cfg.disable_glass ? cfg.n_importance_glass : 0);
  int64_t nf = nc + n_glass + n_vi;
  std::vector<std::vector<double>> t_fine(r);
  if (n_glass + n_vi > 0) {
    auto draw = [&](const TensorT<S>& w, int64_t row, int count,
                    std::vector<double>& dst) {
      if (count == 0) return;
      const auto& ts = t_coarse[row];
      std::vector<double> edges(ts.size() - 1);
      for (size_t j = 0; j + 1 < ts.size(); ++j)
        edges[j] = 0.5 * (ts[j] + ts[j + 1]);
      std::vector<double> wm(ts.size() - 2);
      for (size_t j = 0; j < wm.size(); ++j)
        wm[j] = double(w.data()[row * nc + j + 1]);
      auto s = sample_pdf(edges, wm, count, rng);
      if (s.uniform_fallback) res.pdf_uniform_fallback = true;
      dst.insert(dst.end(), s.t.begin(), s.t.end());
    };
    for (int64_t i = 0; i < r; ++i) {
      t_fine[i] = t_coarse[i];
      draw(w_gl_coarse, i, n_glass, t_fine[i]);
      draw(vi_c.weights, i, n_vi, t_fine[i]);
      std::sort(t_fine[i].begin(), t_fine[i].end());
    }
  } else {
    t_fine = t_coarse;
  }

  auto fine = detail::assemble_points<S>(rays, t_fine, cfg.last_delta);
  res.positions = fine.x;
  res.t_fine.reserve(r * nf);
  for (auto& ts : t_fine) res.t_fine.insert(res.t_fine.end(), ts.begin(), ts.end());
  res.n_fine = (int)nf;

  // glass pass over the merged samples; offsets recomputed, not interpolated
  TensorT<S> x_fine_adj = fine.x;
  if (!cfg.disable_glass) {
    auto g = model.glass(reshape(fine.x, {r * nf, 3}), fine.d);
    auto sigma_gl = reshape(g.sigma, {r, nf});
    res.offsets = reshape(g.offset, {r, nf, 3});
    res.glass_weights = refraction_weights(sigma_gl, fine.delta);
    x_fine_adj = accumulate_offsets(fine.x, res.glass_weights, res.offsets);
  } else {
    res.offsets = TensorT<S>::zeros({r, nf, 3});
    res.glass_weights = TensorT<S>::zeros({r, nf});
  }
  res.adjusted_positions = x_fine_adj;

  // fine radiance pass and the two rendered branches
  auto rad_f = model.nerf_fine(reshape(x_fine_adj, {r * nf, 3}), fine.d);
  auto vi_f = integrate(reshape(rad_f.sigma_vi, {r, nf}),
                        reshape(rad_f.color_vi, {r, nf, 3}), fine.delta, fine.t);
  res.color_vi = vi_f.value;
  if (cfg.white_background)
    res.color_vi = res.color_vi + reshape(S(1) - vi_f.acc, {r, 1});
  res.depth_vi = vi_f.depth;
  if (!cfg.disable_view_dependent) {
    auto fd = model.field_config.feature_dim;
    auto feat_f = integrate(reshape(rad_f.sigma_vd, {r, nf}),
                            reshape(rad_f.feature_vd, {r, nf, fd}), fine.delta,
                            fine.t);
    auto [cvd, alpha] = model.decoder_gate(feat_f.value);
    res.color_vd = cvd;
    res.alpha = alpha;
    res.color = composite(res.color_vi, cvd, alpha);
  } else {
    res.color_vd = TensorT<S>::zeros({r, 3});
    res.alpha = TensorT<S>::zeros({r});
    res.color = res.color_vi;
  }
  return res;
}

}  // namespace gf
