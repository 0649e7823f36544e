#pragma once

#include <algorithm>
#include <span>

#include "glassfield/common.hpp"

namespace gf {

// One sample per equal-width bin over [near, far]; jittered uniformly inside
// each bin when an RNG is given, bin midpoints otherwise. Ascending.
inline std::vector<double> stratified_samples(double near, double far, int n,
                                              Rng* rng) {
  if (n < 2) throw std::invalid_argument("stratified_samples: need n >= 2");
  if (!(near >= 0) || !(near < far))
    throw std::invalid_argument("stratified_samples: need 0 <= near < far");
  std::vector<double> t(n);
  double w = (far - near) / n;
  for (int i = 0; i < n; ++i) {
    double u = rng ? rng->uniform() : 0.5;
    t[i] = near + (i + u) * w;
  }
  return t;
}

struct PdfSamples {
  std::vector<double> t;
  bool uniform_fallback = false;  // set when all weights were zero
};

// Inverse-CDF sampling from the piecewise-constant density defined by
// `weights` over bins [edges[i], edges[i+1]). Weights need not be
// normalized. All-zero weights fall back to uniform sampling over the full
// edge range, flagged in the result. Without an RNG the draws are the
// midpoints of `count` equal probability strata.
inline PdfSamples sample_pdf(std::span<const double> edges,
                             std::span<const double> weights, int count,
                             Rng* rng) {
  if (edges.size() != weights.size() + 1 || weights.empty())
    throw std::invalid_argument("sample_pdf: need |edges| == |weights|+1 >= 2");
  PdfSamples out;
  out.t.reserve(count);
  double total = 0;
  for (double w : weights) {
    if (w < 0) throw std::invalid_argument("sample_pdf: negative weight");
    total += w;
  }
  if (!(total > 0)) {
    out.uniform_fallback = true;
    double lo = edges.front(), hi = edges.back();
    for (int i = 0; i < count; ++i) {
      double u = rng ? rng->uniform() : (i + 0.5) / count;
      out.t.push_back(lo + u * (hi - lo));
    }
    return out;
  }
  std::vector<double> cdf(weights.size() + 1, 0.0);
  for (size_t i = 0; i < weights.size(); ++i)
    cdf[i + 1] = cdf[i] + weights[i] / total;
  cdf.back() = 1.0;
  for (int i = 0; i < count; ++i) {
    double u = rng ? rng->uniform() : (i + 0.5) / count;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    size_t hi = std::min<size_t>(cdf.size() - 1,
                                 std::max<size_t>(1, it - cdf.begin()));
    size_t lo = hi - 1;
    double denom = cdf[hi] - cdf[lo];
    double frac = denom > 0 ? (u - cdf[lo]) / denom : 0.5;
    out.t.push_back(edges[lo] + frac * (edges[hi] - edges[lo]));
  }
  return out;
}

}  // namespace gf
