#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "glassfield/fields.hpp"
#include "glassfield/model.hpp"
#include "test_util.hpp"

using gf::Tensor;
using D = gf::TensorT<double>;

static gf::FieldConfig small_config() {
  gf::FieldConfig cfg;
  cfg.width = 16;
  cfg.feature_dim = 8;
  cfg.scene_scale = 1.0;
  return cfg;
}

static D unit_dirs(gf::Rng& rng, int64_t n) {
  std::vector<double> d(n * 3);
  for (int64_t i = 0; i < n; ++i) {
    gf::Vec3 v{rng.normal(), rng.normal(), rng.normal()};
    v = v.normalized();
    d[3 * i] = v.x;
    d[3 * i + 1] = v.y;
    d[3 * i + 2] = v.z;
  }
  return D::from_vector({n, 3}, d);
}

TEST_CASE("positional encoding: zero vector") {
  auto v = Tensor::from_vector({1, 3}, {0.f, 0.f, 0.f});
  auto enc = gf::positional_encode(v, 2, true);
  REQUIRE(enc.shape() == gf::Shape{1, 15});  // 3*(1+2*2)
  // identity block and all sin terms zero, all cos terms one
  for (int i = 0; i < 3; ++i) CHECK(enc.values()[i] == 0.f);
  for (int f = 0; f < 2; ++f)
    for (int i = 0; i < 3; ++i) {
      CHECK(enc.values()[3 + 6 * f + i] == doctest::Approx(0.0));      // sin
      CHECK(enc.values()[3 + 6 * f + 3 + i] == doctest::Approx(1.0));  // cos
    }
}

TEST_CASE("positional encoding: degenerate and quarter-period cases") {
  auto v = Tensor::from_vector({1, 3}, {0.3f, -0.7f, 0.1f});
  auto enc0 = gf::positional_encode(v, 0, true);
  CHECK(enc0.values() == v.values());

  auto q = Tensor::from_vector({1, 3}, {0.5f, 0.f, 0.f});
  auto enc1 = gf::positional_encode(q, 1, true);
  REQUIRE(enc1.shape() == gf::Shape{1, 9});
  CHECK(enc1.values()[3] == doctest::Approx(1.0));  // sin(pi/2)
}

TEST_CASE("encoded width formula") {
  CHECK(gf::EncodingConfig::encoded_width(3, 10, true) == 63);
  CHECK(gf::EncodingConfig::encoded_width(3, 4, true) == 27);
  CHECK(gf::EncodingConfig::encoded_width(3, 4, false) == 24);
}

TEST_CASE("glass field: zero-init offsets and view-independent density") {
  gf::Rng rng(3);
  gf::GlassNetworkT<double> net(small_config(), rng);
  auto x = D::from_vector({4, 3}, gftest::random_values(rng, 12));
  auto d1 = unit_dirs(rng, 4);
  auto d2 = unit_dirs(rng, 4);

  auto out1 = net(x, d1);
  for (double v : out1.offset.values()) CHECK(v == 0.0);
  for (double v : out1.sigma.values()) CHECK(v >= 0.0);

  auto out2 = net(x, d2);
  CHECK(out1.sigma.values() == out2.sigma.values());  // density ignores d
}

TEST_CASE("glass field: rejects non-unit directions") {
  gf::Rng rng(4);
  gf::GlassNetworkT<double> net(small_config(), rng);
  auto x = D::zeros({1, 3});
  auto bad = D::from_vector({1, 3}, {1.0, 1.0, 0.0});
  CHECK_THROWS_AS(net(x, bad), std::invalid_argument);
}

TEST_CASE("radiance field: view-independent heads ignore direction") {
  gf::Rng rng(5);
  gf::NerfNetworkT<double> net(small_config(), "coarse", rng);
  auto x = D::from_vector({5, 3}, gftest::random_values(rng, 15));
  auto o1 = net(x, unit_dirs(rng, 5));
  auto o2 = net(x, unit_dirs(rng, 5));
  CHECK(o1.sigma_vi.values() == o2.sigma_vi.values());
  CHECK(o1.color_vi.values() == o2.color_vi.values());
}

TEST_CASE("radiance field: output ranges and feature width") {
  gf::Rng rng(6);
  auto cfg = small_config();
  cfg.feature_dim = 64;
  gf::NerfNetworkT<double> net(cfg, "fine", rng);
  auto x = D::from_vector({6, 3}, gftest::random_values(rng, 18, -2, 2));
  auto out = net(x, unit_dirs(rng, 6));
  CHECK(out.feature_vd.shape() == gf::Shape{6, 64});
  for (double v : out.sigma_vi.values()) CHECK(v >= 0.0);
  for (double v : out.sigma_vd.values()) CHECK(v >= 0.0);
  for (double v : out.color_vi.values()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  for (double v : out.feature_vd.values()) CHECK(std::isfinite(v));
}

TEST_CASE("decoder and gate") {
  gf::Rng rng(7);
  auto cfg = small_config();
  gf::DecoderGateT<double> dg(cfg, rng);

  SUBCASE("zero feature with zeroed final layers gives sigmoid(0)") {
    std::fill(dg.dec_out.weight.values().begin(), dg.dec_out.weight.values().end(), 0.0);
    std::fill(dg.dec_out.bias.values().begin(), dg.dec_out.bias.values().end(), 0.0);
    std::fill(dg.gate_out.weight.values().begin(), dg.gate_out.weight.values().end(), 0.0);
    std::fill(dg.gate_out.bias.values().begin(), dg.gate_out.bias.values().end(), 0.0);
    auto [c, a] = dg(D::zeros({2, 8}));
    for (double v : c.values()) CHECK(v == doctest::Approx(0.5));
    for (double v : a.values()) CHECK(v == doctest::Approx(0.5));
  }

  SUBCASE("bounded outputs for huge features") {
    std::vector<double> big(8);
    gf::Rng r2(8);
    for (auto& v : big) v = r2.uniform(-1e3, 1e3);
    auto [c, a] = dg(D::from_vector({1, 8}, big));
    for (double v : c.values()) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    CHECK(a.values()[0] >= 0.0);
    CHECK(a.values()[0] <= 1.0);
  }

  SUBCASE("width mismatch rejected") {
    CHECK_THROWS_AS(dg(D::zeros({1, 5})), gf::ShapeError);
  }

  SUBCASE("alpha does not depend on decoder parameters") {
    auto f = D::from_vector({1, 8}, gftest::random_values(rng, 8));
    auto [c, a] = dg(f);
    gf::sum(a).backward();
    CHECK_FALSE(dg.dec_hidden.weight.has_grad());
    CHECK_FALSE(dg.dec_out.weight.has_grad());
    CHECK(dg.gate_hidden.weight.has_grad());
  }
}

TEST_CASE("field gradients match finite differences") {
  gf::Rng rng(9);
  auto cfg = small_config();
  gf::ModelT<double> model(cfg, rng);
  // randomize the zero-initialized offset head so the check exercises it
  for (auto& v : model.glass.offset_out.weight.values()) v = rng.uniform(-0.1, 0.1);
  for (auto& v : model.glass.offset_out.bias.values()) v = rng.uniform(-0.1, 0.1);

  auto x = D::from_vector({3, 3}, gftest::random_values(rng, 9));
  x.set_requires_grad();
  auto d = unit_dirs(rng, 3);

  std::vector<D> leaves;
  model.glass.visit_params([&](const std::string&, D& p) { leaves.push_back(p); });
  auto make_loss = [&] {
    auto out = model.glass(x, d);
    return gf::sum(out.sigma) + gf::sum(gf::sin(out.offset * 3.0));
  };
  auto r = gftest::check_gradients(make_loss, leaves, 1e-5);
  CHECK_MESSAGE(r.ok, r.detail);
  // position gradients see encoding frequencies up to 2^9*pi, so the step
  // must sit well inside their linear range
  auto rx = gftest::check_gradients(make_loss, {x}, 1e-7, 1e-4, 1e-8);
  CHECK_MESSAGE(rx.ok, rx.detail);

  std::vector<D> leaves2;
  model.nerf_fine.visit_params([&](const std::string&, D& p) { leaves2.push_back(p); });
  auto make_loss2 = [&] {
    auto out = model.nerf_fine(x, d);
    return gf::sum(out.color_vi) + gf::sum(out.sigma_vd) +
           gf::sum(gf::sigmoid(out.feature_vd));
  };
  auto r2 = gftest::check_gradients(make_loss2, leaves2, 1e-5);
  CHECK_MESSAGE(r2.ok, r2.detail);
  auto rx2 = gftest::check_gradients(make_loss2, {x}, 1e-7, 1e-4, 1e-8);
  CHECK_MESSAGE(rx2.ok, rx2.detail);
}
