#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "glassfield/adam.hpp"
#include "glassfield/tensor.hpp"
#include "test_util.hpp"

using gf::Shape;
using gf::Tensor;
using D = gf::TensorT<double>;

TEST_CASE("elementwise identities") {
  auto x = Tensor::from_vector({3}, {0.f, 1.f, -1.f});
  CHECK(gf::exp(x).values()[0] == doctest::Approx(1.0));
  CHECK(gf::sigmoid(Tensor::scalar(0.f)).item() == doctest::Approx(0.5));
  auto c = gf::cumsum(Tensor::from_vector({3}, {1.f, 2.f, 3.f}), 0);
  CHECK(c.values() == std::vector<float>{1.f, 3.f, 6.f});
  auto ce = gf::cumsum(Tensor::from_vector({3}, {1.f, 2.f, 3.f}), 0, true);
  CHECK(ce.values() == std::vector<float>{0.f, 1.f, 3.f});
}

TEST_CASE("backward quadratic") {
  auto w = Tensor::from_vector({2}, {1.f, 2.f});
  w.set_requires_grad();
  auto loss = gf::sum(w * w);
  loss.backward();
  CHECK(w.grad()[0] == doctest::Approx(2.0));
  CHECK(w.grad()[1] == doctest::Approx(4.0));
}

TEST_CASE("backward sigmoid at zero") {
  auto x = Tensor::scalar(0.f);
  x.set_requires_grad();
  auto loss = gf::sigmoid(x);
  loss.backward();
  CHECK(x.grad()[0] == doctest::Approx(0.25));
}

TEST_CASE("non-scalar loss rejected") {
  auto x = Tensor::from_vector({2}, {1.f, 2.f});
  x.set_requires_grad();
  auto y = x * x;
  CHECK_THROWS_AS(y.backward(), gf::ShapeError);
}

TEST_CASE("shape mismatch errors name both shapes") {
  auto a = Tensor::zeros({2, 3});
  auto b = Tensor::zeros({4, 5});
  try {
    auto c = a + b;
    FAIL("expected throw");
  } catch (const gf::ShapeError& e) {
    std::string msg = e.what();
    CHECK(msg.find("[2,3]") != std::string::npos);
    CHECK(msg.find("[4,5]") != std::string::npos);
  }
  CHECK_THROWS_AS(gf::matmul(a, b), gf::ShapeError);
}

TEST_CASE("grad accumulates across backward calls until zeroed") {
  auto x = Tensor::scalar(3.f);
  x.set_requires_grad();
  (x * x).backward();
  CHECK(x.grad()[0] == doctest::Approx(6.0));
  (x * x).backward();
  CHECK(x.grad()[0] == doctest::Approx(12.0));
  x.zero_grad();
  (x * x).backward();
  CHECK(x.grad()[0] == doctest::Approx(6.0));
}

TEST_CASE("backward is deterministic") {
  gf::Rng rng(11);
  auto vals = gftest::random_values(rng, 12);
  std::vector<float> fvals(vals.begin(), vals.end());
  std::vector<float> g1, g2;
  for (int rep = 0; rep < 2; ++rep) {
    auto w = Tensor::from_vector({3, 4}, fvals);
    w.set_requires_grad();
    auto h = gf::tanh(gf::matmul(Tensor::from_vector({2, 3}, {1, 2, 3, 4, 5, 6}), w));
    auto loss = gf::sum(h * h);
    loss.backward();
    (rep == 0 ? g1 : g2) = w.grad();
  }
  CHECK(g1 == g2);  // bit-identical
}

TEST_CASE("finite differences: every op") {
  gf::Rng rng(7);
  auto mk = [&](Shape s, double lo = -1, double hi = 1) {
    auto t = D::from_vector(s, gftest::random_values(rng, gf::numel(s), lo, hi));
    t.set_requires_grad();
    return t;
  };

  SUBCASE("binary ops with broadcasting") {
    auto a = mk({3, 4});
    auto b = mk({3, 4});
    auto rowv = mk({4});
    auto col = mk({3, 1});
    auto s = mk({});
    auto bpos = D::from_vector({3, 4}, gftest::random_values(rng, 12, 0.5, 2.0));
    bpos.set_requires_grad();

    auto r1 = gftest::check_gradients([&] { return gf::sum((a + b) * (a - b)); }, {a, b});
    CHECK_MESSAGE(r1.ok, r1.detail);
    auto r2 = gftest::check_gradients([&] { return gf::sum(a * rowv + col); }, {a, rowv, col});
    CHECK_MESSAGE(r2.ok, r2.detail);
    auto r3 = gftest::check_gradients([&] { return gf::sum(a / bpos); }, {a, bpos});
    CHECK_MESSAGE(r3.ok, r3.detail);
    auto r4 = gftest::check_gradients([&] { return gf::sum(a * s); }, {a, s});
    CHECK_MESSAGE(r4.ok, r4.detail);
    auto r5 = gftest::check_gradients(
        [&] {
          auto a3 = gf::reshape(a, {3, 4, 1});
          auto b3 = gf::reshape(gf::concat<double>({b, b, b}, 0), {3, 4, 3});
          return gf::sum(a3 * b3);
        },
        {a, b});
    CHECK_MESSAGE(r5.ok, r5.detail);
  }

  SUBCASE("unary ops") {
    auto x = mk({2, 5});
    auto xpos = D::from_vector({2, 5}, gftest::random_values(rng, 10, 0.1, 2.0));
    xpos.set_requires_grad();
    for (auto fn : {+[](const D& t) { return gf::exp(t); },
                    +[](const D& t) { return gf::sin(t); },
                    +[](const D& t) { return gf::cos(t); },
                    +[](const D& t) { return gf::sigmoid(t); },
                    +[](const D& t) { return gf::softplus(t); },
                    +[](const D& t) { return gf::tanh(t); }}) {
      auto r = gftest::check_gradients([&] { return gf::sum(fn(x)); }, {x});
      CHECK_MESSAGE(r.ok, r.detail);
    }
    auto rs = gftest::check_gradients([&] { return gf::sum(gf::sqrt(xpos)); }, {xpos});
    CHECK_MESSAGE(rs.ok, rs.detail);
    // relu away from the kink
    auto xoff =
        D::from_vector({2, 5}, gftest::random_values(rng, 10, 0.2, 1.0));
    xoff.set_requires_grad();
    auto rr = gftest::check_gradients([&] { return gf::sum(gf::relu(xoff)); }, {xoff});
    CHECK_MESSAGE(rr.ok, rr.detail);
  }

  SUBCASE("matmul") {
    auto a = mk({3, 4});
    auto b = mk({4, 2});
    auto r = gftest::check_gradients(
        [&] { return gf::sum(gf::tanh(gf::matmul(a, b))); }, {a, b});
    CHECK_MESSAGE(r.ok, r.detail);
  }

  SUBCASE("reductions and shape ops") {
    auto x = mk({2, 3, 4});
    auto r1 = gftest::check_gradients(
        [&] { return gf::sum(gf::sigmoid(gf::sum(x, 1))); }, {x});
    CHECK_MESSAGE(r1.ok, r1.detail);
    auto r2 = gftest::check_gradients(
        [&] { return gf::mean(gf::exp(gf::mean(x, 2, true))); }, {x});
    CHECK_MESSAGE(r2.ok, r2.detail);
    auto r3 = gftest::check_gradients(
        [&] { return gf::sum(gf::slice(x, 1, 1, 3) * gf::slice(x, 1, 0, 2)); }, {x});
    CHECK_MESSAGE(r3.ok, r3.detail);
    auto y = mk({2, 2, 4});
    auto r4 = gftest::check_gradients(
        [&] { return gf::sum(gf::tanh(gf::concat<double>({x, y}, 1))); }, {x, y});
    CHECK_MESSAGE(r4.ok, r4.detail);
    auto r5 = gftest::check_gradients(
        [&] { return gf::sum(gf::broadcast_to(gf::reshape(x, {2, 3, 4, 1}), {2, 3, 4, 5})); },
        {x});
    CHECK_MESSAGE(r5.ok, r5.detail);
  }

  SUBCASE("cumsum inclusive and exclusive") {
    auto x = mk({3, 5});
    auto r1 = gftest::check_gradients(
        [&] { return gf::sum(gf::exp(gf::cumsum(x, 1)) * x); }, {x});
    CHECK_MESSAGE(r1.ok, r1.detail);
    auto r2 = gftest::check_gradients(
        [&] { return gf::sum(gf::exp(gf::cumsum(x, 0, true)) * x); }, {x});
    CHECK_MESSAGE(r2.ok, r2.detail);
  }
}

TEST_CASE("finite differences: random 3-layer network") {
  gf::Rng rng(21);
  auto mk = [&](Shape s, double scale) {
    auto vals = gftest::random_values(rng, gf::numel(s), -scale, scale);
    auto t = D::from_vector(s, vals);
    t.set_requires_grad();
    return t;
  };
  auto w1 = mk({5, 8}, 0.5), b1 = mk({8}, 0.1);
  auto w2 = mk({8, 8}, 0.5), b2 = mk({8}, 0.1);
  auto w3 = mk({8, 3}, 0.5), b3 = mk({3}, 0.1);
  auto input = D::from_vector({4, 5}, gftest::random_values(rng, 20));
  auto target = D::from_vector({4, 3}, gftest::random_values(rng, 12, 0, 1));

  auto make_loss = [&] {
    auto h1 = gf::tanh(gf::matmul(input, w1) + b1);
    auto h2 = gf::sigmoid(gf::matmul(h1, w2) + b2);
    auto out = gf::matmul(h2, w3) + b3;
    auto diff = out - target;
    return gf::sum(diff * diff);
  };
  auto r = gftest::check_gradients(make_loss, {w1, b1, w2, b2, w3, b3});
  CHECK_MESSAGE(r.ok, r.detail);
}

TEST_CASE("detach and no-grad") {
  auto x = Tensor::scalar(2.f);
  x.set_requires_grad();
  auto y = gf::detach(x * x);
  CHECK_FALSE(y.requires_grad());
  {
    gf::NoGradGuard ng;
    auto z = x * x;
    CHECK_FALSE(z.requires_grad());
  }
  auto z2 = x * x;
  CHECK(z2.requires_grad());
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  auto p = Tensor::from_vector({3}, {1.f, -2.f, 0.5f});
  p.set_requires_grad();
  (gf::sum(p * 0.f)).backward();
  gf::AdamState st;
  adam_step(p, st, 0.1);
  CHECK(p.values() == std::vector<float>{1.f, -2.f, 0.5f});
  CHECK(st.step == 1);
}

TEST_CASE("adam: descent direction on a scalar") {
  auto p = Tensor::scalar(1.f);
  p.set_requires_grad();
  (p * 1.f).backward();  // grad = 1
  gf::AdamState st;
  adam_step(p, st, 0.1);
  CHECK(p.item() < 1.f);
}

TEST_CASE("adam: missing grads error") {
  auto p = Tensor::scalar(1.f);
  p.set_requires_grad();
  gf::AdamState st;
  CHECK_THROWS_AS(adam_step(p, st, 0.1), std::logic_error);
}

TEST_CASE("adam: 1-d quadratic converges") {
  auto p = Tensor::scalar(0.f);
  p.set_requires_grad();
  gf::AdamState st;
  for (int i = 0; i < 500; ++i) {
    p.zero_grad();
    auto diff = p - 3.f;
    (diff * diff).backward();
    adam_step(p, st, 0.05);
  }
  CHECK(std::abs(p.item() - 3.f) < 1e-2);
  CHECK(st.step == 500);
  CHECK(st.m.size() == 1);
}
