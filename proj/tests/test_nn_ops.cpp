// Copyright 2026 The CSFM Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "support.hpp"

using namespace csfm;
using namespace csfm::testing;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("dirac 3x3 kernel is the identity", "[nn][conv]") {
  Rng rng(1);
  auto x = random_tensor<float>(Shape{2, 3, 5, 4}, rng);
  auto p = ConvParams<float>::zeros(3, 3, 3);
  for (std::int64_t c = 0; c < 3; ++c) p.weight.mutable_data()[p.weight.index(c, c, 1, 1)] = 1.f;
  CHECK(exactly_equal(conv2d(x, p, 1), x));
}

TEST_CASE("1x1 conv is a per-pixel affine map", "[nn][conv]") {
  Rng rng(2);
  auto x = random_tensor<double>(Shape{1, 3, 4, 4}, rng);
  auto p = random_conv<double>(3, 2, 1, rng);
  const auto y = conv2d(x, p, 0);
  for (std::int64_t h = 0; h < 4; ++h)
    for (std::int64_t w = 0; w < 4; ++w) {
      std::vector<double> v{x.at(0, 0, h, w), x.at(0, 1, h, w), x.at(0, 2, h, w)};
      const auto ref = dense(p, v);
      for (std::int64_t o = 0; o < 2; ++o) CHECK_THAT(y.at(0, o, h, w), WithinAbs(ref[o], 1e-12));
    }
  auto zero_w = ConvParams<double>::zeros(3, 2, 1);
  zero_w.bias.mutable_data()[0] = 1.5;
  zero_w.bias.mutable_data()[1] = -2.0;
  const auto planes = conv2d(x, zero_w, 0);
  for (std::int64_t h = 0; h < 4; ++h)
    for (std::int64_t w = 0; w < 4; ++w) {
      CHECK(planes.at(0, 0, h, w) == 1.5);
      CHECK(planes.at(0, 1, h, w) == -2.0);
    }
}

TEST_CASE("conv2d matches nested-loop reference", "[nn][conv]") {
  Rng rng(3);
  auto x = random_tensor<double>(Shape{2, 3, 5, 5}, rng);
  auto p = random_conv<double>(3, 4, 3, rng);
  for (std::int64_t pad : {0, 1, 2}) {
    const auto fast = conv2d(x, p, pad);
    const auto ref = naive_conv(x, p, pad);
    REQUIRE(fast.shape() == ref.shape());
    for (std::size_t i = 0; i < ref.data().size(); ++i) CHECK_THAT(fast.data()[i], WithinAbs(ref.data()[i], 1e-12));
  }
}

TEST_CASE("conv2d errors", "[nn][conv]") {
  Tensor<float> x(Shape{1, 3, 2, 2});
  CHECK_THROWS_AS(conv2d(x, ConvParams<float>::zeros(4, 2, 3), 1), ShapeError);
  CHECK_THROWS_AS(conv2d(x, ConvParams<float>::zeros(3, 2, 3), 0), ShapeError);
  CHECK_THROWS(conv2d(x, ConvParams<float>::zeros(3, 2, 3), -1));
}

TEST_CASE("conv2d is linear when bias is zero", "[nn][conv]") {
  Rng rng(4);
  auto x = random_tensor<double>(Shape{1, 2, 6, 5}, rng);
  auto y = random_tensor<double>(Shape{1, 2, 6, 5}, rng);
  auto p = random_conv<double>(2, 3, 3, rng);
  for (auto& b : p.bias.mutable_data()) b = 0.0;
  const double alpha = 0.7, beta = -1.3;
  const auto lhs = conv2d(add(scalar_mul(x, alpha), scalar_mul(y, beta)), p, 1);
  const auto rhs = add(scalar_mul(conv2d(x, p, 1), alpha), scalar_mul(conv2d(y, p, 1), beta));
  for (std::size_t i = 0; i < lhs.data().size(); ++i) CHECK_THAT(lhs.data()[i], WithinAbs(rhs.data()[i], 1e-12));
}

TEST_CASE("3x3 pad 1 and 1x1 pad 0 preserve spatial size", "[nn][conv]") {
  Rng rng(5);
  for (std::int64_t h = 1; h <= 6; ++h)
    for (std::int64_t w = 1; w <= 6; ++w) {
      Tensor<float> x(Shape{1, 2, h, w});
      CHECK(conv2d(x, random_conv<float>(2, 3, 3, rng), 1).shape() == Shape{1, 3, h, w});
      CHECK(conv2d(x, random_conv<float>(2, 3, 1, rng), 0).shape() == Shape{1, 3, h, w});
    }
}

TEST_CASE("conv2d is independent of worker count", "[nn][conv][parallel]") {
  Rng rng(6);
  auto x = random_tensor<float>(Shape{2, 8, 9, 9}, rng);
  auto p = random_conv<float>(8, 8, 3, rng);
  auto run = [&](int workers) {
    worker_override() = workers;
    x.set_requires_grad(true);
    x.zero_grad();
    p.weight.set_requires_grad(true);
    p.weight.zero_grad();
    Tape<float> tape;
    Tensor<float> y;
    {
      Tape<float>::Scope scope(tape);
      y = conv2d(x, p, 1);
      auto loss = project(y, 99);
      tape.backward(loss);
    }
    worker_override() = 0;
    return std::tuple{std::vector<float>(y.data().begin(), y.data().end()),
                      std::vector<float>(x.grad().begin(), x.grad().end()),
                      std::vector<float>(p.weight.grad().begin(), p.weight.grad().end())};
  };
  CHECK(run(1) == run(3));
}

TEST_CASE("relu and sigmoid values", "[nn][activation]") {
  Tensor<float> x(Shape{1, 1, 1, 3}, std::vector<float>{-3.f, 0.f, 3.f});
  const auto r = relu(x);
  CHECK(r.data()[0] == 0.f);
  CHECK(r.data()[1] == 0.f);
  CHECK(r.data()[2] == 3.f);
  CHECK(sigmoid(x).data()[1] == 0.5f);
  Rng rng(7);
  const auto squashed = sigmoid(random_tensor<float>(Shape{1, 4, 5, 5}, rng, 5.0));
  for (float v : squashed.data()) {
    CHECK(v > 0.f);
    CHECK(v < 1.f);
  }
}

TEST_CASE("relu subgradient at zero is zero", "[nn][activation]") {
  Tensor<double> x(Shape{1, 1, 1, 3}, std::vector<double>{-1.0, 0.0, 2.0});
  const auto g = analytic_grads<double>([&] { return sum(relu(x)); }, {x})[0];
  CHECK(g == std::vector<double>{0.0, 0.0, 1.0});
}

TEST_CASE("sigmoid gradient matches s(1-s) and finite differences", "[nn][activation]") {
  Rng rng(8);
  auto x = random_tensor<double>(Shape{1, 2, 3, 3}, rng, 2.0);
  const auto g = analytic_grads<double>([&] { return sum(sigmoid(x)); }, {x})[0];
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double s = sigmoid_ref(x.data()[i]);
    CHECK_THAT(g[i], WithinAbs(s * (1 - s), 1e-14));
  }
  CHECK(gradcheck<double>([&] { return sum(sigmoid(x)); }, {x}, 1e-4) < 1e-6);
}

TEST_CASE("global average pool", "[nn][pool]") {
  Tensor<double> x(Shape{1, 1, 2, 2}, std::vector<double>{1, 2, 3, 4});
  CHECK(global_avg_pool(x).item() == 2.5);
  CHECK(global_avg_pool(Tensor<float>::full(Shape{1, 1, 3, 5}, 0.375f)).item() == 0.375f);

  Rng rng(9);
  auto r = random_tensor<double>(Shape{2, 8, 5, 7}, rng);
  const auto m = global_avg_pool(r);
  REQUIRE(m.shape() == Shape{2, 8, 1, 1});
  for (std::int64_t n = 0; n < 2; ++n)
    for (std::int64_t c = 0; c < 8; ++c) {
      double s = 0.0;
      for (std::int64_t h = 0; h < 5; ++h)
        for (std::int64_t w = 0; w < 7; ++w) s += r.at(n, c, h, w);
      CHECK(m.at(n, c, 0, 0) == s / 35.0);
    }
}

TEST_CASE("pixel shuffle ordering", "[nn][shuffle]") {
  Tensor<float> x(Shape{1, 4, 1, 1}, std::vector<float>{1, 2, 3, 4});
  const auto y = pixel_shuffle(x, 2);
  REQUIRE(y.shape() == Shape{1, 1, 2, 2});
  CHECK(std::vector<float>(y.data().begin(), y.data().end()) == std::vector<float>{1, 2, 3, 4});
  Rng rng(10);
  auto r = random_tensor<float>(Shape{2, 3, 2, 3}, rng);
  CHECK(exactly_equal(pixel_shuffle(r, 1), r));
  CHECK_THROWS_AS(pixel_shuffle(Tensor<float>(Shape{1, 3, 2, 2}), 2), ShapeError);
}

TEST_CASE("pixel shuffle x3 matches index formula and inverts", "[nn][shuffle]") {
  Rng rng(11);
  auto x = random_tensor<float>(Shape{1, 9, 2, 2}, rng);
  const auto y = pixel_shuffle(x, 3);
  REQUIRE(y.shape() == Shape{1, 1, 6, 6});
  for (std::int64_t h = 0; h < 2; ++h)
    for (std::int64_t w = 0; w < 2; ++w)
      for (std::int64_t dy = 0; dy < 3; ++dy)
        for (std::int64_t dx = 0; dx < 3; ++dx) CHECK(y.at(0, 0, h * 3 + dy, w * 3 + dx) == x.at(0, dy * 3 + dx, h, w));
  CHECK(exactly_equal(pixel_unshuffle(y, 3), x));

  // Bijection: the multiset of values is preserved.
  auto a = std::vector<float>(x.data().begin(), x.data().end());
  auto b = std::vector<float>(y.data().begin(), y.data().end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  CHECK(a == b);
}

namespace {

template <typename T>
double random_nn_check(Rng& rng, T step) {
  const auto n = 1 + static_cast<std::int64_t>(rng.below(2));
  const auto c = 1 + static_cast<std::int64_t>(rng.below(3));
  const auto h = 2 + static_cast<std::int64_t>(rng.below(4));
  const auto w = 2 + static_cast<std::int64_t>(rng.below(4));
  const auto oc = 1 + static_cast<std::int64_t>(rng.below(3));
  const auto s = 1 + static_cast<std::int64_t>(rng.below(3));
  const auto k = rng.coin() ? 3 : 1;
  auto x = random_tensor<T>(Shape{n, c, h, w}, rng);
  auto xs = random_tensor<T>(Shape{n, c * s * s, h, w}, rng);
  auto p = random_conv<T>(c, oc, k, rng);
  const std::uint64_t proj = rng.next_u64();
  double worst = 0.0;
  auto check = [&](const std::function<Tensor<T>()>& f, std::vector<Tensor<T>> wrt) {
    worst = std::max(worst, gradcheck<T>(f, wrt, step));
  };
  check([&] { return project(conv2d(x, p, k / 2), proj); }, {x, p.weight, p.bias});
  // Keep away from the kink so central differences stay valid.
  for (auto& v : x.mutable_data())
    if (std::abs(v) < T(3) * step) v += T(6) * step;
  check([&] { return project(relu(x), proj); }, {x});
  check([&] { return project(sigmoid(x), proj); }, {x});
  check([&] { return project(global_avg_pool(x), proj); }, {x});
  check([&] { return project(pixel_shuffle(xs, s), proj); }, {xs});
  check([&] { return project(pixel_unshuffle(pixel_shuffle(xs, s), s), proj); }, {xs});
  return worst;
}

}  // namespace

TEST_CASE("nn backward matches finite differences over random shapes", "[nn][gradcheck]") {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    Rng wide = rng.split(static_cast<std::uint64_t>(trial));
    Rng standard = rng.split(static_cast<std::uint64_t>(trial));
    CHECK(random_nn_check<double>(wide, 1e-4) < 1e-6);
    CHECK(random_nn_check<float>(standard, 1e-2f) < 1e-3);
  }
}
