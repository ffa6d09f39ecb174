// Copyright 2026 The CSFM Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <memory>

#include "support.hpp"

using namespace csfm;
using namespace csfm::testing;
using Catch::Matchers::WithinAbs;

TEST_CASE("tensor shape invariants", "[tensor]") {
  Tensor<float> t(Shape{2, 3, 4, 5});
  CHECK(t.data().size() == 120);
  CHECK_FALSE(t.has_grad());
  t.mutable_grad();
  CHECK(t.grad().size() == t.data().size());
  CHECK_THROWS_AS(Tensor<float>(Shape{1, 1, 2, 2}, std::vector<float>{1, 2, 3}), ShapeError);
}

TEST_CASE("backward of sum is all ones", "[tensor][backward]") {
  Tensor<double> x(Shape{1, 1, 2, 2}, std::vector<double>{1, -2, 3, 4});
  const auto g = analytic_grads<double>([&] { return sum(x); }, {x});
  CHECK(g[0] == std::vector<double>{1, 1, 1, 1});
}

TEST_CASE("backward of half sum of squares is x", "[tensor][backward]") {
  Rng rng(3);
  auto x = random_tensor<double>(Shape{2, 3, 2, 2}, rng);
  const auto g = analytic_grads<double>([&] { return scalar_mul(sum(mul(x, x)), 0.5); }, {x});
  for (std::size_t i = 0; i < g[0].size(); ++i) CHECK(g[0][i] == x.data()[i]);
}

TEST_CASE("backward rejects non-scalar loss and tolerates an empty tape", "[tensor][backward]") {
  Tape<float> tape;
  Tensor<float> not_scalar(Shape{1, 1, 2, 1});
  CHECK_THROWS_AS(tape.backward(not_scalar), ShapeError);
  auto loss = Tensor<float>::scalar(1.f);
  CHECK_NOTHROW(tape.backward(loss));
  CHECK_NOTHROW(backward(loss));
}

TEST_CASE("two-layer random net L1 gradient matches finite differences", "[tensor][gradcheck]") {
  Rng rng(11);
  auto x = random_tensor<double>(Shape{1, 2, 5, 5}, rng);
  auto y = random_tensor<double>(Shape{1, 2, 5, 5}, rng);
  auto c1 = random_conv<double>(2, 4, 3, rng);
  auto c2 = random_conv<double>(4, 2, 3, rng);
  auto f = [&] { return l1_loss(conv2d(relu(conv2d(x, c1, 1)), c2, 1), y); };
  CHECK(gradcheck<double>(f, {x, c1.weight, c1.bias, c2.weight, c2.bias}, 1e-4) < 1e-4);
}

TEST_CASE("finite_diff_grad basics", "[tensor][finite-diff]") {
  Rng rng(5);
  auto x = random_tensor<double>(Shape{1, 2, 3, 1}, rng);
  const std::function<double(const Tensor<double>&)> total = [](const Tensor<double>& t) { return sum(t).item(); };
  const auto ones = finite_diff_grad(total, x, 1e-3);
  for (double g : ones.data()) CHECK_THAT(g, WithinAbs(1.0, 1e-9));

  Tensor<double> v(Shape{1, 1, 1, 2}, std::vector<double>{1, 2});
  const double step = 1e-3;
  const std::function<double(const Tensor<double>&)> half_sq = [](const Tensor<double>& t) {
    return 0.5 * sum(mul(t, t)).item();
  };
  const auto g = finite_diff_grad(half_sq, v, step);
  CHECK_THAT(g.data()[0], WithinAbs(1.0, step * step));
  CHECK_THAT(g.data()[1], WithinAbs(2.0, step * step));
  // Inputs restored bitwise.
  CHECK(v.data()[0] == 1.0);
  CHECK(v.data()[1] == 2.0);

  const std::function<double(const Tensor<double>&)> blows_up = [](const Tensor<double>& t) {
    return t.data()[1] > 2.0 ? std::numeric_limits<double>::infinity() : 0.0;
  };
  try {
    finite_diff_grad(blows_up, v, step);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("index 1") != std::string::npos);
  }
  CHECK_THROWS(finite_diff_grad(total, x, 0.0));
}

TEST_CASE("elementwise identities and broadcast", "[tensor][ops]") {
  Rng rng(7);
  auto x = random_tensor<float>(Shape{2, 3, 4, 5}, rng);
  CHECK(exactly_equal(add(x, Tensor<float>::zeros(x.shape())), x));
  CHECK(exactly_equal(mul(x, Tensor<float>::full(Shape{2, 3, 1, 1}, 1.f)), x));
  CHECK(exactly_equal(mul(x, Tensor<float>::full(Shape{2, 1, 4, 5}, 1.f)), x));

  auto cb = random_tensor<float>(Shape{2, 3, 1, 1}, rng);
  auto sb = random_tensor<float>(Shape{2, 1, 4, 5}, rng);
  const auto mc = mul(x, cb);
  const auto ms = mul(x, sb);
  const auto ac = add(x, cb);
  for (std::int64_t n = 0; n < 2; ++n)
    for (std::int64_t c = 0; c < 3; ++c)
      for (std::int64_t h = 0; h < 4; ++h)
        for (std::int64_t w = 0; w < 5; ++w) {
          CHECK(mc.at(n, c, h, w) == x.at(n, c, h, w) * cb.at(n, c, 0, 0));
          CHECK(ms.at(n, c, h, w) == x.at(n, c, h, w) * sb.at(n, 0, h, w));
          CHECK(ac.at(n, c, h, w) == x.at(n, c, h, w) + cb.at(n, c, 0, 0));
        }
}

TEST_CASE("shape errors list both shapes", "[tensor][ops]") {
  Tensor<float> a(Shape{1, 2, 3, 3}), b(Shape{1, 2, 2, 3});
  try {
    add(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find(a.shape().str()) != std::string::npos);
    CHECK(msg.find(b.shape().str()) != std::string::npos);
  }
  CHECK_THROWS_AS(mul(a, b), ShapeError);
  CHECK_THROWS_AS(concat_channels(a, b), ShapeError);
}

TEST_CASE("concat ordering matches index oracle", "[tensor][ops]") {
  Rng rng(9);
  auto a = random_tensor<float>(Shape{1, 2, 2, 2}, rng);
  auto b = random_tensor<float>(Shape{1, 3, 2, 2}, rng);
  const auto c = concat_channels(a, b);
  REQUIRE(c.shape() == Shape{1, 5, 2, 2});
  for (std::int64_t ch = 0; ch < 5; ++ch)
    for (std::int64_t h = 0; h < 2; ++h)
      for (std::int64_t w = 0; w < 2; ++w)
        CHECK(c.at(0, ch, h, w) == (ch < 2 ? a.at(0, ch, h, w) : b.at(0, ch - 2, h, w)));
}

TEST_CASE("concat then split is the identity", "[tensor][ops]") {
  Rng rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const auto n = 1 + static_cast<std::int64_t>(rng.below(3));
    const auto ca = 1 + static_cast<std::int64_t>(rng.below(4));
    const auto cb = 1 + static_cast<std::int64_t>(rng.below(4));
    const auto h = 1 + static_cast<std::int64_t>(rng.below(5));
    const auto w = 1 + static_cast<std::int64_t>(rng.below(5));
    auto a = random_tensor<float>(Shape{n, ca, h, w}, rng);
    auto b = random_tensor<float>(Shape{n, cb, h, w}, rng);
    const auto [x, y] = split_channels(concat_channels(a, b), ca);
    CHECK(exactly_equal(x, a));
    CHECK(exactly_equal(y, b));
  }
}

TEST_CASE("gradient accumulates over fan-out", "[tensor][backward]") {
  Rng rng(17);
  auto x = random_tensor<double>(Shape{1, 2, 3, 3}, rng);
  const auto single = analytic_grads<double>([&] { return project(x, 1); }, {x})[0];
  for (int k = 2; k <= 4; ++k) {
    const auto multi = analytic_grads<double>(
        [&] {
          auto total = project(x, 1);
          for (int i = 1; i < k; ++i) total = add(total, project(x, 1));
          return total;
        },
        {x})[0];
    for (std::size_t i = 0; i < single.size(); ++i) CHECK_THAT(multi[i], WithinAbs(k * single[i], 1e-12));
  }
}

TEST_CASE("cleared tape releases tensors", "[tensor][tape]") {
  std::weak_ptr<detail::TensorNode<float>> watch;
  Tape<float> tape;
  {
    Tape<float>::Scope scope(tape);
    Tensor<float> x(Shape{1, 1, 2, 2}, 1.f);
    x.set_requires_grad(true);
    auto y = mul(x, x);
    watch = y.node();
  }
  CHECK(tape.size() > 0);
  CHECK_FALSE(watch.expired());
  tape.clear();
  CHECK(tape.empty());
  CHECK(watch.expired());
}

namespace {

template <typename T>
double random_elementwise_check(Rng& rng, T step) {
  const auto n = 1 + static_cast<std::int64_t>(rng.below(2));
  const auto c = 1 + static_cast<std::int64_t>(rng.below(3));
  const auto h = 1 + static_cast<std::int64_t>(rng.below(4));
  const auto w = 1 + static_cast<std::int64_t>(rng.below(4));
  const Shape s{n, c, h, w};
  auto a = random_tensor<T>(s, rng);
  auto b = random_tensor<T>(s, rng);
  auto cb = random_tensor<T>(Shape{n, c, 1, 1}, rng);
  auto sb = random_tensor<T>(Shape{n, 1, h, w}, rng);
  auto extra = random_tensor<T>(Shape{n, 1 + static_cast<std::int64_t>(rng.below(3)), h, w}, rng);
  const std::uint64_t proj = rng.next_u64();
  double worst = 0.0;
  auto check = [&](const std::function<Tensor<T>()>& f, std::vector<Tensor<T>> wrt) {
    worst = std::max(worst, gradcheck<T>(f, wrt, step));
  };
  check([&] { return project(add(a, b), proj); }, {a, b});
  check([&] { return project(mul(a, b), proj); }, {a, b});
  check([&] { return project(add(a, cb), proj); }, {a, cb});
  check([&] { return project(mul(a, cb), proj); }, {a, cb});
  check([&] { return project(mul(a, sb), proj); }, {a, sb});
  check([&] { return project(scalar_mul(a, T(1.7)), proj); }, {a});
  check([&] { return project(concat_channels(a, extra), proj); }, {a, extra});
  check(
      [&] {
        auto [l, r] = split_channels(concat_channels(a, extra), c);
        return add(project(l, proj), project(r, proj + 1));
      },
      {a, extra});
  return worst;
}

}  // namespace

TEST_CASE("elementwise backward matches finite differences over random shapes", "[tensor][gradcheck]") {
  Rng rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    Rng wide = rng.split(static_cast<std::uint64_t>(trial));
    Rng standard = rng.split(static_cast<std::uint64_t>(trial));
    CHECK(random_elementwise_check<double>(wide, 1e-4) < 1e-6);
    CHECK(random_elementwise_check<float>(standard, 1e-2f) < 1e-3);
  }
}

TEST_CASE("add and mul are independent of worker count", "[tensor][parallel]") {
  Rng rng(31);
  auto a = random_tensor<float>(Shape{3, 8, 9, 7}, rng);
  auto b = random_tensor<float>(Shape{3, 8, 1, 1}, rng);
  worker_override() = 1;
  const auto s1 = add(a, b), m1 = mul(a, b);
  worker_override() = 4;
  const auto s4 = add(a, b), m4 = mul(a, b);
  worker_override() = 0;
  CHECK(bitwise_equal(s1.data(), s4.data()));
  CHECK(bitwise_equal(m1.data(), m4.data()));
}
