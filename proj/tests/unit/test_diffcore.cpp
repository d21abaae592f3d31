#include <cmath>

#include "doctest.h"
#include "glpge/diff/adam.hpp"
#include "glpge/diff/gradcheck.hpp"
#include "glpge/diff/layers.hpp"
#include "glpge/diff/ops.hpp"
#include "glpge/errors.hpp"
#include "../support/op_table.hpp"
#include "../support/oracles.hpp"

using namespace glpge;
using namespace glpge::diff;

namespace {

template <typename T>
std::vector<double> as_double(const Tensor<T>& t) {
  return {t.data().begin(), t.data().end()};
}

}  // namespace

TEST_CASE("conv2d identity and averaging kernels") {
  Rng rng(1);
  auto x = oracle::random_tensor<float>({1, 3, 5, 5}, rng);
  auto w = Tensor<float>::zeros({3, 3, 1, 1});
  for (int c = 0; c < 3; ++c) w.mutable_data()[c * 3 + c] = 1.0F;
  auto y = conv2d(x, w, Tensor<float>::zeros({1, 3, 1, 1}), 1, 0);
  CHECK(y.shape() == x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) CHECK(y.data()[i] == x.data()[i]);

  auto cst = Tensor<double>::full({1, 1, 6, 6}, 0.37);
  auto avg = Tensor<double>::full({1, 1, 3, 3}, 1.0 / 9.0);
  auto z = conv2d(cst, avg, Tensor<double>(), 1, 1);
  for (int yy = 1; yy < 5; ++yy)
    for (int xx = 1; xx < 5; ++xx) CHECK(z.at(0, 0, yy, xx) == doctest::Approx(0.37).epsilon(1e-12));
}

TEST_CASE("conv2d matches the nested-loop oracle") {
  Rng rng(7);
  for (int stride : {1, 2})
    for (int pad : {0, 1, 2}) {
      auto x = oracle::random_tensor<double>({2, 3, 7, 6}, rng, -1, 1);
      auto w = oracle::random_tensor<double>({2, 3, 3, 3}, rng, -1, 1);
      auto b = oracle::random_tensor<double>({1, 2, 1, 1}, rng, -1, 1);
      Shape os;
      const auto ref = oracle::conv2d(as_double(x), x.shape(), as_double(w), w.shape(), as_double(b), stride, pad, &os);
      auto y = conv2d(x, w, b, stride, pad);
      REQUIRE(y.shape() == os);
      for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(y.data()[i] - ref[i]) < 1e-12);
    }
  auto xf = oracle::random_tensor<float>({1, 3, 4, 4}, rng);
  auto wf = oracle::random_tensor<float>({2, 3, 3, 3}, rng, -1, 1);
  Shape os;
  const auto ref = oracle::conv2d(as_double(xf), xf.shape(), as_double(wf), wf.shape(), {}, 1, 1, &os);
  auto yf = conv2d(xf, wf, Tensor<float>(), 1, 1);
  for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(yf.data()[i] - ref[i]) < 1e-6);
}

TEST_CASE("conv2d rejects mismatched shapes") {
  auto x = Tensor<float>::zeros({1, 3, 4, 4});
  CHECK_THROWS_AS(conv2d(x, Tensor<float>::zeros({2, 4, 3, 3}), Tensor<float>(), 1, 1), InvalidShape);
  CHECK_THROWS_AS(conv2d(x, Tensor<float>::zeros({2, 3, 3, 3}), Tensor<float>(), 0, 1), InvalidArgument);
}

TEST_CASE("elementwise and structural examples") {
  auto x = Tensor<double>::full({1, 1, 1, 1}, -1.0, true);
  auto y = relu(x);
  CHECK(y.item() == 0.0);
  y.backward();
  CHECK(x.grad()[0] == 0.0);

  auto c = Tensor<float>::full({1, 2, 3, 4}, 0.625F);
  auto g = global_avg_pool(c);
  for (float v : g.data()) CHECK(v == 0.625F);

  Rng rng(3);
  auto a = oracle::random_tensor<float>({1, 3, 2, 2}, rng);
  auto b = oracle::random_tensor<float>({1, 6, 2, 2}, rng);
  auto cat = concat_channels<float>({a, b});
  CHECK(cat.shape() == Shape{1, 9, 2, 2});
  for (std::size_t i = 0; i < a.numel(); ++i) CHECK(cat.data()[i] == a.data()[i]);
  for (std::size_t i = 0; i < b.numel(); ++i) CHECK(cat.data()[a.numel() + i] == b.data()[i]);
  CHECK_THROWS_AS(concat_channels<float>({a, Tensor<float>::zeros({1, 1, 3, 2})}), InvalidShape);
}

TEST_CASE("pixel unshuffle ordering and inverse") {
  auto x = Tensor<float>::from({1, 1, 2, 2}, {1, 2, 3, 4});
  auto u = pixel_unshuffle(x, 2);
  CHECK(u.shape() == Shape{1, 4, 1, 1});
  CHECK(u.data()[0] == 1);
  CHECK(u.data()[1] == 2);
  CHECK(u.data()[2] == 3);
  CHECK(u.data()[3] == 4);
  Rng rng(5);
  for (int r : {1, 2, 4}) {
    auto t = oracle::random_tensor<float>({2, 3, 8, 16}, rng);
    auto back = pixel_shuffle(pixel_unshuffle(t, r), r);
    CHECK(back.shape() == t.shape());
    CHECK(std::equal(back.data().begin(), back.data().end(), t.data().begin()));
  }
  CHECK_THROWS_AS(pixel_unshuffle(Tensor<float>::zeros({1, 1, 3, 4}), 2), InvalidShape);
  CHECK_THROWS_AS(pixel_shuffle(Tensor<float>::zeros({1, 3, 2, 2}), 2), InvalidShape);
}

TEST_CASE("bilinear upsampling") {
  Rng rng(9);
  auto t = oracle::random_tensor<float>({1, 2, 3, 5}, rng);
  auto same = upsample_bilinear(t, 1);
  CHECK(std::equal(same.data().begin(), same.data().end(), t.data().begin()));

  auto cst = Tensor<float>::full({1, 1, 3, 3}, 0.3F);
  const auto big = upsample_bilinear(cst, 4);
  CHECK(big.shape() == Shape{1, 1, 12, 12});
  for (float v : big.data()) CHECK(v == 0.3F);

  auto m = Tensor<double>::from({1, 1, 2, 2}, {0, 1, 2, 3});
  auto up = upsample_bilinear(m, 2);
  const std::vector<double> src{0, 1, 2, 3};
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) CHECK(std::abs(up.at(0, 0, y, x) - oracle::bilinear_at(src, 2, 2, 4, 4, y, x)) < 1e-6);
  // Hand values: row 0 is 0, 0.25, 0.75, 1; row 1 is 0.5, 0.75, 1.25, 1.5.
  CHECK(up.at(0, 0, 0, 1) == doctest::Approx(0.25));
  CHECK(up.at(0, 0, 1, 0) == doctest::Approx(0.5));
  CHECK(up.at(0, 0, 1, 2) == doctest::Approx(1.25));
  CHECK_THROWS_AS(upsample_bilinear(m, 0), InvalidArgument);
}

TEST_CASE("backward basics") {
  auto x = oracle::random_tensor<double>({1, 2, 3, 4}, *std::make_unique<Rng>(2));
  x.set_requires_grad(true);
  mean(x).backward();
  for (double g : x.grad()) CHECK(g == doctest::Approx(1.0 / 24));

  auto s = Tensor<double>::full({1, 1, 1, 1}, 3.0, true);
  sum(mul(s, s)).backward();
  CHECK(s.grad()[0] == 6.0);

  auto v = Tensor<double>::full({1, 1, 2, 2}, 2.0, true);
  CHECK_THROWS_AS(scale(v, 2.0).backward(), InvalidArgument);

  // Two consumers: gradients of both branches add up.
  auto u = Tensor<double>::full({1, 1, 2, 2}, 1.5, true);
  add(sum(scale(u, 2.0)), sum(square(u))).backward();
  for (double g : u.grad()) CHECK(g == doctest::Approx(2.0 + 3.0));
}

TEST_CASE("no gradient work without requires_grad inputs") {
  auto a = Tensor<float>::full({1, 1, 2, 2}, 1.0F);
  auto y = relu(a);
  CHECK_FALSE(y.requires_grad());
  CHECK(y.node()->inputs.empty());
}

TEST_CASE("grad_check on conv-relu-mean and a linear graph") {
  Rng rng(11);
  auto x = oracle::random_tensor<double>({1, 3, 6, 6}, rng, -1, 1);
  auto w = oracle::random_tensor<double>({4, 3, 3, 3}, rng, -0.5, 0.5);
  auto b = oracle::random_tensor<double>({1, 4, 1, 1}, rng, -0.1, 0.1);
  auto res = grad_check([&] { return mean(relu(conv2d(x, w, b, 1, 1))); }, {x, w, b});
  CHECK(res.probes > 0);
  CHECK(res.max_rel_error < 1e-3);

  auto lw = oracle::random_tensor<double>({3, 12, 1, 1}, rng, -1, 1);
  auto lx = oracle::random_tensor<double>({2, 3, 2, 2}, rng, -1, 1);
  auto lin = grad_check([&] { return sum(linear(lx, lw, Tensor<double>())); }, {lx, lw});
  CHECK(lin.max_rel_error < 1e-6);
}

TEST_CASE("grad_check over the op table") {
  for (const auto& entry : optable::entries()) {
    CAPTURE(entry.name);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      Rng rng = Rng(seed).stream(std::hash<std::string>{}(entry.name));
      auto c = entry.make(rng);
      const auto res = grad_check(c.loss, c.inputs, {1e-3, 24, seed});
      CHECK(res.probes > 0);
      CHECK(res.max_rel_error < 1e-3);
    }
  }
}

TEST_CASE("adam examples") {
  AdamState st;
  std::vector<float> p{0.5F, -0.25F};
  std::vector<float> zero{0.0F, 0.0F};
  adam_step(std::span<float>(p), std::span<const float>(zero), st);
  CHECK(p[0] == 0.5F);
  CHECK(p[1] == -0.25F);

  AdamState one;
  std::vector<double> q{1.0};
  std::vector<double> g{1.0};
  adam_step(std::span<double>(q), std::span<const double>(g), one);
  // m_hat = v_hat = 1 -> step lr / (1 + eps).
  CHECK(q[0] == doctest::Approx(1.0 - 1e-4 / (1.0 + 1e-8)).epsilon(1e-14));
  const double m1 = one.m[0];
  adam_step(std::span<double>(q), std::span<const double>(g), one);
  CHECK(one.t == 2);
  CHECK(one.m[0] == doctest::Approx(0.9 * m1 + 0.1 * 1.0).epsilon(1e-15));

  AdamState bad;
  std::vector<double> shortg{1.0, 2.0};
  CHECK_THROWS_AS(adam_step(std::span<double>(q), std::span<const double>(shortg), bad), InvalidShape);
}

TEST_CASE("param store init and hash") {
  ParamStore<float> a;
  ParamStore<float> b;
  Rng r1(4);
  Rng r2(4);
  auto ca = Conv2d<float>::make(a, "c", "g", 3, 8, 3, 1, 1, r1);
  auto cb = Conv2d<float>::make(b, "c", "g", 3, 8, 3, 1, 1, r2);
  CHECK(a.hash() == b.hash());
  const double bound = std::sqrt(6.0 / 27.0);
  for (float v : ca.weight.data()) CHECK(std::abs(v) <= bound);
  for (float v : ca.bias.data()) CHECK(v == 0.0F);
  CHECK(a.count() == 3 * 8 * 9 + 8);
  cb.weight.mutable_data()[0] += 1.0F;
  CHECK(a.hash() != b.hash());
  CHECK_THROWS_AS(Conv2d<float>::make(a, "c", "g", 3, 8, 3, 1, 1, r1), ConfigError);
}

TEST_CASE("meta mode tallies without allocating") {
  MetaModeGuard meta;
  FlopTally tally;
  auto x = Tensor<float>::zeros({1, 3, 64, 64});
  auto w = Tensor<float>::zeros({16, 3, 3, 3});
  auto y = conv2d(x, w, Tensor<float>(), 1, 1);
  CHECK(y.is_meta());
  CHECK(tally.total() == 3538944);
}
