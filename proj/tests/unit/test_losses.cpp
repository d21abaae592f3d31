#include "doctest.h"
#include "glpge/dblrnet.hpp"
#include "glpge/diff/gradcheck.hpp"
#include "glpge/diff/ops.hpp"
#include "glpge/errors.hpp"
#include "glpge/losses.hpp"
#include "../support/oracles.hpp"

using namespace glpge;
using diff::Shape;
using diff::Tensor;

TEST_CASE("l1 examples") {
  Rng rng(1);
  auto a = oracle::random_tensor<double>({1, 3, 5, 5}, rng);
  auto b = oracle::random_tensor<double>({1, 3, 5, 5}, rng);
  CHECK(l1_loss(a, a).item() == 0.0);
  CHECK(l1_loss(Tensor<double>::full({1, 1, 4, 4}, 0.2), Tensor<double>::full({1, 1, 4, 4}, 0.5)).item() ==
        doctest::Approx(0.3).epsilon(1e-15));
  CHECK(l1_loss(a, b).item() == l1_loss(b, a).item());
  CHECK_THROWS_AS(l1_loss(a, Tensor<double>::zeros({1, 3, 5, 4})), InvalidShape);
}

TEST_CASE("ssim matches the brute-force window oracle") {
  Rng rng(2);
  for (int i = 0; i < 10; ++i) {
    auto a = oracle::random_tensor<double>({1, 3, 16, 16}, rng);
    auto b = oracle::random_tensor<double>({1, 3, 16, 16}, rng);
    const double ref = oracle::ssim_bruteforce({a.data().begin(), a.data().end()}, {b.data().begin(), b.data().end()},
                                               a.shape());
    CHECK(std::abs(ssim_index(a, b).item() - ref) < 1e-6);
    CHECK(ssim_index(a, b).item() == doctest::Approx(ssim_index(b, a).item()).epsilon(1e-14));
    CHECK(ssim_index(a, a).item() == 1.0);
    CHECK(ssim_loss(a, a).item() == 0.0);
  }
  auto f = oracle::random_tensor<float>({2, 3, 20, 24}, rng);
  CHECK(ssim_index(f, f).item() == 1.0F);
  CHECK_THROWS_AS(ssim_index(Tensor<double>::zeros({1, 1, 10, 20}), Tensor<double>::zeros({1, 1, 10, 20})),
                  InvalidArgument);
}

TEST_CASE("tv and smoothness") {
  auto x = Tensor<double>::from({1, 1, 2, 2}, {0, 1, 0, 1});
  // Width differences are 1 and 1 (mean 1); height differences are 0.
  CHECK(tv_loss(x).item() == 1.0);
  CHECK(tv_loss(Tensor<double>::full({1, 3, 5, 5}, 0.4)).item() == 0.0);
  Rng rng(3);
  auto r = oracle::random_tensor<double>({1, 3, 6, 7}, rng);
  CHECK(tv_loss(diff::scale(r, 3.0)).item() == doctest::Approx(9 * tv_loss(r).item()).epsilon(1e-12));
  auto b = oracle::random_tensor<double>({1, 3, 6, 7}, rng);
  CHECK(smoothness_reg(r, b).item() == doctest::Approx(tv_loss(r).item() + tv_loss(b).item()).epsilon(1e-15));
  CHECK(smoothness_reg(diff::scale(r, 2.0), diff::scale(b, 2.0)).item() ==
        doctest::Approx(4 * smoothness_reg(r, b).item()).epsilon(1e-12));
  CHECK(smoothness_reg(Tensor<double>::full({1, 3, 4, 4}, 1.0), Tensor<double>::full({1, 3, 4, 4}, 0.0)).item() == 0.0);
}

TEST_CASE("least-squares adversarial plug-in values") {
  auto ones = Tensor<double>::full({1, 1, 3, 3}, 1.0);
  auto zeros = Tensor<double>::full({1, 1, 3, 3}, 0.0);
  auto half = Tensor<double>::full({1, 1, 3, 3}, 0.5);
  CHECK(lsgan_d_loss(ones, zeros).item() == 0.0);
  CHECK(lsgan_g_loss(zeros).item() == 1.0);
  CHECK(lsgan_d_loss(half, half).item() == 0.25);
  CHECK(lsgan_g_loss(half).item() == 0.25);

  Discriminator<double> disc(DiscriminatorConfig{});
  CHECK(disc.receptive_field() == 70);
  Rng rng(4);
  auto real = oracle::random_tensor<double>({1, 3, 32, 32}, rng);
  auto fake = oracle::random_tensor<double>({1, 3, 32, 32}, rng);
  real.set_requires_grad(true);
  fake.set_requires_grad(true);
  auto adv = adversarial_losses(disc, real, fake);
  CHECK(disc(real).shape().c == 1);
  CHECK(disc(real).shape().h > 1);
  adv.g_loss.backward();
  CHECK_FALSE(real.has_grad());
  CHECK(fake.has_grad());
}

TEST_CASE("composite loss arithmetic") {
  LossParts<double> parts;
  const double v[5] = {0.1, 0.2, 0.3, 0.4, 0.5};
  for (int i = 0; i < 5; ++i) parts.parts[i] = Tensor<double>::scalar(v[i]);
  const auto c = composite_loss(LossWeights{}, parts);
  CHECK(std::abs(c.total.item() - 0.228) < 1e-12);
  CHECK(c.components[3] == 0.4);
  LossParts<double> zero;
  for (auto& p : zero.parts) p = Tensor<double>::scalar(0.0);
  CHECK(composite_loss(LossWeights{}, zero).total.item() == 0.0);
  LossWeights w2;
  w2.ssim *= 2;
  CHECK(std::abs(composite_loss(w2, parts).total.item() - (0.228 + 0.5 * 0.2)) < 1e-12);
  CHECK(std::abs(composite_value(LossWeights{}, {0.1, 0.2, 0.3, 0.4, 0.5}) - 0.228) < 1e-12);
}

TEST_CASE("losses on a micro dblrnet pass grad check") {
  Rng rng(5);
  Dblrnet<double> model(DblrnetConfig::micro());
  for (auto* head : {&model.alpha_head(), &model.beta_head()}) diff::fan_in_uniform(head->weight, 8, rng);
  auto x = oracle::random_tensor<double>({1, 3, 16, 16}, rng);
  auto t = oracle::random_tensor<double>({1, 3, 16, 16}, rng);
  Discriminator<double> disc(DiscriminatorConfig{{4, 4, 4, 4}, 1});
  auto big = oracle::random_tensor<double>({1, 3, 32, 32}, rng);
  const std::vector<std::pair<const char*, std::function<Tensor<double>()>>> graphs = {
      {"ssim", [&] { return ssim_loss(model.refine(x, 1), t); }},
      {"tv", [&] { return tv_loss(model.refine(x, 1)); }},
      {"reg", [&] {
         CoefficientMaps<double> m;
         (void)model.refine(x, 1, &m);
         return smoothness_reg(m.alpha, m.beta);
       }},
      {"gan", [&] { return lsgan_g_loss(disc(diff::upsample_bilinear(model.refine(x, 1), 2))); }},
  };
  for (const auto& [name, g] : graphs) {
    CAPTURE(name);
    const auto res = diff::grad_check(g, model.store().tensors(), {1e-3, 2, 1});
    CHECK(res.max_rel_error < 1e-3);
  }
}
