#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "glpge/diff/layers.hpp"
#include "glpge/errors.hpp"
#include "glpge/evalkit.hpp"
#include "json.hpp"

using namespace glpge;
namespace fs = std::filesystem;

namespace {

ImageBuffer random_image(int h, int w, int c, Rng& rng) {
  ImageBuffer img(h, w, c);
  for (float& v : img.data) v = static_cast<float>(rng.uniform());
  return img;
}

DatasetManifest small_set(const std::string& name, int n) {
  const fs::path dir = fs::temp_directory_path() / "glpge_unit_eval" / name;
  fs::remove_all(dir);
  SynthOptions opts;
  opts.count = n;
  opts.size = 64;
  opts.seed = 31;
  return build_dataset(opts, dir);
}

}  // namespace

TEST_CASE("psnr") {
  ImageBuffer a(8, 8, 1, 0.5F);
  ImageBuffer b(8, 8, 1, 0.5F);
  CHECK(psnr(a, b) == kPsnrCap);
  // Alternating +-0.1 gives MSE 0.01 exactly in double.
  for (std::size_t i = 0; i < b.size(); ++i) b.data[i] = i % 2 == 0 ? 0.6F : 0.4F;
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-6));
  CHECK(psnr(a, b) == psnr(b, a));
  CHECK_THROWS_AS(psnr(a, ImageBuffer(8, 9, 1)), InvalidShape);
}

TEST_CASE("image ssim") {
  Rng rng(3);
  const auto a = random_image(24, 20, 3, rng);
  CHECK(ssim(a, a) == 1.0);
  const auto b = random_image(24, 20, 3, rng);
  CHECK(ssim(a, b) < 0.2);
  CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-12));
}

TEST_CASE("evaluate_pairs") {
  const auto m = small_set("eval", 4);
  const Enhancer identity = [](const ImageBuffer& x) { return x; };
  const auto report = evaluate_pairs(m, identity);
  REQUIRE(report.rows.size() == 4);
  double direct = 0.0;
  for (const auto& r : m.rows) direct += ssim(load_image(m.resolve(r.degraded)), load_image(m.resolve(r.clean)));
  CHECK(report.mean_ssim() == doctest::Approx(direct / 4).epsilon(1e-12));

  DatasetManifest same = m;
  for (auto& r : same.rows) r.degraded = r.clean;
  const auto perfect = evaluate_pairs(same, identity);
  CHECK(perfect.mean_ssim() == 1.0);
  CHECK(perfect.mean_psnr() == kPsnrCap);

  DatasetManifest reversed = m;
  std::reverse(reversed.rows.begin(), reversed.rows.end());
  const auto rev = evaluate_pairs(reversed, identity, {false, false});
  CHECK(rev.median_ssim() == report.median_ssim());
  CHECK(rev.mean_psnr() == doctest::Approx(report.mean_psnr()).epsilon(1e-14));

  const auto j = nlohmann::json::parse(report.to_json());
  CHECK(j["rows"].size() == 4);
  CHECK(j["summary"]["count"] == 4);
  const std::string csv = report.to_csv();
  CHECK(csv.rfind("name,ssim,psnr\n", 0) == 0);
  CHECK(csv.find("\nstatistic,ssim,psnr\nmean,") != std::string::npos);

  DatasetManifest broken = m;
  broken.rows[2].degraded = "missing.png";
  try {
    (void)evaluate_pairs(broken, identity);
    FAIL("expected an io error");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
}

TEST_CASE("spectral profile") {
  const auto flat = spectral_profile(ImageBuffer(32, 32, 3, 0.7F));
  CHECK(flat.dc_fraction == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(flat.high_freq == doctest::Approx(0.0));
  CHECK(flat.horiz_band == doctest::Approx(0.0));

  ImageBuffer stripes(32, 32, 1);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) stripes.at(y, x, 0) = (x % 4) < 2 ? 1.0F : 0.0F;
  const auto s = spectral_profile(stripes);
  CHECK(s.horiz_band > s.vert_band);
  CHECK(s.horiz_band > 0.1);

  Rng rng(4);
  const auto noise = random_image(30, 22, 1, rng);
  const auto p = spectral_profile(noise);
  double spatial = 0.0;
  for (float v : noise.data) spatial += static_cast<double>(v) * v;
  CHECK(p.total_energy == doctest::Approx(spatial * noise.size()).epsilon(1e-6));
  CHECK(p.dc_fraction + p.high_freq <= 1.0 + 1e-12);
  CHECK(p.horiz_band + p.vert_band <= p.high_freq + 1e-12);
}

TEST_CASE("flop accounting") {
  diff::ParamStore<float> store;
  Rng rng(1);
  const auto conv = diff::Conv2d<float>::make(store, "c", "g", 3, 16, 3, 1, 1, rng);
  const auto one = count_flops([&] { (void)conv(diff::Tensor<float>::zeros({1, 3, 64, 64})); });
  CHECK(one.total == 3538944);

  const DblrnetConfig cfg = DblrnetConfig::micro();
  const Dblrnet<float> model(cfg);
  const auto small = count_flops(model, 64, 64);
  const auto big = count_flops(model, 128, 128);
  CHECK(big.total == 4 * small.total);
  std::int64_t sum = 0;
  for (const auto& [k, v] : big.scopes) sum += v;
  CHECK(sum == big.total);

  GppnetConfig gcfg;
  gcfg.widths = {4, 4, 8, 8, 8};
  gcfg.input_side = 64;
  const Gppnet<float> gpp(gcfg);
  const auto g1 = count_flops(gpp, 64, 64);
  const auto g2 = count_flops(gpp, 256, 128);
  CHECK(g1.scope("backbone") == g2.scope("backbone"));
  CHECK(g2.scope("fusion") > g1.scope("fusion"));
  const auto both = count_flops(gpp, model, 64, 64);
  CHECK(both.total == g1.total + small.total);
  CHECK(nlohmann::json::parse(both.to_json())["total"] == both.total);
}
