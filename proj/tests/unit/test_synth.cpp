#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "glpge/errors.hpp"
#include "glpge/evalkit.hpp"
#include "glpge/parallel.hpp"
#include "glpge/synthdoc.hpp"

using namespace glpge;
namespace fs = std::filesystem;

namespace {

double luminance(const ImageBuffer& img, int y, int x) {
  return 0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) + 0.114 * img.at(y, x, 2);
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "glpge_unit_synth" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("rendered pages are light with dark strokes for every seed") {
  std::set<std::vector<float>> distinct;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto img = render_document(seed, 96, 80);
    REQUIRE(img.height == 96);
    REQUIRE(img.width == 80);
    double sum = 0.0;
    double lo = 1.0;
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) {
        const double l = luminance(img, y, x);
        sum += l;
        lo = std::min(lo, l);
      }
    CHECK(sum / (img.height * img.width) > 0.8);
    CHECK(lo < 0.3);
    distinct.insert(img.data);
  }
  CHECK(distinct.size() == 100);
  CHECK(render_document(7, 64, 64) == render_document(7, 64, 64));
  CHECK_THROWS_AS(render_document(1, 63, 128), InvalidArgument);
}

TEST_CASE("every stage is the identity at strength zero") {
  const auto img = render_document(3, 64, 64);
  for (const auto kind : kDegradeOrder) {
    Rng rng(5);
    CHECK(degrade_stage(img, kind, 0.0, rng) == img);
    CHECK(parse_degrade_kind(to_string(kind)) == kind);
  }
  DegradeConfig cfg;
  cfg.intensity = 0.0;
  cfg.seed = 99;
  CHECK(degrade(img, cfg) == img);
  CHECK_THROWS_AS(parse_degrade_kind("moire"), ConfigError);
}

TEST_CASE("stage ranges") {
  ImageBuffer white(64, 64, 3, 1.0F);
  Rng rng(11);
  const auto shadow = degrade_stage(white, DegradeKind::kShadow, 1.0, rng);
  for (float v : shadow.data) {
    CHECK(v <= 1.0F);
    CHECK(v >= 0.4F - 1e-6F);
  }
  ImageBuffer gray(32, 32, 3, 0.5F);
  const auto cast = degrade_stage(gray, DegradeKind::kColorCast, 0.8, rng);
  for (int c = 0; c < 3; ++c) {
    const double g = cast.at(0, 0, c) / 0.5;
    CHECK(g >= 1.0 - 0.25 * 0.8 - 1e-6);
    CHECK(g <= 1.0 + 0.25 * 0.8 + 1e-6);
    CHECK(cast.at(17, 9, c) == cast.at(0, 0, c));
  }
  const auto ripple = degrade_stage(gray, DegradeKind::kWrinkle, 1.0, rng);
  for (float v : ripple.data) CHECK(std::abs(v - 0.5F) <= 0.15F + 1e-6F);
  for (const auto kind : kDegradeOrder) {
    const auto out = degrade_stage(render_document(4, 64, 64), kind, 1.0, rng);
    for (float v : out.data) {
      CHECK(v >= 0.0F);
      CHECK(v <= 1.0F);
    }
  }
}

TEST_CASE("blur keeps the mean") {
  Rng rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    ImageBuffer img(48, 40, 3);
    for (float& v : img.data) v = static_cast<float>(rng.uniform());
    const double sigma = 0.5 + trial * 0.4;
    CHECK(std::abs(mean_value(gaussian_blur(img, sigma)) - mean_value(img)) < 1e-3);
  }
}

TEST_CASE("degradation is deterministic and grows with intensity") {
  const auto clean = render_document(12, 96, 96);
  DegradeConfig cfg;
  cfg.seed = 12;
  CHECK(degrade(clean, cfg) == degrade(clean, cfg));
  std::array<std::vector<double>, 3> scores;
  const std::array<double, 3> levels = {0.2, 0.5, 0.8};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto page = render_document(seed, 96, 96);
    for (std::size_t i = 0; i < levels.size(); ++i) {
      DegradeConfig c;
      c.seed = seed;
      c.intensity = levels[i];
      scores[i].push_back(ssim(degrade(page, c), page));
    }
  }
  const double m0 = median(scores[0]);
  const double m1 = median(scores[1]);
  const double m2 = median(scores[2]);
  MESSAGE("median ssim " << m0 << " " << m1 << " " << m2);
  CHECK(m0 > m1);
  CHECK(m1 > m2);
}

TEST_CASE("build_dataset writes pairs and a manifest") {
  SynthOptions opts;
  opts.count = 4;
  opts.size = 64;
  opts.intensity_min = 0.3;
  opts.intensity_max = 0.6;
  opts.seed = 8;
  const auto dir = scratch("four");
  const auto m = build_dataset(opts, dir);
  REQUIRE(m.rows.size() == 4);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".png") ++files;
  CHECK(files == 8);
  const auto loaded = DatasetManifest::load(dir / "manifest.csv");
  REQUIRE(loaded.rows.size() == 4);
  for (const auto& r : loaded.rows) {
    CHECK(r.intensity >= 0.3);
    CHECK(r.intensity <= 0.6);
    const auto a = load_image(loaded.resolve(r.degraded));
    const auto b = load_image(loaded.resolve(r.clean));
    CHECK(a.same_extent(b));
    CHECK(a.width == r.width);
    CHECK(a.height == r.height);
  }
  const auto again = scratch("again");
  (void)build_dataset(opts, again);
  for (const auto& r : m.rows) {
    CHECK(slurp(dir / r.degraded) == slurp(again / r.degraded));
    CHECK(slurp(dir / r.clean) == slurp(again / r.clean));
  }
  CHECK(slurp(dir / "manifest.csv") == slurp(again / "manifest.csv"));
  opts.count = 0;
  CHECK_THROWS_AS(build_dataset(opts, dir), ConfigError);
}

TEST_CASE("samples do not depend on the worker count") {
  SynthOptions opts;
  opts.count = 3;
  opts.size = 64;
  opts.seed = 4;
  setenv("GLPGE_THREADS", "1", 1);
  const auto serial = scratch("serial");
  (void)build_dataset(opts, serial);
  setenv("GLPGE_THREADS", "3", 1);
  const auto par = scratch("parallel");
  (void)build_dataset(opts, par);
  unsetenv("GLPGE_THREADS");
  for (const auto& e : fs::directory_iterator(serial)) CHECK(slurp(e.path()) == slurp(par / e.path().filename()));
  const auto [d, c] = synth_pair(opts, 2);
  const std::string bytes = slurp(serial / "degraded_00002.png");
  CHECK(encode_png(d) == std::vector<unsigned char>(bytes.begin(), bytes.end()));
}

TEST_CASE("manifest errors") {
  const auto dir = scratch("bad");
  {
    std::ofstream out(dir / "m.csv");
    out << "a,b\n";
  }
  CHECK_THROWS_AS(DatasetManifest::load(dir / "m.csv"), ParseError);
  {
    std::ofstream out(dir / "m.csv");
    out << kManifestHeader << "\nx.png,y.png,1,zz,4,4\n";
  }
  CHECK_THROWS_AS(DatasetManifest::load(dir / "m.csv"), ParseError);
  CHECK_THROWS_AS(DatasetManifest::load(dir / "none.csv"), NotFound);
}
