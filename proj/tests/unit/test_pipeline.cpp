#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "glpge/errors.hpp"
#include "glpge/pipeline.hpp"
#include "json.hpp"

using namespace glpge;
namespace fs = std::filesystem;

namespace {

PairSet toy_pairs(int n, std::uint64_t seed = 5) {
  SynthOptions so;
  so.count = n;
  so.size = 64;
  so.seed = seed;
  PairSet p;
  for (int i = 0; i < n; ++i) {
    auto [clean, degraded] = synth_pair(so, static_cast<std::size_t>(i));
    p.clean.push_back(std::move(clean));
    p.degraded.push_back(std::move(degraded));
  }
  return p;
}

Config micro(int gpp_steps, int joint_steps) {
  Config c = micro_config();
  c.train.gpp_steps = gpp_steps;
  c.train.joint_steps = joint_steps;
  return c;
}

double mean_ssim(const PairSet& data, const std::function<ImageBuffer(const ImageBuffer&)>& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) s += ssim(f(data.degraded[i]), data.clean[i]);
  return s / static_cast<double>(data.size());
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "glpge_unit_pipeline";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("config dump/parse round trip") {
  for (const Config& c : {Config{}, micro_config()}) {
    const std::string text = dump_config(c);
    CHECK(parse_config(text) == c);
    CHECK(dump_config(parse_config(text)) == text);
  }
  Config c;
  c.train.stage_order = StageOrder::kLocalThenGlobal;
  c.train.refine = RefineMode::kDirect;
  c.train.fusion = FusionStrategy::kAdditive;
  c.inference.mode = InferenceMode::kFast;
  c.synth.stages.shadow = false;
  apply_seed(c, 77);
  CHECK(parse_config(dump_config(c)) == c);
}

TEST_CASE("config rejects unknown keys and bad values") {
  auto j = nlohmann::json::parse(dump_config(Config{}));
  j["train"]["batchsize"] = 3;
  CHECK_THROWS_AS(parse_config(j.dump()), ConfigError);

  j = nlohmann::json::parse(dump_config(Config{}));
  j["extra"] = 1;
  CHECK_THROWS_AS(parse_config(j.dump()), ConfigError);

  j = nlohmann::json::parse(dump_config(Config{}));
  j["train"]["batch"] = 0;
  CHECK_THROWS_AS(parse_config(j.dump()), ConfigError);

  j = nlohmann::json::parse(dump_config(Config{}));
  j["train"]["stage_order"] = "sideways";
  CHECK_THROWS_AS(parse_config(j.dump()), Error);

  CHECK_THROWS_AS(parse_config("{not json"), ParseError);
  CHECK_THROWS_AS(load_config(scratch("missing.json")), IoError);
}

TEST_CASE("reference values of the full-scale protocol") {
  CHECK(kReferenceBatch == 16);
  CHECK(kReferenceCrop == 512);
  CHECK(kReferenceGppSide == 224);
  CHECK(kReferenceLr == 1e-4);
  const Config c;
  CHECK(c.train.adam.lr == 1e-4);
  CHECK(c.train.adam.beta1 == 0.9);
  CHECK(c.train.adam.beta2 == 0.99);
  CHECK(c.gppnet.input_side == 224);
  CHECK(c.train.batch == 4);
  CHECK(c.train.crop == 128);
  CHECK(c.inference.k_fast == 2);
  const auto j = nlohmann::json::parse(dump_config(c));
  CHECK(j["reference"]["batch"] == 16);
  CHECK(j["reference"]["crop"] == 512);
}

TEST_CASE("apply_seed reaches every stochastic component") {
  Config a;
  Config b;
  apply_seed(a, 1);
  apply_seed(b, 2);
  CHECK(a.train.seed != b.train.seed);
  CHECK(a.synth.seed != b.synth.seed);
  CHECK(a.gppnet.seed != b.gppnet.seed);
  CHECK(a.dblrnet.seed != b.dblrnet.seed);
  CHECK(a.discriminator.seed != b.discriminator.seed);
}

TEST_CASE("checkpoint save/load/save is byte identical") {
  const Config cfg = micro_config();
  const Checkpoint ck = Models(cfg, true).checkpoint("joint", 12);
  const fs::path p1 = scratch("a.glpge");
  const fs::path p2 = scratch("b.glpge");
  ck.save(p1);
  const Checkpoint back = Checkpoint::load(p1);
  CHECK(back == ck);
  back.save(p2);
  std::ifstream f1(p1, std::ios::binary);
  std::ifstream f2(p2, std::ios::binary);
  const std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  const std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(s1 == s2);
  CHECK(back.config_hash() == ck.config_hash());

  // Manifest shapes match payload lengths.
  const auto bytes = ck.to_bytes();
  CHECK(std::string(bytes.begin(), bytes.begin() + 8) == "GLPGECKP");
  std::uint64_t len = 0;
  for (int i = 0; i < 8; ++i) len |= static_cast<std::uint64_t>(bytes[12 + i]) << (8 * i);
  const auto manifest = nlohmann::json::parse(std::string(bytes.begin() + 20, bytes.begin() + 20 + len));
  std::uint64_t expect_offset = 0;
  for (const auto& t : manifest["tensors"]) {
    std::uint64_t n = 1;
    for (const auto& d : t["shape"]) n *= d.get<std::uint64_t>();
    CHECK(t["length"].get<std::uint64_t>() == 4 * n);
    CHECK(t["offset"].get<std::uint64_t>() == expect_offset);
    expect_offset += 4 * n;
  }
  CHECK(bytes.size() == 20 + len + expect_offset);
  CHECK(manifest["phase"] == "joint");
  CHECK(manifest["step"] == 12);
}

TEST_CASE("checkpoint errors") {
  const Checkpoint ck = Models(micro_config(), false).checkpoint("gpp", 1);
  auto bytes = ck.to_bytes();

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(Checkpoint::from_bytes(bad_magic), FormatError);

  auto bad_version = bytes;
  bad_version[8] = 9;
  CHECK_THROWS_AS(Checkpoint::from_bytes(bad_version), VersionError);

  auto truncated = bytes;
  truncated.resize(truncated.size() - 3);
  CHECK_THROWS_AS(Checkpoint::from_bytes(truncated), FormatError);

  CHECK_THROWS_AS(Checkpoint::load(scratch("nope.glpge")), IoError);

  Checkpoint wrong = ck;
  wrong.tensors.pop_back();
  CHECK_THROWS_AS(Models::from_checkpoint(wrong), VersionError);
  wrong = ck;
  wrong.tensors[0].shape[0] += 1;
  CHECK_THROWS_AS(Models::from_checkpoint(wrong), VersionError);
}

TEST_CASE("pretrain_gppnet lowers the loss on an overfit set") {
  const PairSet data = toy_pairs(8);
  const TrainResult r = pretrain_gppnet(data, micro(200, 0));
  REQUIRE(r.log.size() == 200);
  CHECK(r.checkpoint.phase == "gpp");
  CHECK(r.checkpoint.step == 200);
  CHECK_FALSE(r.checkpoint.has("dblr."));
  double head = 0.0;
  double tail = 0.0;
  for (int i = 0; i < 10; ++i) {
    head += r.log[static_cast<std::size_t>(i)].total;
    tail += r.log[r.log.size() - 1 - static_cast<std::size_t>(i)].total;
  }
  CHECK(tail < head);
  CHECK(r.log.back().parts[3] == 0.0);
}

TEST_CASE("training is deterministic given the seed") {
  const PairSet data = toy_pairs(4);
  const Config cfg = micro(10, 10);
  const TrainResult a = pretrain_gppnet(data, cfg);
  const TrainResult b = pretrain_gppnet(data, cfg);
  for (std::size_t i = 0; i < 10; ++i) CHECK(a.log[i].total == b.log[i].total);
  CHECK(a.checkpoint == b.checkpoint);
  const TrainResult ja = train_joint(data, cfg, a.checkpoint);
  const TrainResult jb = train_joint(data, cfg, b.checkpoint);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(ja.log[i].total == jb.log[i].total);
    CHECK(ja.log[i].parts == jb.log[i].parts);
  }
  CHECK(ja.checkpoint == jb.checkpoint);

  Config other = cfg;
  other.train.seed = 99;
  const TrainResult c = pretrain_gppnet(data, other);
  CHECK(c.log[0].total != a.log[0].total);
}

TEST_CASE("joint training keeps GPPNet frozen") {
  const PairSet data = toy_pairs(4);
  const Config cfg = micro(5, 50);
  const TrainResult g = pretrain_gppnet(data, cfg);
  const std::uint64_t before = Models::from_checkpoint(g.checkpoint).gpp.store().hash();
  int calls = 0;
  std::int64_t last = 0;
  TrainHooks hooks;
  hooks.after_step = [&](std::int64_t step, const Models& m) {
    CHECK(m.gpp.store().hash() == before);
    CHECK(step > last);
    last = step;
    ++calls;
  };
  const TrainResult j = train_joint(data, cfg, g.checkpoint, hooks);
  CHECK(calls == 50);
  CHECK(j.checkpoint.step == 55);
  CHECK(j.log.front().step == 6);
  const Models m = Models::from_checkpoint(j.checkpoint);
  CHECK(m.gpp.store().hash() == before);
  REQUIRE(m.dblr);
  CHECK(m.dblr->store().hash() != Models(cfg, true).dblr->store().hash());

  for (StageOrder order : {StageOrder::kLocalThenGlobal, StageOrder::kGlobalOnly}) {
    Config c2 = micro(5, 5);
    c2.train.stage_order = order;
    TrainHooks h2;
    h2.after_step = [&](std::int64_t, const Models& mm) { CHECK(mm.gpp.store().hash() == before); };
    (void)train_joint(data, c2, g.checkpoint, h2);
  }
}

TEST_CASE("zero adversarial weight leaves the discriminator untouched") {
  const PairSet data = toy_pairs(4);
  Config cfg = micro(3, 8);
  cfg.train.weights.gan = 0.0;
  const TrainResult g = pretrain_gppnet(data, cfg);
  const std::uint64_t fresh = Models(cfg, true).disc->store().hash();
  TrainHooks hooks;
  hooks.after_step = [&](std::int64_t, const Models& m) { CHECK(m.disc->store().hash() == fresh); };
  const TrainResult j = train_joint(data, cfg, g.checkpoint, hooks);
  CHECK(Models::from_checkpoint(j.checkpoint).disc->store().hash() == fresh);

  cfg.train.weights.gan = 0.05;
  const TrainResult j2 = train_joint(data, cfg, g.checkpoint);
  CHECK(Models::from_checkpoint(j2.checkpoint).disc->store().hash() != fresh);
}

TEST_CASE("joint training improves SSIM on an overfit set") {
  const PairSet data = toy_pairs(8);
  const Config cfg = micro(50, 500);
  const TrainResult g = pretrain_gppnet(data, cfg);
  const TrainResult j = train_joint(data, cfg, g.checkpoint);
  const Models m = Models::from_checkpoint(j.checkpoint);
  const EnhanceOptions o = EnhanceOptions::from(cfg);
  const double before = mean_ssim(data, [](const ImageBuffer& x) { return x; });
  const double after = mean_ssim(data, [&](const ImageBuffer& x) { return enhance_pipeline(m, x, o); });
  MESSAGE("degraded " << before << " enhanced " << after);
  CHECK(after > before);
}

TEST_CASE("train_joint rejects a mismatched GPPNet checkpoint") {
  const PairSet data = toy_pairs(2);
  const TrainResult g = pretrain_gppnet(data, micro(2, 2));
  Config other = micro(2, 2);
  other.gppnet.head_hidden = 8;
  CHECK_THROWS_AS(train_joint(data, other, g.checkpoint), VersionError);
  CHECK_THROWS_AS(finetune(data, micro(2, 2), g.checkpoint), VersionError);
  CHECK_THROWS_AS(pretrain_gppnet(PairSet{}, micro(2, 2)), ConfigError);
}

TEST_CASE("finetune drops the adversarial term and continues the step counter") {
  const PairSet data = toy_pairs(4);
  Config cfg = micro(3, 4);
  cfg.train.finetune_steps = 4;
  const TrainResult g = pretrain_gppnet(data, cfg);
  const TrainResult j = train_joint(data, cfg, g.checkpoint);
  const TrainResult f = finetune(data, cfg, j.checkpoint);
  CHECK(f.checkpoint.phase == "finetune");
  REQUIRE(f.log.size() == 4);
  CHECK(f.log.front().step == j.checkpoint.step + 1);
  CHECK(f.checkpoint.step == j.checkpoint.step + 4);
  const auto w = cfg.train.weights.finetune().values();
  CHECK(w[3] == 0.0);
  for (const StepLog& s : f.log) {
    double total = 0.0;
    for (int i = 0; i < 5; ++i) total += w[static_cast<std::size_t>(i)] * s.parts[static_cast<std::size_t>(i)];
    CHECK(s.total == doctest::Approx(total).epsilon(1e-5));
  }
  // Joint totals include the adversarial term.
  const auto wj = cfg.train.weights.values();
  double total = 0.0;
  for (int i = 0; i < 5; ++i) total += wj[static_cast<std::size_t>(i)] * j.log[0].parts[static_cast<std::size_t>(i)];
  CHECK(j.log[0].total == doctest::Approx(total).epsilon(1e-5));
  CHECK(Models::from_checkpoint(f.checkpoint).gpp.store().hash() ==
        Models::from_checkpoint(g.checkpoint).gpp.store().hash());
}

TEST_CASE("loss log layout") {
  std::vector<StepLog> log(2);
  log[0].step = 1;
  log[1].step = 2;
  log[1].parts = {0.5, 0.25, 0.0, 0.0, 0.0};
  log[1].total = 0.625;
  const fs::path p = scratch("loss.csv");
  write_loss_log(p, log);
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  CHECK(line == kLossLogHeader);
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 6);
  }
  CHECK(rows == 2);
}

TEST_CASE("enhance_pipeline composition") {
  const Config cfg = micro_config();
  Models m(cfg, true);
  Rng rng(3);
  ImageBuffer img(64, 128, 3);
  for (float& v : img.data) v = static_cast<float>(rng.uniform());

  EnhanceOptions o = EnhanceOptions::from(cfg);
  o.stage_order = StageOrder::kGlobalOnly;
  CHECK(enhance_pipeline(m, img, o).data == enhance_global(m.gpp, img, o.fusion).data);

  // Extents divisible by the multiple need no padding, so the chains are exact.
  REQUIRE(img.height % cfg.dblrnet.multiple(o.k_fast) == 0);
  o.stage_order = StageOrder::kGlobalThenLocal;
  CHECK(enhance_pipeline(m, img, o).data == enhance_local(*m.dblr, enhance_global(m.gpp, img, o.fusion), 1).data);
  o.stage_order = StageOrder::kLocalThenGlobal;
  CHECK(enhance_pipeline(m, img, o).data == enhance_global(m.gpp, enhance_local(*m.dblr, img, 1), o.fusion).data);

  CHECK_THROWS_AS(enhance_pipeline(m, ImageBuffer(63, 80, 3), o), InvalidArgument);
  Models global_only(cfg, false);
  o.stage_order = StageOrder::kGlobalThenLocal;
  CHECK_THROWS_AS(enhance_pipeline(global_only, img, o), VersionError);
}

TEST_CASE("constant coefficient maps make fast and baseline identical") {
  const Config cfg = micro_config();
  Models m(cfg, true);
  m.dblr->reset_heads();
  auto& a = m.dblr->alpha_head();
  auto& b = m.dblr->beta_head();
  // Zero weights, nonzero biases: spatially constant maps that are not the identity.
  for (float& v : a.bias.mutable_data()) v = 0.9F;
  for (float& v : b.bias.mutable_data()) v = 0.05F;
  Rng rng(8);
  ImageBuffer img(96, 160, 3);
  for (float& v : img.data) v = static_cast<float>(rng.uniform());
  EnhanceOptions o = EnhanceOptions::from(cfg);
  for (int k : {2, 4}) {
    o.k_fast = k;
    o.mode = InferenceMode::kBaseline;
    const ImageBuffer base = enhance_pipeline(m, img, o);
    o.mode = InferenceMode::kFast;
    CHECK(enhance_pipeline(m, img, o).data == base.data);
  }
}

TEST_CASE("odd extents round-trip through padding") {
  const Config cfg = micro_config();
  const Models m(cfg, true);
  Rng rng(2);
  ImageBuffer img(767, 1021, 3);
  for (float& v : img.data) v = static_cast<float>(rng.uniform());
  for (InferenceMode mode : {InferenceMode::kBaseline, InferenceMode::kFast}) {
    EnhanceOptions o = EnhanceOptions::from(cfg);
    o.mode = mode;
    const ImageBuffer y = enhance_pipeline(m, img, o);
    CHECK(y.width == 1021);
    CHECK(y.height == 767);
    CHECK(y.channels == 3);
  }
  const ImageBuffer gray(70, 90, 1, 0.5F);
  CHECK(enhance_pipeline(m, gray, EnhanceOptions::from(cfg)).channels == 3);
}

TEST_CASE("bench report") {
  const Config cfg = micro_config();
  const Models m(cfg, true);
  const BenchReport rep = bench(m, {64, 128, 256}, 2, 1);
  REQUIRE(rep.rows.size() == 3);
  for (const BenchRow& r : rep.rows) {
    CHECK(r.coeff_ratio == 0.25);
    CHECK(r.coeff_path_reduction >= 0.70);
    CHECK(r.baseline.scope("backbone") == rep.rows[0].baseline.scope("backbone"));
    CHECK(r.wall_baseline_ms > 0.0);
  }
  CHECK(rep.rows[0].baseline.total <= rep.rows[1].baseline.total);
  CHECK(rep.rows[1].baseline.total <= rep.rows[2].baseline.total);
  const auto j = nlohmann::json::parse(rep.to_json());
  CHECK(j["k_fast"] == 2);
  CHECK(j["rows"].size() == 3);
  CHECK_THROWS_AS(bench(m, {32}, 2, 1), InvalidArgument);
}

TEST_CASE("ablation tables") {
  const PairSet train = toy_pairs(2);
  const fs::path dir = scratch("ablate_eval");
  fs::remove_all(dir);
  SynthOptions so;
  so.count = 2;
  so.size = 64;
  so.seed = 8;
  const DatasetManifest eval = build_dataset(so, dir);

  Config cfg = micro(0, 0);
  const AblationTable loss = run_ablation(AblationAxis::kLoss, train, eval, cfg);
  REQUIRE(loss.rows.size() == 3);
  CHECK(loss.header == std::vector<std::string>{"objective", "ssim_loss", "tv_loss", "ssim", "psnr"});
  CHECK(loss.rows[0].cells == std::vector<std::string>{"L1", "no", "no"});
  CHECK(loss.rows[2].cells == std::vector<std::string>{"L1+SSIM+TV", "yes", "yes"});
  for (const auto& r : loss.rows) {
    CHECK(r.ssim == loss.rows[0].ssim);
    CHECK(r.psnr == loss.rows[0].psnr);
  }

  cfg = micro(2, 2);
  const AblationTable fusion = run_ablation(AblationAxis::kFusion, train, eval, cfg);
  REQUIRE(fusion.rows.size() == 3);
  CHECK(fusion.rows[0].cells[0] == "Cascading");
  CHECK(fusion.rows[1].cells[0] == "Additive");
  CHECK(fusion.rows[2].cells[0] == "Concatenation");

  const AblationTable stage = run_ablation(AblationAxis::kStage, train, eval, cfg);
  REQUIRE(stage.rows.size() == 3);
  CHECK(stage.rows[0].cells[0] == "Local + Global");
  CHECK(stage.rows[1].cells[0] == "Global + Local");
  CHECK(stage.rows[2].cells[0] == "Global");

  const AblationTable refine = run_ablation(AblationAxis::kRefine, train, eval, cfg);
  REQUIRE(refine.rows.size() == 2);
  const std::string csv = refine.to_csv();
  CHECK(csv.rfind("refine_mode,params,ssim,psnr\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  for (const auto& r : refine.rows) {
    CHECK(std::isfinite(r.ssim));
    CHECK(std::isfinite(r.psnr));
  }
  CHECK_THROWS_AS(parse_ablation_axis("depth"), Error);
}
