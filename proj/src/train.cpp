#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "glpge/diff/ops.hpp"
#include "glpge/errors.hpp"
#include "glpge/pipeline.hpp"
#include "json.hpp"

namespace glpge {

using diff::Tensor;

PairSet PairSet::load(const DatasetManifest& manifest) {
  PairSet s;
  for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
    const ManifestRow& r = manifest.rows[i];
    ImageBuffer d;
    ImageBuffer c;
    try {
      d = to_rgb(load_image(manifest.resolve(r.degraded)));
      c = to_rgb(load_image(manifest.resolve(r.clean)));
    } catch (const IoError& e) {
      throw IoError("manifest row " + std::to_string(i) + ": " + e.what());
    }
    if (!d.same_extent(c)) throw InvalidShape("manifest row " + std::to_string(i) + ": pair extents differ");
    s.degraded.push_back(std::move(d));
    s.clean.push_back(std::move(c));
  }
  return s;
}

void write_loss_log(const std::filesystem::path& path, const std::vector<StepLog>& log) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write loss log " + path.string());
  out << kLossLogHeader << '\n';
  char buf[64];
  for (const auto& e : log) {
    out << e.step;
    for (double v : e.parts) {
      std::snprintf(buf, sizeof buf, ",%.9g", v);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, ",%.9g", e.total);
    out << buf << '\n';
  }
  if (!out) throw IoError("write failed for loss log " + path.string());
}

namespace {

constexpr std::uint64_t kPhaseGpp = 1;
constexpr std::uint64_t kPhaseJoint = 2;
constexpr std::uint64_t kPhaseFinetune = 3;

// Largest square crop <= want that fits every image and divides by `multiple`.
int crop_side(const PairSet& data, int want, int multiple) {
  int side = want;
  for (const auto& img : data.degraded) side = std::min({side, img.height, img.width});
  side -= side % multiple;
  if (side < multiple)
    throw ConfigError("training images are smaller than the required crop multiple " + std::to_string(multiple));
  return side;
}

struct Batch {
  Tensor<float> input;
  Tensor<float> target;
};

Batch sample_batch(const std::vector<ImageBuffer>& inputs, const std::vector<ImageBuffer>& targets, int batch,
                   int side, Rng rng) {
  std::vector<ImageBuffer> in;
  std::vector<ImageBuffer> tg;
  for (int b = 0; b < batch; ++b) {
    const std::size_t i = rng.below(inputs.size());
    const ImageBuffer& src = inputs[i];
    const int y0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(src.height - side + 1)));
    const int x0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(src.width - side + 1)));
    in.push_back(crop(src, y0, x0, side, side));
    tg.push_back(crop(targets[i], y0, x0, side, side));
  }
  return {to_tensor(in), to_tensor(tg)};
}

class Trainer {
 public:
  Trainer(Models& models, diff::ParamStore<float>& gen_params, const LossWeights& w, const diff::AdamHyper& hyper)
      : models_(models), weights_(w), gen_(gen_params.tensors(), hyper) {
    if (weights_.gan > 0.0) {
      if (!models_.disc) throw ConfigError("adversarial weight set but no discriminator");
      dis_.emplace(models_.disc->store().tensors(), hyper);
    }
  }

  StepLog step(const Tensor<float>& out, const Tensor<float>& target, const CoefficientMaps<float>* maps,
               std::int64_t index) {
    const auto lambda = weights_.values();
    LossParts<float> parts;
    const auto term = [&](std::size_t i, const auto& fn) {
      if (lambda[i] > 0.0) {
        parts.parts[i] = fn();
      } else {
        diff::NoGradGuard ng;
        parts.parts[i] = fn();
      }
    };
    term(0, [&] { return l1_loss(out, target); });
    term(1, [&] { return ssim_loss(out, target); });
    term(2, [&] { return tv_loss(out); });
    AdversarialLosses<float> adv;
    if (dis_) {
      adv = adversarial_losses(*models_.disc, target, out);
      parts.parts[3] = adv.g_loss;
    }
    if (maps != nullptr && maps->alpha.defined()) term(4, [&] { return smoothness_reg(maps->alpha, maps->beta); });
    const auto loss = composite_loss(weights_, parts);
    gen_.zero_grad();
    loss.total.backward();
    gen_.step();
    if (dis_) {
      dis_->zero_grad();
      adv.d_loss.backward();
      dis_->step();
    }
    StepLog log;
    log.step = index;
    log.parts = loss.components;
    log.total = composite_value(weights_, loss.components);
    return log;
  }

 private:
  Models& models_;
  LossWeights weights_;
  diff::Adam<float> gen_;
  std::optional<diff::Adam<float>> dis_;
};

void report(const char* phase, const StepLog& log, int every) {
  if (every <= 0 || log.step % every != 0) return;
  std::fprintf(stderr, "[%s] step %lld total %.6f l1 %.6f ssim %.6f\n", phase, static_cast<long long>(log.step),
               log.total, log.parts[0], log.parts[1]);
}

// Local phase shared by train_joint and finetune.
TrainResult run_local(const PairSet& data, const Config& cfg, Models& models, const LossWeights& weights,
                      std::int64_t start, int steps, std::uint64_t phase_tag, const char* phase,
                      const TrainHooks& hooks) {
  TrainResult res;
  models.gpp.store().set_requires_grad(false);
  const std::uint64_t frozen = models.gpp.store().hash();
  std::int64_t step = start;
  if (cfg.train.stage_order != StageOrder::kGlobalOnly && steps > 0) {
    const Dblrnet<float>& dblr = *models.dblr;
    const int side = crop_side(data, cfg.train.crop, dblr.config().multiple(1));
    const bool global_first = cfg.train.stage_order == StageOrder::kGlobalThenLocal;
    std::vector<ImageBuffer> inputs;
    if (global_first) {
      // GPPNet is frozen, so I_g is fixed for the whole phase.
      inputs.resize(data.size());
      for (std::size_t i = 0; i < data.size(); ++i)
        inputs[i] = enhance_global(models.gpp, data.degraded[i], cfg.train.fusion);
    }
    Trainer trainer(models, models.dblr->store(), weights, cfg.train.adam);
    const Rng root = Rng(cfg.train.seed).stream(phase_tag);
    for (int s = 0; s < steps; ++s) {
      ++step;
      const Batch b = sample_batch(global_first ? inputs : data.degraded, data.clean, cfg.train.batch, side,
                                   root.stream(static_cast<std::uint64_t>(step)));
      CoefficientMaps<float> maps;
      Tensor<float> out;
      if (global_first) {
        out = dblr.refine(b.input, 1, &maps);
      } else {
        out = models.gpp.enhance(dblr.refine(b.input, 1, &maps), cfg.train.fusion);
      }
      const StepLog log = trainer.step(out, b.target, &maps, step);
      report(phase, log, cfg.train.log_every);
      res.log.push_back(log);
      if (hooks.after_step) hooks.after_step(step, models);
    }
  }
  if (models.gpp.store().hash() != frozen) throw Error("GPPNet weights changed during the " + std::string(phase) + " phase");
  models.gpp.store().set_requires_grad(true);
  res.checkpoint = models.checkpoint(phase, step);
  return res;
}

}  // namespace

TrainResult pretrain_gppnet(const PairSet& data, const Config& cfg, const TrainHooks& hooks) {
  if (data.size() == 0) throw ConfigError("pretrain_gppnet: empty manifest");
  Models models(cfg, false);
  LossWeights w;
  w.l1 = cfg.train.weights.l1;
  w.ssim = cfg.train.weights.ssim;
  w.tv = 0.0;
  w.reg = 0.0;
  w.gan = cfg.train.gpp_adversarial ? cfg.train.weights.gan : 0.0;
  if (w.gan > 0.0) models.disc.emplace(cfg.discriminator);
  const int side = crop_side(data, cfg.train.crop, 1);
  Trainer trainer(models, models.gpp.store(), w, cfg.train.adam);
  const Rng root = Rng(cfg.train.seed).stream(kPhaseGpp);
  TrainResult res;
  std::int64_t step = 0;
  for (int s = 0; s < cfg.train.gpp_steps; ++s) {
    ++step;
    const Batch b = sample_batch(data.degraded, data.clean, cfg.train.batch, side,
                                 root.stream(static_cast<std::uint64_t>(step)));
    const auto out = models.gpp.enhance(b.input, cfg.train.fusion);
    const StepLog log = trainer.step(out, b.target, nullptr, step);
    report("gpp", log, cfg.train.log_every);
    res.log.push_back(log);
    if (hooks.after_step) hooks.after_step(step, models);
  }
  res.checkpoint = models.checkpoint("gpp", step);
  return res;
}

TrainResult train_joint(const PairSet& data, const Config& cfg, const Checkpoint& gpp_ckpt, const TrainHooks& hooks) {
  if (data.size() == 0) throw ConfigError("train_joint: empty manifest");
  if (!(gpp_ckpt.config.gppnet == cfg.gppnet))
    throw VersionError("train_joint: GPPNet checkpoint was built with a different GPPNet config");
  Models loaded = Models::from_checkpoint(gpp_ckpt);
  Models models(cfg, true);
  models.gpp.store().copy_from(loaded.gpp.store());
  return run_local(data, cfg, models, cfg.train.weights, gpp_ckpt.step, cfg.train.joint_steps, kPhaseJoint, "joint",
                   hooks);
}

TrainResult finetune(const PairSet& data, const Config& cfg, const Checkpoint& ckpt, const TrainHooks& hooks) {
  if (data.size() == 0) throw ConfigError("finetune: empty manifest");
  if (ckpt.phase != "joint" && ckpt.phase != "finetune")
    throw VersionError("finetune: needs a joint checkpoint, got phase '" + ckpt.phase + "'");
  if (!(ckpt.config.gppnet == cfg.gppnet) || !(ckpt.config.dblrnet_config() == cfg.dblrnet_config()) ||
      !(ckpt.config.discriminator == cfg.discriminator))
    throw VersionError("finetune: checkpoint model configs differ from the run config");
  Models models = Models::from_checkpoint(ckpt);
  models.config = cfg;
  return run_local(data, cfg, models, cfg.train.weights.finetune(), ckpt.step, cfg.train.finetune_steps,
                   kPhaseFinetune, "finetune", hooks);
}

TrainResult pretrain_gppnet(const DatasetManifest& manifest, const Config& cfg) {
  return pretrain_gppnet(PairSet::load(manifest), cfg);
}

TrainResult train_joint(const DatasetManifest& manifest, const Config& cfg, const Checkpoint& gpp_ckpt) {
  return train_joint(PairSet::load(manifest), cfg, gpp_ckpt);
}

TrainResult finetune(const DatasetManifest& manifest, const Config& cfg, const Checkpoint& ckpt) {
  return finetune(PairSet::load(manifest), cfg, ckpt);
}

// ---------------------------------------------------------------------------

EnhanceOptions EnhanceOptions::from(const Config& cfg) {
  EnhanceOptions o;
  o.mode = cfg.inference.mode;
  o.k_fast = cfg.inference.k_fast;
  o.stage_order = cfg.train.stage_order;
  o.fusion = cfg.train.fusion;
  return o;
}

ImageBuffer enhance_pipeline(const Models& models, const ImageBuffer& img, const EnhanceOptions& opts) {
  if (img.height < 64 || img.width < 64) throw InvalidArgument("enhance_pipeline: extents must be >= 64");
  if (opts.k_fast < 1) throw InvalidArgument("enhance_pipeline: k_fast must be >= 1");
  const ImageBuffer rgb = to_rgb(img);
  if (opts.stage_order == StageOrder::kGlobalOnly) return enhance_global(models.gpp, rgb, opts.fusion);
  if (!models.dblr) throw VersionError("enhance_pipeline: checkpoint has no DB-LRNet weights");
  const Dblrnet<float>& dblr = *models.dblr;
  const int k = opts.mode == InferenceMode::kFast ? opts.k_fast : 1;
  const int multiple = dblr.config().multiple(opts.k_fast);
  const auto local = [&](const ImageBuffer& x) {
    diff::NoGradGuard ng;
    const ImageBuffer padded = reflect_pad_to_multiple(x, multiple);
    const ImageBuffer y = from_tensor(dblr.refine(to_tensor(padded), k));
    return crop(y, 0, 0, x.height, x.width);
  };
  if (opts.stage_order == StageOrder::kGlobalThenLocal) return local(enhance_global(models.gpp, rgb, opts.fusion));
  return enhance_global(models.gpp, local(rgb), opts.fusion);
}

ImageBuffer enhance_pipeline(const Checkpoint& ckpt, const ImageBuffer& img, const EnhanceOptions& opts) {
  const Models models = Models::from_checkpoint(ckpt);
  return enhance_pipeline(models, img, opts);
}

namespace {

template <typename Fn>
double time_ms(int repeats, const Fn& fn) {
  double best = 0.0;
  for (int r = 0; r < std::max(1, repeats); ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    best = r == 0 ? ms : std::min(best, ms);
  }
  return best;
}

}  // namespace

BenchReport bench(const Models& models, const std::vector<int>& sizes, int k_fast, int repeats) {
  if (!models.dblr) throw VersionError("bench: checkpoint has no DB-LRNet weights");
  if (k_fast < 1) throw InvalidArgument("bench: k_fast must be >= 1");
  const Dblrnet<float>& dblr = *models.dblr;
  const int multiple = dblr.config().multiple(k_fast);
  BenchReport rep;
  rep.k_fast = k_fast;
  for (int size : sizes) {
    if (size < 64) throw InvalidArgument("bench: sizes must be >= 64");
    BenchRow row;
    row.size = size;
    const int padded = (size + multiple - 1) / multiple * multiple;
    row.baseline = count_flops(models.gpp, dblr, padded, padded, 1);
    row.fast = count_flops(models.gpp, dblr, padded, padded, k_fast);
    row.coeff_ratio = static_cast<double>(row.fast.scope("coeff")) / static_cast<double>(row.baseline.scope("coeff"));
    row.coeff_path_reduction =
        1.0 - static_cast<double>(row.fast.coeff_path()) / static_cast<double>(row.baseline.coeff_path());
    const ImageBuffer doc = render_document(static_cast<std::uint64_t>(size), size, size);
    EnhanceOptions o;
    o.k_fast = k_fast;
    o.stage_order = models.config.train.stage_order;
    o.fusion = models.config.train.fusion;
    o.mode = InferenceMode::kBaseline;
    row.wall_baseline_ms = time_ms(repeats, [&] { (void)enhance_pipeline(models, doc, o); });
    o.mode = InferenceMode::kFast;
    row.wall_fast_ms = time_ms(repeats, [&] { (void)enhance_pipeline(models, doc, o); });
    const auto x = to_tensor(reflect_pad_to_multiple(doc, multiple));
    diff::NoGradGuard ng;
    row.coeff_wall_baseline_ms = time_ms(repeats, [&] { (void)dblr.coefficients(x, 1); });
    row.coeff_wall_fast_ms = time_ms(repeats, [&] { (void)dblr.coefficients(x, k_fast); });
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

std::string BenchReport::to_json() const {
  nlohmann::json j;
  j["k_fast"] = k_fast;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json scopes_b(r.baseline.scopes);
    nlohmann::json scopes_f(r.fast.scopes);
    j["rows"].push_back({{"size", r.size},
                         {"flops_baseline", r.baseline.total},
                         {"flops_fast", r.fast.total},
                         {"scopes_baseline", scopes_b},
                         {"scopes_fast", scopes_f},
                         {"backbone_flops", r.baseline.scope("backbone")},
                         {"coeff_flop_ratio", r.coeff_ratio},
                         {"coeff_path_reduction", r.coeff_path_reduction},
                         {"wall_ms_baseline", r.wall_baseline_ms},
                         {"wall_ms_fast", r.wall_fast_ms},
                         {"coeff_wall_ms_baseline", r.coeff_wall_baseline_ms},
                         {"coeff_wall_ms_fast", r.coeff_wall_fast_ms},
                         {"coeff_speedup", r.coeff_wall_baseline_ms / std::max(r.coeff_wall_fast_ms, 1e-9)}});
  }
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

std::string to_string(AblationAxis a) {
  switch (a) {
    case AblationAxis::kFusion:
      return "fusion";
    case AblationAxis::kStage:
      return "stage";
    case AblationAxis::kLoss:
      return "loss";
    case AblationAxis::kRefine:
      return "refine";
  }
  return "?";
}

AblationAxis parse_ablation_axis(const std::string& name) {
  for (auto a : {AblationAxis::kFusion, AblationAxis::kStage, AblationAxis::kLoss, AblationAxis::kRefine})
    if (to_string(a) == name) return a;
  throw ConfigError("unknown ablation axis '" + name + "'");
}

std::string AblationTable::to_csv() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << '\n';
  char buf[64];
  for (const auto& r : rows) {
    for (const auto& c : r.cells) os << c << ',';
    std::snprintf(buf, sizeof buf, "%.6f,%.4f", r.ssim, r.psnr);
    os << buf << '\n';
  }
  return os.str();
}

AblationTable run_ablation(AblationAxis axis, const PairSet& train, const DatasetManifest& eval, const Config& cfg) {
  if (train.size() == 0) throw ConfigError("ablate: empty training manifest");
  AblationTable table;
  table.axis = axis;
  const auto score = [&](const Checkpoint& ckpt, const Config& c) {
    const Models models = Models::from_checkpoint(ckpt);
    EnhanceOptions o = EnhanceOptions::from(c);
    o.mode = InferenceMode::kBaseline;
    const auto rep = evaluate_pairs(eval, [&](const ImageBuffer& x) { return enhance_pipeline(models, x, o); });
    return std::pair{rep.mean_ssim(), rep.mean_psnr()};
  };
  const auto full_run = [&](const Config& c, const Checkpoint& gpp) {
    const auto joint = train_joint(train, c, gpp);
    return score(joint.checkpoint, c);
  };
  switch (axis) {
    case AblationAxis::kFusion: {
      table.header = {"fusion_strategy", "ssim", "psnr"};
      const std::array<std::pair<FusionStrategy, const char*>, 3> rows = {
          {{FusionStrategy::kCascading, "Cascading"},
           {FusionStrategy::kAdditive, "Additive"},
           {FusionStrategy::kConcatenation, "Concatenation"}}};
      for (const auto& [fusion, label] : rows) {
        Config c = cfg;
        c.train.fusion = fusion;
        const auto gpp = pretrain_gppnet(train, c);
        const auto [s, p] = full_run(c, gpp.checkpoint);
        table.rows.push_back({{label}, s, p});
      }
      break;
    }
    case AblationAxis::kStage: {
      table.header = {"integration_strategy", "ssim", "psnr"};
      const auto gpp = pretrain_gppnet(train, cfg);
      const std::array<std::pair<StageOrder, const char*>, 3> rows = {{{StageOrder::kLocalThenGlobal, "Local + Global"},
                                                                       {StageOrder::kGlobalThenLocal, "Global + Local"},
                                                                       {StageOrder::kGlobalOnly, "Global"}}};
      for (const auto& [order, label] : rows) {
        Config c = cfg;
        c.train.stage_order = order;
        const auto [s, p] = full_run(c, gpp.checkpoint);
        table.rows.push_back({{label}, s, p});
      }
      break;
    }
    case AblationAxis::kLoss: {
      table.header = {"objective", "ssim_loss", "tv_loss", "ssim", "psnr"};
      const auto gpp = pretrain_gppnet(train, cfg);
      const std::array<std::pair<bool, bool>, 3> rows = {{{false, false}, {true, false}, {true, true}}};
      for (const auto& [use_ssim, use_tv] : rows) {
        Config c = cfg;
        c.train.weights.ssim = use_ssim ? cfg.train.weights.ssim : 0.0;
        c.train.weights.tv = use_tv ? cfg.train.weights.tv : 0.0;
        const std::string label = std::string("L1") + (use_ssim ? "+SSIM" : "") + (use_tv ? "+TV" : "");
        const auto [s, p] = full_run(c, gpp.checkpoint);
        table.rows.push_back({{label, use_ssim ? "yes" : "no", use_tv ? "yes" : "no"}, s, p});
      }
      break;
    }
    case AblationAxis::kRefine: {
      table.header = {"refine_mode", "params", "ssim", "psnr"};
      const auto gpp = pretrain_gppnet(train, cfg);
      for (const auto mode : {RefineMode::kDirect, RefineMode::kParametric}) {
        Config c = cfg;
        c.train.refine = mode;
        const auto [s, p] = full_run(c, gpp.checkpoint);
        // Parameters on the active path only.
        const Dblrnet<float> probe(c.dblrnet_config());
        std::int64_t used = 0;
        for (const auto& np : probe.store().params()) {
          const bool direct_only = np.name.rfind("dblr.head.direct", 0) == 0;
          const bool parametric_only =
              np.name.rfind("dblr.smooth", 0) == 0 || np.name.rfind("dblr.head.alpha", 0) == 0 ||
              np.name.rfind("dblr.head.beta", 0) == 0;
          if (mode == RefineMode::kDirect ? parametric_only : direct_only) continue;
          used += static_cast<std::int64_t>(np.tensor.numel());
        }
        table.rows.push_back({{to_string(mode), std::to_string(used)}, s, p});
      }
      break;
    }
  }
  return table;
}

}  // namespace glpge
