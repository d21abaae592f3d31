#include "glpge/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "glpge/errors.hpp"
#include "glpge/evalkit.hpp"
#include "glpge/pipeline.hpp"
#include "glpge/report.hpp"
#include "glpge/synthdoc.hpp"

namespace glpge {

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  bool micro = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON config file")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "Seed for synthesis, initialization and cropping");
  app->add_flag("--micro", c.micro, "Tiny models and budgets (smoke runs)");
}

// Base config: --config, else the init checkpoint's, else defaults. Model
// configs of the init checkpoint always win so weights stay loadable.
Config resolve(const Common& c, const Checkpoint* init, bool keep_local) {
  Config cfg = !c.config.empty() ? load_config(c.config) : init != nullptr ? init->config
                                                                            : c.micro ? micro_config()
                                                                                      : Config{};
  if (c.seed) apply_seed(cfg, *c.seed);
  if (init != nullptr && c.config.empty()) {
    cfg.gppnet = init->config.gppnet;
    if (keep_local) {
      cfg.dblrnet = init->config.dblrnet;
      cfg.discriminator = init->config.discriminator;
    }
  }
  return cfg;
}

void ensure_parent(const fs::path& p) {
  const fs::path parent = p.parent_path();
  if (!parent.empty() && !fs::is_directory(parent)) throw IoError("output directory does not exist: " + parent.string());
}

void write_text(const fs::path& p, const std::string& text) {
  ensure_parent(p);
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + p.string());
  out << text;
  if (!out) throw IoError("write failed for " + p.string());
}

std::string caption(double s, double p) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "SSIM %.4f  PSNR %.2f DB", s, p);
  return buf;
}

EnhanceOptions enhance_options(const Config& cfg, const std::string& mode, int k_fast, const std::string& order) {
  EnhanceOptions o = EnhanceOptions::from(cfg);
  if (!mode.empty()) o.mode = parse_inference_mode(mode);
  if (k_fast > 0) o.k_fast = k_fast;
  if (!order.empty()) o.stage_order = parse_stage_order(order);
  return o;
}

const std::vector<std::string> kPhases = {"gpp", "joint", "finetune"};
const std::vector<std::string> kModes = {"baseline", "fast"};
const std::vector<std::string> kOrders = {"global_then_local", "local_then_global", "global_only"};
const std::vector<std::string> kAxes = {"fusion", "stage", "loss", "refine"};
const std::vector<std::string> kRefine = {"parametric", "direct"};
const std::vector<std::string> kFusion = {"concatenation", "cascading", "additive"};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-stage document image enhancement: synthesis, training, inference and evaluation", "glpge"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  // synth
  Common synth_c;
  std::string synth_out;
  int synth_count = 0;
  int synth_size = 0;
  std::optional<double> synth_intensity;
  std::optional<double> synth_imin;
  std::optional<double> synth_imax;
  auto* synth = app.add_subcommand("synth", "Render clean pages, degrade them and write a paired dataset");
  add_common(synth, synth_c);
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--count", synth_count, "Number of pairs")->check(CLI::PositiveNumber);
  synth->add_option("--size", synth_size, "Square page side in pixels")->check(CLI::Range(64, 8192));
  synth->add_option("--intensity", synth_intensity, "Fixed degradation intensity")->check(CLI::Range(0.0, 1.0));
  synth->add_option("--intensity-min", synth_imin, "Lower intensity bound")->check(CLI::Range(0.0, 1.0));
  synth->add_option("--intensity-max", synth_imax, "Upper intensity bound")->check(CLI::Range(0.0, 1.0));

  // train
  Common train_c;
  std::string phase;
  std::string train_manifest;
  std::string train_out;
  std::string train_init;
  std::string train_log;
  std::optional<int> train_steps;
  std::optional<int> train_batch;
  std::optional<int> train_crop;
  std::optional<int> train_log_every;
  std::string train_order;
  std::string train_refine;
  std::string train_fusion;
  auto* train = app.add_subcommand("train", "Run one training phase and write a checkpoint");
  add_common(train, train_c);
  train->add_option("--phase", phase, "gpp | joint | finetune")->required()->check(CLI::IsMember(kPhases));
  train->add_option("--manifest", train_manifest, "Training manifest CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--out", train_out, "Checkpoint to write")->required();
  train->add_option("--init", train_init, "Checkpoint of the previous phase")->check(CLI::ExistingFile);
  train->add_option("--log", train_log, "Loss log CSV (default: <out>.loss.csv)");
  train->add_option("--steps", train_steps, "Steps for this phase")->check(CLI::NonNegativeNumber);
  train->add_option("--batch", train_batch, "Batch size")->check(CLI::PositiveNumber);
  train->add_option("--crop", train_crop, "Crop side")->check(CLI::Range(16, 4096));
  train->add_option("--log-every", train_log_every, "Progress line every n steps")->check(CLI::NonNegativeNumber);
  train->add_option("--stage-order", train_order, "Stage composition")->check(CLI::IsMember(kOrders));
  train->add_option("--refine", train_refine, "DB-LRNet output mode")->check(CLI::IsMember(kRefine));
  train->add_option("--fusion", train_fusion, "GPPNet fusion")->check(CLI::IsMember(kFusion));

  // enhance
  std::string enh_ckpt;
  std::string enh_input;
  std::string enh_output;
  std::string enh_reference;
  std::string enh_manifest;
  std::string enh_out_dir;
  std::string enh_mode;
  std::string enh_order;
  std::string enh_compare;
  bool enh_compare_all = false;
  int enh_k = 0;
  auto* enhance = app.add_subcommand("enhance", "Enhance one image or every degraded image of a manifest");
  enhance->add_option("--ckpt", enh_ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  auto* in_opt = enhance->add_option("--input", enh_input, "Input image")->check(CLI::ExistingFile);
  enhance->add_option("--output", enh_output, "Output image")->needs(in_opt);
  enhance->add_option("--reference", enh_reference, "Ground truth for the comparison strip")
      ->check(CLI::ExistingFile)
      ->needs(in_opt);
  enhance->add_option("--compare", enh_compare, "Side-by-side comparison PNG")->needs(in_opt);
  auto* man_opt = enhance->add_option("--manifest", enh_manifest, "Manifest CSV")->check(CLI::ExistingFile);
  enhance->add_option("--out-dir", enh_out_dir, "Output directory for manifest mode")->needs(man_opt);
  enhance->add_flag("--compare-all", enh_compare_all, "Also write comparison strips in manifest mode")->needs(man_opt);
  in_opt->excludes(man_opt);
  enhance->add_option("--mode", enh_mode, "baseline | fast")->check(CLI::IsMember(kModes));
  enhance->add_option("--k-fast", enh_k, "Coefficient downscale factor in fast mode")->check(CLI::PositiveNumber);
  enhance->add_option("--stage-order", enh_order, "Stage composition")->check(CLI::IsMember(kOrders));

  // eval
  std::string ev_ckpt;
  std::string ev_manifest;
  std::string ev_out;
  std::string ev_csv;
  std::string ev_mode;
  std::string ev_order;
  int ev_k = 0;
  bool ev_spectrum = false;
  auto* eval = app.add_subcommand("eval", "Score a checkpoint (or the identity) on a manifest");
  eval->add_option("--manifest", ev_manifest, "Manifest CSV")->required()->check(CLI::ExistingFile);
  eval->add_option("--ckpt", ev_ckpt, "Checkpoint (omit to score the degraded inputs)")->check(CLI::ExistingFile);
  eval->add_option("--out", ev_out, "Report path (.json or .csv)")->required();
  eval->add_option("--csv", ev_csv, "Additional CSV report");
  eval->add_option("--mode", ev_mode, "baseline | fast")->check(CLI::IsMember(kModes));
  eval->add_option("--k-fast", ev_k, "Coefficient downscale factor in fast mode")->check(CLI::PositiveNumber);
  eval->add_option("--stage-order", ev_order, "Stage composition")->check(CLI::IsMember(kOrders));
  eval->add_flag("--spectrum", ev_spectrum, "Add spectral band energies per image");

  // bench
  std::string b_ckpt;
  std::string b_out;
  std::vector<int> b_sizes = {256, 512, 1024};
  int b_k = 2;
  int b_repeats = 1;
  auto* bench_cmd = app.add_subcommand("bench", "Analytic FLOPs and wall time, baseline vs fast");
  bench_cmd->add_option("--ckpt", b_ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  bench_cmd->add_option("--sizes", b_sizes, "Square sizes")->delimiter(',')->check(CLI::Range(64, 8192));
  bench_cmd->add_option("--k-fast", b_k, "Coefficient downscale factor")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--repeats", b_repeats, "Timing repeats (minimum is kept)")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--out", b_out, "JSON report")->required();

  // ablate
  Common ab_c;
  std::string axis;
  std::string ab_manifest;
  std::string ab_eval;
  std::string ab_out;
  std::optional<int> ab_steps;
  std::optional<int> ab_gpp_steps;
  auto* ablate = app.add_subcommand("ablate", "Short seeded runs along one ablation axis, written as a CSV table");
  add_common(ablate, ab_c);
  ablate->add_option("--axis", axis, "fusion | stage | loss | refine")->required()->check(CLI::IsMember(kAxes));
  ablate->add_option("--manifest", ab_manifest, "Training manifest CSV")->required()->check(CLI::ExistingFile);
  ablate->add_option("--eval-manifest", ab_eval, "Evaluation manifest (default: training manifest)")
      ->check(CLI::ExistingFile);
  ablate->add_option("--out", ab_out, "CSV table")->required();
  ablate->add_option("--steps", ab_steps, "Joint steps per row")->check(CLI::NonNegativeNumber);
  ablate->add_option("--gpp-steps", ab_gpp_steps, "GPPNet steps per row")->check(CLI::NonNegativeNumber);

  // config dump
  Common cfg_c;
  std::string cfg_out;
  auto* config = app.add_subcommand("config", "Configuration utilities");
  config->require_subcommand(1);
  auto* dump = config->add_subcommand("dump", "Print the effective configuration as JSON");
  add_common(dump, cfg_c);
  dump->add_option("--out", cfg_out, "Write to a file instead of stdout");

  std::vector<std::string> rev(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(rev.begin(), rev.end());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (synth->parsed()) {
      Config cfg = resolve(synth_c, nullptr, false);
      SynthOptions so = cfg.synth;
      if (synth_count > 0) so.count = synth_count;
      if (synth_size > 0) so.size = synth_size;
      if (synth_intensity) so.intensity_min = so.intensity_max = *synth_intensity;
      if (synth_imin) so.intensity_min = *synth_imin;
      if (synth_imax) so.intensity_max = *synth_imax;
      const auto m = build_dataset(so, synth_out);
      out << "wrote " << m.rows.size() << " pairs to " << (fs::path(synth_out) / "manifest.csv").string() << "\n";
    } else if (train->parsed()) {
      std::optional<Checkpoint> init;
      if (!train_init.empty()) init = Checkpoint::load(train_init);
      if (phase != "gpp" && !init) {
        err << "error: --init is required for phase " << phase << "\n\n" << train->help();
        return kExitUsage;
      }
      Config cfg = resolve(train_c, init ? &*init : nullptr, phase == "finetune");
      if (train_steps) (phase == "gpp" ? cfg.train.gpp_steps : phase == "joint" ? cfg.train.joint_steps
                                                                                 : cfg.train.finetune_steps) = *train_steps;
      if (train_batch) cfg.train.batch = *train_batch;
      if (train_crop) cfg.train.crop = *train_crop;
      if (train_log_every) cfg.train.log_every = *train_log_every;
      if (!train_order.empty()) cfg.train.stage_order = parse_stage_order(train_order);
      if (!train_refine.empty()) cfg.train.refine = parse_refine_mode(train_refine);
      if (!train_fusion.empty()) cfg.train.fusion = parse_fusion(train_fusion);
      const PairSet data = PairSet::load(DatasetManifest::load(train_manifest));
      const TrainResult res = phase == "gpp"     ? pretrain_gppnet(data, cfg)
                              : phase == "joint" ? train_joint(data, cfg, *init)
                                                 : finetune(data, cfg, *init);
      ensure_parent(train_out);
      res.checkpoint.save(train_out);
      const fs::path log = train_log.empty() ? fs::path(train_out).replace_extension(".loss.csv") : fs::path(train_log);
      ensure_parent(log);
      write_loss_log(log, res.log);
      out << phase << ": " << res.log.size() << " steps, checkpoint " << train_out << " (step "
          << res.checkpoint.step << ")\n";
    } else if (enhance->parsed()) {
      if (enh_input.empty() == enh_manifest.empty()) {
        err << "error: give exactly one of --input or --manifest\n\n" << enhance->help();
        return kExitUsage;
      }
      const Checkpoint ckpt = Checkpoint::load(enh_ckpt);
      const Models models = Models::from_checkpoint(ckpt);
      const EnhanceOptions o = enhance_options(ckpt.config, enh_mode, enh_k, enh_order);
      if (!enh_input.empty()) {
        if (enh_output.empty() && enh_compare.empty()) {
          err << "error: --output or --compare is required with --input\n\n" << enhance->help();
          return kExitUsage;
        }
        const ImageBuffer src = load_image(enh_input);
        const ImageBuffer y = enhance_pipeline(models, src, o);
        if (!enh_output.empty()) {
          ensure_parent(enh_output);
          save_image(y, enh_output);
        }
        if (!enh_compare.empty()) {
          std::vector<ImageBuffer> panels = {to_rgb(src), y};
          std::string cap = to_string(o.mode);
          if (!enh_reference.empty()) {
            const ImageBuffer ref = to_rgb(load_image(enh_reference));
            cap = caption(ssim(y, ref), psnr(y, ref));
            panels.push_back(ref);
          }
          ensure_parent(enh_compare);
          save_image(report_render(panels, cap), enh_compare);
        }
        out << "enhanced " << enh_input << "\n";
      } else {
        if (enh_out_dir.empty()) {
          err << "error: --out-dir is required with --manifest\n\n" << enhance->help();
          return kExitUsage;
        }
        const DatasetManifest m = DatasetManifest::load(enh_manifest);
        fs::create_directories(enh_out_dir);
        for (std::size_t i = 0; i < m.rows.size(); ++i) {
          const ImageBuffer src = load_image(m.resolve(m.rows[i].degraded));
          const ImageBuffer y = enhance_pipeline(models, src, o);
          char name[48];
          std::snprintf(name, sizeof name, "enhanced_%05zu.png", i);
          save_image(y, fs::path(enh_out_dir) / name);
          if (enh_compare_all) {
            const ImageBuffer ref = to_rgb(load_image(m.resolve(m.rows[i].clean)));
            std::snprintf(name, sizeof name, "compare_%05zu.png", i);
            save_image(report_render({to_rgb(src), y, ref}, caption(ssim(y, ref), psnr(y, ref))),
                       fs::path(enh_out_dir) / name);
          }
        }
        out << "enhanced " << m.rows.size() << " images into " << enh_out_dir << "\n";
      }
    } else if (eval->parsed()) {
      const DatasetManifest m = DatasetManifest::load(ev_manifest);
      EvalOptions eo;
      eo.spectrum = ev_spectrum;
      MetricReport rep;
      if (ev_ckpt.empty()) {
        rep = evaluate_pairs(m, [](const ImageBuffer& x) { return to_rgb(x); }, eo);
      } else {
        const Checkpoint ckpt = Checkpoint::load(ev_ckpt);
        const Models models = Models::from_checkpoint(ckpt);
        const EnhanceOptions o = enhance_options(ckpt.config, ev_mode, ev_k, ev_order);
        rep = evaluate_pairs(m, [&](const ImageBuffer& x) { return enhance_pipeline(models, x, o); }, eo);
      }
      ensure_parent(ev_out);
      rep.save(ev_out);
      if (!ev_csv.empty()) write_text(ev_csv, rep.to_csv());
      char buf[128];
      std::snprintf(buf, sizeof buf, "rows %zu mean ssim %.4f mean psnr %.2f\n", rep.rows.size(), rep.mean_ssim(),
                    rep.mean_psnr());
      out << buf;
    } else if (bench_cmd->parsed()) {
      const Models models = Models::from_checkpoint(Checkpoint::load(b_ckpt));
      const BenchReport rep = bench(models, b_sizes, b_k, b_repeats);
      write_text(b_out, rep.to_json());
      for (const auto& r : rep.rows) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%d: coeff flop ratio %.4f, coeff path reduction %.1f%%, coeff speedup %.2fx\n",
                      r.size, r.coeff_ratio, 100.0 * r.coeff_path_reduction,
                      r.coeff_wall_baseline_ms / std::max(r.coeff_wall_fast_ms, 1e-9));
        out << buf;
      }
    } else if (ablate->parsed()) {
      Config cfg = resolve(ab_c, nullptr, false);
      if (ab_steps) cfg.train.joint_steps = *ab_steps;
      if (ab_gpp_steps) cfg.train.gpp_steps = *ab_gpp_steps;
      const PairSet data = PairSet::load(DatasetManifest::load(ab_manifest));
      const DatasetManifest ev = DatasetManifest::load(ab_eval.empty() ? ab_manifest : ab_eval);
      const AblationTable table = run_ablation(parse_ablation_axis(axis), data, ev, cfg);
      write_text(ab_out, table.to_csv());
      out << table.to_csv();
    } else if (dump->parsed()) {
      const std::string text = dump_config(resolve(cfg_c, nullptr, false));
      if (cfg_out.empty()) {
        out << text;
      } else {
        write_text(cfg_out, text);
      }
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace glpge
