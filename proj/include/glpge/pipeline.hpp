#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "glpge/dblrnet.hpp"
#include "glpge/diff/adam.hpp"
#include "glpge/evalkit.hpp"
#include "glpge/gppnet.hpp"
#include "glpge/losses.hpp"
#include "glpge/synthdoc.hpp"

namespace glpge {

enum class StageOrder { kGlobalThenLocal, kLocalThenGlobal, kGlobalOnly };

std::string to_string(StageOrder s);
StageOrder parse_stage_order(const std::string& name);

enum class InferenceMode { kBaseline, kFast };

std::string to_string(InferenceMode m);
InferenceMode parse_inference_mode(const std::string& name);

/// Reference values of the full-scale protocol; the defaults below are
/// desk-scale.
inline constexpr int kReferenceBatch = 16;
inline constexpr int kReferenceCrop = 512;
inline constexpr int kReferenceGppSide = 224;
inline constexpr double kReferenceLr = 1e-4;

struct TrainConfig {
  int batch = 4;
  int gpp_steps = 300;
  int joint_steps = 2000;
  int finetune_steps = 0;
  LossWeights weights;
  diff::AdamHyper adam;
  /// Square crop side for DB-LRNet training (clipped to the smallest image).
  int crop = 128;
  std::uint64_t seed = 0;
  StageOrder stage_order = StageOrder::kGlobalThenLocal;
  RefineMode refine = RefineMode::kParametric;
  FusionStrategy fusion = FusionStrategy::kConcatenation;
  /// Adds the adversarial term to GPPNet pre-training.
  bool gpp_adversarial = false;
  /// Progress line on stderr every n steps (0 = silent).
  int log_every = 0;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct InferenceConfig {
  InferenceMode mode = InferenceMode::kBaseline;
  int k_fast = 2;

  friend bool operator==(const InferenceConfig&, const InferenceConfig&) = default;
};

/// Everything a run needs. JSON keys mirror the field names; unknown keys are
/// rejected.
struct Config {
  TrainConfig train;
  GppnetConfig gppnet;
  DblrnetConfig dblrnet;
  DiscriminatorConfig discriminator;
  SynthOptions synth;
  InferenceConfig inference;

  /// DB-LRNet config with the training refine mode applied.
  [[nodiscard]] DblrnetConfig dblrnet_config() const;

  friend bool operator==(const Config&, const Config&) = default;
};

/// Tiny models and budgets for smoke runs on 64 x 64 crops.
Config micro_config();

std::string dump_config(const Config& cfg);
Config parse_config(const std::string& json);
Config load_config(const std::filesystem::path& path);

/// Propagates one seed to synthesis, initialization and crop sampling.
void apply_seed(Config& cfg, std::uint64_t seed);

std::uint64_t fnv1a(const std::string& bytes);

// ---------------------------------------------------------------------------

struct CheckpointTensor {
  std::string name;
  std::array<int, 4> shape{};
  std::vector<float> data;

  friend bool operator==(const CheckpointTensor&, const CheckpointTensor&) = default;
};

/// "GLPGECKP", u32 version, u64 manifest length, JSON manifest (sorted keys),
/// then the little-endian float32 payload in manifest order. Tensor offsets
/// and lengths in the manifest are in bytes from the start of the payload.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::string phase;  // "gpp", "joint", "finetune"
  std::int64_t step = 0;
  Config config;
  std::vector<CheckpointTensor> tensors;

  [[nodiscard]] std::uint64_t config_hash() const { return fnv1a(dump_config(config)); }
  [[nodiscard]] bool has(const std::string& prefix) const;

  [[nodiscard]] std::vector<unsigned char> to_bytes() const;
  static Checkpoint from_bytes(const std::vector<unsigned char>& bytes);
  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

/// Live models of a checkpoint. DB-LRNet and the discriminator are absent
/// until the joint phase.
struct Models {
  Config config;
  Gppnet<float> gpp;
  std::optional<Dblrnet<float>> dblr;
  std::optional<Discriminator<float>> disc;

  explicit Models(const Config& cfg, bool with_local = true);
  static Models from_checkpoint(const Checkpoint& ckpt);
  [[nodiscard]] Checkpoint checkpoint(const std::string& phase, std::int64_t step) const;
};

// ---------------------------------------------------------------------------

struct StepLog {
  std::int64_t step = 0;
  std::array<double, 5> parts{};  // unweighted, kLossNames order
  double total = 0.0;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<StepLog> log;
};

struct TrainHooks {
  /// Called after every optimizer step with the global step index.
  std::function<void(std::int64_t, const Models&)> after_step;
};

/// In-memory training pairs (degraded, clean), RGB.
struct PairSet {
  std::vector<ImageBuffer> degraded;
  std::vector<ImageBuffer> clean;

  static PairSet load(const DatasetManifest& manifest);
  [[nodiscard]] std::size_t size() const { return degraded.size(); }
};

TrainResult pretrain_gppnet(const PairSet& data, const Config& cfg, const TrainHooks& hooks = {});
TrainResult train_joint(const PairSet& data, const Config& cfg, const Checkpoint& gpp_ckpt,
                        const TrainHooks& hooks = {});
/// train_joint continued from a joint checkpoint with the adversarial weight
/// forced to 0.
TrainResult finetune(const PairSet& data, const Config& cfg, const Checkpoint& ckpt, const TrainHooks& hooks = {});

TrainResult pretrain_gppnet(const DatasetManifest& manifest, const Config& cfg);
TrainResult train_joint(const DatasetManifest& manifest, const Config& cfg, const Checkpoint& gpp_ckpt);
TrainResult finetune(const DatasetManifest& manifest, const Config& cfg, const Checkpoint& ckpt);

/// step,l1,ssim,tv,gan,reg,total
void write_loss_log(const std::filesystem::path& path, const std::vector<StepLog>& log);
inline constexpr const char* kLossLogHeader = "step,l1,ssim,tv,gan,reg,total";

struct EnhanceOptions {
  InferenceMode mode = InferenceMode::kBaseline;
  int k_fast = 2;
  StageOrder stage_order = StageOrder::kGlobalThenLocal;
  FusionStrategy fusion = FusionStrategy::kConcatenation;

  static EnhanceOptions from(const Config& cfg);
};

/// Full pipeline at the input extent (>= 64 on both sides). Inputs are
/// reflect-padded to the DB-LRNet multiple for k_fast in both modes and
/// cropped back, so the two modes see identical pixels.
ImageBuffer enhance_pipeline(const Models& models, const ImageBuffer& img, const EnhanceOptions& opts);
ImageBuffer enhance_pipeline(const Checkpoint& ckpt, const ImageBuffer& img, const EnhanceOptions& opts);

struct BenchRow {
  int size = 0;
  FlopBreakdown baseline;
  FlopBreakdown fast;
  double coeff_ratio = 0.0;           // "coeff" scope, fast / baseline
  double coeff_path_reduction = 0.0;  // 1 - (coeff + coeff.resample) fast / baseline
  double wall_baseline_ms = 0.0;
  double wall_fast_ms = 0.0;
  double coeff_wall_baseline_ms = 0.0;
  double coeff_wall_fast_ms = 0.0;
};

struct BenchReport {
  int k_fast = 2;
  std::vector<BenchRow> rows;

  [[nodiscard]] std::string to_json() const;
};

/// Analytic FLOPs and wall time per square size. Wall times are the minimum
/// over `repeats` runs.
BenchReport bench(const Models& models, const std::vector<int>& sizes, int k_fast, int repeats = 1);

// ---------------------------------------------------------------------------

enum class AblationAxis { kFusion, kStage, kLoss, kRefine };

std::string to_string(AblationAxis a);
AblationAxis parse_ablation_axis(const std::string& name);

struct AblationRow {
  std::vector<std::string> cells;  // label columns
  double ssim = 0.0;
  double psnr = 0.0;
};

struct AblationTable {
  AblationAxis axis = AblationAxis::kFusion;
  std::vector<std::string> header;  // label columns, then ssim, psnr
  std::vector<AblationRow> rows;

  [[nodiscard]] std::string to_csv() const;
};

/// One seeded short training run per row, scored on `eval`.
AblationTable run_ablation(AblationAxis axis, const PairSet& train, const DatasetManifest& eval, const Config& cfg);

}  // namespace glpge
