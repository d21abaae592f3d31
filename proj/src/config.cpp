#include <fstream>
#include <set>
#include <sstream>

#include "glpge/errors.hpp"
#include "glpge/pipeline.hpp"
#include "json.hpp"

namespace glpge {

using nlohmann::json;

std::string to_string(StageOrder s) {
  switch (s) {
    case StageOrder::kGlobalThenLocal:
      return "global_then_local";
    case StageOrder::kLocalThenGlobal:
      return "local_then_global";
    case StageOrder::kGlobalOnly:
      return "global_only";
  }
  return "?";
}

StageOrder parse_stage_order(const std::string& name) {
  for (auto s : {StageOrder::kGlobalThenLocal, StageOrder::kLocalThenGlobal, StageOrder::kGlobalOnly})
    if (to_string(s) == name) return s;
  throw ConfigError("unknown stage order '" + name + "'");
}

std::string to_string(InferenceMode m) { return m == InferenceMode::kBaseline ? "baseline" : "fast"; }

InferenceMode parse_inference_mode(const std::string& name) {
  if (name == "baseline") return InferenceMode::kBaseline;
  if (name == "fast") return InferenceMode::kFast;
  throw ConfigError("unknown inference mode '" + name + "'");
}

DblrnetConfig Config::dblrnet_config() const {
  DblrnetConfig c = dblrnet;
  c.refine = train.refine;
  return c;
}

Config micro_config() {
  Config c;
  c.gppnet.widths = {4, 8, 8, 16, 16};
  c.gppnet.head_hidden = 16;
  c.gppnet.input_side = 64;
  c.dblrnet = DblrnetConfig::micro();
  c.discriminator.widths = {8, 16, 16, 16};
  c.train.batch = 2;
  c.train.crop = 64;
  c.train.gpp_steps = 10;
  c.train.joint_steps = 10;
  c.synth.count = 4;
  c.synth.size = 64;
  return c;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

void apply_seed(Config& cfg, std::uint64_t seed) {
  cfg.train.seed = seed;
  cfg.synth.seed = seed;
  cfg.gppnet.seed = mix64(seed ^ 0x677070);
  cfg.dblrnet.seed = mix64(seed ^ 0x64626C72);
  cfg.discriminator.seed = mix64(seed ^ 0x64697363);
}

namespace {

json weights_json(const LossWeights& w) {
  return {{"l1", w.l1}, {"ssim", w.ssim}, {"tv", w.tv}, {"gan", w.gan}, {"reg", w.reg}};
}

json to_json(const Config& c) {
  json j;
  const TrainConfig& t = c.train;
  j["train"] = {{"batch", t.batch},
                {"gpp_steps", t.gpp_steps},
                {"joint_steps", t.joint_steps},
                {"finetune_steps", t.finetune_steps},
                {"weights", weights_json(t.weights)},
                {"lr", t.adam.lr},
                {"beta1", t.adam.beta1},
                {"beta2", t.adam.beta2},
                {"eps", t.adam.eps},
                {"crop", t.crop},
                {"seed", t.seed},
                {"stage_order", to_string(t.stage_order)},
                {"refine", to_string(t.refine)},
                {"fusion", to_string(t.fusion)},
                {"gpp_adversarial", t.gpp_adversarial},
                {"log_every", t.log_every}};
  j["gppnet"] = {{"widths", c.gppnet.widths},
                 {"head_hidden", c.gppnet.head_hidden},
                 {"input_side", c.gppnet.input_side},
                 {"seed", c.gppnet.seed}};
  j["dblrnet"] = {{"widths", c.dblrnet.widths},
                  {"growth", c.dblrnet.growth},
                  {"layers", c.dblrnet.layers},
                  {"smooth_width", c.dblrnet.smooth_width},
                  {"smooth_jitter", c.dblrnet.smooth_jitter},
                  {"bypass_smooth", c.dblrnet.bypass_smooth},
                  {"seed", c.dblrnet.seed}};
  j["discriminator"] = {{"widths", c.discriminator.widths}, {"seed", c.discriminator.seed}};
  const DegradeConfig& s = c.synth.stages;
  j["synth"] = {{"count", c.synth.count},
                {"size", c.synth.size},
                {"intensity_min", c.synth.intensity_min},
                {"intensity_max", c.synth.intensity_max},
                {"seed", c.synth.seed},
                {"stages",
                 {{"shadow", s.shadow},
                  {"wrinkle_shading", s.wrinkle},
                  {"color_cast", s.color_cast},
                  {"bleed_through", s.bleed_through},
                  {"blur", s.blur},
                  {"noise", s.noise}}}};
  j["inference"] = {{"mode", to_string(c.inference.mode)}, {"k_fast", c.inference.k_fast}};
  j["reference"] = {{"batch", kReferenceBatch}, {"crop", kReferenceCrop}, {"gpp_side", kReferenceGppSide}, {"lr", kReferenceLr}};
  return j;
}

// Reads known keys of one object and rejects the rest.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("config: '" + path_ + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config: '" + path_ + "." + key + "' has the wrong type");
    }
  }

  template <typename Parse, typename T>
  void get_enum(const char* key, T& out, Parse parse) {
    std::string s;
    if (!j_.contains(key)) {
      seen_.insert(key);
      return;
    }
    get(key, s);
    out = parse(s);
  }

  Reader child(const char* key) {
    seen_.insert(key);
    static const json kEmpty = json::object();
    return Reader(j_.contains(key) ? j_.at(key) : kEmpty, path_ + "." + key);
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (seen_.count(k) == 0) throw ConfigError("config: unknown key '" + path_ + "." + k + "'");
  }

  [[nodiscard]] const json& raw() const { return j_; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("config: " + what);
}

void validate(const Config& c) {
  const TrainConfig& t = c.train;
  require(t.batch >= 1, "train.batch must be >= 1");
  require(t.gpp_steps >= 0 && t.joint_steps >= 0 && t.finetune_steps >= 0, "step counts must be >= 0");
  require(t.crop >= 16, "train.crop must be >= 16");
  require(t.adam.lr > 0.0, "train.lr must be positive");
  require(t.adam.beta1 >= 0.0 && t.adam.beta1 < 1.0 && t.adam.beta2 >= 0.0 && t.adam.beta2 < 1.0,
          "train.beta1/beta2 must lie in [0, 1)");
  require(t.adam.eps > 0.0, "train.eps must be positive");
  for (double w : t.weights.values()) require(w >= 0.0, "loss weights must be >= 0");
  require(t.log_every >= 0, "train.log_every must be >= 0");
  require(c.gppnet.head_hidden >= 1, "gppnet.head_hidden must be >= 1");
  require(c.gppnet.input_side >= 32, "gppnet.input_side must be >= 32");
  for (int w : c.gppnet.widths) require(w >= 1, "gppnet.widths must be positive");
  const DblrnetConfig& d = c.dblrnet;
  require(!d.widths.empty() && d.widths.size() == d.growth.size() && d.widths.size() == d.layers.size(),
          "dblrnet.widths, growth and layers must have the same nonzero length");
  for (std::size_t i = 0; i < d.widths.size(); ++i)
    require(d.widths[i] >= 1 && d.growth[i] >= 1 && d.layers[i] >= 1, "dblrnet entries must be positive");
  require(d.smooth_width >= 1, "dblrnet.smooth_width must be >= 1");
  require(d.smooth_jitter >= 0.0, "dblrnet.smooth_jitter must be >= 0");
  require(!c.discriminator.widths.empty(), "discriminator.widths must not be empty");
  require(c.synth.count >= 1, "synth.count must be >= 1");
  require(c.synth.size >= 64, "synth.size must be >= 64");
  require(c.synth.intensity_min >= 0.0 && c.synth.intensity_min <= c.synth.intensity_max &&
              c.synth.intensity_max <= 1.0,
          "synth intensities must satisfy 0 <= min <= max <= 1");
  require(c.inference.k_fast >= 1, "inference.k_fast must be >= 1");
}

}  // namespace

std::string dump_config(const Config& cfg) { return to_json(cfg).dump(2) + "\n"; }

Config parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: invalid JSON: ") + e.what());
  }
  Config c;
  Reader root(j, "$");
  {
    Reader t = root.child("train");
    TrainConfig& tc = c.train;
    t.get("batch", tc.batch);
    t.get("gpp_steps", tc.gpp_steps);
    t.get("joint_steps", tc.joint_steps);
    t.get("finetune_steps", tc.finetune_steps);
    {
      Reader w = t.child("weights");
      w.get("l1", tc.weights.l1);
      w.get("ssim", tc.weights.ssim);
      w.get("tv", tc.weights.tv);
      w.get("gan", tc.weights.gan);
      w.get("reg", tc.weights.reg);
      w.finish();
    }
    t.get("lr", tc.adam.lr);
    t.get("beta1", tc.adam.beta1);
    t.get("beta2", tc.adam.beta2);
    t.get("eps", tc.adam.eps);
    t.get("crop", tc.crop);
    t.get("seed", tc.seed);
    t.get_enum("stage_order", tc.stage_order, parse_stage_order);
    t.get_enum("refine", tc.refine, parse_refine_mode);
    t.get_enum("fusion", tc.fusion, parse_fusion);
    t.get("gpp_adversarial", tc.gpp_adversarial);
    t.get("log_every", tc.log_every);
    t.finish();
  }
  {
    Reader g = root.child("gppnet");
    g.get("widths", c.gppnet.widths);
    g.get("head_hidden", c.gppnet.head_hidden);
    g.get("input_side", c.gppnet.input_side);
    g.get("seed", c.gppnet.seed);
    g.finish();
  }
  {
    Reader d = root.child("dblrnet");
    d.get("widths", c.dblrnet.widths);
    d.get("growth", c.dblrnet.growth);
    d.get("layers", c.dblrnet.layers);
    d.get("smooth_width", c.dblrnet.smooth_width);
    d.get("smooth_jitter", c.dblrnet.smooth_jitter);
    d.get("bypass_smooth", c.dblrnet.bypass_smooth);
    d.get("seed", c.dblrnet.seed);
    d.finish();
  }
  {
    Reader d = root.child("discriminator");
    d.get("widths", c.discriminator.widths);
    d.get("seed", c.discriminator.seed);
    d.finish();
  }
  {
    Reader s = root.child("synth");
    s.get("count", c.synth.count);
    s.get("size", c.synth.size);
    s.get("intensity_min", c.synth.intensity_min);
    s.get("intensity_max", c.synth.intensity_max);
    s.get("seed", c.synth.seed);
    Reader st = s.child("stages");
    DegradeConfig& dc = c.synth.stages;
    st.get("shadow", dc.shadow);
    st.get("wrinkle_shading", dc.wrinkle);
    st.get("color_cast", dc.color_cast);
    st.get("bleed_through", dc.bleed_through);
    st.get("blur", dc.blur);
    st.get("noise", dc.noise);
    st.finish();
    s.finish();
  }
  {
    Reader inf = root.child("inference");
    inf.get_enum("mode", c.inference.mode, parse_inference_mode);
    inf.get("k_fast", c.inference.k_fast);
    inf.finish();
  }
  {
    // Read-only block: accepted only with the built-in values.
    Reader ref = root.child("reference");
    int batch = kReferenceBatch;
    int crop = kReferenceCrop;
    int side = kReferenceGppSide;
    double lr = kReferenceLr;
    ref.get("batch", batch);
    ref.get("crop", crop);
    ref.get("gpp_side", side);
    ref.get("lr", lr);
    ref.finish();
    require(batch == kReferenceBatch && crop == kReferenceCrop && side == kReferenceGppSide && lr == kReferenceLr,
            "the 'reference' block is read-only");
  }
  root.finish();
  validate(c);
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("config not found: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace glpge
