#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "glpge/cli.hpp"
#include "glpge/errors.hpp"
#include "glpge/pipeline.hpp"
#include "glpge/report.hpp"

namespace py = pybind11;
using namespace glpge;

namespace {

using Array = py::array_t<float, py::array::c_style | py::array::forcecast>;

// (H, W) or (H, W, C) float arrays in [0, 1].
ImageBuffer to_image(const Array& a) {
  if (a.ndim() != 2 && a.ndim() != 3) throw InvalidShape("expected an (H, W) or (H, W, C) array");
  const int h = static_cast<int>(a.shape(0));
  const int w = static_cast<int>(a.shape(1));
  const int c = a.ndim() == 3 ? static_cast<int>(a.shape(2)) : 1;
  if (c != 1 && c != 3) throw InvalidShape("expected 1 or 3 channels");
  ImageBuffer img(h, w, c);
  std::copy(a.data(), a.data() + img.size(), img.data.begin());
  return img;
}

Array to_array(const ImageBuffer& img) {
  Array a({img.height, img.width, img.channels});
  std::copy(img.data.begin(), img.data.end(), a.mutable_data());
  return a;
}

Config config_from(const std::optional<std::string>& json) { return json ? parse_config(*json) : Config{}; }

class Model {
 public:
  explicit Model(const Checkpoint& ck) : ck_(ck), models_(Models::from_checkpoint(ck)) {}

  Array enhance(const Array& img, const std::string& mode, int k_fast, const std::optional<std::string>& order) const {
    EnhanceOptions o = EnhanceOptions::from(ck_.config);
    o.mode = parse_inference_mode(mode);
    o.k_fast = k_fast;
    if (order) o.stage_order = parse_stage_order(*order);
    const ImageBuffer in = to_image(img);
    py::gil_scoped_release nogil;
    const ImageBuffer out = enhance_pipeline(models_, in, o);
    py::gil_scoped_acquire gil;
    return to_array(out);
  }

  [[nodiscard]] std::string bench(const std::vector<int>& sizes, int k_fast, int repeats) const {
    py::gil_scoped_release nogil;
    return glpge::bench(models_, sizes, k_fast, repeats).to_json();
  }

  [[nodiscard]] const Checkpoint& checkpoint() const { return ck_; }

 private:
  Checkpoint ck_;
  Models models_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Document image enhancement: synthesis, training, inference and evaluation";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<InvalidShape>(m, "InvalidShape", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<VersionError>(m, "VersionError", PyExc_ValueError);

  m.def("load_image", [](const std::filesystem::path& p) { return to_array(load_image(p)); }, py::arg("path"));
  m.def("save_image", [](const Array& a, const std::filesystem::path& p) { save_image(to_image(a), p); },
        py::arg("image"), py::arg("path"));

  m.def("render_document", [](std::uint64_t seed, int h, int w) { return to_array(render_document(seed, h, w)); },
        py::arg("seed"), py::arg("height") = 256, py::arg("width") = 256);
  m.def(
      "degrade",
      [](const Array& img, double intensity, std::uint64_t seed) {
        DegradeConfig c;
        c.intensity = intensity;
        c.seed = seed;
        return to_array(degrade(to_image(img), c));
      },
      py::arg("image"), py::arg("intensity") = 0.5, py::arg("seed") = 0);
  m.def(
      "build_dataset",
      [](const std::filesystem::path& out, int count, int size, double imin, double imax, std::uint64_t seed) {
        SynthOptions so;
        so.count = count;
        so.size = size;
        so.intensity_min = imin;
        so.intensity_max = imax;
        so.seed = seed;
        py::gil_scoped_release nogil;
        return build_dataset(so, out).rows.size();
      },
      py::arg("out_dir"), py::arg("count") = 4, py::arg("size") = 128, py::arg("intensity_min") = 0.5,
      py::arg("intensity_max") = 0.5, py::arg("seed") = 0, "Writes pairs plus manifest.csv; returns the pair count.");

  m.def("psnr", [](const Array& a, const Array& b) { return psnr(to_image(a), to_image(b)); });
  m.def("ssim", [](const Array& a, const Array& b) { return ssim(to_image(a), to_image(b)); });
  m.def("spectral_profile", [](const Array& a) {
    const SpectralProfile p = spectral_profile(to_image(a));
    py::dict d;
    d["dc_fraction"] = p.dc_fraction;
    d["horiz_band"] = p.horiz_band;
    d["vert_band"] = p.vert_band;
    d["high_freq"] = p.high_freq;
    d["total_energy"] = p.total_energy;
    return d;
  });

  m.def("default_config", [] { return dump_config(Config{}); }, "Default configuration as JSON text.");
  m.def("micro_config", [] { return dump_config(micro_config()); });

  m.def(
      "train",
      [](const std::string& phase, const std::filesystem::path& manifest, const std::filesystem::path& out,
         const std::optional<std::filesystem::path>& init, const std::optional<std::string>& config) {
        const DatasetManifest man = DatasetManifest::load(manifest);
        std::optional<Checkpoint> start;
        if (init) start = Checkpoint::load(*init);
        const Config cfg = config ? parse_config(*config) : start ? start->config : Config{};
        py::gil_scoped_release nogil;
        TrainResult r;
        if (phase == "gpp") {
          r = pretrain_gppnet(man, cfg);
        } else if (!start) {
          throw InvalidArgument("phase " + phase + " needs an init checkpoint");
        } else if (phase == "joint") {
          r = train_joint(man, cfg, *start);
        } else if (phase == "finetune") {
          r = finetune(man, cfg, *start);
        } else {
          throw InvalidArgument("unknown phase " + phase);
        }
        r.checkpoint.save(out);
        std::vector<double> totals;
        for (const auto& s : r.log) totals.push_back(s.total);
        return totals;
      },
      py::arg("phase"), py::arg("manifest"), py::arg("out"), py::arg("init") = py::none(),
      py::arg("config") = py::none(), "Runs one phase, saves the checkpoint and returns the per-step totals.");

  py::class_<Model>(m, "Model")
      .def_static("load", [](const std::filesystem::path& p) { return Model(Checkpoint::load(p)); })
      .def_static("fresh", [](const std::optional<std::string>& config) { return Model(Models(config_from(config)).checkpoint("joint", 0)); },
                  py::arg("config") = py::none())
      .def("enhance", &Model::enhance, py::arg("image"), py::arg("mode") = "baseline", py::arg("k_fast") = 2,
           py::arg("stage_order") = py::none())
      .def("bench", &Model::bench, py::arg("sizes"), py::arg("k_fast") = 2, py::arg("repeats") = 1,
           "JSON report of FLOPs and wall time per size.")
      .def("save", [](const Model& md, const std::filesystem::path& p) { md.checkpoint().save(p); })
      .def_property_readonly("phase", [](const Model& md) { return md.checkpoint().phase; })
      .def_property_readonly("step", [](const Model& md) { return md.checkpoint().step; })
      .def_property_readonly("config", [](const Model& md) { return dump_config(md.checkpoint().config); });

  m.def(
      "evaluate",
      [](const std::filesystem::path& manifest, const std::optional<std::filesystem::path>& ckpt,
         const std::string& mode, bool spectrum) {
        const DatasetManifest man = DatasetManifest::load(manifest);
        EvalOptions eo;
        eo.spectrum = spectrum;
        py::gil_scoped_release nogil;
        if (!ckpt) return evaluate_pairs(man, [](const ImageBuffer& x) { return to_rgb(x); }, eo).to_json();
        const Checkpoint ck = Checkpoint::load(*ckpt);
        const Models models = Models::from_checkpoint(ck);
        EnhanceOptions o = EnhanceOptions::from(ck.config);
        o.mode = parse_inference_mode(mode);
        return evaluate_pairs(man, [&](const ImageBuffer& x) { return enhance_pipeline(models, x, o); }, eo).to_json();
      },
      py::arg("manifest"), py::arg("ckpt") = py::none(), py::arg("mode") = "baseline", py::arg("spectrum") = false,
      "JSON report; without a checkpoint the degraded inputs are scored.");

  m.def(
      "report_render",
      [](const std::vector<Array>& panels, const std::string& caption) {
        std::vector<ImageBuffer> imgs;
        for (const auto& p : panels) imgs.push_back(to_image(p));
        return to_array(report_render(imgs, caption));
      },
      py::arg("panels"), py::arg("caption") = "");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<std::string> argv = {"glpge"};
        argv.insert(argv.end(), args.begin(), args.end());
        std::ostringstream out;
        std::ostringstream err;
        int code = 0;
        {
          py::gil_scoped_release nogil;
          code = run_cli(argv, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs one command line; returns (exit code, stdout, stderr).");
}
