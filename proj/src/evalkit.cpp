#include "glpge/evalkit.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>

#include "glpge/errors.hpp"
#include "glpge/losses.hpp"
#include "glpge/parallel.hpp"
#include "json.hpp"

namespace glpge {

using diff::Tensor;

namespace {

Tensor<double> to_double(const ImageBuffer& img) {
  const Tensor<float> f = to_tensor(img);
  const auto d = f.data();
  return Tensor<double>::from(f.shape(), std::vector<double>(d.begin(), d.end()));
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// FFTW planning is not thread safe.
std::mutex g_fftw_mutex;

}  // namespace

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
  if (!a.same_extent(b))
    throw InvalidShape("psnr: extents differ (" + std::to_string(a.height) + "x" + std::to_string(a.width) + "x" +
                       std::to_string(a.channels) + " vs " + std::to_string(b.height) + "x" +
                       std::to_string(b.width) + "x" + std::to_string(b.channels) + ")");
  if (a.size() == 0) throw InvalidShape("psnr: empty image");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - b.data[i];
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(a.size());
  if (mse < kPsnrFloor) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double ssim(const ImageBuffer& a, const ImageBuffer& b) {
  if (!a.same_extent(b)) throw InvalidShape("ssim: extents differ");
  diff::NoGradGuard ng;
  return ssim_index(to_double(a), to_double(b)).item();
}

SpectralProfile spectral_profile(const ImageBuffer& img) {
  const ImageBuffer g = img.channels == 1 ? img : to_gray(img);
  const int h = g.height;
  const int w = g.width;
  const std::size_t n = static_cast<std::size_t>(h) * w;
  auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
  if (buf == nullptr) throw Error("spectral_profile: allocation failed");
  fftw_plan plan;
  {
    std::lock_guard lock(g_fftw_mutex);
    plan = fftw_plan_dft_2d(h, w, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  for (std::size_t i = 0; i < n; ++i) {
    buf[i][0] = g.data[i];
    buf[i][1] = 0.0;
  }
  fftw_execute(plan);
  SpectralProfile p;
  double dc = 0.0;
  double horiz = 0.0;
  double vert = 0.0;
  double high = 0.0;
  double total = 0.0;
  const auto freq = [](int k, int len) { return std::abs(static_cast<double>(2 * k <= len ? k : k - len) / len); };
  for (int v = 0; v < h; ++v) {
    const double fv = freq(v, h);
    for (int u = 0; u < w; ++u) {
      const double fu = freq(u, w);
      const fftw_complex& c = buf[static_cast<std::size_t>(v) * w + u];
      const double e = c[0] * c[0] + c[1] * c[1];
      total += e;
      if (u == 0 && v == 0) dc += e;
      if (fu >= 0.25 && fv < 0.25) horiz += e;
      if (fv >= 0.25 && fu < 0.25) vert += e;
      if (std::max(fu, fv) >= 0.25) high += e;
    }
  }
  {
    std::lock_guard lock(g_fftw_mutex);
    fftw_destroy_plan(plan);
  }
  fftw_free(buf);
  p.total_energy = total;
  if (total > 0.0) {
    p.dc_fraction = dc / total;
    p.horiz_band = horiz / total;
    p.vert_band = vert / total;
    p.high_freq = high / total;
  } else {
    p.dc_fraction = 1.0;
  }
  return p;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double MetricReport::mean_ssim() const {
  if (rows.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : rows) s += r.ssim;
  return s / static_cast<double>(rows.size());
}

double MetricReport::mean_psnr() const {
  if (rows.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : rows) s += r.psnr;
  return s / static_cast<double>(rows.size());
}

double MetricReport::median_ssim() const {
  std::vector<double> v;
  for (const auto& r : rows) v.push_back(r.ssim);
  return median(std::move(v));
}

double MetricReport::median_psnr() const {
  std::vector<double> v;
  for (const auto& r : rows) v.push_back(r.psnr);
  return median(std::move(v));
}

std::string MetricReport::to_json() const {
  nlohmann::json j;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json row = {{"name", r.name}, {"ssim", r.ssim}, {"psnr", r.psnr}};
    if (r.has_spectrum)
      row["spectrum"] = {{"dc_fraction", r.spectrum.dc_fraction},
                         {"horiz_band", r.spectrum.horiz_band},
                         {"vert_band", r.spectrum.vert_band},
                         {"high_freq", r.spectrum.high_freq}};
    j["rows"].push_back(row);
  }
  j["summary"] = {{"count", rows.size()},
                  {"mean_ssim", mean_ssim()},
                  {"mean_psnr", mean_psnr()},
                  {"median_ssim", median_ssim()},
                  {"median_psnr", median_psnr()}};
  return j.dump(2) + "\n";
}

std::string MetricReport::to_csv() const {
  std::ostringstream os;
  os << "name,ssim,psnr\n";
  for (const auto& r : rows) os << r.name << ',' << fmt(r.ssim) << ',' << fmt(r.psnr) << '\n';
  os << "\nstatistic,ssim,psnr\n";
  os << "mean," << fmt(mean_ssim()) << ',' << fmt(mean_psnr()) << '\n';
  os << "median," << fmt(median_ssim()) << ',' << fmt(median_psnr()) << '\n';
  return os.str();
}

void MetricReport::save(const std::filesystem::path& path) const {
  const std::string ext = path.extension().string();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write report " + path.string());
  out << (ext == ".csv" ? to_csv() : to_json());
  if (!out) throw IoError("write failed for report " + path.string());
}

MetricReport evaluate_pairs(const DatasetManifest& manifest, const Enhancer& enhancer, const EvalOptions& opts) {
  MetricReport report;
  report.rows.resize(manifest.rows.size());
  const auto run = [&](std::size_t i) {
    const ManifestRow& row = manifest.rows[i];
    ImageBuffer degraded;
    ImageBuffer clean;
    try {
      degraded = load_image(manifest.resolve(row.degraded));
      clean = load_image(manifest.resolve(row.clean));
    } catch (const IoError& e) {
      throw IoError("manifest row " + std::to_string(i) + " (" + row.degraded + "): " + e.what());
    }
    const ImageBuffer out = enhancer(degraded);
    ImageMetrics& m = report.rows[i];
    m.name = row.degraded;
    m.ssim = ssim(out, clean);
    m.psnr = psnr(out, clean);
    if (opts.spectrum) {
      m.has_spectrum = true;
      m.spectrum = spectral_profile(out);
    }
  };
  if (opts.parallel) {
    parallel_for(manifest.rows.size(), run);
  } else {
    for (std::size_t i = 0; i < manifest.rows.size(); ++i) run(i);
  }
  return report;
}

std::int64_t FlopBreakdown::scope(const std::string& name) const {
  const auto it = scopes.find(name);
  return it == scopes.end() ? 0 : it->second;
}

std::int64_t FlopBreakdown::coeff_path() const { return scope("coeff") + scope("coeff.resample"); }

std::string FlopBreakdown::to_json() const {
  nlohmann::json j;
  j["total"] = total;
  j["scopes"] = nlohmann::json::object();
  for (const auto& [k, v] : scopes) j["scopes"][k] = v;
  return j.dump(2) + "\n";
}

FlopBreakdown count_flops(const std::function<void()>& forward) {
  diff::MetaModeGuard meta;
  diff::FlopTally tally;
  forward();
  FlopBreakdown b;
  for (const auto& e : tally.entries()) {
    const std::string scope = e.scope.empty() ? "other" : e.scope;
    b.records.push_back({scope, e.op, e.flops});
    b.scopes[scope] += e.flops;
    b.total += e.flops;
  }
  return b;
}

FlopBreakdown count_flops(const Gppnet<float>& model, int h, int w) {
  return count_flops([&] { (void)model.enhance(Tensor<float>::zeros({1, 3, h, w}), FusionStrategy::kConcatenation); });
}

FlopBreakdown count_flops(const Dblrnet<float>& model, int h, int w, int k) {
  return count_flops([&] { (void)model.refine(Tensor<float>::zeros({1, 3, h, w}), k); });
}

FlopBreakdown count_flops(const Gppnet<float>& gpp, const Dblrnet<float>& dblr, int h, int w, int k) {
  return count_flops([&] {
    const auto g = gpp.enhance(Tensor<float>::zeros({1, 3, h, w}), FusionStrategy::kConcatenation);
    (void)dblr.refine(g, k);
  });
}

}  // namespace glpge
