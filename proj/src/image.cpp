#include "glpge/image.hpp"

#include <algorithm>
#include <cmath>

#include "glpge/diff/ops.hpp"
#include "glpge/errors.hpp"

namespace glpge {

ImageBuffer::ImageBuffer(int h, int w, int c, float fill) : height(h), width(w), channels(c) {
  if (h < 0 || w < 0 || (c != 1 && c != 3))
    throw InvalidShape("image extent " + std::to_string(h) + "x" + std::to_string(w) + "x" +
                       std::to_string(c) + " is invalid");
  data.assign(static_cast<std::size_t>(h) * w * c, fill);
}

namespace {

int mirror(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

}  // namespace

ImageBuffer resize(const ImageBuffer& img, int h, int w, ResizeMethod method) {
  if (h < 1 || w < 1) throw InvalidArgument("resize: target extent must be >= 1");
  if (img.height < 1 || img.width < 1) throw InvalidArgument("resize: empty source image");
  if (method == ResizeMethod::kBilinear) {
    diff::NoGradGuard no_grad;
    return from_tensor(diff::resize_bilinear(to_tensor(img), h, w));
  }
  ImageBuffer out(h, w, img.channels);
  std::vector<int> sy(h);
  std::vector<int> sx(w);
  for (int y = 0; y < h; ++y)
    sy[y] = std::min(static_cast<int>((y + 0.5) * img.height / h), img.height - 1);
  for (int x = 0; x < w; ++x)
    sx[x] = std::min(static_cast<int>((x + 0.5) * img.width / w), img.width - 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < img.channels; ++c) out.at(y, x, c) = img.at(sy[y], sx[x], c);
  return out;
}

ImageBuffer to_gray(const ImageBuffer& img) {
  if (img.channels != 3)
    throw InvalidShape("to_gray: expected 3 channels, got " + std::to_string(img.channels));
  ImageBuffer out(img.height, img.width, 1);
  const auto wr = static_cast<float>(diff::kLumaR);
  const auto wg = static_cast<float>(diff::kLumaG);
  const auto wb = static_cast<float>(diff::kLumaB);
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = wr * img.data[3 * i] + wg * img.data[3 * i + 1] + wb * img.data[3 * i + 2];
  return out;
}

ImageBuffer to_rgb(const ImageBuffer& img) {
  if (img.channels == 3) return img;
  ImageBuffer out(img.height, img.width, 3);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    out.data[3 * i] = out.data[3 * i + 1] = out.data[3 * i + 2] = img.data[i];
  return out;
}

ImageBuffer crop(const ImageBuffer& img, int y0, int x0, int h, int w) {
  if (y0 < 0 || x0 < 0 || h < 1 || w < 1 || y0 + h > img.height || x0 + w > img.width)
    throw InvalidShape("crop: window out of bounds");
  ImageBuffer out(h, w, img.channels);
  const std::size_t row = static_cast<std::size_t>(w) * img.channels;
  for (int y = 0; y < h; ++y) {
    const float* src = img.data.data() + img.index(y0 + y, x0, 0);
    std::copy(src, src + row, out.data.data() + static_cast<std::size_t>(y) * row);
  }
  return out;
}

ImageBuffer reflect_pad(const ImageBuffer& img, int pad_bottom, int pad_right) {
  if (pad_bottom < 0 || pad_right < 0) throw InvalidArgument("reflect_pad: negative padding");
  if (pad_bottom == 0 && pad_right == 0) return img;
  ImageBuffer out(img.height + pad_bottom, img.width + pad_right, img.channels);
  for (int y = 0; y < out.height; ++y) {
    const int sy = mirror(y, img.height);
    for (int x = 0; x < out.width; ++x) {
      const int sx = mirror(x, img.width);
      for (int c = 0; c < img.channels; ++c) out.at(y, x, c) = img.at(sy, sx, c);
    }
  }
  return out;
}

ImageBuffer reflect_pad_to_multiple(const ImageBuffer& img, int multiple) {
  if (multiple < 1) throw InvalidArgument("reflect_pad_to_multiple: multiple must be >= 1");
  const int ph = (multiple - img.height % multiple) % multiple;
  const int pw = (multiple - img.width % multiple) % multiple;
  return reflect_pad(img, ph, pw);
}

ImageBuffer clamp_image(ImageBuffer img) {
  for (float& v : img.data) v = std::clamp(v, 0.0F, 1.0F);
  return img;
}

diff::Tensor<float> to_tensor(const ImageBuffer& img) { return to_tensor(std::vector{img}); }

diff::Tensor<float> to_tensor(const std::vector<ImageBuffer>& imgs) {
  if (imgs.empty()) throw InvalidArgument("to_tensor: no images");
  const ImageBuffer& f = imgs.front();
  const diff::Shape s{static_cast<int>(imgs.size()), f.channels, f.height, f.width};
  std::vector<float> values(s.numel());
  const std::size_t plane = s.plane();
  for (std::size_t n = 0; n < imgs.size(); ++n) {
    const ImageBuffer& img = imgs[n];
    if (!img.same_extent(f)) throw InvalidShape("to_tensor: images differ in extent");
    float* base = values.data() + n * plane * f.channels;
    for (std::size_t i = 0; i < plane; ++i)
      for (int c = 0; c < f.channels; ++c) base[c * plane + i] = img.data[i * f.channels + c];
  }
  return diff::Tensor<float>::from(s, std::move(values));
}

ImageBuffer from_tensor(const diff::Tensor<float>& t, int n) {
  const diff::Shape s = t.shape();
  if (n < 0 || n >= s.n) throw InvalidArgument("from_tensor: sample index out of range");
  ImageBuffer img(s.h, s.w, s.c);
  const std::size_t plane = s.plane();
  const float* base = t.data().data() + static_cast<std::size_t>(n) * s.c * plane;
  for (std::size_t i = 0; i < plane; ++i)
    for (int c = 0; c < s.c; ++c) img.data[i * s.c + c] = base[c * plane + i];
  return img;
}

double mean_value(const ImageBuffer& img) {
  double acc = 0.0;
  for (const float v : img.data) acc += v;
  return img.data.empty() ? 0.0 : acc / static_cast<double>(img.data.size());
}

}  // namespace glpge
