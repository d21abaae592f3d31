#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "glpge/diff/tensor.hpp"

namespace glpge {

/// H x W x C float image, interleaved (row-major H -> W -> C), values in [0, 1].
struct ImageBuffer {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> data;

  ImageBuffer() = default;
  ImageBuffer(int h, int w, int c, float fill = 0.0F);

  [[nodiscard]] std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  [[nodiscard]] float at(int y, int x, int c) const { return data[index(y, x, c)]; }
  float& at(int y, int x, int c) { return data[index(y, x, c)]; }
  [[nodiscard]] std::size_t size() const { return data.size(); }
  [[nodiscard]] bool same_extent(const ImageBuffer& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;
};

/// PNG (8-bit gray/RGB, other layouts are expanded) or binary PPM/PGM,
/// detected from the file signature.
ImageBuffer load_image(const std::filesystem::path& path);
/// Format from the extension: .png, .ppm (P6) or .pgm (P5). Values are
/// quantized by round(v * 255).
void save_image(const ImageBuffer& img, const std::filesystem::path& path);

/// PNG bytes of an image (deterministic; no timestamps or text chunks).
std::vector<unsigned char> encode_png(const ImageBuffer& img);

enum class ResizeMethod { kBilinear, kNearest };

ImageBuffer resize(const ImageBuffer& img, int h, int w,
                   ResizeMethod method = ResizeMethod::kBilinear);

/// Rec.601 gray: 0.299 R + 0.587 G + 0.114 B.
ImageBuffer to_gray(const ImageBuffer& img);
/// Replicates a 1-channel image to 3 channels (3-channel input passes through).
ImageBuffer to_rgb(const ImageBuffer& img);

ImageBuffer crop(const ImageBuffer& img, int y0, int x0, int h, int w);
/// Extends bottom/right edges by mirror reflection (edge pixel not repeated).
ImageBuffer reflect_pad(const ImageBuffer& img, int pad_bottom, int pad_right);
/// Pads bottom/right so both extents become multiples of `multiple`.
ImageBuffer reflect_pad_to_multiple(const ImageBuffer& img, int multiple);

ImageBuffer clamp_image(ImageBuffer img);

/// 1 x C x H x W tensor.
diff::Tensor<float> to_tensor(const ImageBuffer& img);
/// N x C x H x W from equally sized images.
diff::Tensor<float> to_tensor(const std::vector<ImageBuffer>& imgs);
/// Sample `n` of an N x C x H x W tensor.
ImageBuffer from_tensor(const diff::Tensor<float>& t, int n = 0);

double mean_value(const ImageBuffer& img);

}  // namespace glpge
