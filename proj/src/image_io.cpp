#include <png.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "glpge/errors.hpp"
#include "glpge/image.hpp"

namespace glpge {

namespace fs = std::filesystem;

namespace {

unsigned char quantize(float v) {
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0F, 1.0F) * 255.0F));
}

std::vector<unsigned char> read_all(const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw NotFound("image not found: " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct PngReader {
  const std::vector<unsigned char>* bytes;
  std::size_t pos;
};

void png_read_fn(png_structp png, png_bytep out, png_size_t n) {
  auto* r = static_cast<PngReader*>(png_get_io_ptr(png));
  if (r->pos + n > r->bytes->size()) png_error(png, "truncated PNG stream");
  std::memcpy(out, r->bytes->data() + r->pos, n);
  r->pos += n;
}

void png_error_fn(png_structp png, png_const_charp msg) {
  auto* err = static_cast<std::string*>(png_get_error_ptr(png));
  if (err != nullptr) *err = msg;
  png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

ImageBuffer decode_png(const std::vector<unsigned char>& bytes, const fs::path& path) {
  std::string err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
  png_infop info = png_create_info_struct(png);
  PngReader reader{&bytes, 0};
  ImageBuffer img;
  std::vector<unsigned char> pixels;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ParseError("corrupt PNG " + path.string() + ": " + err);
  }
  png_set_read_fn(png, &reader, png_read_fn);
  png_read_info(png, info);
  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if ((color & PNG_COLOR_MASK_ALPHA) != 0 || png_get_valid(png, info, PNG_INFO_tRNS) != 0)
    png_set_strip_alpha(png);
  png_read_update_info(png, info);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int c = png_get_channels(png, info);
  pixels.resize(static_cast<std::size_t>(w) * h * c);
  rows.resize(h);
  for (int y = 0; y < h; ++y) rows[y] = pixels.data() + static_cast<std::size_t>(y) * w * c;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);
  if (c != 1 && c != 3) throw FormatError("unsupported PNG channel layout in " + path.string());
  img = ImageBuffer(h, w, c);
  for (std::size_t i = 0; i < pixels.size(); ++i) img.data[i] = static_cast<float>(pixels[i]) / 255.0F;
  return img;
}

// Reads whitespace-separated header tokens, skipping '#' comments.
struct PnmCursor {
  const std::vector<unsigned char>& b;
  std::size_t pos = 2;

  int number(const fs::path& path) {
    while (pos < b.size()) {
      if (b[pos] == '#') {
        while (pos < b.size() && b[pos] != '\n') ++pos;
      } else if (std::isspace(b[pos]) != 0) {
        ++pos;
      } else {
        break;
      }
    }
    if (pos >= b.size() || std::isdigit(b[pos]) == 0)
      throw ParseError("malformed PNM header in " + path.string());
    long v = 0;
    while (pos < b.size() && std::isdigit(b[pos]) != 0) {
      v = v * 10 + (b[pos++] - '0');
      if (v > 1 << 20) throw ParseError("PNM header value too large in " + path.string());
    }
    return static_cast<int>(v);
  }
};

ImageBuffer decode_pnm(const std::vector<unsigned char>& bytes, const fs::path& path) {
  const int channels = bytes[1] == '6' ? 3 : 1;
  PnmCursor cur{bytes};
  const int w = cur.number(path);
  const int h = cur.number(path);
  const int maxval = cur.number(path);
  if (w < 1 || h < 1) throw ParseError("empty PNM image in " + path.string());
  if (maxval != 255) throw FormatError("only 8-bit PNM (maxval 255) is supported: " + path.string());
  if (cur.pos >= bytes.size() || std::isspace(bytes[cur.pos]) == 0)
    throw ParseError("malformed PNM header in " + path.string());
  ++cur.pos;
  const std::size_t n = static_cast<std::size_t>(w) * h * channels;
  if (bytes.size() - cur.pos < n) throw ParseError("truncated PNM payload in " + path.string());
  ImageBuffer img(h, w, channels);
  for (std::size_t i = 0; i < n; ++i) img.data[i] = static_cast<float>(bytes[cur.pos + i]) / 255.0F;
  return img;
}

std::string lower_ext(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return ext;
}

void png_write_fn(png_structp png, png_bytep data, png_size_t n) {
  auto* out = static_cast<std::vector<unsigned char>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + n);
}

void png_flush_fn(png_structp) {}

void write_bytes(const std::vector<unsigned char>& bytes, const fs::path& path) {
  const fs::path parent = path.has_parent_path() ? path.parent_path() : fs::path(".");
  std::error_code ec;
  if (!fs::is_directory(parent, ec)) throw IoError("output directory does not exist: " + parent.string());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

ImageBuffer load_image(const fs::path& path) {
  const auto bytes = read_all(path);
  static constexpr std::array<unsigned char, 8> kPngSig = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  if (bytes.size() >= 8 && std::equal(kPngSig.begin(), kPngSig.end(), bytes.begin()))
    return decode_png(bytes, path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '6' || bytes[1] == '5'))
    return decode_pnm(bytes, path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] >= '1' && bytes[1] <= '4')
    throw FormatError("ASCII/bitmap PNM variants are not supported: " + path.string());
  if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF)
    throw FormatError("JPEG is not supported: " + path.string());
  if (bytes.size() >= 2 && bytes[0] == 'B' && bytes[1] == 'M')
    throw FormatError("BMP is not supported: " + path.string());
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), "GIF8", 4) == 0)
    throw FormatError("GIF is not supported: " + path.string());
  throw ParseError("not a PNG or PPM/PGM file: " + path.string());
}

std::vector<unsigned char> encode_png(const ImageBuffer& img) {
  if (img.channels != 1 && img.channels != 3)
    throw InvalidShape("encode_png: expected 1 or 3 channels");
  std::vector<unsigned char> pixels(img.data.size());
  std::transform(img.data.begin(), img.data.end(), pixels.begin(), quantize);
  std::vector<unsigned char> out;
  std::string err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
  png_infop info = png_create_info_struct(png);
  std::vector<png_bytep> rows(img.height);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG encoding failed: " + err);
  }
  png_set_write_fn(png, &out, png_write_fn, png_flush_fn);
  png_set_IHDR(png, info, img.width, img.height, 8,
               img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  for (int y = 0; y < img.height; ++y)
    rows[y] = pixels.data() + static_cast<std::size_t>(y) * img.width * img.channels;
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

void save_image(const ImageBuffer& img, const fs::path& path) {
  const std::string ext = lower_ext(path);
  std::vector<unsigned char> bytes;
  if (ext == ".png") {
    bytes = encode_png(img);
  } else if (ext == ".ppm" || ext == ".pgm") {
    const ImageBuffer src = ext == ".ppm" ? to_rgb(img) : (img.channels == 1 ? img : to_gray(img));
    const std::string header = std::string(ext == ".ppm" ? "P6" : "P5") + "\n" +
                               std::to_string(src.width) + " " + std::to_string(src.height) + "\n255\n";
    bytes.assign(header.begin(), header.end());
    for (const float v : src.data) bytes.push_back(quantize(v));
  } else {
    throw FormatError("unsupported output format '" + ext + "' for " + path.string());
  }
  write_bytes(bytes, path);
}

}  // namespace glpge
