#include "mvrecon/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>

namespace mvr {

Image::Image(int width_, int height_, int channels_, double fill) {
  if (width_ < 1 || height_ < 1) throw config_error("image size must be positive");
  if (channels_ != 1 && channels_ != 3) throw config_error("image must have 1 or 3 channels");
  width = width_;
  height = height_;
  channels = channels_;
  data.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

double Image::mean_abs_diff(const Image& other) const {
  if (!same_shape(other)) throw numeric_error("image shapes differ");
  double sum = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) sum += std::abs(data[i] - other.data[i]);
  return sum / static_cast<double>(data.size());
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// Pixel rows live behind a pointer established before setjmp: locals mutated
// between setjmp and longjmp have indeterminate values afterwards, heap state
// does not.
struct RowBuffers {
  std::vector<png_byte> raw;
  std::vector<png_bytep> rows;
};

}  // namespace

Image load_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.string().c_str(), "rb"));
  if (!file) throw io_error("cannot open " + path.string());

  png_byte header[8];
  if (std::fread(header, 1, 8, file.get()) != 8 || png_sig_cmp(header, 0, 8) != 0)
    throw io_error(path.string() + " is not a PNG file");

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw io_error("png reader allocation failed");
  }
  const auto buffers = std::make_unique<RowBuffers>();
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw io_error("failed to decode " + path.string());
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  // normalise everything to 8-bit grey or rgb
  const png_byte color_type = png_get_color_type(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int channels = static_cast<int>(png_get_channels(png, info));
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw io_error(path.string() + ": unsupported channel count after conversion");
  }

  const std::size_t stride = png_get_rowbytes(png, info);
  buffers->raw.resize(stride * height);
  buffers->rows.resize(height);
  for (int y = 0; y < height; ++y) buffers->rows[y] = buffers->raw.data() + stride * y;
  png_read_image(png, buffers->rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Image image(width, height, channels);
  for (int y = 0; y < height; ++y) {
    const png_byte* src = buffers->raw.data() + stride * y;
    double* dst = image.data.data() + image.index(0, y, 0);
    for (std::size_t i = 0; i < static_cast<std::size_t>(width) * channels; ++i)
      dst[i] = src[i] / 255.0;
  }
  return image;
}

void save_png(const std::filesystem::path& path, const Image& image) {
  if (image.width < 1 || image.height < 1 || (image.channels != 1 && image.channels != 3))
    throw config_error("cannot save an empty or oddly-shaped image");
  FilePtr file(std::fopen(path.string().c_str(), "wb"));
  if (!file) throw io_error("cannot write " + path.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw io_error("png writer allocation failed");
  }
  const auto buffers = std::make_unique<RowBuffers>();
  // quantize before setjmp so the error path never sees half-built buffers
  const std::size_t stride = static_cast<std::size_t>(image.width) * image.channels;
  buffers->raw.resize(stride * image.height);
  buffers->rows.resize(image.height);
  for (int y = 0; y < image.height; ++y) {
    png_byte* dst = buffers->raw.data() + stride * y;
    const double* src = image.data.data() + image.index(0, y, 0);
    for (std::size_t i = 0; i < stride; ++i) {
      const double v = std::clamp(src[i], 0.0, 1.0);
      dst[i] = static_cast<png_byte>(std::lround(v * 255.0));
    }
    buffers->rows[y] = dst;
  }

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw io_error("failed to encode " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, image.width, image.height, 8,
               image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_rows(png, info, buffers->rows.data());
  png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image downsample2(const Image& image) {
  if (image.width < 1 || image.height < 1) throw numeric_error("cannot downsample empty image");
  const int out_w = (image.width + 1) / 2;
  const int out_h = (image.height + 1) / 2;
  Image out(out_w, out_h, image.channels);
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      const int x1 = std::min(2 * x + 1, image.width - 1);
      const int y1 = std::min(2 * y + 1, image.height - 1);
      for (int c = 0; c < image.channels; ++c) {
        double sum = 0.0;
        int count = 0;
        for (int yy = 2 * y; yy <= y1; ++yy)
          for (int xx = 2 * x; xx <= x1; ++xx) {
            sum += image.at(xx, yy, c);
            ++count;
          }
        out.at(x, y, c) = sum / count;
      }
    }
  }
  return out;
}

}  // namespace mvr
