#pragma once

#include <filesystem>
#include <vector>

#include "mvrecon/types.hpp"

namespace mvr {

/// Row-major raster of doubles, nominally in [0, 1]. One channel for masks
/// and greyscale, three for colour; sample (x, y, c) lives at
/// data[(y * width + x) * channels + c].
struct Image {
  int width = 0, height = 0, channels = 0;
  std::vector<double> data;

  Image() = default;
  Image(int width, int height, int channels, double fill = 0.0);

  double& at(int x, int y, int c) { return data[index(x, y, c)]; }
  double at(int x, int y, int c) const { return data[index(x, y, c)]; }
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  bool same_shape(const Image& other) const {
    return width == other.width && height == other.height && channels == other.channels;
  }
  /// Mean absolute difference against an image of the same shape.
  double mean_abs_diff(const Image& other) const;
};

/// 8-bit PNG I/O. Reading expands palettes, narrows 16-bit samples, and drops
/// alpha; grey files come back with one channel, colour with three. Writing
/// clamps to [0, 1] and rounds to the nearest 8-bit level.
Image load_png(const std::filesystem::path& path);
void save_png(const std::filesystem::path& path, const Image& image);

/// 2x2 box-filter downsample; odd tails average the pixels that remain in the
/// block, so sizes go (w, h) -> (ceil(w/2), ceil(h/2)).
Image downsample2(const Image& image);

}  // namespace mvr
