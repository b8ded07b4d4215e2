#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "flyswarm/error.hpp"
#include "flyswarm/geometry.hpp"

namespace flyswarm {

/// Row-major 8-bit raster with 1 (grey) or 3 (RGB) interleaved channels.
class Image {
 public:
  Image() = default;

  Image(int width, int height, int channels, std::uint8_t fill = 0)
      : width_(width), height_(height), channels_(channels) {
    check_shape();
    samples_.assign(sample_count(), fill);
  }

  Image(int width, int height, int channels, std::vector<std::uint8_t> samples)
      : width_(width), height_(height), channels_(channels), samples_(std::move(samples)) {
    check_shape();
    if (samples_.size() != sample_count()) throw InvalidInput("image sample count does not match its shape");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return samples_.empty(); }

  std::span<const std::uint8_t> samples() const { return samples_; }
  std::span<std::uint8_t> samples() { return samples_; }

  std::uint8_t at(int col, int row, int channel = 0) const { return samples_[index(col, row, channel)]; }
  std::uint8_t& at(int col, int row, int channel = 0) { return samples_[index(col, row, channel)]; }

  bool contains(int col, int row) const { return col >= 0 && row >= 0 && col < width_ && row < height_; }

  /// Grey value, or Rec.601 luma for colour images.
  double luminance(int col, int row) const {
    const std::size_t i = index(col, row, 0);
    if (channels_ == 1) return samples_[i];
    return 0.299 * samples_[i] + 0.587 * samples_[i + 1] + 0.114 * samples_[i + 2];
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  void check_shape() const {
    if (width_ <= 0 || height_ <= 0) throw InvalidInput("image dimensions must be positive");
    if (channels_ != 1 && channels_ != 3) throw InvalidInput("image must have 1 or 3 channels");
  }
  std::size_t sample_count() const {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_) * static_cast<std::size_t>(channels_);
  }
  std::size_t index(int col, int row, int channel) const {
    return (static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(col)) *
               static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(channel);
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> samples_;
};

/// Per-pixel Sobel gradient magnitude. Border pixels are 0.
class GradientMap {
 public:
  GradientMap() = default;
  GradientMap(int width, int height) : width_(width), height_(height), norms_(static_cast<std::size_t>(width) * height, 0.0) {}

  int width() const { return width_; }
  int height() const { return height_; }
  double at(int col, int row) const { return norms_[static_cast<std::size_t>(row) * width_ + col]; }
  double& at(int col, int row) { return norms_[static_cast<std::size_t>(row) * width_ + col]; }
  std::span<const double> norms() const { return norms_; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> norms_;
};

/// Euclidean norm of the 3x3 Sobel responses on the luminance plane.
inline GradientMap sobel_norm_map(const Image& img) {
  if (img.width() < 3 || img.height() < 3) throw InvalidInput("sobel_norm_map: image must be at least 3x3");
  const int w = img.width();
  const int h = img.height();

  // Grey input stays integral so the result is exact and shift-invariant.
  std::vector<double> lum(static_cast<std::size_t>(w) * h);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) lum[static_cast<std::size_t>(r) * w + c] = img.luminance(c, r);

  GradientMap out(w, h);
  for (int r = 1; r < h - 1; ++r) {
    const double* up = &lum[static_cast<std::size_t>(r - 1) * w];
    const double* mid = &lum[static_cast<std::size_t>(r) * w];
    const double* down = &lum[static_cast<std::size_t>(r + 1) * w];
    for (int c = 1; c < w - 1; ++c) {
      const double gx = (up[c + 1] + 2.0 * mid[c + 1] + down[c + 1]) - (up[c - 1] + 2.0 * mid[c - 1] + down[c - 1]);
      const double gy = (down[c - 1] + 2.0 * down[c] + down[c + 1]) - (up[c - 1] + 2.0 * up[c] + up[c + 1]);
      out.at(c, r) = std::sqrt(gx * gx + gy * gy);
    }
  }
  return out;
}

/// Sum over channels and the (2r+1)^2 window of squared intensity
/// differences between the window centred on `pl` in `left` and the one
/// centred on `pr` in `right`.
inline double neighborhood_ssd(const Image& left, const Image& right, Pixel pl, Pixel pr, int radius) {
  if (radius < 0) throw PreconditionViolation("neighborhood_ssd: negative radius");
  if (left.channels() != right.channels()) throw PreconditionViolation("neighborhood_ssd: channel count mismatch");
  auto window_inside = [radius](const Image& img, Pixel p) {
    return p.col - radius >= 0 && p.row - radius >= 0 && p.col + radius < img.width() && p.row + radius < img.height();
  };
  if (!window_inside(left, pl) || !window_inside(right, pr))
    throw PreconditionViolation("neighborhood_ssd: window out of bounds");

  const auto ls = left.samples();
  const auto rs = right.samples();
  const int ch = left.channels();
  const std::size_t span = static_cast<std::size_t>(2 * radius + 1) * ch;
  std::int64_t sum = 0;
  for (int j = -radius; j <= radius; ++j) {
    const std::size_t li = (static_cast<std::size_t>(pl.row + j) * left.width() + (pl.col - radius)) * ch;
    const std::size_t ri = (static_cast<std::size_t>(pr.row + j) * right.width() + (pr.col - radius)) * ch;
    for (std::size_t k = 0; k < span; ++k) {
      const int d = static_cast<int>(ls[li + k]) - static_cast<int>(rs[ri + k]);
      sum += d * d;
    }
  }
  return static_cast<double>(sum);
}

}  // namespace flyswarm
