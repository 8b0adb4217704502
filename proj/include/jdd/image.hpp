#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace jdd {

/// Dense H x W x C array of doubles stored row-major with interleaved channels.
class Image {
 public:
  Image() = default;
  Image(int height, int width, int channels, double fill = 0.0);

  [[nodiscard]] int height() const noexcept { return height_; }
  [[nodiscard]] int width() const noexcept { return width_; }
  [[nodiscard]] int channels() const noexcept { return channels_; }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }

  [[nodiscard]] double& at(int y, int x, int c = 0) noexcept {
    return data_[index(y, x, c)];
  }
  [[nodiscard]] double at(int y, int x, int c = 0) const noexcept {
    return data_[index(y, x, c)];
  }

  [[nodiscard]] std::span<double> values() noexcept { return data_; }
  [[nodiscard]] std::span<const double> values() const noexcept { return data_; }

  [[nodiscard]] bool same_shape(const Image& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  [[nodiscard]] std::size_t index(int y, int x, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// Full-color image with values in [0,1] and even height/width.
class RgbImage {
 public:
  RgbImage() = default;
  /// Throws DimensionError if the array is not 3-channel with even positive
  /// dimensions, and NumericError if any value is non-finite or outside [0,1].
  explicit RgbImage(Image pixels);

  [[nodiscard]] const Image& pixels() const noexcept { return pixels_; }
  [[nodiscard]] int height() const noexcept { return pixels_.height(); }
  [[nodiscard]] int width() const noexcept { return pixels_.width(); }
  [[nodiscard]] double at(int y, int x, int c) const noexcept { return pixels_.at(y, x, c); }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  Image pixels_;
};

/// Single-channel Bayer sensor readout with values in [0,1] and even height/width.
class RawImage {
 public:
  RawImage() = default;
  explicit RawImage(Image pixels);

  [[nodiscard]] const Image& pixels() const noexcept { return pixels_; }
  [[nodiscard]] int height() const noexcept { return pixels_.height(); }
  [[nodiscard]] int width() const noexcept { return pixels_.width(); }
  [[nodiscard]] double at(int y, int x) const noexcept { return pixels_.at(y, x, 0); }

  friend bool operator==(const RawImage&, const RawImage&) = default;

 private:
  Image pixels_;
};

/// Throws DimensionError unless both dimensions are positive and even.
void require_even_dims(int height, int width);

/// Center crop to the given size. Throws DimensionError if larger than the image.
[[nodiscard]] Image center_crop(const Image& image, int height, int width);

}  // namespace jdd
