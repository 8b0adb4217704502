#include "jdd/image.hpp"

#include <cmath>
#include <string>

#include "jdd/errors.hpp"

namespace jdd {

Image::Image(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels) {
  if (height <= 0 || width <= 0 || channels <= 0) {
    throw DimensionError("image dimensions must be positive");
  }
  data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

void require_even_dims(int height, int width) {
  if (height <= 0 || width <= 0 || height % 2 != 0 || width % 2 != 0) {
    throw DimensionError("image dimensions must be positive and even, got " +
                         std::to_string(height) + "x" + std::to_string(width));
  }
}

namespace {

void require_unit_range(const Image& image) {
  for (double v : image.values()) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw NumericError("pixel values must be finite and within [0,1]");
    }
  }
}

}  // namespace

RgbImage::RgbImage(Image pixels) : pixels_(std::move(pixels)) {
  if (pixels_.channels() != 3) throw DimensionError("RgbImage needs 3 channels");
  require_even_dims(pixels_.height(), pixels_.width());
  require_unit_range(pixels_);
}

RawImage::RawImage(Image pixels) : pixels_(std::move(pixels)) {
  if (pixels_.channels() != 1) throw DimensionError("RawImage needs 1 channel");
  require_even_dims(pixels_.height(), pixels_.width());
  require_unit_range(pixels_);
}

Image center_crop(const Image& image, int height, int width) {
  if (height <= 0 || width <= 0 || height > image.height() || width > image.width()) {
    throw DimensionError("crop " + std::to_string(height) + "x" + std::to_string(width) +
                         " does not fit image " + std::to_string(image.height()) + "x" +
                         std::to_string(image.width()));
  }
  const int top = (image.height() - height) / 2;
  const int left = (image.width() - width) / 2;
  Image out(height, width, image.channels());
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < image.channels(); ++c) out.at(y, x, c) = image.at(top + y, left + x, c);
  return out;
}

}  // namespace jdd
