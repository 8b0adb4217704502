#include "jdd/bayer.hpp"

#include "jdd/errors.hpp"

namespace jdd {

BayerMask make_mask(int height, int width) {
  require_even_dims(height, width);
  Image mask(height, width, 3);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) mask.at(y, x, bayer_channel(y, x)) = 1.0;
  return BayerMask(std::move(mask));
}

RawImage mosaic(const RgbImage& rgb) {
  Image raw(rgb.height(), rgb.width(), 1);
  for (int y = 0; y < rgb.height(); ++y)
    for (int x = 0; x < rgb.width(); ++x) raw.at(y, x) = rgb.at(y, x, bayer_channel(y, x));
  return RawImage(std::move(raw));
}

Image lift(const RawImage& raw) { return lift(raw.pixels()); }

Image lift(const Image& raw) {
  if (raw.channels() != 1) throw DimensionError("lift expects a single-channel array");
  require_even_dims(raw.height(), raw.width());
  Image out(raw.height(), raw.width(), 3);
  for (int y = 0; y < raw.height(); ++y)
    for (int x = 0; x < raw.width(); ++x) out.at(y, x, bayer_channel(y, x)) = raw.at(y, x);
  return out;
}

Image extract_observed(const Image& array, const BayerMask& mask) {
  if (!array.same_shape(mask.values())) {
    throw DimensionError("array and mask shapes differ");
  }
  Image out = array;
  auto dst = out.values();
  auto m = mask.values().values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] *= m[i];
  return out;
}

}  // namespace jdd
