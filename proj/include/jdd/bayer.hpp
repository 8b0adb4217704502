#pragma once

#include "jdd/image.hpp"

namespace jdd {

/// RGGB color filter array with red at (0,0).
///
/// Row parity selects the tile row and column parity the tile column:
///   (even, even) -> R, (even, odd) -> G, (odd, even) -> G, (odd, odd) -> B.
[[nodiscard]] constexpr int bayer_channel(int y, int x) noexcept {
  return (y & 1) + (x & 1);
}

/// Binary H x W x 3 indicator of the observed channel at every pixel.
class BayerMask {
 public:
  BayerMask() = default;

  [[nodiscard]] const Image& values() const noexcept { return mask_; }
  [[nodiscard]] int height() const noexcept { return mask_.height(); }
  [[nodiscard]] int width() const noexcept { return mask_.width(); }
  [[nodiscard]] double at(int y, int x, int c) const noexcept { return mask_.at(y, x, c); }

 private:
  friend BayerMask make_mask(int height, int width);
  explicit BayerMask(Image mask) : mask_(std::move(mask)) {}
  Image mask_;
};

/// Throws DimensionError for odd or non-positive dimensions.
[[nodiscard]] BayerMask make_mask(int height, int width);

/// Samples each pixel's RGGB channel. No interpolation.
[[nodiscard]] RawImage mosaic(const RgbImage& rgb);

/// Places RAW samples at their Bayer channel in a sparse 3-channel array; zeros elsewhere.
[[nodiscard]] Image lift(const RawImage& raw);
/// Same for a 1-channel array whose values need not lie in [0,1].
[[nodiscard]] Image lift(const Image& raw);

/// Elementwise product with the mask. Throws DimensionError on shape mismatch.
[[nodiscard]] Image extract_observed(const Image& array, const BayerMask& mask);

}  // namespace jdd
