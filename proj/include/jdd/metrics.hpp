#pragma once

#include <limits>

#include "jdd/image.hpp"

namespace jdd {

/// PSNR of identical images.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

struct MetricResult {
  double psnr = 0.0;  ///< dB, peak 1.0
  double ssim = 0.0;
  friend bool operator==(const MetricResult&, const MetricResult&) = default;
};

/// 10 log10(1 / MSE) over every entry, peak 1.0. Identical inputs return
/// kPsnrIdentical. Throws DimensionError on shape mismatch.
[[nodiscard]] double psnr(const Image& truth, const Image& estimate);
[[nodiscard]] double psnr(const RgbImage& truth, const RgbImage& estimate);

/// Structural similarity with an 11x11 Gaussian window (sigma 1.5),
/// K1 = 0.01, K2 = 0.03 and data range 1.0. The SSIM map is evaluated at
/// every window that lies fully inside the image and averaged; multi-channel
/// inputs are scored per channel and the channel scores averaged.
/// Throws DimensionError if either side is smaller than the window.
[[nodiscard]] double ssim(const Image& truth, const Image& estimate);
[[nodiscard]] double ssim(const RgbImage& truth, const RgbImage& estimate);

[[nodiscard]] MetricResult evaluate(const RgbImage& truth, const RgbImage& estimate);

}  // namespace jdd
