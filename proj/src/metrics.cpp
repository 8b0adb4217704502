#include "jdd/metrics.hpp"

#include <array>
#include <cmath>
#include <vector>

#include "jdd/errors.hpp"

namespace jdd {

namespace {

constexpr int kWindow = 11;
constexpr int kRadius = kWindow / 2;
constexpr double kSigma = 1.5;
constexpr double kC1 = (0.01 * 1.0) * (0.01 * 1.0);
constexpr double kC2 = (0.03 * 1.0) * (0.03 * 1.0);

std::array<double, kWindow> gaussian_taps() {
  std::array<double, kWindow> taps{};
  double total = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kRadius;
    taps[i] = std::exp(-(d * d) / (2.0 * kSigma * kSigma));
    total += taps[i];
  }
  for (double& t : taps) t /= total;
  return taps;
}

void require_same_shape(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw DimensionError("metric inputs differ in shape");
}

// Valid-mode separable filtering of one channel: output is
// (h - kWindow + 1) x (w - kWindow + 1).
std::vector<double> filter_valid(const std::vector<double>& plane, int h, int w,
                                 const std::array<double, kWindow>& taps) {
  const int oh = h - kWindow + 1;
  const int ow = w - kWindow + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) acc += taps[k] * plane[static_cast<std::size_t>(y) * w + x + k];
      rows[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kWindow; ++k) acc += taps[k] * rows[static_cast<std::size_t>(y + k) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  return out;
}

double ssim_channel(const Image& a, const Image& b, int c, const std::array<double, kWindow>& taps) {
  const int h = a.height();
  const int w = a.width();
  const std::size_t n = static_cast<std::size_t>(h) * w;
  std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
  for (int r = 0; r < h; ++r)
    for (int col = 0; col < w; ++col) {
      const std::size_t i = static_cast<std::size_t>(r) * w + col;
      x[i] = a.at(r, col, c);
      y[i] = b.at(r, col, c);
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
  const auto mx = filter_valid(x, h, w, taps);
  const auto my = filter_valid(y, h, w, taps);
  const auto mxx = filter_valid(xx, h, w, taps);
  const auto myy = filter_valid(yy, h, w, taps);
  const auto mxy = filter_valid(xy, h, w, taps);

  double total = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = mxx[i] - mx[i] * mx[i];
    const double vy = myy[i] - my[i] * my[i];
    const double cov = mxy[i] - mx[i] * my[i];
    total += ((2.0 * mx[i] * my[i] + kC1) * (2.0 * cov + kC2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + kC1) * (vx + vy + kC2));
  }
  return total / static_cast<double>(mx.size());
}

}  // namespace

double psnr(const Image& truth, const Image& estimate) {
  require_same_shape(truth, estimate);
  auto t = truth.values();
  auto e = estimate.values();
  double sse = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double d = t[i] - e[i];
    sse += d * d;
  }
  if (sse == 0.0) return kPsnrIdentical;
  return 10.0 * std::log10(static_cast<double>(t.size()) / sse);
}

double psnr(const RgbImage& truth, const RgbImage& estimate) {
  return psnr(truth.pixels(), estimate.pixels());
}

double ssim(const Image& truth, const Image& estimate) {
  require_same_shape(truth, estimate);
  if (truth.height() < kWindow || truth.width() < kWindow) {
    throw DimensionError("SSIM needs images of at least 11x11 pixels");
  }
  const auto taps = gaussian_taps();
  double total = 0.0;
  for (int c = 0; c < truth.channels(); ++c) total += ssim_channel(truth, estimate, c, taps);
  return total / truth.channels();
}

double ssim(const RgbImage& truth, const RgbImage& estimate) {
  return ssim(truth.pixels(), estimate.pixels());
}

MetricResult evaluate(const RgbImage& truth, const RgbImage& estimate) {
  return {psnr(truth, estimate), ssim(truth, estimate)};
}

}  // namespace jdd
