#pragma once

#include <cstdint>
#include <string>

#include "jdd/image.hpp"

namespace jdd {

enum class NoiseFamily { gaussian, poisson };

/// Sensor noise model.
///
/// `intensity` is sigma on the 8-bit scale (divided by 255 internally) for
/// gaussian noise, and the photon-count multiplier lambda for poisson noise.
/// Noisy values are clipped to [0,1] unless `clip` is false.
struct NoiseSpec {
  NoiseFamily family = NoiseFamily::gaussian;
  double intensity = 30.0;
  std::uint64_t rng_seed = 0;
  bool clip = true;

  /// Throws ConfigError for non-positive or non-finite intensity.
  void validate() const;

  /// "gaussian:30" / "poisson:25" style label, without the seed.
  [[nodiscard]] std::string label() const;
};

[[nodiscard]] std::string to_string(NoiseFamily family);
/// Throws ConfigError for unknown names.
[[nodiscard]] NoiseFamily parse_noise_family(const std::string& name);

/// Unclipped additive noise produces values outside [0,1]; those results are
/// returned as a plain Image rather than a RawImage.
[[nodiscard]] Image add_gaussian_unclipped(const RawImage& raw, const NoiseSpec& spec);
[[nodiscard]] Image add_poisson_unclipped(const RawImage& raw, const NoiseSpec& spec);

/// clip(raw + N(0, (sigma/255)^2)). Throws ConfigError on the wrong family or
/// if spec.clip is false.
[[nodiscard]] RawImage add_gaussian(const RawImage& raw, const NoiseSpec& spec);

/// clip(Poisson(lambda * x) / lambda).
[[nodiscard]] RawImage add_poisson(const RawImage& raw, const NoiseSpec& spec);

/// Dispatches on spec.family.
[[nodiscard]] RawImage add_noise(const RawImage& raw, const NoiseSpec& spec);

struct NoisyObservation {
  Image raw;     ///< noisy single-channel RAW; leaves [0,1] only when clipping is off
  Image lifted;  ///< the same samples placed on the sparse 3-channel grid
};

/// mosaic -> noise -> lift. Honors spec.clip.
[[nodiscard]] NoisyObservation make_noisy_observation(const RgbImage& truth, const NoiseSpec& spec);

}  // namespace jdd
