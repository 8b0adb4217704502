#include "jdd/noise.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

#include "jdd/bayer.hpp"
#include "jdd/errors.hpp"
#include "jdd/rng.hpp"

namespace jdd {

void NoiseSpec::validate() const {
  if (!std::isfinite(intensity) || intensity <= 0.0) {
    throw ConfigError("noise intensity must be positive, got " + std::to_string(intensity));
  }
}

std::string NoiseSpec::label() const {
  std::ostringstream out;
  out << to_string(family) << ':' << intensity;
  return out.str();
}

std::string to_string(NoiseFamily family) {
  return family == NoiseFamily::gaussian ? "gaussian" : "poisson";
}

NoiseFamily parse_noise_family(const std::string& name) {
  if (name == "gaussian") return NoiseFamily::gaussian;
  if (name == "poisson") return NoiseFamily::poisson;
  throw ConfigError("unknown noise family '" + name + "'");
}

namespace {

void require_family(const NoiseSpec& spec, NoiseFamily family) {
  if (spec.family != family) {
    throw ConfigError("noise spec family is " + to_string(spec.family) + ", expected " +
                      to_string(family));
  }
  spec.validate();
}

RawImage clipped(Image noisy) {
  for (double& v : noisy.values()) v = std::clamp(v, 0.0, 1.0);
  return RawImage(std::move(noisy));
}

}  // namespace

Image add_gaussian_unclipped(const RawImage& raw, const NoiseSpec& spec) {
  require_family(spec, NoiseFamily::gaussian);
  Rng rng(spec.rng_seed);
  boost::random::normal_distribution<double> normal(0.0, spec.intensity / 255.0);
  Image out = raw.pixels();
  for (double& v : out.values()) v += normal(rng);
  return out;
}

Image add_poisson_unclipped(const RawImage& raw, const NoiseSpec& spec) {
  require_family(spec, NoiseFamily::poisson);
  Rng rng(spec.rng_seed);
  const double lambda = spec.intensity;
  Image out = raw.pixels();
  for (double& v : out.values()) {
    const double rate = lambda * v;
    // boost's poisson_distribution requires a strictly positive mean.
    if (rate <= 0.0) {
      v = 0.0;
      continue;
    }
    boost::random::poisson_distribution<std::int64_t, double> poisson(rate);
    v = static_cast<double>(poisson(rng)) / lambda;
  }
  return out;
}

RawImage add_gaussian(const RawImage& raw, const NoiseSpec& spec) {
  if (!spec.clip) throw ConfigError("unclipped noise does not yield a RawImage");
  return clipped(add_gaussian_unclipped(raw, spec));
}

RawImage add_poisson(const RawImage& raw, const NoiseSpec& spec) {
  if (!spec.clip) throw ConfigError("unclipped noise does not yield a RawImage");
  return clipped(add_poisson_unclipped(raw, spec));
}

RawImage add_noise(const RawImage& raw, const NoiseSpec& spec) {
  return spec.family == NoiseFamily::gaussian ? add_gaussian(raw, spec) : add_poisson(raw, spec);
}

NoisyObservation make_noisy_observation(const RgbImage& truth, const NoiseSpec& spec) {
  const RawImage clean = mosaic(truth);
  Image noisy = !spec.clip ? spec.family == NoiseFamily::gaussian
                                 ? add_gaussian_unclipped(clean, spec)
                                 : add_poisson_unclipped(clean, spec)
                           : add_noise(clean, spec).pixels();
  Image lifted = lift(noisy);
  return {std::move(noisy), std::move(lifted)};
}

}  // namespace jdd
