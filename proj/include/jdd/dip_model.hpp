#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <torch/torch.h>

namespace jdd {

enum class SeedDistribution { normal, uniform };

[[nodiscard]] std::string to_string(SeedDistribution distribution);

/// Random input code for a network.
///
/// For `normal` the scale is the standard deviation (0.1 reads N(0, 0.01) as
/// a variance); for `uniform` values are drawn from U(0, scale).
struct SeedSpec {
  SeedDistribution distribution = SeedDistribution::normal;
  double scale = 0.1;
};

/// Fixed network input, sampled once per run.
struct SeedTensor {
  torch::Tensor data;  ///< 1 x C x H x W, float32
  SeedSpec spec;
  std::uint64_t rng_seed = 0;
};

/// Throws DimensionError for non-positive dimensions and ConfigError for a
/// non-positive scale.
[[nodiscard]] SeedTensor make_seed(int channels, int height, int width, const SeedSpec& spec,
                                   std::uint64_t rng_seed);

/// Hourglass encoder-decoder with skip connections.
///
/// Scale i downsamples with a strided convolution, refines, recurses into
/// scale i+1, upsamples bilinearly, concatenates the skip branch and decodes.
/// All convolutions use reflection padding and are followed by batch
/// normalization and a leaky rectifier. The head is a 1x1 convolution and a
/// sigmoid.
struct Architecture {
  int input_channels = 32;
  std::vector<int> channels_down{128, 128, 128, 128, 128};
  std::vector<int> channels_up{128, 128, 128, 128, 128};
  std::vector<int> channels_skip{4, 4, 4, 4, 4};
  int filter_down = 3;
  int filter_up = 3;
  int filter_skip = 1;
  bool up_1x1 = true;
  double leaky_slope = 0.2;

  [[nodiscard]] int scales() const noexcept { return static_cast<int>(channels_down.size()); }

  /// Throws ConfigError for empty or mismatched channel lists, even filter
  /// sizes or non-positive widths.
  void validate() const;

  /// Reference configuration: 5 scales of 128 channels with 4-channel skips.
  [[nodiscard]] static Architecture reference();
  /// Narrow configuration for single-core desk runs.
  [[nodiscard]] static Architecture desk();
  /// Uniform `scales` x `width` network with `skip`-channel skips.
  [[nodiscard]] static Architecture uniform(int scales, int width, int skip, int input_channels);

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

class DipNetworkImpl : public torch::nn::Module {
 public:
  DipNetworkImpl(int out_channels, Architecture architecture);

  /// 1 x C_in x H x W -> 1 x out_channels x H x W in [0,1]. Throws
  /// DimensionError unless H and W are divisible by 2^scales and C_in
  /// matches the architecture.
  torch::Tensor forward(const torch::Tensor& seed);

  [[nodiscard]] int out_channels() const noexcept { return out_channels_; }
  [[nodiscard]] const Architecture& architecture() const noexcept { return architecture_; }
  [[nodiscard]] std::int64_t parameter_count() const;

 private:
  struct Level {
    torch::nn::Sequential skip{nullptr};
    torch::nn::Sequential down{nullptr};
    torch::nn::BatchNorm2d merge_norm{nullptr};
    torch::nn::Sequential up{nullptr};
  };

  torch::Tensor forward_level(const torch::Tensor& x, std::size_t level);

  int out_channels_;
  Architecture architecture_;
  std::vector<Level> levels_;
  torch::nn::Conv2d head_{nullptr};
};

TORCH_MODULE(DipNetwork);

/// Builds a network with deterministic parameter initialization: convolution
/// weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)) drawn from a
/// stream seeded by `rng_seed`, normalization scale 1 and shift 0.
/// Throws ConfigError unless out_channels is 1 or 3.
[[nodiscard]] DipNetwork build_network(int out_channels, const Architecture& architecture,
                                       std::uint64_t rng_seed);

[[nodiscard]] torch::Tensor forward(DipNetwork& net, const SeedTensor& seed);

}  // namespace jdd
