#include "jdd/dip_model.hpp"

#include <cmath>
#include <string>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include "jdd/errors.hpp"
#include "jdd/rng.hpp"

namespace jdd {

std::string to_string(SeedDistribution distribution) {
  return distribution == SeedDistribution::normal ? "normal" : "uniform";
}

SeedTensor make_seed(int channels, int height, int width, const SeedSpec& spec,
                     std::uint64_t rng_seed) {
  if (channels <= 0 || height <= 0 || width <= 0) {
    throw DimensionError("seed dimensions must be positive");
  }
  if (!(spec.scale > 0.0) || !std::isfinite(spec.scale)) {
    throw ConfigError("seed scale must be positive");
  }
  auto data = torch::empty({1, channels, height, width}, torch::kFloat32);
  auto* out = data.data_ptr<float>();
  const auto n = data.numel();
  Rng rng(rng_seed);
  if (spec.distribution == SeedDistribution::normal) {
    boost::random::normal_distribution<double> dist(0.0, spec.scale);
    for (std::int64_t i = 0; i < n; ++i) out[i] = static_cast<float>(dist(rng));
  } else {
    boost::random::uniform_real_distribution<double> dist(0.0, spec.scale);
    for (std::int64_t i = 0; i < n; ++i) out[i] = static_cast<float>(dist(rng));
  }
  return {std::move(data), spec, rng_seed};
}

void Architecture::validate() const {
  if (input_channels <= 0) throw ConfigError("input_channels must be positive");
  if (channels_down.empty()) throw ConfigError("architecture needs at least one scale");
  if (channels_up.size() != channels_down.size() || channels_skip.size() != channels_down.size()) {
    throw ConfigError("channels_down, channels_up and channels_skip must have equal length");
  }
  for (std::size_t i = 0; i < channels_down.size(); ++i) {
    if (channels_down[i] <= 0 || channels_up[i] <= 0 || channels_skip[i] < 0) {
      throw ConfigError("channel widths must be positive (skip widths non-negative)");
    }
  }
  for (int f : {filter_down, filter_up, filter_skip}) {
    if (f <= 0 || f % 2 == 0) throw ConfigError("filter sizes must be odd and positive");
  }
  if (!(leaky_slope >= 0.0)) throw ConfigError("leaky_slope must be non-negative");
}

Architecture Architecture::reference() { return Architecture{}; }

Architecture Architecture::uniform(int scales, int width, int skip, int input_channels) {
  Architecture a;
  a.input_channels = input_channels;
  a.channels_down.assign(static_cast<std::size_t>(scales), width);
  a.channels_up.assign(static_cast<std::size_t>(scales), width);
  a.channels_skip.assign(static_cast<std::size_t>(scales), skip);
  return a;
}

Architecture Architecture::desk() { return uniform(5, 16, 4, 32); }

namespace {

torch::nn::Sequential conv_block(int in, int out, int filter, int stride, double slope) {
  torch::nn::Sequential block;
  block->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, filter)
                                         .stride(stride)
                                         .padding(filter / 2)
                                         .padding_mode(torch::kReflect)));
  block->push_back(torch::nn::BatchNorm2d(out));
  block->push_back(torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(slope)));
  return block;
}

}  // namespace

DipNetworkImpl::DipNetworkImpl(int out_channels, Architecture architecture)
    : out_channels_(out_channels), architecture_(std::move(architecture)) {
  architecture_.validate();
  const auto& a = architecture_;
  const auto scales = static_cast<std::size_t>(a.scales());
  int input_depth = a.input_channels;
  for (std::size_t i = 0; i < scales; ++i) {
    Level level;
    const std::string tag = std::to_string(i);
    if (a.channels_skip[i] > 0) {
      level.skip = register_module(
          "skip" + tag, conv_block(input_depth, a.channels_skip[i], a.filter_skip, 1, a.leaky_slope));
    }
    level.down = torch::nn::Sequential();
    level.down->extend(*conv_block(input_depth, a.channels_down[i], a.filter_down, 2, a.leaky_slope));
    level.down->extend(
        *conv_block(a.channels_down[i], a.channels_down[i], a.filter_down, 1, a.leaky_slope));
    register_module("down" + tag, level.down);

    const int deeper_depth = i + 1 < scales ? a.channels_up[i + 1] : a.channels_down[i];
    const int merged = a.channels_skip[i] + deeper_depth;
    level.merge_norm = register_module("merge" + tag, torch::nn::BatchNorm2d(merged));
    level.up = conv_block(merged, a.channels_up[i], a.filter_up, 1, a.leaky_slope);
    if (a.up_1x1) {
      level.up->extend(*conv_block(a.channels_up[i], a.channels_up[i], 1, 1, a.leaky_slope));
    }
    register_module("up" + tag, level.up);

    levels_.push_back(std::move(level));
    input_depth = a.channels_down[i];
  }
  head_ = register_module("head", torch::nn::Conv2d(torch::nn::Conv2dOptions(
                                                        a.channels_up[0], out_channels_, 1)));
}

torch::Tensor DipNetworkImpl::forward_level(const torch::Tensor& x, std::size_t level) {
  auto& l = levels_[level];
  auto deeper = l.down->forward(x);
  if (level + 1 < levels_.size()) deeper = forward_level(deeper, level + 1);
  deeper = torch::nn::functional::interpolate(
      deeper, torch::nn::functional::InterpolateFuncOptions()
                  .size(std::vector<std::int64_t>{x.size(2), x.size(3)})
                  .mode(torch::kBilinear)
                  .align_corners(false));
  auto merged = l.skip ? torch::cat({l.skip->forward(x), deeper}, 1) : deeper;
  return l.up->forward(l.merge_norm->forward(merged));
}

torch::Tensor DipNetworkImpl::forward(const torch::Tensor& seed) {
  if (seed.dim() != 4 || seed.size(0) != 1 || seed.size(1) != architecture_.input_channels) {
    throw DimensionError("seed must be 1 x " + std::to_string(architecture_.input_channels) +
                         " x H x W");
  }
  const std::int64_t factor = std::int64_t{1} << architecture_.scales();
  if (seed.size(2) % factor != 0 || seed.size(3) % factor != 0) {
    throw DimensionError("seed spatial size " + std::to_string(seed.size(2)) + "x" +
                         std::to_string(seed.size(3)) + " is not divisible by " +
                         std::to_string(factor));
  }
  return torch::sigmoid(head_->forward(forward_level(seed, 0)));
}

std::int64_t DipNetworkImpl::parameter_count() const {
  std::int64_t total = 0;
  for (const auto& p : parameters()) total += p.numel();
  return total;
}

DipNetwork build_network(int out_channels, const Architecture& architecture,
                         std::uint64_t rng_seed) {
  if (out_channels != 1 && out_channels != 3) {
    throw ConfigError("out_channels must be 1 or 3, got " + std::to_string(out_channels));
  }
  DipNetwork net(out_channels, architecture);

  Rng rng(rng_seed);
  torch::NoGradGuard no_grad;
  for (auto& module : net->modules(/*include_self=*/false)) {
    auto* conv = module->as<torch::nn::Conv2d>();
    if (conv == nullptr) continue;
    const auto& w = conv->weight;
    const double fan_in = static_cast<double>(w.size(1) * w.size(2) * w.size(3));
    const double bound = 1.0 / std::sqrt(fan_in);
    boost::random::uniform_real_distribution<double> dist(-bound, bound);
    for (auto* t : {&conv->weight, &conv->bias}) {
      if (!t->defined()) continue;
      auto values = torch::empty_like(*t);
      auto* out = values.data_ptr<float>();
      for (std::int64_t i = 0; i < values.numel(); ++i) out[i] = static_cast<float>(dist(rng));
      t->copy_(values);
    }
  }
  return net;
}

torch::Tensor forward(DipNetwork& net, const SeedTensor& seed) { return net->forward(seed.data); }

}  // namespace jdd
