#pragma once

#include <torch/torch.h>

#include "jdd/bayer.hpp"
#include "jdd/image.hpp"

namespace jdd {

/// H x W x C image -> 1 x C x H x W tensor of the given dtype.
[[nodiscard]] torch::Tensor to_tensor(const Image& image, torch::Dtype dtype = torch::kFloat32);
[[nodiscard]] torch::Tensor to_tensor(const BayerMask& mask, torch::Dtype dtype = torch::kFloat32);

/// 1 x C x H x W tensor -> H x W x C image (values copied as double).
[[nodiscard]] Image to_image(const torch::Tensor& tensor);

}  // namespace jdd
