#include "jdd/tensor_image.hpp"

#include "jdd/errors.hpp"

namespace jdd {

torch::Tensor to_tensor(const Image& image, torch::Dtype dtype) {
  auto hwc = torch::from_blob(const_cast<double*>(image.values().data()),
                              {image.height(), image.width(), image.channels()}, torch::kFloat64);
  // Always copy: the blob belongs to `image`, which may be a temporary.
  return hwc.permute({2, 0, 1}).unsqueeze(0).to(dtype, /*non_blocking=*/false, /*copy=*/true)
      .contiguous();
}

torch::Tensor to_tensor(const BayerMask& mask, torch::Dtype dtype) {
  return to_tensor(mask.values(), dtype);
}

Image to_image(const torch::Tensor& tensor) {
  if (tensor.dim() != 4 || tensor.size(0) != 1) throw DimensionError("expected a 1 x C x H x W tensor");
  auto hwc = tensor.detach().squeeze(0).permute({1, 2, 0}).to(torch::kFloat64).contiguous();
  Image out(static_cast<int>(hwc.size(0)), static_cast<int>(hwc.size(1)),
            static_cast<int>(hwc.size(2)));
  const auto* src = hwc.data_ptr<double>();
  std::copy(src, src + hwc.numel(), out.values().begin());
  return out;
}

}  // namespace jdd
