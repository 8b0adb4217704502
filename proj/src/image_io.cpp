#include "jdd/image_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "jdd/errors.hpp"

namespace jdd {

namespace {

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

}  // namespace

bool is_lossless_image(const std::filesystem::path& path) {
  static const std::array<std::string, 7> kLossless{".png", ".tif", ".tiff", ".bmp",
                                                    ".ppm", ".pnm", ".pgm"};
  const auto ext = lower_extension(path);
  return std::find(kLossless.begin(), kLossless.end(), ext) != kLossless.end();
}

Image read_image(const std::filesystem::path& path) {
  const std::string name = path.string();
  if (!is_lossless_image(path)) {
    throw IngestionError(name + ": not a lossless image format");
  }
  cv::Mat mat = cv::imread(name, cv::IMREAD_UNCHANGED);
  if (mat.empty()) throw IngestionError(name + ": could not be decoded");

  double scale = 0.0;
  if (mat.depth() == CV_8U) {
    scale = 1.0 / 255.0;
  } else if (mat.depth() == CV_16U) {
    scale = 1.0 / 65535.0;
  } else {
    throw IngestionError(name + ": only 8- and 16-bit images are supported");
  }
  if (mat.channels() != 3 && mat.channels() != 4) {
    throw IngestionError(name + ": expected a color image, got " +
                         std::to_string(mat.channels()) + " channel(s)");
  }

  cv::Mat values;
  mat.convertTo(values, CV_64FC(mat.channels()), scale);

  // OpenCV decodes color as BGR(A).
  const int stride = mat.channels();
  Image image(values.rows, values.cols, 3);
  for (int y = 0; y < values.rows; ++y) {
    const auto* row = values.ptr<double>(y);
    for (int x = 0; x < values.cols; ++x)
      for (int c = 0; c < 3; ++c) image.at(y, x, c) = row[x * stride + (2 - c)];
  }
  return image;
}

void write_image(const std::filesystem::path& path, const Image& image, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw UsageError("bit depth must be 8 or 16");
  if (image.channels() != 1 && image.channels() != 3) {
    throw DimensionError("only 1- and 3-channel images can be written");
  }
  if (!is_lossless_image(path)) throw UsageError(path.string() + ": not a lossless format");

  const double peak = bit_depth == 8 ? 255.0 : 65535.0;
  const int type = (bit_depth == 8 ? CV_8UC(image.channels()) : CV_16UC(image.channels()));
  cv::Mat mat(image.height(), image.width(), type);
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x)
      for (int c = 0; c < image.channels(); ++c) {
        // OpenCV stores color as BGR.
        const int dst = image.channels() == 3 ? 2 - c : 0;
        const double v = std::lround(std::clamp(image.at(y, x, c), 0.0, 1.0) * peak);
        if (bit_depth == 8) {
          mat.ptr<std::uint8_t>(y)[x * image.channels() + dst] = static_cast<std::uint8_t>(v);
        } else {
          mat.ptr<std::uint16_t>(y)[x * image.channels() + dst] = static_cast<std::uint16_t>(v);
        }
      }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), mat)) throw UsageError(path.string() + ": write failed");
}

}  // namespace jdd
