#ifndef FR_IMAGE_HPP_
#define FR_IMAGE_HPP_

#include <stdexcept>
#include <string>
#include <vector>

#include "fr/tensor.hpp"

namespace fr {

// Dense CHW image, values in [0,1]. 1 channel (gray) or 3 (RGB).
// All operations on images are pure.
struct Image {
  int channels = 0, height = 0, width = 0;
  std::vector<double> px;

  Image() = default;
  Image(int c, int h, int w, double fill = 0.0)
      : channels(c), height(h), width(w),
        px(static_cast<std::size_t>(c) * h * w, fill) {
    if ((c != 1 && c != 3) || h < 1 || w < 1)
      throw std::invalid_argument("Image: bad dims c=" + std::to_string(c) +
                                  " h=" + std::to_string(h) +
                                  " w=" + std::to_string(w));
  }

  double& at(int c, int y, int x) {
    return px[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  double at(int c, int y, int x) const {
    return px[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  std::size_t size() const { return px.size(); }

  // throws unless every value is finite and within [0,1]
  void check_unit_range(const char* what) const;
};

// Linear resampling ratio; the supported set matches the training protocols.
struct ScaleFactor {
  explicit ScaleFactor(int f) : factor(f) {
    if (f != 2 && f != 4 && f != 8)
      throw std::invalid_argument("ScaleFactor: must be 2, 4 or 8, got " +
                                  std::to_string(f));
  }
  int factor;
};

// Area-average (box) reduction; input dims must be exact multiples of s.
Image downsample(const Image& img, ScaleFactor s);

// Catmull-Rom bicubic upscaling (half-pixel centers, clamped edges);
// output clamped to [0,1].
Image upsample_bicubic(const Image& img, ScaleFactor s);

// 8-bit PNG I/O. Gray maps to 1 channel, RGB(A) to 3 (alpha dropped).
Image load_png(const std::string& path);
void save_png(const Image& img, const std::string& path);

// batch-of-one conversion helpers for the training path
Tensor image_to_tensor(const Image& img);
Image tensor_to_image(const Tensor& t, int batch_index = 0);

}  // namespace fr

#endif  // FR_IMAGE_HPP_
