#ifndef FR_OCCLUSION_HPP_
#define FR_OCCLUSION_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "fr/image.hpp"

namespace fr {

// Binary visibility map: 0 = occluded, 1 = visible. Must match the image it
// is applied to. Generators only emit axis-aligned rectangles; arbitrary
// masks are accepted everywhere a mask is consumed.
struct Mask {
  int height = 0, width = 0;
  std::vector<std::uint8_t> bits;

  Mask() = default;
  Mask(int h, int w, std::uint8_t fill = 1)
      : height(h), width(w), bits(static_cast<std::size_t>(h) * w, fill) {}

  std::uint8_t& at(int y, int x) {
    return bits[static_cast<std::size_t>(y) * width + x];
  }
  std::uint8_t at(int y, int x) const {
    return bits[static_cast<std::size_t>(y) * width + x];
  }

  double visible_fraction() const;
  // (1,1,h,w) tensor of 0/1 for the autograd path
  Tensor to_tensor() const;
};

// An axis-aligned rectangle, fully inside the image it is meant for.
struct BlockSpec {
  int top = 0, left = 0, height = 0, width = 0;
};

Mask mask_from_block(int h, int w, const BlockSpec& block);

// Single rectangular zero block of ~area_fraction*h*w pixels, uniformly
// placed; identical seeds give identical masks.
Mask random_block_mask(int h, int w, double area_fraction,
                       std::uint64_t seed);

// Zeroes one cell of a grid x grid partition; index is 1-based row-major.
Mask grid_block_mask(int h, int w, int grid, int index);

// Centered square block of the given side; side 0 yields an all-visible mask.
Mask center_block_mask(int h, int w, int side);

// Visible pixels pass through; occluded pixels become `fill`.
Image apply_occlusion(const Image& img, const Mask& m, double fill = 0.0);

// out = (1-M).*raw + M.*occluded_input. Visible pixels of the result are
// bit-identical to occluded_input. The single-channel mask broadcasts
// across image channels.
Image composite(const Image& raw, const Image& occluded_input, const Mask& m);

// single-channel PNG, 0 = occluded, 255 = visible
void save_mask_png(const Mask& m, const std::string& path);
Mask load_mask_png(const std::string& path);

// nearest-neighbor upscale; keeps values binary
Mask upscale_mask_nearest(const Mask& m, int factor);

}  // namespace fr

#endif  // FR_OCCLUSION_HPP_
