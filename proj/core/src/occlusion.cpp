#include "fr/occlusion.hpp"

#include <cmath>
#include <stdexcept>

#include "fr/rng.hpp"

namespace fr {

double Mask::visible_fraction() const {
  if (bits.empty()) return 0.0;
  std::size_t on = 0;
  for (auto b : bits) on += b;
  return static_cast<double>(on) / static_cast<double>(bits.size());
}

Tensor Mask::to_tensor() const {
  Tensor t(Shape{1, 1, height, width});
  for (std::size_t i = 0; i < bits.size(); ++i) t.v[i] = bits[i] ? 1.0 : 0.0;
  return t;
}

Mask mask_from_block(int h, int w, const BlockSpec& b) {
  if (b.top < 0 || b.left < 0 || b.height < 0 || b.width < 0 ||
      b.top + b.height > h || b.left + b.width > w)
    throw std::invalid_argument("mask_from_block: block outside image bounds");
  Mask m(h, w, 1);
  for (int y = b.top; y < b.top + b.height; ++y)
    for (int x = b.left; x < b.left + b.width; ++x) m.at(y, x) = 0;
  return m;
}

Mask random_block_mask(int h, int w, double area_fraction,
                       std::uint64_t seed) {
  if (!(area_fraction > 0.0 && area_fraction <= 1.0))
    throw std::invalid_argument("random_block_mask: fraction must be in (0,1]");
  const double target = area_fraction * h * w;
  int bh = std::max(1, static_cast<int>(std::floor(std::sqrt(target))));
  int bw = std::max(1, static_cast<int>(std::lround(target / bh)));
  bw = std::min(bw, w);
  if (bh > h || bh > w)
    throw std::invalid_argument("random_block_mask: block larger than image");
  Rng rng(derive_key({seed, 0x626c6f636bull}));
  const int top = rng.uniform_int(0, h - bh);
  const int left = rng.uniform_int(0, w - bw);
  return mask_from_block(h, w, BlockSpec{top, left, bh, bw});
}

Mask grid_block_mask(int h, int w, int grid, int index) {
  if (grid != 2 && grid != 3)
    throw std::invalid_argument("grid_block_mask: grid must be 2 or 3");
  if (index < 1 || index > grid * grid)
    throw std::invalid_argument("grid_block_mask: index " +
                                std::to_string(index) + " out of [1," +
                                std::to_string(grid * grid) + "]");
  const int r = (index - 1) / grid;
  const int c = (index - 1) % grid;
  const int y0 = r * h / grid, y1 = (r + 1) * h / grid;
  const int x0 = c * w / grid, x1 = (c + 1) * w / grid;
  return mask_from_block(h, w, BlockSpec{y0, x0, y1 - y0, x1 - x0});
}

Mask center_block_mask(int h, int w, int side) {
  if (side < 0 || side > h || side > w)
    throw std::invalid_argument("center_block_mask: side " +
                                std::to_string(side) + " exceeds " +
                                std::to_string(h) + "x" + std::to_string(w));
  if (side == 0) return Mask(h, w, 1);
  return mask_from_block(h, w,
                         BlockSpec{(h - side) / 2, (w - side) / 2, side, side});
}

namespace {
void check_dims(const Image& img, const Mask& m, const char* what) {
  if (img.height != m.height || img.width != m.width)
    throw std::invalid_argument(
        std::string(what) + ": mask " + std::to_string(m.height) + "x" +
        std::to_string(m.width) + " vs image " + std::to_string(img.height) +
        "x" + std::to_string(img.width));
}
}  // namespace

Image apply_occlusion(const Image& img, const Mask& m, double fill) {
  check_dims(img, m, "apply_occlusion");
  Image out = img;
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        if (!m.at(y, x)) out.at(c, y, x) = fill;
  return out;
}

Image composite(const Image& raw, const Image& occluded_input, const Mask& m) {
  if (raw.channels != occluded_input.channels ||
      raw.height != occluded_input.height || raw.width != occluded_input.width)
    throw std::invalid_argument("composite: image dims differ");
  check_dims(raw, m, "composite");
  Image out = occluded_input;  // visible pixels stay bit-identical
  for (int c = 0; c < raw.channels; ++c)
    for (int y = 0; y < raw.height; ++y)
      for (int x = 0; x < raw.width; ++x)
        if (!m.at(y, x)) out.at(c, y, x) = raw.at(c, y, x);
  return out;
}

void save_mask_png(const Mask& m, const std::string& path) {
  Image img(1, m.height, m.width);
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) img.at(0, y, x) = m.at(y, x) ? 1.0 : 0.0;
  save_png(img, path);
}

Mask load_mask_png(const std::string& path) {
  Image img = load_png(path);
  if (img.channels != 1)
    throw std::runtime_error("load_mask_png: expected single-channel PNG: " +
                             path);
  Mask m(img.height, img.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      m.at(y, x) = img.at(0, y, x) >= 0.5 ? 1 : 0;
  return m;
}

Mask upscale_mask_nearest(const Mask& m, int factor) {
  if (factor < 1) throw std::invalid_argument("upscale_mask_nearest: factor");
  Mask out(m.height * factor, m.width * factor);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      out.at(y, x) = m.at(y / factor, x / factor);
  return out;
}

}  // namespace fr
