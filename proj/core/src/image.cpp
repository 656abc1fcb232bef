#include "fr/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

namespace fr {

void Image::check_unit_range(const char* what) const {
  for (double v : px)
    if (!(v >= 0.0 && v <= 1.0))
      throw std::runtime_error(std::string(what) +
                               ": pixel out of [0,1]: " + std::to_string(v));
}

Image downsample(const Image& img, ScaleFactor s) {
  const int f = s.factor;
  if (img.height % f != 0 || img.width % f != 0)
    throw std::invalid_argument(
        "downsample: dims " + std::to_string(img.height) + "x" +
        std::to_string(img.width) + " not divisible by " + std::to_string(f));
  Image out(img.channels, img.height / f, img.width / f);
  const double inv = 1.0 / (static_cast<double>(f) * f);
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < out.height; ++y)
      for (int x = 0; x < out.width; ++x) {
        double acc = 0.0;
        for (int dy = 0; dy < f; ++dy)
          for (int dx = 0; dx < f; ++dx)
            acc += img.at(c, y * f + dy, x * f + dx);
        out.at(c, y, x) = acc * inv;
      }
  return out;
}

namespace {

// Keys cubic kernel, a = -0.5 (Catmull-Rom)
double cubic_kernel(double t) {
  const double a = -0.5;
  t = std::abs(t);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return (((t - 5.0) * t + 8.0) * t - 4.0) * a;
  return 0.0;
}

int clampi(int v, int lo, int hi) { return std::max(lo, std::min(v, hi)); }

// one separable pass along x; transposes dims for the y pass
std::vector<double> resample_axis(const std::vector<double>& src, int h,
                                  int w, int wout, int f) {
  std::vector<double> dst(static_cast<std::size_t>(h) * wout);
  for (int x = 0; x < wout; ++x) {
    const double sx = (x + 0.5) / f - 0.5;
    const int x0 = static_cast<int>(std::floor(sx)) - 1;
    double wgt[4];
    for (int k = 0; k < 4; ++k) wgt[k] = cubic_kernel(sx - (x0 + k));
    for (int y = 0; y < h; ++y) {
      double acc = 0.0;
      for (int k = 0; k < 4; ++k)
        acc += wgt[k] * src[static_cast<std::size_t>(y) * w +
                            clampi(x0 + k, 0, w - 1)];
      dst[static_cast<std::size_t>(y) * wout + x] = acc;
    }
  }
  return dst;
}

}  // namespace

Image upsample_bicubic(const Image& img, ScaleFactor s) {
  const int f = s.factor;
  Image out(img.channels, img.height * f, img.width * f);
  for (int c = 0; c < img.channels; ++c) {
    std::vector<double> plane(img.px.begin() +
                                  static_cast<std::size_t>(c) * img.height *
                                      img.width,
                              img.px.begin() +
                                  static_cast<std::size_t>(c + 1) *
                                      img.height * img.width);
    // x pass, then transpose, y pass as another x pass, transpose back
    std::vector<double> hx =
        resample_axis(plane, img.height, img.width, out.width, f);
    std::vector<double> hxt(hx.size());
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < out.width; ++x)
        hxt[static_cast<std::size_t>(x) * img.height + y] =
            hx[static_cast<std::size_t>(y) * out.width + x];
    std::vector<double> vy =
        resample_axis(hxt, out.width, img.height, out.height, f);
    for (int x = 0; x < out.width; ++x)
      for (int y = 0; y < out.height; ++y)
        out.at(c, y, x) = std::clamp(
            vy[static_cast<std::size_t>(x) * out.height + y], 0.0, 1.0);
  }
  return out;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

Image load_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw std::runtime_error("load_png: cannot open " + path);

  png_byte header[8];
  if (std::fread(header, 1, 8, fp.get()) != 8 ||
      png_sig_cmp(header, 0, 8) != 0)
    throw std::runtime_error("load_png: not a PNG file: " + path);

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("load_png: libpng init failed");
  }
  std::vector<png_bytep> rows;
  std::vector<png_byte> buf;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("load_png: decode error in " + path);
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  png_set_strip_16(png);
  png_set_packing(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_PALETTE)
    png_set_palette_to_rgb(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY &&
      png_get_bit_depth(png, info) < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int ch = static_cast<int>(png_get_channels(png, info));
  if (ch != 1 && ch != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("load_png: unsupported channel count " +
                             std::to_string(ch) + " in " + path);
  }

  const std::size_t stride = png_get_rowbytes(png, info);
  buf.resize(stride * h);
  rows.resize(h);
  for (int y = 0; y < h; ++y) rows[y] = buf.data() + stride * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Image img(ch, h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < ch; ++c)
        img.at(c, y, x) =
            buf[stride * y + static_cast<std::size_t>(x) * ch + c] / 255.0;
  return img;
}

void save_png(const Image& img, const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("save_png: cannot open " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("save_png: libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("save_png: encode error for " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, img.width, img.height, 8,
               img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<png_byte> row(static_cast<std::size_t>(img.width) *
                            img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        const double v = std::clamp(img.at(c, y, x), 0.0, 1.0);
        row[static_cast<std::size_t>(x) * img.channels + c] =
            static_cast<png_byte>(std::lround(v * 255.0));
      }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Tensor image_to_tensor(const Image& img) {
  Tensor t(Shape{1, img.channels, img.height, img.width});
  std::copy(img.px.begin(), img.px.end(), t.v.begin());
  return t;
}

Image tensor_to_image(const Tensor& t, int batch_index) {
  const Shape s = t.shape;
  if (batch_index < 0 || batch_index >= s.n)
    throw std::invalid_argument("tensor_to_image: batch index out of range");
  Image img(s.c, s.h, s.w);
  const std::size_t plane = static_cast<std::size_t>(s.c) * s.h * s.w;
  std::copy_n(t.data() + plane * batch_index, plane, img.px.begin());
  return img;
}

}  // namespace fr
