#include "fr/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace fr {

namespace {

constexpr int kWin = 11;
constexpr double kSigma = 1.5;

void check_pair(const Image& a, const Image& b, const char* what) {
  if (a.channels != b.channels || a.height != b.height || a.width != b.width)
    throw std::invalid_argument(std::string(what) + ": image dims differ");
}

std::vector<double> gaussian_window() {
  std::vector<double> g(kWin);
  double sum = 0.0;
  for (int i = 0; i < kWin; ++i) {
    const double d = i - (kWin - 1) / 2.0;
    g[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    sum += g[i];
  }
  for (double& x : g) x /= sum;
  return g;
}

// separable valid-mode filtering along x then y
std::vector<double> filter_valid(const std::vector<double>& src, int h, int w,
                                 const std::vector<double>& k) {
  const int kw = static_cast<int>(k.size());
  const int wo = w - kw + 1, ho = h - kw + 1;
  std::vector<double> tmp(static_cast<std::size_t>(h) * wo);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < wo; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kw; ++i)
        acc += k[i] * src[static_cast<std::size_t>(y) * w + x + i];
      tmp[static_cast<std::size_t>(y) * wo + x] = acc;
    }
  std::vector<double> out(static_cast<std::size_t>(ho) * wo);
  for (int y = 0; y < ho; ++y)
    for (int x = 0; x < wo; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kw; ++i)
        acc += k[i] * tmp[static_cast<std::size_t>(y + i) * wo + x];
      out[static_cast<std::size_t>(y) * wo + x] = acc;
    }
  return out;
}

}  // namespace

double psnr(const Image& a, const Image& b, double peak) {
  check_pair(a, b, "psnr");
  double mse = 0.0;
  for (std::size_t i = 0; i < a.px.size(); ++i) {
    const double d = a.px[i] - b.px[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.px.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

double mssim(const Image& a, const Image& b, double peak) {
  check_pair(a, b, "mssim");
  if (a.height < kWin || a.width < kWin)
    throw std::invalid_argument("mssim: image smaller than 11x11 window");

  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  const std::vector<double> win = gaussian_window();
  const int h = a.height, w = a.width;
  const std::size_t plane = static_cast<std::size_t>(h) * w;

  double total = 0.0;
  for (int c = 0; c < a.channels; ++c) {
    std::vector<double> pa(a.px.begin() + c * plane,
                           a.px.begin() + (c + 1) * plane);
    std::vector<double> pb(b.px.begin() + c * plane,
                           b.px.begin() + (c + 1) * plane);
    std::vector<double> paa(plane), pbb(plane), pab(plane);
    for (std::size_t i = 0; i < plane; ++i) {
      paa[i] = pa[i] * pa[i];
      pbb[i] = pb[i] * pb[i];
      pab[i] = pa[i] * pb[i];
    }
    const auto mu_a = filter_valid(pa, h, w, win);
    const auto mu_b = filter_valid(pb, h, w, win);
    const auto m_aa = filter_valid(paa, h, w, win);
    const auto m_bb = filter_valid(pbb, h, w, win);
    const auto m_ab = filter_valid(pab, h, w, win);

    double acc = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
      const double va = m_aa[i] - mu_a[i] * mu_a[i];
      const double vb = m_bb[i] - mu_b[i] * mu_b[i];
      const double cov = m_ab[i] - mu_a[i] * mu_b[i];
      acc += ((2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2)) /
             ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2));
    }
    total += acc / static_cast<double>(mu_a.size());
  }
  return total / a.channels;
}

MetricPair measure(const Image& a, const Image& b, double peak) {
  return MetricPair{psnr(a, b, peak), mssim(a, b, peak)};
}

}  // namespace fr
