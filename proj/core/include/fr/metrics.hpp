#ifndef FR_METRICS_HPP_
#define FR_METRICS_HPP_

#include "fr/image.hpp"

namespace fr {

struct MetricPair {
  double psnr = 0.0;   // dB; +infinity for identical inputs
  double mssim = 0.0;  // in [-1, 1]; 1 iff identical
};

// 10*log10(peak^2 / MSE); identical inputs return +infinity.
double psnr(const Image& a, const Image& b, double peak = 1.0);

// Mean SSIM over valid 11x11 sliding windows (Gaussian, sigma 1.5) with
// C1=(0.01*peak)^2, C2=(0.03*peak)^2, computed per channel and averaged.
// Images must be at least 11x11.
double mssim(const Image& a, const Image& b, double peak = 1.0);

MetricPair measure(const Image& a, const Image& b, double peak = 1.0);

}  // namespace fr

#endif  // FR_METRICS_HPP_
