#include "fr/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "fr/rng.hpp"

namespace fr {

std::string Shape::str() const {
  return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
         std::to_string(h) + "," + std::to_string(w) + ")";
}

Tensor Tensor::uniform(Shape s, double lo, double hi, Rng& rng) {
  Tensor t(s);
  for (double& x : t.v) x = rng.uniform(lo, hi);
  return t;
}

Tensor Tensor::normal(Shape s, double mean, double stddev, Rng& rng) {
  Tensor t(s);
  for (double& x : t.v) x = mean + stddev * rng.normal();
  return t;
}

double Tensor::min() const {
  return v.empty() ? 0.0 : *std::min_element(v.begin(), v.end());
}

double Tensor::max() const {
  return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

double Tensor::mean() const {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

bool Tensor::all_finite() const {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace fr
