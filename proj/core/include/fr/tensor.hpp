#ifndef FR_TENSOR_HPP_
#define FR_TENSOR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace fr {

class Rng;

// NCHW shape. Scalars are (1,1,1,1); per-channel vectors (1,c,1,1).
struct Shape {
  int n = 0, c = 0, h = 0, w = 0;

  std::size_t elems() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  bool operator==(const Shape& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }
  bool operator!=(const Shape& o) const { return !(*this == o); }
  std::string str() const;
};

// Dense double-precision NCHW tensor. Plain value type; all layout math
// lives here so ops never hand-roll index arithmetic.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0)
      : shape(s), v(s.elems(), fill) {}

  static Tensor zeros(Shape s) { return Tensor(s); }
  static Tensor full(Shape s, double x) { return Tensor(s, x); }
  static Tensor scalar(double x) { return Tensor(Shape{1, 1, 1, 1}, x); }
  static Tensor uniform(Shape s, double lo, double hi, Rng& rng);
  static Tensor normal(Shape s, double mean, double stddev, Rng& rng);

  double& at(int n, int c, int y, int x) {
    return v[((static_cast<std::size_t>(n) * shape.c + c) * shape.h + y) *
                 shape.w +
             x];
  }
  double at(int n, int c, int y, int x) const {
    return v[((static_cast<std::size_t>(n) * shape.c + c) * shape.h + y) *
                 shape.w +
             x];
  }

  std::size_t size() const { return v.size(); }
  double* data() { return v.data(); }
  const double* data() const { return v.data(); }
  bool empty() const { return v.empty(); }

  double min() const;
  double max() const;
  double mean() const;
  bool all_finite() const;

  Shape shape;
  std::vector<double> v;
};

inline void check_same_shape(const Tensor& a, const Tensor& b,
                             const char* what) {
  if (a.shape != b.shape)
    throw std::invalid_argument(std::string(what) + ": shape mismatch " +
                                a.shape.str() + " vs " + b.shape.str());
}

}  // namespace fr

#endif  // FR_TENSOR_HPP_
