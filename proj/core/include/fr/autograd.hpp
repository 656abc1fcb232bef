#ifndef FR_AUTOGRAD_HPP_
#define FR_AUTOGRAD_HPP_

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "fr/tensor.hpp"

namespace fr {

struct Node;
using Var = std::shared_ptr<Node>;

// One vertex of the dynamic compute graph. `backprop` scatters this node's
// grad into its parents; leaves and constants have none. Ops skip the
// closure entirely when no parent needs gradients, so forward passes over
// frozen networks cost no graph bookkeeping.
struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<Var> parents;
  std::function<void(Node&)> backprop;

  void accum_grad(const Tensor& g);
  Tensor& grad_buf();
  void clear_grad() { grad = Tensor(); }
};

Var leaf(Tensor t, bool requires_grad = false);
Var constant(Tensor t);

// Reverse-mode accumulation from a scalar root; seeds d(root) = 1.
void backward(const Var& root);

// ---- elementwise ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var relu(const Var& a);
Var leaky_relu(const Var& a, double slope);
Var sigmoid(const Var& a);

// ---- structure ----
Var concat_c(const Var& a, const Var& b);
Var avg_pool2(const Var& a);
Var upsample_nearest2(const Var& a);
Var pixel_shuffle(const Var& a, int r);
Var softmax_c(const Var& a);
// bias shape (1,c,1,1), broadcast over n,h,w
Var add_bias(const Var& x, const Var& b);

// ---- convolution ----
// w: (oc, ic, kh, kw); b may be null for no bias
Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad);

// Mask-aware convolution: y = conv(x .* M) * area/sum(M_window) + b, with
// zero output where the window sees no valid pixel. mask is (1,1,h,w)
// (shared) or (n,1,h,w) (per sample), broadcast across channels; *mask_out
// (same layout at the output resolution) marks windows that saw at least
// one valid pixel.
Var partial_conv2d(const Var& x, const Var& w, const Var& b,
                   const Tensor& mask, int stride, int pad, Tensor* mask_out);

// Masked blend of two images: out = (1-M).*raw + M.*kept. M is (1,1,h,w)
// or (n,1,h,w), broadcast across channels.
Var masked_blend(const Var& raw, const Var& kept, const Tensor& mask);

// ---- reductions to scalar ----
Var mean_abs_diff(const Var& a, const Var& b);
Var mean_sq_diff(const Var& a, const Var& b);
Var sum_abs_diff(const Var& a, const Var& b);
// anisotropic total variation: raw sum of interior first differences
Var tv_sum(const Var& a);
// mean log with inputs clamped to [eps, 1-eps], eps = 1e-7
Var mean_log(const Var& a);
Var mean_log_one_minus(const Var& a);
// channel autocorrelation, (n,1,c,c), normalized by 1/(c*h*w)
Var gram(const Var& a);

Var weighted_sum(const std::vector<std::pair<double, Var>>& terms);
double scalar_value(const Var& a);

// output spatial size of a convolution along one axis
inline int conv_out_dim(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

}  // namespace fr

#endif  // FR_AUTOGRAD_HPP_
