#include "fr/autograd.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace fr {

namespace {

constexpr double kLogEps = 1e-7;

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ColMat = Eigen::MatrixXd;

bool any_requires_grad(const std::vector<Var>& parents) {
  for (const auto& p : parents)
    if (p->requires_grad) return true;
  return false;
}

Var make_op(Tensor value, std::vector<Var> parents,
            std::function<void(Node&)> backprop) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->parents = std::move(parents);
  if (any_requires_grad(n->parents)) {
    n->requires_grad = true;
    n->backprop = std::move(backprop);
  }
  return n;
}

// Masks are (1,1,h,w) (shared across the batch) or (n,1,h,w) (one per
// sample). Returns the batch stride used to index them.
int check_mask(const Tensor& mask, int n, int h, int w, const char* what) {
  if (mask.shape.h != h || mask.shape.w != w || mask.shape.c != 1 ||
      (mask.shape.n != 1 && mask.shape.n != n))
    throw std::invalid_argument(std::string(what) + ": mask shape " +
                                mask.shape.str() + " does not match batch " +
                                std::to_string(n) + " of " +
                                std::to_string(h) + "x" + std::to_string(w));
  return mask.shape.n == 1 ? 0 : 1;
}

inline double mask_at(const Tensor& mask, int stride_n, int n, int y, int x) {
  return mask.v[((static_cast<std::size_t>(stride_n * n) * mask.shape.h) + y) *
                    mask.shape.w +
                x];
}

void im2col(const Tensor& x, int kh, int kw, int stride, int pad,
            ColMat& col) {
  const int N = x.shape.n, C = x.shape.c, H = x.shape.h, W = x.shape.w;
  const int Ho = conv_out_dim(H, kh, stride, pad);
  const int Wo = conv_out_dim(W, kw, stride, pad);
  col.resize(static_cast<Eigen::Index>(C) * kh * kw,
             static_cast<Eigen::Index>(N) * Ho * Wo);
  const double* xd = x.data();
  Eigen::Index p = 0;
  for (int n = 0; n < N; ++n) {
    const double* xn = xd + static_cast<std::size_t>(n) * C * H * W;
    for (int oy = 0; oy < Ho; ++oy) {
      for (int ox = 0; ox < Wo; ++ox, ++p) {
        double* cp = col.data() + p * col.rows();
        for (int c = 0; c < C; ++c) {
          const double* xc = xn + static_cast<std::size_t>(c) * H * W;
          for (int ky = 0; ky < kh; ++ky) {
            const int iy = oy * stride - pad + ky;
            for (int kx = 0; kx < kw; ++kx, ++cp) {
              const int ix = ox * stride - pad + kx;
              *cp = (iy >= 0 && iy < H && ix >= 0 && ix < W)
                        ? xc[static_cast<std::size_t>(iy) * W + ix]
                        : 0.0;
            }
          }
        }
      }
    }
  }
}

void col2im_accum(const ColMat& col, int N, int C, int H, int W, int kh,
                  int kw, int stride, int pad, Tensor& dx) {
  const int Ho = conv_out_dim(H, kh, stride, pad);
  const int Wo = conv_out_dim(W, kw, stride, pad);
  double* xd = dx.data();
  Eigen::Index p = 0;
  for (int n = 0; n < N; ++n) {
    double* xn = xd + static_cast<std::size_t>(n) * C * H * W;
    for (int oy = 0; oy < Ho; ++oy) {
      for (int ox = 0; ox < Wo; ++ox, ++p) {
        const double* cp = col.data() + p * col.rows();
        for (int c = 0; c < C; ++c) {
          double* xc = xn + static_cast<std::size_t>(c) * H * W;
          for (int ky = 0; ky < kh; ++ky) {
            const int iy = oy * stride - pad + ky;
            for (int kx = 0; kx < kw; ++kx, ++cp) {
              const int ix = ox * stride - pad + kx;
              if (iy >= 0 && iy < H && ix >= 0 && ix < W)
                xc[static_cast<std::size_t>(iy) * W + ix] += *cp;
            }
          }
        }
      }
    }
  }
}

// Gathers (n,c,ho,wo) into a (c) x (n*ho*wo) matrix matching im2col's
// column order, and the inverse scatter.
void chw_to_mat(const Tensor& t, ColMat& m) {
  const int N = t.shape.n, C = t.shape.c, HW = t.shape.h * t.shape.w;
  m.resize(C, static_cast<Eigen::Index>(N) * HW);
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      const double* src = t.data() + (static_cast<std::size_t>(n) * C + c) * HW;
      for (int p = 0; p < HW; ++p)
        m(c, static_cast<Eigen::Index>(n) * HW + p) = src[p];
    }
}

void mat_to_chw(const ColMat& m, Tensor& t) {
  const int N = t.shape.n, C = t.shape.c, HW = t.shape.h * t.shape.w;
  for (int n = 0; n < N; ++n)
    for (int c = 0; c < C; ++c) {
      double* dst = t.data() + (static_cast<std::size_t>(n) * C + c) * HW;
      for (int p = 0; p < HW; ++p)
        dst[p] = m(c, static_cast<Eigen::Index>(n) * HW + p);
    }
}

}  // namespace

void Node::accum_grad(const Tensor& g) {
  if (grad.empty()) grad = Tensor::zeros(value.shape);
  if (grad.shape != g.shape)
    throw std::logic_error("grad accumulation shape mismatch");
  for (std::size_t i = 0; i < grad.size(); ++i) grad.v[i] += g.v[i];
}

Tensor& Node::grad_buf() {
  if (grad.empty()) grad = Tensor::zeros(value.shape);
  return grad;
}

Var leaf(Tensor t, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->value = std::move(t);
  n->requires_grad = requires_grad;
  return n;
}

Var constant(Tensor t) { return leaf(std::move(t), false); }

void backward(const Var& root) {
  if (root->value.size() != 1)
    throw std::invalid_argument("backward: root must be scalar");
  if (!root->requires_grad) return;

  // iterative post-order DFS over grad-requiring subgraph
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{root.get(), 0}};
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Node* p = node->parents[idx++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->grad_buf().v[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backprop && !n->grad.empty()) n->backprop(*n);
  }
}

// ---- elementwise ----

Var add(const Var& a, const Var& b) {
  check_same_shape(a->value, b->value, "add");
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.size(); ++i) out.v[i] += b->value.v[i];
  return make_op(std::move(out), {a, b}, [](Node& n) {
    if (n.parents[0]->requires_grad) n.parents[0]->accum_grad(n.grad);
    if (n.parents[1]->requires_grad) n.parents[1]->accum_grad(n.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a->value, b->value, "sub");
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.size(); ++i) out.v[i] -= b->value.v[i];
  return make_op(std::move(out), {a, b}, [](Node& n) {
    if (n.parents[0]->requires_grad) n.parents[0]->accum_grad(n.grad);
    if (n.parents[1]->requires_grad) {
      Tensor g = n.grad;
      for (double& x : g.v) x = -x;
      n.parents[1]->accum_grad(g);
    }
  });
}

Var mul(const Var& a, const Var& b) {
  check_same_shape(a->value, b->value, "mul");
  Tensor out = a->value;
  for (std::size_t i = 0; i < out.size(); ++i) out.v[i] *= b->value.v[i];
  return make_op(std::move(out), {a, b}, [](Node& n) {
    if (n.parents[0]->requires_grad) {
      Tensor g = n.grad;
      for (std::size_t i = 0; i < g.size(); ++i)
        g.v[i] *= n.parents[1]->value.v[i];
      n.parents[0]->accum_grad(g);
    }
    if (n.parents[1]->requires_grad) {
      Tensor g = n.grad;
      for (std::size_t i = 0; i < g.size(); ++i)
        g.v[i] *= n.parents[0]->value.v[i];
      n.parents[1]->accum_grad(g);
    }
  });
}

Var scale(const Var& a, double s) {
  Tensor out = a->value;
  for (double& x : out.v) x *= s;
  return make_op(std::move(out), {a}, [s](Node& n) {
    Tensor g = n.grad;
    for (double& x : g.v) x *= s;
    n.parents[0]->accum_grad(g);
  });
}

Var relu(const Var& a) {
  Tensor out = a->value;
  for (double& x : out.v) x = x > 0.0 ? x : 0.0;
  return make_op(std::move(out), {a}, [](Node& n) {
    Tensor g = n.grad;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (n.parents[0]->value.v[i] <= 0.0) g.v[i] = 0.0;
    n.parents[0]->accum_grad(g);
  });
}

Var leaky_relu(const Var& a, double slope) {
  Tensor out = a->value;
  for (double& x : out.v) x = x > 0.0 ? x : slope * x;
  return make_op(std::move(out), {a}, [slope](Node& n) {
    Tensor g = n.grad;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (n.parents[0]->value.v[i] <= 0.0) g.v[i] *= slope;
    n.parents[0]->accum_grad(g);
  });
}

Var sigmoid(const Var& a) {
  Tensor out = a->value;
  for (double& x : out.v) x = 1.0 / (1.0 + std::exp(-x));
  return make_op(std::move(out), {a}, [](Node& n) {
    Tensor g = n.grad;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double y = n.value.v[i];
      g.v[i] *= y * (1.0 - y);
    }
    n.parents[0]->accum_grad(g);
  });
}

// ---- structure ----

Var concat_c(const Var& a, const Var& b) {
  const Shape& sa = a->value.shape;
  const Shape& sb = b->value.shape;
  if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w)
    throw std::invalid_argument("concat_c: incompatible shapes " + sa.str() +
                                " vs " + sb.str());
  Tensor out(Shape{sa.n, sa.c + sb.c, sa.h, sa.w});
  const std::size_t plane = static_cast<std::size_t>(sa.h) * sa.w;
  for (int n = 0; n < sa.n; ++n) {
    std::copy_n(a->value.data() + static_cast<std::size_t>(n) * sa.c * plane,
                static_cast<std::size_t>(sa.c) * plane,
                out.data() + static_cast<std::size_t>(n) * (sa.c + sb.c) * plane);
    std::copy_n(b->value.data() + static_cast<std::size_t>(n) * sb.c * plane,
                static_cast<std::size_t>(sb.c) * plane,
                out.data() +
                    static_cast<std::size_t>(n) * (sa.c + sb.c) * plane +
                    static_cast<std::size_t>(sa.c) * plane);
  }
  const int ca = sa.c, cb = sb.c;
  return make_op(std::move(out), {a, b}, [ca, cb, plane](Node& n) {
    const int N = n.value.shape.n;
    if (n.parents[0]->requires_grad) {
      Tensor g(n.parents[0]->value.shape);
      for (int i = 0; i < N; ++i)
        std::copy_n(n.grad.data() + static_cast<std::size_t>(i) * (ca + cb) * plane,
                    static_cast<std::size_t>(ca) * plane,
                    g.data() + static_cast<std::size_t>(i) * ca * plane);
      n.parents[0]->accum_grad(g);
    }
    if (n.parents[1]->requires_grad) {
      Tensor g(n.parents[1]->value.shape);
      for (int i = 0; i < N; ++i)
        std::copy_n(n.grad.data() + static_cast<std::size_t>(i) * (ca + cb) * plane +
                        static_cast<std::size_t>(ca) * plane,
                    static_cast<std::size_t>(cb) * plane,
                    g.data() + static_cast<std::size_t>(i) * cb * plane);
      n.parents[1]->accum_grad(g);
    }
  });
}

Var avg_pool2(const Var& a) {
  const Shape s = a->value.shape;
  if (s.h % 2 != 0 || s.w % 2 != 0)
    throw std::invalid_argument("avg_pool2: odd spatial dims " + s.str());
  Tensor out(Shape{s.n, s.c, s.h / 2, s.w / 2});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < s.h / 2; ++y)
        for (int x = 0; x < s.w / 2; ++x)
          out.at(n, c, y, x) =
              0.25 * (a->value.at(n, c, 2 * y, 2 * x) +
                      a->value.at(n, c, 2 * y, 2 * x + 1) +
                      a->value.at(n, c, 2 * y + 1, 2 * x) +
                      a->value.at(n, c, 2 * y + 1, 2 * x + 1));
  return make_op(std::move(out), {a}, [](Node& n) {
    const Shape s = n.parents[0]->value.shape;
    Tensor g(s);
    for (int i = 0; i < s.n; ++i)
      for (int c = 0; c < s.c; ++c)
        for (int y = 0; y < s.h / 2; ++y)
          for (int x = 0; x < s.w / 2; ++x) {
            const double d = 0.25 * n.grad.at(i, c, y, x);
            g.at(i, c, 2 * y, 2 * x) = d;
            g.at(i, c, 2 * y, 2 * x + 1) = d;
            g.at(i, c, 2 * y + 1, 2 * x) = d;
            g.at(i, c, 2 * y + 1, 2 * x + 1) = d;
          }
    n.parents[0]->accum_grad(g);
  });
}

Var upsample_nearest2(const Var& a) {
  const Shape s = a->value.shape;
  Tensor out(Shape{s.n, s.c, s.h * 2, s.w * 2});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < s.h * 2; ++y)
        for (int x = 0; x < s.w * 2; ++x)
          out.at(n, c, y, x) = a->value.at(n, c, y / 2, x / 2);
  return make_op(std::move(out), {a}, [](Node& n) {
    const Shape s = n.parents[0]->value.shape;
    Tensor g(s);
    for (int i = 0; i < s.n; ++i)
      for (int c = 0; c < s.c; ++c)
        for (int y = 0; y < 2 * s.h; ++y)
          for (int x = 0; x < 2 * s.w; ++x)
            g.at(i, c, y / 2, x / 2) += n.grad.at(i, c, y, x);
    n.parents[0]->accum_grad(g);
  });
}

Var pixel_shuffle(const Var& a, int r) {
  const Shape s = a->value.shape;
  if (s.c % (r * r) != 0)
    throw std::invalid_argument("pixel_shuffle: channels not divisible by r^2");
  const int co = s.c / (r * r);
  Tensor out(Shape{s.n, co, s.h * r, s.w * r});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < co; ++c)
      for (int y = 0; y < s.h * r; ++y)
        for (int x = 0; x < s.w * r; ++x)
          out.at(n, c, y, x) =
              a->value.at(n, c * r * r + (y % r) * r + (x % r), y / r, x / r);
  return make_op(std::move(out), {a}, [r, co](Node& n) {
    const Shape s = n.parents[0]->value.shape;
    Tensor g(s);
    for (int i = 0; i < s.n; ++i)
      for (int c = 0; c < co; ++c)
        for (int y = 0; y < n.value.shape.h; ++y)
          for (int x = 0; x < n.value.shape.w; ++x)
            g.at(i, c * r * r + (y % r) * r + (x % r), y / r, x / r) =
                n.grad.at(i, c, y, x);
    n.parents[0]->accum_grad(g);
  });
}

Var softmax_c(const Var& a) {
  const Shape s = a->value.shape;
  Tensor out(s);
  for (int n = 0; n < s.n; ++n)
    for (int y = 0; y < s.h; ++y)
      for (int x = 0; x < s.w; ++x) {
        double mx = a->value.at(n, 0, y, x);
        for (int c = 1; c < s.c; ++c)
          mx = std::max(mx, a->value.at(n, c, y, x));
        double z = 0.0;
        for (int c = 0; c < s.c; ++c) {
          const double e = std::exp(a->value.at(n, c, y, x) - mx);
          out.at(n, c, y, x) = e;
          z += e;
        }
        for (int c = 0; c < s.c; ++c) out.at(n, c, y, x) /= z;
      }
  return make_op(std::move(out), {a}, [](Node& n) {
    const Shape s = n.value.shape;
    Tensor g(s);
    for (int i = 0; i < s.n; ++i)
      for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x) {
          double dot = 0.0;
          for (int c = 0; c < s.c; ++c)
            dot += n.grad.at(i, c, y, x) * n.value.at(i, c, y, x);
          for (int c = 0; c < s.c; ++c)
            g.at(i, c, y, x) = n.value.at(i, c, y, x) *
                               (n.grad.at(i, c, y, x) - dot);
        }
    n.parents[0]->accum_grad(g);
  });
}

Var add_bias(const Var& x, const Var& b) {
  const Shape s = x->value.shape;
  if (b->value.shape.c != s.c || b->value.size() != static_cast<std::size_t>(s.c))
    throw std::invalid_argument("add_bias: bias must be (1,c,1,1)");
  Tensor out = x->value;
  const std::size_t plane = static_cast<std::size_t>(s.h) * s.w;
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      double* o = out.data() + (static_cast<std::size_t>(n) * s.c + c) * plane;
      const double bc = b->value.v[c];
      for (std::size_t p = 0; p < plane; ++p) o[p] += bc;
    }
  return make_op(std::move(out), {x, b}, [plane](Node& n) {
    const Shape s = n.value.shape;
    if (n.parents[0]->requires_grad) n.parents[0]->accum_grad(n.grad);
    if (n.parents[1]->requires_grad) {
      Tensor g(n.parents[1]->value.shape);
      for (int i = 0; i < s.n; ++i)
        for (int c = 0; c < s.c; ++c) {
          const double* gp =
              n.grad.data() + (static_cast<std::size_t>(i) * s.c + c) * plane;
          double acc = 0.0;
          for (std::size_t p = 0; p < plane; ++p) acc += gp[p];
          g.v[c] += acc;
        }
      n.parents[1]->accum_grad(g);
    }
  });
}

// ---- convolution ----

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
  const Shape xs = x->value.shape;
  const Shape ws = w->value.shape;
  if (ws.c != xs.c)
    throw std::invalid_argument("conv2d: weight channels " + ws.str() +
                                " do not match input " + xs.str());
  const int Ho = conv_out_dim(xs.h, ws.h, stride, pad);
  const int Wo = conv_out_dim(xs.w, ws.w, stride, pad);
  if (Ho <= 0 || Wo <= 0)
    throw std::invalid_argument("conv2d: kernel larger than padded input");

  ColMat col;
  im2col(x->value, ws.h, ws.w, stride, pad, col);
  Eigen::Map<const RowMat> wm(w->value.data(), ws.n,
                              static_cast<Eigen::Index>(ws.c) * ws.h * ws.w);
  ColMat ym = wm * col;

  Tensor out(Shape{xs.n, ws.n, Ho, Wo});
  mat_to_chw(ym, out);

  const int kh = ws.h, kw = ws.w;
  auto bwd = [stride, pad, kh, kw](Node& n) {
    const Var& px = n.parents[0];
    const Var& pw = n.parents[1];
    const Shape xs2 = px->value.shape;
    const Shape ws2 = pw->value.shape;

    ColMat dym;
    chw_to_mat(n.grad, dym);
    Eigen::Map<const RowMat> wm2(pw->value.data(), ws2.n,
                                 static_cast<Eigen::Index>(ws2.c) * kh * kw);
    if (pw->requires_grad) {
      ColMat col2;
      im2col(px->value, kh, kw, stride, pad, col2);
      RowMat dw = dym * col2.transpose();
      Tensor g(pw->value.shape);
      std::copy_n(dw.data(), g.size(), g.data());
      pw->accum_grad(g);
    }
    if (px->requires_grad) {
      ColMat dcol = wm2.transpose() * dym;
      Tensor g(xs2);
      col2im_accum(dcol, xs2.n, xs2.c, xs2.h, xs2.w, kh, kw, stride, pad, g);
      px->accum_grad(g);
    }
  };

  Var y = make_op(std::move(out), {x, w}, bwd);
  return b ? add_bias(y, b) : y;
}

Var partial_conv2d(const Var& x, const Var& w, const Var& b,
                   const Tensor& mask, int stride, int pad,
                   Tensor* mask_out) {
  const Shape xs = x->value.shape;
  const Shape ws = w->value.shape;
  const int mstride = check_mask(mask, xs.n, xs.h, xs.w, "partial_conv2d");
  const int Ho = conv_out_dim(xs.h, ws.h, stride, pad);
  const int Wo = conv_out_dim(xs.w, ws.w, stride, pad);
  const int mn = mask.shape.n;

  // window sums of the mask (zero-padded) and the rescale ratio
  Tensor ratio(Shape{mn, 1, Ho, Wo});
  Tensor mnew(Shape{mn, 1, Ho, Wo});
  const double area = static_cast<double>(ws.h) * ws.w;
  for (int n = 0; n < mn; ++n)
    for (int oy = 0; oy < Ho; ++oy)
      for (int ox = 0; ox < Wo; ++ox) {
        double sum = 0.0;
        for (int ky = 0; ky < ws.h; ++ky)
          for (int kx = 0; kx < ws.w; ++kx) {
            const int iy = oy * stride - pad + ky;
            const int ix = ox * stride - pad + kx;
            if (iy >= 0 && iy < xs.h && ix >= 0 && ix < xs.w)
              sum += mask_at(mask, mstride, n, iy, ix);
          }
        ratio.at(n, 0, oy, ox) = sum > 0.0 ? area / sum : 0.0;
        mnew.at(n, 0, oy, ox) = sum > 0.0 ? 1.0 : 0.0;
      }
  if (mask_out) *mask_out = mnew;

  // broadcast across batch and channels
  Tensor mb(xs);
  for (int n = 0; n < xs.n; ++n)
    for (int c = 0; c < xs.c; ++c)
      for (int y = 0; y < xs.h; ++y)
        for (int xx = 0; xx < xs.w; ++xx)
          mb.at(n, c, y, xx) = mask_at(mask, mstride, n, y, xx);

  Tensor rb(Shape{xs.n, ws.n, Ho, Wo});
  for (int n = 0; n < xs.n; ++n)
    for (int c = 0; c < ws.n; ++c)
      for (int y = 0; y < Ho; ++y)
        for (int xx = 0; xx < Wo; ++xx)
          rb.at(n, c, y, xx) = ratio.at(mstride * n, 0, y, xx);

  Var xm = mul(x, constant(std::move(mb)));
  Var y0 = conv2d(xm, w, nullptr, stride, pad);
  Var y1 = mul(y0, constant(std::move(rb)));
  return b ? add_bias(y1, b) : y1;
}

Var masked_blend(const Var& raw, const Var& kept, const Tensor& mask) {
  const Shape s = raw->value.shape;
  check_same_shape(raw->value, kept->value, "masked_blend");
  const int mstride = check_mask(mask, s.n, s.h, s.w, "masked_blend");
  Tensor out(s);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x) {
          const double m = mask_at(mask, mstride, n, y, x);
          out.at(n, c, y, x) = (1.0 - m) * raw->value.at(n, c, y, x) +
                               m * kept->value.at(n, c, y, x);
        }
  Tensor mcopy = mask;
  return make_op(std::move(out), {raw, kept}, [mcopy, mstride](Node& n) {
    const Shape s = n.value.shape;
    for (int k = 0; k < 2; ++k) {
      if (!n.parents[k]->requires_grad) continue;
      Tensor g(s);
      for (int i = 0; i < s.n; ++i)
        for (int c = 0; c < s.c; ++c)
          for (int y = 0; y < s.h; ++y)
            for (int x = 0; x < s.w; ++x) {
              const double m = mask_at(mcopy, mstride, i, y, x);
              g.at(i, c, y, x) = n.grad.at(i, c, y, x) * (k == 0 ? 1.0 - m : m);
            }
      n.parents[k]->accum_grad(g);
    }
  });
}

// ---- reductions ----

Var mean_abs_diff(const Var& a, const Var& b) {
  check_same_shape(a->value, b->value, "mean_abs_diff");
  const double inv = 1.0 / static_cast<double>(a->value.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a->value.size(); ++i)
    acc += std::abs(a->value.v[i] - b->value.v[i]);
  return make_op(Tensor::scalar(acc * inv), {a, b}, [inv](Node& n) {
    const double g = n.grad.v[0] * inv;
    const Tensor& av = n.parents[0]->value;
    const Tensor& bv = n.parents[1]->value;
    for (int k = 0; k < 2; ++k) {
      if (!n.parents[k]->requires_grad) continue;
      Tensor gk(av.shape);
      const double sgn = k == 0 ? 1.0 : -1.0;
      for (std::size_t i = 0; i < gk.size(); ++i) {
        const double d = av.v[i] - bv.v[i];
        gk.v[i] = g * sgn * (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0));
      }
      n.parents[k]->accum_grad(gk);
    }
  });
}

Var mean_sq_diff(const Var& a, const Var& b) {
  check_same_shape(a->value, b->value, "mean_sq_diff");
  const double inv = 1.0 / static_cast<double>(a->value.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a->value.size(); ++i) {
    const double d = a->value.v[i] - b->value.v[i];
    acc += d * d;
  }
  return make_op(Tensor::scalar(acc * inv), {a, b}, [inv](Node& n) {
    const double g = n.grad.v[0] * inv;
    const Tensor& av = n.parents[0]->value;
    const Tensor& bv = n.parents[1]->value;
    for (int k = 0; k < 2; ++k) {
      if (!n.parents[k]->requires_grad) continue;
      Tensor gk(av.shape);
      const double sgn = k == 0 ? 2.0 : -2.0;
      for (std::size_t i = 0; i < gk.size(); ++i)
        gk.v[i] = g * sgn * (av.v[i] - bv.v[i]);
      n.parents[k]->accum_grad(gk);
    }
  });
}

Var sum_abs_diff(const Var& a, const Var& b) {
  check_same_shape(a->value, b->value, "sum_abs_diff");
  double acc = 0.0;
  for (std::size_t i = 0; i < a->value.size(); ++i)
    acc += std::abs(a->value.v[i] - b->value.v[i]);
  return make_op(Tensor::scalar(acc), {a, b}, [](Node& n) {
    const double g = n.grad.v[0];
    const Tensor& av = n.parents[0]->value;
    const Tensor& bv = n.parents[1]->value;
    for (int k = 0; k < 2; ++k) {
      if (!n.parents[k]->requires_grad) continue;
      Tensor gk(av.shape);
      const double sgn = k == 0 ? 1.0 : -1.0;
      for (std::size_t i = 0; i < gk.size(); ++i) {
        const double d = av.v[i] - bv.v[i];
        gk.v[i] = g * sgn * (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0));
      }
      n.parents[k]->accum_grad(gk);
    }
  });
}

Var tv_sum(const Var& a) {
  const Shape s = a->value.shape;
  double acc = 0.0;
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x) {
          if (x + 1 < s.w)
            acc += std::abs(a->value.at(n, c, y, x + 1) -
                            a->value.at(n, c, y, x));
          if (y + 1 < s.h)
            acc += std::abs(a->value.at(n, c, y + 1, x) -
                            a->value.at(n, c, y, x));
        }
  return make_op(Tensor::scalar(acc), {a}, [](Node& n) {
    const double g = n.grad.v[0];
    const Tensor& av = n.parents[0]->value;
    const Shape s = av.shape;
    Tensor gk(s);
    auto sgn = [](double d) { return d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0); };
    for (int i = 0; i < s.n; ++i)
      for (int c = 0; c < s.c; ++c)
        for (int y = 0; y < s.h; ++y)
          for (int x = 0; x < s.w; ++x) {
            if (x + 1 < s.w) {
              const double sg =
                  sgn(av.at(i, c, y, x + 1) - av.at(i, c, y, x)) * g;
              gk.at(i, c, y, x + 1) += sg;
              gk.at(i, c, y, x) -= sg;
            }
            if (y + 1 < s.h) {
              const double sg =
                  sgn(av.at(i, c, y + 1, x) - av.at(i, c, y, x)) * g;
              gk.at(i, c, y + 1, x) += sg;
              gk.at(i, c, y, x) -= sg;
            }
          }
    n.parents[0]->accum_grad(gk);
  });
}

Var mean_log(const Var& a) {
  const double inv = 1.0 / static_cast<double>(a->value.size());
  double acc = 0.0;
  for (double x : a->value.v)
    acc += std::log(std::min(std::max(x, kLogEps), 1.0 - kLogEps));
  return make_op(Tensor::scalar(acc * inv), {a}, [inv](Node& n) {
    const double g = n.grad.v[0] * inv;
    const Tensor& av = n.parents[0]->value;
    Tensor gk(av.shape);
    for (std::size_t i = 0; i < gk.size(); ++i) {
      const double x = av.v[i];
      gk.v[i] = (x > kLogEps && x < 1.0 - kLogEps) ? g / x : 0.0;
    }
    n.parents[0]->accum_grad(gk);
  });
}

Var mean_log_one_minus(const Var& a) {
  const double inv = 1.0 / static_cast<double>(a->value.size());
  double acc = 0.0;
  for (double x : a->value.v)
    acc += std::log(1.0 - std::min(std::max(x, kLogEps), 1.0 - kLogEps));
  return make_op(Tensor::scalar(acc * inv), {a}, [inv](Node& n) {
    const double g = n.grad.v[0] * inv;
    const Tensor& av = n.parents[0]->value;
    Tensor gk(av.shape);
    for (std::size_t i = 0; i < gk.size(); ++i) {
      const double x = av.v[i];
      gk.v[i] = (x > kLogEps && x < 1.0 - kLogEps) ? -g / (1.0 - x) : 0.0;
    }
    n.parents[0]->accum_grad(gk);
  });
}

Var gram(const Var& a) {
  const Shape s = a->value.shape;
  const int HW = s.h * s.w;
  const double k = 1.0 / (static_cast<double>(s.c) * s.h * s.w);
  Tensor out(Shape{s.n, 1, s.c, s.c});
  for (int n = 0; n < s.n; ++n) {
    Eigen::Map<const RowMat> f(
        a->value.data() + static_cast<std::size_t>(n) * s.c * HW, s.c, HW);
    Eigen::Map<RowMat> g(out.data() + static_cast<std::size_t>(n) * s.c * s.c,
                         s.c, s.c);
    g.noalias() = k * (f * f.transpose());
  }
  return make_op(std::move(out), {a}, [k, HW](Node& n) {
    const Shape s = n.parents[0]->value.shape;
    Tensor gk(s);
    for (int i = 0; i < s.n; ++i) {
      Eigen::Map<const RowMat> f(
          n.parents[0]->value.data() + static_cast<std::size_t>(i) * s.c * HW,
          s.c, HW);
      Eigen::Map<const RowMat> dg(
          n.grad.data() + static_cast<std::size_t>(i) * s.c * s.c, s.c, s.c);
      Eigen::Map<RowMat> df(gk.data() + static_cast<std::size_t>(i) * s.c * HW,
                            s.c, HW);
      df.noalias() = k * ((dg + dg.transpose()) * f);
    }
    n.parents[0]->accum_grad(gk);
  });
}

Var weighted_sum(const std::vector<std::pair<double, Var>>& terms) {
  double acc = 0.0;
  std::vector<Var> parents;
  std::vector<double> ws;
  parents.reserve(terms.size());
  for (const auto& [w, t] : terms) {
    if (t->value.size() != 1)
      throw std::invalid_argument("weighted_sum: terms must be scalar");
    acc += w * t->value.v[0];
    parents.push_back(t);
    ws.push_back(w);
  }
  return make_op(Tensor::scalar(acc), std::move(parents), [ws](Node& n) {
    for (std::size_t i = 0; i < n.parents.size(); ++i)
      if (n.parents[i]->requires_grad)
        n.parents[i]->accum_grad(Tensor::scalar(n.grad.v[0] * ws[i]));
  });
}

double scalar_value(const Var& a) {
  if (a->value.size() != 1)
    throw std::invalid_argument("scalar_value: not a scalar");
  return a->value.v[0];
}

}  // namespace fr
